use std::io;

use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("coordinate ({x}, {y}) outside {width}x{height} sensor")]
    OutOfBounds {
        x: usize,
        y: usize,
        width: usize,
        height: usize,
    },
    #[error("polarity {0} is not -1 or +1")]
    BadPolarity(i64),
    #[error("event at t={t} outside stream span [{t_begin}, {t_end}]")]
    EventOutOfSpan { t: u64, t_begin: u64, t_end: u64 },
    #[error("intensity {value} at index {index} is not a finite value in [0, 1]")]
    InvalidIntensity { index: usize, value: f64 },
    #[error("frame sequence is empty")]
    EmptySequence,
    #[error("geometry mismatch: expected {expected:?}, found {found:?}")]
    GeometryMismatch {
        expected: (usize, usize),
        found: (usize, usize),
    },
    #[error("length mismatch: expected {expected}, found {found}")]
    LengthMismatch { expected: usize, found: usize },
    #[error("bad parameter: {0}")]
    BadParam(String),
    #[error("invalid field: {0}")]
    InvalidField(String),
    #[error("sprite trajectory leaves the background at frame {frame}")]
    TrajectoryOutOfBounds { frame: usize },
    #[error("need at least {needed} frames, found {found}")]
    TooFewFrames { needed: usize, found: usize },
    #[error("bad time span [{t_begin}, {t_end}]")]
    BadSpan { t_begin: u64, t_end: u64 },
    #[error("input {width}x{height} smaller than required {min_width}x{min_height}")]
    TooSmall {
        width: usize,
        height: usize,
        min_width: usize,
        min_height: usize,
    },
    #[error("zero variance, correlation undefined")]
    DegenerateVariance,
    #[error("window [{lo}, {hi}] not inside stream span [{t_begin}, {t_end}]")]
    WindowOutOfSpan { lo: i64, hi: i64, t_begin: u64, t_end: u64 },
    #[error("bad magic bytes")]
    BadMagic,
    #[error("corrupt file: {0}")]
    Corrupt(String),
    #[error("events out of order at record {0}")]
    Unsorted(usize),
    #[error(transparent)]
    Io(#[from] io::Error),
}
