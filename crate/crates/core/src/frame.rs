//! Grayscale frames, frame sequences and a plain 2D grid container.

use crate::error::{Error, Result};

/// Row-major 2D container used for masks, weights and other per-pixel maps.
#[derive(Clone, Debug, PartialEq)]
pub struct Grid<T> {
    width: usize,
    height: usize,
    data: Vec<T>,
}

impl<T: Clone> Grid<T> {
    pub fn filled(width: usize, height: usize, value: T) -> Self {
        Self {
            width,
            height,
            data: vec![value; width * height],
        }
    }
}

impl<T> Grid<T> {
    pub fn from_vec(width: usize, height: usize, data: Vec<T>) -> Result<Self> {
        if data.len() != width * height {
            return Err(Error::LengthMismatch {
                expected: width * height,
                found: data.len(),
            });
        }
        Ok(Self { width, height, data })
    }

    pub fn from_fn(width: usize, height: usize, mut f: impl FnMut(usize, usize) -> T) -> Self {
        let mut data = Vec::with_capacity(width * height);
        for y in 0..height {
            for x in 0..width {
                data.push(f(x, y));
            }
        }
        Self { width, height, data }
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn dims(&self) -> (usize, usize) {
        (self.width, self.height)
    }

    pub fn get(&self, x: usize, y: usize) -> &T {
        &self.data[y * self.width + x]
    }

    pub fn set(&mut self, x: usize, y: usize, value: T) {
        self.data[y * self.width + x] = value;
    }

    pub fn as_slice(&self) -> &[T] {
        &self.data
    }

    pub fn as_mut_slice(&mut self) -> &mut [T] {
        &mut self.data
    }

    pub fn into_vec(self) -> Vec<T> {
        self.data
    }
}

/// Linear intensities in `[0, 1]`.
#[derive(Clone, Debug, PartialEq)]
pub struct Frame {
    width: usize,
    height: usize,
    data: Vec<f64>,
}

impl Frame {
    pub fn new(width: usize, height: usize, data: Vec<f64>) -> Result<Self> {
        if width == 0 || height == 0 {
            return Err(Error::BadParam(format!("frame geometry {width}x{height} is empty")));
        }
        if data.len() != width * height {
            return Err(Error::LengthMismatch {
                expected: width * height,
                found: data.len(),
            });
        }
        if let Some((index, &value)) = data
            .iter()
            .enumerate()
            .find(|(_, v)| !(v.is_finite() && (0.0..=1.0).contains(*v)))
        {
            return Err(Error::InvalidIntensity { index, value });
        }
        Ok(Self { width, height, data })
    }

    /// Clamps every value into `[0, 1]`; NaN is still rejected.
    pub fn from_clamped(width: usize, height: usize, mut data: Vec<f64>) -> Result<Self> {
        for v in data.iter_mut() {
            *v = v.clamp(0.0, 1.0);
        }
        Self::new(width, height, data)
    }

    pub fn filled(width: usize, height: usize, value: f64) -> Result<Self> {
        Self::new(width, height, vec![value; width * height])
    }

    pub fn from_fn(width: usize, height: usize, f: impl FnMut(usize, usize) -> f64) -> Result<Self> {
        Self::new(width, height, Grid::from_fn(width, height, f).into_vec())
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn dims(&self) -> (usize, usize) {
        (self.width, self.height)
    }

    pub fn get(&self, x: usize, y: usize) -> f64 {
        self.data[y * self.width + x]
    }

    pub fn pixels(&self) -> &[f64] {
        &self.data
    }

    pub fn into_pixels(self) -> Vec<f64> {
        self.data
    }

    pub fn check_same_dims(&self, width: usize, height: usize) -> Result<()> {
        check_dims((self.width, self.height), (width, height))
    }
}

pub(crate) fn check_dims(expected: (usize, usize), found: (usize, usize)) -> Result<()> {
    if expected != found {
        return Err(Error::GeometryMismatch { expected, found });
    }
    Ok(())
}

/// Uniformly timestamped frames: frame `k` is at `t0 + k * dt` microseconds.
#[derive(Clone, Debug, PartialEq)]
pub struct FrameSequence {
    frames: Vec<Frame>,
    t0: u64,
    dt: u64,
}

impl FrameSequence {
    pub fn new(frames: Vec<Frame>, t0: u64, dt: u64) -> Result<Self> {
        let first = frames.first().ok_or(Error::EmptySequence)?;
        if dt == 0 {
            return Err(Error::BadParam("frame interval dt must be positive".into()));
        }
        for f in &frames[1..] {
            check_dims(first.dims(), f.dims())?;
        }
        Ok(Self { frames, t0, dt })
    }

    pub fn frames(&self) -> &[Frame] {
        &self.frames
    }

    pub fn into_frames(self) -> Vec<Frame> {
        self.frames
    }

    pub fn len(&self) -> usize {
        self.frames.len()
    }

    pub fn is_empty(&self) -> bool {
        self.frames.is_empty()
    }

    pub fn t0(&self) -> u64 {
        self.t0
    }

    pub fn dt(&self) -> u64 {
        self.dt
    }

    pub fn time_of(&self, k: usize) -> u64 {
        self.t0 + k as u64 * self.dt
    }

    pub fn t_last(&self) -> u64 {
        self.time_of(self.frames.len() - 1)
    }

    pub fn width(&self) -> usize {
        self.frames[0].width()
    }

    pub fn height(&self) -> usize {
        self.frames[0].height()
    }

    pub fn dims(&self) -> (usize, usize) {
        self.frames[0].dims()
    }

    /// First `n` frames as a new sequence.
    pub fn prefix(&self, n: usize) -> Result<Self> {
        if n == 0 || n > self.len() {
            return Err(Error::BadParam(format!("prefix length {n} outside 1..={}", self.len())));
        }
        Self::new(self.frames[..n].to_vec(), self.t0, self.dt)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn frame_rejects_out_of_range() {
        assert!(matches!(
            Frame::new(2, 1, vec![0.5, 1.5]),
            Err(Error::InvalidIntensity { index: 1, .. })
        ));
        assert!(Frame::new(1, 1, vec![f64::NAN]).is_err());
        assert!(Frame::new(2, 2, vec![0.0; 3]).is_err());
    }

    #[test]
    fn sequence_requires_uniform_geometry_and_positive_dt() {
        let a = Frame::filled(2, 2, 0.1).unwrap();
        let b = Frame::filled(3, 2, 0.1).unwrap();
        assert!(matches!(
            FrameSequence::new(vec![a.clone(), b], 0, 10),
            Err(Error::GeometryMismatch { .. })
        ));
        assert!(FrameSequence::new(vec![a.clone()], 0, 0).is_err());
        assert!(matches!(FrameSequence::new(vec![], 0, 10), Err(Error::EmptySequence)));
        let s = FrameSequence::new(vec![a.clone(), a], 100, 10).unwrap();
        assert_eq!(s.t_last(), 110);
    }

    #[test]
    fn grid_indexing_is_row_major() {
        let g = Grid::from_fn(3, 2, |x, y| x + 10 * y);
        assert_eq!(g.as_slice(), &[0, 1, 2, 10, 11, 12]);
        assert_eq!(*g.get(2, 1), 12);
    }
}
