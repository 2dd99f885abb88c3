//! Standard synthetic scenes.
//!
//! * `static`: a textured image, no turbulence, constant frames.
//! * `textured`: the same kind of texture under turbulence.
//! * `bar`: a uniform bar sliding right at 2 px/frame along a uniform road
//!   through a textured scene, under turbulence. Object events come from a
//!   clean render at 8 substeps per frame, turbulence events from the
//!   turbulent bar-free scene, and every event keeps its source as label.

use std::fmt;
use std::str::FromStr;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use crate::error::{Error, Result};
use crate::event::{Event, EventStream};
use crate::evsynth::{synthesize_events, EvsParams};
use crate::field::{MotionField, TurbulenceField};
use crate::filter::gaussian_blur;
use crate::frame::{Frame, FrameSequence, Grid};
use crate::maps::TubeLabel;
use crate::turbsim::{apply_turbulence, generate_tilt_field, inject_object, Sprite, TurbParams};

pub const TEXTURED_SIZE: (usize, usize) = (128, 128);
pub const BAR_SIZE: (usize, usize) = (96, 64);
pub const BAR_VELOCITY: [f64; 2] = [2.0, 0.0];
pub const BAR_START: [f64; 2] = [16.0, 22.0];
pub const BAR_DIMS: (usize, usize) = (24, 20);
pub const BAR_INTENSITY: f64 = 0.6;
pub const ROAD_ROWS: (usize, usize) = (14, 50);
pub const ROAD_INTENSITY: f64 = 0.4;
pub const BAR_SUBSTEPS: u64 = 8;
pub const TEXTURE_EDGE_SIGMA: f64 = 1.5;
pub const TEXTURED_CONTRAST: f64 = 0.1;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Preset {
    Static,
    Textured,
    Bar,
}

impl Preset {
    pub fn name(self) -> &'static str {
        match self {
            Preset::Static => "static",
            Preset::Textured => "textured",
            Preset::Bar => "bar",
        }
    }

    /// Event simulator settings used unless overridden. The textured scenes
    /// use a sensitive threshold so small tilts still trigger events; the bar
    /// keeps the standard one, under which each of its edges crosses exactly
    /// one threshold.
    pub fn default_evs(self) -> EvsParams {
        match self {
            Preset::Static | Preset::Textured => EvsParams {
                contrast: TEXTURED_CONTRAST,
                ..EvsParams::default()
            },
            Preset::Bar => EvsParams::default(),
        }
    }
}

impl fmt::Display for Preset {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Preset {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "static" => Ok(Preset::Static),
            "textured" => Ok(Preset::Textured),
            "bar" => Ok(Preset::Bar),
            other => Err(Error::BadParam(format!("unknown preset `{other}`"))),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct FixtureParams {
    pub seed: u64,
    pub n_frames: usize,
    /// Frame interval, µs.
    pub dt: u64,
    /// Turbulence settings; the seed is derived from `seed`.
    pub turb: TurbParams,
    /// Event simulator settings; `None` takes [`Preset::default_evs`].
    pub evs: Option<EvsParams>,
}

impl Default for FixtureParams {
    fn default() -> Self {
        Self {
            seed: 0,
            n_frames: 8,
            dt: 5000,
            turb: TurbParams::default(),
            evs: None,
        }
    }
}

#[derive(Clone, Debug)]
pub struct Fixture {
    pub preset: Preset,
    pub clean: FrameSequence,
    pub turbulent: FrameSequence,
    pub field: TurbulenceField,
    pub stream: EventStream,
    /// Construction-time label of every event in `stream`: TUBE for object
    /// events, TURBULENCE otherwise.
    pub labels: Vec<TubeLabel>,
    /// Per-frame object support (all `false` without an object).
    pub masks: Vec<Grid<bool>>,
    /// Ground-truth object motion, px/frame.
    pub motion: MotionField,
}

/// Seed for the tilt field, decorrelated from the texture seed.
fn turbulence_seed(seed: u64) -> u64 {
    seed ^ 0x9e37_79b9_7f4a_7c15
}

/// Bright, gently varying background with soft-edged dark rectangles and discs.
pub fn texture(width: usize, height: usize, seed: u64) -> Result<Frame> {
    texture_with_edges(width, height, seed, TEXTURE_EDGE_SIGMA)
}

/// [`texture`] with shape edges softened by a Gaussian of std `edge_sigma` px.
pub fn texture_with_edges(width: usize, height: usize, seed: u64, edge_sigma: f64) -> Result<Frame> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let noise: Vec<f64> = (0..width * height).map(|_| rng.sample(StandardNormal)).collect();
    let smooth = gaussian_blur(&noise, width, height, 6.0);
    let sd = (smooth.iter().map(|v| v * v).sum::<f64>() / smooth.len() as f64).sqrt();
    let mut data: Vec<f64> = smooth
        .iter()
        .map(|v| 0.75 + if sd > 0.0 { 0.02 * v / sd } else { 0.0 })
        .collect();
    let n_shapes = (width * height / 1200).max(2);
    for _ in 0..n_shapes {
        let cx = rng.random_range(0.0..width as f64);
        let cy = rng.random_range(0.0..height as f64);
        let a = rng.random_range(4.0..14.0);
        let b = rng.random_range(4.0..14.0);
        let level = rng.random_range(0.02..0.06);
        let disc = rng.random::<bool>();
        for y in 0..height {
            for x in 0..width {
                let (dx, dy) = (x as f64 + 0.5 - cx, y as f64 + 0.5 - cy);
                let inside = if disc {
                    (dx / a).powi(2) + (dy / b).powi(2) <= 1.0
                } else {
                    dx.abs() <= a && dy.abs() <= b
                };
                if inside {
                    data[y * width + x] = level;
                }
            }
        }
    }
    let soft = gaussian_blur(&data, width, height, edge_sigma);
    Frame::from_clamped(width, height, soft.into_iter().map(|v| v.clamp(0.01, 0.99)).collect())
}

pub fn build_fixture(preset: Preset, params: &FixtureParams) -> Result<Fixture> {
    if params.n_frames < 2 {
        return Err(Error::TooFewFrames {
            needed: 2,
            found: params.n_frames,
        });
    }
    match preset {
        Preset::Static => static_fixture(params),
        Preset::Textured => textured_fixture(params),
        Preset::Bar => bar_fixture(params),
    }
}

fn turb_params(params: &FixtureParams) -> TurbParams {
    TurbParams {
        seed: turbulence_seed(params.seed),
        ..params.turb
    }
}

fn no_object(w: usize, h: usize, n: usize) -> (Vec<Grid<bool>>, MotionField) {
    (vec![Grid::filled(w, h, false); n], MotionField::invalid(w, h))
}

fn static_fixture(params: &FixtureParams) -> Result<Fixture> {
    let evs = params.evs.unwrap_or(Preset::Static.default_evs());
    let (w, h) = TEXTURED_SIZE;
    let n = params.n_frames;
    let clean = FrameSequence::new(vec![texture(w, h, params.seed)?; n], 0, params.dt)?;
    let stream = synthesize_events(&clean, &evs)?;
    let (masks, motion) = no_object(w, h, n);
    Ok(Fixture {
        preset: Preset::Static,
        turbulent: clean.clone(),
        clean,
        field: TurbulenceField::zeros(w, h, n)?,
        labels: vec![TubeLabel::Turbulence; stream.len()],
        stream,
        masks,
        motion,
    })
}

fn textured_fixture(params: &FixtureParams) -> Result<Fixture> {
    let evs = params.evs.unwrap_or(Preset::Textured.default_evs());
    let (w, h) = TEXTURED_SIZE;
    let n = params.n_frames;
    let clean = FrameSequence::new(vec![texture(w, h, params.seed)?; n], 0, params.dt)?;
    let turb = turb_params(params);
    let field = generate_tilt_field(w, h, n, &turb)?;
    let turbulent = apply_turbulence(&clean, &field, turb.blur_sigma)?;
    let stream = synthesize_events(&turbulent, &evs)?;
    let (masks, motion) = no_object(w, h, n);
    Ok(Fixture {
        preset: Preset::Textured,
        clean,
        turbulent,
        field,
        labels: vec![TubeLabel::Turbulence; stream.len()],
        stream,
        masks,
        motion,
    })
}

/// Textured scene with the uniform road the bar travels on.
pub fn bar_background(seed: u64) -> Result<Frame> {
    let (w, h) = BAR_SIZE;
    let mut data = texture(w, h, seed)?.into_pixels();
    for row in data.chunks_mut(w).take(ROAD_ROWS.1).skip(ROAD_ROWS.0) {
        row.fill(ROAD_INTENSITY);
    }
    Frame::new(w, h, data)
}

fn bar_fixture(params: &FixtureParams) -> Result<Fixture> {
    let (w, h) = BAR_SIZE;
    let n = params.n_frames;
    if !params.dt.is_multiple_of(BAR_SUBSTEPS) {
        return Err(Error::BadParam(format!(
            "bar fixture needs a frame interval divisible by {BAR_SUBSTEPS}"
        )));
    }
    let evs = params.evs.unwrap_or(Preset::Bar.default_evs());
    let bg = bar_background(params.seed)?;
    let bar = Sprite::solid(BAR_DIMS.0, BAR_DIMS.1, BAR_INTENSITY)?;
    let scene = inject_object(&bg, &bar, BAR_START, BAR_VELOCITY, n, params.dt)?;

    let turb = turb_params(params);
    let field = generate_tilt_field(w, h, n, &turb)?;
    let turbulent = apply_turbulence(&scene.seq, &field, turb.blur_sigma)?;

    let sub_velocity = BAR_VELOCITY.map(|v| v / BAR_SUBSTEPS as f64);
    let n_sub = (n - 1) * BAR_SUBSTEPS as usize + 1;
    let fine = inject_object(&bg, &bar, BAR_START, sub_velocity, n_sub, params.dt / BAR_SUBSTEPS)?;
    let object_events = synthesize_events(&fine.seq, &evs)?;

    let background = FrameSequence::new(vec![bg; n], 0, params.dt)?;
    let turb_events = synthesize_events(&apply_turbulence(&background, &field, turb.blur_sigma)?, &evs)?;

    let mut tagged: Vec<(Event, TubeLabel)> = object_events
        .events()
        .iter()
        .map(|&e| (e, TubeLabel::Tube))
        .chain(turb_events.events().iter().map(|&e| (e, TubeLabel::Turbulence)))
        .collect();
    tagged.sort_by(|a, b| a.0.cmp(&b.0).then(a.1.code().cmp(&b.1.code())));
    let (events, labels): (Vec<Event>, Vec<TubeLabel>) = tagged.into_iter().unzip();
    let stream = EventStream::from_sorted(w, h, 0, scene.seq.t_last(), events)?;

    Ok(Fixture {
        preset: Preset::Bar,
        clean: scene.seq,
        turbulent,
        field,
        stream,
        labels,
        masks: scene.masks,
        motion: scene.motion,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn preset_names_round_trip() {
        for p in [Preset::Static, Preset::Textured, Preset::Bar] {
            assert_eq!(p.name().parse::<Preset>().unwrap(), p);
        }
        assert!("moving".parse::<Preset>().is_err());
    }

    #[test]
    fn static_preset_has_no_events() {
        let f = build_fixture(Preset::Static, &FixtureParams::default()).unwrap();
        assert!(f.stream.is_empty());
        assert_eq!(f.clean, f.turbulent);
        assert_eq!((f.stream.t_begin(), f.stream.t_end()), (0, 35_000));
    }

    #[test]
    fn texture_is_seeded() {
        assert_eq!(texture(32, 32, 4).unwrap(), texture(32, 32, 4).unwrap());
        assert_ne!(texture(32, 32, 4).unwrap(), texture(32, 32, 5).unwrap());
    }

    #[test]
    fn bar_fixture_labels_and_truth() {
        let f = build_fixture(Preset::Bar, &FixtureParams::default()).unwrap();
        assert_eq!(f.labels.len(), f.stream.len());
        let tube = f.labels.iter().filter(|&&l| l == TubeLabel::Tube).count();
        assert!(tube > 0 && tube < f.stream.len());
        assert_eq!(f.clean.len(), 8);
        assert_eq!(f.motion.get(40, 30), Some([2.0, 0.0]));
        // The road carries no turbulence events away from its borders.
        for (e, l) in f.stream.events().iter().zip(&f.labels) {
            if *l == TubeLabel::Tube {
                assert!((BAR_START[1] as u16..(BAR_START[1] as usize + BAR_DIMS.1) as u16).contains(&e.y));
            }
        }
    }
}
