//! Synthetic turbulence: zero-mean tilt fields, warping, and moving-object scenes.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::field::{MotionField, TiltSlice, TurbulenceField};
use crate::filter::{
    clamped_variance_gain, convolve_separable, gaussian_blur, gaussian_kernel, sample_bilinear, sample_bilinear_zero,
};
use crate::frame::{check_dims, Frame, FrameSequence, Grid};

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct TurbParams {
    /// RMS tilt magnitude in pixels.
    pub sigma_tilt: f64,
    /// Spatial correlation length (Gaussian std) in pixels.
    pub corr_len: f64,
    /// AR(1) coefficient between consecutive frames.
    pub rho_t: f64,
    /// Per-frame Gaussian blur std in pixels.
    pub blur_sigma: f64,
    pub seed: u64,
}

impl Default for TurbParams {
    fn default() -> Self {
        Self {
            sigma_tilt: 1.0,
            corr_len: 8.0,
            rho_t: 0.5,
            blur_sigma: 0.5,
            seed: 0,
        }
    }
}

impl TurbParams {
    pub fn validate(&self) -> Result<()> {
        let ok = self.sigma_tilt.is_finite()
            && self.sigma_tilt >= 0.0
            && self.corr_len.is_finite()
            && self.corr_len > 0.0
            && (0.0..1.0).contains(&self.rho_t)
            && self.blur_sigma.is_finite()
            && self.blur_sigma >= 0.0;
        if ok {
            Ok(())
        } else {
            Err(Error::BadParam(format!("invalid turbulence parameters {self:?}")))
        }
    }
}

/// Spatially correlated, AR(1)-in-time, zero-mean tilt field.
///
/// Noise is drawn frame by frame, component by component, row-major from a
/// ChaCha8 stream seeded with `params.seed`, so the field only depends on
/// the seed and the parameters. After the temporal recursion each pixel's
/// mean over all frames is removed, then the field is scaled so the RMS
/// displacement magnitude equals `sigma_tilt`.
pub fn generate_tilt_field(
    width: usize,
    height: usize,
    n_frames: usize,
    params: &TurbParams,
) -> Result<TurbulenceField> {
    params.validate()?;
    if n_frames < 2 {
        return Err(Error::TooFewFrames {
            needed: 2,
            found: n_frames,
        });
    }
    if width == 0 || height == 0 {
        return Err(Error::BadParam("empty tilt field geometry".into()));
    }
    if params.sigma_tilt == 0.0 {
        return TurbulenceField::zeros(width, height, n_frames);
    }
    let plane = width * height;

    let mut rng = ChaCha8Rng::seed_from_u64(params.seed);
    let white: Vec<Vec<f64>> = (0..n_frames * 2)
        .map(|_| (0..plane).map(|_| rng.sample::<f64, _>(StandardNormal)).collect())
        .collect();

    // Smooth each plane and renormalise to unit marginal variance, border
    // pixels included.
    let kernel = gaussian_kernel(params.corr_len);
    let gx = clamped_variance_gain(&kernel, width);
    let gy = clamped_variance_gain(&kernel, height);
    let smoothed: Vec<Vec<f64>> = white
        .par_iter()
        .map(|w| {
            let mut s = convolve_separable(w, width, height, &kernel);
            for y in 0..height {
                for x in 0..width {
                    s[y * width + x] /= (gx[x] * gy[y]).sqrt();
                }
            }
            s
        })
        .collect();

    let rho = params.rho_t;
    let innov = (1.0 - rho * rho).sqrt();
    let mut disp = vec![[0.0f64; 2]; plane * n_frames];
    for k in 0..n_frames {
        for c in 0..2 {
            let w = &smoothed[2 * k + c];
            for p in 0..plane {
                disp[k * plane + p][c] = if k == 0 {
                    w[p]
                } else {
                    rho * disp[(k - 1) * plane + p][c] + innov * w[p]
                };
            }
        }
    }

    for p in 0..plane {
        let mut mean = [0.0; 2];
        for k in 0..n_frames {
            mean[0] += disp[k * plane + p][0];
            mean[1] += disp[k * plane + p][1];
        }
        mean[0] /= n_frames as f64;
        mean[1] /= n_frames as f64;
        for k in 0..n_frames {
            disp[k * plane + p][0] -= mean[0];
            disp[k * plane + p][1] -= mean[1];
        }
    }

    let ss: f64 = disp.iter().map(|d| d[0] * d[0] + d[1] * d[1]).sum();
    let rms = (ss / disp.len() as f64).sqrt();
    let scale = if rms > 0.0 { params.sigma_tilt / rms } else { 0.0 };
    let mut max_tilt = 0.0f64;
    for d in disp.iter_mut() {
        d[0] *= scale;
        d[1] *= scale;
        max_tilt = max_tilt.max(d[0].hypot(d[1]));
    }
    TurbulenceField::new(width, height, n_frames, disp, max_tilt)
}

/// `out(x, y) = in(x - dx, y - dy)`, bilinear with clamp-to-edge sampling.
pub fn warp_frame(frame: &Frame, tilt: &TiltSlice<'_>) -> Result<Frame> {
    check_dims(frame.dims(), (tilt.width(), tilt.height()))?;
    let (w, h) = frame.dims();
    let src = frame.pixels();
    let data = (0..w * h)
        .map(|i| {
            let (x, y) = (i % w, i / w);
            let d = tilt.get(x, y);
            sample_bilinear(src, w, h, x as f64 - d[0], y as f64 - d[1])
        })
        .collect();
    Frame::from_clamped(w, h, data)
}

pub fn blur_frame(frame: &Frame, sigma: f64) -> Result<Frame> {
    if sigma <= 0.0 {
        return Ok(frame.clone());
    }
    let (w, h) = frame.dims();
    Frame::from_clamped(w, h, gaussian_blur(frame.pixels(), w, h, sigma))
}

/// Warps frame `k` by tilt slice `k`, then blurs it with `blur_sigma` (skipped at 0).
pub fn apply_turbulence(seq: &FrameSequence, field: &TurbulenceField, blur_sigma: f64) -> Result<FrameSequence> {
    check_dims(seq.dims(), (field.width(), field.height()))?;
    if seq.len() != field.n_frames() {
        return Err(Error::LengthMismatch {
            expected: field.n_frames(),
            found: seq.len(),
        });
    }
    if !(blur_sigma.is_finite() && blur_sigma >= 0.0) {
        return Err(Error::BadParam(format!("blur sigma {blur_sigma}")));
    }
    let frames = seq
        .frames()
        .par_iter()
        .enumerate()
        .map(|(k, f)| blur_frame(&warp_frame(f, &field.slice(k))?, blur_sigma))
        .collect::<Result<Vec<_>>>()?;
    FrameSequence::new(frames, seq.t0(), seq.dt())
}

/// Object appearance plus per-pixel opacity in `[0, 1]`.
#[derive(Clone, Debug, PartialEq)]
pub struct Sprite {
    image: Frame,
    alpha: Grid<f64>,
}

impl Sprite {
    pub fn new(image: Frame, alpha: Grid<f64>) -> Result<Self> {
        check_dims(image.dims(), alpha.dims())?;
        if alpha.as_slice().iter().any(|a| !(0.0..=1.0).contains(a)) {
            return Err(Error::BadParam("sprite alpha outside [0, 1]".into()));
        }
        Ok(Self { image, alpha })
    }

    /// Opaque rectangle of constant intensity.
    pub fn solid(width: usize, height: usize, intensity: f64) -> Result<Self> {
        Self::new(
            Frame::filled(width, height, intensity)?,
            Grid::filled(width, height, 1.0),
        )
    }

    pub fn width(&self) -> usize {
        self.image.width()
    }

    pub fn height(&self) -> usize {
        self.image.height()
    }
}

/// Does a sprite with top-left corner at `pos` stay inside a `width x height` plane?
fn sprite_fits(sprite: &Sprite, pos: [f64; 2], width: usize, height: usize) -> bool {
    let right = (pos[0] + sprite.width() as f64 - 1.0).ceil();
    let bottom = (pos[1] + sprite.height() as f64 - 1.0).ceil();
    pos[0] >= 0.0 && pos[1] >= 0.0 && right < width as f64 && bottom < height as f64
}

/// Alpha-composites `sprite` with its top-left corner at `pos` (subpixel, bilinear).
/// Returns the composite and the object mask (`alpha >= 0.5`).
pub fn composite_sprite(background: &Frame, sprite: &Sprite, pos: [f64; 2]) -> Result<(Frame, Grid<bool>)> {
    let (w, h) = background.dims();
    if !sprite_fits(sprite, pos, w, h) {
        return Err(Error::TrajectoryOutOfBounds { frame: 0 });
    }
    let (sw, sh) = (sprite.width(), sprite.height());
    let premult: Vec<f64> = sprite
        .image
        .pixels()
        .iter()
        .zip(sprite.alpha.as_slice())
        .map(|(i, a)| i * a)
        .collect();
    let mut data = background.pixels().to_vec();
    let mut mask = Grid::filled(w, h, false);
    let x_lo = pos[0].floor() as usize;
    let y_lo = pos[1].floor() as usize;
    let x_hi = ((pos[0] + sw as f64).ceil() as usize).min(w - 1);
    let y_hi = ((pos[1] + sh as f64).ceil() as usize).min(h - 1);
    for y in y_lo..=y_hi {
        for x in x_lo..=x_hi {
            let u = x as f64 - pos[0];
            let v = y as f64 - pos[1];
            let a = sample_bilinear_zero(sprite.alpha.as_slice(), sw, sh, u, v);
            if a <= 0.0 {
                continue;
            }
            let fg = sample_bilinear_zero(&premult, sw, sh, u, v);
            let i = y * w + x;
            data[i] = data[i] * (1.0 - a) + fg;
            if a >= 0.5 {
                mask.set(x, y, true);
            }
        }
    }
    Ok((Frame::from_clamped(w, h, data)?, mask))
}

/// A rendered moving-object sequence with its ground truth.
#[derive(Clone, Debug)]
pub struct ObjectScene {
    pub seq: FrameSequence,
    /// Per-frame object support.
    pub masks: Vec<Grid<bool>>,
    /// `velocity` on every pixel the object covers in any frame, invalid elsewhere.
    pub motion: MotionField,
}

/// Renders `sprite` at `start_pos + k * velocity` (px, px/frame) over a static background.
pub fn inject_object(
    background: &Frame,
    sprite: &Sprite,
    start_pos: [f64; 2],
    velocity: [f64; 2],
    n_frames: usize,
    dt: u64,
) -> Result<ObjectScene> {
    if n_frames == 0 {
        return Err(Error::TooFewFrames { needed: 1, found: 0 });
    }
    let (w, h) = background.dims();
    let mut frames = Vec::with_capacity(n_frames);
    let mut masks = Vec::with_capacity(n_frames);
    for k in 0..n_frames {
        let pos = [
            start_pos[0] + k as f64 * velocity[0],
            start_pos[1] + k as f64 * velocity[1],
        ];
        if !sprite_fits(sprite, pos, w, h) {
            return Err(Error::TrajectoryOutOfBounds { frame: k });
        }
        let (f, m) = composite_sprite(background, sprite, pos)?;
        frames.push(f);
        masks.push(m);
    }
    let mut valid = vec![false; w * h];
    for m in &masks {
        for (v, &on) in valid.iter_mut().zip(m.as_slice()) {
            *v |= on;
        }
    }
    let vel = [velocity[0] as f32, velocity[1] as f32];
    let velocity_grid = valid.iter().map(|&v| if v { vel } else { [0.0; 2] }).collect();
    Ok(ObjectScene {
        seq: FrameSequence::new(frames, 0, dt)?,
        masks,
        motion: MotionField::new(w, h, velocity_grid, valid)?,
    })
}

/// Intensity-weighted centroid of `frame - background` (absolute difference).
pub fn difference_centroid(frame: &Frame, background: &Frame) -> Option<[f64; 2]> {
    let w = frame.width();
    let (mut sx, mut sy, mut sw) = (0.0, 0.0, 0.0);
    for (i, (a, b)) in frame.pixels().iter().zip(background.pixels()).enumerate() {
        let d = (a - b).abs();
        sx += d * (i % w) as f64;
        sy += d * (i / w) as f64;
        sw += d;
    }
    (sw > 0.0).then(|| [sx / sw, sy / sw])
}

#[cfg(test)]
mod tests {
    use super::*;

    fn impulse(w: usize, h: usize, x: usize, y: usize) -> Frame {
        Frame::from_fn(w, h, |i, j| if (i, j) == (x, y) { 1.0 } else { 0.0 }).unwrap()
    }

    fn uniform_tilt(w: usize, h: usize, d: [f64; 2]) -> Vec<[f64; 2]> {
        vec![d; w * h]
    }

    #[test]
    fn zero_sigma_gives_zero_field() {
        let p = TurbParams {
            sigma_tilt: 0.0,
            ..Default::default()
        };
        let f = generate_tilt_field(8, 8, 4, &p).unwrap();
        assert!(f.displacement().iter().all(|d| *d == [0.0, 0.0]));
    }

    #[test]
    fn field_is_zero_mean_and_seeded() {
        let p = TurbParams {
            seed: 3,
            ..Default::default()
        };
        let a = generate_tilt_field(16, 12, 10, &p).unwrap();
        let b = generate_tilt_field(16, 12, 10, &p).unwrap();
        assert_eq!(a, b);
        assert!(a.max_temporal_mean() <= 1e-6);
        let c = generate_tilt_field(16, 12, 10, &TurbParams { seed: 4, ..p }).unwrap();
        assert_ne!(a, c);
    }

    #[test]
    fn field_rms_matches_sigma() {
        // Monte Carlo estimate over the generated field itself.
        let p = TurbParams {
            sigma_tilt: 1.0,
            corr_len: 8.0,
            rho_t: 0.5,
            seed: 7,
            ..Default::default()
        };
        let f = generate_tilt_field(64, 64, 128, &p).unwrap();
        let plane = 64 * 64;
        let mut per_pixel = Vec::with_capacity(plane);
        for q in 0..plane {
            let ss: f64 = (0..128)
                .map(|k| {
                    let d = f.displacement()[k * plane + q];
                    d[0] * d[0] + d[1] * d[1]
                })
                .sum();
            per_pixel.push((ss / 128.0).sqrt());
        }
        let mean_rms = per_pixel.iter().sum::<f64>() / plane as f64;
        assert!((f.rms() - 1.0).abs() <= 0.1, "rms {}", f.rms());
        assert!((mean_rms - 1.0).abs() <= 0.1, "mean per-pixel rms {mean_rms}");
    }

    #[test]
    fn bad_params_rejected() {
        for p in [
            TurbParams {
                rho_t: 1.0,
                ..Default::default()
            },
            TurbParams {
                corr_len: 0.0,
                ..Default::default()
            },
            TurbParams {
                sigma_tilt: -1.0,
                ..Default::default()
            },
            TurbParams {
                blur_sigma: f64::NAN,
                ..Default::default()
            },
        ] {
            assert!(matches!(generate_tilt_field(4, 4, 4, &p), Err(Error::BadParam(_))));
        }
        assert!(matches!(
            generate_tilt_field(4, 4, 1, &TurbParams::default()),
            Err(Error::TooFewFrames { .. })
        ));
    }

    #[test]
    fn zero_tilt_is_identity() {
        let f = Frame::from_fn(9, 7, |x, y| ((x * 7 + y * 3) % 11) as f64 / 10.0).unwrap();
        let d = uniform_tilt(9, 7, [0.0, 0.0]);
        assert_eq!(warp_frame(&f, &TiltSlice::new(9, 7, &d).unwrap()).unwrap(), f);
    }

    #[test]
    fn integer_tilt_moves_impulse() {
        let f = impulse(16, 16, 8, 8);
        let d = uniform_tilt(16, 16, [1.0, 0.0]);
        let out = warp_frame(&f, &TiltSlice::new(16, 16, &d).unwrap()).unwrap();
        assert_eq!(out.get(9, 8), 1.0);
        assert_eq!(out.pixels().iter().sum::<f64>(), 1.0);
    }

    #[test]
    fn half_pixel_tilt_splits_impulse() {
        let f = impulse(16, 16, 8, 8);
        let d = uniform_tilt(16, 16, [0.5, 0.0]);
        let out = warp_frame(&f, &TiltSlice::new(16, 16, &d).unwrap()).unwrap();
        assert_eq!(out.get(8, 8), 0.5);
        assert_eq!(out.get(9, 8), 0.5);
        assert_eq!(out.pixels().iter().sum::<f64>(), 1.0);
    }

    #[test]
    fn warp_geometry_checked() {
        let f = impulse(4, 4, 1, 1);
        let d = uniform_tilt(5, 4, [0.0, 0.0]);
        assert!(matches!(
            warp_frame(&f, &TiltSlice::new(5, 4, &d).unwrap()),
            Err(Error::GeometryMismatch { .. })
        ));
    }

    #[test]
    fn blur_of_impulse_is_sampled_gaussian() {
        let f = impulse(21, 21, 10, 10);
        let seq = FrameSequence::new(vec![f.clone(), f], 0, 1).unwrap();
        let field = TurbulenceField::zeros(21, 21, 2).unwrap();
        let out = apply_turbulence(&seq, &field, 1.0).unwrap();
        let o = &out.frames()[0];
        assert!((o.pixels().iter().sum::<f64>() - 1.0).abs() < 1e-3);
        for y in 0..21 {
            for x in 0..21 {
                let r2 = ((x as f64 - 10.0).powi(2) + (y as f64 - 10.0).powi(2)) / 2.0;
                let g = (-r2).exp() / (2.0 * std::f64::consts::PI);
                assert!((o.get(x, y) - g).abs() < 1e-3, "({x},{y}) {} vs {g}", o.get(x, y));
            }
        }
    }

    #[test]
    fn apply_turbulence_identity_and_errors() {
        let f = Frame::from_fn(6, 5, |x, y| (x + y) as f64 / 9.0).unwrap();
        let seq = FrameSequence::new(vec![f.clone(), f.clone(), f], 0, 10).unwrap();
        let zero = TurbulenceField::zeros(6, 5, 3).unwrap();
        assert_eq!(apply_turbulence(&seq, &zero, 0.0).unwrap(), seq);
        let short = TurbulenceField::zeros(6, 5, 2).unwrap();
        assert!(matches!(
            apply_turbulence(&seq, &short, 0.0),
            Err(Error::LengthMismatch { .. })
        ));
        let wrong = TurbulenceField::zeros(5, 5, 3).unwrap();
        assert!(matches!(
            apply_turbulence(&seq, &wrong, 0.0),
            Err(Error::GeometryMismatch { .. })
        ));
    }

    #[test]
    fn static_object_gives_identical_frames() {
        let bg = Frame::filled(32, 16, 0.2).unwrap();
        let sprite = Sprite::solid(4, 4, 0.9).unwrap();
        let scene = inject_object(&bg, &sprite, [5.0, 5.0], [0.0, 0.0], 4, 1000).unwrap();
        for f in scene.seq.frames() {
            assert_eq!(f, &scene.seq.frames()[0]);
        }
        assert!(scene.motion.velocity().iter().all(|v| *v == [0.0, 0.0]));
    }

    #[test]
    fn moving_object_centroid_advances_by_velocity() {
        let bg = Frame::filled(64, 16, 0.2).unwrap();
        let sprite = Sprite::solid(4, 4, 0.9).unwrap();
        let scene = inject_object(&bg, &sprite, [3.0, 5.0], [2.0, 0.0], 10, 1000).unwrap();
        let cs: Vec<[f64; 2]> = scene
            .seq
            .frames()
            .iter()
            .map(|f| difference_centroid(f, &bg).unwrap())
            .collect();
        for pair in cs.windows(2) {
            assert!((pair[1][0] - pair[0][0] - 2.0).abs() < 1e-9);
            assert!((pair[1][1] - pair[0][1]).abs() < 1e-9);
        }
        assert_eq!(scene.motion.get(10, 6), Some([2.0, 0.0]));
        assert_eq!(scene.motion.get(60, 6), None);
    }

    #[test]
    fn subpixel_object_centroid_is_exact() {
        let bg = Frame::filled(64, 16, 0.2).unwrap();
        let sprite = Sprite::solid(5, 3, 0.7).unwrap();
        let scene = inject_object(&bg, &sprite, [3.25, 5.5], [1.5, 0.25], 6, 1000).unwrap();
        let c0 = difference_centroid(&scene.seq.frames()[0], &bg).unwrap();
        let c5 = difference_centroid(&scene.seq.frames()[5], &bg).unwrap();
        assert!((c5[0] - c0[0] - 7.5).abs() < 1e-9);
        assert!((c5[1] - c0[1] - 1.25).abs() < 1e-9);
    }

    #[test]
    fn trajectory_leaving_frame_rejected() {
        let bg = Frame::filled(32, 16, 0.2).unwrap();
        let sprite = Sprite::solid(4, 4, 0.9).unwrap();
        let err = inject_object(&bg, &sprite, [24.0, 4.0], [5.0, 0.0], 10, 1000).unwrap_err();
        assert!(matches!(err, Error::TrajectoryOutOfBounds { frame: 1 }));
    }
}
