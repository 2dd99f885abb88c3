//! Scene branch: masked temporal averaging sharpened where polarity
//! alternation is dense.
//!
//! Zero-mean tilt makes the per-pixel temporal average converge to the
//! (slightly blurred) clean scene. Pixels whose events alternate often sit
//! on edges that the averaging softened, so the PAEP weight map drives an
//! unsharp mask that only acts where `weight > 1`.

use crate::error::{Error, Result};
use crate::event::EventStream;
use crate::filter::gaussian_blur;
use crate::frame::{check_dims, Frame, FrameSequence, Grid};
use crate::maps::{TubeFitMap, TubeLabel};
use crate::paep::{count_paep, epaw_weights};

/// `true` on scene pixels: everything outside the TUBE pixels dilated by a
/// `(2r + 1)^2` square.
pub fn scene_mask(fits: &TubeFitMap, dilate_radius: usize) -> Grid<bool> {
    let (w, h) = fits.dims();
    let mut mask = Grid::filled(w, h, true);
    let r = dilate_radius as i64;
    for (i, &label) in fits.labels().iter().enumerate() {
        if label != TubeLabel::Tube {
            continue;
        }
        let (x, y) = ((i % w) as i64, (i / w) as i64);
        for yy in (y - r).max(0)..=(y + r).min(h as i64 - 1) {
            for xx in (x - r).max(0)..=(x + r).min(w as i64 - 1) {
                mask.set(xx as usize, yy as usize, false);
            }
        }
    }
    mask
}

/// Index of the frame a masked pixel falls back to.
pub fn central_index(n_frames: usize) -> usize {
    (n_frames - 1) / 2
}

/// Per-pixel arithmetic mean over frames. Where `mask` is `false` the
/// temporally central frame is copied instead.
pub fn temporal_average(seq: &FrameSequence, mask: Option<&Grid<bool>>) -> Result<Frame> {
    let (w, h) = seq.dims();
    if let Some(m) = mask {
        check_dims((w, h), m.dims())?;
    }
    let n = seq.len() as f64;
    let mut sum = vec![0.0; w * h];
    for f in seq.frames() {
        for (s, v) in sum.iter_mut().zip(f.pixels()) {
            *s += v;
        }
    }
    let central = seq.frames()[central_index(seq.len())].pixels();
    let data = sum
        .iter()
        .enumerate()
        .map(|(i, s)| match mask {
            Some(m) if !m.as_slice()[i] => central[i],
            _ => s / n,
        })
        .collect();
    Frame::from_clamped(w, h, data)
}

/// `clamp01(avg + lambda * (weights - 1) * (avg - blur(avg, sigma_us)))`.
pub fn epaw_sharpen(avg: &Frame, weights: &Grid<f64>, lambda: f64, sigma_us: f64) -> Result<Frame> {
    check_dims(avg.dims(), weights.dims())?;
    if !(lambda.is_finite() && lambda >= 0.0) {
        return Err(Error::BadParam(format!("sharpening gain lambda {lambda}")));
    }
    if !(sigma_us.is_finite() && sigma_us >= 0.0) {
        return Err(Error::BadParam(format!("unsharp sigma {sigma_us}")));
    }
    let (w, h) = avg.dims();
    if lambda == 0.0 || weights.as_slice().iter().all(|&x| x == 1.0) {
        return Ok(avg.clone());
    }
    let blurred = gaussian_blur(avg.pixels(), w, h, sigma_us);
    let data = avg
        .pixels()
        .iter()
        .zip(&blurred)
        .zip(weights.as_slice())
        .map(|((a, b), wt)| a + lambda * (wt - 1.0) * (a - b))
        .collect();
    Frame::from_clamped(w, h, data)
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct EpawParams {
    /// PAEP gap cap in µs; `None` means twice the frame interval.
    pub max_gap: Option<u64>,
    pub beta: f64,
    pub lambda: f64,
    /// Unsharp-mask Gaussian std in pixels.
    pub sigma_us: f64,
}

impl Default for EpawParams {
    fn default() -> Self {
        Self {
            max_gap: None,
            beta: 1.0,
            lambda: 1.0,
            sigma_us: 1.5,
        }
    }
}

/// `count_paep -> epaw_weights -> temporal_average -> epaw_sharpen` over the
/// span of `seq`.
pub fn epaw_restore_scene(
    seq: &FrameSequence,
    stream: &EventStream,
    params: &EpawParams,
    mask: Option<&Grid<bool>>,
) -> Result<Frame> {
    check_dims(seq.dims(), (stream.width(), stream.height()))?;
    if stream.t_begin() > seq.t0() || stream.t_end() < seq.t_last() {
        return Err(Error::WindowOutOfSpan {
            lo: seq.t0() as i64,
            hi: seq.t_last() as i64,
            t_begin: stream.t_begin(),
            t_end: stream.t_end(),
        });
    }
    let avg = temporal_average(seq, mask)?;
    if seq.len() < 2 {
        return Ok(avg);
    }
    let max_gap = params.max_gap.unwrap_or(2 * seq.dt());
    let paep = count_paep(stream, seq.t0(), seq.t_last(), max_gap)?;
    let weights = epaw_weights(&paep, params.beta)?;
    epaw_sharpen(&avg, &weights, params.lambda, params.sigma_us)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::maps::{TubeFit, VelocityUnit};
    use crate::paep::gradient_map;

    fn fits_with_tubes(w: usize, h: usize, tubes: &[(usize, usize)]) -> TubeFitMap {
        let mut fits = vec![TubeFit::EMPTY; w * h];
        for &(x, y) in tubes {
            fits[y * w + x] = TubeFit {
                support: 5,
                label: TubeLabel::Tube,
                ..TubeFit::EMPTY
            };
        }
        TubeFitMap::new(w, h, 0, fits, 1.0, VelocityUnit::PxPerMs).unwrap()
    }

    #[test]
    fn no_tubes_gives_full_scene() {
        let m = scene_mask(&fits_with_tubes(5, 5, &[]), 2);
        assert!(m.as_slice().iter().all(|&v| v));
    }

    #[test]
    fn single_tube_dilates_to_square() {
        let m = scene_mask(&fits_with_tubes(7, 7, &[(3, 3)]), 1);
        for y in 0..7 {
            for x in 0..7 {
                let inside = (2..=4).contains(&x) && (2..=4).contains(&y);
                assert_eq!(*m.get(x, y), !inside, "({x},{y})");
            }
        }
    }

    #[test]
    fn all_tubes_gives_empty_scene() {
        let all: Vec<(usize, usize)> = (0..3).flat_map(|y| (0..4).map(move |x| (x, y))).collect();
        let m = scene_mask(&fits_with_tubes(4, 3, &all), 0);
        assert!(m.as_slice().iter().all(|&v| !v));
    }

    #[test]
    fn average_of_identical_frames_is_exact() {
        let f = Frame::from_fn(4, 3, |x, y| (x * 3 + y) as f64 / 12.0).unwrap();
        let seq = FrameSequence::new(vec![f.clone(); 5], 0, 10).unwrap();
        assert_eq!(temporal_average(&seq, None).unwrap(), f);
    }

    #[test]
    fn average_of_two_values() {
        let a = Frame::filled(1, 1, 0.2).unwrap();
        let b = Frame::filled(1, 1, 0.6).unwrap();
        let seq = FrameSequence::new(vec![a, b], 0, 10).unwrap();
        assert!((temporal_average(&seq, None).unwrap().get(0, 0) - 0.4).abs() < 1e-15);
    }

    #[test]
    fn masked_pixels_take_central_frame() {
        let frames: Vec<Frame> = (0..5).map(|k| Frame::filled(2, 1, k as f64 / 10.0).unwrap()).collect();
        let seq = FrameSequence::new(frames, 0, 10).unwrap();
        let mask = Grid::from_vec(2, 1, vec![true, false]).unwrap();
        let out = temporal_average(&seq, Some(&mask)).unwrap();
        assert!((out.get(0, 0) - 0.2).abs() < 1e-15);
        assert_eq!(out.get(1, 0), 0.2);
    }

    #[test]
    fn unit_weights_and_zero_gain_are_identity() {
        let f = Frame::from_fn(9, 9, |x, _| if x > 4 { 0.9 } else { 0.1 }).unwrap();
        let ones = Grid::filled(9, 9, 1.0);
        assert_eq!(epaw_sharpen(&f, &ones, 3.0, 1.5).unwrap(), f);
        let twos = Grid::filled(9, 9, 2.0);
        assert_eq!(epaw_sharpen(&f, &twos, 0.0, 1.5).unwrap(), f);
        assert!(matches!(
            epaw_sharpen(&f, &Grid::filled(8, 9, 1.0), 1.0, 1.0),
            Err(Error::GeometryMismatch { .. })
        ));
    }

    #[test]
    fn sharpening_an_edge_band_raises_its_gradient() {
        // Soft step: a blurred edge between 0.3 and 0.7.
        let raw: Vec<f64> = (0..16 * 16).map(|i| if i % 16 >= 8 { 0.7 } else { 0.3 }).collect();
        let soft = Frame::new(16, 16, gaussian_blur(&raw, 16, 16, 1.2)).unwrap();
        let beta = 1.0;
        let weights = Grid::from_fn(16, 16, |x, _| if (6..=9).contains(&x) { 1.0 + beta } else { 1.0 });
        let sharp = epaw_sharpen(&soft, &weights, 1.0, 1.5).unwrap();
        let before = gradient_map(&soft).unwrap();
        let after = gradient_map(&sharp).unwrap();
        for y in 0..16 {
            assert!(after.get(7, y) > before.get(7, y));
            assert!(after.get(8, y) > before.get(8, y));
        }
    }

    #[test]
    fn outputs_stay_in_range() {
        let f = Frame::from_fn(12, 12, |x, y| if (x + y) % 2 == 0 { 1.0 } else { 0.0 }).unwrap();
        let w = Grid::filled(12, 12, 3.0);
        let out = epaw_sharpen(&f, &w, 5.0, 1.0).unwrap();
        assert!(out.pixels().iter().all(|v| (0.0..=1.0).contains(v)));
    }
}
