//! Event tubes: per-pixel linear trajectory fits over a short window.
//!
//! Around each pixel the events of a rigidly moving edge lie on a plane
//! `t = t_ref + g . (p - p_ref)` in `(x, y, t)`. The edge moves along `g`
//! with speed `1 / |g|`, i.e. `v = g / |g|^2`, and the distance of an event
//! from the trajectory is measured along the motion direction at the
//! event's own timestamp. Only the normal component is observable on an
//! extended edge, so that is what the fit recovers.
//!
//! Turbulent jitter produces events that either fail to line up, line up on
//! a trajectory whose inliers barely advance along the motion direction
//! (`min_travel`), or line up only for a fraction of the neighbourhood
//! before the motion reverses (`min_inlier_frac`).

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::event::{Event, EventStream, Polarity};
use crate::field::MotionField;
use crate::maps::{GradientMap, TubeFit, TubeFitMap, TubeLabel, VelocityUnit};

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct TubeParams {
    /// Half the temporal window, µs.
    pub half_window: u64,
    /// Neighbourhood radius in pixels (Euclidean disc).
    pub radius: usize,
    pub min_support: usize,
    /// Inlier distance and TUBE residual bound, px.
    pub tol: f64,
    pub ransac_iters: usize,
    pub seed: u64,
    /// Minimum spread of the inlier events along the motion direction, px.
    pub min_travel: f64,
    /// Minimum share of the neighbourhood's events that must be inliers.
    pub min_inlier_frac: f64,
}

impl Default for TubeParams {
    fn default() -> Self {
        Self {
            half_window: 20_000,
            radius: 3,
            min_support: 6,
            tol: 1.0,
            ransac_iters: 64,
            seed: 0,
            min_travel: 3.0,
            min_inlier_frac: 0.6,
        }
    }
}

impl TubeParams {
    pub fn validate(&self) -> Result<()> {
        if self.half_window == 0 {
            return Err(Error::BadParam("tube half window must be > 0".into()));
        }
        if self.radius < 1 {
            return Err(Error::BadParam("tube radius must be >= 1".into()));
        }
        if self.min_support < 3 {
            return Err(Error::BadParam("tube min support must be >= 3".into()));
        }
        if !(self.tol.is_finite() && self.tol > 0.0) {
            return Err(Error::BadParam(format!("tube tolerance {}", self.tol)));
        }
        if self.ransac_iters < 1 {
            return Err(Error::BadParam("ransac iterations must be >= 1".into()));
        }
        if !(self.min_travel.is_finite() && self.min_travel >= 0.0) {
            return Err(Error::BadParam(format!("tube min travel {}", self.min_travel)));
        }
        if !(0.0..=1.0).contains(&self.min_inlier_frac) {
            return Err(Error::BadParam(format!(
                "tube min inlier fraction {}",
                self.min_inlier_frac
            )));
        }
        Ok(())
    }
}

/// Plane `t = t_ref + g . (p - p_ref)`; `g` in µs/px.
#[derive(Clone, Copy, Debug)]
struct Plane {
    g: [f64; 2],
    p_ref: [f64; 2],
    t_ref: f64,
}

impl Plane {
    fn through_pair(a: &Event, b: &Event) -> Option<Plane> {
        let (pa, pb) = (pos(a), pos(b));
        let d = [pb[0] - pa[0], pb[1] - pa[1]];
        let dt = b.t as f64 - a.t as f64;
        let d2 = d[0] * d[0] + d[1] * d[1];
        if dt == 0.0 || d2 == 0.0 {
            return None;
        }
        // v = d / dt, g = v / |v|^2 = d * dt / |d|^2
        Some(Plane {
            g: [d[0] * dt / d2, d[1] * dt / d2],
            p_ref: pa,
            t_ref: a.t as f64,
        })
        .filter(Plane::is_valid)
    }

    fn is_valid(&self) -> bool {
        let n = self.g[0].hypot(self.g[1]);
        n.is_finite() && n > 1e-12
    }

    /// Signed distance (px, along the motion direction) between `e` and the
    /// edge position at `e.t`.
    fn distance(&self, e: &Event) -> f64 {
        let p = pos(e);
        let lhs = self.g[0] * (p[0] - self.p_ref[0]) + self.g[1] * (p[1] - self.p_ref[1]);
        (lhs - (e.t as f64 - self.t_ref)) / self.g[0].hypot(self.g[1])
    }

    /// Velocity in px/µs.
    fn velocity(&self) -> [f64; 2] {
        let n2 = self.g[0] * self.g[0] + self.g[1] * self.g[1];
        [self.g[0] / n2, self.g[1] / n2]
    }

    /// Edge point closest to `x0` at time `t0`.
    fn base(&self, x0: [f64; 2], t0: f64) -> [f64; 2] {
        let n = self.g[0].hypot(self.g[1]);
        let lhs = self.g[0] * (x0[0] - self.p_ref[0]) + self.g[1] * (x0[1] - self.p_ref[1]);
        let s = (t0 - self.t_ref - lhs) / n;
        [x0[0] + self.g[0] / n * s, x0[1] + self.g[1] / n * s]
    }

    /// Least squares `t = c + a (x - xm) + b (y - ym)`.
    fn least_squares<'a>(events: impl Iterator<Item = &'a Event> + Clone) -> Option<Plane> {
        let n = events.clone().count() as f64;
        if n < 3.0 {
            return None;
        }
        let (mut xm, mut ym, mut tm) = (0.0, 0.0, 0.0);
        for e in events.clone() {
            let p = pos(e);
            xm += p[0];
            ym += p[1];
            tm += e.t as f64;
        }
        xm /= n;
        ym /= n;
        tm /= n;
        let (mut sxx, mut sxy, mut syy, mut sxt, mut syt) = (0.0, 0.0, 0.0, 0.0, 0.0);
        for e in events {
            let p = pos(e);
            let (dx, dy, dt) = (p[0] - xm, p[1] - ym, e.t as f64 - tm);
            sxx += dx * dx;
            sxy += dx * dy;
            syy += dy * dy;
            sxt += dx * dt;
            syt += dy * dt;
        }
        let det = sxx * syy - sxy * sxy;
        if det.is_nan() || det <= 1e-9 * (sxx * syy).max(f64::MIN_POSITIVE) {
            return None;
        }
        let plane = Plane {
            g: [(sxt * syy - syt * sxy) / det, (syt * sxx - sxt * sxy) / det],
            p_ref: [xm, ym],
            t_ref: tm,
        };
        plane.is_valid().then_some(plane)
    }
}

fn pos(e: &Event) -> [f64; 2] {
    [e.x as f64, e.y as f64]
}

fn rms(values: impl Iterator<Item = f64>) -> f64 {
    let (mut ss, mut n) = (0.0, 0usize);
    for v in values {
        ss += v * v;
        n += 1;
    }
    if n == 0 {
        0.0
    } else {
        (ss / n as f64).sqrt()
    }
}

/// Inlier indices of `plane` among events of polarity `pol`.
fn inliers(plane: &Plane, events: &[Event], pol: Option<Polarity>, tol: f64) -> Vec<usize> {
    events
        .iter()
        .enumerate()
        .filter(|(_, e)| pol.is_none_or(|p| e.p == p) && plane.distance(e).abs() <= tol)
        .map(|(i, _)| i)
        .collect()
}

/// Extent of `events` along the motion direction of `plane`, px.
fn travel<'a>(plane: &Plane, events: impl Iterator<Item = &'a Event>) -> f64 {
    let n = plane.g[0].hypot(plane.g[1]);
    let u = [plane.g[0] / n, plane.g[1] / n];
    let (lo, hi) = events.fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), e| {
        let s = e.x as f64 * u[0] + e.y as f64 * u[1];
        (lo.min(s), hi.max(s))
    });
    (hi - lo).max(0.0)
}

fn inlier_rms(plane: &Plane, events: &[Event], idx: &[usize]) -> f64 {
    rms(idx.iter().map(|&i| plane.distance(&events[i])))
}

/// Which estimator fits each neighbourhood.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum TubeEstimator {
    /// Polarity-consistent RANSAC over event pairs, refined by least squares.
    Ransac,
    /// One least-squares plane through every event in the neighbourhood.
    LeastSquares,
}

fn check_window(stream: &EventStream, t0: u64, half_window: u64) -> Result<(u64, u64)> {
    let lo = t0 as i64 - half_window as i64;
    let hi = t0 as i64 + half_window as i64;
    if lo < stream.t_begin() as i64 || hi > stream.t_end() as i64 {
        return Err(Error::WindowOutOfSpan {
            lo,
            hi,
            t_begin: stream.t_begin(),
            t_end: stream.t_end(),
        });
    }
    Ok((lo as u64, hi as u64))
}

/// RANSAC tube fit at `t0` over `[t0 - half_window, t0 + half_window]`.
///
/// With `frame_dt` the velocities are stored in px/frame, otherwise px/ms.
pub fn fit_event_tubes(
    stream: &EventStream,
    t0: u64,
    params: &TubeParams,
    frame_dt: Option<u64>,
) -> Result<TubeFitMap> {
    fit_event_tubes_with(stream, t0, params, frame_dt, TubeEstimator::Ransac)
}

pub fn fit_event_tubes_with(
    stream: &EventStream,
    t0: u64,
    params: &TubeParams,
    frame_dt: Option<u64>,
    estimator: TubeEstimator,
) -> Result<TubeFitMap> {
    params.validate()?;
    let (lo, hi) = check_window(stream, t0, params.half_window)?;
    let unit = match frame_dt {
        Some(0) => return Err(Error::BadParam("frame interval must be > 0".into())),
        Some(dt_us) => VelocityUnit::PxPerFrame { dt_us },
        None => VelocityUnit::PxPerMs,
    };
    let (w, h) = (stream.width(), stream.height());
    let buckets = stream.per_pixel(lo, hi);
    let offsets = disc_offsets(params.radius);
    let fits = (0..w * h)
        .into_par_iter()
        .map(|i| {
            let (x0, y0) = (i % w, i / w);
            let mut events = Vec::new();
            for &(dx, dy) in &offsets {
                let (x, y) = (x0 as i64 + dx, y0 as i64 + dy);
                if x >= 0 && y >= 0 && (x as usize) < w && (y as usize) < h {
                    events.extend_from_slice(&buckets[y as usize * w + x as usize]);
                }
            }
            events.sort_unstable();
            let ctx = PixelCtx {
                x0: [x0 as f64, y0 as f64],
                t0: t0 as f64,
                scale: unit.scale_from_px_per_us(),
                params,
            };
            match estimator {
                TubeEstimator::Ransac => ctx.ransac(&events, params.seed ^ i as u64),
                TubeEstimator::LeastSquares => ctx.least_squares(&events),
            }
        })
        .collect();
    TubeFitMap::new(w, h, t0, fits, params.tol, unit)
}

fn disc_offsets(radius: usize) -> Vec<(i64, i64)> {
    let r = radius as i64;
    let mut out = Vec::new();
    for dy in -r..=r {
        for dx in -r..=r {
            if dx * dx + dy * dy <= r * r {
                out.push((dx, dy));
            }
        }
    }
    out
}

struct PixelCtx<'a> {
    x0: [f64; 2],
    t0: f64,
    scale: f64,
    params: &'a TubeParams,
}

impl PixelCtx<'_> {
    /// `planar` is false when the inliers have no 2D spatial extent, which
    /// leaves the motion unobservable.
    fn finish(&self, plane: &Plane, events: &[Event], idx: &[usize], n_events: usize, planar: bool) -> TubeFit {
        let v = plane.velocity();
        let residual = inlier_rms(plane, events, idx);
        let support = idx.len();
        let travel = travel(plane, idx.iter().map(|&i| &events[i]));
        let p = self.params;
        let consistent = support as f64 >= p.min_inlier_frac * n_events as f64;
        let label = if planar && consistent && support >= p.min_support && residual <= p.tol && travel >= p.min_travel {
            TubeLabel::Tube
        } else {
            TubeLabel::Turbulence
        };
        TubeFit {
            base: plane.base(self.x0, self.t0),
            velocity: [v[0] * self.scale, v[1] * self.scale],
            residual,
            support: support as u32,
            label,
        }
    }

    /// Neighbourhood with events but no trajectory hypothesis.
    fn unfit(&self, n_events: usize) -> TubeFit {
        TubeFit {
            base: self.x0,
            velocity: [0.0; 2],
            residual: f64::INFINITY,
            support: n_events as u32,
            label: TubeLabel::Turbulence,
        }
    }

    fn ransac(&self, events: &[Event], seed: u64) -> TubeFit {
        let n = events.len();
        if n == 0 || n < self.params.min_support {
            return if n == 0 { TubeFit::EMPTY } else { self.unfit(n) };
        }
        let tol = self.params.tol;
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        // (inliers, rms, plane, polarity)
        let mut best: Option<(Vec<usize>, f64, Plane, Polarity)> = None;
        for _ in 0..self.params.ransac_iters {
            let i = rng.random_range(0..n);
            let mut j = rng.random_range(0..n - 1);
            if j >= i {
                j += 1;
            }
            let (a, b) = if events[i].t <= events[j].t {
                (&events[i], &events[j])
            } else {
                (&events[j], &events[i])
            };
            if a.p != b.p {
                continue;
            }
            let Some(plane) = Plane::through_pair(a, b) else {
                continue;
            };
            let idx = inliers(&plane, events, Some(a.p), tol);
            let err = inlier_rms(&plane, events, &idx);
            let better = match &best {
                None => true,
                Some((bi, be, _, _)) => idx.len() > bi.len() || (idx.len() == bi.len() && err < *be),
            };
            if better {
                best = Some((idx, err, plane, a.p));
            }
        }
        let Some((idx, _, plane, pol)) = best else {
            return self.unfit(n);
        };
        match Plane::least_squares(idx.iter().map(|&i| &events[i])) {
            Some(refit) => {
                let ridx = inliers(&refit, events, Some(pol), tol);
                if ridx.len() >= idx.len() {
                    self.finish(&refit, events, &ridx, n, true)
                } else {
                    self.finish(&plane, events, &idx, n, true)
                }
            }
            None => self.finish(&plane, events, &idx, n, false),
        }
    }

    fn least_squares(&self, events: &[Event]) -> TubeFit {
        let n = events.len();
        if n == 0 {
            return TubeFit::EMPTY;
        }
        match Plane::least_squares(events.iter()) {
            Some(plane) if n >= self.params.min_support => {
                let all: Vec<usize> = (0..n).collect();
                self.finish(&plane, events, &all, n, true)
            }
            _ => self.unfit(n),
        }
    }
}

/// Per-event labels: TUBE iff the event's pixel is TUBE and the event lies
/// within `tol` of that pixel's trajectory at its timestamp.
pub fn classify_events(stream: &EventStream, fits: &TubeFitMap, tol: f64) -> Result<Vec<TubeLabel>> {
    let (w, h) = fits.dims();
    if (stream.width(), stream.height()) != (w, h) {
        return Err(Error::GeometryMismatch {
            expected: (w, h),
            found: (stream.width(), stream.height()),
        });
    }
    let inv_scale = 1.0 / fits.unit().scale_from_px_per_us();
    let t0 = fits.t0() as f64;
    Ok(stream
        .events()
        .iter()
        .map(|e| {
            let i = e.y as usize * w + e.x as usize;
            if fits.labels()[i] != TubeLabel::Tube {
                return TubeLabel::Turbulence;
            }
            let v = fits.velocity()[i];
            let v = [v[0] * inv_scale, v[1] * inv_scale];
            let speed = v[0].hypot(v[1]);
            if speed == 0.0 {
                return TubeLabel::Turbulence;
            }
            let b = fits.base()[i];
            let dt = e.t as f64 - t0;
            let d = [e.x as f64 - b[0] - dt * v[0], e.y as f64 - b[1] - dt * v[1]];
            let dist = (d[0] * v[0] + d[1] * v[1]) / speed;
            if dist.abs() <= tol {
                TubeLabel::Tube
            } else {
                TubeLabel::Turbulence
            }
        })
        .collect())
}

/// Copies TUBE velocities into a motion field; every other pixel is invalid.
pub fn project_to_motion_field(fits: &TubeFitMap) -> MotionField {
    let (w, h) = fits.dims();
    let mut velocity = vec![[0.0f32; 2]; w * h];
    let mut valid = vec![false; w * h];
    for (i, &label) in fits.labels().iter().enumerate() {
        if label == TubeLabel::Tube {
            let v = fits.velocity()[i];
            velocity[i] = [v[0] as f32, v[1] as f32];
            valid[i] = true;
        }
    }
    MotionField::new(w, h, velocity, valid).expect("tube velocities are finite")
}

/// Keeps motion only where the gradient magnitude reaches `grad_thresh`.
pub fn edge_masked_motion(field: &MotionField, grad: &GradientMap, grad_thresh: f64) -> Result<MotionField> {
    if field.dims() != grad.dims() {
        return Err(Error::GeometryMismatch {
            expected: field.dims(),
            found: grad.dims(),
        });
    }
    let (w, h) = field.dims();
    let mut velocity = field.velocity().to_vec();
    let mut valid = field.valid().to_vec();
    for (i, &m) in grad.magnitude().iter().enumerate() {
        if !(valid[i] && m >= grad_thresh) {
            valid[i] = false;
            velocity[i] = [0.0; 2];
        }
    }
    MotionField::new(w, h, velocity, valid)
}
