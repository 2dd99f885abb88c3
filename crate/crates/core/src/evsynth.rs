//! Log-intensity threshold event synthesis and voxel accumulation.

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::event::{Event, EventStream, Polarity};
use crate::frame::FrameSequence;

/// Slack, in log-intensity units, on the threshold comparison. A signal that
/// lands exactly on `R ± C` emits, even after floating-point round-off.
pub const CROSSING_TOL: f64 = 1e-9;

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct EvsParams {
    /// Contrast threshold `C` in log-intensity units.
    pub contrast: f64,
    /// Floor added to intensities before the log.
    pub eps: f64,
    /// Minimum spacing between emitted events at one pixel, µs.
    pub refractory: u64,
}

impl Default for EvsParams {
    fn default() -> Self {
        Self {
            contrast: 0.25,
            eps: 1.0 / 255.0,
            refractory: 0,
        }
    }
}

impl EvsParams {
    pub fn validate(&self) -> Result<()> {
        if !(self.contrast.is_finite() && self.contrast > 0.0) {
            return Err(Error::BadParam(format!("contrast threshold {}", self.contrast)));
        }
        if !(self.eps.is_finite() && self.eps > 0.0) {
            return Err(Error::BadParam(format!("intensity floor {}", self.eps)));
        }
        Ok(())
    }
}

/// Emits the events of one pixel whose log intensity follows `levels`
/// (one sample per frame, linearly interpolated in between).
fn pixel_events(levels: &[f64], t0: u64, dt: u64, params: &EvsParams, x: u16, y: u16, out: &mut Vec<Event>) {
    let c = params.contrast;
    let mut reference = levels[0];
    let mut last_emit: Option<u64> = None;
    let mut emit = |t: u64, p: Polarity, out: &mut Vec<Event>| {
        // Inside the refractory window the crossing is consumed but not reported.
        if let Some(last) = last_emit {
            if t - last < params.refractory {
                return;
            }
        }
        last_emit = Some(t);
        out.push(Event::new(t, x, y, p));
    };
    for (k, pair) in levels.windows(2).enumerate() {
        let (a, b) = (pair[0], pair[1]);
        let t_a = t0 + k as u64 * dt;
        let crossing_time = |level: f64| -> u64 {
            let frac = ((level - a) / (b - a)).clamp(0.0, 1.0);
            t_a + (frac * dt as f64).round() as u64
        };
        if b > a {
            while b >= reference + c - CROSSING_TOL {
                reference += c;
                emit(crossing_time(reference), Polarity::Positive, out);
            }
        } else if b < a {
            while b <= reference - c + CROSSING_TOL {
                reference -= c;
                emit(crossing_time(reference), Polarity::Negative, out);
            }
        }
    }
}

/// Per-pixel threshold-crossing simulation.
///
/// Each pixel keeps a reference level `R`, initialised to `log(I0 + eps)`.
/// Between frames the log intensity is interpolated linearly in time; every
/// crossing of `R + C` (upwards) or `R - C` (downwards) emits an event at the
/// crossing time, rounded to the microsecond, and moves `R` by `±C`.
pub fn synthesize_events(seq: &FrameSequence, params: &EvsParams) -> Result<EventStream> {
    params.validate()?;
    if seq.len() < 2 {
        return Err(Error::TooFewFrames {
            needed: 2,
            found: seq.len(),
        });
    }
    let (w, h) = seq.dims();
    if w > u16::MAX as usize || h > u16::MAX as usize {
        return Err(Error::BadParam(format!(
            "frame geometry {w}x{h} exceeds event coordinate range"
        )));
    }
    let (t0, dt) = (seq.t0(), seq.dt());
    let logs: Vec<Vec<f64>> = seq
        .frames()
        .iter()
        .map(|f| f.pixels().iter().map(|v| (v + params.eps).ln()).collect())
        .collect();
    let per_pixel: Vec<Vec<Event>> = (0..w * h)
        .into_par_iter()
        .map(|p| {
            let levels: Vec<f64> = logs.iter().map(|l| l[p]).collect();
            let mut out = Vec::new();
            pixel_events(&levels, t0, dt, params, (p % w) as u16, (p / w) as u16, &mut out);
            out
        })
        .collect();
    let events: Vec<Event> = per_pixel.into_iter().flatten().collect();
    EventStream::with_span(w, h, t0, seq.t_last(), events)
}

/// Signed per-bin polarity sums, indexed `(bin, y, x)`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct VoxelGrid {
    n_bins: usize,
    width: usize,
    height: usize,
    value: Vec<i32>,
    span: (u64, u64),
}

impl VoxelGrid {
    pub fn n_bins(&self) -> usize {
        self.n_bins
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn span(&self) -> (u64, u64) {
        self.span
    }

    pub fn values(&self) -> &[i32] {
        &self.value
    }

    pub fn get(&self, bin: usize, x: usize, y: usize) -> i32 {
        self.value[(bin * self.height + y) * self.width + x]
    }

    pub fn total(&self) -> i64 {
        self.value.iter().map(|&v| v as i64).sum()
    }
}

/// Adds each event with `t_begin <= t < t_end` to bin
/// `floor(n_bins * (t - t_begin) / (t_end - t_begin))`, in exact integer arithmetic.
pub fn accumulate_voxels(stream: &EventStream, n_bins: usize, t_begin: u64, t_end: u64) -> Result<VoxelGrid> {
    if t_end <= t_begin {
        return Err(Error::BadSpan { t_begin, t_end });
    }
    if n_bins == 0 {
        return Err(Error::BadParam("voxel grid needs at least one bin".into()));
    }
    let (w, h) = (stream.width(), stream.height());
    let mut value = vec![0i32; n_bins * w * h];
    let span = (t_end - t_begin) as u128;
    for e in stream.between(t_begin, t_end - 1) {
        let bin = (n_bins as u128 * (e.t - t_begin) as u128 / span) as usize;
        value[(bin * h + e.y as usize) * w + e.x as usize] += e.p.as_i8() as i32;
    }
    Ok(VoxelGrid {
        n_bins,
        width: w,
        height: h,
        value,
        span: (t_begin, t_end),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::frame::Frame;
    use proptest::prelude::*;

    fn one_pixel(values: &[f64], dt: u64) -> FrameSequence {
        let frames = values.iter().map(|&v| Frame::filled(1, 1, v).unwrap()).collect();
        FrameSequence::new(frames, 0, dt).unwrap()
    }

    fn ln2_params() -> EvsParams {
        EvsParams {
            contrast: std::f64::consts::LN_2,
            eps: 1e-12,
            refractory: 0,
        }
    }

    #[test]
    fn constant_sequence_is_silent() {
        let f = Frame::from_fn(5, 4, |x, y| (x + y) as f64 / 8.0).unwrap();
        let seq = FrameSequence::new(vec![f.clone(), f.clone(), f], 0, 1000).unwrap();
        assert!(synthesize_events(&seq, &EvsParams::default()).unwrap().is_empty());
    }

    #[test]
    fn doubling_at_ln2_threshold_gives_one_event() {
        let s = synthesize_events(&one_pixel(&[0.25, 0.5], 1000), &ln2_params()).unwrap();
        assert_eq!(s.len(), 1);
        assert_eq!(s.events()[0].p, Polarity::Positive);
        assert_eq!(s.events()[0].t, 1000);
    }

    #[test]
    fn eightfold_increase_gives_three_events() {
        let s = synthesize_events(&one_pixel(&[0.1, 0.8], 900), &ln2_params()).unwrap();
        let ts: Vec<u64> = s.events().iter().map(|e| e.t).collect();
        assert_eq!(ts, vec![300, 600, 900]);
        assert!(s.events().iter().all(|e| e.p == Polarity::Positive));
    }

    #[test]
    fn decrease_gives_negative_events() {
        let s = synthesize_events(&one_pixel(&[0.8, 0.1], 900), &ln2_params()).unwrap();
        assert_eq!(s.len(), 3);
        assert!(s.events().iter().all(|e| e.p == Polarity::Negative));
    }

    #[test]
    fn refractory_suppresses_close_events() {
        let p = EvsParams {
            refractory: 400,
            ..ln2_params()
        };
        let s = synthesize_events(&one_pixel(&[0.1, 0.8], 900), &p).unwrap();
        let ts: Vec<u64> = s.events().iter().map(|e| e.t).collect();
        assert_eq!(ts, vec![300, 900]);
    }

    #[test]
    fn too_few_frames() {
        assert!(matches!(
            synthesize_events(&one_pixel(&[0.5], 10), &EvsParams::default()),
            Err(Error::TooFewFrames { .. })
        ));
    }

    #[test]
    fn voxels_of_empty_stream_are_zero() {
        let s = EventStream::empty(3, 2, 0, 100).unwrap();
        let v = accumulate_voxels(&s, 4, 0, 100).unwrap();
        assert!(v.values().iter().all(|&x| x == 0));
        assert_eq!(v.values().len(), 4 * 6);
    }

    #[test]
    fn opposite_events_cancel() {
        let s = EventStream::new(
            2,
            2,
            vec![
                Event::from_raw(10, 1, 1, 1).unwrap(),
                Event::from_raw(20, 1, 1, -1).unwrap(),
            ],
        )
        .unwrap();
        let v = accumulate_voxels(&s, 2, 0, 100).unwrap();
        assert_eq!(v.get(0, 1, 1), 0);
    }

    #[test]
    fn hand_placed_events_land_in_expected_bins() {
        // Span [0, 100) with 2 bins: t < 50 -> bin 0, else bin 1; t = 100 is excluded.
        let evs = vec![
            Event::from_raw(0, 0, 0, 1).unwrap(),
            Event::from_raw(49, 0, 0, 1).unwrap(),
            Event::from_raw(50, 0, 0, -1).unwrap(),
            Event::from_raw(99, 1, 0, 1).unwrap(),
            Event::from_raw(100, 1, 0, 1).unwrap(),
        ];
        let s = EventStream::new(2, 1, evs).unwrap();
        let v = accumulate_voxels(&s, 2, 0, 100).unwrap();
        assert_eq!(v.get(0, 0, 0), 2);
        assert_eq!(v.get(1, 0, 0), -1);
        assert_eq!(v.get(0, 1, 0), 0);
        assert_eq!(v.get(1, 1, 0), 1);
        assert_eq!(v.total(), 2);
    }

    #[test]
    fn bad_span() {
        let s = EventStream::empty(1, 1, 0, 0).unwrap();
        assert!(matches!(accumulate_voxels(&s, 1, 5, 5), Err(Error::BadSpan { .. })));
    }

    fn arb_values(n: usize) -> impl Strategy<Value = Vec<f64>> {
        proptest::collection::vec(0.0f64..=1.0, n)
    }

    proptest! {
        #[test]
        fn signed_change_is_conserved(values in arb_values(6), c in 0.05f64..0.6) {
            let p = EvsParams { contrast: c, ..Default::default() };
            let s = synthesize_events(&one_pixel(&values, 1000), &p).unwrap();
            let net: f64 = s.events().iter().map(|e| e.p.sign()).sum();
            let change = (values[5] + p.eps).ln() - (values[0] + p.eps).ln();
            prop_assert!((c * net - change).abs() <= c + 1e-9);
        }

        #[test]
        fn halving_threshold_never_loses_events(values in arb_values(6), c in 0.05f64..0.6) {
            let coarse = EvsParams { contrast: c, ..Default::default() };
            let fine = EvsParams { contrast: c / 2.0, ..Default::default() };
            let n_coarse = synthesize_events(&one_pixel(&values, 1000), &coarse).unwrap().len();
            let n_fine = synthesize_events(&one_pixel(&values, 1000), &fine).unwrap().len();
            prop_assert!(n_fine >= n_coarse);
        }

        #[test]
        fn voxel_sum_equals_net_polarity(ts in proptest::collection::vec((0u64..1000, 0u16..4, 0u16..3, any::<bool>()), 0..50), bins in 1usize..7) {
            let evs: Vec<Event> = ts.iter().map(|&(t, x, y, pos)| Event::new(t, x, y, if pos { Polarity::Positive } else { Polarity::Negative })).collect();
            let s = EventStream::with_span(4, 3, 0, 1000, evs.clone()).unwrap();
            let v = accumulate_voxels(&s, bins, 0, 1000).unwrap();
            let net: i64 = evs.iter().map(|e| e.p.as_i8() as i64).sum();
            prop_assert_eq!(v.total(), net);
        }
    }
}
