//! Full pipeline: tube fitting separates moving objects from turbulence,
//! the scene is restored by EPAW, objects by motion-compensated averaging.

use crate::epaw::{epaw_restore_scene, scene_mask, temporal_average, EpawParams};
use crate::error::{Error, Result};
use crate::ettube::{classify_events, fit_event_tubes, project_to_motion_field, TubeParams};
use crate::event::EventStream;
use crate::field::MotionField;
use crate::filter::sample_bilinear;
use crate::frame::{check_dims, Frame, FrameSequence, Grid};
use crate::maps::{TubeFit, TubeFitMap, TubeLabel, VelocityUnit};

/// Warps frame `k` by `-(k - t_ref) * velocity` on valid pixels (px/frame,
/// bilinear, clamped border) so every frame shows moving content where it
/// was at `t_ref`. Invalid pixels pass through.
pub fn motion_compensate(seq: &FrameSequence, field: &MotionField, t_ref: usize) -> Result<FrameSequence> {
    check_dims(seq.dims(), field.dims())?;
    if t_ref >= seq.len() {
        return Err(Error::BadParam(format!(
            "reference frame {t_ref} outside a {}-frame sequence",
            seq.len()
        )));
    }
    let (w, h) = seq.dims();
    let frames = seq
        .frames()
        .iter()
        .enumerate()
        .map(|(k, f)| {
            let s = k as f64 - t_ref as f64;
            let src = f.pixels();
            let data = (0..w * h)
                .map(|i| match field.valid()[i] {
                    true => {
                        let v = field.velocity()[i];
                        let x = (i % w) as f64 + s * v[0] as f64;
                        let y = (i / w) as f64 + s * v[1] as f64;
                        sample_bilinear(src, w, h, x, y)
                    }
                    false => src[i],
                })
                .collect();
            Frame::from_clamped(w, h, data)
        })
        .collect::<Result<Vec<_>>>()?;
    FrameSequence::new(frames, seq.t0(), seq.dt())
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct RestoreParams {
    pub tube: TubeParams,
    pub epaw: EpawParams,
    /// Square dilation of the TUBE pixels that forms the object region.
    pub dilate_radius: usize,
}

impl Default for RestoreParams {
    fn default() -> Self {
        Self {
            tube: TubeParams::default(),
            epaw: EpawParams::default(),
            dilate_radius: 2,
        }
    }
}

/// Intermediate products of one restoration.
#[derive(Clone, Debug)]
pub struct Restoration {
    pub frame: Frame,
    pub fits: TubeFitMap,
    pub scene_mask: Grid<bool>,
    pub motion: MotionField,
}

/// Restored frame at `t_ref` (default: the last frame).
pub fn restore_frame(
    turb_seq: &FrameSequence,
    stream: &EventStream,
    t_ref: Option<usize>,
    params: &RestoreParams,
) -> Result<Frame> {
    restore_frame_detailed(turb_seq, stream, t_ref, params).map(|r| r.frame)
}

/// Fits tubes centred on the middle of the stream span, with the half window
/// shrunk if the span is shorter than the full window.
pub fn fit_centered_tubes(stream: &EventStream, params: &TubeParams, frame_dt: u64) -> Result<TubeFitMap> {
    let mid = stream.t_begin() + (stream.t_end() - stream.t_begin()) / 2;
    let half = params.half_window.min(mid - stream.t_begin()).min(stream.t_end() - mid);
    if half == 0 {
        let (w, h) = (stream.width(), stream.height());
        return TubeFitMap::new(
            w,
            h,
            mid,
            vec![TubeFit::EMPTY; w * h],
            params.tol,
            VelocityUnit::PxPerFrame { dt_us: frame_dt },
        );
    }
    let p = TubeParams {
        half_window: half,
        ..*params
    };
    fit_event_tubes(stream, mid, &p, Some(frame_dt))
}

pub fn restore_frame_detailed(
    turb_seq: &FrameSequence,
    stream: &EventStream,
    t_ref: Option<usize>,
    params: &RestoreParams,
) -> Result<Restoration> {
    let n = turb_seq.len();
    if n < 2 {
        return Err(Error::TooFewFrames { needed: 2, found: n });
    }
    check_dims(turb_seq.dims(), (stream.width(), stream.height()))?;
    let t_ref = t_ref.unwrap_or(n - 1);
    let fits = fit_centered_tubes(stream, &params.tube, turb_seq.dt())?;
    let motion = project_to_motion_field(&fits);
    let mask = scene_mask(&fits, params.dilate_radius);
    if fits.count(TubeLabel::Tube) == 0 {
        let frame = epaw_restore_scene(turb_seq, stream, &params.epaw, None)?;
        return Ok(Restoration {
            frame,
            fits,
            scene_mask: mask,
            motion,
        });
    }

    // Object events do not describe turbulence; leave them out of the PAEP count.
    let labels = classify_events(stream, &fits, params.tube.tol)?;
    let scene_events = stream
        .events()
        .iter()
        .zip(&labels)
        .filter(|(_, &l)| l != TubeLabel::Tube)
        .map(|(e, _)| *e)
        .collect();
    let scene_stream = EventStream::from_sorted(
        stream.width(),
        stream.height(),
        stream.t_begin(),
        stream.t_end(),
        scene_events,
    )?;
    let scene = epaw_restore_scene(turb_seq, &scene_stream, &params.epaw, Some(&mask))?;
    let object = temporal_average(&motion_compensate(turb_seq, &motion, t_ref)?, None)?;

    let (w, h) = turb_seq.dims();
    let m = mask.as_slice();
    let data = (0..w * h)
        .map(|i| {
            let ws = scene_weight(m, w, h, i);
            ws * scene.pixels()[i] + (1.0 - ws) * object.pixels()[i]
        })
        .collect();
    Ok(Restoration {
        frame: Frame::from_clamped(w, h, data)?,
        fits,
        scene_mask: mask,
        motion,
    })
}

/// 1 inside the scene, 0 on objects, 0.5 on scene pixels touching an object.
fn scene_weight(mask: &[bool], w: usize, h: usize, i: usize) -> f64 {
    if !mask[i] {
        return 0.0;
    }
    let (x, y) = ((i % w) as i64, (i / w) as i64);
    for dy in -1..=1 {
        for dx in -1..=1 {
            let (xx, yy) = (x + dx, y + dy);
            if xx >= 0 && yy >= 0 && (xx as usize) < w && (yy as usize) < h && !mask[yy as usize * w + xx as usize] {
                return 0.5;
            }
        }
    }
    1.0
}
