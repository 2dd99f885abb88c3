//! Polarity-alternation statistics.
//!
//! Turbulence makes edges oscillate around their true position, so pixels
//! on sharp edges see their brightness go up and down repeatedly and emit
//! events of alternating polarity. Counting those alternations gives a
//! per-pixel edge-strength cue that needs no frames.

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::event::EventStream;
use crate::frame::{check_dims, Frame, Grid};
use crate::maps::{GradientMap, PaepMap};

/// Counts polarity-alternation event pairs per pixel.
///
/// Uses events with `t_begin <= t <= t_end`. Every consecutive pair at a
/// pixel with opposite polarities and a gap of at most `max_gap` µs counts
/// once; pairs may overlap, so `+ - +` counts two.
pub fn count_paep(stream: &EventStream, t_begin: u64, t_end: u64, max_gap: u64) -> Result<PaepMap> {
    if t_end <= t_begin {
        return Err(Error::BadSpan { t_begin, t_end });
    }
    let buckets = stream.per_pixel(t_begin, t_end);
    let count = buckets
        .par_iter()
        .map(|evs| {
            evs.windows(2)
                .filter(|w| w[0].p != w[1].p && w[1].t - w[0].t <= max_gap)
                .count() as u32
        })
        .collect();
    PaepMap::new(stream.width(), stream.height(), count, t_end - t_begin)
}

/// Sobel gradient magnitude and direction with clamp-to-edge borders.
pub fn gradient_map(frame: &Frame) -> Result<GradientMap> {
    let (w, h) = frame.dims();
    if w < 3 || h < 3 {
        return Err(Error::TooSmall {
            width: w,
            height: h,
            min_width: 3,
            min_height: 3,
        });
    }
    let (gx, gy) = sobel(frame.pixels(), w, h);
    let magnitude = gx.iter().zip(&gy).map(|(a, b)| a.hypot(*b)).collect();
    let direction = gx.iter().zip(&gy).map(|(a, b)| b.atan2(*a)).collect();
    GradientMap::new(w, h, magnitude, Some(direction))
}

pub(crate) fn sobel(data: &[f64], w: usize, h: usize) -> (Vec<f64>, Vec<f64>) {
    let at = |x: i64, y: i64| -> f64 {
        let xc = x.clamp(0, w as i64 - 1) as usize;
        let yc = y.clamp(0, h as i64 - 1) as usize;
        data[yc * w + xc]
    };
    let mut gx = vec![0.0; w * h];
    let mut gy = vec![0.0; w * h];
    for y in 0..h as i64 {
        for x in 0..w as i64 {
            let i = y as usize * w + x as usize;
            gx[i] = (at(x + 1, y - 1) + 2.0 * at(x + 1, y) + at(x + 1, y + 1))
                - (at(x - 1, y - 1) + 2.0 * at(x - 1, y) + at(x - 1, y + 1));
            gy[i] = (at(x - 1, y + 1) + 2.0 * at(x, y + 1) + at(x + 1, y + 1))
                - (at(x - 1, y - 1) + 2.0 * at(x, y - 1) + at(x + 1, y - 1));
        }
    }
    (gx, gy)
}

/// Pearson correlation between PAEP counts and gradient magnitude over the
/// pixels at least `border_margin` away from every edge.
pub fn paep_gradient_correlation(paep: &PaepMap, grad: &GradientMap, border_margin: usize) -> Result<f64> {
    check_dims(paep.dims(), grad.dims())?;
    let (w, h) = paep.dims();
    if w <= 2 * border_margin || h <= 2 * border_margin {
        return Err(Error::TooSmall {
            width: w,
            height: h,
            min_width: 2 * border_margin + 1,
            min_height: 2 * border_margin + 1,
        });
    }
    let mut xs = Vec::new();
    let mut ys = Vec::new();
    for y in border_margin..h - border_margin {
        for x in border_margin..w - border_margin {
            xs.push(paep.get(x, y) as f64);
            ys.push(grad.get(x, y));
        }
    }
    if xs.len() < 2 {
        return Err(Error::TooSmall {
            width: w,
            height: h,
            min_width: 2 * border_margin + 2,
            min_height: 2 * border_margin + 1,
        });
    }
    pearson(&xs, &ys)
}

pub(crate) fn pearson(xs: &[f64], ys: &[f64]) -> Result<f64> {
    let n = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let (mut sxy, mut sxx, mut syy) = (0.0, 0.0, 0.0);
    for (x, y) in xs.iter().zip(ys) {
        let (dx, dy) = (x - mx, y - my);
        sxy += dx * dy;
        sxx += dx * dx;
        syy += dy * dy;
    }
    if sxx == 0.0 || syy == 0.0 {
        return Err(Error::DegenerateVariance);
    }
    Ok((sxy / (sxx.sqrt() * syy.sqrt())).clamp(-1.0, 1.0))
}

/// `w = 1 + beta * count / max_count`; all ones when no pixel alternates.
pub fn epaw_weights(paep: &PaepMap, beta: f64) -> Result<Grid<f64>> {
    if !(beta.is_finite() && beta >= 0.0) {
        return Err(Error::BadParam(format!("weight gain beta {beta}")));
    }
    let (w, h) = paep.dims();
    let max = paep.max_count();
    if max == 0 {
        return Ok(Grid::filled(w, h, 1.0));
    }
    let data = paep
        .counts()
        .iter()
        .map(|&c| 1.0 + beta * c as f64 / max as f64)
        .collect();
    Grid::from_vec(w, h, data)
}
