//! Full-reference image quality metrics on `[0, 1]` frames.

use crate::error::{Error, Result};
use crate::frame::{check_dims, Frame};
use crate::paep::sobel;

pub const SSIM_WINDOW: usize = 8;
pub const SSIM_K1: f64 = 0.01;
pub const SSIM_K2: f64 = 0.03;
pub const CHARBONNIER_EPS: f64 = 1e-3;

pub fn mse(a: &Frame, b: &Frame) -> Result<f64> {
    check_dims(a.dims(), b.dims())?;
    let n = a.pixels().len() as f64;
    Ok(a.pixels()
        .iter()
        .zip(b.pixels())
        .map(|(x, y)| (x - y) * (x - y))
        .sum::<f64>()
        / n)
}

pub fn rmse(a: &Frame, b: &Frame) -> Result<f64> {
    Ok(mse(a, b)?.sqrt())
}

/// `10 log10(1 / MSE)`; identical frames give `f64::INFINITY`.
pub fn psnr(a: &Frame, b: &Frame) -> Result<f64> {
    let m = mse(a, b)?;
    if m == 0.0 {
        return Ok(f64::INFINITY);
    }
    Ok(-10.0 * m.log10())
}

pub fn ssim(a: &Frame, b: &Frame) -> Result<f64> {
    ssim_with(a, b, SSIM_WINDOW, SSIM_K1, SSIM_K2)
}

/// Mean SSIM over every `window x window` square (stride 1, uniform weights,
/// population statistics) with `c1 = k1^2`, `c2 = k2^2`.
pub fn ssim_with(a: &Frame, b: &Frame, window: usize, k1: f64, k2: f64) -> Result<f64> {
    check_dims(a.dims(), b.dims())?;
    let (w, h) = a.dims();
    if window == 0 || w < window || h < window {
        return Err(Error::TooSmall {
            width: w,
            height: h,
            min_width: window.max(1),
            min_height: window.max(1),
        });
    }
    let (c1, c2) = (k1 * k1, k2 * k2);
    let pa = a.pixels();
    let pb = b.pixels();
    let sa = integral(w, h, |i| pa[i]);
    let sb = integral(w, h, |i| pb[i]);
    let saa = integral(w, h, |i| pa[i] * pa[i]);
    let sbb = integral(w, h, |i| pb[i] * pb[i]);
    let sab = integral(w, h, |i| pa[i] * pb[i]);
    let n = (window * window) as f64;
    let mut total = 0.0;
    let mut count = 0usize;
    for y in 0..=h - window {
        for x in 0..=w - window {
            let box_sum = |s: &[f64]| {
                let (x1, y1) = (x + window, y + window);
                s[y1 * (w + 1) + x1] - s[y * (w + 1) + x1] - s[y1 * (w + 1) + x] + s[y * (w + 1) + x]
            };
            let ma = box_sum(&sa) / n;
            let mb = box_sum(&sb) / n;
            let va = (box_sum(&saa) / n - ma * ma).max(0.0);
            let vb = (box_sum(&sbb) / n - mb * mb).max(0.0);
            let cov = box_sum(&sab) / n - ma * mb;
            total += ((2.0 * ma * mb + c1) * (2.0 * cov + c2)) / ((ma * ma + mb * mb + c1) * (va + vb + c2));
            count += 1;
        }
    }
    Ok(total / count as f64)
}

/// Summed-area table with a zero first row and column, `(w + 1) x (h + 1)`.
fn integral(w: usize, h: usize, f: impl Fn(usize) -> f64) -> Vec<f64> {
    let stride = w + 1;
    let mut s = vec![0.0; stride * (h + 1)];
    for y in 0..h {
        let mut row = 0.0;
        for x in 0..w {
            row += f(y * w + x);
            s[(y + 1) * stride + x + 1] = s[y * stride + x + 1] + row;
        }
    }
    s
}

/// Mean of `sqrt((a - b)^2 + epsilon^2)`.
pub fn charbonnier(a: &Frame, b: &Frame, epsilon: f64) -> Result<f64> {
    check_dims(a.dims(), b.dims())?;
    let e2 = epsilon * epsilon;
    let n = a.pixels().len() as f64;
    Ok(a.pixels()
        .iter()
        .zip(b.pixels())
        .map(|(x, y)| ((x - y) * (x - y) + e2).sqrt())
        .sum::<f64>()
        / n)
}

/// RMSE between Sobel magnitudes of `restored` and `reference`, over the
/// pixels where the reference magnitude is at least `band_frac` of its maximum.
pub fn edge_band_gradient_rmse(restored: &Frame, reference: &Frame, band_frac: f64) -> Result<f64> {
    check_dims(restored.dims(), reference.dims())?;
    let (w, h) = reference.dims();
    let mag = |f: &Frame| -> Vec<f64> {
        let (gx, gy) = sobel(f.pixels(), w, h);
        gx.iter().zip(&gy).map(|(a, b)| a.hypot(*b)).collect()
    };
    let gr = mag(restored);
    let gc = mag(reference);
    let max = gc.iter().copied().fold(0.0, f64::max);
    let cut = band_frac * max;
    let (mut ss, mut n) = (0.0, 0usize);
    for (r, c) in gr.iter().zip(&gc) {
        if *c >= cut && *c > 0.0 {
            ss += (r - c) * (r - c);
            n += 1;
        }
    }
    if n == 0 {
        return Err(Error::DegenerateVariance);
    }
    Ok((ss / n as f64).sqrt())
}

/// Everything the eval command reports, in order.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct MetricReport {
    pub psnr: f64,
    pub ssim: f64,
    pub charbonnier: f64,
    pub rmse: f64,
}

impl MetricReport {
    pub fn compute(a: &Frame, b: &Frame) -> Result<Self> {
        Ok(Self {
            psnr: psnr(a, b)?,
            ssim: ssim(a, b)?,
            charbonnier: charbonnier(a, b, CHARBONNIER_EPS)?,
            rmse: rmse(a, b)?,
        })
    }
}

impl std::fmt::Display for MetricReport {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let psnr = if self.psnr.is_infinite() {
            "inf".to_string()
        } else {
            format!("{:.6}", self.psnr)
        };
        write!(
            f,
            "psnr={psnr} ssim={:.6} charbonnier={:.6} rmse={:.6}",
            self.ssim, self.charbonnier, self.rmse
        )
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn texture(w: usize, h: usize) -> Frame {
        Frame::from_fn(w, h, |x, y| {
            0.5 + 0.3 * ((x as f64 * 0.7).sin() * (y as f64 * 0.45).cos())
        })
        .unwrap()
    }

    fn offset(f: &Frame, d: f64) -> Frame {
        Frame::new(f.width(), f.height(), f.pixels().iter().map(|v| v + d).collect()).unwrap()
    }

    #[test]
    fn psnr_identical_is_infinite() {
        let a = texture(8, 8);
        assert_eq!(psnr(&a, &a).unwrap(), f64::INFINITY);
    }

    #[test]
    fn psnr_closed_form_offsets() {
        let a = Frame::from_fn(10, 10, |x, y| 0.05 + 0.8 * ((x + y) as f64 / 18.0)).unwrap();
        assert!((psnr(&a, &offset(&a, 0.1)).unwrap() - 20.0).abs() < 1e-9 * 20.0);
        assert!((psnr(&a, &offset(&a, 0.01)).unwrap() - 40.0).abs() < 1e-9 * 40.0);
    }

    #[test]
    fn rmse_hand_cases() {
        let a = Frame::filled(2, 2, 0.0).unwrap();
        let b = Frame::new(2, 2, vec![0.2, 0.0, 0.0, 0.0]).unwrap();
        assert!((rmse(&a, &b).unwrap() - 0.1).abs() < 1e-15);
        assert_eq!(rmse(&a, &a).unwrap(), 0.0);
        let c = Frame::filled(2, 2, 0.1).unwrap();
        assert!((rmse(&a, &c).unwrap() - 0.1).abs() < 1e-15);
    }

    #[test]
    fn charbonnier_floor_and_offset() {
        let a = texture(6, 6);
        assert!((charbonnier(&a, &a, 1e-3).unwrap() - 1e-3).abs() < 1e-18);
        let b = Frame::filled(4, 4, 0.2).unwrap();
        let c = Frame::filled(4, 4, 0.3).unwrap();
        let expected = (0.01f64 + 1e-6).sqrt();
        let got = charbonnier(&b, &c, 1e-3).unwrap();
        assert!(((got - expected) / expected).abs() < 1e-9);
        assert!((got - 0.100005).abs() < 1e-6);
    }

    #[test]
    fn charbonnier_tends_to_mae() {
        let a = texture(9, 9);
        let b = Frame::filled(9, 9, 0.5).unwrap();
        let mae = a.pixels().iter().map(|v| (v - 0.5).abs()).sum::<f64>() / 81.0;
        assert!((charbonnier(&a, &b, 1e-9).unwrap() - mae).abs() < 1e-8);
    }

    #[test]
    fn ssim_identity_and_constants() {
        let a = texture(16, 12);
        assert!((ssim(&a, &a).unwrap() - 1.0).abs() < 1e-12);
        let c = Frame::filled(10, 10, 0.3).unwrap();
        assert!((ssim(&c, &c).unwrap() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn ssim_requires_window() {
        let a = Frame::filled(7, 9, 0.3).unwrap();
        assert!(matches!(ssim(&a, &a), Err(Error::TooSmall { .. })));
        let b = Frame::filled(9, 9, 0.3).unwrap();
        assert!(matches!(ssim(&a, &b), Err(Error::GeometryMismatch { .. })));
    }

    #[test]
    fn edge_band_rmse_zero_on_identity() {
        let a = Frame::from_fn(12, 12, |x, _| if x >= 6 { 0.8 } else { 0.2 }).unwrap();
        assert_eq!(edge_band_gradient_rmse(&a, &a, 0.25).unwrap(), 0.0);
    }

    #[test]
    fn report_formats_infinite_psnr() {
        let a = texture(8, 8);
        let line = MetricReport::compute(&a, &a).unwrap().to_string();
        assert_eq!(line, "psnr=inf ssim=1.000000 charbonnier=0.001000 rmse=0.000000");
    }

    proptest! {
        #[test]
        fn metrics_are_symmetric(a in proptest::collection::vec(0.0f64..=1.0, 100), b in proptest::collection::vec(0.0f64..=1.0, 100)) {
            let fa = Frame::new(10, 10, a).unwrap();
            let fb = Frame::new(10, 10, b).unwrap();
            prop_assert_eq!(psnr(&fa, &fb).unwrap(), psnr(&fb, &fa).unwrap());
            prop_assert!((ssim(&fa, &fb).unwrap() - ssim(&fb, &fa).unwrap()).abs() < 1e-12);
            prop_assert_eq!(charbonnier(&fa, &fb, 1e-3).unwrap(), charbonnier(&fb, &fa, 1e-3).unwrap());
            prop_assert_eq!(rmse(&fa, &fb).unwrap(), rmse(&fb, &fa).unwrap());
            prop_assert!((ssim(&fa, &fa).unwrap() - 1.0).abs() < 1e-9);
        }
    }
}
