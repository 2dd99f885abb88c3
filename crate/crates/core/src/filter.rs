//! Small image-processing kernels shared by the simulation and restoration stages.
//! All of them use clamp-to-edge borders.

/// Normalised sampled Gaussian, radius `ceil(4 sigma)`. `sigma == 0` gives the unit impulse.
pub fn gaussian_kernel(sigma: f64) -> Vec<f64> {
    if sigma <= 0.0 {
        return vec![1.0];
    }
    let radius = (4.0 * sigma).ceil() as i64;
    let mut k: Vec<f64> = (-radius..=radius)
        .map(|i| (-(i * i) as f64 / (2.0 * sigma * sigma)).exp())
        .collect();
    let sum: f64 = k.iter().sum();
    k.iter_mut().for_each(|v| *v /= sum);
    k
}

#[inline]
fn clamp_index(i: i64, n: usize) -> usize {
    i.clamp(0, n as i64 - 1) as usize
}

/// Separable convolution of a row-major plane with `kernel` along x then y.
pub fn convolve_separable(data: &[f64], width: usize, height: usize, kernel: &[f64]) -> Vec<f64> {
    if kernel.len() == 1 {
        return data.iter().map(|v| v * kernel[0]).collect();
    }
    let r = (kernel.len() / 2) as i64;
    let mut tmp = vec![0.0; data.len()];
    for y in 0..height {
        let row = &data[y * width..(y + 1) * width];
        for x in 0..width {
            let mut acc = 0.0;
            for (j, w) in kernel.iter().enumerate() {
                acc += w * row[clamp_index(x as i64 + j as i64 - r, width)];
            }
            tmp[y * width + x] = acc;
        }
    }
    let mut out = vec![0.0; data.len()];
    for y in 0..height {
        for x in 0..width {
            let mut acc = 0.0;
            for (j, w) in kernel.iter().enumerate() {
                acc += w * tmp[clamp_index(y as i64 + j as i64 - r, height) * width + x];
            }
            out[y * width + x] = acc;
        }
    }
    out
}

pub fn gaussian_blur(data: &[f64], width: usize, height: usize, sigma: f64) -> Vec<f64> {
    if sigma <= 0.0 {
        return data.to_vec();
    }
    convolve_separable(data, width, height, &gaussian_kernel(sigma))
}

/// Per-pixel variance gain of a 1D clamp-border convolution: for each output
/// position, the sum of squared effective tap weights.
pub(crate) fn clamped_variance_gain(kernel: &[f64], n: usize) -> Vec<f64> {
    let r = (kernel.len() / 2) as i64;
    (0..n)
        .map(|x| {
            let mut eff = vec![0.0; n];
            for (j, w) in kernel.iter().enumerate() {
                eff[clamp_index(x as i64 + j as i64 - r, n)] += w;
            }
            eff.iter().map(|w| w * w).sum()
        })
        .collect()
}

/// Bilinear sample at real coordinates; samples beyond the border take the border value.
pub fn sample_bilinear(data: &[f64], width: usize, height: usize, x: f64, y: f64) -> f64 {
    let x = x.clamp(0.0, (width - 1) as f64);
    let y = y.clamp(0.0, (height - 1) as f64);
    let x0 = x.floor();
    let y0 = y.floor();
    let fx = x - x0;
    let fy = y - y0;
    let x0 = x0 as usize;
    let y0 = y0 as usize;
    let x1 = (x0 + 1).min(width - 1);
    let y1 = (y0 + 1).min(height - 1);
    let top = if fx == 0.0 {
        data[y0 * width + x0]
    } else {
        data[y0 * width + x0] * (1.0 - fx) + data[y0 * width + x1] * fx
    };
    if fy == 0.0 {
        return top;
    }
    let bottom = if fx == 0.0 {
        data[y1 * width + x0]
    } else {
        data[y1 * width + x0] * (1.0 - fx) + data[y1 * width + x1] * fx
    };
    top * (1.0 - fy) + bottom * fy
}

/// Bilinear sample treating everything outside the plane as zero.
pub fn sample_bilinear_zero(data: &[f64], width: usize, height: usize, x: f64, y: f64) -> f64 {
    let x0 = x.floor();
    let y0 = y.floor();
    let fx = x - x0;
    let fy = y - y0;
    let tap = |xi: f64, yi: f64| -> f64 {
        if xi < 0.0 || yi < 0.0 || xi >= width as f64 || yi >= height as f64 {
            0.0
        } else {
            data[yi as usize * width + xi as usize]
        }
    };
    tap(x0, y0) * (1.0 - fx) * (1.0 - fy)
        + tap(x0 + 1.0, y0) * fx * (1.0 - fy)
        + tap(x0, y0 + 1.0) * (1.0 - fx) * fy
        + tap(x0 + 1.0, y0 + 1.0) * fx * fy
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn kernel_is_normalised_and_symmetric() {
        let k = gaussian_kernel(1.5);
        assert_eq!(k.len(), 13);
        assert!((k.iter().sum::<f64>() - 1.0).abs() < 1e-12);
        for i in 0..k.len() / 2 {
            assert_eq!(k[i], k[k.len() - 1 - i]);
        }
    }

    #[test]
    fn blur_preserves_constants() {
        let data = vec![0.3; 25];
        for v in gaussian_blur(&data, 5, 5, 2.0) {
            assert!((v - 0.3).abs() < 1e-12);
        }
    }

    #[test]
    fn bilinear_hits_grid_points_exactly() {
        let data: Vec<f64> = (0..12).map(|v| v as f64 / 11.0).collect();
        for y in 0..3 {
            for x in 0..4 {
                assert_eq!(sample_bilinear(&data, 4, 3, x as f64, y as f64), data[y * 4 + x]);
            }
        }
        assert_eq!(sample_bilinear(&data, 4, 3, -3.0, 0.0), data[0]);
        assert!((sample_bilinear(&data, 4, 3, 0.5, 0.0) - 0.5 / 11.0).abs() < 1e-15);
    }

    #[test]
    fn variance_gain_interior_matches_sum_of_squares() {
        let k = gaussian_kernel(1.0);
        let g = clamped_variance_gain(&k, 20);
        let ss: f64 = k.iter().map(|w| w * w).sum();
        assert!((g[10] - ss).abs() < 1e-15);
        assert!(g[0] > ss);
    }
}
