//! Displacement fields: per-frame turbulence tilts and object motion.

use crate::error::{Error, Result};

/// Largest per-pixel temporal mean displacement a turbulence field may carry.
pub const ZERO_MEAN_TOL: f64 = 1e-6;

/// Per-pixel, per-frame tilt vectors `(dx, dy)` in pixels, indexed `(frame, y, x)`.
#[derive(Clone, Debug, PartialEq)]
pub struct TurbulenceField {
    width: usize,
    height: usize,
    n_frames: usize,
    displacement: Vec<[f64; 2]>,
    max_tilt: f64,
}

impl TurbulenceField {
    /// Validates the zero temporal mean at every pixel and the `max_tilt` bound.
    pub fn new(
        width: usize,
        height: usize,
        n_frames: usize,
        displacement: Vec<[f64; 2]>,
        max_tilt: f64,
    ) -> Result<Self> {
        let plane = width * height;
        if plane == 0 || n_frames == 0 {
            return Err(Error::InvalidField("empty turbulence field".into()));
        }
        if displacement.len() != plane * n_frames {
            return Err(Error::LengthMismatch {
                expected: plane * n_frames,
                found: displacement.len(),
            });
        }
        if !(max_tilt.is_finite() && max_tilt >= 0.0) {
            return Err(Error::InvalidField(format!("max_tilt {max_tilt} invalid")));
        }
        for (i, d) in displacement.iter().enumerate() {
            let m = d[0].hypot(d[1]);
            if !m.is_finite() || m > max_tilt {
                return Err(Error::InvalidField(format!(
                    "displacement {i} has magnitude {m} above bound {max_tilt}"
                )));
            }
        }
        for p in 0..plane {
            let (mut sx, mut sy) = (0.0, 0.0);
            for k in 0..n_frames {
                let d = displacement[k * plane + p];
                sx += d[0];
                sy += d[1];
            }
            let mean = (sx / n_frames as f64).hypot(sy / n_frames as f64);
            if mean > ZERO_MEAN_TOL {
                return Err(Error::InvalidField(format!(
                    "pixel {p} has temporal mean displacement {mean}"
                )));
            }
        }
        Ok(Self {
            width,
            height,
            n_frames,
            displacement,
            max_tilt,
        })
    }

    pub fn zeros(width: usize, height: usize, n_frames: usize) -> Result<Self> {
        Self::new(width, height, n_frames, vec![[0.0; 2]; width * height * n_frames], 0.0)
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn n_frames(&self) -> usize {
        self.n_frames
    }

    pub fn max_tilt(&self) -> f64 {
        self.max_tilt
    }

    pub fn displacement(&self) -> &[[f64; 2]] {
        &self.displacement
    }

    pub fn slice(&self, k: usize) -> TiltSlice<'_> {
        let plane = self.width * self.height;
        TiltSlice {
            width: self.width,
            height: self.height,
            data: &self.displacement[k * plane..(k + 1) * plane],
        }
    }

    /// Largest per-pixel temporal mean magnitude.
    pub fn max_temporal_mean(&self) -> f64 {
        let plane = self.width * self.height;
        (0..plane)
            .map(|p| {
                let (mut sx, mut sy) = (0.0, 0.0);
                for k in 0..self.n_frames {
                    let d = self.displacement[k * plane + p];
                    sx += d[0];
                    sy += d[1];
                }
                (sx / self.n_frames as f64).hypot(sy / self.n_frames as f64)
            })
            .fold(0.0, f64::max)
    }

    /// Root mean square of the displacement magnitude over all pixels and frames.
    pub fn rms(&self) -> f64 {
        let ss: f64 = self.displacement.iter().map(|d| d[0] * d[0] + d[1] * d[1]).sum();
        (ss / self.displacement.len() as f64).sqrt()
    }
}

/// One frame's worth of tilt vectors.
#[derive(Clone, Copy, Debug)]
pub struct TiltSlice<'a> {
    width: usize,
    height: usize,
    data: &'a [[f64; 2]],
}

impl<'a> TiltSlice<'a> {
    pub fn new(width: usize, height: usize, data: &'a [[f64; 2]]) -> Result<Self> {
        if data.len() != width * height {
            return Err(Error::LengthMismatch {
                expected: width * height,
                found: data.len(),
            });
        }
        Ok(Self { width, height, data })
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn get(&self, x: usize, y: usize) -> [f64; 2] {
        self.data[y * self.width + x]
    }
}

/// Per-pixel velocity in px/frame with a validity mask.
#[derive(Clone, Debug, PartialEq)]
pub struct MotionField {
    width: usize,
    height: usize,
    velocity: Vec<[f32; 2]>,
    valid: Vec<bool>,
}

impl MotionField {
    pub fn new(width: usize, height: usize, velocity: Vec<[f32; 2]>, valid: Vec<bool>) -> Result<Self> {
        let n = width * height;
        if velocity.len() != n || valid.len() != n {
            return Err(Error::LengthMismatch {
                expected: n,
                found: velocity.len().min(valid.len()),
            });
        }
        for (i, (v, &ok)) in velocity.iter().zip(&valid).enumerate() {
            if ok && !(v[0].is_finite() && v[1].is_finite()) {
                return Err(Error::InvalidField(format!("non-finite velocity at pixel {i}")));
            }
            if !ok && (v[0] != 0.0 || v[1] != 0.0) {
                return Err(Error::InvalidField(format!("invalid pixel {i} carries a velocity")));
            }
        }
        Ok(Self {
            width,
            height,
            velocity,
            valid,
        })
    }

    pub fn invalid(width: usize, height: usize) -> Self {
        Self {
            width,
            height,
            velocity: vec![[0.0; 2]; width * height],
            valid: vec![false; width * height],
        }
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

    pub fn velocity(&self) -> &[[f32; 2]] {
        &self.velocity
    }

    pub fn valid(&self) -> &[bool] {
        &self.valid
    }

    pub fn get(&self, x: usize, y: usize) -> Option<[f32; 2]> {
        let i = y * self.width + x;
        self.valid[i].then_some(self.velocity[i])
    }

    pub fn valid_count(&self) -> usize {
        self.valid.iter().filter(|&&v| v).count()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn nonzero_mean_rejected() {
        let d = vec![[0.5, 0.0], [0.5, 0.0]];
        assert!(TurbulenceField::new(1, 1, 2, d, 1.0).is_err());
        let d = vec![[0.5, 0.0], [-0.5, 0.0]];
        let f = TurbulenceField::new(1, 1, 2, d, 1.0).unwrap();
        assert_eq!(f.max_temporal_mean(), 0.0);
        assert!((f.rms() - 0.5).abs() < 1e-15);
    }

    #[test]
    fn bound_enforced() {
        let d = vec![[1.0, 1.0], [-1.0, -1.0]];
        assert!(TurbulenceField::new(1, 1, 2, d, 1.0).is_err());
    }

    #[test]
    fn motion_field_invalid_must_be_zero() {
        assert!(MotionField::new(1, 1, vec![[1.0, 0.0]], vec![false]).is_err());
        assert!(MotionField::new(1, 1, vec![[f32::NAN, 0.0]], vec![true]).is_err());
        let f = MotionField::new(2, 1, vec![[1.0, -1.0], [0.0, 0.0]], vec![true, false]).unwrap();
        assert_eq!(f.get(0, 0), Some([1.0, -1.0]));
        assert_eq!(f.get(1, 0), None);
    }
}
