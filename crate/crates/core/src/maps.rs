//! Per-pixel analysis maps: polarity-alternation counts, gradients and tube fits.

use crate::error::{Error, Result};

/// Polarity-alternation pair counts accumulated over a time window.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct PaepMap {
    width: usize,
    height: usize,
    count: Vec<u32>,
    window: u64,
}

impl PaepMap {
    pub fn new(width: usize, height: usize, count: Vec<u32>, window: u64) -> Result<Self> {
        if count.len() != width * height {
            return Err(Error::LengthMismatch {
                expected: width * height,
                found: count.len(),
            });
        }
        Ok(Self {
            width,
            height,
            count,
            window,
        })
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

    pub fn counts(&self) -> &[u32] {
        &self.count
    }

    pub fn get(&self, x: usize, y: usize) -> u32 {
        self.count[y * self.width + x]
    }

    /// Window duration in microseconds.
    pub fn window(&self) -> u64 {
        self.window
    }

    pub fn max_count(&self) -> u32 {
        self.count.iter().copied().max().unwrap_or(0)
    }

    pub fn total(&self) -> u64 {
        self.count.iter().map(|&c| c as u64).sum()
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct GradientMap {
    width: usize,
    height: usize,
    magnitude: Vec<f64>,
    direction: Option<Vec<f64>>,
}

impl GradientMap {
    pub fn new(width: usize, height: usize, magnitude: Vec<f64>, direction: Option<Vec<f64>>) -> Result<Self> {
        let n = width * height;
        if magnitude.len() != n {
            return Err(Error::LengthMismatch {
                expected: n,
                found: magnitude.len(),
            });
        }
        if let Some(d) = &direction {
            if d.len() != n {
                return Err(Error::LengthMismatch {
                    expected: n,
                    found: d.len(),
                });
            }
        }
        if let Some(i) = magnitude.iter().position(|m| !(m.is_finite() && *m >= 0.0)) {
            return Err(Error::InvalidField(format!(
                "gradient magnitude {} at pixel {i}",
                magnitude[i]
            )));
        }
        Ok(Self {
            width,
            height,
            magnitude,
            direction,
        })
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

    pub fn magnitude(&self) -> &[f64] {
        &self.magnitude
    }

    /// Radians, `atan2(gy, gx)`.
    pub fn direction(&self) -> Option<&[f64]> {
        self.direction.as_deref()
    }

    pub fn get(&self, x: usize, y: usize) -> f64 {
        self.magnitude[y * self.width + x]
    }

    pub fn max_magnitude(&self) -> f64 {
        self.magnitude.iter().copied().fold(0.0, f64::max)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum TubeLabel {
    Tube,
    Turbulence,
    Empty,
}

impl TubeLabel {
    pub fn code(self) -> u8 {
        match self {
            TubeLabel::Empty => 0,
            TubeLabel::Turbulence => 1,
            TubeLabel::Tube => 2,
        }
    }

    pub fn from_code(code: u8) -> Result<Self> {
        match code {
            0 => Ok(TubeLabel::Empty),
            1 => Ok(TubeLabel::Turbulence),
            2 => Ok(TubeLabel::Tube),
            c => Err(Error::Corrupt(format!("unknown tube label code {c}"))),
        }
    }
}

/// Unit of the stored tube velocities.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum VelocityUnit {
    /// Pixels per frame, for frames `dt_us` microseconds apart.
    PxPerFrame {
        dt_us: u64,
    },
    PxPerMs,
}

impl VelocityUnit {
    /// Multiplier turning px/µs into this unit.
    pub fn scale_from_px_per_us(self) -> f64 {
        match self {
            VelocityUnit::PxPerFrame { dt_us } => dt_us as f64,
            VelocityUnit::PxPerMs => 1000.0,
        }
    }
}

/// One linear trajectory fit per pixel.
#[derive(Clone, Debug, PartialEq)]
pub struct TubeFitMap {
    width: usize,
    height: usize,
    t0: u64,
    base: Vec<[f64; 2]>,
    velocity: Vec<[f64; 2]>,
    residual: Vec<f64>,
    support: Vec<u32>,
    label: Vec<TubeLabel>,
    tol: f64,
    unit: VelocityUnit,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct TubeFit {
    pub base: [f64; 2],
    pub velocity: [f64; 2],
    pub residual: f64,
    pub support: u32,
    pub label: TubeLabel,
}

impl TubeFit {
    pub const EMPTY: TubeFit = TubeFit {
        base: [0.0; 2],
        velocity: [0.0; 2],
        residual: 0.0,
        support: 0,
        label: TubeLabel::Empty,
    };
}

impl TubeFitMap {
    /// Enforces `Empty <=> support == 0` and `Tube => residual <= tol`.
    pub fn new(width: usize, height: usize, t0: u64, fits: Vec<TubeFit>, tol: f64, unit: VelocityUnit) -> Result<Self> {
        let n = width * height;
        if fits.len() != n {
            return Err(Error::LengthMismatch {
                expected: n,
                found: fits.len(),
            });
        }
        for (i, f) in fits.iter().enumerate() {
            if (f.label == TubeLabel::Empty) != (f.support == 0) {
                return Err(Error::InvalidField(format!(
                    "pixel {i}: label {:?} with support {}",
                    f.label, f.support
                )));
            }
            if f.label == TubeLabel::Tube && (f.residual.is_nan() || f.residual > tol) {
                return Err(Error::InvalidField(format!(
                    "pixel {i}: tube residual {} above tolerance {tol}",
                    f.residual
                )));
            }
        }
        let mut map = Self {
            width,
            height,
            t0,
            base: Vec::with_capacity(n),
            velocity: Vec::with_capacity(n),
            residual: Vec::with_capacity(n),
            support: Vec::with_capacity(n),
            label: Vec::with_capacity(n),
            tol,
            unit,
        };
        for f in fits {
            map.base.push(f.base);
            map.velocity.push(f.velocity);
            map.residual.push(f.residual);
            map.support.push(f.support);
            map.label.push(f.label);
        }
        Ok(map)
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

    pub fn t0(&self) -> u64 {
        self.t0
    }

    pub fn tol(&self) -> f64 {
        self.tol
    }

    pub fn unit(&self) -> VelocityUnit {
        self.unit
    }

    pub fn base(&self) -> &[[f64; 2]] {
        &self.base
    }

    pub fn velocity(&self) -> &[[f64; 2]] {
        &self.velocity
    }

    pub fn residual(&self) -> &[f64] {
        &self.residual
    }

    pub fn support(&self) -> &[u32] {
        &self.support
    }

    pub fn labels(&self) -> &[TubeLabel] {
        &self.label
    }

    pub fn fit(&self, i: usize) -> TubeFit {
        TubeFit {
            base: self.base[i],
            velocity: self.velocity[i],
            residual: self.residual[i],
            support: self.support[i],
            label: self.label[i],
        }
    }

    pub fn count(&self, label: TubeLabel) -> usize {
        self.label.iter().filter(|&&l| l == label).count()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn tube_map_invariants() {
        let unit = VelocityUnit::PxPerMs;
        let empty_with_support = TubeFit {
            support: 3,
            ..TubeFit::EMPTY
        };
        assert!(TubeFitMap::new(1, 1, 0, vec![empty_with_support], 1.0, unit).is_err());
        let loose_tube = TubeFit {
            support: 9,
            residual: 2.0,
            label: TubeLabel::Tube,
            ..TubeFit::EMPTY
        };
        assert!(TubeFitMap::new(1, 1, 0, vec![loose_tube], 1.0, unit).is_err());
        let turb_without_support = TubeFit {
            label: TubeLabel::Turbulence,
            ..TubeFit::EMPTY
        };
        assert!(TubeFitMap::new(1, 1, 0, vec![turb_without_support], 1.0, unit).is_err());
        assert!(TubeFitMap::new(1, 1, 0, vec![TubeFit::EMPTY], 1.0, unit).is_ok());
    }

    #[test]
    fn gradient_map_rejects_negative() {
        assert!(GradientMap::new(1, 1, vec![-1.0], None).is_err());
    }

    #[test]
    fn label_codes_round_trip() {
        for l in [TubeLabel::Empty, TubeLabel::Turbulence, TubeLabel::Tube] {
            assert_eq!(TubeLabel::from_code(l.code()).unwrap(), l);
        }
        assert!(TubeLabel::from_code(7).is_err());
    }
}
