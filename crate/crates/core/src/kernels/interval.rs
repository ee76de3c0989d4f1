use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::error::{Result, StarError};

/// A compact interval `[lo, hi]` with `lo < hi`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "[f64; 2]", into = "[f64; 2]")]
pub struct Interval {
    lo: f64,
    hi: f64,
}

impl Interval {
    pub fn new(lo: f64, hi: f64) -> Result<Self> {
        if lo.is_finite() && hi.is_finite() && lo < hi {
            Ok(Self { lo, hi })
        } else {
            Err(StarError::InvalidInterval { lo, hi })
        }
    }

    /// The unit interval `[0, 1]`.
    pub fn unit() -> Self {
        Self { lo: 0.0, hi: 1.0 }
    }

    pub fn lo(&self) -> f64 {
        self.lo
    }

    pub fn hi(&self) -> f64 {
        self.hi
    }

    pub fn len(&self) -> f64 {
        self.hi - self.lo
    }

    pub fn contains(&self, x: f64) -> bool {
        x >= self.lo && x <= self.hi
    }

    /// Affine map onto `[-1, 1]`.
    #[inline]
    pub fn to_unit(&self, x: f64) -> f64 {
        (2.0 * x - self.lo - self.hi) / (self.hi - self.lo)
    }

    #[inline]
    pub fn from_unit(&self, t: f64) -> f64 {
        0.5 * (self.lo + self.hi) + 0.5 * (self.hi - self.lo) * t
    }

    /// `n` Chebyshev points of the first kind, ascending. These are the probe
    /// points used for deviation and norm checks.
    pub fn chebyshev_points(&self, n: usize) -> Vec<f64> {
        (0..n)
            .map(|j| {
                let t = -((PI * (2 * j + 1) as f64) / (2 * n) as f64).cos();
                self.from_unit(t)
            })
            .collect()
    }

    /// `degree + 1` Chebyshev–Lobatto points `cos(pi j / degree)` in the
    /// order used by interpolation (descending from `hi` to `lo`).
    pub fn lobatto_points(&self, degree: usize) -> Vec<f64> {
        if degree == 0 {
            return vec![self.from_unit(0.0)];
        }
        (0..=degree)
            .map(|j| {
                let t = (PI * j as f64 / degree as f64).cos();
                self.from_unit(t)
            })
            .collect()
    }

    /// `n >= 2` equispaced points including both endpoints.
    pub fn uniform_points(&self, n: usize) -> Vec<f64> {
        let n = n.max(2);
        let h = self.len() / (n - 1) as f64;
        (0..n)
            .map(|i| if i == n - 1 { self.hi } else { self.lo + i as f64 * h })
            .collect()
    }
}

impl TryFrom<[f64; 2]> for Interval {
    type Error = StarError;

    fn try_from(v: [f64; 2]) -> Result<Self> {
        Interval::new(v[0], v[1])
    }
}

impl From<Interval> for [f64; 2] {
    fn from(i: Interval) -> Self {
        [i.lo, i.hi]
    }
}
