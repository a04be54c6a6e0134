use nalgebra::DVector;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// A point `z = (x, y)` with a minimizing block `x` and a maximizing block `y`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SplitPoint {
    #[serde(with = "crate::numerics::serde_vector")]
    pub x: DVector<f64>,
    #[serde(with = "crate::numerics::serde_vector")]
    pub y: DVector<f64>,
}

impl SplitPoint {
    pub fn new(x: DVector<f64>, y: DVector<f64>) -> Self {
        Self { x, y }
    }

    pub fn from_slices(x: &[f64], y: &[f64]) -> Self {
        Self::new(DVector::from_column_slice(x), DVector::from_column_slice(y))
    }

    /// Scalar convenience constructor for `n = m = 1`.
    pub fn scalar(x: f64, y: f64) -> Self {
        Self::from_slices(&[x], &[y])
    }

    pub fn zeros(n: usize, m: usize) -> Self {
        Self::new(DVector::zeros(n), DVector::zeros(m))
    }

    /// Splits a stacked vector `[x; y]` after the first `n` entries.
    pub fn from_stacked(v: &DVector<f64>, n: usize) -> Self {
        let m = v.len() - n;
        Self::new(v.rows(0, n).into_owned(), v.rows(n, m).into_owned())
    }

    pub fn stacked(&self) -> DVector<f64> {
        let (n, m) = self.dims();
        let mut v = DVector::zeros(n + m);
        v.rows_mut(0, n).copy_from(&self.x);
        v.rows_mut(n, m).copy_from(&self.y);
        v
    }

    pub fn dims(&self) -> (usize, usize) {
        (self.x.len(), self.y.len())
    }

    pub fn is_finite(&self) -> bool {
        self.x.iter().chain(self.y.iter()).all(|v| v.is_finite())
    }

    pub fn norm(&self) -> f64 {
        (self.x.norm_squared() + self.y.norm_squared()).sqrt()
    }

    pub fn dist(&self, other: &SplitPoint) -> f64 {
        ((&self.x - &other.x).norm_squared() + (&self.y - &other.y).norm_squared()).sqrt()
    }

    /// `(1 - t) * self + t * other`.
    pub fn lerp(&self, other: &SplitPoint, t: f64) -> SplitPoint {
        SplitPoint::new(
            &self.x * (1.0 - t) + &other.x * t,
            &self.y * (1.0 - t) + &other.y * t,
        )
    }

    pub fn check(&self, n: usize, m: usize) -> Result<()> {
        if self.x.len() != n {
            return Err(Error::Dimension { expected: n, got: self.x.len() });
        }
        if self.y.len() != m {
            return Err(Error::Dimension { expected: m, got: self.y.len() });
        }
        if !self.is_finite() {
            return Err(Error::NonFinite(format!("point {:?}", self.stacked().as_slice())));
        }
        Ok(())
    }
}

/// Block vector pair, used for gradients `(∇ₓ, ∇ᵧ)`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BlockVector {
    #[serde(with = "crate::numerics::serde_vector")]
    pub x: DVector<f64>,
    #[serde(with = "crate::numerics::serde_vector")]
    pub y: DVector<f64>,
}

impl BlockVector {
    pub fn norm(&self) -> f64 {
        (self.x.norm_squared() + self.y.norm_squared()).sqrt()
    }

    pub fn stacked(&self) -> DVector<f64> {
        SplitPoint::new(self.x.clone(), self.y.clone()).stacked()
    }

    pub fn dist(&self, other: &BlockVector) -> f64 {
        ((&self.x - &other.x).norm_squared() + (&self.y - &other.y).norm_squared()).sqrt()
    }
}
