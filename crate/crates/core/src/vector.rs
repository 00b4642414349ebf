//! Finite real vectors.

use std::ops::Deref;

use nalgebra::DVector;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// A dense real vector whose coordinates are all finite.
///
/// Construction rejects NaN and infinities, so every public operation taking a
/// `Vector` can rely on finite input. Arithmetic is done on the underlying
/// [`DVector`], available through `Deref`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "Vec<f64>", into = "Vec<f64>")]
pub struct Vector(DVector<f64>);

impl Vector {
    pub fn new(coords: Vec<f64>) -> Result<Self> {
        Self::from_dvector(DVector::from_vec(coords))
    }

    pub fn from_dvector(v: DVector<f64>) -> Result<Self> {
        if v.is_empty() {
            return Err(Error::Precondition("vector must have dimension >= 1".into()));
        }
        if v.iter().any(|c| !c.is_finite()) {
            return Err(Error::non_finite("vector coordinates"));
        }
        Ok(Vector(v))
    }

    pub fn from_slice(coords: &[f64]) -> Result<Self> {
        Self::new(coords.to_vec())
    }

    pub fn zeros(n: usize) -> Self {
        Vector(DVector::zeros(n.max(1)))
    }

    /// The `i`-th standard basis vector of dimension `n`.
    pub fn basis(n: usize, i: usize) -> Self {
        let mut v = DVector::zeros(n.max(1));
        v[i] = 1.0;
        Vector(v)
    }

    pub fn dim(&self) -> usize {
        self.0.len()
    }

    pub fn as_dvector(&self) -> &DVector<f64> {
        &self.0
    }

    pub fn into_dvector(self) -> DVector<f64> {
        self.0
    }

    pub fn to_vec(&self) -> Vec<f64> {
        self.0.iter().copied().collect()
    }

    pub fn distance(&self, other: &Vector) -> f64 {
        (&self.0 - &other.0).norm()
    }

    pub(crate) fn check_dim(&self, n: usize, context: &str) -> Result<()> {
        if self.dim() == n {
            Ok(())
        } else {
            Err(Error::Dimension {
                context: context.to_string(),
                expected: n,
                got: self.dim(),
            })
        }
    }
}

impl Deref for Vector {
    type Target = DVector<f64>;

    fn deref(&self) -> &DVector<f64> {
        &self.0
    }
}

impl TryFrom<Vec<f64>> for Vector {
    type Error = Error;

    fn try_from(v: Vec<f64>) -> Result<Self> {
        Vector::new(v)
    }
}

impl TryFrom<DVector<f64>> for Vector {
    type Error = Error;

    fn try_from(v: DVector<f64>) -> Result<Self> {
        Vector::from_dvector(v)
    }
}

impl From<Vector> for Vec<f64> {
    fn from(v: Vector) -> Self {
        v.to_vec()
    }
}
