//! Proximable nonsmooth terms.
//!
//! Each term returns one deterministic selection from its proximal set:
//! soft thresholding for the l1 norm, hard thresholding (ties go to zero) for
//! the l0 penalty, and coordinatewise clamping for a box indicator.

use nalgebra::DVector;

use super::ProxableFunction;
use crate::error::{check, Error, Result};
use crate::vector::Vector;

/// `sign(z_i) max(|z_i| - gamma lambda, 0)`.
pub fn prox_l1(gamma: f64, lambda: f64, z: &Vector) -> Result<Vector> {
    check::positive("gamma", gamma)?;
    check::positive("lambda", lambda)?;
    Vector::from_dvector(soft_threshold(z, gamma * lambda))
}

/// Keeps `z_i` when `|z_i| > sqrt(2 gamma lambda)`, otherwise returns 0.
pub fn prox_l0(gamma: f64, lambda: f64, z: &Vector) -> Result<Vector> {
    check::positive("gamma", gamma)?;
    check::positive("lambda", lambda)?;
    Vector::from_dvector(hard_threshold(z, (2.0 * gamma * lambda).sqrt()))
}

/// Projection of `z` onto `[lower, upper]`.
pub fn prox_box(lower: &Vector, upper: &Vector, z: &Vector) -> Result<Vector> {
    let b = BoxIndicator::new(lower.clone(), upper.clone())?;
    z.check_dim(b.lower.dim(), "prox_box")?;
    Vector::from_dvector(b.project(z))
}

fn soft_threshold(z: &DVector<f64>, t: f64) -> DVector<f64> {
    z.map(|v| v.signum() * (v.abs() - t).max(0.0))
}

fn hard_threshold(z: &DVector<f64>, t: f64) -> DVector<f64> {
    z.map(|v| if v.abs() > t { v } else { 0.0 })
}

/// `g = 0`.
#[derive(Debug, Clone, Copy, Default)]
pub struct ZeroFunction;

impl ProxableFunction for ZeroFunction {
    fn value(&self, _x: &DVector<f64>) -> f64 {
        0.0
    }

    fn prox(&self, _gamma: f64, z: &DVector<f64>) -> DVector<f64> {
        z.clone()
    }

    fn is_zero(&self) -> bool {
        true
    }

    fn name(&self) -> &'static str {
        "zero"
    }
}

/// `g(x) = lambda ||x||_1`.
#[derive(Debug, Clone, Copy)]
pub struct L1Norm {
    lambda: f64,
}

impl L1Norm {
    pub fn new(lambda: f64) -> Result<Self> {
        check::positive("lambda", lambda)?;
        Ok(L1Norm { lambda })
    }

    pub fn lambda(&self) -> f64 {
        self.lambda
    }
}

impl ProxableFunction for L1Norm {
    fn value(&self, x: &DVector<f64>) -> f64 {
        self.lambda * x.lp_norm(1)
    }

    fn prox(&self, gamma: f64, z: &DVector<f64>) -> DVector<f64> {
        soft_threshold(z, gamma * self.lambda)
    }

    fn name(&self) -> &'static str {
        "l1"
    }
}

/// `g(x) = lambda * #{i : x_i != 0}`. Nonconvex but prox-bounded.
#[derive(Debug, Clone, Copy)]
pub struct L0Penalty {
    lambda: f64,
}

impl L0Penalty {
    pub fn new(lambda: f64) -> Result<Self> {
        check::positive("lambda", lambda)?;
        Ok(L0Penalty { lambda })
    }

    pub fn lambda(&self) -> f64 {
        self.lambda
    }
}

impl ProxableFunction for L0Penalty {
    fn value(&self, x: &DVector<f64>) -> f64 {
        self.lambda * x.iter().filter(|v| **v != 0.0).count() as f64
    }

    fn prox(&self, gamma: f64, z: &DVector<f64>) -> DVector<f64> {
        hard_threshold(z, (2.0 * gamma * self.lambda).sqrt())
    }

    fn name(&self) -> &'static str {
        "l0"
    }
}

/// Indicator of the box `[lower, upper]`; its proximal map ignores `gamma`.
#[derive(Debug, Clone)]
pub struct BoxIndicator {
    lower: Vector,
    upper: Vector,
}

impl BoxIndicator {
    pub fn new(lower: Vector, upper: Vector) -> Result<Self> {
        upper.check_dim(lower.dim(), "box bounds")?;
        if let Some(i) = (0..lower.dim()).find(|&i| lower[i] > upper[i]) {
            return Err(Error::param(
                &format!("lower[{i}]"),
                lower[i],
                &format!("(-inf, upper[{i}] = {}]", upper[i]),
            ));
        }
        Ok(BoxIndicator { lower, upper })
    }

    fn project(&self, z: &DVector<f64>) -> DVector<f64> {
        DVector::from_iterator(
            z.len(),
            z.iter()
                .enumerate()
                .map(|(i, v)| v.clamp(self.lower[i], self.upper[i])),
        )
    }
}

impl ProxableFunction for BoxIndicator {
    fn value(&self, x: &DVector<f64>) -> f64 {
        let inside = x.len() == self.lower.dim()
            && x
                .iter()
                .enumerate()
                .all(|(i, v)| *v >= self.lower[i] && *v <= self.upper[i]);
        if inside {
            0.0
        } else {
            f64::INFINITY
        }
    }

    fn prox(&self, _gamma: f64, z: &DVector<f64>) -> DVector<f64> {
        self.project(z)
    }

    fn name(&self) -> &'static str {
        "box"
    }
}
