//! Known Kurdyka-Lojasiewicz data of a test problem.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// KL exponent and constants at a critical point: the desingularizer is
/// `phi(t) = c * t^(1 - theta)` on `[0, eta)`, valid in the ball of radius `delta`.
///
/// `None` for `eta` or `delta` means unbounded.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct KlProfile {
    pub theta: f64,
    pub c_coeff: f64,
    pub eta: Option<f64>,
    pub delta: Option<f64>,
}

impl KlProfile {
    pub fn new(theta: f64, c_coeff: f64, eta: Option<f64>, delta: Option<f64>) -> Result<Self> {
        if !(0.0..1.0).contains(&theta) {
            return Err(Error::param("theta", theta, "[0,1)"));
        }
        if !(c_coeff > 0.0 && c_coeff.is_finite()) {
            return Err(Error::param("c_coeff", c_coeff, "(0,inf)"));
        }
        for (name, v) in [("eta", eta), ("delta", delta)] {
            if let Some(v) = v {
                if !(v > 0.0) {
                    return Err(Error::param(name, v, "(0,inf]"));
                }
            }
        }
        Ok(KlProfile {
            theta,
            c_coeff,
            eta,
            delta,
        })
    }

    /// `phi(t) = c t^(1-theta)`.
    pub fn desingularizer(&self, t: f64) -> f64 {
        self.c_coeff * t.powf(1.0 - self.theta)
    }

    /// `phi'(t) = c (1-theta) t^(-theta)` for `t > 0`.
    pub fn desingularizer_derivative(&self, t: f64) -> f64 {
        self.c_coeff * (1.0 - self.theta) * t.powf(-self.theta)
    }

    /// Left side of the KL inequality, `phi'(gap) * dist`; the property asks for `>= 1`.
    pub fn kl_lhs(&self, value_gap: f64, subgrad_dist: f64) -> f64 {
        self.desingularizer_derivative(value_gap) * subgrad_dist
    }
}
