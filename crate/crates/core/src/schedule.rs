//! Error schedules `eps_k` and positive weight sequences (`a_k`, `b_k`).

use serde::{Deserialize, Serialize};

use crate::error::{check, Error, Result};

/// Summable error schedule for the relative-error condition.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum ErrorSchedule {
    /// `eps_k = 0`.
    Zero,
    /// `eps_k = scale * ratio^k`, `ratio` in `(0,1)`.
    Geometric { scale: f64, ratio: f64 },
    /// `eps_k = scale * k^(theta / (1 - 2 theta))`, `theta` in `(1/2, 1)`.
    Power { scale: f64, theta: f64 },
}

impl ErrorSchedule {
    pub fn geometric(scale: f64, ratio: f64) -> Result<Self> {
        let s = ErrorSchedule::Geometric { scale, ratio };
        s.validate()?;
        Ok(s)
    }

    pub fn power(scale: f64, theta: f64) -> Result<Self> {
        let s = ErrorSchedule::Power { scale, theta };
        s.validate()?;
        Ok(s)
    }

    pub fn validate(&self) -> Result<()> {
        match *self {
            ErrorSchedule::Zero => Ok(()),
            ErrorSchedule::Geometric { scale, ratio } => {
                check::positive("eps.scale", scale)?;
                check::open_unit("eps.ratio", ratio)
            }
            ErrorSchedule::Power { scale, theta } => {
                check::positive("eps.scale", scale)?;
                if theta > 0.5 && theta < 1.0 {
                    Ok(())
                } else {
                    Err(Error::param("eps.theta", theta, "(1/2,1)"))
                }
            }
        }
    }

    /// `eps_k` for `k >= 1`; `k = 0` is treated as `k = 1` for the power family.
    pub fn eval(&self, k: usize) -> f64 {
        match *self {
            ErrorSchedule::Zero => 0.0,
            ErrorSchedule::Geometric { scale, ratio } => scale * ratio.powi(k as i32),
            ErrorSchedule::Power { scale, theta } => {
                scale * (k.max(1) as f64).powf(Self::power_exponent(theta))
            }
        }
    }

    fn power_exponent(theta: f64) -> f64 {
        theta / (1.0 - 2.0 * theta)
    }

    /// Closed-form upper bound on `sum_{k>=1} eps_k`.
    ///
    /// Geometric: `scale * ratio / (1 - ratio)`. Power with exponent `p < -1`:
    /// `scale * (1 + 1/(-p - 1))` from the integral comparison test.
    pub fn sum_bound(&self) -> f64 {
        match *self {
            ErrorSchedule::Zero => 0.0,
            ErrorSchedule::Geometric { scale, ratio } => scale * ratio / (1.0 - ratio),
            ErrorSchedule::Power { scale, theta } => {
                let p = Self::power_exponent(theta);
                scale * (1.0 + 1.0 / (-p - 1.0))
            }
        }
    }

    /// Every family here is summable; the power family because its exponent is below -1.
    pub fn is_summable(&self) -> bool {
        match *self {
            ErrorSchedule::Zero | ErrorSchedule::Geometric { .. } => true,
            ErrorSchedule::Power { theta, .. } => Self::power_exponent(theta) < -1.0,
        }
    }
}

/// Whether `sum_k s_k` diverges, and how that was decided.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SumBehavior {
    Diverges,
    Converges,
    /// Only a finite prefix is known; its second half still carries a fair share of the sum.
    EstimatedDiverges,
    /// Only a finite prefix is known; nearly all of the sum sits in its first half.
    EstimatedConverges,
}

impl SumBehavior {
    pub fn diverges(self) -> bool {
        matches!(self, SumBehavior::Diverges | SumBehavior::EstimatedDiverges)
    }

    pub fn is_estimate(self) -> bool {
        matches!(
            self,
            SumBehavior::EstimatedDiverges | SumBehavior::EstimatedConverges
        )
    }
}

/// A positive sequence indexed by iteration `k`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum PositiveSequence {
    Constant { value: f64 },
    /// `scale * ratio^k`.
    Geometric { scale: f64, ratio: f64 },
    /// `scale * k^exponent` (with `k = 0` read as `k = 1`).
    Power { scale: f64, exponent: f64 },
    /// Explicit values `v[k]`; indices past the end repeat the last entry.
    Values { values: Vec<f64> },
}

impl PositiveSequence {
    pub fn constant(value: f64) -> Self {
        PositiveSequence::Constant { value }
    }

    pub fn values(values: Vec<f64>) -> Self {
        PositiveSequence::Values { values }
    }

    pub fn eval(&self, k: usize) -> f64 {
        match self {
            PositiveSequence::Constant { value } => *value,
            PositiveSequence::Geometric { scale, ratio } => scale * ratio.powi(k as i32),
            PositiveSequence::Power { scale, exponent } => {
                scale * (k.max(1) as f64).powf(*exponent)
            }
            PositiveSequence::Values { values } => match values.get(k) {
                Some(v) => *v,
                None => values.last().copied().unwrap_or(f64::NAN),
            },
        }
    }

    pub fn validate(&self, name: &str) -> Result<()> {
        let ok = match self {
            PositiveSequence::Constant { value } => *value > 0.0 && value.is_finite(),
            PositiveSequence::Geometric { scale, ratio } => *scale > 0.0 && *ratio > 0.0,
            PositiveSequence::Power { scale, .. } => *scale > 0.0,
            PositiveSequence::Values { values } => {
                !values.is_empty() && values.iter().all(|v| *v > 0.0 && !v.is_nan())
            }
        };
        if ok {
            Ok(())
        } else {
            Err(Error::param(name, format!("{self:?}"), "positive sequence"))
        }
    }

    /// Divergence of `sum_{k>=1} s_k`, analytic for the named families.
    pub fn sum_behavior(&self) -> SumBehavior {
        match self {
            PositiveSequence::Constant { .. } => SumBehavior::Diverges,
            PositiveSequence::Geometric { ratio, .. } => {
                if *ratio >= 1.0 {
                    SumBehavior::Diverges
                } else {
                    SumBehavior::Converges
                }
            }
            PositiveSequence::Power { exponent, .. } => {
                if *exponent >= -1.0 {
                    SumBehavior::Diverges
                } else {
                    SumBehavior::Converges
                }
            }
            PositiveSequence::Values { values } => {
                // a summable sequence puts almost all of its mass in the first half;
                // k^-1 over 100 terms still keeps about 15% in the second
                let half = values.len() / 2;
                let head: f64 = values[..half].iter().sum();
                let tail: f64 = values[half..].iter().sum();
                if tail >= 0.05 * head {
                    SumBehavior::EstimatedDiverges
                } else {
                    SumBehavior::EstimatedConverges
                }
            }
        }
    }
}
