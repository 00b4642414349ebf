//! Nonmonotone line-search solvers.
//!
//! All three share the backtracking engine in [`backtrack`] and log into a
//! [`Trace`](crate::trace::Trace). Each solver also records in
//! `Trace::solver_params` the constants under which its iterates satisfy the
//! averaged-decrease and relative-error conditions; the conformance module
//! reads them back through
//! [`documented_constants`](crate::conformance::documented_constants).

pub mod backtrack;
mod nlsa;
mod pgm;
mod rgm;

use nalgebra::DVector;
use serde::{Deserialize, Serialize};

pub use backtrack::{backtrack, Accepted, BacktrackFailure, Trial, MAX_HALVINGS};
pub use nlsa::{nlsa_solve, nlsa_solve_with_direction, NlsaParams};
pub use pgm::{pgm_solve, pgm_witness, PgmParams};
pub use rgm::{rgm_solve, rgm_solve_with_direction, RgmParams};

use crate::error::{Error, Result};

/// Norm above which a run is flagged as possibly unbounded.
pub const UNBOUNDED_NORM: f64 = 1e8;

/// How the first trial step of each iteration is chosen.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum StepRule {
    /// Always the upper end of the admissible interval.
    #[default]
    Constant,
    /// `s^T s / s^T y` from the last move, clipped to the admissible interval.
    BarzilaiBorwein,
}

impl StepRule {
    pub(crate) fn initial_step(
        self,
        lo: f64,
        hi: f64,
        prev: Option<(&DVector<f64>, &DVector<f64>)>,
        cur: (&DVector<f64>, &DVector<f64>),
    ) -> f64 {
        match (self, prev) {
            (StepRule::BarzilaiBorwein, Some((x_prev, g_prev))) => {
                let s = cur.0 - x_prev;
                let y = cur.1 - g_prev;
                let sy = s.dot(&y);
                if sy > 0.0 && sy.is_finite() {
                    (s.norm_squared() / sy).clamp(lo, hi)
                } else {
                    hi
                }
            }
            _ => hi,
        }
    }

    pub(crate) fn label(self) -> &'static str {
        match self {
            StepRule::Constant => "constant",
            StepRule::BarzilaiBorwein => "barzilai_borwein",
        }
    }
}

/// Per-iteration averaging weight (`p_k` or `eta_k`).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum WeightRule {
    Constant(f64),
    /// Values for `k = 0, 1, ...`; the last entry repeats.
    Sequence(Vec<f64>),
}

impl WeightRule {
    pub(crate) fn at(&self, k: usize) -> f64 {
        match self {
            WeightRule::Constant(v) => *v,
            WeightRule::Sequence(s) => s.get(k).or(s.last()).copied().unwrap_or(f64::NAN),
        }
    }

    pub(crate) fn validate(&self, name: &str, lo: f64, hi: f64) -> Result<()> {
        let values: &[f64] = match self {
            WeightRule::Constant(v) => std::slice::from_ref(v),
            WeightRule::Sequence(s) if s.is_empty() => {
                return Err(Error::param(name, "[]", "a non-empty sequence"))
            }
            WeightRule::Sequence(s) => s,
        };
        match values.iter().find(|v| !(**v >= lo && **v <= hi)) {
            Some(bad) => Err(Error::param(name, bad, &format!("[{lo}, {hi}]"))),
            None => Ok(()),
        }
    }
}

/// Checks `<g, d> <= -c1 ||g||^2` and `||d|| <= c2 ||g||` (with rounding slack).
pub(crate) fn check_direction(
    iteration: usize,
    g: &DVector<f64>,
    d: &DVector<f64>,
    c1: f64,
    c2: f64,
) -> Result<()> {
    let gg = g.norm_squared();
    let slack = 1e-12 * gg.max(f64::MIN_POSITIVE);
    let gd = g.dot(d);
    if gd > -c1 * gg + slack {
        return Err(Error::Direction {
            iteration,
            detail: format!("<g, d> = {gd:e} exceeds -c1 ||g||^2 = {:e}", -c1 * gg),
        });
    }
    let (dn, gn) = (d.norm(), gg.sqrt());
    if dn > c2 * gn * (1.0 + 1e-12) {
        return Err(Error::Direction {
            iteration,
            detail: format!("||d|| = {dn:e} exceeds c2 ||g|| = {:e}", c2 * gn),
        });
    }
    Ok(())
}

/// Why a solve stopped.
pub(crate) fn termination_label(converged: bool) -> &'static str {
    if converged {
        "tolerance"
    } else {
        "max_iters"
    }
}
