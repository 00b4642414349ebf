//! Checks that solver traces satisfy the framework conditions, plus the
//! derived constants, the index split and empirical rate fits.

mod conditions;
mod rates;
mod report;

use serde::{Deserialize, Serialize};

pub use conditions::{
    check_eq12, check_h1, check_h2, check_h3, check_h3_with, displacement_bound_excess, BSpec,
    Eq12Report, H1Report, H2Report, H3Report,
};
pub use rates::{
    distance_sequence, estimate_linear_rate, estimate_sublinear_exponent, rate_check, rate_oracle,
    regime_for_theta, DistanceReference, RateCheck, RateFit, Regime, DEFAULT_BURN_IN,
    LINEAR_MIN_R2, MIN_FIT_POINTS, SUBLINEAR_SLOPE_TOL,
};
pub use report::{
    run_conformance, ConformanceOptions, ConformanceReport, FrameworkConstants, DEFAULT_H3_WINDOW,
    FINAL_TAIL_WINDOW,
};

use crate::error::{Error, Result};
use crate::schedule::{ErrorSchedule, PositiveSequence};
use crate::trace::Trace;

/// Verdict of one check.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "status", rename_all = "snake_case")]
pub enum Verdict {
    Pass,
    /// First failing index and its residual.
    Fail { k: usize, residual: f64 },
    /// The finite trace does not allow a decision.
    Inconclusive { reason: String },
}

impl Verdict {
    pub fn passed(&self) -> bool {
        matches!(self, Verdict::Pass)
    }
}

/// `K1 = {k : Phi(x^k) <= C_{k+m}}` and its complement over `0..=K-m`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct IndexSplit {
    pub m: usize,
    pub k1: Vec<usize>,
    pub k2: Vec<usize>,
}

/// Splits `0..=K-m`; indices whose `k + m` would run past the trace are left out.
pub fn split_k1_k2(trace: &Trace, m: usize) -> Result<IndexSplit> {
    if m == 0 {
        return Err(Error::param("m", m, "[1,inf)"));
    }
    let r = &trace.records;
    let (mut k1, mut k2) = (Vec::new(), Vec::new());
    for k in 0..r.len().saturating_sub(m) {
        if r[k].phi <= r[k + m].c {
            k1.push(k);
        } else {
            k2.push(k);
        }
    }
    Ok(IndexSplit { m, k1, k2 })
}

/// Constants under which a solver's own trace satisfies the conditions,
/// read back from the metadata the solver recorded.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DocumentedConstants {
    pub solver: String,
    pub a_lower: f64,
    pub tau: f64,
    pub k1: usize,
    pub b: BSpec,
    /// Per-iteration `a_k` for the `B_bar` estimate.
    pub a_seq: PositiveSequence,
    pub eps: ErrorSchedule,
}

fn required(trace: &Trace, key: &str) -> Result<f64> {
    trace
        .param_f64(key)
        .ok_or_else(|| Error::Input(format!("trace metadata lacks `{key}`")))
}

/// Reads the solver's recorded constants.
///
/// For the Armijo method `a_k = beta_s / (alpha_{k-1}^2 c2^2)` and
/// `b_k = c1 alpha_k` come from the recorded steps (record `k` holds the step
/// into `x^k`, so `alpha_k` is the step of record `k + 1`).
pub fn documented_constants(trace: &Trace) -> Result<DocumentedConstants> {
    let solver = trace
        .param_str("solver")
        .ok_or_else(|| Error::Input("trace metadata lacks `solver`".into()))?
        .to_string();
    let a_lower = required(trace, "h1_a_lower")?;
    let tau = required(trace, "h1_tau")?;
    let k1 = required(trace, "h2_k1")? as usize;
    let (b, a_seq) = match solver.as_str() {
        "pgm" => (
            BSpec::Multiplier(required(trace, "h2_b_multiplier")?),
            PositiveSequence::constant(a_lower),
        ),
        "rgm" => (
            BSpec::Divisor(PositiveSequence::constant(required(trace, "h2_b")?)),
            PositiveSequence::constant(a_lower),
        ),
        "nlsa" => {
            let beta_s = required(trace, "beta_strong")?;
            let c1 = required(trace, "c1")?;
            let c2 = required(trace, "c2")?;
            let steps = trace.steps();
            let a: Vec<f64> = steps
                .iter()
                .enumerate()
                .map(|(k, s)| if k == 0 { a_lower } else { beta_s / (s * s * c2 * c2) })
                .collect();
            let b: Vec<f64> = (0..steps.len())
                .map(|k| c1 * steps.get(k + 1).copied().unwrap_or(steps[steps.len() - 1]))
                .collect();
            (BSpec::Divisor(PositiveSequence::values(b)), PositiveSequence::values(a))
        }
        other => return Err(Error::Input(format!("unknown solver `{other}` in trace metadata"))),
    };
    Ok(DocumentedConstants {
        solver,
        a_lower,
        tau,
        k1,
        b,
        a_seq,
        eps: ErrorSchedule::Zero,
    })
}
