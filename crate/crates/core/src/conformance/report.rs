use serde::{Deserialize, Serialize};

use super::{
    check_eq12, check_h1, check_h2, check_h3, displacement_bound_excess, distance_sequence,
    documented_constants, rate_check, split_k1_k2, BSpec, Eq12Report, H1Report, H2Report,
    H3Report, IndexSplit, RateCheck, Regime, Verdict, DEFAULT_BURN_IN,
};
use crate::constants::{c_hat, c_hat1, compute_m};
use crate::error::{Error, Result};
use crate::schedule::{ErrorSchedule, PositiveSequence};
use crate::trace::{SandwichViolation, Trace};
use crate::vector::Vector;

pub const DEFAULT_H3_WINDOW: usize = 10;

/// Number of trailing displacements summed for the final tail sum.
pub const FINAL_TAIL_WINDOW: usize = 5;

/// Overrides and extras for [`run_conformance`]. Anything left `None` comes
/// from the solver metadata, or is estimated from the trace if that is absent.
#[derive(Debug, Clone, Default)]
pub struct ConformanceOptions {
    pub k1: Option<usize>,
    pub a_lower: Option<f64>,
    pub tau: Option<f64>,
    pub b: Option<BSpec>,
    pub eps: Option<ErrorSchedule>,
    pub h3_window: Option<usize>,
    pub burn_in_fraction: Option<f64>,
    pub expected_regime: Option<Regime>,
    pub minimizer: Option<Vector>,
    /// Treat `x*` and `-x*` as the same limit (sphere problems).
    pub sign_invariant: bool,
}

/// Derived framework constants.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FrameworkConstants {
    pub m: u64,
    pub c_hat: f64,
    pub c_hat1: f64,
    pub a_lower_used: f64,
    pub tau_used: f64,
    pub k1: usize,
    pub b_bar_estimate: f64,
    /// `documented`, `supplied` or `estimated`.
    pub source: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SandwichReport {
    pub passed: bool,
    pub violation: Option<SandwichViolation>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DisplacementReport {
    pub passed: bool,
    /// Largest excess of summed displacements over the merit-decrement bound.
    pub max_excess: f64,
    pub range: Option<(usize, usize)>,
    /// Sum of the last `window` displacements.
    pub final_tail_sum: f64,
    pub window: usize,
}

/// Everything the conformance suite found on one trace.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConformanceReport {
    pub problem_id: String,
    pub solver: Option<String>,
    pub sandwich: SandwichReport,
    pub h1: H1Report,
    pub h2: H2Report,
    pub h3: H3Report,
    pub eq12: Eq12Report,
    pub constants: FrameworkConstants,
    pub k1k2: IndexSplit,
    pub displacement: DisplacementReport,
    pub rate_fits: Vec<RateCheck>,
}

impl ConformanceReport {
    /// True iff every check passed. An inconclusive H3 surrogate counts as not passed.
    pub fn passed(&self) -> bool {
        self.conditions_passed() && self.rates_passed()
    }

    pub fn conditions_passed(&self) -> bool {
        self.sandwich.passed
            && self.h1.verdict.passed()
            && self.h2.verdict.passed()
            && self.h3.verdict.passed()
            && self.eq12.verdict.passed()
            && self.displacement.passed
    }

    pub fn rates_passed(&self) -> bool {
        self.rate_fits.iter().all(|r| r.passed)
    }

    /// One line per check, for summaries.
    pub fn summary_lines(&self) -> Vec<String> {
        let v = |p: bool| if p { "pass" } else { "FAIL" };
        let verdict = |x: &Verdict| match x {
            Verdict::Pass => "pass".to_string(),
            Verdict::Fail { k, residual } => format!("FAIL at k={k} (residual {residual:e})"),
            Verdict::Inconclusive { reason } => format!("inconclusive ({reason})"),
        };
        let mut out = vec![
            format!("sandwich   {}", v(self.sandwich.passed)),
            format!(
                "h1         {} (a={:e}, tau={})",
                verdict(&self.h1.verdict),
                self.h1.a_lower,
                self.h1.tau
            ),
            format!(
                "h2         {} (k1={}, B_bar estimate {:e})",
                verdict(&self.h2.verdict),
                self.h2.k1_used,
                self.h2.b_bar_estimate
            ),
            format!(
                "h3         {} [surrogate] (gap {:e})",
                verdict(&self.h3.verdict),
                self.h3.window_gap
            ),
            format!("eq12       {}", verdict(&self.eq12.verdict)),
            format!(
                "disp bound {} (final tail sum {:e})",
                v(self.displacement.passed),
                self.displacement.final_tail_sum
            ),
            format!(
                "constants  m={} c_hat={:.6} c_hat1={:.6} [{}]",
                self.constants.m, self.constants.c_hat, self.constants.c_hat1, self.constants.source
            ),
        ];
        for r in &self.rate_fits {
            out.push(format!(
                "rate       {} expected {:?}, slope {:.4}, r2 {:.4}",
                v(r.passed),
                r.expected,
                r.fit.fitted_slope,
                r.fit.r_squared
            ));
        }
        out
    }
}

/// Constants estimated from the trace alone, for traces without solver metadata.
///
/// `tau` is the smallest recovered `tau_k`, `a` the smallest
/// `(C_{k-1} - Phi_k) / ||dx_k||^2`, and the multiplier the largest
/// witness-to-window ratio. These make the checks self-consistent, not
/// independent; non-positive estimates are kept so that H1 reports them.
fn estimate_constants(trace: &Trace, k1: usize) -> (f64, f64, BSpec) {
    let tol = trace.tolerance();
    let r = &trace.records;
    let mut tau: f64 = 1.0;
    let mut a = f64::INFINITY;
    for w in r.windows(2) {
        let gap = w[0].c - w[1].phi;
        if gap.abs() > tol {
            tau = tau.min((w[0].c - w[1].c) / gap);
        }
        if w[1].dx_norm > 0.0 {
            a = a.min(gap / (w[1].dx_norm * w[1].dx_norm));
        }
    }
    if !a.is_finite() {
        a = 1.0;
    }
    let mut mult: f64 = 0.0;
    for k in k1.max(1)..r.len().saturating_sub(k1) {
        if let Some(wn) = r[k].witness_norm {
            let s: f64 = r[k - k1..=k + k1].iter().map(|x| x.dx_norm).sum();
            if s > 0.0 {
                mult = mult.max(wn / s);
            } else if wn > 0.0 {
                mult = f64::INFINITY;
            }
        }
    }
    let mult = if mult > 0.0 { mult } else { 1.0 };
    (a, tau, BSpec::Multiplier(mult))
}

/// Runs every check on `trace`.
pub fn run_conformance(trace: &Trace, opts: &ConformanceOptions) -> Result<ConformanceReport> {
    trace.validate()?;
    if trace.len() < 2 {
        return Err(Error::InsufficientData {
            needed: 2,
            have: trace.len(),
        });
    }
    let documented = documented_constants(trace).ok();
    let k1 = opts
        .k1
        .or(documented.as_ref().map(|d| d.k1))
        .unwrap_or(0);
    let estimated = estimate_constants(trace, k1);
    let from_doc = |f: fn(&super::DocumentedConstants) -> f64| documented.as_ref().map(f);

    let supplied_any = opts.a_lower.is_some() || opts.tau.is_some() || opts.b.is_some();
    let source = match (&documented, supplied_any) {
        (_, true) => "supplied",
        (Some(_), false) => "documented",
        (None, false) => "estimated",
    };
    let a_lower = opts.a_lower.or(from_doc(|d| d.a_lower)).unwrap_or(estimated.0);
    let tau = opts.tau.or(from_doc(|d| d.tau)).unwrap_or(estimated.1);
    let b = opts
        .b
        .clone()
        .or(documented.as_ref().map(|d| d.b.clone()))
        .unwrap_or(estimated.2);
    let eps = opts
        .eps
        .or(documented.as_ref().map(|d| d.eps))
        .unwrap_or(ErrorSchedule::Zero);

    // Estimated constants can come out non-positive on a broken trace; that is an H1 failure, not an error.
    let (h1, a_for_rest, tau_for_rest) = if a_lower > 0.0 && tau > 0.0 && tau <= 1.0 {
        (check_h1(trace, a_lower, tau)?, a_lower, tau)
    } else {
        let bad = if a_lower <= 0.0 { a_lower } else { tau };
        let mut h1 = check_h1(trace, 1.0, 1.0)?;
        h1.verdict = Verdict::Fail {
            k: 0,
            residual: bad,
        };
        h1.a_lower = a_lower;
        h1.tau = tau;
        (h1, a_lower.max(f64::MIN_POSITIVE), tau.clamp(f64::MIN_POSITIVE, 1.0))
    };
    let a_seq = match (&documented, supplied_any) {
        (Some(d), false) => d.a_seq.clone(),
        _ => PositiveSequence::constant(a_for_rest),
    };
    let h2 = check_h2(trace, k1, &b, &eps, &a_seq)?;
    let window = opts.h3_window.unwrap_or(DEFAULT_H3_WINDOW);
    let h3 = match check_h3(trace, window) {
        Ok(r) => r,
        Err(Error::InsufficientData { needed, have }) => H3Report {
            verdict: Verdict::Inconclusive {
                reason: format!("needs {needed} records, trace has {have}"),
            },
            label: "surrogate".into(),
            window,
            window_gap: f64::NAN,
            cauchy_spread: f64::NAN,
            cauchy_tol: f64::NAN,
            gap_tol: f64::NAN,
        },
        Err(e) => return Err(e),
    };
    let eq12 = check_eq12(&a_seq, &h2.b_normalized, &eps, k1, trace.len() - 1)?;

    let m = compute_m(tau_for_rest, k1 as u64)?;
    let constants = FrameworkConstants {
        m,
        c_hat: c_hat(h2.b_bar_estimate, tau_for_rest),
        c_hat1: c_hat1(m, tau_for_rest, k1 as u64),
        a_lower_used: a_lower,
        tau_used: tau,
        k1,
        b_bar_estimate: h2.b_bar_estimate,
        source: source.to_string(),
    };
    let k1k2 = split_k1_k2(trace, m as usize)?;

    let (excess, range) = displacement_bound_excess(trace, a_for_rest, tau_for_rest);
    let displacement = DisplacementReport {
        passed: excess <= 0.0,
        max_excess: excess,
        range,
        final_tail_sum: trace.final_tail_sum(FINAL_TAIL_WINDOW),
        window: FINAL_TAIL_WINDOW,
    };

    let mut rate_fits = Vec::new();
    if let Some(expected) = opts.expected_regime {
        let (dists, reference) =
            distance_sequence(trace, opts.minimizer.as_ref(), opts.sign_invariant)?;
        rate_fits.push(rate_check(
            &dists,
            reference,
            expected,
            opts.burn_in_fraction.unwrap_or(DEFAULT_BURN_IN),
        )?);
    }

    let violation = trace.sandwich_violation();
    Ok(ConformanceReport {
        problem_id: trace.problem_id.clone(),
        solver: documented.map(|d| d.solver),
        sandwich: SandwichReport {
            passed: violation.is_none(),
            violation,
        },
        h1,
        h2,
        h3,
        eq12,
        constants,
        k1k2,
        displacement,
        rate_fits,
    })
}
