//! Trace checkers for the averaged-decrease, relative-error and continuity conditions.

use serde::{Deserialize, Serialize};

use super::Verdict;
use crate::error::{check, Error, Result};
use crate::schedule::{ErrorSchedule, PositiveSequence, SumBehavior};
use crate::trace::Trace;

/// Outcome of [`check_h1`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct H1Report {
    pub verdict: Verdict,
    pub a_lower: f64,
    pub tau: f64,
    pub tolerance: f64,
    /// `residuals[k-1]` belongs to record `k`; positive beyond tolerance means violation.
    pub residuals: Vec<f64>,
    /// `tau_k` solved from the recorded merit values; `None` where indeterminate.
    pub tau_recovered: Vec<Option<f64>>,
}

/// Checks `Phi_k + a ||dx_k||^2 <= C_{k-1}` and that `C_k` is reachable by
/// the averaging recursion with some `tau_k` in `[tau, 1]`.
///
/// The recursion test measures the distance of `C_k` from the segment between
/// `(1 - tau) C_{k-1} + tau Phi_k` and `Phi_k`, so a `tau_k` that only misses
/// the interval by rounding still passes. When `C_{k-1} = Phi_k` the segment
/// collapses and any `tau_k` satisfies the recursion.
pub fn check_h1(trace: &Trace, a_lower: f64, tau: f64) -> Result<H1Report> {
    check::positive("a_lower", a_lower)?;
    check::half_open_unit("tau", tau)?;
    if trace.len() < 2 {
        return Err(Error::InsufficientData {
            needed: 2,
            have: trace.len(),
        });
    }
    let tol = trace.tolerance();
    let mut residuals = Vec::with_capacity(trace.len() - 1);
    let mut tau_recovered = Vec::with_capacity(trace.len() - 1);
    let mut first_fail = None;
    for w in trace.records.windows(2) {
        let (prev, cur) = (&w[0], &w[1]);
        let decrease = cur.phi + a_lower * cur.dx_norm * cur.dx_norm - prev.c;
        let end_lo = prev.c + tau * (cur.phi - prev.c);
        let (lo, hi) = if end_lo <= cur.phi {
            (end_lo, cur.phi)
        } else {
            (cur.phi, end_lo)
        };
        let recursion = (lo - cur.c).max(cur.c - hi);
        let r = decrease.max(recursion);
        let gap = prev.c - cur.phi;
        tau_recovered.push((gap.abs() > tol).then(|| (prev.c - cur.c) / gap));
        if r > tol && first_fail.is_none() {
            first_fail = Some(Verdict::Fail { k: cur.k, residual: r });
        }
        residuals.push(r);
    }
    Ok(H1Report {
        verdict: first_fail.unwrap_or(Verdict::Pass),
        a_lower,
        tau,
        tolerance: tol,
        residuals,
        tau_recovered,
    })
}

/// How the relative-error weight was supplied.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BSpec {
    /// `witness_k <= (1 / b_k) * window_sum + eps_k`.
    Divisor(PositiveSequence),
    /// `witness_k <= b * window_sum + eps_k`; normalised to the divisor `1 / b`.
    Multiplier(f64),
}

impl BSpec {
    /// The divisor form `b_k`.
    pub fn normalized(&self) -> Result<PositiveSequence> {
        match self {
            BSpec::Divisor(s) => {
                s.validate("b")?;
                Ok(s.clone())
            }
            BSpec::Multiplier(c) => {
                check::positive("b multiplier", *c)?;
                Ok(PositiveSequence::constant(1.0 / c))
            }
        }
    }
}

/// Outcome of [`check_h2`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct H2Report {
    pub verdict: Verdict,
    pub k1_used: usize,
    /// `b_k` in divisor form.
    pub b_normalized: PositiveSequence,
    /// Running maximum of `(1 / b_k) sum_{|i-k| <= k1} a_i^{-1/2}` over the checked indices.
    pub b_bar_estimate: f64,
    pub b_bar_is_estimate: bool,
    pub checked: (usize, usize),
    /// `(k, witness_k - bound_k)`; positive beyond tolerance means violation.
    pub residuals: Vec<(usize, f64)>,
    pub note: String,
}

const H2_NOTE: &str = "the witness norm only upper-bounds the subgradient distance, \
so a failure does not show that the condition itself is violated";

/// Checks `witness_k <= (1 / b_k) sum_{i=k-k1}^{k+k1} ||dx_i|| + eps_k` for `k1 <= k <= K - k1`.
///
/// Record 0 is skipped when it carries no witness (nothing has been computed
/// there yet); any other missing witness is an input error. `a` supplies the
/// per-iteration decrease constants for the `B_bar` estimate.
pub fn check_h2(
    trace: &Trace,
    k1: usize,
    b: &BSpec,
    eps: &ErrorSchedule,
    a: &PositiveSequence,
) -> Result<H2Report> {
    eps.validate()?;
    a.validate("a")?;
    let b_div = b.normalized()?;
    let n = trace.len();
    if n < 2 * k1 + 1 || n < 2 {
        return Err(Error::InsufficientData {
            needed: (2 * k1 + 1).max(2),
            have: n,
        });
    }
    let last = n - 1;
    let tol = trace.tolerance();
    let start = if k1 == 0 && trace.records[0].witness_norm.is_none() {
        1
    } else {
        k1
    };
    let end = last - k1;
    let dx = trace.dx_norms();
    let mut residuals = Vec::with_capacity(end + 1 - start);
    let mut first_fail = None;
    let mut b_bar: f64 = 0.0;
    for k in start..=end {
        let w = trace.records[k].witness_norm.ok_or_else(|| {
            Error::Input(format!(
                "record {k} has no witness norm; the solver must log one for every checked index"
            ))
        })?;
        let bk = b_div.eval(k);
        let window: f64 = dx[k - k1..=k + k1].iter().sum();
        let bound = window / bk + eps.eval(k);
        let r = w - bound;
        if r > tol && first_fail.is_none() {
            first_fail = Some(Verdict::Fail { k, residual: r });
        }
        residuals.push((k, r));
        let inv_sqrt_a: f64 = (k - k1..=k + k1).map(|i| 1.0 / a.eval(i).sqrt()).sum();
        b_bar = b_bar.max(inv_sqrt_a / bk);
    }
    Ok(H2Report {
        verdict: first_fail.unwrap_or(Verdict::Pass),
        k1_used: k1,
        b_normalized: b_div,
        b_bar_estimate: b_bar,
        b_bar_is_estimate: true,
        checked: (start, end),
        residuals,
        note: H2_NOTE.to_string(),
    })
}

/// Outcome of [`check_h3`]. Always a finite-horizon surrogate.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct H3Report {
    pub verdict: Verdict,
    pub label: String,
    pub window: usize,
    /// `max Phi` over the window minus `Phi(x^K)`.
    pub window_gap: f64,
    /// Largest pairwise distance between the window's iterates.
    pub cauchy_spread: f64,
    pub cauchy_tol: f64,
    pub gap_tol: f64,
}

/// Default Cauchy tolerance `1e-6 max(1, ||x^K||)` and value tolerance `1e-8 max(1, |C_0|)`.
pub fn check_h3(trace: &Trace, window: usize) -> Result<H3Report> {
    let last = trace
        .last()
        .ok_or_else(|| Error::Input("trace has no records".into()))?;
    let c0 = trace.records[0].c.abs();
    check_h3_with(
        trace,
        window,
        1e-6 * last.x.norm().max(1.0),
        1e-8 * c0.max(1.0),
    )
}

/// Finite-horizon check: the last `window` iterates cluster (spread within
/// `cauchy_tol`) and the values along them do not exceed `Phi(x^K)` by more
/// than `gap_tol`.
///
/// If the iterates have not clustered the verdict is inconclusive, since the
/// limit point and its value are not yet visible.
pub fn check_h3_with(
    trace: &Trace,
    window: usize,
    cauchy_tol: f64,
    gap_tol: f64,
) -> Result<H3Report> {
    if window < 2 {
        return Err(Error::param("window", window, "[2,inf)"));
    }
    if trace.len() < 2 * window {
        return Err(Error::InsufficientData {
            needed: 2 * window,
            have: trace.len(),
        });
    }
    let tail = &trace.records[trace.len() - window..];
    let last = &tail[window - 1];
    let mut spread: f64 = 0.0;
    for (i, a) in tail.iter().enumerate() {
        for b in &tail[i + 1..] {
            spread = spread.max(a.x.distance(&b.x));
        }
    }
    let max_phi = tail.iter().map(|r| r.phi).fold(f64::NEG_INFINITY, f64::max);
    let gap = max_phi - last.phi;
    let verdict = if spread > cauchy_tol {
        Verdict::Inconclusive {
            reason: format!("last {window} iterates spread {spread:e} > {cauchy_tol:e}"),
        }
    } else if gap > gap_tol {
        Verdict::Fail {
            k: last.k,
            residual: gap,
        }
    } else {
        Verdict::Pass
    };
    Ok(H3Report {
        verdict,
        label: "surrogate".into(),
        window,
        window_gap: gap,
        cauchy_spread: spread,
        cauchy_tol,
        gap_tol,
    })
}

/// Outcome of [`check_eq12`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Eq12Report {
    pub verdict: Verdict,
    pub b_sum: SumBehavior,
    pub b_bar_estimate: f64,
    pub b_bar_finite: bool,
    pub eps_summable: bool,
    pub eps_sum_bound: f64,
    pub horizon: usize,
}

/// Divergence of `sum b_k`, the `B_bar` supremum over `k1 <= k <= horizon - k1`,
/// and summability of `eps_k`.
///
/// Named families are decided analytically; `Values` sequences only get the
/// finite-horizon estimate, which the report marks through `b_sum`.
pub fn check_eq12(
    a: &PositiveSequence,
    b: &PositiveSequence,
    eps: &ErrorSchedule,
    k1: usize,
    horizon: usize,
) -> Result<Eq12Report> {
    a.validate("a")?;
    b.validate("b")?;
    eps.validate()?;
    let b_sum = b.sum_behavior();
    let mut b_bar: f64 = 0.0;
    let hi = horizon.max(2 * k1);
    for k in k1..=hi - k1 {
        let s: f64 = (k - k1..=k + k1).map(|i| 1.0 / a.eval(i).sqrt()).sum();
        b_bar = b_bar.max(s / b.eval(k));
    }
    let b_bar_finite = b_bar.is_finite();
    let eps_summable = eps.is_summable();
    let verdict = if !b_sum.diverges() {
        Verdict::Fail {
            k: 0,
            residual: f64::NAN,
        }
    } else if !b_bar_finite || !eps_summable {
        Verdict::Fail {
            k: 0,
            residual: b_bar,
        }
    } else {
        Verdict::Pass
    };
    Ok(Eq12Report {
        verdict,
        b_sum,
        b_bar_estimate: b_bar,
        b_bar_finite,
        eps_summable,
        eps_sum_bound: eps.sum_bound(),
        horizon,
    })
}

/// Largest excess of `sum_{i=k}^{k'} ||dx_i||` over `(a tau)^{-1/2} sum_{i=k}^{k'} Xi_{i-1}`
/// across all index ranges, with the range attaining it.
///
/// `Xi` is computed with a small rounding allowance inside the square root,
/// since differences of nearly equal merit values lose all their digits.
pub fn displacement_bound_excess(trace: &Trace, a_lower: f64, tau: f64) -> (f64, Option<(usize, usize)>) {
    let scale = 1.0 / (a_lower * tau).sqrt();
    let recs = &trace.records;
    let mut best = f64::NEG_INFINITY;
    let mut best_range = None;
    let mut run = 0.0;
    let mut run_start = 1;
    for k in 1..recs.len() {
        let slack = 64.0 * f64::EPSILON * recs[k - 1].c.abs().max(recs[k].phi.abs());
        let xi = ((recs[k - 1].c - recs[k].c).max(0.0) + slack).sqrt();
        let d = recs[k].dx_norm - scale * xi;
        if run <= 0.0 {
            run = d;
            run_start = k;
        } else {
            run += d;
        }
        if run > best {
            best = run;
            best_range = Some((run_start, k));
        }
    }
    (best, best_range)
}
