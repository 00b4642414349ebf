//! Zhang-Hager nonmonotone line search with the Armijo rule, for smooth `f` on `R^n`.

use log::{debug, info, warn};
use nalgebra::DVector;
use serde::{Deserialize, Serialize};

use super::{backtrack, check_direction, termination_label, StepRule, Trial, WeightRule, UNBOUNDED_NORM};
use crate::averager::ZhAveragerQ;
use crate::error::{check, Error, Result};
use crate::problems::SmoothFunction;
use crate::trace::{Trace, TraceRecord};
use crate::vector::Vector;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct NlsaParams {
    /// Armijo constant in `f(x + alpha d) <= C + delta alpha g^T d`.
    pub delta: f64,
    /// Cap on the step length.
    pub mu: f64,
    pub eta_min: f64,
    pub eta_max: f64,
    /// `None` uses `eta_k = eta_max` throughout.
    pub eta_rule: Option<WeightRule>,
    pub beta: f64,
    pub c1: f64,
    pub c2: f64,
    /// Floor for the Barzilai-Borwein initial step.
    pub alpha_min: f64,
    pub step0_rule: StepRule,
    pub max_iters: usize,
    pub stop_tol: f64,
    pub max_halvings: usize,
}

impl Default for NlsaParams {
    fn default() -> Self {
        NlsaParams {
            delta: 1e-4,
            mu: 1.0,
            eta_min: 0.0,
            eta_max: 0.85,
            eta_rule: None,
            beta: 0.5,
            c1: 1.0,
            c2: 1.0,
            alpha_min: 1e-10,
            step0_rule: StepRule::BarzilaiBorwein,
            max_iters: 10_000,
            stop_tol: 1e-6,
            max_halvings: super::MAX_HALVINGS,
        }
    }
}

impl NlsaParams {
    pub fn validate(&self) -> Result<()> {
        check::open_unit("delta", self.delta)?;
        check::positive("mu", self.mu)?;
        check::unit_left_closed("eta_max", self.eta_max)?;
        if !(self.eta_min >= 0.0 && self.eta_min <= self.eta_max) {
            return Err(Error::param(
                "eta_min",
                self.eta_min,
                &format!("[0, eta_max = {}]", self.eta_max),
            ));
        }
        if let Some(rule) = &self.eta_rule {
            rule.validate("eta_rule", self.eta_min, self.eta_max)?;
        }
        check::open_unit("beta", self.beta)?;
        check::positive("c1", self.c1)?;
        check::positive("c2", self.c2)?;
        if self.c1 > self.c2 {
            return Err(Error::param("c1", self.c1, &format!("(0, c2 = {}]", self.c2)));
        }
        check::positive("alpha_min", self.alpha_min)?;
        if self.alpha_min > self.mu {
            return Err(Error::param("alpha_min", self.alpha_min, &format!("(0, mu = {}]", self.mu)));
        }
        check::positive("stop_tol", self.stop_tol)?;
        Ok(())
    }

    fn eta_at(&self, k: usize) -> f64 {
        self.eta_rule.as_ref().map_or(self.eta_max, |r| r.at(k))
    }
}

/// Steepest descent `d = -g`.
pub fn nlsa_solve(f: &dyn SmoothFunction, x0: &Vector, params: &NlsaParams) -> Result<Trace> {
    nlsa_solve_with_direction(f, x0, params, |_, g| -g)
}

/// Runs the method with `d_k = direction(x_k, g_k)`, checked against `c1`, `c2` each iteration.
///
/// The merit value follows the Q-form recursion. Record `k` keeps the
/// step `alpha_{k-1}` that produced `x_k` and the witness `||g_k||`, which is
/// what the conformance module needs for `a_k = beta_s / (alpha_{k-1}^2 c2^2)`
/// and `b_k = c1 alpha_k`.
pub fn nlsa_solve_with_direction<D>(
    f: &dyn SmoothFunction,
    x0: &Vector,
    params: &NlsaParams,
    mut direction: D,
) -> Result<Trace>
where
    D: FnMut(&DVector<f64>, &DVector<f64>) -> DVector<f64>,
{
    params.validate()?;
    x0.check_dim(f.dim(), "starting point")?;
    let mut x = x0.as_dvector().clone();
    let mut fx = f.value(&x);
    check::finite("objective at the starting point", fx)?;
    let mut g = f.gradient(&x);
    if g.iter().any(|v| !v.is_finite()) {
        return Err(Error::non_finite("gradient at the starting point"));
    }

    let mut trace = Trace::new(f.name());
    record_params(&mut trace, params);
    trace.records.push(TraceRecord::initial(x0.clone(), fx, Some(g.norm())));

    let mut c_state = ZhAveragerQ::new(fx, params.eta_min, params.eta_max)?;
    let mut prev: Option<(DVector<f64>, DVector<f64>)> = None;
    let mut bounded = true;
    let mut converged = g.norm() <= params.stop_tol;

    for k in 0..params.max_iters {
        if converged {
            break;
        }
        let d = direction(&x, &g);
        check_direction(k, &g, &d, params.c1, params.c2)?;
        let gd = g.dot(&d);
        let c = c_state.value();
        let step0 = params.step0_rule.initial_step(
            params.alpha_min,
            params.mu,
            prev.as_ref().map(|(a, b)| (a, b)),
            (&x, &g),
        );
        let outcome = backtrack(
            |alpha| {
                let y = &x + &d * alpha;
                let value = f.value(&y);
                Trial {
                    accepted: value.is_finite() && value <= c + params.delta * alpha * gd,
                    point: y,
                    value,
                }
            },
            step0,
            params.beta,
            params.max_halvings,
        )?;
        let acc = match outcome {
            Ok(a) => a,
            Err(fail) => {
                warn!("nlsa: line search exhausted at iteration {k}");
                finish(&mut trace, params, bounded, false);
                return Err(Error::LineSearch {
                    iteration: k,
                    halvings: fail.halvings,
                    last_step: fail.last_step,
                    last_value: fail.last_value,
                    partial: Box::new(trace),
                });
            }
        };

        let x_new = acc.point;
        let g_new = f.gradient(&x_new);
        let dx = (&x_new - &x).norm();
        fx = acc.value;
        let (c_new, _q) = c_state.update(fx, params.eta_at(k))?;
        let g_norm = g_new.norm();
        let x_vec = Vector::from_dvector(x_new.clone())
            .map_err(|_| Error::non_finite(&format!("iterate {}", k + 1)))?;
        if bounded && x_new.norm() > UNBOUNDED_NORM {
            warn!("nlsa: ||x|| exceeds {UNBOUNDED_NORM:e} at iteration {}", k + 1);
            bounded = false;
        }
        if !g_norm.is_finite() {
            return Err(Error::non_finite(&format!("gradient at iterate {}", k + 1)));
        }
        trace.records.push(TraceRecord {
            k: k + 1,
            x: x_vec,
            phi: fx,
            c: c_new,
            step: acc.step,
            dx_norm: dx,
            witness_norm: Some(g_norm),
            backtracks: acc.halvings,
        });
        debug!("nlsa k={} f={fx:.6e} C={c_new:.6e} alpha={:.3e} |g|={g_norm:.3e}", k + 1, acc.step);

        prev = Some((std::mem::replace(&mut x, x_new), std::mem::replace(&mut g, g_new)));
        converged = g_norm <= params.stop_tol;
    }

    finish(&mut trace, params, bounded, converged);
    info!("nlsa: {} after {} iterations", termination_label(converged), trace.len() - 1);
    Ok(trace)
}

fn record_params(trace: &mut Trace, p: &NlsaParams) {
    trace.set_param("solver", "nlsa");
    trace.set_param("delta", p.delta);
    trace.set_param("mu", p.mu);
    trace.set_param("eta_min", p.eta_min);
    trace.set_param("eta_max", p.eta_max);
    trace.set_param("eta_rule", serde_json::to_value(&p.eta_rule).unwrap_or_default());
    trace.set_param("beta", p.beta);
    trace.set_param("c1", p.c1);
    trace.set_param("c2", p.c2);
    trace.set_param("alpha_min", p.alpha_min);
    trace.set_param("step0_rule", p.step0_rule.label());
    trace.set_param("max_iters", p.max_iters);
    trace.set_param("stop_tol", p.stop_tol);
    trace.set_param("h1_tau", 1.0 - p.eta_max);
    trace.set_param("h2_k1", 1);
}

/// The decrease constant `beta_s = delta c1 alpha_lo` uses the smallest step of
/// the whole run, so it is only known once the run ends.
fn finish(trace: &mut Trace, p: &NlsaParams, bounded: bool, converged: bool) {
    if let Some(alpha_lo) = trace.min_step_from(1) {
        let beta_s = p.delta * p.c1 * alpha_lo;
        trace.set_param("min_accepted_step", alpha_lo);
        trace.set_param("beta_strong", beta_s);
        trace.set_param("h1_a_lower", beta_s / (p.mu * p.mu * p.c2 * p.c2));
    }
    trace.set_param("bounded", bounded);
    trace.set_param("termination", termination_label(converged));
}
