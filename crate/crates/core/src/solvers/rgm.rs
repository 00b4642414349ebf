//! Nonmonotone Riemannian gradient method on the unit sphere.

use log::{debug, info, warn};
use nalgebra::DVector;
use serde::{Deserialize, Serialize};

use super::{backtrack, check_direction, termination_label, StepRule, Trial, WeightRule};
use crate::averager::ZhAveragerP;
use crate::error::{check, Error, Result};
use crate::problems::sphere::UNIT_TOL;
use crate::problems::SphereProblem;
use crate::trace::{Trace, TraceRecord};
use crate::vector::Vector;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RgmParams {
    pub alpha_m: f64,
    #[serde(rename = "alpha_M")]
    pub alpha_big_m: f64,
    pub rho1: f64,
    pub rho2: f64,
    pub beta: f64,
    pub p_min: f64,
    pub p_rule: Option<WeightRule>,
    pub alpha0_rule: StepRule,
    /// Direction constants: `<grad, z> <= -c1 ||grad||^2`, `||z|| <= c2 ||grad||`.
    pub c1: f64,
    pub c2: f64,
    pub max_iters: usize,
    pub stop_tol: f64,
    pub max_halvings: usize,
}

impl Default for RgmParams {
    fn default() -> Self {
        RgmParams {
            alpha_m: 1e-6,
            alpha_big_m: 1.0,
            rho1: 1e-4,
            rho2: 0.0,
            beta: 0.5,
            p_min: 0.1,
            p_rule: None,
            alpha0_rule: StepRule::BarzilaiBorwein,
            c1: 1.0,
            c2: 1.0,
            max_iters: 10_000,
            stop_tol: 1e-8,
            max_halvings: super::MAX_HALVINGS,
        }
    }
}

impl RgmParams {
    pub fn validate(&self) -> Result<()> {
        check::positive("alpha_m", self.alpha_m)?;
        check::positive("alpha_M", self.alpha_big_m)?;
        if self.alpha_m > self.alpha_big_m {
            return Err(Error::param(
                "alpha_m",
                self.alpha_m,
                &format!("(0, alpha_M = {}]", self.alpha_big_m),
            ));
        }
        check::open_unit("rho1", self.rho1)?;
        check::unit_left_closed("rho2", self.rho2)?;
        check::open_unit("beta", self.beta)?;
        check::half_open_unit("p_min", self.p_min)?;
        if let Some(rule) = &self.p_rule {
            rule.validate("p_rule", self.p_min, 1.0)?;
        }
        check::positive("c1", self.c1)?;
        check::positive("c2", self.c2)?;
        if self.c1 > self.c2 {
            // Cauchy-Schwarz makes c1 <= c2 necessary for any direction to exist
            return Err(Error::param("c1", self.c1, &format!("(0, c2 = {}]", self.c2)));
        }
        check::positive("stop_tol", self.stop_tol)?;
        Ok(())
    }

    fn p_at(&self, k: usize) -> f64 {
        self.p_rule.as_ref().map_or(self.p_min, |r| r.at(k))
    }
}

/// Steepest descent `z = -grad f(x)`.
pub fn rgm_solve(problem: &SphereProblem, x0: &Vector, params: &RgmParams) -> Result<Trace> {
    rgm_solve_with_direction(problem, x0, params, |_, g| -g)
}

/// Runs the method with a caller-supplied tangent direction `z = direction(x, grad)`.
///
/// Every direction is checked against `c1`, `c2` and tangency before use.
/// Record `k` carries `||grad f(x^k)||` as its witness. Recorded constants:
/// `h1_a_lower = rho1 c1 / (c2^2 alpha_M)`, `h1_tau = p_min`, and the
/// relative-error divisor `h2_b = alpha_lo c1 / 2` with `alpha_lo` the
/// smallest accepted step.
pub fn rgm_solve_with_direction<D>(
    problem: &SphereProblem,
    x0: &Vector,
    params: &RgmParams,
    mut direction: D,
) -> Result<Trace>
where
    D: FnMut(&DVector<f64>, &DVector<f64>) -> DVector<f64>,
{
    params.validate()?;
    let m = &problem.manifold;
    m.check_point(x0)?;
    let f = &problem.f;

    let mut x = x0.as_dvector().clone();
    let mut fx = f.value(&x);
    check::finite("objective at the starting point", fx)?;
    let mut grad = problem.riemannian_gradient(&x);
    let mut trace = Trace::new(format!("{}@sphere", f.name()));
    record_params(&mut trace, params);
    trace
        .records
        .push(TraceRecord::initial(x0.clone(), fx, Some(grad.norm())));

    let mut c_state = ZhAveragerP::new(fx, params.p_min)?;
    let mut prev: Option<(DVector<f64>, DVector<f64>)> = None;
    let mut alpha_lo = f64::INFINITY;
    let mut converged = grad.norm() <= params.stop_tol;

    for k in 0..params.max_iters {
        if converged {
            break;
        }
        let z = direction(&x, &grad);
        check_tangent(k, &x, &z)?;
        check_direction(k, &grad, &z, params.c1, params.c2)?;
        let alpha0 = params.alpha0_rule.initial_step(
            params.alpha_m,
            params.alpha_big_m,
            prev.as_ref().map(|(a, b)| (a, b)),
            (&x, &grad),
        );
        let c = c_state.value();
        let gz = grad.dot(&z);
        let zz = z.norm_squared();
        let outcome = backtrack(
            |alpha| {
                let y = m.retract(&x, &(&z * alpha));
                let value = f.value(&y);
                Trial {
                    accepted: value.is_finite()
                        && value <= c + params.rho1 * alpha * gz - params.rho2 * alpha * alpha * zz,
                    point: y,
                    value,
                }
            },
            alpha0,
            params.beta,
            params.max_halvings,
        )?;
        let acc = match outcome {
            Ok(a) => a,
            Err(fail) => {
                warn!("rgm: line search exhausted at iteration {k}");
                finish(&mut trace, params, alpha_lo, false);
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
        let grad_new = problem.riemannian_gradient(&x_new);
        let dx = (&x_new - &x).norm();
        alpha_lo = alpha_lo.min(acc.step);
        fx = acc.value;
        let c_new = c_state.update(fx, params.p_at(k))?;
        let g_norm = grad_new.norm();
        let x_vec = Vector::from_dvector(x_new.clone())
            .map_err(|_| Error::non_finite(&format!("iterate {}", k + 1)))?;
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
        debug!("rgm k={} f={fx:.6e} C={c_new:.6e} alpha={:.3e} |grad|={g_norm:.3e}", k + 1, acc.step);

        prev = Some((std::mem::replace(&mut x, x_new), std::mem::replace(&mut grad, grad_new)));
        converged = g_norm <= params.stop_tol;
    }

    finish(&mut trace, params, alpha_lo, converged);
    info!("rgm: {} after {} iterations", termination_label(converged), trace.len() - 1);
    Ok(trace)
}

fn check_tangent(iteration: usize, x: &DVector<f64>, z: &DVector<f64>) -> Result<()> {
    let inner = x.dot(z);
    if inner.abs() > UNIT_TOL * z.norm().max(1.0) {
        return Err(Error::Direction {
            iteration,
            detail: format!("direction is not tangent, <x, z> = {inner:e}"),
        });
    }
    Ok(())
}

fn record_params(trace: &mut Trace, p: &RgmParams) {
    trace.set_param("solver", "rgm");
    trace.set_param("alpha_m", p.alpha_m);
    trace.set_param("alpha_M", p.alpha_big_m);
    trace.set_param("rho1", p.rho1);
    trace.set_param("rho2", p.rho2);
    trace.set_param("beta", p.beta);
    trace.set_param("p_min", p.p_min);
    trace.set_param("p_rule", serde_json::to_value(&p.p_rule).unwrap_or_default());
    trace.set_param("alpha0_rule", p.alpha0_rule.label());
    trace.set_param("c1", p.c1);
    trace.set_param("c2", p.c2);
    trace.set_param("max_iters", p.max_iters);
    trace.set_param("stop_tol", p.stop_tol);
    trace.set_param("h1_a_lower", p.rho1 * p.c1 / (p.c2 * p.c2 * p.alpha_big_m));
    trace.set_param("h1_tau", p.p_min);
    trace.set_param("h2_k1", 1);
}

fn finish(trace: &mut Trace, p: &RgmParams, alpha_lo: f64, converged: bool) {
    if alpha_lo.is_finite() {
        trace.set_param("min_accepted_step", alpha_lo);
        trace.set_param("h2_b", alpha_lo * p.c1 / 2.0);
    }
    trace.set_param("termination", termination_label(converged));
}
