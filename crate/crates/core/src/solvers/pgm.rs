//! Nonmonotone proximal gradient method for `Theta = f + g`.

use log::{debug, info, warn};
use nalgebra::DVector;
use serde::{Deserialize, Serialize};

use super::{backtrack, termination_label, StepRule, Trial, WeightRule, UNBOUNDED_NORM};
use crate::averager::ZhAveragerP;
use crate::error::{check, Error, Result};
use crate::problems::CompositeObjective;
use crate::trace::{Trace, TraceRecord};
use crate::vector::Vector;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PgmParams {
    pub gamma_min: f64,
    pub gamma_max: f64,
    /// Sufficient-decrease constant in `Theta(x+) <= C - alpha / (2 gamma) ||x+ - x||^2`.
    pub alpha: f64,
    pub beta: f64,
    pub p_min: f64,
    /// `None` uses `p_k = p_min` throughout.
    pub p_rule: Option<WeightRule>,
    pub gamma0_rule: StepRule,
    pub max_iters: usize,
    pub stop_tol: f64,
    pub max_halvings: usize,
}

impl Default for PgmParams {
    fn default() -> Self {
        PgmParams {
            gamma_min: 1e-8,
            gamma_max: 1.0,
            alpha: 0.5,
            beta: 0.5,
            p_min: 0.1,
            p_rule: None,
            gamma0_rule: StepRule::Constant,
            max_iters: 10_000,
            stop_tol: 1e-8,
            max_halvings: super::MAX_HALVINGS,
        }
    }
}

impl PgmParams {
    pub fn validate(&self) -> Result<()> {
        check::positive("gamma_min", self.gamma_min)?;
        check::positive("gamma_max", self.gamma_max)?;
        if self.gamma_min > self.gamma_max {
            return Err(Error::param(
                "gamma_min",
                self.gamma_min,
                &format!("(0, gamma_max = {}]", self.gamma_max),
            ));
        }
        check::open_unit("alpha", self.alpha)?;
        check::open_unit("beta", self.beta)?;
        check::half_open_unit("p_min", self.p_min)?;
        if let Some(rule) = &self.p_rule {
            rule.validate("p_rule", self.p_min, 1.0)?;
        }
        check::positive("stop_tol", self.stop_tol)?;
        Ok(())
    }

    fn p_at(&self, k: usize) -> f64 {
        self.p_rule.as_ref().map_or(self.p_min, |r| r.at(k))
    }
}

/// `w = grad f(x_new) - grad f(x_old) - (x_new - x_old) / gamma`.
///
/// With `x_new` in `prox_{gamma g}(x_old - gamma grad f(x_old))` this is an
/// element of the limiting subdifferential of `f + g` at `x_new`.
pub fn pgm_witness(
    grad_new: &Vector,
    grad_old: &Vector,
    x_new: &Vector,
    x_old: &Vector,
    gamma: f64,
) -> Result<Vector> {
    check::positive("gamma", gamma)?;
    let n = x_new.dim();
    for (v, what) in [(grad_new, "grad_new"), (grad_old, "grad_old"), (x_old, "x_old")] {
        v.check_dim(n, &format!("pgm witness ({what})"))?;
    }
    Vector::from_dvector(witness(grad_new, grad_old, x_new, x_old, gamma))
}

pub(crate) fn witness(
    grad_new: &DVector<f64>,
    grad_old: &DVector<f64>,
    x_new: &DVector<f64>,
    x_old: &DVector<f64>,
    gamma: f64,
) -> DVector<f64> {
    grad_new - grad_old - (x_new - x_old) / gamma
}

/// Runs the nonmonotone proximal gradient method from `x0`.
///
/// Record `k + 1` stores `gamma_k`, `||x^{k+1} - x^k||` and `||w^{k+1}||`.
/// Besides the parameters, `solver_params` receives the decrease constants
/// (`h1_a_lower = alpha / (2 gamma_max)`, `h1_tau = p_min`) and the
/// relative-error multiplier `h2_b_multiplier = 1 / gamma_lo + L_est`,
/// where `gamma_lo` is the smallest accepted step and `L_est` the largest
/// observed `||grad f(x^{k+1}) - grad f(x^k)|| / ||x^{k+1} - x^k||`.
pub fn pgm_solve(problem: &CompositeObjective, x0: &Vector, params: &PgmParams) -> Result<Trace> {
    params.validate()?;
    x0.check_dim(problem.dim(), "starting point")?;
    let f = &problem.smooth;
    let g = &problem.nonsmooth;

    let mut x = x0.as_dvector().clone();
    let g0 = g.value(&x);
    if !g0.is_finite() {
        return Err(Error::Precondition(
            "starting point lies outside the domain of g".into(),
        ));
    }
    let mut theta = f.value(&x) + g0;
    check::finite("objective at the starting point", theta)?;
    let mut grad = f.gradient(&x);
    if grad.iter().any(|v| !v.is_finite()) {
        return Err(Error::non_finite("gradient at the starting point"));
    }

    let mut trace = Trace::new(format!("{}+{}", f.name(), g.name()));
    record_params(&mut trace, params);
    trace.records.push(TraceRecord::initial(x0.clone(), theta, None));

    let mut c_state = ZhAveragerP::new(theta, params.p_min)?;
    let mut prev: Option<(DVector<f64>, DVector<f64>)> = None;
    let mut gamma_lo = f64::INFINITY;
    let mut lip_est: f64 = 0.0;
    let mut bounded = true;
    let mut converged = false;

    for k in 0..params.max_iters {
        let gamma0 = params.gamma0_rule.initial_step(
            params.gamma_min,
            params.gamma_max,
            prev.as_ref().map(|(a, b)| (a, b)),
            (&x, &grad),
        );
        let c = c_state.value();
        let outcome = backtrack(
            |gamma| {
                let z = &x - &grad * gamma;
                let y = g.prox(gamma, &z);
                let value = f.value(&y) + g.value(&y);
                let dx2 = (&y - &x).norm_squared();
                Trial {
                    accepted: value.is_finite()
                        && value <= c - params.alpha / (2.0 * gamma) * dx2,
                    point: y,
                    value,
                }
            },
            gamma0,
            params.beta,
            params.max_halvings,
        )?;
        let acc = match outcome {
            Ok(a) => a,
            Err(fail) => {
                warn!("pgm: line search exhausted at iteration {k}");
                finish(&mut trace, gamma_lo, lip_est, bounded, false);
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
        let grad_new = f.gradient(&x_new);
        let dx = (&x_new - &x).norm();
        let w = witness(&grad_new, &grad, &x_new, &x, acc.step);
        let w_norm = w.norm();
        if dx > 0.0 {
            lip_est = lip_est.max((&grad_new - &grad).norm() / dx);
        }
        gamma_lo = gamma_lo.min(acc.step);
        theta = acc.value;
        let c_new = c_state.update(theta, params.p_at(k))?;

        let x_vec = Vector::from_dvector(x_new.clone())
            .map_err(|_| Error::non_finite(&format!("iterate {}", k + 1)))?;
        if bounded && x_new.norm() > UNBOUNDED_NORM {
            warn!("pgm: ||x|| exceeds {UNBOUNDED_NORM:e} at iteration {}", k + 1);
            bounded = false;
        }
        trace.records.push(TraceRecord {
            k: k + 1,
            x: x_vec,
            phi: theta,
            c: c_new,
            step: acc.step,
            dx_norm: dx,
            witness_norm: Some(w_norm),
            backtracks: acc.halvings,
        });
        debug!(
            "pgm k={} theta={theta:.6e} C={c_new:.6e} gamma={:.3e} |w|={w_norm:.3e}",
            k + 1,
            acc.step
        );

        prev = Some((std::mem::replace(&mut x, x_new), std::mem::replace(&mut grad, grad_new)));
        if w_norm <= params.stop_tol {
            converged = true;
            break;
        }
    }

    finish(&mut trace, gamma_lo, lip_est, bounded, converged);
    info!(
        "pgm: {} after {} iterations",
        termination_label(converged),
        trace.len() - 1
    );
    Ok(trace)
}

fn record_params(trace: &mut Trace, p: &PgmParams) {
    trace.set_param("solver", "pgm");
    trace.set_param("gamma_min", p.gamma_min);
    trace.set_param("gamma_max", p.gamma_max);
    trace.set_param("alpha", p.alpha);
    trace.set_param("beta", p.beta);
    trace.set_param("p_min", p.p_min);
    trace.set_param("p_rule", serde_json::to_value(&p.p_rule).unwrap_or_default());
    trace.set_param("gamma0_rule", p.gamma0_rule.label());
    trace.set_param("max_iters", p.max_iters);
    trace.set_param("stop_tol", p.stop_tol);
    trace.set_param("h1_a_lower", p.alpha / (2.0 * p.gamma_max));
    trace.set_param("h1_tau", p.p_min);
    trace.set_param("h2_k1", 0);
}

fn finish(trace: &mut Trace, gamma_lo: f64, lip_est: f64, bounded: bool, converged: bool) {
    if gamma_lo.is_finite() {
        trace.set_param("min_accepted_step", gamma_lo);
        trace.set_param("lipschitz_estimate", lip_est);
        trace.set_param("h2_b_multiplier", 1.0 / gamma_lo + lip_est);
    }
    trace.set_param("bounded", bounded);
    trace.set_param("termination", termination_label(converged));
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::problems::{L1Norm, LeastSquares, PowerNorm};
    use nalgebra::DMatrix;
    use std::sync::Arc;

    fn v(c: &[f64]) -> Vector {
        Vector::from_slice(c).unwrap()
    }

    #[test]
    fn witness_examples() {
        let z = v(&[0.0]);
        assert_eq!(pgm_witness(&v(&[2.0]), &v(&[2.0]), &v(&[1.0]), &v(&[1.0]), 0.3).unwrap(), z);
        let w = pgm_witness(&v(&[5.0, 1.0]), &v(&[5.0, 1.0]), &v(&[1.0, 3.0]), &v(&[0.0, 1.0]), 1.0)
            .unwrap();
        assert_eq!(w, v(&[-1.0, -2.0]));
        // f = x^2 / 2: grad = x
        let w = pgm_witness(&v(&[0.5]), &v(&[1.0]), &v(&[0.5]), &v(&[1.0]), 0.5).unwrap();
        assert_eq!(w, v(&[0.5]));
        assert!(pgm_witness(&z, &z, &z, &z, 0.0).is_err());
    }

    #[test]
    fn half_square_converges_in_one_step() {
        let p = CompositeObjective::smooth_only(Arc::new(PowerNorm::new(3, 2.0).unwrap()), Some(0.0));
        // ||x||^2 has gradient 2x, so gamma = 1/2 lands on 0
        let params = PgmParams {
            gamma_max: 0.5,
            ..Default::default()
        };
        let t = pgm_solve(&p, &v(&[1.0, -2.0, 0.5]), &params).unwrap();
        assert_eq!(t.len(), 2);
        assert_eq!(t.records[1].x, Vector::zeros(3));
        assert_eq!(t.records[1].witness_norm, Some(0.0));
        assert_eq!(t.param_str("termination"), Some("tolerance"));
    }

    #[test]
    fn identity_lasso_fixed_point() {
        let ls = LeastSquares::new(DMatrix::identity(2, 2), DVector::from_vec(vec![2.0, 0.0])).unwrap();
        let p = CompositeObjective::new(Arc::new(ls), Arc::new(L1Norm::new(1.0).unwrap()), Some(0.0));
        let params = PgmParams {
            gamma_min: 1.0,
            gamma_max: 1.0,
            ..Default::default()
        };
        let t = pgm_solve(&p, &v(&[0.0, 0.0]), &params).unwrap();
        let last = t.last().unwrap();
        assert!(last.x.distance(&v(&[1.0, 0.0])) <= 1e-8);
        assert!(last.witness_norm.unwrap() <= 1e-8);
        assert!(t.sandwich_violation().is_none());
    }

    #[test]
    fn rejects_bad_parameters_and_start() {
        let p = CompositeObjective::smooth_only(Arc::new(PowerNorm::new(1, 2.0).unwrap()), Some(0.0));
        let bad = PgmParams {
            alpha: 1.0,
            ..Default::default()
        };
        assert!(matches!(pgm_solve(&p, &v(&[1.0]), &bad), Err(Error::Parameter { .. })));
        let inverted = PgmParams {
            gamma_min: 2.0,
            gamma_max: 1.0,
            ..Default::default()
        };
        assert!(inverted.validate().is_err());
        assert!(pgm_solve(&p, &v(&[1.0, 2.0]), &PgmParams::default()).is_err());
        let boxed = CompositeObjective::new(
            Arc::new(PowerNorm::new(1, 2.0).unwrap()),
            Arc::new(crate::problems::BoxIndicator::new(v(&[0.0]), v(&[1.0])).unwrap()),
            Some(0.0),
        );
        assert!(matches!(
            pgm_solve(&boxed, &v(&[3.0]), &PgmParams::default()),
            Err(Error::Precondition(_))
        ));
    }
}
