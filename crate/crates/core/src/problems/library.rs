//! Named test problems with known KL exponents.
//!
//! KL constants are derived as follows (they feed rate oracles, never solvers):
//!
//! * `quartic`, `||x||^p`: `phi'(Phi) ||grad Phi|| = c (1 - theta) p ||x||^(p-1-p theta)`,
//!   constant exactly when `theta = (p-1)/p`, and then equal to `c`. So `c = 1`
//!   with unbounded neighbourhood.
//! * `lasso`: with `mu = lambda_min(A^T A) > 0`, strong convexity gives
//!   `Theta - Theta* <= dist(0, dTheta)^2 / (2 mu)`, hence exponent 1/2 with `c = sqrt(2/mu)`.
//! * `l0_least_squares`: on a fixed support the objective is the strongly convex
//!   quadratic above, and the support cannot grow while `Theta < Theta* + lambda`;
//!   we use the same `c` with `eta = lambda`.
//! * `rayleigh_sphere`: in the plane of `v_1` and a unit tangent `u`, writing
//!   `x = cos t v_1 + sin t u`, one gets `f - lambda_1 = g sin^2 t` and
//!   `||grad f|| = 2 g |sin t cos t|`, `g` the eigengap. With `c = 2 / sqrt(g)` the KL
//!   inequality reduces to `|cos t| >= 1/2`, i.e. `||x - v_1|| <= 1`.
//! * `rosenbrock`: nondegenerate minimiser; `c = sqrt(2 / mu_H)` from the Hessian
//!   at `(1, 1)`, valid in a small ball (`delta = 0.1`).

use std::sync::Arc;

use nalgebra::{DMatrix, DVector, SymmetricEigen};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde_json::Value;

use super::{
    CompositeObjective, L0Penalty, L1Norm, LeastSquares, PowerNorm, ProblemKind, QuadraticForm,
    Rosenbrock, SphereManifold, SphereProblem, TestProblem, ZeroFunction,
};
use crate::error::{Error, Result};
use crate::kl::KlProfile;
use crate::problems::ProxableFunction;
use crate::vector::Vector;

/// Key-value parameters for [`make_test_problem`].
pub type ParamMap = serde_json::Map<String, Value>;

pub const PROBLEM_NAMES: [&str; 5] = [
    "lasso",
    "quartic",
    "l0_least_squares",
    "rayleigh_sphere",
    "rosenbrock",
];

/// Builds a named test problem.
///
/// Recognised keys (all optional): `dim`, `seed`, `lambda`, `p`, `design`
/// (`"random"` or `"identity"`), `a` (matrix as rows), `b`, `diag`, `x0`.
pub fn make_test_problem(name: &str, params: &ParamMap) -> Result<TestProblem> {
    let p = Params(params);
    match name {
        "lasso" => lasso(&p),
        "quartic" => quartic(&p),
        "l0_least_squares" => l0_least_squares(&p),
        "rayleigh_sphere" => rayleigh_sphere(&p),
        "rosenbrock" => rosenbrock(&p),
        other => Err(Error::param("problem.name", other, &PROBLEM_NAMES.join(", "))),
    }
}

struct Params<'a>(&'a ParamMap);

impl Params<'_> {
    fn f64_or(&self, key: &str, default: f64) -> Result<f64> {
        match self.0.get(key) {
            None => Ok(default),
            Some(v) => v
                .as_f64()
                .filter(|x| x.is_finite())
                .ok_or_else(|| Error::param(&format!("problem.params.{key}"), v, "a finite number")),
        }
    }

    fn usize_or(&self, key: &str, default: usize) -> Result<usize> {
        match self.0.get(key) {
            None => Ok(default),
            Some(v) => v
                .as_u64()
                .map(|x| x as usize)
                .ok_or_else(|| {
                    Error::param(&format!("problem.params.{key}"), v, "a nonnegative integer")
                }),
        }
    }

    fn u64_or(&self, key: &str, default: u64) -> Result<u64> {
        Ok(self.usize_or(key, default as usize)? as u64)
    }

    fn str_or<'s>(&'s self, key: &str, default: &'s str) -> Result<&'s str> {
        match self.0.get(key) {
            None => Ok(default),
            Some(v) => v
                .as_str()
                .ok_or_else(|| Error::param(&format!("problem.params.{key}"), v, "a string")),
        }
    }

    fn vector(&self, key: &str) -> Result<Option<DVector<f64>>> {
        let Some(v) = self.0.get(key) else {
            return Ok(None);
        };
        let bad = || Error::param(&format!("problem.params.{key}"), v, "an array of finite numbers");
        let arr = v.as_array().ok_or_else(bad)?;
        let coords = arr
            .iter()
            .map(|c| c.as_f64().filter(|x| x.is_finite()))
            .collect::<Option<Vec<_>>>()
            .ok_or_else(bad)?;
        if coords.is_empty() {
            return Err(bad());
        }
        Ok(Some(DVector::from_vec(coords)))
    }

    fn matrix(&self, key: &str) -> Result<Option<DMatrix<f64>>> {
        let Some(v) = self.0.get(key) else {
            return Ok(None);
        };
        let bad = || {
            Error::param(
                &format!("problem.params.{key}"),
                "<matrix>",
                "a non-empty array of equal-length numeric rows",
            )
        };
        let rows = v.as_array().ok_or_else(bad)?;
        let mut data = Vec::new();
        let mut ncols = None;
        for row in rows {
            let r = row.as_array().ok_or_else(bad)?;
            if *ncols.get_or_insert(r.len()) != r.len() || r.is_empty() {
                return Err(bad());
            }
            for c in r {
                data.push(c.as_f64().filter(|x| x.is_finite()).ok_or_else(bad)?);
            }
        }
        let ncols = ncols.ok_or_else(bad)?;
        Ok(Some(DMatrix::from_row_slice(rows.len(), ncols, &data)))
    }
}

fn rng_for(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

fn gaussian_matrix(rng: &mut ChaCha8Rng, n: usize, m: usize) -> DMatrix<f64> {
    DMatrix::from_fn(n, m, |_, _| rng.sample::<f64, _>(StandardNormal))
}

/// `I + 0.3 G / sqrt(n)`: singular values concentrate in roughly `[0.4, 1.6]`.
fn well_conditioned_design(rng: &mut ChaCha8Rng, n: usize) -> DMatrix<f64> {
    DMatrix::identity(n, n) + gaussian_matrix(rng, n, n) * (0.3 / (n as f64).sqrt())
}

fn min_eigenvalue_gram(a: &DMatrix<f64>) -> f64 {
    SymmetricEigen::new(a.tr_mul(a)).eigenvalues.min()
}

fn strongly_convex_kl(a: &DMatrix<f64>, eta: Option<f64>, delta: Option<f64>) -> Result<KlProfile> {
    let mu = min_eigenvalue_gram(a);
    if !(mu > 1e-12) {
        return Err(Error::Precondition(format!(
            "design matrix must have full column rank (lambda_min(A^T A) = {mu:e})"
        )));
    }
    KlProfile::new(0.5, (2.0 / mu).sqrt(), eta, delta)
}

fn start_point(p: &Params, n: usize, default: DVector<f64>) -> Result<Vector> {
    let x0 = p.vector("x0")?.unwrap_or(default);
    if x0.len() != n {
        return Err(Error::Dimension {
            context: "problem.params.x0".into(),
            expected: n,
            got: x0.len(),
        });
    }
    Vector::from_dvector(x0)
}

/// Explicit `a`/`b` data, or an identity design with given or random `b`.
fn explicit_design(p: &Params, n: usize, rng: &mut ChaCha8Rng) -> Result<Option<(DMatrix<f64>, DVector<f64>)>> {
    let design = p.str_or("design", "random")?;
    if let Some(a) = p.matrix("a")? {
        let b = p
            .vector("b")?
            .ok_or_else(|| Error::param("problem.params.b", "missing", "required when `a` is given"))?;
        return Ok(Some((a, b)));
    }
    match design {
        "identity" => {
            let b = match p.vector("b")? {
                Some(b) => b,
                None => DVector::from_fn(n, |_, _| 2.0 * rng.sample::<f64, _>(StandardNormal)),
            };
            Ok(Some((DMatrix::identity(b.len(), b.len()), b)))
        }
        "random" => Ok(None),
        other => Err(Error::param("problem.params.design", other, "random, identity")),
    }
}

fn is_identity(a: &DMatrix<f64>) -> bool {
    a.is_square() && *a == DMatrix::identity(a.nrows(), a.ncols())
}

fn lasso(p: &Params) -> Result<TestProblem> {
    let n = p.usize_or("dim", 50)?;
    let lambda = p.f64_or("lambda", 0.1)?;
    if lambda < 0.0 {
        return Err(Error::param("problem.params.lambda", lambda, "[0,inf)"));
    }
    let seed = p.u64_or("seed", 0)?;
    let mut rng = rng_for(seed);

    let (a, b, minimizer) = match explicit_design(p, n, &mut rng)? {
        Some((a, b)) => {
            // identity design: the minimiser is the soft threshold of b
            let m = is_identity(&a).then(|| b.map(|v| v.signum() * (v.abs() - lambda).max(0.0)));
            (a, b, m)
        }
        None => {
            if n == 0 {
                return Err(Error::param("problem.params.dim", 0, "[1,inf)"));
            }
            // planted minimiser: grad f(x*) = -lambda s with s in the l1 subdifferential at x*
            let a = well_conditioned_design(&mut rng, n);
            let mut x_star = DVector::zeros(n);
            let mut s = DVector::zeros(n);
            for i in 0..n {
                if i % 2 == 0 {
                    let mag = 0.5 + rng.random::<f64>();
                    let sign = if rng.random::<bool>() { 1.0 } else { -1.0 };
                    x_star[i] = sign * mag;
                    s[i] = sign;
                } else {
                    s[i] = rng.random_range(-0.5..0.5);
                }
            }
            let y = a
                .transpose()
                .lu()
                .solve(&s)
                .ok_or_else(|| Error::Precondition("random design is singular".into()))?;
            let b = &a * &x_star + y * lambda;
            (a, b, Some(x_star))
        }
    };
    let dim = a.ncols();
    let kl = strongly_convex_kl(&a, None, None)?;
    let smooth = Arc::new(LeastSquares::new(a, b)?);
    let nonsmooth: Arc<dyn ProxableFunction> = if lambda > 0.0 {
        Arc::new(L1Norm::new(lambda)?)
    } else {
        Arc::new(ZeroFunction)
    };
    let objective = CompositeObjective::new(smooth, nonsmooth, Some(0.0));
    let optimal_value = minimizer.as_ref().map(|m| objective.value(m));
    Ok(TestProblem {
        problem_id: format!("lasso(n={dim},lambda={lambda},seed={seed})"),
        objective: ProblemKind::Composite(objective),
        kl,
        minimizer: minimizer.map(Vector::from_dvector).transpose()?,
        optimal_value,
        x0: start_point(p, dim, DVector::zeros(dim))?,
    })
}

fn quartic(p: &Params) -> Result<TestProblem> {
    let n = p.usize_or("dim", 1)?;
    let power = p.f64_or("p", 4.0)?;
    let f = PowerNorm::new(n, power)?;
    let theta = (power - 1.0) / power;
    Ok(TestProblem {
        problem_id: format!("quartic(n={n},p={power})"),
        objective: ProblemKind::Composite(CompositeObjective::smooth_only(Arc::new(f), Some(0.0))),
        kl: KlProfile::new(theta, 1.0, None, None)?,
        minimizer: Some(Vector::zeros(n)),
        optimal_value: Some(0.0),
        x0: start_point(p, n, DVector::from_element(n, 1.0))?,
    })
}

fn l0_least_squares(p: &Params) -> Result<TestProblem> {
    let n = p.usize_or("dim", 20)?;
    let lambda = p.f64_or("lambda", 0.05)?;
    let seed = p.u64_or("seed", 0)?;
    let mut rng = rng_for(seed);
    let (a, b) = match explicit_design(p, n, &mut rng)? {
        Some(ab) => ab,
        None => {
            if n == 0 {
                return Err(Error::param("problem.params.dim", 0, "[1,inf)"));
            }
            let a = well_conditioned_design(&mut rng, n);
            let x_true = DVector::from_fn(n, |i, _| if i % 3 == 0 { 1.0 + i as f64 / n as f64 } else { 0.0 });
            let noise = DVector::from_fn(n, |_, _| 0.01 * rng.sample::<f64, _>(StandardNormal));
            let b = &a * x_true + noise;
            (a, b)
        }
    };
    let dim = a.ncols();
    // with an identity design the problem separates; x_i = b_i exactly when b_i^2 / 2 > lambda
    let minimizer = is_identity(&a).then(|| {
        let t = (2.0 * lambda).sqrt();
        b.map(|v| if v.abs() > t { v } else { 0.0 })
    });
    let delta = minimizer.as_ref().and_then(|m| {
        m.iter()
            .filter(|v| **v != 0.0)
            .map(|v| 0.5 * v.abs())
            .reduce(f64::min)
    });
    let kl = strongly_convex_kl(&a, Some(lambda), delta)?;
    let objective = CompositeObjective::new(
        Arc::new(LeastSquares::new(a, b)?),
        Arc::new(L0Penalty::new(lambda)?),
        Some(0.0),
    );
    let optimal_value = minimizer.as_ref().map(|m| objective.value(m));
    Ok(TestProblem {
        problem_id: format!("l0_least_squares(n={dim},lambda={lambda},seed={seed})"),
        objective: ProblemKind::Composite(objective),
        kl,
        minimizer: minimizer.map(Vector::from_dvector).transpose()?,
        optimal_value,
        x0: start_point(p, dim, DVector::zeros(dim))?,
    })
}

fn rayleigh_sphere(p: &Params) -> Result<TestProblem> {
    let seed = p.u64_or("seed", 0)?;
    let mut rng = rng_for(seed);
    let a = if let Some(a) = p.matrix("a")? {
        a
    } else if let Some(d) = p.vector("diag")? {
        DMatrix::from_diagonal(&d)
    } else {
        let n = p.usize_or("dim", 20)?;
        let g = gaussian_matrix(&mut rng, n, n);
        (&g + g.transpose()) * 0.5
    };
    let q = QuadraticForm::new(a)?;
    let n = q.matrix().nrows();
    let manifold = SphereManifold::new(n)?;

    let eig = SymmetricEigen::new(q.matrix().clone());
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| eig.eigenvalues[i].total_cmp(&eig.eigenvalues[j]));
    let lambda_min = eig.eigenvalues[order[0]];
    let gap = eig.eigenvalues[order[1]] - lambda_min;
    if !(gap > 1e-12 * lambda_min.abs().max(1.0)) {
        return Err(Error::Precondition(format!(
            "smallest eigenvalue must be simple (eigengap {gap:e})"
        )));
    }
    let v1 = eig.eigenvectors.column(order[0]).into_owned();

    let default_x0 = DVector::from_fn(n, |_, _| rng.sample::<f64, _>(StandardNormal));
    let x0 = start_point(p, n, default_x0)?;
    let x0 = Vector::from_dvector(manifold.normalize(&x0)?)?;
    Ok(TestProblem {
        problem_id: format!("rayleigh_sphere(n={n},seed={seed})"),
        objective: ProblemKind::Sphere(SphereProblem {
            f: Arc::new(q),
            manifold,
        }),
        kl: KlProfile::new(0.5, 2.0 / gap.sqrt(), None, Some(1.0))?,
        minimizer: Some(Vector::from_dvector(v1)?),
        optimal_value: Some(lambda_min),
        x0,
    })
}

fn rosenbrock(p: &Params) -> Result<TestProblem> {
    let hessian = DMatrix::from_row_slice(2, 2, &[802.0, -400.0, -400.0, 200.0]);
    let mu: f64 = SymmetricEigen::new(hessian).eigenvalues.min();
    Ok(TestProblem {
        problem_id: "rosenbrock".into(),
        objective: ProblemKind::Composite(CompositeObjective::smooth_only(Arc::new(Rosenbrock), Some(0.0))),
        kl: KlProfile::new(0.5, (2.0 / mu).sqrt(), None, Some(0.1))?,
        minimizer: Some(Vector::new(vec![1.0, 1.0])?),
        optimal_value: Some(0.0),
        x0: start_point(p, 2, DVector::from_vec(vec![-1.2, 1.0]))?,
    })
}
