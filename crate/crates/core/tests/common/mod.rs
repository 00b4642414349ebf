//! Suite runs and trace-level checks shared by the integration tests.
#![allow(dead_code)]

use nalgebra::{DMatrix, DVector};
use serde_json::Value;
use zhd_core::conformance::{ConformanceOptions, Regime};
use zhd_core::problems::*;
use zhd_core::solvers::*;
use zhd_core::{Trace, Vector};

pub fn pm(v: Value) -> ParamMap {
    v.as_object().expect("object").clone()
}

pub struct SuiteRun {
    pub name: &'static str,
    pub problem: TestProblem,
    pub trace: Trace,
    /// Conformance options with the known minimiser and expected regime filled in.
    pub opts: ConformanceOptions,
}

pub fn lasso_run() -> SuiteRun {
    let problem = make_test_problem("lasso", &ParamMap::new()).unwrap();
    let params = PgmParams {
        stop_tol: 1e-10,
        ..Default::default()
    };
    let trace = pgm_solve(problem.composite().unwrap(), &problem.x0, &params).unwrap();
    let opts = ConformanceOptions {
        expected_regime: Some(Regime::Linear),
        minimizer: problem.minimizer.clone(),
        ..Default::default()
    };
    SuiteRun { name: "pgm/lasso", problem, trace, opts }
}

/// The quartic run to `k = 10^5`. `gamma_max = 1` would land exactly on the
/// minimiser in one step from `x0 = 1`, so the cap is lowered to 0.1.
pub fn quartic_run(iters: usize) -> SuiteRun {
    let problem = make_test_problem("quartic", &ParamMap::new()).unwrap();
    let params = PgmParams {
        gamma_max: 0.1,
        max_iters: iters,
        stop_tol: 1e-300,
        ..Default::default()
    };
    let trace = pgm_solve(problem.composite().unwrap(), &problem.x0, &params).unwrap();
    let opts = ConformanceOptions {
        expected_regime: Some(Regime::Sublinear { exponent: -0.5 }),
        minimizer: problem.minimizer.clone(),
        burn_in_fraction: Some(1e-3),
        ..Default::default()
    };
    SuiteRun { name: "pgm/quartic", problem, trace, opts }
}

pub fn l0_run() -> SuiteRun {
    let problem = make_test_problem("l0_least_squares", &ParamMap::new()).unwrap();
    let trace = pgm_solve(problem.composite().unwrap(), &problem.x0, &PgmParams::default()).unwrap();
    SuiteRun { name: "pgm/l0", problem, trace, opts: ConformanceOptions::default() }
}

pub fn rayleigh_run(seed: u64) -> SuiteRun {
    let problem = make_test_problem("rayleigh_sphere", &pm(serde_json::json!({ "seed": seed }))).unwrap();
    let trace = rgm_solve(problem.sphere().unwrap(), &problem.x0, &RgmParams::default()).unwrap();
    let opts = ConformanceOptions {
        minimizer: problem.minimizer.clone(),
        sign_invariant: true,
        ..Default::default()
    };
    SuiteRun { name: "rgm/rayleigh", problem, trace, opts }
}

pub fn rosenbrock_run() -> SuiteRun {
    let problem = make_test_problem("rosenbrock", &ParamMap::new()).unwrap();
    let params = NlsaParams {
        stop_tol: 1e-9,
        ..Default::default()
    };
    let trace = nlsa_solve(problem.composite().unwrap().smooth.as_ref(), &problem.x0, &params).unwrap();
    SuiteRun { name: "nlsa/rosenbrock", problem, trace, opts: ConformanceOptions::default() }
}

pub fn suite_runs() -> Vec<SuiteRun> {
    vec![lasso_run(), quartic_run(100_000), l0_run(), rayleigh_run(1), rosenbrock_run()]
}

/// The designed oscillating configuration: quartic from 0.5 with a large
/// constant trial step and the smallest averaging weight.
pub fn nonmonotone_params() -> PgmParams {
    PgmParams {
        gamma_max: 50.0,
        p_min: 0.05,
        gamma0_rule: StepRule::Constant,
        max_iters: 2000,
        ..Default::default()
    }
}

pub fn nonmonotone_run() -> SuiteRun {
    let problem = make_test_problem("quartic", &ParamMap::new()).unwrap();
    let x0 = Vector::from_slice(&[0.5]).unwrap();
    let trace = pgm_solve(problem.composite().unwrap(), &x0, &nonmonotone_params()).unwrap();
    SuiteRun { name: "pgm/quartic-oscillating", problem, trace, opts: ConformanceOptions::default() }
}

/// Iterations `k` with `Phi(x^{k+1}) > Phi(x^k)`.
pub fn rises(trace: &Trace) -> Vec<usize> {
    trace
        .records
        .windows(2)
        .filter(|w| w[1].phi > w[0].phi)
        .map(|w| w[0].k)
        .collect()
}

/// First `(k, residual)` where an acceptance inequality recomputed from the trace fails.
///
/// `bound(k)` is the amount the accepted value must sit below `C_k` for the move out of `x^k`.
fn first_certificate_failure(trace: &Trace, bound: impl Fn(usize) -> f64) -> Option<(usize, f64)> {
    let tol = trace.tolerance();
    let r = &trace.records;
    (0..r.len().saturating_sub(1)).find_map(|k| {
        let residual = r[k + 1].phi + bound(k) - r[k].c;
        (residual > tol).then_some((k, residual))
    })
}

/// `Theta(x^{k+1}) + alpha / (2 gamma_k) ||x^{k+1} - x^k||^2 <= C_k`.
pub fn pgm_certificate(trace: &Trace) -> Option<(usize, f64)> {
    let alpha = trace.param_f64("alpha").unwrap();
    let r = &trace.records;
    first_certificate_failure(trace, |k| {
        let (g, d) = (r[k + 1].step, r[k + 1].dx_norm);
        alpha / (2.0 * g) * d * d
    })
}

/// `f(x^{k+1}) <= C_k + rho1 alpha <g, z> - rho2 alpha^2 ||z||^2` with `z = -g`.
pub fn rgm_certificate(trace: &Trace) -> Option<(usize, f64)> {
    let rho1 = trace.param_f64("rho1").unwrap();
    let rho2 = trace.param_f64("rho2").unwrap();
    let r = &trace.records;
    first_certificate_failure(trace, |k| {
        let a = r[k + 1].step;
        let g2 = r[k].witness_norm.unwrap().powi(2);
        rho1 * a * g2 + rho2 * a * a * g2
    })
}

/// `f(x_k + alpha_k d_k) <= C_k + delta alpha_k g_k^T d_k` with `d = -g`, plus `alpha_k <= mu`.
pub fn nlsa_certificate(trace: &Trace) -> Option<(usize, f64)> {
    let delta = trace.param_f64("delta").unwrap();
    let mu = trace.param_f64("mu").unwrap();
    let r = &trace.records;
    if let Some(k) = (1..r.len()).find(|&k| r[k].step > mu) {
        return Some((k - 1, r[k].step - mu));
    }
    first_certificate_failure(trace, |k| delta * r[k + 1].step * r[k].witness_norm.unwrap().powi(2))
}

pub fn certificate(trace: &Trace) -> Option<(usize, f64)> {
    match trace.param_str("solver").unwrap() {
        "pgm" => pgm_certificate(trace),
        "rgm" => rgm_certificate(trace),
        "nlsa" => nlsa_certificate(trace),
        s => panic!("unknown solver {s}"),
    }
}

/// Largest componentwise violation of `w - grad f(x^{k+1}) in lambda d||.||_1(x^{k+1})`,
/// with `w` rebuilt from consecutive iterates. Also returns the largest mismatch
/// against the recorded witness norm.
pub fn lasso_membership_error(problem: &TestProblem, trace: &Trace, lambda: f64) -> (f64, f64) {
    let f = &problem.composite().unwrap().smooth;
    let mut worst: f64 = 0.0;
    let mut norm_gap: f64 = 0.0;
    for w in trace.records.windows(2) {
        let (x_old, x_new) = (w[0].x.as_dvector(), w[1].x.as_dvector());
        let gamma = w[1].step;
        let g_new = f.gradient(x_new);
        let wit = pgm_witness(
            &Vector::from_dvector(g_new.clone()).unwrap(),
            &Vector::from_dvector(f.gradient(x_old)).unwrap(),
            &w[1].x,
            &w[0].x,
            gamma,
        )
        .unwrap();
        norm_gap = norm_gap.max((wit.norm() - w[1].witness_norm.unwrap()).abs());
        let s = wit.as_dvector() - g_new;
        for i in 0..s.len() {
            let e = if x_new[i] != 0.0 {
                (s[i] - lambda * x_new[i].signum()).abs()
            } else {
                (s[i].abs() - lambda).max(0.0)
            };
            worst = worst.max(e);
        }
    }
    (worst, norm_gap)
}

/// Fraction of post-burn-in iterations with `||grad f(x^k)|| <= 2 / (alpha_lo c1) ||x^{k+1} - x^k||`,
/// `alpha_lo` the smallest accepted step over that tail.
pub fn rgm_tail_fraction(trace: &Trace, burn_in: f64) -> f64 {
    let c1 = trace.param_f64("c1").unwrap();
    let r = &trace.records;
    let start = ((burn_in * r.len() as f64) as usize).max(1) - 1;
    let ks: Vec<usize> = (start..r.len() - 1).collect();
    let alpha_lo = ks.iter().map(|&k| r[k + 1].step).fold(f64::INFINITY, f64::min);
    let ok = ks
        .iter()
        .filter(|&&k| r[k].witness_norm.unwrap() <= 2.0 / (alpha_lo * c1) * r[k + 1].dx_norm * (1.0 + 1e-12))
        .count();
    ok as f64 / ks.len() as f64
}

/// Minimiser of `(y - z)^2 / (2 gamma) + g(y)` over the grid `-5:1e-3:5`.
pub fn grid_argmin_1d(gamma: f64, z: f64, g: impl Fn(f64) -> f64) -> f64 {
    let (half, step): (f64, f64) = (5.0, 1e-3);
    let n = (2.0 * half / step).round() as i64;
    let mut best = (f64::INFINITY, 0.0);
    for i in 0..=n {
        let y = -half + i as f64 * step;
        let y = if y.abs() < 1e-12 { 0.0 } else { y };
        let v = (y - z) * (y - z) / (2.0 * gamma) + g(y);
        if v < best.0 {
            best = (v, y);
        }
    }
    best.1
}

/// `||fd - grad|| / (1 + ||grad||)` with central differences at `h = 1e-6 (1 + ||x||)`.
pub fn gradient_fd_error(f: &dyn SmoothFunction, x: &DVector<f64>) -> f64 {
    let h = 1e-6 * (1.0 + x.norm());
    let g = f.gradient(x);
    let fd = DVector::from_fn(x.len(), |i, _| {
        let mut xp = x.clone();
        let mut xm = x.clone();
        xp[i] += h;
        xm[i] -= h;
        (f.value(&xp) - f.value(&xm)) / (2.0 * h)
    });
    (&fd - &g).norm() / (1.0 + g.norm())
}

/// `||R_x(t v) - (x + t v)|| / t` at `t = 1e-2, 1e-3, 1e-4`.
pub fn retraction_ratios(x: &DVector<f64>, v: &DVector<f64>) -> [f64; 3] {
    let xv = Vector::from_dvector(x.clone()).unwrap();
    [1e-2, 1e-3, 1e-4].map(|t| {
        let r = sphere_retract(&xv, &Vector::from_dvector(v * t).unwrap()).unwrap();
        (r.as_dvector() - (x + v * t)).norm() / t
    })
}

pub fn symmetric_gaussian(rng: &mut impl rand::Rng, n: usize) -> DMatrix<f64> {
    let g = DMatrix::<f64>::from_fn(n, n, |_, _| rng.sample(rand_distr::StandardNormal));
    (&g + g.transpose()) * 0.5
}

/// 1-D trace from `(phi, c, dx)` rows, with no witnesses and no metadata.
pub fn scalar_trace(rows: &[(f64, f64, f64)]) -> Trace {
    let mut t = Trace::new("synthetic");
    let mut x = 0.0;
    for (k, &(phi, c, dx)) in rows.iter().enumerate() {
        x += dx;
        t.records.push(zhd_core::TraceRecord {
            k,
            x: Vector::new(vec![x]).unwrap(),
            phi,
            c,
            step: if k == 0 { 0.0 } else { 1.0 },
            dx_norm: dx,
            witness_norm: None,
            backtracks: 0,
        });
    }
    t
}
