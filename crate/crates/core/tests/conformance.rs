mod common;

use common::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use zhd_core::conformance::*;
use zhd_core::constants::{c_hat, c_hat1, compute_m};
use zhd_core::{Error, ErrorSchedule, PositiveSequence, SumBehavior, Trace};

#[test]
fn suite_traces_pass_with_documented_constants() {
    for run in suite_runs() {
        let rep = run_conformance(&run.trace, &run.opts).unwrap();
        assert!(rep.conditions_passed(), "{}: {:#?}", run.name, rep.summary_lines());
        assert!(rep.rates_passed(), "{}: {:#?}", run.name, rep.summary_lines());
        assert_eq!(rep.constants.source, "documented");
        let expected_k1 = if run.name.starts_with("pgm") { 0 } else { 1 };
        assert_eq!(rep.h2.k1_used, expected_k1, "{}", run.name);
        assert_eq!(rep.h3.label, "surrogate");
        // c_hat is recomputable from the report fields
        let c = &rep.constants;
        assert_eq!(c.c_hat, c_hat(c.b_bar_estimate, c.tau_used));
        assert!(c.c_hat1 >= 0.5);
    }
}

#[test]
fn pgm_h1_uses_the_step_cap_and_weight_floor() {
    let run = lasso_run();
    let t = &run.trace;
    let doc = documented_constants(t).unwrap();
    assert_eq!(doc.a_lower, 0.5 / (2.0 * 1.0));
    assert_eq!(doc.tau, 0.1);
    let h1 = check_h1(t, doc.a_lower, doc.tau).unwrap();
    assert!(h1.verdict.passed());
    assert!(h1.tau_recovered.iter().flatten().all(|&tk| tk >= 0.1 - 1e-9 && tk <= 1.0 + 1e-9));
}

#[test]
fn doubled_witness_fails_against_a_tight_multiplier() {
    let t = lasso_run().trace;
    let tight = t.records[1..]
        .iter()
        .map(|r| r.witness_norm.unwrap() / r.dx_norm)
        .fold(0.0, f64::max);
    let b = BSpec::Multiplier(tight);
    let a = PositiveSequence::constant(0.25);
    assert!(check_h2(&t, 0, &b, &ErrorSchedule::Zero, &a).unwrap().verdict.passed());
    let mut bad = t.clone();
    for r in &mut bad.records {
        r.witness_norm = r.witness_norm.map(|w| 2.0 * w);
    }
    let rep = check_h2(&bad, 0, &b, &ErrorSchedule::Zero, &a).unwrap();
    assert!(matches!(rep.verdict, Verdict::Fail { .. }));
    // a failure only says the witness is too large, which the report spells out
    assert!(rep.note.contains("upper-bounds"));
}

#[test]
fn corrupted_merit_fails_h1() {
    let t = lasso_run().trace;
    let doc = documented_constants(&t).unwrap();
    let mut bad = t.clone();
    bad.records[5].c = bad.records[4].c + 1.0;
    let h1 = check_h1(&bad, doc.a_lower, doc.tau).unwrap();
    assert!(matches!(h1.verdict, Verdict::Fail { k: 5, .. }), "{:?}", h1.verdict);
    let rep = run_conformance(&bad, &ConformanceOptions::default()).unwrap();
    assert!(!rep.passed());
    assert!(!rep.sandwich.passed);
}

#[test]
fn hand_built_increase_fails_at_one() {
    let t = scalar_trace(&[(1.0, 1.0, 0.0), (1.5, 1.2, 0.1), (0.5, 0.9, 0.1)]);
    let h1 = check_h1(&t, 0.1, 0.5).unwrap();
    assert!(matches!(h1.verdict, Verdict::Fail { k: 1, .. }), "{:?}", h1.verdict);
    let short = scalar_trace(&[(1.0, 1.0, 0.0)]);
    assert!(matches!(check_h1(&short, 0.1, 0.5), Err(Error::InsufficientData { .. })));
}

#[test]
fn monotone_trace_recovers_unit_weights() {
    let rows: Vec<(f64, f64, f64)> = (0..6)
        .map(|k| {
            let phi = 1.0 / (1 + k) as f64;
            (phi, phi, if k == 0 { 0.0 } else { 0.1 })
        })
        .collect();
    let h1 = check_h1(&scalar_trace(&rows), 1.0, 0.5).unwrap();
    assert!(h1.verdict.passed());
    for tk in h1.tau_recovered.iter().flatten() {
        assert!((tk - 1.0).abs() < 1e-12);
    }
}

#[test]
fn truncated_oscillating_run_is_inconclusive() {
    let mut t = nonmonotone_run().trace;
    t.records.truncate(25);
    let h3 = check_h3(&t, 10).unwrap();
    assert!(matches!(h3.verdict, Verdict::Inconclusive { .. }), "{h3:?}");
    assert_eq!(h3.label, "surrogate");
    t.records.truncate(15);
    assert!(matches!(check_h3(&t, 10), Err(Error::InsufficientData { .. })));
}

#[test]
fn converged_lasso_has_small_h3_gap() {
    let h3 = check_h3(&lasso_run().trace, 10).unwrap();
    assert!(h3.verdict.passed());
    assert!(h3.window_gap <= 1e-8);
    let flat = scalar_trace(&[(2.0, 2.0, 0.0); 30]);
    let h3 = check_h3(&flat, 10).unwrap();
    assert!(h3.verdict.passed());
    assert_eq!(h3.window_gap, 0.0);
}

/// Split recomputed by a direct scan over pairs rather than through `split_k1_k2`.
fn independent_split(t: &Trace, m: usize) -> (Vec<usize>, Vec<usize>) {
    let phi: Vec<f64> = t.records.iter().map(|r| r.phi).collect();
    let c: Vec<f64> = t.records.iter().map(|r| r.c).collect();
    let mut k1 = vec![];
    let mut k2 = vec![];
    for (k, p) in phi.iter().enumerate() {
        match c.get(k + m) {
            Some(ck) if p <= ck => k1.push(k),
            Some(_) => k2.push(k),
            None => {}
        }
    }
    (k1, k2)
}

#[test]
fn oscillating_run_splits_into_both_sets() {
    let t = nonmonotone_run().trace;
    let m = compute_m(0.05, 0).unwrap() as usize;
    let s = split_k1_k2(&t, m).unwrap();
    assert!(!s.k1.is_empty() && !s.k2.is_empty(), "{s:?}");
    let (k1, k2) = independent_split(&t, m);
    assert_eq!((s.k1.clone(), s.k2.clone()), (k1, k2));
    let mut all: Vec<usize> = s.k1.iter().chain(&s.k2).copied().collect();
    all.sort();
    assert_eq!(all, (0..t.len() - m).collect::<Vec<_>>());

    // metadata order does not matter
    let mut permuted = t.clone();
    let entries: Vec<_> = permuted.solver_params.clone().into_iter().rev().collect();
    permuted.solver_params.clear();
    for (k, v) in entries {
        permuted.solver_params.insert(k, v);
    }
    assert_eq!(split_k1_k2(&permuted, m).unwrap(), s);
}

/// Smallest `m` from the closed-form root of `sqrt(tau) s^2 - R s - sqrt(tau)(k1 + 1) = 0`
/// in `s = sqrt(m)`, nudged to absorb rounding at the boundary.
fn m_closed_form(tau: f64, k1: u64) -> u64 {
    let r = (1.0 + (1.0 - tau).sqrt()) * (2 * k1 + 1) as f64;
    let st = tau.sqrt();
    let s = (r + (r * r + 4.0 * tau * (k1 + 1) as f64).sqrt()) / (2.0 * st);
    let holds = |m: u64| {
        let m = m as f64;
        m > (k1 + 1) as f64 && tau * (m - k1 as f64 - 1.0).powi(2) >= r * r * m * (1.0 - 1e-14)
    };
    let mut m = (s * s).ceil() as u64;
    while m > 1 && holds(m - 1) {
        m -= 1;
    }
    while !holds(m) {
        m += 1;
    }
    m
}

#[test]
fn m_matches_closed_form_and_c_hat1_is_at_least_half() {
    for i in 1..=20 {
        let tau = 0.05 * i as f64;
        for k1 in 0..=4 {
            let m = compute_m(tau, k1).unwrap();
            assert_eq!(m, m_closed_form(tau, k1), "tau={tau} k1={k1}");
            assert!(m > k1 + 1);
            assert!(c_hat1(m, tau, k1) >= 0.5 - 1e-12, "tau={tau} k1={k1}");
        }
    }
}

#[test]
fn rate_estimators_recover_planted_parameters() {
    let mut rng = ChaCha8Rng::seed_from_u64(30);
    for rho in [0.5, 0.7, 0.9, 0.95] {
        let d: Vec<f64> = (0..300)
            .map(|k| 2.0 * f64::powi(rho, k) * (1.0 + 0.01 * rng.random_range(-1.0..1.0)))
            .take_while(|v| *v > 1e-280)
            .collect();
        let fit = estimate_linear_rate(&d, 0.2).unwrap();
        let got = fit.fitted_rho.unwrap();
        assert!((got - rho).abs() <= 0.03 * rho, "rho={rho} got={got}");
    }
    for slope in [-0.25, -0.5, -1.0, -2.0] {
        let d: Vec<f64> = (0..2000)
            .map(|k| (k.max(1) as f64).powf(slope) * (1.0 + 0.01 * rng.random_range(-1.0..1.0)))
            .collect();
        let fit = estimate_sublinear_exponent(&d, 0.2).unwrap();
        assert!((fit.fitted_slope - slope).abs() <= 0.05, "slope={slope} got={}", fit.fitted_slope);
    }
    assert!(matches!(estimate_linear_rate(&[1.0; 5], 0.0), Err(Error::InsufficientData { .. })));
}

#[test]
fn solver_rates_match_the_kl_oracle() {
    let lasso = lasso_run();
    assert_eq!(rate_oracle(&lasso.problem.kl).unwrap(), Regime::Linear);
    let rep = run_conformance(&lasso.trace, &lasso.opts).unwrap();
    let fit = &rep.rate_fits[0];
    assert!(fit.passed && fit.fit.fitted_rho.unwrap() < 1.0 && fit.fit.r_squared >= 0.99);
    assert_eq!(fit.reference, DistanceReference::Minimizer);

    let quartic = quartic_run(100_000);
    let expected = rate_oracle(&quartic.problem.kl).unwrap();
    assert_eq!(expected, Regime::Sublinear { exponent: -0.5 });
    let (d, _) = distance_sequence(&quartic.trace, quartic.problem.minimizer.as_ref(), false).unwrap();
    let fit = estimate_sublinear_exponent(&d[..], 1e-3).unwrap();
    assert!(fit.window.0 <= 100 && fit.window.1 == 100_001);
    assert!((-0.65..=-0.35).contains(&fit.fitted_slope), "{}", fit.fitted_slope);
}

#[test]
fn tail_sums_shrink_on_converged_runs() {
    for run in [lasso_run(), l0_run(), rayleigh_run(1), rosenbrock_run()] {
        let t = &run.trace;
        let tails = t.tail_sums();
        assert!(tails.windows(2).all(|w| w[1] <= w[0]), "{}", run.name);
        let stop = t.param_f64("stop_tol").unwrap();
        let rep = run_conformance(t, &run.opts).unwrap();
        assert!(rep.displacement.final_tail_sum <= stop * 100.0, "{}: {:e}", run.name, rep.displacement.final_tail_sum);
    }
}

#[test]
fn displacement_bound_holds_and_catches_jumps() {
    for run in suite_runs() {
        let doc = documented_constants(&run.trace).unwrap();
        let (excess, _) = displacement_bound_excess(&run.trace, doc.a_lower, doc.tau);
        assert!(excess <= 0.0, "{}: {excess:e}", run.name);
    }
    // a long step with no merit decrease cannot be paid for
    let t = scalar_trace(&[(1.0, 1.0, 0.0), (1.0, 1.0, 5.0), (1.0, 1.0, 0.0)]);
    let (excess, range) = displacement_bound_excess(&t, 1.0, 1.0);
    assert!(excess > 4.9);
    assert_eq!(range, Some((1, 1)));
}

#[test]
fn eq12_examples() {
    let b = PositiveSequence::constant(0.5);
    let a = PositiveSequence::constant(4.0);
    let rep = check_eq12(&a, &b, &ErrorSchedule::geometric(1.0, 0.9).unwrap(), 0, 100).unwrap();
    assert!(rep.verdict.passed());
    assert_eq!(rep.b_sum, SumBehavior::Diverges);
    assert!(rep.eps_summable);
    assert!((rep.eps_sum_bound - 9.0).abs() < 1e-9);
    // constant a and b with a one-term window: B_bar = 1 / (b sqrt(a))
    assert!((rep.b_bar_estimate - 1.0).abs() < 1e-12);

    let summable_b = PositiveSequence::Geometric { scale: 1.0, ratio: 0.5 };
    let rep = check_eq12(&a, &summable_b, &ErrorSchedule::Zero, 0, 100).unwrap();
    assert!(!rep.verdict.passed());
}

#[test]
fn missing_metadata_falls_back_to_estimates() {
    let mut t = lasso_run().trace;
    t.solver_params.clear();
    let rep = run_conformance(&t, &ConformanceOptions::default()).unwrap();
    assert_eq!(rep.constants.source, "estimated");
    assert!(rep.conditions_passed(), "{:#?}", rep.summary_lines());

    let mut missing = lasso_run().trace;
    missing.records[3].witness_norm = None;
    assert!(matches!(run_conformance(&missing, &ConformanceOptions::default()), Err(Error::Input(_))));
}

#[test]
fn report_round_trips_through_json() {
    let run = lasso_run();
    let rep = run_conformance(&run.trace, &run.opts).unwrap();
    let s = serde_json::to_string(&rep).unwrap();
    let back: ConformanceReport = serde_json::from_str(&s).unwrap();
    assert_eq!(back, rep);
    let v: serde_json::Value = serde_json::from_str(&s).unwrap();
    assert_eq!(v["h1"]["verdict"]["status"], "pass");
    assert_eq!(v["rate_fits"][0]["regime"], "linear");
    assert_eq!(v["rate_fits"][0]["expected"]["regime"], "linear");
}

#[test]
fn sublinear_rate_check_round_trips() {
    let d: Vec<f64> = (0..200).map(|k| (k.max(1) as f64).powf(-0.5)).collect();
    let rc = rate_check(&d, DistanceReference::FinalIterate, Regime::Sublinear { exponent: -0.5 }, 0.2).unwrap();
    let v = serde_json::to_value(&rc).unwrap();
    assert_eq!(v["regime"], "sublinear");
    assert!((v["exponent"].as_f64().unwrap() + 0.5).abs() < 1e-12);
    assert_eq!(v["reference"], "final_iterate");
    let back: RateCheck = serde_json::from_value(v).unwrap();
    assert_eq!(back, rc);
}
