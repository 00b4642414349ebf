//! The `run`, `check` and `rate` subcommands.

use std::path::{Path, PathBuf};

use log::{info, warn};
use serde::Serialize;
use zhd_core::conformance::{
    distance_sequence, rate_check, regime_for_theta, run_conformance, BSpec, ConformanceOptions,
    ConformanceReport, RateCheck, DEFAULT_BURN_IN,
};
use zhd_core::problems::{make_test_problem, ProblemKind, TestProblem};
use zhd_core::solvers::{nlsa_solve, pgm_solve, rgm_solve};
use zhd_core::{Trace, Vector};

use crate::config::{RunConfig, SolverChoice};
use crate::error::{CliError, CliResult};
use crate::trace_io::{self, TraceMeta};

/// How a command finished when it did not hit an error.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Outcome {
    Passed,
    Failed,
}

impl Outcome {
    pub fn from_bool(passed: bool) -> Self {
        if passed {
            Outcome::Passed
        } else {
            Outcome::Failed
        }
    }

    pub fn exit_code(self) -> i32 {
        match self {
            Outcome::Passed => 0,
            Outcome::Failed => 2,
        }
    }
}

/// `report.json`: the verdict first, then the full conformance report.
#[derive(Serialize)]
struct ReportFile<'a> {
    passed: bool,
    #[serde(flatten)]
    report: &'a ConformanceReport,
}

fn write_json<T: Serialize>(path: &Path, value: &T) -> CliResult<()> {
    let text = serde_json::to_string_pretty(value).expect("report serialises");
    std::fs::write(path, text + "\n").map_err(|e| CliError::io(path, e))
}

fn write_report(path: &Path, report: &ConformanceReport) -> CliResult<()> {
    write_json(
        path,
        &ReportFile {
            passed: report.passed(),
            report,
        },
    )
}

fn solve(problem: &TestProblem, choice: &SolverChoice) -> CliResult<Trace> {
    let mismatch = |solver: &str, needs: &str| {
        CliError::config(
            "solver.name",
            format!("solver `{solver}` needs {needs}; problem `{}` is not one", problem.problem_id),
        )
    };
    let result = match (choice, &problem.objective) {
        (SolverChoice::Pgm(p), ProblemKind::Composite(c)) => pgm_solve(c, &problem.x0, p),
        (SolverChoice::Pgm(_), _) => return Err(mismatch("pgm", "a composite problem")),
        (SolverChoice::Rgm(p), ProblemKind::Sphere(s)) => rgm_solve(s, &problem.x0, p),
        (SolverChoice::Rgm(_), _) => return Err(mismatch("rgm", "a sphere problem")),
        (SolverChoice::Nlsa(p), ProblemKind::Composite(c)) if c.nonsmooth.is_zero() => {
            nlsa_solve(c.smooth.as_ref(), &problem.x0, p)
        }
        (SolverChoice::Nlsa(_), _) => return Err(mismatch("nlsa", "a smooth unconstrained problem")),
    };
    Ok(result?)
}

fn meta_for(problem: &TestProblem, trace: &Trace) -> TraceMeta {
    TraceMeta {
        problem_id: trace.problem_id.clone(),
        solver_params: trace.solver_params.clone(),
        minimizer: problem.minimizer.as_ref().map(|m| m.to_vec()),
        sign_invariant: matches!(problem.objective, ProblemKind::Sphere(_)),
    }
}

fn write_trace_files(dir: &Path, problem: &TestProblem, trace: &Trace) -> CliResult<PathBuf> {
    let path = dir.join("trace.csv");
    trace_io::write_trace(&path, trace)?;
    trace_io::write_meta(&trace_io::meta_path(&path), &meta_for(problem, trace))?;
    Ok(path)
}

/// Solves, writes `trace.csv`, `trace.meta.json`, `report.json` and `summary.txt` into the output directory.
pub fn run(config_path: &Path, out: Option<PathBuf>) -> CliResult<Outcome> {
    let cfg = RunConfig::from_path(config_path)?;
    let dir = out
        .or_else(|| cfg.output_dir.clone())
        .ok_or_else(|| CliError::config("output_dir", "no output directory; set `output_dir` or pass --out"))?;
    std::fs::create_dir_all(&dir).map_err(|e| CliError::io(&dir, e))?;

    let choice = cfg.solver_choice()?;
    let problem = make_test_problem(&cfg.problem.name, &cfg.problem_params()?).map_err(|e| match &e {
        zhd_core::Error::Parameter { name, .. } if name == "problem.name" => CliError::config("problem.name", e.to_string()),
        _ => CliError::config("problem.params", e.to_string()),
    })?;
    info!("problem {} (dim {}), solver {}", problem.problem_id, problem.x0.dim(), cfg.solver.name);

    let mut trace = match solve(&problem, &choice) {
        Ok(t) => t,
        Err(CliError::Core(zhd_core::Error::LineSearch { iteration, halvings, last_step, last_value, partial })) => {
            let mut partial = *partial;
            partial.problem_id = problem.problem_id.clone();
            let path = write_trace_files(&dir, &problem, &partial)?;
            warn!("partial trace with {} records written to {}", partial.len(), path.display());
            return Err(CliError::Core(zhd_core::Error::LineSearch {
                iteration,
                halvings,
                last_step,
                last_value,
                partial: Box::new(partial),
            }));
        }
        Err(e) => return Err(e),
    };
    trace.problem_id = problem.problem_id.clone();
    write_trace_files(&dir, &problem, &trace)?;

    let c = &cfg.conformance;
    let opts = ConformanceOptions {
        k1: c.k1,
        b: cfg.b_override(),
        eps: c.schedules.eps,
        h3_window: c.h3_window,
        burn_in_fraction: c.burn_in_fraction,
        expected_regime: cfg.rate_check.map(|r| r.resolve(&problem)).transpose()?,
        minimizer: problem.minimizer.clone(),
        sign_invariant: matches!(problem.objective, ProblemKind::Sphere(_)),
        ..Default::default()
    };
    let report = run_conformance(&trace, &opts)?;
    write_report(&dir.join("report.json"), &report)?;
    let summary = report.summary_lines().join("\n") + "\n";
    let summary_path = dir.join("summary.txt");
    std::fs::write(&summary_path, &summary).map_err(|e| CliError::io(&summary_path, e))?;
    print!("{summary}");
    Ok(Outcome::from_bool(report.passed()))
}

/// Overrides for `check`; anything unset comes from the sidecar metadata or is estimated.
#[derive(Debug, Clone, Default)]
pub struct CheckArgs {
    pub trace: PathBuf,
    pub k1: Option<usize>,
    pub report: Option<PathBuf>,
    pub a_lower: Option<f64>,
    pub tau: Option<f64>,
    pub b_multiplier: Option<f64>,
    pub h3_window: Option<usize>,
    pub burn_in_fraction: Option<f64>,
    pub no_meta: bool,
}

pub fn check(args: &CheckArgs) -> CliResult<Outcome> {
    let (trace, meta) = trace_io::load_trace_with_meta(&args.trace, !args.no_meta)?;
    if meta.is_none() {
        info!("no metadata for {}; constants are estimated from the trace", args.trace.display());
    }
    let minimizer = meta
        .as_ref()
        .and_then(|m| m.minimizer.clone())
        .map(Vector::new)
        .transpose()?;
    let opts = ConformanceOptions {
        k1: args.k1,
        a_lower: args.a_lower,
        tau: args.tau,
        b: args.b_multiplier.map(BSpec::Multiplier),
        h3_window: args.h3_window,
        burn_in_fraction: args.burn_in_fraction,
        minimizer,
        sign_invariant: meta.as_ref().is_some_and(|m| m.sign_invariant),
        ..Default::default()
    };
    let report = run_conformance(&trace, &opts)?;
    if let Some(path) = &args.report {
        write_report(path, &report)?;
    }
    for line in report.summary_lines() {
        println!("{line}");
    }
    Ok(Outcome::from_bool(report.passed()))
}

pub fn rate(trace_path: &Path, theta: f64, burn_in: Option<f64>, minimizer: Option<Vec<f64>>) -> CliResult<Outcome> {
    let expected = regime_for_theta(theta)?;
    let (trace, meta) = trace_io::load_trace_with_meta(trace_path, true)?;
    let from_meta = meta.as_ref().and_then(|m| m.minimizer.clone());
    let sign_invariant = meta.as_ref().is_some_and(|m| m.sign_invariant);
    let target = minimizer.or(from_meta).map(Vector::new).transpose()?;
    let (dists, reference) = distance_sequence(&trace, target.as_ref(), sign_invariant)?;
    let check: RateCheck = rate_check(&dists, reference, expected, burn_in.unwrap_or(DEFAULT_BURN_IN))?;
    println!("{}", serde_json::to_string_pretty(&check).expect("rate check serialises"));
    Ok(Outcome::from_bool(check.passed))
}
