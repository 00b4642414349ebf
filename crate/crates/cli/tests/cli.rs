use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use serde_json::Value;
use tempfile::TempDir;
use zhd_cli::config::RunConfig;
use zhd_cli::trace_io;

fn zhd(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_zhd"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn code(o: &Output) -> i32 {
    o.status.code().expect("exit code")
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

fn write_config(dir: &Path, name: &str, json: Value) -> PathBuf {
    let p = dir.join(name);
    std::fs::write(&p, serde_json::to_string_pretty(&json).unwrap()).unwrap();
    p
}

/// Runs `config` into `dir/out` and returns the exit code and output directory.
fn run(dir: &Path, json: Value) -> (Output, PathBuf) {
    let cfg = write_config(dir, "run.json", json);
    let out = dir.join("out");
    let o = zhd(&["run", cfg.to_str().unwrap(), "--out", out.to_str().unwrap()]);
    (o, out)
}

fn read_json(p: &Path) -> Value {
    serde_json::from_str(&std::fs::read_to_string(p).unwrap()).unwrap()
}

fn small_lasso() -> Value {
    serde_json::json!({
        "problem": {"name": "lasso", "params": {"dim": 10}},
        "solver": {"name": "pgm", "params": {"stop_tol": 1e-10}},
        "seed": 3
    })
}

#[test]
fn run_writes_all_outputs_and_trace_round_trips() {
    let tmp = TempDir::new().unwrap();
    let (o, out) = run(tmp.path(), small_lasso());
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    for f in ["trace.csv", "trace.meta.json", "report.json", "summary.txt"] {
        assert!(out.join(f).exists(), "{f} missing");
    }
    let (trace, meta) = trace_io::load_trace_with_meta(&out.join("trace.csv"), true).unwrap();
    let meta = meta.unwrap();
    assert_eq!(trace.param_str("solver"), Some("pgm"));
    assert_eq!(meta.minimizer.as_ref().map(Vec::len), Some(10));

    // writing the parsed trace back gives the same bytes
    let again = tmp.path().join("again.csv");
    trace_io::write_trace(&again, &trace).unwrap();
    assert_eq!(std::fs::read(&again).unwrap(), std::fs::read(out.join("trace.csv")).unwrap());

    let report = read_json(&out.join("report.json"));
    assert_eq!(report["passed"], true);
    assert_eq!(report["h1"]["verdict"]["status"], "pass");
}

#[test]
fn runs_are_byte_identical() {
    let a = TempDir::new().unwrap();
    let b = TempDir::new().unwrap();
    let (oa, outa) = run(a.path(), small_lasso());
    let (ob, outb) = run(b.path(), small_lasso());
    assert_eq!((code(&oa), code(&ob)), (0, 0));
    for f in ["trace.csv", "trace.meta.json", "report.json", "summary.txt"] {
        assert_eq!(std::fs::read(outa.join(f)).unwrap(), std::fs::read(outb.join(f)).unwrap(), "{f}");
    }
}

#[test]
fn lasso_linear_rate_check_passes() {
    let tmp = TempDir::new().unwrap();
    let mut cfg = small_lasso();
    cfg["rate_check"] = serde_json::json!({"regime": "linear"});
    let (o, out) = run(tmp.path(), cfg);
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    let report = read_json(&out.join("report.json"));
    assert_eq!(report["rate_fits"][0]["regime"], "linear");
    assert_eq!(report["rate_fits"][0]["reference"], "minimizer");
    assert!(report["rate_fits"][0]["fitted_rho"].as_f64().unwrap() < 1.0);
}

#[test]
fn quartic_sublinear_rate_check_passes() {
    let tmp = TempDir::new().unwrap();
    let cfg = serde_json::json!({
        "problem": {"name": "quartic"},
        "solver": {"name": "pgm", "params": {"gamma_max": 0.1, "max_iters": 100000, "stop_tol": 1e-300}},
        "conformance": {"burn_in_fraction": 0.001},
        "rate_check": {"regime": "kl"}
    });
    let (o, out) = run(tmp.path(), cfg);
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    let fit = &read_json(&out.join("report.json"))["rate_fits"][0];
    assert_eq!(fit["expected"]["regime"], "sublinear");
    assert_eq!(fit["expected"]["exponent"], -0.5);
    assert!((fit["exponent"].as_f64().unwrap() + 0.5).abs() < 0.05, "{fit}");

    let trace = out.join("trace.csv");
    let o = zhd(&["rate", "--trace", trace.to_str().unwrap(), "--theta", "0.75", "--burn-in", "0.001"]);
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    let check: Value = serde_json::from_slice(&o.stdout).unwrap();
    assert_eq!(check["passed"], true);
    assert_eq!(check["reference"], "minimizer");

    // a linear prediction does not fit a sublinear run
    let o = zhd(&["rate", "--trace", trace.to_str().unwrap(), "--theta", "0.5"]);
    assert_eq!(code(&o), 2);
    let o = zhd(&["rate", "--trace", trace.to_str().unwrap(), "--theta", "0"]);
    assert_eq!(code(&o), 1);
}

#[test]
fn every_solver_family_runs() {
    for cfg in [
        serde_json::json!({"problem": {"name": "l0_least_squares"}, "solver": {"name": "pgm"}}),
        serde_json::json!({"problem": {"name": "rayleigh_sphere", "params": {"dim": 6}}, "solver": {"name": "rgm", "params": {"stop_tol": 1e-10}}, "seed": 2}),
        serde_json::json!({"problem": {"name": "rosenbrock"}, "solver": {"name": "nlsa", "params": {"stop_tol": 1e-9}}}),
    ] {
        let tmp = TempDir::new().unwrap();
        let (o, out) = run(tmp.path(), cfg.clone());
        assert_eq!(code(&o), 0, "{cfg}: {}", stderr(&o));
        let o = zhd(&["check", "--trace", out.join("trace.csv").to_str().unwrap()]);
        assert_eq!(code(&o), 0, "{cfg}: {}", stderr(&o));
    }
}

#[test]
fn check_reports_corrupted_merit_with_status_2() {
    let tmp = TempDir::new().unwrap();
    let (o, out) = run(tmp.path(), small_lasso());
    assert_eq!(code(&o), 0);
    let path = out.join("trace.csv");
    let mut trace = trace_io::read_trace(&path).unwrap();
    // C below Phi breaks the sandwich and the decrease condition
    trace.records[5].c = trace.records[5].phi - 1.0;
    trace_io::write_trace(&path, &trace).unwrap();
    let report = tmp.path().join("check.json");
    let o = zhd(&["check", "--trace", path.to_str().unwrap(), "--report", report.to_str().unwrap()]);
    assert_eq!(code(&o), 2, "{}", stderr(&o));
    let r = read_json(&report);
    assert_eq!(r["passed"], false);
    assert_eq!(r["sandwich"]["passed"], false);
}

#[test]
fn check_rejects_a_deleted_row() {
    let tmp = TempDir::new().unwrap();
    let (_, out) = run(tmp.path(), small_lasso());
    let path = out.join("trace.csv");
    let text = std::fs::read_to_string(&path).unwrap();
    let kept: Vec<&str> = text.lines().enumerate().filter(|&(i, _)| i != 4).map(|(_, l)| l).collect();
    std::fs::write(&path, kept.join("\n") + "\n").unwrap();
    let o = zhd(&["check", "--trace", path.to_str().unwrap()]);
    assert_eq!(code(&o), 1);
    assert!(stderr(&o).contains("row 4, column `k`"), "{}", stderr(&o));
}

#[test]
fn check_without_metadata_estimates_constants() {
    let tmp = TempDir::new().unwrap();
    let (_, out) = run(tmp.path(), small_lasso());
    let path = out.join("trace.csv");
    let report = tmp.path().join("r.json");
    let o = zhd(&["check", "--trace", path.to_str().unwrap(), "--no-meta", "--report", report.to_str().unwrap()]);
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    assert_eq!(read_json(&report)["constants"]["source"], "estimated");
}

#[test]
fn out_of_range_rho2_is_a_config_error() {
    let tmp = TempDir::new().unwrap();
    let (o, _) = run(
        tmp.path(),
        serde_json::json!({"problem": {"name": "rayleigh_sphere"}, "solver": {"name": "rgm", "params": {"rho2": 1.5}}}),
    );
    assert_eq!(code(&o), 1);
    let e = stderr(&o);
    assert!(e.contains("solver.params.rho2") && e.contains("[0,1)"), "{e}");
}

#[test]
fn unknown_keys_are_named() {
    let tmp = TempDir::new().unwrap();
    let (o, _) = run(
        tmp.path(),
        serde_json::json!({"problem": {"name": "lasso"}, "solver": {"name": "pgm", "params": {"gama_max": 1}}}),
    );
    assert_eq!(code(&o), 1);
    assert!(stderr(&o).contains("gama_max"), "{}", stderr(&o));
}

#[test]
fn solver_problem_mismatch_is_rejected() {
    let tmp = TempDir::new().unwrap();
    let (o, _) = run(tmp.path(), serde_json::json!({"problem": {"name": "lasso"}, "solver": {"name": "rgm"}}));
    assert_eq!(code(&o), 1);
    assert!(stderr(&o).contains("sphere"), "{}", stderr(&o));
    let (o, _) = run(tmp.path(), serde_json::json!({"problem": {"name": "lasso"}, "solver": {"name": "nlsa"}}));
    assert_eq!(code(&o), 1);
}

#[test]
fn line_search_failure_leaves_a_partial_trace() {
    let tmp = TempDir::new().unwrap();
    let (o, out) = run(
        tmp.path(),
        serde_json::json!({
            "problem": {"name": "lasso", "params": {"dim": 10}},
            "solver": {"name": "pgm", "params": {"gamma_max": 1e6, "max_halvings": 2}}
        }),
    );
    assert_eq!(code(&o), 1, "{}", stderr(&o));
    assert!(stderr(&o).contains("error:"));
    let t = trace_io::read_trace(&out.join("trace.csv")).unwrap();
    assert!(!t.records.is_empty());
}

#[test]
fn missing_output_dir_is_an_error() {
    let tmp = TempDir::new().unwrap();
    let cfg = write_config(tmp.path(), "c.json", small_lasso());
    let o = zhd(&["run", cfg.to_str().unwrap()]);
    assert_eq!(code(&o), 1);
    assert!(stderr(&o).contains("output_dir"));
}

#[test]
fn usage_errors_exit_1() {
    assert_eq!(code(&zhd(&["check"])), 1);
    assert_eq!(code(&zhd(&["check", "--trace", "x.csv", "--tau", "2"])), 1);
    assert_eq!(code(&zhd(&["--help"])), 0);
}

#[test]
fn shipped_configs_parse() {
    let dir = Path::new(env!("CARGO_MANIFEST_DIR")).join("../../configs");
    let mut n = 0;
    for entry in std::fs::read_dir(&dir).unwrap() {
        let p = entry.unwrap().path();
        if p.extension().is_some_and(|e| e == "json") {
            let cfg = RunConfig::from_path(&p).unwrap_or_else(|e| panic!("{}: {e}", p.display()));
            cfg.problem_params().unwrap();
            n += 1;
        }
    }
    assert!(n >= 5);
}
