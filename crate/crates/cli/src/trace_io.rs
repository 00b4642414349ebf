//! Trace CSV files and their JSON metadata sidecar.
//!
//! Floats are written with 17 significant digits, which round-trips every `f64`.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use serde_json::Value;
use zhd_core::{Trace, TraceRecord, Vector};

use crate::error::{CliError, CliResult};

pub const FIXED_COLUMNS: [&str; 7] = ["k", "phi", "c", "step", "dx_norm", "witness_norm", "backtracks"];

/// What the CSV cannot carry: the problem id, solver metadata and the known minimiser.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TraceMeta {
    pub problem_id: String,
    pub solver_params: BTreeMap<String, Value>,
    #[serde(default)]
    pub minimizer: Option<Vec<f64>>,
    #[serde(default)]
    pub sign_invariant: bool,
}

/// `dir/trace.csv` -> `dir/trace.meta.json`.
pub fn meta_path(trace_path: &Path) -> PathBuf {
    trace_path.with_extension("meta.json")
}

fn fmt_f64(v: f64) -> String {
    format!("{v:.16e}")
}

pub fn header(dim: usize) -> Vec<String> {
    FIXED_COLUMNS
        .iter()
        .map(|s| s.to_string())
        .chain((0..dim).map(|i| format!("x_{i}")))
        .collect()
}

pub fn write_trace_csv<W: std::io::Write>(out: W, trace: &Trace) -> csv::Result<()> {
    let dim = trace.records.first().map_or(0, |r| r.x.dim());
    let mut w = csv::Writer::from_writer(out);
    w.write_record(header(dim))?;
    for r in &trace.records {
        let mut row = vec![
            r.k.to_string(),
            fmt_f64(r.phi),
            fmt_f64(r.c),
            fmt_f64(r.step),
            fmt_f64(r.dx_norm),
            r.witness_norm.map(fmt_f64).unwrap_or_default(),
            r.backtracks.to_string(),
        ];
        row.extend(r.x.iter().map(|v| fmt_f64(*v)));
        w.write_record(&row)?;
    }
    w.flush()?;
    Ok(())
}

pub fn write_trace(path: &Path, trace: &Trace) -> CliResult<()> {
    let file = std::fs::File::create(path).map_err(|e| CliError::io(path, e))?;
    write_trace_csv(std::io::BufWriter::new(file), trace).map_err(|e| CliError::Schema {
        path: path.to_path_buf(),
        message: e.to_string(),
    })
}

/// Reads a trace, checking the header, every field and that `k` runs `0, 1, 2, ...`.
pub fn read_trace_csv<R: std::io::Read>(input: R, path: &Path) -> CliResult<Trace> {
    let schema = |message: String| CliError::Schema {
        path: path.to_path_buf(),
        message,
    };
    let mut rdr = csv::ReaderBuilder::new().has_headers(true).from_reader(input);
    let head = rdr.headers().map_err(|e| schema(format!("header: {e}")))?.clone();
    let names: Vec<&str> = head.iter().collect();
    for (i, want) in FIXED_COLUMNS.iter().enumerate() {
        match names.get(i) {
            Some(got) if got == want => {}
            Some(got) => return Err(schema(format!("header column {}: expected `{want}`, found `{got}`", i + 1))),
            None => return Err(schema(format!("header: missing column `{want}`"))),
        }
    }
    let dim = names.len() - FIXED_COLUMNS.len();
    if dim == 0 {
        return Err(schema("header: no coordinate columns `x_0`, `x_1`, ...".into()));
    }
    for (i, got) in names[FIXED_COLUMNS.len()..].iter().enumerate() {
        if *got != format!("x_{i}") {
            return Err(schema(format!(
                "header column {}: expected `x_{i}`, found `{got}`",
                FIXED_COLUMNS.len() + i + 1
            )));
        }
    }

    let mut trace = Trace::new(path.file_stem().map_or("trace".into(), |s| s.to_string_lossy().into_owned()));
    for (row_idx, rec) in rdr.records().enumerate() {
        let row = row_idx + 1;
        let rec = rec.map_err(|e| schema(format!("row {row}: {e}")))?;
        let field = |col: usize| rec.get(col).unwrap_or("");
        let num = |col: usize| -> CliResult<f64> {
            let s = field(col);
            s.parse::<f64>()
                .ok()
                .filter(|v| v.is_finite())
                .ok_or_else(|| schema(format!("row {row}, column `{}`: `{s}` is not a finite number", names[col])))
        };
        let int = |col: usize| -> CliResult<usize> {
            let s = field(col);
            s.parse::<usize>()
                .map_err(|_| schema(format!("row {row}, column `{}`: `{s}` is not a non-negative integer", names[col])))
        };
        let k = int(0)?;
        if k != row - 1 {
            return Err(schema(format!(
                "row {row}, column `k`: found {k}, expected {} (rows must be consecutive from 0)",
                row - 1
            )));
        }
        let witness_norm = if field(5).is_empty() { None } else { Some(num(5)?) };
        let x = (0..dim)
            .map(|i| num(FIXED_COLUMNS.len() + i))
            .collect::<CliResult<Vec<f64>>>()?;
        trace.records.push(TraceRecord {
            k,
            x: Vector::new(x).map_err(|e| schema(format!("row {row}: {e}")))?,
            phi: num(1)?,
            c: num(2)?,
            step: num(3)?,
            dx_norm: num(4)?,
            witness_norm,
            backtracks: int(6)?,
        });
    }
    if trace.records.is_empty() {
        return Err(schema("no data rows".into()));
    }
    Ok(trace)
}

pub fn read_trace(path: &Path) -> CliResult<Trace> {
    let file = std::fs::File::open(path).map_err(|e| CliError::io(path, e))?;
    read_trace_csv(std::io::BufReader::new(file), path)
}

pub fn write_meta(path: &Path, meta: &TraceMeta) -> CliResult<()> {
    let text = serde_json::to_string_pretty(meta).expect("metadata serialises");
    std::fs::write(path, text + "\n").map_err(|e| CliError::io(path, e))
}

pub fn read_meta(path: &Path) -> CliResult<TraceMeta> {
    let text = std::fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
    serde_json::from_str(&text).map_err(|e| CliError::Schema {
        path: path.to_path_buf(),
        message: e.to_string(),
    })
}

/// Reads `trace.csv` and, when present, its sidecar; returns the metadata for minimiser lookups.
pub fn load_trace_with_meta(path: &Path, use_meta: bool) -> CliResult<(Trace, Option<TraceMeta>)> {
    let mut trace = read_trace(path)?;
    let mp = meta_path(path);
    let meta = if use_meta && mp.exists() {
        let m = read_meta(&mp)?;
        trace.problem_id = m.problem_id.clone();
        trace.solver_params = m.solver_params.clone();
        Some(m)
    } else {
        None
    };
    Ok((trace, meta))
}
