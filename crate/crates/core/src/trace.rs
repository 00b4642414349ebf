//! Per-iteration solver logs.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};
use serde_json::Value;

use crate::error::{Error, Result};
use crate::vector::Vector;

/// Relative tolerance for every inequality checked on a trace, scaled by `max(1, |C_0|)`.
pub const REL_TOL: f64 = 1e-10;

/// One iteration of a solver run.
///
/// `step`, `dx_norm` and `backtracks` describe the move that produced `x`
/// from the previous iterate, so all three are zero at `k = 0`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TraceRecord {
    pub k: usize,
    pub x: Vector,
    pub phi: f64,
    pub c: f64,
    pub step: f64,
    pub dx_norm: f64,
    /// Norm of an explicit element of the subdifferential at `x` (or of the
    /// Riemannian gradient); absent where the solver has none.
    pub witness_norm: Option<f64>,
    pub backtracks: usize,
}

impl TraceRecord {
    pub fn initial(x: Vector, phi: f64, witness_norm: Option<f64>) -> Self {
        TraceRecord {
            k: 0,
            x,
            phi,
            c: phi,
            step: 0.0,
            dx_norm: 0.0,
            witness_norm,
            backtracks: 0,
        }
    }
}

/// An ordered run log starting at `k = 0`.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct Trace {
    pub problem_id: String,
    pub solver_params: BTreeMap<String, Value>,
    pub records: Vec<TraceRecord>,
}

/// First iteration at which the `Phi <= C_k <= C_{k-1}` sandwich failed.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SandwichViolation {
    pub k: usize,
    pub residual: f64,
}

impl Trace {
    pub fn new(problem_id: impl Into<String>) -> Self {
        Trace {
            problem_id: problem_id.into(),
            ..Default::default()
        }
    }

    pub fn len(&self) -> usize {
        self.records.len()
    }

    pub fn is_empty(&self) -> bool {
        self.records.is_empty()
    }

    pub fn last(&self) -> Option<&TraceRecord> {
        self.records.last()
    }

    pub fn set_param(&mut self, key: &str, value: impl Into<Value>) {
        self.solver_params.insert(key.to_string(), value.into());
    }

    pub fn param_f64(&self, key: &str) -> Option<f64> {
        self.solver_params.get(key).and_then(Value::as_f64)
    }

    pub fn param_str(&self, key: &str) -> Option<&str> {
        self.solver_params.get(key).and_then(Value::as_str)
    }

    /// Absolute tolerance `REL_TOL * max(1, |C_0|)`.
    pub fn tolerance(&self) -> f64 {
        let c0 = self.records.first().map_or(0.0, |r| r.c.abs());
        REL_TOL * c0.max(1.0)
    }

    /// Checks structural invariants: consecutive indices from 0, one dimension,
    /// finite scalars, nonnegative displacements.
    pub fn validate(&self) -> Result<()> {
        let first = self
            .records
            .first()
            .ok_or_else(|| Error::Input("trace has no records".into()))?;
        let n = first.x.dim();
        for (i, r) in self.records.iter().enumerate() {
            if r.k != i {
                return Err(Error::Input(format!(
                    "record {i} has index k = {}; indices must be consecutive from 0",
                    r.k
                )));
            }
            r.x.check_dim(n, &format!("trace record {i}"))?;
            let scalars_ok = [r.phi, r.c, r.step, r.dx_norm].iter().all(|v| v.is_finite())
                && r.witness_norm.is_none_or(f64::is_finite);
            if !scalars_ok {
                return Err(Error::Input(format!("record {i} has a non-finite field")));
            }
            if r.dx_norm < 0.0 || r.witness_norm.is_some_and(|w| w < 0.0) {
                return Err(Error::Input(format!("record {i} has a negative norm")));
            }
        }
        Ok(())
    }

    /// Finds the first `k` violating `Phi(x^k) <= C_k <= C_{k-1}` (or `C_0 = Phi(x^0)`) beyond tolerance.
    pub fn sandwich_violation(&self) -> Option<SandwichViolation> {
        let tol = self.tolerance();
        let first = self.records.first()?;
        let r0 = (first.c - first.phi).abs();
        if r0 > tol {
            return Some(SandwichViolation { k: 0, residual: r0 });
        }
        self.records.windows(2).find_map(|w| {
            let (prev, cur) = (&w[0], &w[1]);
            let residual = (cur.phi - cur.c).max(cur.c - prev.c);
            (residual > tol).then_some(SandwichViolation {
                k: cur.k,
                residual,
            })
        })
    }

    pub fn dx_norms(&self) -> Vec<f64> {
        self.records.iter().map(|r| r.dx_norm).collect()
    }

    pub fn steps(&self) -> Vec<f64> {
        self.records.iter().map(|r| r.step).collect()
    }

    /// `Xi_{k-1} = sqrt(max(C_{k-1} - C_k, 0))` for `k = 1..K`.
    ///
    /// Increases of `C` within tolerance are clamped to zero; larger increases
    /// are reported through [`Trace::sandwich_violation`] rather than here.
    pub fn xi_sequence(&self) -> Vec<f64> {
        xi_from_merits(&self.records.iter().map(|r| r.c).collect::<Vec<_>>())
    }

    /// Partial tail sums `S_k = sum_{j=k+1}^{K} dx_j`, so `S_K = 0`.
    pub fn tail_sums(&self) -> Vec<f64> {
        let mut out = vec![0.0; self.records.len()];
        let mut acc = 0.0;
        for k in (0..self.records.len()).rev() {
            out[k] = acc;
            acc += self.records[k].dx_norm;
        }
        out
    }

    /// Total displacement over the last `window` moves.
    pub fn final_tail_sum(&self, window: usize) -> f64 {
        let n = self.records.len();
        let start = n.saturating_sub(window);
        self.records[start..].iter().map(|r| r.dx_norm).sum()
    }

    /// Smallest positive step over records `from..`.
    pub fn min_step_from(&self, from: usize) -> Option<f64> {
        self.records
            .iter()
            .skip(from.max(1))
            .map(|r| r.step)
            .filter(|s| *s > 0.0)
            .reduce(f64::min)
    }
}

/// Square-root merit decrements of a merit sequence.
pub fn xi_from_merits(c: &[f64]) -> Vec<f64> {
    c.windows(2).map(|w| (w[0] - w[1]).max(0.0).sqrt()).collect()
}
