//! The JSON run configuration.

use std::path::{Path, PathBuf};

use serde::de::DeserializeOwned;
use serde::Deserialize;
use serde_json::Value;
use zhd_core::conformance::{BSpec, Regime};
use zhd_core::problems::{ParamMap, TestProblem};
use zhd_core::solvers::{NlsaParams, PgmParams, RgmParams};
use zhd_core::{ErrorSchedule, PositiveSequence};

use crate::error::{CliError, CliResult};

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub problem: ProblemSpec,
    pub solver: SolverSpec,
    /// Seed for problem generation. Fills `problem.params.seed` when that is absent.
    #[serde(default)]
    pub seed: Option<u64>,
    #[serde(default)]
    pub output_dir: Option<PathBuf>,
    #[serde(default)]
    pub conformance: ConformanceSpec,
    #[serde(default)]
    pub rate_check: Option<RateCheckSpec>,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ProblemSpec {
    pub name: String,
    #[serde(default)]
    pub params: ParamMap,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SolverSpec {
    pub name: String,
    #[serde(default)]
    pub params: ParamMap,
}

#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ConformanceSpec {
    /// Overrides the solver's documented window half-width.
    #[serde(default)]
    pub k1: Option<usize>,
    #[serde(default)]
    pub schedules: SchedulesSpec,
    #[serde(default)]
    pub burn_in_fraction: Option<f64>,
    #[serde(default)]
    pub h3_window: Option<usize>,
}

/// Optional replacements for the documented `eps_k` and `b_k`.
#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SchedulesSpec {
    #[serde(default)]
    pub eps: Option<ErrorSchedule>,
    /// Divisor form, `witness_k <= window_sum / b_k`.
    #[serde(default)]
    pub b: Option<PositiveSequence>,
    /// Multiplier form, `witness_k <= b * window_sum`.
    #[serde(default)]
    pub b_multiplier: Option<f64>,
}

/// Expected convergence regime. `kl` asks the problem's KL exponent.
#[derive(Debug, Clone, Copy, PartialEq, Deserialize)]
#[serde(tag = "regime", rename_all = "snake_case", deny_unknown_fields)]
pub enum RateCheckSpec {
    Linear,
    Sublinear { exponent: f64 },
    Kl,
}

impl RateCheckSpec {
    pub fn resolve(self, problem: &TestProblem) -> CliResult<Regime> {
        Ok(match self {
            RateCheckSpec::Linear => Regime::Linear,
            RateCheckSpec::Sublinear { exponent } => Regime::Sublinear { exponent },
            RateCheckSpec::Kl => zhd_core::conformance::rate_oracle(&problem.kl)
                .map_err(|e| CliError::config("rate_check", e.to_string()))?,
        })
    }
}

/// Solver parameters after validation.
#[derive(Debug, Clone)]
pub enum SolverChoice {
    Pgm(PgmParams),
    Rgm(RgmParams),
    Nlsa(NlsaParams),
}

pub const SOLVER_NAMES: [&str; 3] = ["pgm", "rgm", "nlsa"];

/// Deserialises `value`, reporting the full key path of the first error under `prefix`.
pub fn from_value_at<T: DeserializeOwned>(prefix: &str, value: Value) -> CliResult<T> {
    serde_path_to_error::deserialize(value).map_err(|e| {
        let path = e.path().to_string();
        let key = if path == "." || path.is_empty() {
            prefix.to_string()
        } else if prefix.is_empty() {
            path
        } else {
            format!("{prefix}.{path}")
        };
        CliError::config(key, e.into_inner().to_string())
    })
}

fn validated<T>(params: T, check: impl FnOnce(&T) -> zhd_core::Result<()>) -> CliResult<T> {
    check(&params).map_err(|e| match &e {
        zhd_core::Error::Parameter { name, .. } => {
            CliError::config(format!("solver.params.{name}"), e.to_string())
        }
        _ => CliError::config("solver.params", e.to_string()),
    })?;
    Ok(params)
}

impl RunConfig {
    pub fn from_path(path: &Path) -> CliResult<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
        Self::from_json(&text)
    }

    pub fn from_json(text: &str) -> CliResult<Self> {
        let value: Value = serde_json::from_str(text)
            .map_err(|e| CliError::config("<document>", format!("not valid JSON: {e}")))?;
        let cfg: RunConfig = from_value_at("", value)?;
        cfg.solver_choice()?;
        if let Some(b) = cfg.conformance.burn_in_fraction {
            if !(0.0..1.0).contains(&b) {
                return Err(CliError::config(
                    "conformance.burn_in_fraction",
                    format!("{b} is outside the valid range [0,1)"),
                ));
            }
        }
        let s = &cfg.conformance.schedules;
        if s.b.is_some() && s.b_multiplier.is_some() {
            return Err(CliError::config(
                "conformance.schedules",
                "give at most one of `b` and `b_multiplier`",
            ));
        }
        if let Some(eps) = &s.eps {
            eps.validate()
                .map_err(|e| CliError::config("conformance.schedules.eps", e.to_string()))?;
        }
        if let Some(b) = &s.b {
            b.validate("b")
                .map_err(|e| CliError::config("conformance.schedules.b", e.to_string()))?;
        }
        Ok(cfg)
    }

    pub fn solver_choice(&self) -> CliResult<SolverChoice> {
        let params = Value::Object(self.solver.params.clone());
        Ok(match self.solver.name.as_str() {
            "pgm" => SolverChoice::Pgm(validated(from_value_at("solver.params", params)?, PgmParams::validate)?),
            "rgm" => SolverChoice::Rgm(validated(from_value_at("solver.params", params)?, RgmParams::validate)?),
            "nlsa" => SolverChoice::Nlsa(validated(from_value_at("solver.params", params)?, NlsaParams::validate)?),
            other => {
                return Err(CliError::config(
                    "solver.name",
                    format!("unknown solver `{other}`, expected one of {}", SOLVER_NAMES.join(", ")),
                ))
            }
        })
    }

    /// Problem parameters with the top-level seed filled in.
    pub fn problem_params(&self) -> CliResult<ParamMap> {
        let mut p = self.problem.params.clone();
        if let Some(seed) = self.seed {
            match p.get("seed") {
                None => {
                    p.insert("seed".into(), seed.into());
                }
                Some(v) if v.as_u64() == Some(seed) => {}
                Some(v) => {
                    return Err(CliError::config(
                        "seed",
                        format!("conflicts with problem.params.seed = {v}"),
                    ))
                }
            }
        }
        Ok(p)
    }

    /// `b` override, if any.
    pub fn b_override(&self) -> Option<BSpec> {
        let s = &self.conformance.schedules;
        s.b.clone()
            .map(BSpec::Divisor)
            .or(s.b_multiplier.map(BSpec::Multiplier))
    }
}
