use nalgebra::DVector;

use crate::error::{check, Result};

/// Default cap on halvings; beyond ~60 the trial step is below double resolution.
pub const MAX_HALVINGS: usize = 60;

/// A candidate produced at one trial step.
#[derive(Debug, Clone, PartialEq)]
pub struct Trial {
    pub accepted: bool,
    pub point: DVector<f64>,
    pub value: f64,
}

/// The accepted step and its trial.
#[derive(Debug, Clone, PartialEq)]
pub struct Accepted {
    pub step: f64,
    pub point: DVector<f64>,
    pub value: f64,
    pub halvings: usize,
}

/// No trial step in `step0 * beta^l`, `l = 0..=max_halvings`, was accepted.
#[derive(Debug, Clone, PartialEq)]
pub struct BacktrackFailure {
    pub last_step: f64,
    pub last_point: DVector<f64>,
    pub last_value: f64,
    pub halvings: usize,
}

/// Tries `step0, step0 beta, step0 beta^2, ...` and returns the first accepted trial.
///
/// `accept` receives the trial step and builds the candidate. Parameter errors
/// are reported through the outer `Result`, exhaustion through the inner one.
pub fn backtrack<F>(
    mut accept: F,
    step0: f64,
    beta: f64,
    max_halvings: usize,
) -> Result<std::result::Result<Accepted, BacktrackFailure>>
where
    F: FnMut(f64) -> Trial,
{
    check::positive("step0", step0)?;
    check::open_unit("beta", beta)?;
    let mut step = step0;
    let mut last = None;
    for l in 0..=max_halvings {
        let t = accept(step);
        if t.accepted {
            return Ok(Ok(Accepted {
                step,
                point: t.point,
                value: t.value,
                halvings: l,
            }));
        }
        last = Some((step, t));
        step *= beta;
    }
    let (last_step, t) = last.expect("at least one trial is always made");
    Ok(Err(BacktrackFailure {
        last_step,
        last_point: t.point,
        last_value: t.value,
        halvings: max_halvings,
    }))
}
