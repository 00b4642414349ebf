//! Zhang-Hager merit averaging.
//!
//! Nonmonotone line searches accept a step relative to a weighted average `C_k`
//! of past objective values rather than the latest value. Two equivalent
//! parameterisations are provided:
//!
//! * p-form: `C_k = (1 - tau_k) C_{k-1} + tau_k Phi(x^k)` with `tau_k` in `[tau, 1]`.
//! * Q-form: `Q_{k+1} = eta_k Q_k + 1`, `C_{k+1} = (eta_k Q_k C_k + f(x_{k+1})) / Q_{k+1}`.
//!
//! The two agree when `tau_{k+1} = 1 / (eta_k Q_k + 1)`, see
//! [`ZhAveragerQ::p_equivalent`].

use serde::{Deserialize, Serialize};

use crate::error::{check, Error, Result};

/// p-form averager. Starts at `C_0 = Phi(x^0)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ZhAveragerP {
    c_value: f64,
    tau_lower: f64,
    history_len: usize,
}

impl ZhAveragerP {
    pub fn new(c0: f64, tau_lower: f64) -> Result<Self> {
        check::finite("initial merit value", c0)?;
        check::half_open_unit("tau_lower", tau_lower)?;
        Ok(Self {
            c_value: c0,
            tau_lower,
            history_len: 0,
        })
    }

    /// Advances the state with `Phi(x^k) = phi_new` and weight `tau_k`, returning the new `C_k`.
    pub fn update(&mut self, phi_new: f64, tau_k: f64) -> Result<f64> {
        check::finite("objective value fed to the averager", phi_new)?;
        if !(tau_k >= self.tau_lower && tau_k <= 1.0) {
            return Err(Error::param(
                "tau_k",
                tau_k,
                &format!("[{}, 1]", self.tau_lower),
            ));
        }
        self.c_value = (1.0 - tau_k) * self.c_value + tau_k * phi_new;
        self.history_len += 1;
        Ok(self.c_value)
    }

    pub fn value(&self) -> f64 {
        self.c_value
    }

    pub fn tau_lower(&self) -> f64 {
        self.tau_lower
    }

    pub fn history_len(&self) -> usize {
        self.history_len
    }
}

/// Q-form averager with `Q_0 = 1`, `C_0 = f(x_0)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ZhAveragerQ {
    c_value: f64,
    q_value: f64,
    eta_min: f64,
    eta_max: f64,
    history_len: usize,
}

impl ZhAveragerQ {
    pub fn new(c0: f64, eta_min: f64, eta_max: f64) -> Result<Self> {
        check::finite("initial merit value", c0)?;
        if !(0.0..=1.0).contains(&eta_min) {
            return Err(Error::param("eta_min", eta_min, "[0,1]"));
        }
        if !(eta_min..=1.0).contains(&eta_max) {
            return Err(Error::param("eta_max", eta_max, &format!("[{eta_min}, 1]")));
        }
        Ok(Self {
            c_value: c0,
            q_value: 1.0,
            eta_min,
            eta_max,
            history_len: 0,
        })
    }

    /// Applies one Q/C step with `f(x_{k+1}) = f_new`; returns `(C_{k+1}, Q_{k+1})`.
    pub fn update(&mut self, f_new: f64, eta_k: f64) -> Result<(f64, f64)> {
        check::finite("objective value fed to the averager", f_new)?;
        self.check_eta(eta_k)?;
        let weighted = eta_k * self.q_value;
        let q_next = weighted + 1.0;
        self.c_value = (weighted * self.c_value + f_new) / q_next;
        self.q_value = q_next;
        self.history_len += 1;
        Ok((self.c_value, self.q_value))
    }

    /// The p-form weight `1 / (eta Q + 1)` that reproduces the next Q-form update
    /// made with `eta` from the current state.
    pub fn p_equivalent(&self, eta: f64) -> Result<f64> {
        self.check_eta(eta)?;
        Ok(1.0 / (eta * self.q_value + 1.0))
    }

    /// `1 / (1 - eta_max)`, or `None` when `eta_max = 1` and `Q` may grow without bound.
    pub fn q_bound(&self) -> Option<f64> {
        (self.eta_max < 1.0).then(|| 1.0 / (1.0 - self.eta_max))
    }

    pub fn value(&self) -> f64 {
        self.c_value
    }

    pub fn q(&self) -> f64 {
        self.q_value
    }

    pub fn eta_range(&self) -> (f64, f64) {
        (self.eta_min, self.eta_max)
    }

    pub fn history_len(&self) -> usize {
        self.history_len
    }

    fn check_eta(&self, eta: f64) -> Result<()> {
        if eta >= self.eta_min && eta <= self.eta_max {
            Ok(())
        } else {
            Err(Error::param(
                "eta_k",
                eta,
                &format!("[{}, {}]", self.eta_min, self.eta_max),
            ))
        }
    }
}
