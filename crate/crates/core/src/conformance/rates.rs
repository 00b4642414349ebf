//! Empirical convergence-rate fits and the KL rate oracle.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::kl::KlProfile;
use crate::trace::Trace;
use crate::vector::Vector;

/// Smallest number of points a fit accepts.
pub const MIN_FIT_POINTS: usize = 10;

pub const DEFAULT_BURN_IN: f64 = 0.2;

/// Predicted or fitted convergence regime.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "regime", rename_all = "snake_case")]
pub enum Regime {
    /// `dist_k ~ rho^k`.
    Linear,
    /// `dist_k ~ k^exponent`.
    Sublinear { exponent: f64 },
}

/// A least-squares fit on `[window.0, window.1)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RateFit {
    #[serde(flatten)]
    pub regime: Regime,
    /// `exp(slope)` for linear fits.
    pub fitted_rho: Option<f64>,
    /// Slope in `k` (linear) or in `log k` (sublinear).
    pub fitted_slope: f64,
    pub intercept: f64,
    pub r_squared: f64,
    pub burn_in: usize,
    pub window: (usize, usize),
}

/// Ordinary least squares `y = intercept + slope x`, returning `(slope, intercept, r^2)`.
fn least_squares(xs: &[f64], ys: &[f64]) -> (f64, f64, f64) {
    let n = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let (mut sxx, mut sxy, mut syy) = (0.0, 0.0, 0.0);
    for (x, y) in xs.iter().zip(ys) {
        let (dx, dy) = (x - mx, y - my);
        sxx += dx * dx;
        sxy += dx * dy;
        syy += dy * dy;
    }
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let r2 = if syy == 0.0 {
        1.0
    } else {
        (sxy * sxy / (sxx * syy)).clamp(0.0, 1.0)
    };
    (slope, intercept, r2)
}

/// Index window after burn-in, cut at the first non-positive entry.
fn fit_window(dists: &[f64], burn_in_fraction: f64, first_allowed: usize) -> Result<(usize, usize)> {
    if !(0.0..1.0).contains(&burn_in_fraction) {
        return Err(Error::param("burn_in_fraction", burn_in_fraction, "[0,1)"));
    }
    let burn = ((burn_in_fraction * dists.len() as f64).floor() as usize).max(first_allowed);
    let mut end = burn;
    while end < dists.len() && dists[end] > 0.0 && dists[end].is_finite() {
        end += 1;
    }
    if end - burn.min(end) < MIN_FIT_POINTS {
        return Err(Error::InsufficientData {
            needed: MIN_FIT_POINTS,
            have: end.saturating_sub(burn),
        });
    }
    Ok((burn, end))
}

/// Fits `log dist_k` against `k`; `rho = exp(slope)`.
pub fn estimate_linear_rate(dists: &[f64], burn_in_fraction: f64) -> Result<RateFit> {
    let (lo, hi) = fit_window(dists, burn_in_fraction, 0)?;
    let xs: Vec<f64> = (lo..hi).map(|k| k as f64).collect();
    let ys: Vec<f64> = dists[lo..hi].iter().map(|d| d.ln()).collect();
    let (slope, intercept, r2) = least_squares(&xs, &ys);
    Ok(RateFit {
        regime: Regime::Linear,
        fitted_rho: Some(slope.exp()),
        fitted_slope: slope,
        intercept,
        r_squared: r2,
        burn_in: lo,
        window: (lo, hi),
    })
}

/// Fits `log dist_k` against `log k` (so `k = 0` is never used).
pub fn estimate_sublinear_exponent(dists: &[f64], burn_in_fraction: f64) -> Result<RateFit> {
    let (lo, hi) = fit_window(dists, burn_in_fraction, 1)?;
    let xs: Vec<f64> = (lo..hi).map(|k| (k as f64).ln()).collect();
    let ys: Vec<f64> = dists[lo..hi].iter().map(|d| d.ln()).collect();
    let (slope, intercept, r2) = least_squares(&xs, &ys);
    Ok(RateFit {
        regime: Regime::Sublinear { exponent: slope },
        fitted_rho: None,
        fitted_slope: slope,
        intercept,
        r_squared: r2,
        burn_in: lo,
        window: (lo, hi),
    })
}

/// Regime predicted by the KL exponent: linear for `theta <= 1/2`,
/// `k^((1 - theta) / (1 - 2 theta))` above.
pub fn rate_oracle(profile: &KlProfile) -> Result<Regime> {
    regime_for_theta(profile.theta)
}

pub fn regime_for_theta(theta: f64) -> Result<Regime> {
    if theta == 0.0 {
        return Err(Error::Unsupported(
            "theta = 0 gives finite termination, which has no rate to fit".into(),
        ));
    }
    if !(theta > 0.0 && theta < 1.0) {
        return Err(Error::param("theta", theta, "(0,1)"));
    }
    Ok(if theta <= 0.5 {
        Regime::Linear
    } else {
        Regime::Sublinear {
            exponent: (1.0 - theta) / (1.0 - 2.0 * theta),
        }
    })
}

/// Which reference point the distances were measured from.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DistanceReference {
    Minimizer,
    FinalIterate,
}

/// `||x^k - x*||` when a minimiser is known, otherwise `||x^k - x^K||`.
///
/// With `sign_invariant` the distance to `-x*` also counts (sphere minimisers).
pub fn distance_sequence(
    trace: &Trace,
    minimizer: Option<&Vector>,
    sign_invariant: bool,
) -> Result<(Vec<f64>, DistanceReference)> {
    let last = trace
        .last()
        .ok_or_else(|| Error::Input("trace has no records".into()))?;
    let (target, reference) = match minimizer {
        Some(m) => {
            m.check_dim(last.x.dim(), "minimizer")?;
            (m.as_dvector().clone(), DistanceReference::Minimizer)
        }
        None => (last.x.as_dvector().clone(), DistanceReference::FinalIterate),
    };
    let d = trace
        .records
        .iter()
        .map(|r| {
            let plus = (r.x.as_dvector() - &target).norm();
            if sign_invariant {
                plus.min((r.x.as_dvector() + &target).norm())
            } else {
                plus
            }
        })
        .collect();
    Ok((d, reference))
}

/// Linear regime tolerance: `rho < 1` with `r^2 >= 0.99`; sublinear: slope within this of the prediction.
pub const SUBLINEAR_SLOPE_TOL: f64 = 0.15;
pub const LINEAR_MIN_R2: f64 = 0.99;

/// Comparison of a fit against an expected regime.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RateCheck {
    pub expected: Regime,
    #[serde(flatten)]
    pub fit: RateFit,
    pub reference: DistanceReference,
    pub passed: bool,
}

/// Fits the regime `expected` asks for and compares.
pub fn rate_check(
    dists: &[f64],
    reference: DistanceReference,
    expected: Regime,
    burn_in_fraction: f64,
) -> Result<RateCheck> {
    let (fit, passed) = match expected {
        Regime::Linear => {
            let fit = estimate_linear_rate(dists, burn_in_fraction)?;
            let ok = fit.fitted_rho.is_some_and(|r| r < 1.0) && fit.r_squared >= LINEAR_MIN_R2;
            (fit, ok)
        }
        Regime::Sublinear { exponent } => {
            let fit = estimate_sublinear_exponent(dists, burn_in_fraction)?;
            let ok = (fit.fitted_slope - exponent).abs() <= SUBLINEAR_SLOPE_TOL;
            (fit, ok)
        }
    };
    Ok(RateCheck {
        expected,
        fit,
        reference,
        passed,
    })
}
