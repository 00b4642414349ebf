//! Framework constants used by the convergence analysis.

use crate::error::{Error, Result};

/// Upper limit for the scan in [`compute_m`].
pub const M_SCAN_CAP: u64 = 1_000_000;

/// Smallest positive integer `m` with
/// `sqrt(tau) (m - k1 - 1) >= (1 + sqrt(1 - tau)) (2 k1 + 1) sqrt(m)`.
///
/// Found by a linear scan from `m = 1`; the result always exceeds `k1 + 1`.
pub fn compute_m(tau: f64, k1: u64) -> Result<u64> {
    if !(tau > 0.0 && tau <= 1.0) {
        return Err(Error::param("tau", tau, "(0,1]"));
    }
    let lhs_scale = tau.sqrt();
    let rhs_scale = (1.0 + (1.0 - tau).sqrt()) * (2 * k1 + 1) as f64;
    (1..=M_SCAN_CAP)
        .find(|&m| lhs_scale * (m as f64 - k1 as f64 - 1.0) >= rhs_scale * (m as f64).sqrt())
        .ok_or_else(|| {
            Error::param(
                "tau, k1",
                format!("({tau}, {k1})"),
                &format!("values giving m <= {M_SCAN_CAP}"),
            )
        })
}

/// `c_hat = (B_bar / sqrt(tau) + 1) / 2`.
pub fn c_hat(b_bar: f64, tau: f64) -> f64 {
    0.5 * (b_bar / tau.sqrt() + 1.0)
}

/// `c_hat_1 = sqrt(m tau) - (1/2 + sqrt(1 - tau)) (2 k1 + 1)`; at least `1/2` when `m = compute_m(tau, k1)`.
pub fn c_hat1(m: u64, tau: f64, k1: u64) -> f64 {
    (m as f64 * tau).sqrt() - (0.5 + (1.0 - tau).sqrt()) * (2 * k1 + 1) as f64
}
