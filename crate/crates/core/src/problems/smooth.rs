use nalgebra::{DMatrix, DVector};

use super::SmoothFunction;
use crate::error::{Error, Result};

/// `f(x) = 0.5 ||A x - b||^2`.
#[derive(Debug, Clone)]
pub struct LeastSquares {
    a: DMatrix<f64>,
    b: DVector<f64>,
}

impl LeastSquares {
    pub fn new(a: DMatrix<f64>, b: DVector<f64>) -> Result<Self> {
        if a.nrows() != b.len() {
            return Err(Error::Dimension {
                context: "least squares rhs".into(),
                expected: a.nrows(),
                got: b.len(),
            });
        }
        if a.iter().chain(b.iter()).any(|v| !v.is_finite()) {
            return Err(Error::non_finite("least squares data"));
        }
        Ok(LeastSquares { a, b })
    }

    pub fn design(&self) -> &DMatrix<f64> {
        &self.a
    }

    pub fn rhs(&self) -> &DVector<f64> {
        &self.b
    }
}

impl SmoothFunction for LeastSquares {
    fn dim(&self) -> usize {
        self.a.ncols()
    }

    fn value(&self, x: &DVector<f64>) -> f64 {
        0.5 * (&self.a * x - &self.b).norm_squared()
    }

    fn gradient(&self, x: &DVector<f64>) -> DVector<f64> {
        self.a.tr_mul(&(&self.a * x - &self.b))
    }

    fn name(&self) -> &'static str {
        "least_squares"
    }
}

/// `f(x) = ||x||^p` with `p >= 2`; the gradient is `p ||x||^(p-2) x`.
///
/// For `p > 2` the gradient is locally but not globally Lipschitz.
#[derive(Debug, Clone, Copy)]
pub struct PowerNorm {
    dim: usize,
    p: f64,
}

impl PowerNorm {
    pub fn new(dim: usize, p: f64) -> Result<Self> {
        if dim == 0 {
            return Err(Error::param("dim", dim, "[1,inf)"));
        }
        if !(p >= 2.0 && p.is_finite()) {
            return Err(Error::param("p", p, "[2,inf)"));
        }
        Ok(PowerNorm { dim, p })
    }

    pub fn exponent(&self) -> f64 {
        self.p
    }
}

impl SmoothFunction for PowerNorm {
    fn dim(&self) -> usize {
        self.dim
    }

    fn value(&self, x: &DVector<f64>) -> f64 {
        x.norm().powf(self.p)
    }

    fn gradient(&self, x: &DVector<f64>) -> DVector<f64> {
        let r = x.norm();
        if r == 0.0 {
            return DVector::zeros(x.len());
        }
        x * (self.p * r.powf(self.p - 2.0))
    }

    fn name(&self) -> &'static str {
        "power_norm"
    }
}

/// Two-dimensional Rosenbrock function `(1 - x)^2 + 100 (y - x^2)^2`.
#[derive(Debug, Clone, Copy, Default)]
pub struct Rosenbrock;

impl SmoothFunction for Rosenbrock {
    fn dim(&self) -> usize {
        2
    }

    fn value(&self, x: &DVector<f64>) -> f64 {
        (1.0 - x[0]).powi(2) + 100.0 * (x[1] - x[0] * x[0]).powi(2)
    }

    fn gradient(&self, x: &DVector<f64>) -> DVector<f64> {
        let r = x[1] - x[0] * x[0];
        DVector::from_vec(vec![-2.0 * (1.0 - x[0]) - 400.0 * x[0] * r, 200.0 * r])
    }

    fn name(&self) -> &'static str {
        "rosenbrock"
    }
}

/// `f(x) = x^T A x` for symmetric `A`; restricted to the unit sphere this is the Rayleigh quotient.
#[derive(Debug, Clone)]
pub struct QuadraticForm {
    a: DMatrix<f64>,
}

/// Maximum entrywise skew `|A_ij - A_ji|` tolerated as symmetric.
pub const SYMMETRY_TOL: f64 = 1e-12;

impl QuadraticForm {
    pub fn new(a: DMatrix<f64>) -> Result<Self> {
        if !a.is_square() || a.nrows() == 0 {
            return Err(Error::Precondition(format!(
                "matrix must be square and non-empty, got {}x{}",
                a.nrows(),
                a.ncols()
            )));
        }
        if a.iter().any(|v| !v.is_finite()) {
            return Err(Error::non_finite("quadratic form matrix"));
        }
        let skew = (&a - a.transpose()).amax();
        if skew > SYMMETRY_TOL {
            return Err(Error::param(
                "matrix skew",
                skew,
                &format!("[0, {SYMMETRY_TOL:e}] (matrix must be symmetric)"),
            ));
        }
        Ok(QuadraticForm { a })
    }

    pub fn matrix(&self) -> &DMatrix<f64> {
        &self.a
    }
}

impl SmoothFunction for QuadraticForm {
    fn dim(&self) -> usize {
        self.a.nrows()
    }

    fn value(&self, x: &DVector<f64>) -> f64 {
        x.dot(&(&self.a * x))
    }

    fn gradient(&self, x: &DVector<f64>) -> DVector<f64> {
        (&self.a * x) * 2.0
    }

    fn name(&self) -> &'static str {
        "quadratic_form"
    }
}
