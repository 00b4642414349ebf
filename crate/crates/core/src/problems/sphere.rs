//! The unit sphere `S^{n-1}` embedded in `R^n`.

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};
use crate::problems::smooth::SYMMETRY_TOL;
use crate::vector::Vector;

/// Accepted deviation of `||x||` from 1 for points passed to sphere operations.
pub const UNIT_TOL: f64 = 1e-10;

/// Unit sphere with the metric-projection retraction `R_x(v) = (x + v) / ||x + v||`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct SphereManifold {
    ambient_dim: usize,
}

impl SphereManifold {
    pub fn new(ambient_dim: usize) -> Result<Self> {
        if ambient_dim < 2 {
            return Err(Error::param("ambient_dim", ambient_dim, "[2,inf)"));
        }
        Ok(SphereManifold { ambient_dim })
    }

    pub fn ambient_dim(&self) -> usize {
        self.ambient_dim
    }

    pub fn check_point(&self, x: &DVector<f64>) -> Result<()> {
        if x.len() != self.ambient_dim {
            return Err(Error::Dimension {
                context: "sphere point".into(),
                expected: self.ambient_dim,
                got: x.len(),
            });
        }
        check_unit(x)
    }

    /// `v - <x, v> x`.
    pub fn project(&self, x: &DVector<f64>, v: &DVector<f64>) -> DVector<f64> {
        v - x * x.dot(v)
    }

    pub fn retract(&self, x: &DVector<f64>, v: &DVector<f64>) -> DVector<f64> {
        let y = x + v;
        let n = y.norm();
        y / n
    }

    /// Normalises an arbitrary nonzero vector onto the sphere.
    pub fn normalize(&self, x: &DVector<f64>) -> Result<DVector<f64>> {
        let n = x.norm();
        if !(n > 0.0 && n.is_finite()) {
            return Err(Error::Precondition("cannot normalise a zero vector".into()));
        }
        Ok(x / n)
    }
}

fn check_unit(x: &DVector<f64>) -> Result<()> {
    let dev = (x.norm() - 1.0).abs();
    if dev <= UNIT_TOL {
        Ok(())
    } else {
        Err(Error::Precondition(format!(
            "point must lie on the unit sphere (| ||x|| - 1 | = {dev:e})"
        )))
    }
}

fn sphere_for(x: &Vector) -> Result<SphereManifold> {
    let s = SphereManifold::new(x.dim())?;
    s.check_point(x)?;
    Ok(s)
}

/// Projection of `v` onto the tangent space at the unit vector `x`.
pub fn sphere_tangent_project(x: &Vector, v: &Vector) -> Result<Vector> {
    let s = sphere_for(x)?;
    v.check_dim(x.dim(), "tangent projection")?;
    Vector::from_dvector(s.project(x, v))
}

/// Metric-projection retraction of the tangent vector `v` at `x`.
pub fn sphere_retract(x: &Vector, v: &Vector) -> Result<Vector> {
    let s = sphere_for(x)?;
    v.check_dim(x.dim(), "retraction")?;
    let inner = x.dot(v);
    if inner.abs() > UNIT_TOL * v.norm().max(1.0) {
        return Err(Error::Precondition(format!(
            "retraction needs a tangent vector, <x, v> = {inner:e}"
        )));
    }
    Vector::from_dvector(s.retract(x, v))
}

/// Riemannian gradient of `x -> x^T A x` on the sphere: `2 (A x - (x^T A x) x)`.
pub fn rayleigh_grad(a: &DMatrix<f64>, x: &Vector) -> Result<Vector> {
    sphere_for(x)?;
    if a.nrows() != x.dim() || a.ncols() != x.dim() {
        return Err(Error::Dimension {
            context: "rayleigh matrix".into(),
            expected: x.dim(),
            got: a.nrows(),
        });
    }
    let skew = (a - a.transpose()).amax();
    if skew > SYMMETRY_TOL {
        return Err(Error::param("matrix skew", skew, "[0, 1e-12]"));
    }
    let ax = a * x.as_dvector();
    let rq = x.dot(&ax);
    Vector::from_dvector((ax - x.as_dvector() * rq) * 2.0)
}
