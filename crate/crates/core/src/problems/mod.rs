//! Objective building blocks and the library of test problems.

mod library;
pub mod prox;
pub mod smooth;
pub mod sphere;

use std::fmt;
use std::sync::Arc;

use nalgebra::DVector;

pub use library::{make_test_problem, ParamMap, PROBLEM_NAMES};
pub use prox::{prox_box, prox_l0, prox_l1, BoxIndicator, L0Penalty, L1Norm, ZeroFunction};
pub use smooth::{LeastSquares, PowerNorm, QuadraticForm, Rosenbrock};
pub use sphere::{rayleigh_grad, sphere_retract, sphere_tangent_project, SphereManifold};

use crate::kl::KlProfile;
use crate::vector::Vector;

/// Continuously differentiable function on an open set of `R^n`.
pub trait SmoothFunction: Send + Sync {
    fn dim(&self) -> usize;
    fn value(&self, x: &DVector<f64>) -> f64;
    fn gradient(&self, x: &DVector<f64>) -> DVector<f64>;

    /// Human-readable description of the open set where `f` is smooth.
    fn domain(&self) -> &'static str {
        "R^n"
    }

    fn name(&self) -> &'static str;
}

/// Proper lsc function with a computable proximal map.
///
/// `prox(gamma, z)` returns one element of
/// `argmin_y { ||y - z||^2 / (2 gamma) + g(y) }`.
pub trait ProxableFunction: Send + Sync {
    /// May return `+inf` outside the domain.
    fn value(&self, x: &DVector<f64>) -> f64;
    fn prox(&self, gamma: f64, z: &DVector<f64>) -> DVector<f64>;

    fn is_zero(&self) -> bool {
        false
    }

    fn name(&self) -> &'static str;
}

/// `Theta = f + g` with `f` smooth and `g` proximable.
#[derive(Clone)]
pub struct CompositeObjective {
    pub smooth: Arc<dyn SmoothFunction>,
    pub nonsmooth: Arc<dyn ProxableFunction>,
    pub lower_bound_known: Option<f64>,
}

impl CompositeObjective {
    pub fn new(
        smooth: Arc<dyn SmoothFunction>,
        nonsmooth: Arc<dyn ProxableFunction>,
        lower_bound_known: Option<f64>,
    ) -> Self {
        CompositeObjective {
            smooth,
            nonsmooth,
            lower_bound_known,
        }
    }

    /// `f` alone, with `g = 0`.
    pub fn smooth_only(smooth: Arc<dyn SmoothFunction>, lower_bound_known: Option<f64>) -> Self {
        Self::new(smooth, Arc::new(ZeroFunction), lower_bound_known)
    }

    pub fn dim(&self) -> usize {
        self.smooth.dim()
    }

    pub fn value(&self, x: &DVector<f64>) -> f64 {
        self.smooth.value(x) + self.nonsmooth.value(x)
    }
}

impl fmt::Debug for CompositeObjective {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("CompositeObjective")
            .field("smooth", &self.smooth.name())
            .field("nonsmooth", &self.nonsmooth.name())
            .field("lower_bound_known", &self.lower_bound_known)
            .finish()
    }
}

/// Smooth `f` restricted to the unit sphere.
#[derive(Clone)]
pub struct SphereProblem {
    pub f: Arc<dyn SmoothFunction>,
    pub manifold: SphereManifold,
}

impl SphereProblem {
    /// Tangent projection of the Euclidean gradient.
    pub fn riemannian_gradient(&self, x: &DVector<f64>) -> DVector<f64> {
        self.manifold.project(x, &self.f.gradient(x))
    }
}

impl fmt::Debug for SphereProblem {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("SphereProblem")
            .field("f", &self.f.name())
            .field("ambient_dim", &self.manifold.ambient_dim())
            .finish()
    }
}

#[derive(Debug, Clone)]
pub enum ProblemKind {
    Composite(CompositeObjective),
    Sphere(SphereProblem),
}

/// A configured problem together with its known KL data.
#[derive(Debug, Clone)]
pub struct TestProblem {
    pub problem_id: String,
    pub objective: ProblemKind,
    pub kl: KlProfile,
    pub minimizer: Option<Vector>,
    pub optimal_value: Option<f64>,
    /// Default starting point.
    pub x0: Vector,
}

impl TestProblem {
    pub fn composite(&self) -> Option<&CompositeObjective> {
        match &self.objective {
            ProblemKind::Composite(c) => Some(c),
            ProblemKind::Sphere(_) => None,
        }
    }

    pub fn sphere(&self) -> Option<&SphereProblem> {
        match &self.objective {
            ProblemKind::Sphere(s) => Some(s),
            ProblemKind::Composite(_) => None,
        }
    }

    /// Distance to the known minimiser; sphere minimisers are identified up to sign.
    pub fn distance_to_minimizer(&self, x: &DVector<f64>) -> Option<f64> {
        let m = self.minimizer.as_ref()?.as_dvector();
        let d = (x - m).norm();
        Some(match self.objective {
            ProblemKind::Sphere(_) => d.min((x + m).norm()),
            ProblemKind::Composite(_) => d,
        })
    }
}
