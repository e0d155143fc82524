//! Mean-field limit of the kinetic model, solved by finite volumes.
//!
//! The heterogeneous model evolves densities `f+(t, m, c)` and `f-(t, m, c)`
//! of long and short agents: the minority species is advected in `c` with
//! speed `H(-ED)` resp. `H(ED)`, both species switch at rate `lambda`, and
//! switched mass is re-emitted at `(m, c) = (S, 0)`. Integrating out `c`
//! gives the space-homogeneous model with rate `q(m, S) / dt_cross`.
//!
//! A step is a Lie splitting of upwind advection and an explicit collision
//! step. Both are written in mass coordinates and are column stochastic under
//! the step bound, which gives exact positivity, mass conservation and a
//! monotone relative entropy. The exact transpose of a step is available for
//! the backward dual problem.

mod field;
mod mesh;
mod operator;
mod solver;

pub use field::{ed_functional, DensityField, InitialDensity, Quadrature, Species};
pub use mesh::Mesh;
pub use operator::{
    advection_apply, collision_apply, ed_rate, rate_field, stable_dt, StepCoefficients,
    StepOperator,
};
pub use solver::{ConvergenceMonitor, FvSolver, Reemission};

/// Advection speed of the minority species as a function of its excess demand.
pub trait ShapeFunction {
    fn eval(&self, x: f64) -> f64;
}

/// `H(x) = max(x, 0)`.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct CrossShape;

impl ShapeFunction for CrossShape {
    #[inline]
    fn eval(&self, x: f64) -> f64 {
        x.max(0.0)
    }
}

impl<F: Fn(f64) -> f64> ShapeFunction for F {
    fn eval(&self, x: f64) -> f64 {
        self(x)
    }
}

/// Whether the herding variable is resolved.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Dimension {
    Homogeneous,
    Heterogeneous,
}

impl Dimension {
    pub fn mesh(self, spec: crate::GridSpec) -> Mesh {
        match self {
            Dimension::Homogeneous => Mesh::homogeneous(spec),
            Dimension::Heterogeneous => Mesh::heterogeneous(spec),
        }
    }
}
