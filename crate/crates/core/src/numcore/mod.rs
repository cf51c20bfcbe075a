//! Numerical foundation: parametric families, finite-dimensional states and
//! operators, outcome spaces with quadrature, and sample-space measures.
//!
//! All types are immutable after construction and all operations are pure,
//! so everything here is safe to share across threads.

mod family;
mod operators;
mod space;

pub use family::{fd_derivative, Differentiable, ParametricFamily, DEFAULT_FD_STEP};
pub use operators::{
    frobenius, hermitian_eigen, hermiticity_deviation, inner, outer, trace_product, DensityOperator,
    HermitianOperator, StateVector, EIGEN_CLAMP, STATE_TOL,
};
pub(crate) use space::check_normalized;
pub use space::{expectation, integrate, Integral, OutcomeSpace, QuadratureRule, SampleMeasure, NORMALIZATION_TOL};
