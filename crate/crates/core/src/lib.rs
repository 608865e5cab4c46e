//! Stochastic degenerate parabolic-hyperbolic conservation laws with
//! almost-periodic data.
//!
//! Everything is generic over the scalar through [`scalar::Scalar`]; the
//! aliases below fix it to `f64`.

// `!(x > 0)` guards also reject NaN; index loops mirror the stencils.
#![allow(clippy::neg_cmp_op_on_partial_ord, clippy::needless_range_loop)]

pub mod ap_algebra;
pub mod ergodic;
pub mod field;
pub mod fourier;
pub mod interp;
pub mod linalg;
pub mod model;
pub mod noise;
pub mod nondegeneracy;
pub mod quadrature;
pub mod scalar;
pub mod solver;

pub use scalar::Scalar;

pub type Field = field::TorusField<f64>;
pub type Frequencies = ap_algebra::FrequencySet<f64>;
pub type Polynomial = ap_algebra::TrigPolynomial<f64>;
pub type Model = model::ScalarModel<f64>;
pub type Reduced = model::ReducedModel<f64>;
pub type Noise = model::NoiseModel<f64>;
pub type Path = noise::WienerPath<f64>;
pub type Config = solver::SolverConfig<f64>;
pub type Run = solver::Trajectory<f64>;

#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error(transparent)]
    Ap(#[from] ap_algebra::ApError),
    #[error(transparent)]
    Field(#[from] field::FieldError),
    #[error(transparent)]
    Model(#[from] model::ModelError),
    #[error(transparent)]
    Noise(#[from] noise::NoiseError),
    #[error(transparent)]
    Solver(#[from] solver::SolverError),
    #[error(transparent)]
    Nondegeneracy(#[from] nondegeneracy::NondegError),
    #[error(transparent)]
    Ergodic(#[from] ergodic::ErgodicError),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
