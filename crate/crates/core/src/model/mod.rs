//! Equation coefficients, their validation and the reduction to the torus.

mod coefficients;
mod noise_model;
mod reduced;
mod validate;

pub use coefficients::{Coefficient, ScalarModel};
pub use noise_model::{
    validate_noise, NoiseInvariant, NoiseMode, NoiseModeReport, NoiseModel, NoiseReport, NoiseViolation, ZERO_MEAN_TOL,
};
pub use reduced::{reduce_model, ReducedModel, ReductionOptions};
pub use validate::{
    uniform_samples, validate_model, ModelInvariant, ModelReport, ModelViolation, FACTOR_RTOL, FD_RTOL, PSD_RTOL,
};

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum ModelError {
    #[error("dimension mismatch: expected {expected}, got {got}")]
    Dimension { expected: usize, got: usize },
    #[error("invalid parameter: {0}")]
    Parameter(String),
    #[error("coefficient table: {0}")]
    Table(String),
    #[error("model `{}` failed validation: {}", .0.name, describe(.0))]
    Invalid(Box<ModelReport>),
}

fn describe(r: &ModelReport) -> String {
    r.violations
        .iter()
        .map(|v| format!("{:?} at xi = {} ({} > {})", v.invariant, v.xi, v.value, v.tolerance))
        .collect::<Vec<_>>()
        .join("; ")
}
