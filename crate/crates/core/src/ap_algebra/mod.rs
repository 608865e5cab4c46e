//! Almost-periodic function algebra: frequency groups, trigonometric
//! polynomials, mean values, Besicovitch norms and the reduction/lift
//! between `R^N` and the torus `T^P`.
//!
//! The Bohr compactification is never built. Every mean over `R^N` is
//! either computed on the torus through the reduction map or estimated on
//! expanding cubes `C_R = [−R/2, R/2]^N`.

mod freq;
mod lift;
mod norms;
mod trig;

pub use freq::{FrequencySet, Independence, DEFAULT_DENOMINATOR_BOUND, INDEPENDENCE_RTOL};
pub use lift::{lift, lift_polynomial, AlmostPeriodicField, FieldBase};
pub use norms::{cube_average_n1, isometry_study, torus_n1, IsometryRow, IsometryStudy};
pub use trig::{CoefficientRecord, TrigPolynomial};

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum ApError {
    #[error("frequency set has no generators")]
    NoGenerators,
    #[error("generator {0} is the zero vector")]
    ZeroGenerator(usize),
    #[error("dimension mismatch: expected {expected}, got {got}")]
    Dimension { expected: usize, got: usize },
    #[error("coefficient {k:?} violates Hermitian symmetry: {reason}")]
    Hermitian { k: Vec<i64>, reason: String },
    #[error("coefficient file line {line}: {reason}")]
    Parse { line: usize, reason: String },
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
}
