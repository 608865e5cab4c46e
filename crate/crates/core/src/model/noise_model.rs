use serde::Serialize;

use super::ModelError;
use crate::ap_algebra::TrigPolynomial;
use crate::linalg::{norm2, symmetric_eigenvalues};
use crate::scalar::Scalar;

/// One noise mode: a coefficient `h_k` on `T^P` and its declared bound
/// `α_k ≥ sup|h_k| + sup|∇h_k| + sup|D²h_k|`.
#[derive(Debug, Clone, PartialEq)]
pub struct NoiseMode<T> {
    pub h: TrigPolynomial<T>,
    pub alpha: T,
}

/// Finitely many additive noise modes `Σ_k h_k dβ_k`.
#[derive(Debug, Clone, PartialEq)]
pub struct NoiseModel<T> {
    dims: usize,
    modes: Vec<NoiseMode<T>>,
}

impl<T: Scalar> NoiseModel<T> {
    pub fn new(dims: usize, modes: Vec<NoiseMode<T>>) -> Result<Self, ModelError> {
        for m in &modes {
            if m.h.dims() != dims {
                return Err(ModelError::Dimension { expected: dims, got: m.h.dims() });
            }
        }
        Ok(Self { dims, modes })
    }

    /// No noise: the equation is deterministic.
    pub fn none(dims: usize) -> Self {
        Self { dims, modes: Vec::new() }
    }

    pub fn dims(&self) -> usize {
        self.dims
    }

    pub fn modes(&self) -> &[NoiseMode<T>] {
        &self.modes
    }

    pub fn len(&self) -> usize {
        self.modes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.modes.is_empty()
    }

    /// `D₀ = Σ α_k²`.
    pub fn d0(&self) -> T {
        self.modes.iter().map(|m| m.alpha * m.alpha).sum()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum NoiseInvariant {
    ZeroMean,
    Bound,
    NonFinite,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct NoiseViolation {
    pub mode: usize,
    pub invariant: NoiseInvariant,
    pub value: f64,
    pub tolerance: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct NoiseModeReport {
    pub mode: usize,
    pub mean: f64,
    pub sup_h: f64,
    pub sup_grad: f64,
    pub sup_hessian: f64,
    /// `sup|h| + sup|∇h| + sup|D²h|` on the evaluation grid.
    pub grid_bound: f64,
    /// The same quantity bounded from the coefficients.
    pub majorant: f64,
    pub alpha: f64,
    /// The coefficient majorant alone already certifies the bound.
    pub certified: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct NoiseReport {
    pub d0: f64,
    /// `Σ_k sup|h_k|²`, never larger than `D₀` when the report passes.
    pub sum_sup_squared: f64,
    pub grid_cells: usize,
    pub modes: Vec<NoiseModeReport>,
    pub violations: Vec<NoiseViolation>,
}

impl NoiseReport {
    pub fn passed(&self) -> bool {
        self.violations.is_empty()
    }
}

/// Zero-mean tolerance for the `k = 0` coefficient.
pub const ZERO_MEAN_TOL: f64 = 1e-12;

/// Cells per axis used to evaluate the sup norms of the modes.
fn evaluation_cells(dims: usize, max_freq: i64) -> usize {
    let want = (16 * (max_freq as usize + 1)).max(64);
    let cap = match dims {
        1 => 1 << 16,
        2 => 1024,
        3 => 96,
        _ => 24,
    };
    want.min(cap)
}

/// Checks zero mean and the declared bounds `α_k` of every mode.
pub fn validate_noise<T: Scalar>(nm: &NoiseModel<T>) -> NoiseReport {
    let p = nm.dims();
    let max_freq = nm.modes().iter().map(|m| m.h.max_frequency()).max().unwrap_or(0);
    let cells = evaluation_cells(p, max_freq);
    let total = cells.pow(p as u32);
    let mut modes = Vec::with_capacity(nm.len());
    let mut violations = Vec::new();
    let mut sum_sup_sq = 0.0;
    let mut y = vec![T::zero(); p];
    let grid = crate::field::TorusField::<T>::zeros(p, cells);

    for (k, mode) in nm.modes().iter().enumerate() {
        let mean = mode.h.mean_value().to_f64_lossy();
        let alpha = mode.alpha.to_f64_lossy();
        if !alpha.is_finite() || mode.h.coefficients().values().any(|c| !(c.re.is_finite() && c.im.is_finite())) {
            violations.push(NoiseViolation { mode: k, invariant: NoiseInvariant::NonFinite, value: alpha, tolerance: 0.0 });
        }
        if mean.abs() > ZERO_MEAN_TOL {
            violations.push(NoiseViolation {
                mode: k,
                invariant: NoiseInvariant::ZeroMean,
                value: mean,
                tolerance: ZERO_MEAN_TOL,
            });
        }
        let (mut s0, mut s1, mut s2) = (0.0f64, 0.0f64, 0.0f64);
        for idx in 0..total {
            grid.center_into(idx, &mut y);
            s0 = s0.max(mode.h.eval(&y).abs().to_f64_lossy());
            s1 = s1.max(norm2(&mode.h.gradient(&y)).to_f64_lossy());
            let hess = mode.h.hessian(&y);
            let spec = symmetric_eigenvalues(&hess, p).into_iter().map(|e| e.abs()).fold(T::zero(), T::max);
            s2 = s2.max(spec.to_f64_lossy());
        }
        let (m0, m1, m2) = mode.h.derivative_majorants();
        let majorant = (m0 + m1 + m2).to_f64_lossy();
        let grid_bound = s0 + s1 + s2;
        let tol = alpha * (1.0 + 1e-9);
        if grid_bound > tol {
            violations.push(NoiseViolation { mode: k, invariant: NoiseInvariant::Bound, value: grid_bound, tolerance: tol });
        }
        sum_sup_sq += s0 * s0;
        modes.push(NoiseModeReport {
            mode: k,
            mean,
            sup_h: s0,
            sup_grad: s1,
            sup_hessian: s2,
            grid_bound,
            majorant,
            alpha,
            certified: majorant <= tol,
        });
    }
    NoiseReport { d0: nm.d0().to_f64_lossy(), sum_sup_squared: sum_sup_sq, grid_cells: cells, modes, violations }
}
