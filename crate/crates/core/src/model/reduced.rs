use std::sync::Arc;

use super::{validate_model, uniform_samples, ModelError, ScalarModel};
use crate::ap_algebra::FrequencySet;
use crate::interp::UniformTable;
use crate::linalg::{congruence, max_row_sum};
use crate::quadrature::adaptive_simpson;
use crate::scalar::Scalar;

/// Lattice on which the reduced flux and integrated viscosity are tabulated.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ReductionOptions<T> {
    /// Tables cover `[−half_range, half_range]`; beyond it they continue
    /// linearly with their end slopes.
    pub half_range: T,
    pub nodes_per_unit: usize,
    /// Absolute tolerance of the adaptive Simpson rule per lattice cell.
    pub quadrature_tol: T,
    /// Number of validation samples across the lattice.
    pub validation_samples: usize,
}

impl<T: Scalar> Default for ReductionOptions<T> {
    fn default() -> Self {
        Self {
            half_range: T::lit(16.0),
            nodes_per_unit: 256,
            quadrature_tol: T::lit(1e-10),
            validation_samples: 513,
        }
    }
}

/// Torus coefficients `f̃_j = λ_j·f`, `σ̃_j = λ_jᵀσ`, `ã = σ̃σ̃ᵀ + ε Gram(Λ)`
/// and `Ã` with `Ã′ = ã`, `Ã(0) = 0`.
///
/// Point evaluations (`flux`, `jacobian`, `diffusion`, `sigma`) are exact
/// compositions with the underlying model. The solver uses the lattice
/// tables: piecewise-linear `f̃_j`, its Engquist–Osher parts
/// `G±_j(u) = ∫_0^u max/min(b̃_j, 0)` and `Ã_{jl}`, all on one lattice
/// that contains `0`, so `f̃_j = f̃_j(0) + G⁺_j + G⁻_j` holds identically.
#[derive(Debug, Clone)]
pub struct ReducedModel<T> {
    model: Arc<ScalarModel<T>>,
    freqs: FrequencySet<T>,
    epsilon: T,
    gram: Vec<T>,
    lambda: Vec<T>,
    flux_tables: Vec<UniformTable<T>>,
    flux_at_zero: Vec<T>,
    eo_plus: Vec<UniformTable<T>>,
    eo_minus: Vec<UniformTable<T>>,
    integrated: Vec<UniformTable<T>>,
    diagonal: bool,
    lip_f: T,
    diffusion_bound: T,
    half_range: T,
}

/// Builds the reduced model after validating `m` on the lattice range.
pub fn reduce_model<T: Scalar>(
    m: Arc<ScalarModel<T>>,
    freqs: FrequencySet<T>,
    epsilon: T,
    opts: &ReductionOptions<T>,
) -> Result<ReducedModel<T>, ModelError> {
    if freqs.dim() != m.dim() {
        return Err(ModelError::Dimension { expected: m.dim(), got: freqs.dim() });
    }
    if !(epsilon >= T::zero()) || !epsilon.is_finite() {
        return Err(ModelError::Parameter(format!("epsilon must be finite and non-negative, got {epsilon}")));
    }
    if !(opts.half_range > T::zero()) || opts.nodes_per_unit == 0 {
        return Err(ModelError::Parameter("reduction lattice must have positive range and density".into()));
    }
    let report = validate_model(
        &m,
        &uniform_samples(-opts.half_range, opts.half_range, opts.validation_samples.max(2)),
    );
    if !report.passed() {
        return Err(ModelError::Invalid(Box::new(report)));
    }

    let p = freqs.rank();
    let n = m.dim();
    let lambda = freqs.matrix();
    let gram = freqs.gram();

    let half_nodes = (opts.half_range * T::from_usize_lossy(opts.nodes_per_unit)).ceil().to_usize().unwrap_or(1).max(1);
    let step = T::one() / T::from_usize_lossy(opts.nodes_per_unit);
    let count = 2 * half_nodes + 1;
    let lo = -step * T::from_usize_lossy(half_nodes);
    let node = |i: usize| lo + step * T::from_usize_lossy(i);

    // reduced flux at nodes
    let mut fbuf = vec![T::zero(); n];
    let mut flux_vals = vec![vec![T::zero(); count]; p];
    for i in 0..count {
        let x = if i == half_nodes { T::zero() } else { node(i) };
        m.flux(x, &mut fbuf);
        for j in 0..p {
            flux_vals[j][i] = crate::linalg::dot(&lambda[j * n..(j + 1) * n], &fbuf);
        }
    }
    let flux_at_zero: Vec<T> = (0..p).map(|j| flux_vals[j][half_nodes]).collect();
    let mut eo_plus = Vec::with_capacity(p);
    let mut eo_minus = Vec::with_capacity(p);
    for vals in &flux_vals {
        let mut gp = vec![T::zero(); count];
        let mut gm = vec![T::zero(); count];
        for i in half_nodes + 1..count {
            let d = vals[i] - vals[i - 1];
            gp[i] = gp[i - 1] + d.max(T::zero());
            gm[i] = gm[i - 1] + d.min(T::zero());
        }
        for i in (0..half_nodes).rev() {
            let d = vals[i + 1] - vals[i];
            gp[i] = gp[i + 1] - d.max(T::zero());
            gm[i] = gm[i + 1] - d.min(T::zero());
        }
        eo_plus.push(UniformTable::new(lo, step, gp));
        eo_minus.push(UniformTable::new(lo, step, gm));
    }
    let flux_tables: Vec<UniformTable<T>> = flux_vals.into_iter().map(|v| UniformTable::new(lo, step, v)).collect();
    let lip_f = flux_tables.iter().map(|t| t.lipschitz()).fold(T::zero(), T::max);

    // Ã by cumulative adaptive quadrature of ã outward from 0
    let mut integrated_vals = vec![vec![T::zero(); count]; p * p];
    let mut diagonal = true;
    let tol = opts.quadrature_tol;
    let entry = |x: T, j: usize, l: usize| {
        let mut a = vec![T::zero(); n * n];
        let mut out = vec![T::zero(); p * p];
        m.diffusion(x, &mut a);
        congruence(&lambda, &a, p, n, &mut out);
        out[j * p + l]
    };
    for j in 0..p {
        for l in j..p {
            let g = |x: T| entry(x, j, l);
            let vals = &mut integrated_vals[j * p + l];
            for i in half_nodes + 1..count {
                vals[i] = vals[i - 1] + adaptive_simpson(&g, node(i - 1), node(i), tol, 40);
            }
            for i in (0..half_nodes).rev() {
                vals[i] = vals[i + 1] - adaptive_simpson(&g, node(i), node(i + 1), tol, 40);
            }
            let eg = epsilon * gram[j * p + l];
            if eg != T::zero() {
                for (i, v) in vals.iter_mut().enumerate() {
                    *v += eg * node(i);
                }
            }
            if j != l && vals.iter().any(|v| *v != T::zero()) {
                diagonal = false;
            }
            if j != l {
                integrated_vals[l * p + j] = integrated_vals[j * p + l].clone();
            }
        }
    }
    let integrated: Vec<UniformTable<T>> =
        integrated_vals.into_iter().map(|v| UniformTable::new(lo, step, v)).collect();

    // largest row sum of the secant matrices of Ã over the lattice cells
    let mut diffusion_bound = T::zero();
    let mut sec = vec![T::zero(); p * p];
    for i in 0..count - 1 {
        for (s, t) in sec.iter_mut().zip(&integrated) {
            *s = (t.values()[i + 1] - t.values()[i]) / step;
        }
        diffusion_bound = diffusion_bound.max(max_row_sum(&sec, p));
    }

    Ok(ReducedModel {
        model: m,
        freqs,
        epsilon,
        gram,
        lambda,
        flux_tables,
        flux_at_zero,
        eo_plus,
        eo_minus,
        integrated,
        diagonal,
        lip_f,
        diffusion_bound,
        half_range: step * T::from_usize_lossy(half_nodes),
    })
}

impl<T: Scalar> ReducedModel<T> {
    /// Torus dimension `P`.
    pub fn rank(&self) -> usize {
        self.freqs.rank()
    }

    pub fn model(&self) -> &Arc<ScalarModel<T>> {
        &self.model
    }

    pub fn frequencies(&self) -> &FrequencySet<T> {
        &self.freqs
    }

    pub fn epsilon(&self) -> T {
        self.epsilon
    }

    pub fn gram(&self) -> &[T] {
        &self.gram
    }

    /// Whether `Ã` has identically zero off-diagonal tables.
    pub fn is_diagonal(&self) -> bool {
        self.diagonal
    }

    /// Lipschitz constant of the tabulated reduced flux (largest over `j`).
    pub fn lip_f(&self) -> T {
        self.lip_f
    }

    /// Upper bound of `‖ã_ε‖` seen by the scheme (largest row sum of the
    /// secant matrices of `Ã`).
    pub fn diffusion_bound(&self) -> T {
        self.diffusion_bound
    }

    /// Half width of the tabulation lattice.
    pub fn half_range(&self) -> T {
        self.half_range
    }

    /// Exact `f̃(u)` (`P` entries).
    pub fn flux(&self, u: T, out: &mut [T]) {
        self.project(u, out, |m, u, buf| m.flux(u, buf));
    }

    /// Exact `b̃(u) = f̃′(u)`.
    pub fn jacobian(&self, u: T, out: &mut [T]) {
        self.project(u, out, |m, u, buf| m.jacobian(u, buf));
    }

    fn project<F: Fn(&ScalarModel<T>, T, &mut [T])>(&self, u: T, out: &mut [T], f: F) {
        let n = self.model.dim();
        let mut buf = vec![T::zero(); n];
        f(&self.model, u, &mut buf);
        for (j, o) in out.iter_mut().enumerate().take(self.rank()) {
            *o = crate::linalg::dot(&self.lambda[j * n..(j + 1) * n], &buf);
        }
    }

    /// Exact `σ̃(u) = Λσ(u)` (`P × K`).
    pub fn sigma(&self, u: T, out: &mut [T]) {
        let n = self.model.dim();
        let k = self.model.sigma_cols();
        let p = self.rank();
        let mut s = vec![T::zero(); n * k];
        self.model.sigma(u, &mut s);
        for j in 0..p {
            for c in 0..k {
                let mut acc = T::zero();
                for r in 0..n {
                    acc += self.lambda[j * n + r] * s[r * k + c];
                }
                out[j * k + c] = acc;
            }
        }
    }

    /// Exact `ã_ε(u) = Λ a(u) Λᵀ + ε Gram(Λ)` (`P × P`).
    pub fn diffusion(&self, u: T, out: &mut [T]) {
        let n = self.model.dim();
        let p = self.rank();
        let mut a = vec![T::zero(); n * n];
        self.model.diffusion(u, &mut a);
        congruence(&self.lambda, &a, p, n, out);
        if self.epsilon != T::zero() {
            for (o, g) in out.iter_mut().zip(&self.gram) {
                *o += self.epsilon * *g;
            }
        }
    }

    /// Tabulated `f̃_j(u)`.
    #[inline]
    pub fn flux_tabled(&self, j: usize, u: T) -> T {
        self.flux_tables[j].eval(u)
    }

    pub fn flux_at_zero(&self, j: usize) -> T {
        self.flux_at_zero[j]
    }

    #[inline]
    pub fn eo_plus(&self, j: usize, u: T) -> T {
        self.eo_plus[j].eval(u)
    }

    #[inline]
    pub fn eo_minus(&self, j: usize, u: T) -> T {
        self.eo_minus[j].eval(u)
    }

    /// Lattice position of `u`, valid for every table of this model.
    #[inline]
    pub fn locate(&self, u: T) -> (usize, T) {
        self.flux_tables[0].locate(u)
    }

    #[inline]
    pub fn eo_plus_at(&self, j: usize, at: (usize, T)) -> T {
        self.eo_plus[j].eval_located(at)
    }

    #[inline]
    pub fn eo_minus_at(&self, j: usize, at: (usize, T)) -> T {
        self.eo_minus[j].eval_located(at)
    }

    #[inline]
    pub fn flux_at(&self, j: usize, at: (usize, T)) -> T {
        self.flux_tables[j].eval_located(at)
    }

    #[inline]
    pub fn integrated_at(&self, j: usize, l: usize, at: (usize, T)) -> T {
        self.integrated[j * self.rank() + l].eval_located(at)
    }

    /// Lipschitz constant of the tabulated `f̃_j`.
    pub fn lip_axis(&self, j: usize) -> T {
        self.flux_tables[j].lipschitz()
    }

    /// Tabulated `Ã_ε,jl(u)`.
    #[inline]
    pub fn integrated(&self, j: usize, l: usize, u: T) -> T {
        self.integrated[j * self.rank() + l].eval(u)
    }
}
