use std::fmt;
use std::io::Read;
use std::sync::Arc;

use super::ModelError;
use crate::interp::Pchip;
use crate::linalg::psd_cholesky;
use crate::scalar::Scalar;

/// A coefficient map `ξ ↦ value`, written into a caller-provided buffer.
pub type Coefficient<T> = Arc<dyn Fn(T, &mut [T]) + Send + Sync>;

/// Coefficients of `du + div f(u) dt = D²:A(u) dt + Σ g_k dβ_k` on `R^N`.
///
/// Buffers: `flux` and `jacobian` take `N` entries, `viscosity` and
/// `diffusion` take `N × N` (row-major), `sigma` takes `N × K`.
#[derive(Clone)]
pub struct ScalarModel<T> {
    name: String,
    dim: usize,
    sigma_cols: usize,
    flux: Coefficient<T>,
    jacobian: Coefficient<T>,
    viscosity: Coefficient<T>,
    diffusion: Coefficient<T>,
    sigma: Coefficient<T>,
    lip_f: T,
    lip_a: T,
}

impl<T: fmt::Debug> fmt::Debug for ScalarModel<T> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("ScalarModel")
            .field("name", &self.name)
            .field("dim", &self.dim)
            .field("sigma_cols", &self.sigma_cols)
            .field("lip_f", &self.lip_f)
            .field("lip_a", &self.lip_a)
            .finish_non_exhaustive()
    }
}

fn zero_coefficient<T: Scalar>() -> Coefficient<T> {
    Arc::new(|_, out: &mut [T]| out.iter_mut().for_each(|o| *o = T::zero()))
}

#[inline]
fn clamp<T: Scalar>(x: T, lo: T, hi: T) -> T {
    x.max(lo).min(hi)
}

impl<T: Scalar> ScalarModel<T> {
    /// Purely hyperbolic model with the given flux and its derivative.
    pub fn hyperbolic(
        name: impl Into<String>,
        dim: usize,
        flux: Coefficient<T>,
        jacobian: Coefficient<T>,
        lip_f: T,
    ) -> Self {
        Self {
            name: name.into(),
            dim,
            sigma_cols: dim,
            flux,
            jacobian,
            viscosity: zero_coefficient(),
            diffusion: zero_coefficient(),
            sigma: zero_coefficient(),
            lip_f,
            lip_a: T::zero(),
        }
    }

    /// `f ≡ 0`, `A ≡ 0`.
    pub fn zero(dim: usize) -> Self {
        Self::hyperbolic("zero", dim, zero_coefficient(), zero_coefficient(), T::zero())
    }

    /// Replaces the viscosity part: `A`, `a = A′` and a factor `σ` with
    /// `σσᵀ = a` having `sigma_cols` columns.
    pub fn with_viscosity(
        mut self,
        viscosity: Coefficient<T>,
        diffusion: Coefficient<T>,
        sigma: Coefficient<T>,
        sigma_cols: usize,
        lip_a: T,
    ) -> Self {
        self.viscosity = viscosity;
        self.diffusion = diffusion;
        self.sigma = sigma;
        self.sigma_cols = sigma_cols;
        self.lip_a = lip_a;
        self
    }

    pub fn with_name(mut self, name: impl Into<String>) -> Self {
        self.name = name.into();
        self
    }

    /// `f(u) = c u`.
    pub fn linear(c: Vec<T>) -> Self {
        let dim = c.len();
        let lip = c.iter().map(|x| *x * *x).sum::<T>().sqrt();
        let c1 = Arc::new(c);
        let c2 = c1.clone();
        Self::hyperbolic(
            "linear",
            dim,
            Arc::new(move |u, out: &mut [T]| {
                for (o, ci) in out.iter_mut().zip(c1.iter()) {
                    *o = *ci * u;
                }
            }),
            Arc::new(move |_, out: &mut [T]| out.copy_from_slice(&c2)),
            lip,
        )
    }

    /// `f(u) = d sin u`.
    pub fn sin_flux(direction: Vec<T>) -> Self {
        let dim = direction.len();
        let lip = direction.iter().map(|x| *x * *x).sum::<T>().sqrt();
        let d1 = Arc::new(direction);
        let d2 = d1.clone();
        Self::hyperbolic(
            "sin_flux",
            dim,
            Arc::new(move |u, out: &mut [T]| {
                let s = u.sin();
                for (o, di) in out.iter_mut().zip(d1.iter()) {
                    *o = *di * s;
                }
            }),
            Arc::new(move |u, out: &mut [T]| {
                let c = u.cos();
                for (o, di) in out.iter_mut().zip(d2.iter()) {
                    *o = *di * c;
                }
            }),
            lip,
        )
    }

    /// `f(u) = −d cos u`, so that `b(u) = d sin u`.
    pub fn cosine_flux(direction: Vec<T>) -> Self {
        let dim = direction.len();
        let lip = direction.iter().map(|x| *x * *x).sum::<T>().sqrt();
        let d1 = Arc::new(direction);
        let d2 = d1.clone();
        Self::hyperbolic(
            "cosine_flux",
            dim,
            Arc::new(move |u, out: &mut [T]| {
                let c = u.cos();
                for (o, di) in out.iter_mut().zip(d1.iter()) {
                    *o = -*di * c;
                }
            }),
            Arc::new(move |u, out: &mut [T]| {
                let s = u.sin();
                for (o, di) in out.iter_mut().zip(d2.iter()) {
                    *o = *di * s;
                }
            }),
            lip,
        )
    }

    /// `f(u) = d g(u)` with `g(u) = u²/2` on `[−M, M]`, continued linearly
    /// outside so that `g′ = clamp(u, −M, M)` and `Lip(f) = M |d|`.
    pub fn saturated_burgers(direction: Vec<T>, m_sat: T) -> Result<Self, ModelError> {
        if !(m_sat > T::zero()) || !m_sat.is_finite() {
            return Err(ModelError::Parameter(format!("saturation level must be positive and finite, got {m_sat}")));
        }
        let dim = direction.len();
        let norm = direction.iter().map(|x| *x * *x).sum::<T>().sqrt();
        let d1 = Arc::new(direction);
        let d2 = d1.clone();
        let half = T::lit(0.5);
        Ok(Self::hyperbolic(
            "saturated_burgers",
            dim,
            Arc::new(move |u, out: &mut [T]| {
                let g = if u.abs() <= m_sat { half * u * u } else { m_sat * u.abs() - half * m_sat * m_sat };
                for (o, di) in out.iter_mut().zip(d1.iter()) {
                    *o = *di * g;
                }
            }),
            Arc::new(move |u, out: &mut [T]| {
                let g = clamp(u, -m_sat, m_sat);
                for (o, di) in out.iter_mut().zip(d2.iter()) {
                    *o = *di * g;
                }
            }),
            m_sat * norm,
        ))
    }

    /// Diagonal porous-medium-type viscosity `A(u) = diag(D) φ(u)` with
    /// `φ′(u) = κ₀ + κ₁ clamp(u, 0, u_sat)`. `κ₀ = 0` makes the equation
    /// degenerate (hyperbolic) for `u ≤ 0`; `u_sat = ∞` is allowed.
    pub fn with_porous_viscosity(self, diag: Vec<T>, kappa0: T, kappa1: T, u_sat: T) -> Result<Self, ModelError> {
        if diag.len() != self.dim {
            return Err(ModelError::Dimension { expected: self.dim, got: diag.len() });
        }
        if diag.iter().any(|d| *d < T::zero()) || kappa0 < T::zero() || kappa1 < T::zero() || !(u_sat > T::zero()) {
            return Err(ModelError::Parameter("porous viscosity needs D ≥ 0, κ₀ ≥ 0, κ₁ ≥ 0 and u_sat > 0".into()));
        }
        let n = self.dim;
        let half = T::lit(0.5);
        let dmax = diag.iter().copied().fold(T::zero(), T::max);
        let lip_a = dmax * (kappa0 + if kappa1 > T::zero() { kappa1 * u_sat } else { T::zero() });
        let phi = move |u: T| {
            let ramp = if u <= T::zero() {
                T::zero()
            } else if u <= u_sat {
                half * u * u
            } else {
                half * u_sat * u_sat + u_sat * (u - u_sat)
            };
            kappa0 * u + kappa1 * ramp
        };
        let dphi = move |u: T| kappa0 + kappa1 * clamp(u, T::zero(), u_sat);
        let d1 = Arc::new(diag);
        let (d2, d3) = (d1.clone(), d1.clone());
        let name = format!("{}+porous", self.name);
        Ok(self
            .with_viscosity(
                Arc::new(move |u, out: &mut [T]| diagonal_into(out, n, &d1, phi(u))),
                Arc::new(move |u, out: &mut [T]| diagonal_into(out, n, &d2, dphi(u))),
                Arc::new(move |u, out: &mut [T]| {
                    let s = dphi(u);
                    out.iter_mut().for_each(|o| *o = T::zero());
                    for i in 0..n {
                        out[i * n + i] = (d3[i] * s).sqrt();
                    }
                }),
                n,
                lip_a,
            )
            .with_name(name))
    }

    /// Constant diffusion `a ≡ a₀` (symmetric PSD), `A(u) = a₀ u`.
    pub fn with_constant_diffusion(self, a0: Vec<T>) -> Result<Self, ModelError> {
        let n = self.dim;
        if a0.len() != n * n {
            return Err(ModelError::Dimension { expected: n * n, got: a0.len() });
        }
        let scale = a0.iter().map(|x| x.abs()).fold(T::zero(), T::max);
        let factor = psd_cholesky(&a0, n, T::lit(1e-14) * scale);
        let lip = crate::linalg::symmetric_eigenvalues(&a0, n)
            .into_iter()
            .map(|e| e.abs())
            .fold(T::zero(), T::max);
        let a1 = Arc::new(a0);
        let a2 = a1.clone();
        let name = format!("{}+constant_diffusion", self.name);
        Ok(self
            .with_viscosity(
                Arc::new(move |u, out: &mut [T]| {
                    for (o, a) in out.iter_mut().zip(a1.iter()) {
                        *o = *a * u;
                    }
                }),
                Arc::new(move |_, out: &mut [T]| out.copy_from_slice(&a2)),
                Arc::new(move |_, out: &mut [T]| out.copy_from_slice(&factor)),
                n,
                lip,
            )
            .with_name(name))
    }

    /// Tabulated model from CSV with header `xi, f_1..f_N, A_11..A_NN`
    /// (row-major `A`). Both `f` and `A` are interpolated by monotone
    /// cubics; `b` and `a` are their exact derivatives and `σ` is a
    /// pivoted Cholesky factor of `a`.
    pub fn from_csv<R: Read>(name: impl Into<String>, reader: R) -> Result<Self, ModelError> {
        let mut rdr = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(reader);
        let headers: Vec<String> = rdr
            .headers()
            .map_err(|e| ModelError::Table(e.to_string()))?
            .iter()
            .map(str::to_string)
            .collect();
        let cols = headers.len();
        let n = (1..=8).find(|n| 1 + n + n * n == cols).ok_or_else(|| {
            ModelError::Table(format!("{cols} columns do not match xi, f_1..f_N, A_11..A_NN for any N"))
        })?;
        let mut expected = vec!["xi".to_string()];
        expected.extend((1..=n).map(|j| format!("f_{j}")));
        for r in 1..=n {
            expected.extend((1..=n).map(|c| format!("A_{r}{c}")));
        }
        if headers != expected {
            return Err(ModelError::Table(format!("header {headers:?} differs from {expected:?}")));
        }
        let mut data: Vec<Vec<T>> = vec![Vec::new(); cols];
        for (line, rec) in rdr.records().enumerate() {
            let rec = rec.map_err(|e| ModelError::Table(e.to_string()))?;
            for (c, field) in rec.iter().enumerate() {
                let v: f64 = field
                    .parse()
                    .map_err(|_| ModelError::Table(format!("row {}: column {} is not a number", line + 2, headers[c])))?;
                data[c].push(T::lit(v));
            }
        }
        let xi = data[0].clone();
        let curves: Vec<Pchip<T>> = data[1..]
            .iter()
            .map(|ys| Pchip::new(xi.clone(), ys.clone()))
            .collect::<Result<_, _>>()
            .map_err(ModelError::Table)?;
        let f_curves = Arc::new(curves[..n].to_vec());
        let a_curves = Arc::new(curves[n..].to_vec());

        // Lipschitz constants from a fine sampling of the interpolants.
        let mut lip_f = T::zero();
        let mut lip_a = T::zero();
        let mut b = vec![T::zero(); n];
        let mut a = vec![T::zero(); n * n];
        for w in xi.windows(2) {
            for s in 0..=8 {
                let x = w[0] + (w[1] - w[0]) * T::lit(s as f64 / 8.0);
                for (bj, c) in b.iter_mut().zip(f_curves.iter()) {
                    *bj = c.derivative(x);
                }
                lip_f = lip_f.max(crate::linalg::norm2(&b));
                table_diffusion(&a_curves, n, x, &mut a);
                lip_a = lip_a.max(crate::linalg::max_row_sum(&a, n));
            }
        }

        let (f1, f2) = (f_curves.clone(), f_curves);
        let (a1, a2, a3) = (a_curves.clone(), a_curves.clone(), a_curves);
        let hyper = Self::hyperbolic(
            name,
            n,
            Arc::new(move |u, out: &mut [T]| {
                for (o, c) in out.iter_mut().zip(f1.iter()) {
                    *o = c.eval(u);
                }
            }),
            Arc::new(move |u, out: &mut [T]| {
                for (o, c) in out.iter_mut().zip(f2.iter()) {
                    *o = c.derivative(u);
                }
            }),
            lip_f,
        );
        Ok(hyper.with_viscosity(
            Arc::new(move |u, out: &mut [T]| {
                for (o, c) in out.iter_mut().zip(a1.iter()) {
                    *o = c.eval(u);
                }
            }),
            Arc::new(move |u, out: &mut [T]| table_diffusion(&a2, n, u, out)),
            Arc::new(move |u, out: &mut [T]| {
                let mut a = vec![T::zero(); n * n];
                table_diffusion(&a3, n, u, &mut a);
                let scale = a.iter().map(|x| x.abs()).fold(T::zero(), T::max);
                out.copy_from_slice(&psd_cholesky(&a, n, T::lit(1e-14) * scale));
            }),
            n,
            lip_a,
        ))
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    /// Ambient dimension `N`.
    pub fn dim(&self) -> usize {
        self.dim
    }

    /// Number of columns `K` of `σ`.
    pub fn sigma_cols(&self) -> usize {
        self.sigma_cols
    }

    /// Declared `Lip(f)`.
    pub fn lip_f(&self) -> T {
        self.lip_f
    }

    /// Declared `Lip(A)`.
    pub fn lip_a(&self) -> T {
        self.lip_a
    }

    #[inline]
    pub fn flux(&self, u: T, out: &mut [T]) {
        (self.flux)(u, out)
    }

    #[inline]
    pub fn jacobian(&self, u: T, out: &mut [T]) {
        (self.jacobian)(u, out)
    }

    #[inline]
    pub fn viscosity(&self, u: T, out: &mut [T]) {
        (self.viscosity)(u, out)
    }

    #[inline]
    pub fn diffusion(&self, u: T, out: &mut [T]) {
        (self.diffusion)(u, out)
    }

    #[inline]
    pub fn sigma(&self, u: T, out: &mut [T]) {
        (self.sigma)(u, out)
    }
}

fn diagonal_into<T: Scalar>(out: &mut [T], n: usize, diag: &[T], s: T) {
    out.iter_mut().for_each(|o| *o = T::zero());
    for i in 0..n {
        out[i * n + i] = diag[i] * s;
    }
}

fn table_diffusion<T: Scalar>(curves: &[Pchip<T>], n: usize, u: T, out: &mut [T]) {
    for r in 0..n {
        for c in 0..n {
            let d = (curves[r * n + c].derivative(u) + curves[c * n + r].derivative(u)) * T::lit(0.5);
            out[r * n + c] = d;
        }
    }
}
