use serde::Serialize;

use super::ScalarModel;
use crate::linalg::{frobenius, gram_rows, norm2, symmetric_eigenvalues};
use crate::scalar::Scalar;

/// Eigenvalues of `a` may dip to `−PSD_RTOL · ‖a‖`.
pub const PSD_RTOL: f64 = 1e-12;
/// `‖σσᵀ − a‖ ≤ FACTOR_RTOL · (1 + ‖a‖)`.
pub const FACTOR_RTOL: f64 = 1e-10;
/// Central-difference tolerance relative to `1 + |value| + |derivative|`.
pub const FD_RTOL: f64 = 1e-3;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum ModelInvariant {
    Finite,
    Symmetry,
    Psd,
    Factorization,
    FluxDerivative,
    ViscosityDerivative,
    LipschitzF,
    LipschitzA,
}

/// The worst offending sample of one invariant.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ModelViolation {
    pub invariant: ModelInvariant,
    pub xi: f64,
    pub value: f64,
    pub tolerance: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ModelReport {
    pub name: String,
    pub samples: usize,
    /// Smallest eigenvalue of `a` over the samples and where it occurs.
    pub min_eigenvalue: f64,
    pub min_eigenvalue_xi: f64,
    pub factor_residual: f64,
    pub flux_fd_error: f64,
    pub viscosity_fd_error: f64,
    pub empirical_lip_f: f64,
    pub empirical_lip_a: f64,
    pub declared_lip_f: f64,
    pub declared_lip_a: f64,
    pub violations: Vec<ModelViolation>,
}

impl ModelReport {
    pub fn passed(&self) -> bool {
        self.violations.is_empty()
    }

    pub fn violation(&self, inv: ModelInvariant) -> Option<&ModelViolation> {
        self.violations.iter().find(|v| v.invariant == inv)
    }
}

struct Worst {
    inv: ModelInvariant,
    xi: f64,
    excess: f64,
    value: f64,
    tol: f64,
}

fn record(slot: &mut Option<Worst>, inv: ModelInvariant, xi: f64, value: f64, tol: f64) {
    let excess = value - tol;
    if !(excess > 0.0) && !value.is_nan() {
        return;
    }
    let excess = if value.is_nan() { f64::INFINITY } else { excess };
    if slot.as_ref().is_none_or(|w| excess > w.excess) {
        *slot = Some(Worst { inv, xi, excess, value, tol });
    }
}

fn max_abs_eig<T: Scalar>(m: &[T], n: usize) -> T {
    symmetric_eigenvalues(m, n).into_iter().map(|e| e.abs()).fold(T::zero(), T::max)
}

/// Checks the model invariants on the given samples of `ξ`.
///
/// Lipschitz estimates are the largest of `‖b(ξ)‖` (spectral norm of `a`
/// for `A`) over the samples and of the secants between consecutive
/// sorted samples.
pub fn validate_model<T: Scalar>(m: &ScalarModel<T>, xi_samples: &[T]) -> ModelReport {
    let n = m.dim();
    let k = m.sigma_cols();
    let mut xs: Vec<T> = xi_samples.iter().copied().filter(|x| x.is_finite()).collect();
    xs.sort_by(|a, b| a.partial_cmp(b).unwrap());
    xs.dedup();

    let mut f = vec![T::zero(); n];
    let mut f_hi = vec![T::zero(); n];
    let mut f_lo = vec![T::zero(); n];
    let mut b = vec![T::zero(); n];
    let mut big_a = vec![T::zero(); n * n];
    let mut a_hi = vec![T::zero(); n * n];
    let mut a_lo = vec![T::zero(); n * n];
    let mut a = vec![T::zero(); n * n];
    let mut s = vec![T::zero(); n * k];
    let mut ss = vec![T::zero(); n * n];
    let mut tmp = vec![T::zero(); n * n];

    let mut slots: Vec<Option<Worst>> = (0..8).map(|_| None).collect();
    let mut min_eig = f64::INFINITY;
    let mut min_eig_xi = f64::NAN;
    let (mut factor_res, mut flux_fd, mut visc_fd) = (0.0f64, 0.0f64, 0.0f64);
    let (mut lip_f, mut lip_a) = (0.0f64, 0.0f64);
    let mut prev: Option<(T, Vec<T>, Vec<T>)> = None;

    for &x in &xs {
        let xf = x.to_f64_lossy();
        m.flux(x, &mut f);
        m.jacobian(x, &mut b);
        m.viscosity(x, &mut big_a);
        m.diffusion(x, &mut a);
        m.sigma(x, &mut s);
        let finite = f.iter().chain(&b).chain(&big_a).chain(&a).chain(&s).all(|v| v.is_finite());
        if !finite {
            record(&mut slots[0], ModelInvariant::Finite, xf, f64::NAN, 0.0);
            continue;
        }
        let a_norm = frobenius(&a).to_f64_lossy();

        let mut asym = 0.0f64;
        for r in 0..n {
            for c in 0..n {
                asym = asym.max((a[r * n + c] - a[c * n + r]).abs().to_f64_lossy());
            }
        }
        record(&mut slots[1], ModelInvariant::Symmetry, xf, asym, PSD_RTOL * (1.0 + a_norm));

        let ev = symmetric_eigenvalues(&a, n)[0].to_f64_lossy();
        if ev < min_eig {
            min_eig = ev;
            min_eig_xi = xf;
        }
        record(&mut slots[2], ModelInvariant::Psd, xf, -ev, PSD_RTOL * a_norm);

        gram_rows(&s, n, k, &mut ss);
        for (t, (p, q)) in tmp.iter_mut().zip(ss.iter().zip(&a)) {
            *t = *p - *q;
        }
        let res = frobenius(&tmp).to_f64_lossy();
        factor_res = factor_res.max(res);
        record(&mut slots[3], ModelInvariant::Factorization, xf, res, FACTOR_RTOL * (1.0 + a_norm));

        let h = T::lit(1e-4) * (T::one() + x.abs());
        m.flux(x + h, &mut f_hi);
        m.flux(x - h, &mut f_lo);
        for (t, ((p, q), bj)) in tmp.iter_mut().zip(f_hi.iter().zip(&f_lo).zip(&b)) {
            *t = (*p - *q) / (h + h) - *bj;
        }
        let err = norm2(&tmp[..n]).to_f64_lossy();
        flux_fd = flux_fd.max(err);
        let scale = 1.0 + norm2(&f).to_f64_lossy() + norm2(&b).to_f64_lossy();
        record(&mut slots[4], ModelInvariant::FluxDerivative, xf, err, FD_RTOL * scale);

        m.viscosity(x + h, &mut a_hi);
        m.viscosity(x - h, &mut a_lo);
        for (t, ((p, q), aj)) in tmp.iter_mut().zip(a_hi.iter().zip(&a_lo).zip(&a)) {
            *t = (*p - *q) / (h + h) - *aj;
        }
        let err = frobenius(&tmp).to_f64_lossy();
        visc_fd = visc_fd.max(err);
        let scale = 1.0 + frobenius(&big_a).to_f64_lossy() + a_norm;
        record(&mut slots[5], ModelInvariant::ViscosityDerivative, xf, err, FD_RTOL * scale);

        lip_f = lip_f.max(norm2(&b).to_f64_lossy());
        lip_a = lip_a.max(max_abs_eig(&a, n).to_f64_lossy());
        if let Some((px, pf, pa)) = &prev {
            let dx = x - *px;
            for (t, (p, q)) in tmp.iter_mut().zip(f.iter().zip(pf)) {
                *t = (*p - *q) / dx;
            }
            lip_f = lip_f.max(norm2(&tmp[..n]).to_f64_lossy());
            for (t, (p, q)) in tmp.iter_mut().zip(big_a.iter().zip(pa)) {
                *t = (*p - *q) / dx;
            }
            lip_a = lip_a.max(max_abs_eig(&tmp, n).to_f64_lossy());
        }
        prev = Some((x, f.clone(), big_a.clone()));
    }

    let declared_f = m.lip_f().to_f64_lossy();
    let declared_a = m.lip_a().to_f64_lossy();
    record(&mut slots[6], ModelInvariant::LipschitzF, f64::NAN, lip_f, declared_f * (1.0 + 1e-9) + 1e-12);
    record(&mut slots[7], ModelInvariant::LipschitzA, f64::NAN, lip_a, declared_a * (1.0 + 1e-9) + 1e-12);

    let violations = slots
        .into_iter()
        .flatten()
        .map(|w| ModelViolation { invariant: w.inv, xi: w.xi, value: w.value, tolerance: w.tol })
        .collect();
    ModelReport {
        name: m.name().to_string(),
        samples: xs.len(),
        min_eigenvalue: min_eig,
        min_eigenvalue_xi: min_eig_xi,
        factor_residual: factor_res,
        flux_fd_error: flux_fd,
        viscosity_fd_error: visc_fd,
        empirical_lip_f: lip_f,
        empirical_lip_a: lip_a,
        declared_lip_f: declared_f,
        declared_lip_a: declared_a,
        violations,
    }
}

/// `n` equispaced samples covering `[lo, hi]`, endpoints included.
pub fn uniform_samples<T: Scalar>(lo: T, hi: T, n: usize) -> Vec<T> {
    if n <= 1 {
        return vec![(lo + hi) * T::lit(0.5)];
    }
    let step = (hi - lo) / T::from_usize_lossy(n - 1);
    (0..n).map(|i| lo + step * T::from_usize_lossy(i)).collect()
}
