//! Discrete residual of the entropy inequality in `w = v − J`.
//!
//! For the entropy `η = η_ε(·, c)` and `s ↦ η″(s)` supported in
//! `[c − ε, c + ε]`, smooth solutions satisfy
//!
//! ```text
//! ∂_t η(w) + Σ_j ∂_j q_j − Σ_jl ∂_j∂_l r_jl + Σ_j ∂_jJ · B_j
//!     − Σ_j ∂_j(Σ_l ∂_lJ · R_jl) + η″(w) ∇wᵀ ã(v) ∇v = 0
//! ```
//!
//! with `q_j = η′(w) f̃_j(v) − ∫_c^w η″(s) f̃_j(s + J) ds`,
//! `r_jl = η′(w) Ã_jl(v) − ∫_c^w η″(s) Ã_jl(s + J) ds`,
//! `B_j = ∫_c^w η″(s) b̃_j(s + J) ds` and `R_jl = ∫_c^w η″(s) ã_jl(s + J) ds`.
//! Entropy solutions make the left side non-positive; its positive part
//! on the grid measures the violation.

use super::{SolverError, Trajectory};
use crate::field::TorusField;
use crate::model::{NoiseModel, ReducedModel};
use crate::noise::{NoiseGrid, WienerPath};
use crate::quadrature::gauss_legendre8_rule;
use crate::scalar::Scalar;

/// Panels of the 8-point Gauss rule over `[c, w]`.
const PANELS: usize = 4;

/// `C¹` sign: `sin(πξ / 2ε)` on `|ξ| ≤ ε`, `±1` outside.
#[inline]
pub fn sgn_eps<T: Scalar>(xi: T, eps: T) -> T {
    if xi <= -eps {
        -T::one()
    } else if xi >= eps {
        T::one()
    } else {
        (T::FRAC_PI_2() * xi / eps).sin()
    }
}

/// `η_ε(w, c) = ∫_c^w sgn_ε(ξ − c) dξ`.
#[inline]
pub fn eta<T: Scalar>(w: T, c: T, eps: T) -> T {
    let x = (w - c).abs();
    let k = T::lit(2.0) * eps / T::PI();
    if x >= eps {
        k + x - eps
    } else {
        // 1 − cos θ written as 2 sin²(θ/2) to avoid cancellation
        let s = (T::FRAC_PI_4() * x / eps).sin();
        T::lit(2.0) * k * s * s
    }
}

#[inline]
pub fn eta_prime<T: Scalar>(w: T, c: T, eps: T) -> T {
    sgn_eps(w - c, eps)
}

#[inline]
pub fn eta_second<T: Scalar>(w: T, c: T, eps: T) -> T {
    let x = w - c;
    if x.abs() >= eps {
        T::zero()
    } else {
        T::FRAC_PI_2() / eps * (T::FRAC_PI_2() * x / eps).cos()
    }
}

/// Cell quantities entering the residual.
struct CellTerms<T> {
    /// `q_j`, `[j][cell]`.
    q: Vec<Vec<T>>,
    /// `r_jl` for `l ≥ j`, `[j·P + l][cell]`.
    r: Vec<Vec<T>>,
    /// `B_j`, only with noise.
    b: Vec<Vec<T>>,
    /// `R_jl` (full), only with noise.
    rr: Vec<Vec<T>>,
}

#[allow(clippy::too_many_arguments)]
fn cell_terms<T: Scalar>(rm: &ReducedModel<T>, v: &[T], w: &[T], c: T, eps: T, noisy: bool) -> CellTerms<T> {
    let p = rm.rank();
    let n = v.len();
    let mut t = CellTerms {
        q: vec![vec![T::zero(); n]; p],
        r: vec![vec![T::zero(); n]; p * p],
        b: if noisy { vec![vec![T::zero(); n]; p] } else { Vec::new() },
        rr: if noisy { vec![vec![T::zero(); n]; p * p] } else { Vec::new() },
    };
    let pairs: Vec<(usize, usize)> = (0..p)
        .flat_map(|j| (j..p).map(move |l| (j, l)))
        .filter(|(j, l)| j == l || !rm.is_diagonal())
        .collect();
    let mut jac = vec![T::zero(); p];
    let mut dif = vec![T::zero(); p * p];
    let mut int_f = vec![T::zero(); p];
    let mut int_a = vec![T::zero(); p * p];
    let mut int_b = vec![T::zero(); p];
    let mut int_d = vec![T::zero(); p * p];
    for i in 0..n {
        let (vi, wi) = (v[i], w[i]);
        let shift = vi - wi;
        let upper = wi.max(c - eps).min(c + eps);
        int_f.iter_mut().chain(int_a.iter_mut()).chain(int_b.iter_mut()).chain(int_d.iter_mut()).for_each(|x| *x = T::zero());
        if upper != c {
            let width = (upper - c) / T::from_usize_lossy(PANELS);
            for k in 0..PANELS {
                let a = c + width * T::from_usize_lossy(k);
                for (s, wt) in gauss_legendre8_rule(a, a + width) {
                    let g = wt * eta_second(s, c, eps);
                    if g == T::zero() {
                        continue;
                    }
                    let at = rm.locate(s + shift);
                    for j in 0..p {
                        int_f[j] += g * rm.flux_at(j, at);
                    }
                    for &(j, l) in &pairs {
                        int_a[j * p + l] += g * rm.integrated_at(j, l, at);
                    }
                    if noisy {
                        rm.jacobian(s + shift, &mut jac);
                        rm.diffusion(s + shift, &mut dif);
                        for j in 0..p {
                            int_b[j] += g * jac[j];
                        }
                        for (d, x) in int_d.iter_mut().zip(&dif) {
                            *d += g * *x;
                        }
                    }
                }
            }
        }
        let ep = eta_prime(wi, c, eps);
        let at = rm.locate(vi);
        for j in 0..p {
            t.q[j][i] = ep * rm.flux_at(j, at) - int_f[j];
        }
        for &(j, l) in &pairs {
            t.r[j * p + l][i] = ep * rm.integrated_at(j, l, at) - int_a[j * p + l];
        }
        if noisy {
            for j in 0..p {
                t.b[j][i] = int_b[j];
            }
            for (k, d) in int_d.iter().enumerate() {
                t.rr[k][i] = *d;
            }
        }
    }
    t
}

/// Per-cell residual between levels `n` and `n + 1` (spatial terms at
/// level `n`). `j0`, `j1` are ignored unless `noisy`.
#[allow(clippy::too_many_arguments)]
pub fn step_residual<T: Scalar>(
    rm: &ReducedModel<T>,
    v0: &TorusField<T>,
    j0: &TorusField<T>,
    v1: &TorusField<T>,
    j1: &TorusField<T>,
    dt: T,
    c: T,
    eps: T,
    noisy: bool,
) -> Vec<T> {
    let p = rm.rank();
    let n = v0.len();
    let inv_dy = T::from_usize_lossy(v0.cells_per_axis());
    let half = T::lit(0.5);
    let w_of = |v: &TorusField<T>, j: &TorusField<T>| -> Vec<T> {
        if noisy {
            v.values().iter().zip(j.values()).map(|(a, b)| *a - *b).collect()
        } else {
            v.values().to_vec()
        }
    };
    let w0 = w_of(v0, j0);
    let w1 = w_of(v1, j1);
    let terms = cell_terms(rm, v0.values(), &w0, c, eps, noisy);
    let nb = |i: usize, axis: usize, off: isize| v0.shifted(i, axis, off);
    let centered = |f: &[T], i: usize, axis: usize| (f[nb(i, axis, 1)] - f[nb(i, axis, -1)]) * half * inv_dy;

    // S_j = Σ_l ∂_l J · R_jl
    let s: Vec<Vec<T>> = if noisy {
        let jv = j0.values();
        (0..p)
            .map(|j| {
                (0..n)
                    .map(|i| (0..p).map(|l| centered(jv, i, l) * terms.rr[j * p + l][i]).sum())
                    .collect()
            })
            .collect()
    } else {
        Vec::new()
    };

    let mut dif = vec![T::zero(); p * p];
    let mut gw = vec![T::zero(); p];
    let mut gv = vec![T::zero(); p];
    (0..n)
        .map(|i| {
            let mut res = (eta(w1[i], c, eps) - eta(w0[i], c, eps)) / dt;
            for j in 0..p {
                res += centered(&terms.q[j], i, j);
                let r = &terms.r[j * p + j];
                let second = (r[nb(i, j, 1)] - r[i]) - (r[i] - r[nb(i, j, -1)]);
                res -= second * inv_dy * inv_dy;
            }
            if !rm.is_diagonal() {
                for j in 0..p {
                    for l in (j + 1)..p {
                        let r = &terms.r[j * p + l];
                        let (jm, jp) = (nb(i, j, -1), nb(i, j, 1));
                        let cross = (r[v0.shifted(jp, l, 1)] - r[v0.shifted(jp, l, -1)])
                            - (r[v0.shifted(jm, l, 1)] - r[v0.shifted(jm, l, -1)]);
                        res -= half * cross * inv_dy * inv_dy;
                    }
                }
            }
            if noisy {
                let jv = j0.values();
                for j in 0..p {
                    res += centered(jv, i, j) * terms.b[j][i];
                    res -= centered(&s[j], i, j);
                }
            }
            let e2 = eta_second(w0[i], c, eps);
            if e2 != T::zero() {
                for j in 0..p {
                    gw[j] = centered(&w0, i, j);
                    gv[j] = centered(v0.values(), i, j);
                }
                rm.diffusion(v0.values()[i], &mut dif);
                let mut quad = T::zero();
                for j in 0..p {
                    for l in 0..p {
                        quad += gw[j] * dif[j * p + l] * gv[l];
                    }
                }
                res += e2 * quad;
            }
            res
        })
        .collect()
}

/// Largest positive residual per macro step of a trajectory run with
/// `retain_states`.
pub fn entropy_residual<T: Scalar>(
    traj: &Trajectory<T>,
    rm: &ReducedModel<T>,
    nm: &NoiseModel<T>,
    path: Option<&WienerPath<T>>,
    c: T,
    eps: T,
) -> Result<Vec<T>, SolverError> {
    if !(eps > T::zero()) {
        return Err(SolverError::Config(format!("entropy smoothing must be positive, got {eps}")));
    }
    let steps = traj.diagnostics.len();
    if traj.states.len() != steps + 1 {
        return Err(SolverError::Config(format!(
            "trajectory retains {} states for {} steps; run with retain_states",
            traj.states.len(),
            steps
        )));
    }
    let noisy = !nm.is_empty();
    let grid = NoiseGrid::new(nm, traj.cells);
    let mut betas = vec![T::zero(); nm.len()];
    let mut j0 = TorusField::zeros(traj.dims, traj.cells);
    let mut j1 = j0.clone();
    let path = if noisy {
        let p = path.ok_or_else(|| SolverError::Path("noise model has modes but no path was given".into()))?;
        if p.n_modes() != nm.len() || p.n_steps() < steps {
            return Err(SolverError::Path(format!(
                "path has {} modes and {} steps; need {} and {steps}",
                p.n_modes(),
                p.n_steps(),
                nm.len()
            )));
        }
        Some(p)
    } else {
        None
    };
    let mut out = Vec::with_capacity(steps);
    for n in 0..steps {
        if let Some(p) = path {
            for (k, b) in betas.iter_mut().enumerate() {
                *b += p.increment(k, n);
            }
            grid.combine(&betas, true, &mut j1);
        }
        let v0 = &traj.states[n].1;
        let v1 = &traj.states[n + 1].1;
        let r = step_residual(rm, v0, &j0, v1, &j1, traj.macro_dt, c, eps, noisy);
        out.push(r.into_iter().fold(T::zero(), |m, x| m.max(x)));
        std::mem::swap(&mut j0, &mut j1);
    }
    Ok(out)
}
