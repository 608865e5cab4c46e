//! Kinetic symbol `L(iτ, in, ξ) = i(τ + b(ξ)·n) + nᵀa(ξ)n`, its sublevel
//! sets, and the weighted functional
//!
//! ```text
//! ι(δ) = sup_{α, n} ∫ δ(X + δ) ϑ(ξ) / ((X + δ)² + δ^ν |b(ξ)·e + α|²) dξ
//! ```
//!
//! with `e = n/|n|`, `X = eᵀa(ξ)e` and `ϑ(ξ) = (1 + ξ²)⁻¹`. The integrand
//! never exceeds `ϑ`, so `ι ≤ π`.

use std::io::Write;

use num_complex::Complex;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::model::{ReducedModel, ScalarModel};
use crate::quadrature::gauss_kronrod;
use crate::scalar::Scalar;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum NondegError {
    #[error("invalid argument: {0}")]
    Argument(String),
    #[error("no lattice vector with {lo} <= |n| < {hi}")]
    EmptyShell { lo: f64, hi: f64 },
    #[error("quadrature did not converge on [{lo}, {hi}] (error estimate {err})")]
    Quadrature { lo: f64, hi: f64, err: f64 },
    #[error("fit needs {0}")]
    Fit(String),
}

/// Flux derivative `b` and diffusion `a` in the variables the symbol is
/// evaluated in (`R^N` for a [`ScalarModel`], `T^P` for a [`ReducedModel`]).
pub trait SymbolModel<T: Scalar>: Sync {
    fn symbol_dims(&self) -> usize;
    fn drift(&self, xi: T, out: &mut [T]);
    fn diffusion_matrix(&self, xi: T, out: &mut [T]);
    /// Upper bound of `|b(ξ)|`.
    fn drift_bound(&self) -> T;
}

impl<T: Scalar> SymbolModel<T> for ScalarModel<T> {
    fn symbol_dims(&self) -> usize {
        self.dim()
    }

    fn drift(&self, xi: T, out: &mut [T]) {
        self.jacobian(xi, out)
    }

    fn diffusion_matrix(&self, xi: T, out: &mut [T]) {
        self.diffusion(xi, out)
    }

    fn drift_bound(&self) -> T {
        self.lip_f()
    }
}

impl<T: Scalar> SymbolModel<T> for ReducedModel<T> {
    fn symbol_dims(&self) -> usize {
        self.rank()
    }

    fn drift(&self, xi: T, out: &mut [T]) {
        self.jacobian(xi, out)
    }

    fn diffusion_matrix(&self, xi: T, out: &mut [T]) {
        self.diffusion(xi, out)
    }

    fn drift_bound(&self) -> T {
        // |Λ b| ≤ ‖Λ‖_F |b|
        let fro = self.frequencies().generators().iter().flatten().map(|x| *x * *x).sum::<T>().sqrt();
        fro * self.model().lip_f()
    }
}

impl<T: Scalar, M: SymbolModel<T> + Send> SymbolModel<T> for &M {
    fn symbol_dims(&self) -> usize {
        (**self).symbol_dims()
    }

    fn drift(&self, xi: T, out: &mut [T]) {
        (**self).drift(xi, out)
    }

    fn diffusion_matrix(&self, xi: T, out: &mut [T]) {
        (**self).diffusion_matrix(xi, out)
    }

    fn drift_bound(&self) -> T {
        (**self).drift_bound()
    }
}

/// `L(iτ, in, ξ)`.
pub fn symbol<T: Scalar, M: SymbolModel<T> + ?Sized>(tau: T, n: &[i64], xi: T, model: &M) -> Complex<T> {
    let p = model.symbol_dims();
    assert_eq!(n.len(), p, "lattice vector has the wrong dimension");
    let mut b = vec![T::zero(); p];
    let mut a = vec![T::zero(); p * p];
    model.drift(xi, &mut b);
    model.diffusion_matrix(xi, &mut a);
    let nf: Vec<T> = n.iter().map(|k| T::from_i64(*k).unwrap()).collect();
    let im = tau + nf.iter().zip(&b).map(|(x, y)| *x * *y).sum::<T>();
    let mut re = T::zero();
    for j in 0..p {
        for l in 0..p {
            re += nf[j] * a[j * p + l] * nf[l];
        }
    }
    Complex::new(re, im)
}

fn norm_i(n: &[i64]) -> f64 {
    n.iter().map(|k| (*k * *k) as f64).sum::<f64>().sqrt()
}

fn gcd(mut a: i64, mut b: i64) -> i64 {
    a = a.abs();
    b = b.abs();
    while b != 0 {
        (a, b) = (b, a % b);
    }
    a
}

fn lattice_box(p: usize, r: i64) -> Vec<Vec<i64>> {
    let side = (2 * r + 1) as usize;
    let total = side.pow(p as u32);
    (0..total)
        .map(|mut idx| {
            (0..p)
                .map(|_| {
                    let k = (idx % side) as i64 - r;
                    idx /= side;
                    k
                })
                .collect::<Vec<i64>>()
        })
        .filter(|n| n.iter().any(|k| *k != 0))
        .collect()
}

/// Primitive lattice vectors with `|n|_∞ ≤ n_max`, both signs, so every
/// rational direction appears once per sign.
pub fn primitive_directions(p: usize, n_max: i64) -> Vec<Vec<i64>> {
    lattice_box(p, n_max).into_iter().filter(|n| n.iter().fold(0, |g, k| gcd(g, *k)) == 1).collect()
}

/// Lattice vectors in the dyadic shell `J ≤ |n| < 2J`.
pub fn dyadic_shell(p: usize, j_scale: f64) -> Vec<Vec<i64>> {
    let r = (2.0 * j_scale).ceil() as i64;
    lattice_box(p, r.max(1))
        .into_iter()
        .filter(|n| {
            let m = norm_i(n);
            m >= j_scale && m < 2.0 * j_scale
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct OmegaEstimate {
    /// Largest sampled measure of `{ξ ∈ supp : |L| ≤ δ}`.
    pub measure: f64,
    /// Width of one ξ sample (the measure is a multiple of it).
    pub resolution: f64,
    pub tau: f64,
    pub n: Vec<i64>,
}

/// Sup over `τ` and `n` in the dyadic shell of the measure of the
/// sublevel set `{ξ ∈ [lo, hi] : |L(iτ, in, ξ)| ≤ δ}`, from `samples`
/// midpoint samples in ξ. Candidate `τ` are `−b(ξ_s)·n` and `−b(ξ_s)·n ± δ`
/// at the sampled local extrema of `b·n`, plus `tau_grid` uniform values
/// covering its range.
pub fn omega_measure<T: Scalar, M: SymbolModel<T> + ?Sized>(
    j_scale: f64,
    delta: T,
    support: (T, T),
    model: &M,
    samples: usize,
    tau_grid: usize,
) -> Result<OmegaEstimate, NondegError> {
    if !(delta > T::zero()) {
        return Err(NondegError::Argument(format!("delta must be positive, got {delta}")));
    }
    let (lo, hi) = support;
    if !(hi > lo) || samples == 0 {
        return Err(NondegError::Argument("empty support or no samples".into()));
    }
    let shell = dyadic_shell(model.symbol_dims(), j_scale);
    if shell.is_empty() {
        return Err(NondegError::EmptyShell { lo: j_scale, hi: 2.0 * j_scale });
    }
    let p = model.symbol_dims();
    let width = (hi - lo) / T::from_usize_lossy(samples);
    let xs: Vec<T> = (0..samples).map(|i| lo + width * (T::from_usize_lossy(i) + T::lit(0.5))).collect();
    let mut b = vec![T::zero(); p];
    let mut a = vec![T::zero(); p * p];
    let mut drift = vec![Vec::with_capacity(samples); shell.len()];
    let mut diss = vec![Vec::with_capacity(samples); shell.len()];
    for &x in &xs {
        model.drift(x, &mut b);
        model.diffusion_matrix(x, &mut a);
        for (s, n) in shell.iter().enumerate() {
            let nf: Vec<T> = n.iter().map(|k| T::from_i64(*k).unwrap()).collect();
            drift[s].push(nf.iter().zip(&b).map(|(u, v)| *u * *v).sum::<T>());
            let mut re = T::zero();
            for j in 0..p {
                for l in 0..p {
                    re += nf[j] * a[j * p + l] * nf[l];
                }
            }
            diss[s].push(re);
        }
    }
    let best = (0..shell.len())
        .into_par_iter()
        .map(|s| {
            let (dmin, dmax) = drift[s].iter().fold((T::infinity(), T::neg_infinity()), |(l, h), v| (l.min(*v), h.max(*v)));
            let ds = &drift[s];
            let shrink = T::one() - T::lit(1e-9);
            // stationary values of b·n carry the largest sublevel sets
            let mut taus: Vec<T> = (1..ds.len().saturating_sub(1))
                .filter(|&i| (ds[i - 1] <= ds[i] && ds[i + 1] <= ds[i]) || (ds[i - 1] >= ds[i] && ds[i + 1] >= ds[i]))
                .map(|i| ds[i])
                .chain([dmin, dmax])
                // a band of width 2δ hugging the extremum, pulled in slightly so
                // the extremum itself survives rounding
                .flat_map(|e| [-e, -e + delta * shrink, -e - delta * shrink])
                .collect();
            for g in 0..tau_grid {
                let t = if tau_grid > 1 { T::from_usize_lossy(g) / T::from_usize_lossy(tau_grid - 1) } else { T::lit(0.5) };
                taus.push(-(dmin - delta + (dmax - dmin + delta + delta) * t));
            }
            let mut top = (0usize, T::zero());
            taus.sort_by(|a, b| a.partial_cmp(b).unwrap());
            taus.dedup();
            for &tau in &taus {
                let count = drift[s]
                    .iter()
                    .zip(&diss[s])
                    .filter(|(d, r)| Complex::new(**r, tau + **d).norm() <= delta)
                    .count();
                if count > top.0 {
                    top = (count, tau);
                }
            }
            (top.0, top.1, s)
        })
        .collect::<Vec<_>>()
        .into_iter()
        .fold((0usize, T::zero(), 0usize), |acc, x| if x.0 > acc.0 { x } else { acc });
    Ok(OmegaEstimate {
        measure: (width * T::from_usize_lossy(best.0)).to_f64_lossy(),
        resolution: width.to_f64_lossy(),
        tau: best.1.to_f64_lossy(),
        n: shell[best.2].clone(),
    })
}

/// Evaluation settings for [`iota_theta`].
#[derive(Debug, Clone)]
pub struct SymbolProbe<M> {
    pub model: M,
    pub nu: f64,
    /// ξ window `[−Ξ, Ξ]`; the weight mass beyond it is added as a bound.
    pub xi_window: f64,
    /// Inner window integrated in ξ; the rest of `[−Ξ, Ξ]` is integrated in
    /// `θ = atan ξ`, where `ϑ dξ = dθ`.
    pub xi_core: f64,
    /// Uniform α values on `±sup|b|·(1 + margin)` (an odd count includes 0).
    pub alpha_points: usize,
    pub alpha_margin: f64,
    /// ξ samples scanned for the critical values `−b(ξ)·e`.
    pub critical_samples: usize,
    /// `|n|_∞` bound of the primitive lattice directions.
    pub n_max: i64,
    /// Explicit directions replacing the primitive lattice set.
    pub directions: Option<Vec<Vec<i64>>>,
    pub rel_tol: f64,
    /// Initial ξ panels per unit length in the core window.
    pub pieces_per_unit: f64,
    /// Initial θ panels on each outer interval.
    pub outer_pieces: usize,
    pub max_intervals: usize,
}

impl<M> SymbolProbe<M> {
    pub fn new(model: M) -> Self {
        Self {
            model,
            nu: 1.5,
            xi_window: 1e3,
            xi_core: 50.0,
            alpha_points: 201,
            alpha_margin: 0.05,
            critical_samples: 4096,
            n_max: 32,
            directions: None,
            rel_tol: 1e-8,
            pieces_per_unit: 4.0,
            outer_pieces: 256,
            max_intervals: 200_000,
        }
    }

    /// `∫_{|ξ| > Ξ} ϑ = π − 2 atan Ξ`.
    pub fn tail_bound(&self) -> f64 {
        std::f64::consts::PI - 2.0 * self.xi_window.atan()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IotaValue {
    pub delta: f64,
    pub iota: f64,
    pub argmax_alpha: f64,
    pub argmax_n: Vec<i64>,
    /// Number of `(α, n)` pairs searched.
    pub candidates: usize,
}

impl<M> SymbolProbe<M> {
    fn check(&self) -> Result<(), NondegError> {
        if !(self.nu > 1.0 && self.nu < 2.0) {
            return Err(NondegError::Argument(format!("nu must lie in (1, 2), got {}", self.nu)));
        }
        if !(self.xi_core > 0.0 && self.xi_window >= self.xi_core && self.xi_window.is_finite()) {
            return Err(NondegError::Argument(format!(
                "need 0 < core ({}) <= window ({}) < inf",
                self.xi_core, self.xi_window
            )));
        }
        if self.alpha_points == 0 || self.critical_samples < 2 {
            return Err(NondegError::Argument("alpha grid and critical scan must be non-empty".into()));
        }
        Ok(())
    }
}

/// Directions searched by [`iota_theta`].
pub fn direction_set<T: Scalar, M: SymbolModel<T>>(probe: &SymbolProbe<M>) -> Vec<Vec<i64>> {
    match &probe.directions {
        Some(d) => d.clone(),
        None => primitive_directions(probe.model.symbol_dims(), probe.n_max),
    }
}

/// `b(ξ)·e` sampled over the core window, for the critical α values.
fn critical_alphas<T: Scalar, M: SymbolModel<T>>(probe: &SymbolProbe<M>, e: &[T]) -> Vec<T> {
    let p = probe.model.symbol_dims();
    let mut b = vec![T::zero(); p];
    let n = probe.critical_samples;
    let vals: Vec<T> = (0..n)
        .map(|i| {
            let x = T::lit(-probe.xi_core + 2.0 * probe.xi_core * i as f64 / (n - 1) as f64);
            probe.model.drift(x, &mut b);
            e.iter().zip(&b).map(|(u, v)| *u * *v).sum::<T>()
        })
        .collect();
    let mut out = Vec::new();
    let (mut lo, mut hi) = (T::infinity(), T::neg_infinity());
    for (i, v) in vals.iter().enumerate() {
        lo = lo.min(*v);
        hi = hi.max(*v);
        let interior = i > 0 && i + 1 < n;
        if interior && ((vals[i - 1] <= *v && vals[i + 1] <= *v) || (vals[i - 1] >= *v && vals[i + 1] >= *v)) {
            out.push(-*v);
        }
    }
    out.push(-lo);
    out.push(-hi);
    out.sort_by(|a, b| a.partial_cmp(b).unwrap());
    out.dedup();
    out
}

fn alpha_candidates<T: Scalar, M: SymbolModel<T>>(probe: &SymbolProbe<M>, e: &[T]) -> Vec<T> {
    let bound = probe.model.drift_bound().to_f64_lossy() * (1.0 + probe.alpha_margin);
    let k = probe.alpha_points;
    let mut out: Vec<T> = (0..k)
        .map(|i| if k == 1 { T::zero() } else { T::lit(-bound + 2.0 * bound * i as f64 / (k - 1) as f64) })
        .collect();
    out.push(T::zero());
    out.extend(critical_alphas(probe, e));
    out
}

fn window_integral<T: Scalar, M: SymbolModel<T>>(probe: &SymbolProbe<M>, delta: T, alpha: T, e: &[T]) -> Result<T, NondegError> {
    let p = probe.model.symbol_dims();
    let dnu = delta.powf(T::lit(probe.nu));
    let integrand = |xi: T| {
        let mut b = [T::zero(); 3];
        let mut a = [T::zero(); 9];
        let (b, a) = if p <= 3 {
            (&mut b[..p], &mut a[..p * p])
        } else {
            unreachable!("symbol dimension above 3")
        };
        probe.model.drift(xi, b);
        probe.model.diffusion_matrix(xi, a);
        let mut x = T::zero();
        for j in 0..p {
            for l in 0..p {
                x += e[j] * a[j * p + l] * e[l];
            }
        }
        let y = e.iter().zip(b.iter()).map(|(u, v)| *u * *v).sum::<T>() + alpha;
        let xd = x + delta;
        delta * xd / (xd * xd + dnu * y * y)
    };
    let rel = T::lit(probe.rel_tol);
    let abs = T::lit(1e-14);
    let fail = |f: crate::quadrature::QuadratureFailure| NondegError::Quadrature { lo: f.lo, hi: f.hi, err: f.estimated_error };
    let core = T::lit(probe.xi_core);
    let pieces = ((2.0 * probe.xi_core * probe.pieces_per_unit).ceil() as usize).max(1);
    let in_xi = |xi: T| integrand(xi) / (T::one() + xi * xi);
    let mut total = gauss_kronrod(&in_xi, -core, core, rel, abs, pieces, probe.max_intervals).map_err(fail)?;
    if probe.xi_window > probe.xi_core {
        let t0 = T::lit(probe.xi_core.atan());
        let t1 = T::lit(probe.xi_window.atan());
        let in_theta = |th: T| integrand(th.tan());
        total += gauss_kronrod(&in_theta, t0, t1, rel, abs, probe.outer_pieces, probe.max_intervals).map_err(fail)?;
        let neg = |th: T| integrand(-th.tan());
        total += gauss_kronrod(&neg, t0, t1, rel, abs, probe.outer_pieces, probe.max_intervals).map_err(fail)?;
    }
    Ok(total)
}

/// `ι(δ)`: the largest window integral over the searched `(α, n)` pairs,
/// plus the weight mass outside the window.
pub fn iota_theta<T: Scalar, M: SymbolModel<T>>(delta: T, probe: &SymbolProbe<M>) -> Result<IotaValue, NondegError> {
    if !(delta > T::zero()) || !delta.is_finite() {
        return Err(NondegError::Argument(format!("delta must be positive, got {delta}")));
    }
    probe.check()?;
    let p = probe.model.symbol_dims();
    if !(1..=3).contains(&p) {
        return Err(NondegError::Argument(format!("symbol dimension {p} outside 1..=3")));
    }
    let dirs = direction_set(probe);
    if dirs.is_empty() || dirs.iter().any(|n| n.len() != p || n.iter().all(|k| *k == 0)) {
        return Err(NondegError::Argument("direction set is empty or malformed".into()));
    }
    let tasks: Vec<(usize, T)> = dirs
        .iter()
        .enumerate()
        .flat_map(|(d, n)| {
            let m = norm_i(n);
            let e: Vec<T> = n.iter().map(|k| T::lit(*k as f64 / m)).collect();
            alpha_candidates(probe, &e).into_iter().map(move |a| (d, a))
        })
        .collect();
    let values: Vec<Result<T, NondegError>> = tasks
        .par_iter()
        .map(|&(d, alpha)| {
            let n = &dirs[d];
            let m = norm_i(n);
            let e: Vec<T> = n.iter().map(|k| T::lit(*k as f64 / m)).collect();
            window_integral(probe, delta, alpha, &e)
        })
        .collect();
    let mut best: Option<(T, usize)> = None;
    for (i, v) in values.into_iter().enumerate() {
        let v = v?;
        // strict comparison keeps the first maximiser in task order
        if best.is_none_or(|(b, _)| v > b) {
            best = Some((v, i));
        }
    }
    let (val, idx) = best.expect("non-empty task list");
    let (d, alpha) = tasks[idx];
    Ok(IotaValue {
        delta: delta.to_f64_lossy(),
        iota: val.to_f64_lossy() + probe.tail_bound(),
        argmax_alpha: alpha.to_f64_lossy(),
        argmax_n: dirs[d].clone(),
        candidates: tasks.len(),
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct KappaFit {
    pub c1: f64,
    pub kappa: f64,
    pub r2: f64,
}

impl KappaFit {
    /// `0 < κ < 1`.
    pub fn in_range(&self) -> bool {
        self.kappa > 0.0 && self.kappa < 1.0
    }
}

/// Least-squares fit of `log ι = log c₁ + κ log δ`.
pub fn fit_kappa(deltas: &[f64], iotas: &[f64]) -> Result<KappaFit, NondegError> {
    if deltas.len() != iotas.len() {
        return Err(NondegError::Fit(format!("{} deltas for {} values", deltas.len(), iotas.len())));
    }
    if deltas.len() < 4 {
        return Err(NondegError::Fit(format!("at least 4 points, got {}", deltas.len())));
    }
    if deltas.iter().chain(iotas).any(|v| !(*v > 0.0) || !v.is_finite()) {
        return Err(NondegError::Fit("positive finite deltas and values".into()));
    }
    let (lo, hi) = deltas.iter().fold((f64::INFINITY, 0.0f64), |(l, h), d| (l.min(*d), h.max(*d)));
    if (hi / lo).log10() < 2.0 - 1e-12 {
        return Err(NondegError::Fit(format!("a ladder spanning 2 decades, got [{lo}, {hi}]")));
    }
    let x: Vec<f64> = deltas.iter().map(|d| d.ln()).collect();
    let y: Vec<f64> = iotas.iter().map(|v| v.ln()).collect();
    let n = x.len() as f64;
    let mx = x.iter().sum::<f64>() / n;
    let my = y.iter().sum::<f64>() / n;
    let sxx: f64 = x.iter().map(|v| (v - mx) * (v - mx)).sum();
    let sxy: f64 = x.iter().zip(&y).map(|(a, b)| (a - mx) * (b - my)).sum();
    let syy: f64 = y.iter().map(|v| (v - my) * (v - my)).sum();
    let kappa = sxy / sxx;
    let intercept = my - kappa * mx;
    let sse: f64 = x.iter().zip(&y).map(|(a, b)| (b - intercept - kappa * a).powi(2)).sum();
    // flat data are fitted exactly by κ = 0
    let r2 = if syy <= 1e-300 { 1.0 } else { 1.0 - sse / syy };
    Ok(KappaFit { c1: intercept.exp(), kappa, r2 })
}

/// `ι` over a δ ladder with its power-law fit.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct KappaReport {
    pub rows: Vec<IotaValue>,
    pub fit: Option<KappaFit>,
    pub fit_error: Option<String>,
    /// Whether `ι` is non-decreasing along the ladder; a drop points at an
    /// under-resolved sup search.
    pub monotone: bool,
    pub nu: f64,
    pub xi_window: f64,
    pub tail_bound: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct KappaSummary {
    pub c1: Option<f64>,
    pub kappa: Option<f64>,
    pub r2: Option<f64>,
    pub pass: bool,
    pub monotone: bool,
    pub nu: f64,
    pub xi_window: f64,
    pub tail_bound: f64,
    pub fit_error: Option<String>,
}

impl KappaReport {
    pub fn summary(&self) -> KappaSummary {
        KappaSummary {
            c1: self.fit.map(|f| f.c1),
            kappa: self.fit.map(|f| f.kappa),
            r2: self.fit.map(|f| f.r2),
            pass: self.fit.is_some_and(|f| f.in_range()),
            monotone: self.monotone,
            nu: self.nu,
            xi_window: self.xi_window,
            tail_bound: self.tail_bound,
            fit_error: self.fit_error.clone(),
        }
    }

    /// Columns `delta, iota, argmax_alpha, argmax_n` (`n` joined by `;`).
    pub fn write_csv<W: Write>(&self, w: W) -> csv::Result<()> {
        let mut wr = csv::Writer::from_writer(w);
        wr.write_record(["delta", "iota", "argmax_alpha", "argmax_n"])?;
        for r in &self.rows {
            let n = r.argmax_n.iter().map(|k| k.to_string()).collect::<Vec<_>>().join(";");
            wr.write_record([r.delta.to_string(), r.iota.to_string(), r.argmax_alpha.to_string(), n])?;
        }
        wr.flush()?;
        Ok(())
    }
}

/// Evaluates `ι` on every ladder value and fits the exponent.
pub fn kappa_study<T: Scalar, M: SymbolModel<T>>(
    deltas: &[T],
    probe: &SymbolProbe<M>,
) -> Result<KappaReport, NondegError> {
    let rows = deltas.iter().map(|d| iota_theta(*d, probe)).collect::<Result<Vec<_>, _>>()?;
    let mut sorted = rows.clone();
    sorted.sort_by(|a, b| a.delta.partial_cmp(&b.delta).unwrap());
    let monotone = sorted.windows(2).all(|w| w[1].iota >= w[0].iota * (1.0 - 1e-9));
    let ds: Vec<f64> = rows.iter().map(|r| r.delta).collect();
    let vs: Vec<f64> = rows.iter().map(|r| r.iota).collect();
    let (fit, fit_error) = match fit_kappa(&ds, &vs) {
        Ok(f) => (Some(f), None),
        Err(e) => (None, Some(e.to_string())),
    };
    Ok(KappaReport { rows, fit, fit_error, monotone, nu: probe.nu, xi_window: probe.xi_window, tail_bound: probe.tail_bound() })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn directions_are_primitive_and_signed() {
        let d = primitive_directions(2, 2);
        assert!(d.contains(&vec![1, 2]) && d.contains(&vec![-1, -2]));
        assert!(!d.contains(&vec![2, 2]) && !d.contains(&vec![0, 2]));
        assert_eq!(primitive_directions(1, 32), vec![vec![-1], vec![1]]);
    }

    #[test]
    fn shell_bounds() {
        let s = dyadic_shell(2, 2.0);
        assert!(s.iter().all(|n| (2.0..4.0).contains(&norm_i(n))));
        assert!(s.contains(&vec![2, 0]) && !s.contains(&vec![1, 1]) && !s.contains(&vec![4, 0]));
    }
}
