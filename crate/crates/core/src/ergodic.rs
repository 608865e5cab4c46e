//! Long-time statistics: time averages of observables, coupled runs on a
//! shared noise path, agreement tests across initial data and time lags,
//! and tightness of a spectral Sobolev surrogate.

use std::io::Write;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::field::TorusField;
use crate::fourier::FourierPlan;
use crate::model::{NoiseModel, ReducedModel};
use crate::noise::{sample_path, WienerPath};
use crate::scalar::Scalar;
use crate::solver::{Solver, SolverConfig, SolverError, Trajectory};

/// Number of batches behind every batch-means standard error.
pub const BATCHES: usize = 20;

/// Default burn-in as a fraction of the horizon.
pub const DEFAULT_BURN_IN: f64 = 0.2;

/// Allowed growth of the (cell-averaged) coupling distance per step.
pub const COUPLING_TOL: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum ErgodicError {
    #[error(transparent)]
    Solver(#[from] SolverError),
    #[error("{got} samples after burn-in; at least {need} are needed for batching")]
    TooFewSamples { got: usize, need: usize },
    #[error("effective sample size {n_eff} below {need}")]
    SampleSize { n_eff: f64, need: f64 },
    #[error("configuration: {0}")]
    Config(String),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Functional {
    Mean,
    L1,
    L2,
    Linf,
    /// `|v̂(k)|`.
    FourierAbs { k: Vec<i64> },
    /// `Σ_{k≠0} |k|^s |v̂(k)|^q`.
    Sobolev { s: f64, q: f64 },
}

impl Functional {
    pub fn name(&self) -> String {
        match self {
            Functional::Mean => "mean".into(),
            Functional::L1 => "l1".into(),
            Functional::L2 => "l2".into(),
            Functional::Linf => "linf".into(),
            Functional::FourierAbs { k } => {
                format!("fourier_abs[{}]", k.iter().map(|x| x.to_string()).collect::<Vec<_>>().join(","))
            }
            Functional::Sobolev { s, q } => format!("sobolev[s={s},q={q}]"),
        }
    }

    fn spectral(&self) -> bool {
        matches!(self, Functional::FourierAbs { .. } | Functional::Sobolev { .. })
    }
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct FunctionalSet {
    pub functionals: Vec<Functional>,
}

impl FunctionalSet {
    /// Mean, the three norms, `|v̂|` on the first `modes` lattice modes and
    /// the `(s, q)` Sobolev surrogate.
    pub fn standard(dims: usize, modes: usize, s: f64, q: f64) -> Self {
        let mut functionals = vec![Functional::Mean, Functional::L1, Functional::L2, Functional::Linf];
        functionals.extend(first_modes(dims, modes).into_iter().map(|k| Functional::FourierAbs { k }));
        functionals.push(Functional::Sobolev { s, q });
        Self { functionals }
    }

    pub fn names(&self) -> Vec<String> {
        self.functionals.iter().map(Functional::name).collect()
    }

    pub fn len(&self) -> usize {
        self.functionals.len()
    }

    pub fn is_empty(&self) -> bool {
        self.functionals.is_empty()
    }
}

/// Nonzero lattice modes ordered by `|k|`, then lexicographically, keeping
/// one representative of each `±k` pair (first nonzero entry positive).
pub fn first_modes(dims: usize, count: usize) -> Vec<Vec<i64>> {
    if count == 0 || dims == 0 {
        return Vec::new();
    }
    let mut r = 1i64;
    loop {
        let side = (2 * r + 1) as usize;
        let mut all: Vec<Vec<i64>> = (0..side.pow(dims as u32))
            .map(|mut idx| {
                (0..dims)
                    .map(|_| {
                        let k = (idx % side) as i64 - r;
                        idx /= side;
                        k
                    })
                    .collect::<Vec<i64>>()
            })
            .filter(|k| k.iter().find(|x| **x != 0).is_some_and(|x| *x > 0))
            .collect();
        all.sort_by(|a, b| {
            let na: i64 = a.iter().map(|x| x * x).sum();
            let nb: i64 = b.iter().map(|x| x * x).sum();
            na.cmp(&nb).then_with(|| a.cmp(b))
        });
        // every mode with |k| ≤ r is inside the box
        let within = all.iter().filter(|k| k.iter().map(|x| x * x).sum::<i64>() <= r * r).count();
        if within >= count {
            all.truncate(count);
            return all;
        }
        r *= 2;
    }
}

/// Evaluates a [`FunctionalSet`] on fields of one grid.
#[derive(Debug)]
pub struct FunctionalEvaluator<T: Scalar> {
    set: FunctionalSet,
    plan: Option<FourierPlan<T>>,
    dims: usize,
    cells: usize,
}

impl<T: Scalar> FunctionalEvaluator<T> {
    pub fn new(set: FunctionalSet, dims: usize, cells: usize) -> Self {
        let plan = set.functionals.iter().any(Functional::spectral).then(|| FourierPlan::new(dims, cells));
        Self { set, plan, dims, cells }
    }

    pub fn set(&self) -> &FunctionalSet {
        &self.set
    }

    pub fn evaluate(&self, v: &TorusField<T>) -> Vec<f64> {
        assert!(v.dims() == self.dims && v.cells_per_axis() == self.cells, "field grid differs from the evaluator");
        let coeffs = self.plan.as_ref().map(|p| p.forward(v));
        self.set
            .functionals
            .iter()
            .map(|f| match f {
                Functional::Mean => v.mean().to_f64_lossy(),
                Functional::L1 => v.l1().to_f64_lossy(),
                Functional::L2 => v.l2().to_f64_lossy(),
                Functional::Linf => v.linf().to_f64_lossy(),
                Functional::FourierAbs { k } => {
                    let c = coeffs.as_ref().expect("plan present");
                    match mode_index(k, self.dims, self.cells) {
                        Some(i) => c[i].norm().to_f64_lossy(),
                        None => 0.0,
                    }
                }
                Functional::Sobolev { s, q } => {
                    let c = coeffs.as_ref().expect("plan present");
                    sobolev_surrogate(c, self.dims, self.cells, *s, *q)
                }
            })
            .collect()
    }
}

/// Transform index of mode `k`, or `None` if the grid does not resolve it.
pub fn mode_index(k: &[i64], dims: usize, cells: usize) -> Option<usize> {
    if k.len() != dims {
        return None;
    }
    let m = cells as i64;
    let mut idx = 0usize;
    for &kj in k {
        if 2 * kj.abs() > m {
            return None;
        }
        idx = idx * cells + kj.rem_euclid(m) as usize;
    }
    Some(idx)
}

/// `Σ_{k≠0} |k|^s |c_k|^q` over normalized transform coefficients.
pub fn sobolev_surrogate<T: Scalar>(coeffs: &[num_complex::Complex<T>], dims: usize, cells: usize, s: f64, q: f64) -> f64 {
    coeffs
        .iter()
        .enumerate()
        .skip(1)
        .map(|(i, c)| {
            let k2: i64 = crate::fourier::signed_frequency(i, dims, cells).iter().map(|x| x * x).sum();
            (k2 as f64).powf(0.5 * s) * c.norm().to_f64_lossy().powf(q)
        })
        .sum()
}

/// Observables sampled along one trajectory.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct FunctionalSeries {
    pub names: Vec<String>,
    pub times: Vec<f64>,
    /// `values[i][f]`: functional `f` at `times[i]`.
    pub values: Vec<Vec<f64>>,
}

impl FunctionalSeries {
    pub fn new(names: Vec<String>) -> Self {
        Self { names, times: Vec::new(), values: Vec::new() }
    }

    pub fn push(&mut self, t: f64, values: Vec<f64>) {
        self.times.push(t);
        self.values.push(values);
    }

    pub fn column(&self, f: usize) -> Vec<f64> {
        self.values.iter().map(|r| r[f]).collect()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FunctionalAverage {
    pub name: String,
    pub mean: f64,
    pub se: f64,
    /// `σ² / se²` with `σ²` the sample variance; infinite when `se = 0 < σ²`.
    pub n_eff: f64,
}

fn trapezoid(t: &[f64], y: &[f64]) -> f64 {
    t.windows(2).zip(y.windows(2)).map(|(tw, yw)| 0.5 * (yw[0] + yw[1]) * (tw[1] - tw[0])).sum()
}

fn window_bounds(times: &[f64], t0: f64, t1: f64) -> (usize, usize) {
    let tol = 1e-9 * (1.0 + t1.abs());
    let a = times.iter().position(|t| *t >= t0 - tol).unwrap_or(times.len());
    let b = times.iter().rposition(|t| *t <= t1 + tol).map_or(0, |i| i + 1);
    (a, b.max(a))
}

/// Trapezoidal average of one sampled signal over the samples in `[t0, t1]`.
pub fn window_average(times: &[f64], values: &[f64], t0: f64, t1: f64) -> Option<f64> {
    let (a, b) = window_bounds(times, t0, t1);
    if b < a + 2 {
        return None;
    }
    let span = times[b - 1] - times[a];
    (span > 0.0).then(|| trapezoid(&times[a..b], &values[a..b]) / span)
}

/// Trapezoidal average with a batch-means standard error.
pub fn average_signal(times: &[f64], values: &[f64], t0: f64, t1: f64) -> Result<(f64, f64, f64), ErgodicError> {
    let (a, b) = window_bounds(times, t0, t1);
    let n = b - a;
    let need = 2 * BATCHES + 1;
    if n < need {
        return Err(ErgodicError::TooFewSamples { got: n, need });
    }
    let (t, y) = (&times[a..b], &values[a..b]);
    let span = t[n - 1] - t[0];
    let mean = trapezoid(t, y) / span;
    let intervals = n - 1;
    let batch_means: Vec<f64> = (0..BATCHES)
        .map(|j| {
            let lo = j * intervals / BATCHES;
            let hi = (j + 1) * intervals / BATCHES;
            trapezoid(&t[lo..=hi], &y[lo..=hi]) / (t[hi] - t[lo])
        })
        .collect();
    let bm = batch_means.iter().sum::<f64>() / BATCHES as f64;
    let var_b = batch_means.iter().map(|x| (x - bm) * (x - bm)).sum::<f64>() / (BATCHES - 1) as f64;
    let se = (var_b / BATCHES as f64).sqrt();
    let ym = y.iter().sum::<f64>() / n as f64;
    let var = y.iter().map(|x| (x - ym) * (x - ym)).sum::<f64>() / (n - 1) as f64;
    let n_eff = if se > 0.0 {
        var / (se * se)
    } else if var > 0.0 {
        f64::INFINITY
    } else {
        n as f64
    };
    Ok((mean, se, n_eff))
}

/// Averages of every functional over `[burn_in, t_end]`.
pub fn average_series(series: &FunctionalSeries, burn_in: f64) -> Result<Vec<FunctionalAverage>, ErgodicError> {
    let t_end = series.times.last().copied().unwrap_or(0.0);
    if !(t_end > burn_in) {
        return Err(ErgodicError::Config(format!("burn-in {burn_in} is not before the horizon {t_end}")));
    }
    (0..series.names.len())
        .map(|f| {
            let (mean, se, n_eff) = average_signal(&series.times, &series.column(f), burn_in, t_end)?;
            Ok(FunctionalAverage { name: series.names[f].clone(), mean, se, n_eff })
        })
        .collect()
}

/// Evaluates `funcs` on the retained states of `traj` and averages them
/// over `[burn_in, t_end]`.
pub fn time_average<T: Scalar>(
    traj: &Trajectory<T>,
    funcs: &FunctionalSet,
    burn_in: f64,
) -> Result<Vec<FunctionalAverage>, ErgodicError> {
    if traj.states.is_empty() {
        return Err(ErgodicError::Config("trajectory has no retained states".into()));
    }
    let eval = FunctionalEvaluator::new(funcs.clone(), traj.dims, traj.cells);
    let mut series = FunctionalSeries::new(funcs.names());
    for (t, v) in &traj.states {
        series.push(t.to_f64_lossy(), eval.evaluate(v));
    }
    average_series(&series, burn_in)
}

/// Seed and step of the Brownian paths used by the ergodic drivers.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PathSpec<T> {
    pub seed: u64,
    pub dt: T,
}

impl<T: Scalar> PathSpec<T> {
    /// Path covering `[0, t_end]` (empty when there is no noise).
    pub fn sample(&self, nm: &NoiseModel<T>, t_end: T, path_index: u64) -> Result<WienerPath<T>, ErgodicError> {
        let n = (t_end / self.dt - T::lit(1e-9)).ceil().max(T::zero()).to_usize().unwrap_or(0);
        sample_path(nm.len(), n, self.dt, self.seed, path_index).map_err(|e| ErgodicError::Config(e.to_string()))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CouplingSeries {
    pub path_index: u64,
    pub t: Vec<f64>,
    /// `‖v_a(t) − v_b(t)‖_{L¹(T^P)}`.
    pub d: Vec<f64>,
    pub max_increase: f64,
    /// Steps whose increase exceeds [`COUPLING_TOL`].
    pub violations: Vec<usize>,
}

impl CouplingSeries {
    pub fn contracts(&self) -> bool {
        self.violations.is_empty()
    }

    /// `d(T) / d(0)`, `None` when `d(0) = 0`.
    pub fn ratio(&self) -> Option<f64> {
        let (d0, d1) = (*self.d.first()?, *self.d.last()?);
        (d0 > 0.0).then(|| d1 / d0)
    }

    pub fn write_csv<W: Write>(&self, w: W) -> csv::Result<()> {
        let mut wr = csv::Writer::from_writer(w);
        wr.write_record(["t", "d"])?;
        for (t, d) in self.t.iter().zip(&self.d) {
            wr.write_record([t.to_string(), d.to_string()])?;
        }
        wr.flush()?;
        Ok(())
    }
}

fn solver_for<'a, T: Scalar>(rm: &'a ReducedModel<T>, nm: &NoiseModel<T>, cfg: &SolverConfig<T>) -> Result<Solver<'a, T>, SolverError> {
    Solver::new(rm, nm, cfg.cells, cfg.flux_scheme, cfg.mu)
}

/// Runs `v0_a` and `v0_b` on the same path and records their L¹ distance
/// after every macro step.
#[allow(clippy::too_many_arguments)]
pub fn coupling_run<T: Scalar>(
    v0_a: &TorusField<T>,
    v0_b: &TorusField<T>,
    rm: &ReducedModel<T>,
    nm: &NoiseModel<T>,
    cfg: &SolverConfig<T>,
    paths: &PathSpec<T>,
    path_index: u64,
) -> Result<CouplingSeries, ErgodicError> {
    if !v0_a.same_grid(v0_b) {
        return Err(ErgodicError::Config("initial data live on different grids".into()));
    }
    let path = paths.sample(nm, cfg.t_end, path_index)?;
    let path = (!nm.is_empty()).then_some(&path);
    let solver = solver_for(rm, nm, cfg)?;
    let mut cfg = cfg.clone();
    cfg.retain_states = false;
    cfg.entropy_probe = None;
    let mut sa: Vec<(f64, TorusField<T>)> = Vec::new();
    solver.run_observed(v0_a, path, &cfg, |_, t, v| sa.push((t.to_f64_lossy(), v.clone())))?;
    let mut t = Vec::with_capacity(sa.len());
    let mut d = Vec::with_capacity(sa.len());
    let mut it = sa.into_iter();
    solver.run_observed(v0_b, path, &cfg, |_, _, v| {
        let (ta, va) = it.next().expect("equal step counts");
        t.push(ta);
        d.push(va.l1_distance(v).to_f64_lossy());
    })?;
    let mut max_increase = f64::NEG_INFINITY;
    let mut violations = Vec::new();
    for (n, w) in d.windows(2).enumerate() {
        let inc = w[1] - w[0];
        max_increase = max_increase.max(inc);
        if inc > COUPLING_TOL {
            violations.push(n + 1);
        }
    }
    if d.len() < 2 {
        max_increase = 0.0;
    }
    Ok(CouplingSeries { path_index, t, d, max_increase, violations })
}

#[derive(Debug, Clone, PartialEq)]
pub struct InvarianceConfig<T> {
    pub n_paths: usize,
    /// Shift between the two compared averaging windows.
    pub lag: T,
    /// Burn-in as a fraction of `t_end`.
    pub burn_in: f64,
    pub paths: PathSpec<T>,
    /// First path index; data share path indices (common random numbers).
    pub first_path: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Comparison {
    pub functional: String,
    /// `"data i vs j"` or `"lag, data i"`.
    pub label: String,
    pub a: f64,
    pub b: f64,
    pub se_a: f64,
    pub se_b: f64,
    pub threshold: f64,
    pub pass: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InvarianceReport {
    pub n_paths: usize,
    pub burn_in: f64,
    pub lag: f64,
    pub t_end: f64,
    /// `averages[i]`: per-functional mean over paths for initial datum `i`.
    pub averages: Vec<Vec<FunctionalAverage>>,
    pub comparisons: Vec<Comparison>,
    pub pass: bool,
}

/// Minimum number of paths accepted by [`invariance_test`].
pub const MIN_PATHS: usize = 10;

fn compare(functional: &str, label: String, a: (f64, f64), b: (f64, f64)) -> Comparison {
    let threshold = 3.0 * (a.1 * a.1 + b.1 * b.1).sqrt() + 1e-12 * (1.0 + a.0.abs().max(b.0.abs()));
    Comparison { functional: functional.into(), label, a: a.0, b: b.0, se_a: a.1, se_b: b.1, threshold, pass: (a.0 - b.0).abs() <= threshold }
}

fn across_paths(samples: &[f64]) -> (f64, f64, f64) {
    let n = samples.len() as f64;
    let m = samples.iter().sum::<f64>() / n;
    let var = samples.iter().map(|x| (x - m) * (x - m)).sum::<f64>() / (n - 1.0);
    (m, (var / n).sqrt(), var)
}

/// Compares path-averaged time averages across initial data (window
/// `[b, T]`) and, per datum, between `[b, T − lag]` and `[b + lag, T]`.
pub fn invariance_test<T: Scalar>(
    u0_list: &[TorusField<T>],
    rm: &ReducedModel<T>,
    nm: &NoiseModel<T>,
    cfg: &SolverConfig<T>,
    funcs: &FunctionalSet,
    icfg: &InvarianceConfig<T>,
) -> Result<InvarianceReport, ErgodicError> {
    if u0_list.len() < 2 {
        return Err(ErgodicError::Config("need at least two initial data".into()));
    }
    if icfg.n_paths < MIN_PATHS {
        return Err(ErgodicError::SampleSize { n_eff: icfg.n_paths as f64, need: MIN_PATHS as f64 });
    }
    let t_end = cfg.t_end.to_f64_lossy();
    let lag = icfg.lag.to_f64_lossy();
    let b = icfg.burn_in * t_end;
    if !(lag > 0.0 && b + lag < t_end) {
        return Err(ErgodicError::Config(format!("lag {lag} does not fit after burn-in {b} before {t_end}")));
    }
    let solver = solver_for(rm, nm, cfg)?;
    let mut run_cfg = cfg.clone();
    run_cfg.retain_states = false;
    run_cfg.entropy_probe = None;
    let eval = FunctionalEvaluator::<T>::new(funcs.clone(), u0_list[0].dims(), cfg.cells);
    let nf = funcs.len();
    let names = funcs.names();

    // per datum, per path: [full, early, late] averages of each functional
    let per_datum: Vec<Vec<[Vec<f64>; 3]>> = u0_list
        .iter()
        .map(|u0| {
            (0..icfg.n_paths as u64)
                .into_par_iter()
                .map(|p| {
                    let path = icfg.paths.sample(nm, cfg.t_end, icfg.first_path + p)?;
                    let mut series = FunctionalSeries::new(names.clone());
                    solver.run_observed(u0, (!nm.is_empty()).then_some(&path), &run_cfg, |_, t, v| {
                        series.push(t.to_f64_lossy(), eval.evaluate(v))
                    })?;
                    let windows = [(b, t_end), (b, t_end - lag), (b + lag, t_end)];
                    let out: Result<Vec<Vec<f64>>, ErgodicError> = windows
                        .iter()
                        .map(|&(t0, t1)| {
                            (0..nf)
                                .map(|f| {
                                    window_average(&series.times, &series.column(f), t0, t1)
                                        .ok_or(ErgodicError::TooFewSamples { got: series.times.len(), need: 2 })
                                })
                                .collect()
                        })
                        .collect();
                    let out = out?;
                    Ok([out[0].clone(), out[1].clone(), out[2].clone()])
                })
                .collect::<Result<Vec<_>, ErgodicError>>()
        })
        .collect::<Result<Vec<_>, ErgodicError>>()?;

    let stat = |d: usize, w: usize, f: usize| across_paths(&per_datum[d].iter().map(|r| r[w][f]).collect::<Vec<_>>());
    let averages: Vec<Vec<FunctionalAverage>> = (0..u0_list.len())
        .map(|d| {
            (0..nf)
                .map(|f| {
                    let (mean, se, var) = stat(d, 0, f);
                    let n_eff = if se > 0.0 { var / (se * se) } else { icfg.n_paths as f64 };
                    FunctionalAverage { name: names[f].clone(), mean, se, n_eff }
                })
                .collect()
        })
        .collect();
    let mut comparisons = Vec::new();
    for f in 0..nf {
        for i in 0..u0_list.len() {
            for j in (i + 1)..u0_list.len() {
                let (a, sa, _) = stat(i, 0, f);
                let (bb, sb, _) = stat(j, 0, f);
                comparisons.push(compare(&names[f], format!("data {i} vs {j}"), (a, sa), (bb, sb)));
            }
        }
        for i in 0..u0_list.len() {
            let (a, sa, _) = stat(i, 1, f);
            let (bb, sb, _) = stat(i, 2, f);
            comparisons.push(compare(&names[f], format!("lag, data {i}"), (a, sa), (bb, sb)));
        }
    }
    let pass = comparisons.iter().all(|c| c.pass);
    Ok(InvarianceReport { n_paths: icfg.n_paths, burn_in: b, lag, t_end, averages, comparisons, pass })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TightnessRow {
    pub r: f64,
    pub fraction: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TightnessProfile {
    pub rows: Vec<TightnessRow>,
    /// Time average of the surrogate, averaged over trajectories.
    pub average: f64,
}

impl TightnessProfile {
    pub fn write_csv<W: Write>(&self, w: W) -> csv::Result<()> {
        let mut wr = csv::Writer::from_writer(w);
        wr.write_record(["R", "fraction"])?;
        for r in &self.rows {
            wr.write_record([r.r.to_string(), r.fraction.to_string()])?;
        }
        wr.flush()?;
        Ok(())
    }
}

/// Time fractions with surrogate `≤ R` from sampled surrogate series
/// `(times, values)`, one per trajectory. Each sample carries its
/// trapezoid weight.
pub fn tightness_from_series(series: &[(Vec<f64>, Vec<f64>)], r_ladder: &[f64]) -> TightnessProfile {
    let mut rows: Vec<TightnessRow> = r_ladder.iter().map(|&r| TightnessRow { r, fraction: 0.0 }).collect();
    let mut average = 0.0;
    let mut counted = 0usize;
    for (t, v) in series {
        if t.is_empty() {
            continue;
        }
        let weights: Vec<f64> = if t.len() == 1 {
            vec![1.0]
        } else {
            let span = t[t.len() - 1] - t[0];
            (0..t.len())
                .map(|i| {
                    let left = if i > 0 { t[i] - t[i - 1] } else { 0.0 };
                    let right = if i + 1 < t.len() { t[i + 1] - t[i] } else { 0.0 };
                    0.5 * (left + right) / span
                })
                .collect()
        };
        for row in rows.iter_mut() {
            row.fraction += v.iter().zip(&weights).filter(|(x, _)| **x <= row.r).map(|(_, w)| *w).sum::<f64>();
        }
        average += v.iter().zip(&weights).map(|(x, w)| x * w).sum::<f64>();
        counted += 1;
    }
    if counted > 0 {
        for row in rows.iter_mut() {
            row.fraction /= counted as f64;
        }
        average /= counted as f64;
    }
    TightnessProfile { rows, average }
}

/// [`tightness_from_series`] for trajectories with retained states.
pub fn tightness_profile<T: Scalar>(trajs: &[Trajectory<T>], s: f64, q: f64, r_ladder: &[f64]) -> TightnessProfile {
    let series: Vec<(Vec<f64>, Vec<f64>)> = trajs
        .iter()
        .map(|tr| {
            let plan = FourierPlan::<T>::new(tr.dims, tr.cells);
            let t = tr.states.iter().map(|(t, _)| t.to_f64_lossy()).collect();
            let v = tr.states.iter().map(|(_, f)| sobolev_surrogate(&plan.forward(f), tr.dims, tr.cells, s, q)).collect();
            (t, v)
        })
        .collect();
    tightness_from_series(&series, r_ladder)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ErgodicReport {
    pub functionals: Vec<FunctionalAverage>,
    pub coupling: Option<CouplingSeries>,
    pub tightness: Option<TightnessProfile>,
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn first_modes_order() {
        assert_eq!(first_modes(1, 3), vec![vec![1], vec![2], vec![3]]);
        assert_eq!(first_modes(2, 4), vec![vec![0, 1], vec![1, 0], vec![1, -1], vec![1, 1]]);
    }

    #[test]
    fn mode_index_matches_transform_order() {
        assert_eq!(mode_index(&[0, -1], 2, 8), Some(7));
        assert_eq!(mode_index(&[1, 0], 2, 8), Some(8));
        assert_eq!(mode_index(&[5], 1, 8), None);
    }
}
