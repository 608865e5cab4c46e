use rayon::prelude::*;

use super::entropy::step_residual;
use super::spectral::apply_biharmonic;
use super::{EntropyProbe, FluxScheme, Snapshot, SolverConfig, SolverError, StepDiagnostics, Trajectory};
use crate::field::TorusField;
use crate::fourier::FourierPlan;
use crate::model::{NoiseModel, ReducedModel};
use crate::noise::{NoiseGrid, WienerPath};
use crate::scalar::Scalar;

/// Grids at least this large are updated in parallel.
const PARALLEL_CELLS: usize = 1 << 14;

/// Largest stable step for the explicit update on a `cells^P` grid:
/// `dt · (Lip(f̃) P/dy + 2 sup‖ã_ε‖ P²/dy²) ≤ cfl`. The biharmonic part is
/// integrated exactly and does not restrict `dt`.
pub fn stable_dt<T: Scalar>(rm: &ReducedModel<T>, cells: usize, cfl: T) -> T {
    let p = T::from_usize_lossy(rm.rank());
    let inv_dy = T::from_usize_lossy(cells);
    let rate = rm.lip_f() * p * inv_dy + T::lit(2.0) * rm.diffusion_bound() * p * p * inv_dy * inv_dy;
    if rate > T::zero() {
        cfl / rate
    } else {
        T::infinity()
    }
}

/// Finite-volume stepper for one grid, model and noise.
#[derive(Debug)]
pub struct Solver<'a, T: Scalar> {
    rm: &'a ReducedModel<T>,
    noise: NoiseGrid<T>,
    dims: usize,
    cells: usize,
    scheme: FluxScheme,
    mu: T,
    plan: Option<FourierPlan<T>>,
    /// `[axis][cell] → (cell − e_axis, cell + e_axis)`.
    neighbors: Vec<Vec<(usize, usize)>>,
}

/// Per-cell table values reused across one step.
#[derive(Debug, Default)]
struct Workspace<T> {
    plus: Vec<Vec<T>>,
    minus: Vec<Vec<T>>,
    visc: Vec<Vec<T>>,
}

impl<'a, T: Scalar> Solver<'a, T> {
    pub fn new(
        rm: &'a ReducedModel<T>,
        nm: &NoiseModel<T>,
        cells: usize,
        scheme: FluxScheme,
        mu: T,
    ) -> Result<Self, SolverError> {
        let dims = rm.rank();
        if nm.dims() != dims {
            return Err(SolverError::Grid(format!("noise lives on T^{}, model on T^{dims}", nm.dims())));
        }
        if cells < 3 {
            return Err(SolverError::Grid(format!("need at least 3 cells per axis, got {cells}")));
        }
        if !(mu >= T::zero()) {
            return Err(SolverError::Config(format!("biharmonic coefficient must be non-negative, got {mu}")));
        }
        let proto = TorusField::<T>::zeros(dims, cells);
        let neighbors = (0..dims)
            .map(|axis| (0..proto.len()).map(|i| (proto.shifted(i, axis, -1), proto.shifted(i, axis, 1))).collect())
            .collect();
        let plan = if mu > T::zero() { Some(FourierPlan::new(dims, cells)) } else { None };
        Ok(Self { rm, noise: NoiseGrid::new(nm, cells), dims, cells, scheme, mu, plan, neighbors })
    }

    pub fn model(&self) -> &ReducedModel<T> {
        self.rm
    }

    pub fn noise(&self) -> &NoiseGrid<T> {
        &self.noise
    }

    pub fn cells(&self) -> usize {
        self.cells
    }

    pub fn stable_dt(&self, cfl: T) -> T {
        stable_dt(self.rm, self.cells, cfl)
    }

    fn check_grid(&self, v: &TorusField<T>) -> Result<(), SolverError> {
        if v.dims() != self.dims || v.cells_per_axis() != self.cells {
            return Err(SolverError::Grid(format!(
                "field is {}^{}, solver expects {}^{}",
                v.cells_per_axis(),
                v.dims(),
                self.cells,
                self.dims
            )));
        }
        Ok(())
    }

    fn fill_workspace(&self, v: &TorusField<T>, ws: &mut Workspace<T>) {
        let p = self.dims;
        let len = v.len();
        ws.plus.resize_with(p, Vec::new);
        ws.minus.resize_with(p, Vec::new);
        ws.visc.resize_with(p * p, Vec::new);
        for buf in ws.plus.iter_mut().chain(ws.minus.iter_mut()).chain(ws.visc.iter_mut()) {
            buf.resize(len, T::zero());
        }
        let diagonal = self.rm.is_diagonal();
        for (i, &u) in v.values().iter().enumerate() {
            let at = self.rm.locate(u);
            for j in 0..p {
                match self.scheme {
                    FluxScheme::EngquistOsher => {
                        ws.plus[j][i] = self.rm.eo_plus_at(j, at);
                        ws.minus[j][i] = self.rm.eo_minus_at(j, at);
                    }
                    FluxScheme::LaxFriedrichs => {
                        ws.plus[j][i] = self.rm.flux_at(j, at);
                    }
                }
                for l in 0..p {
                    if l == j || (!diagonal && l > j) {
                        ws.visc[j * p + l][i] = self.rm.integrated_at(j, l, at);
                    }
                }
            }
        }
    }

    #[inline]
    fn cell_update(&self, v: &[T], ws: &Workspace<T>, i: usize, dt_dy: T, dt_dy2: T) -> T {
        let p = self.dims;
        let half = T::lit(0.5);
        let mut flux = T::zero();
        let mut diff = T::zero();
        for j in 0..p {
            let (im, ip) = self.neighbors[j][i];
            match self.scheme {
                FluxScheme::EngquistOsher => {
                    // F(i+½) − F(i−½) with F(a, b) = f̃(0) + G⁺(a) + G⁻(b)
                    flux += (ws.plus[j][i] - ws.plus[j][im]) + (ws.minus[j][ip] - ws.minus[j][i]);
                }
                FluxScheme::LaxFriedrichs => {
                    let f = &ws.plus[j];
                    let alpha = self.rm.lip_axis(j);
                    let right = half * (f[i] + f[ip]) - half * alpha * (v[ip] - v[i]);
                    let left = half * (f[im] + f[i]) - half * alpha * (v[i] - v[im]);
                    flux += right - left;
                }
            }
            let a = &ws.visc[j * p + j];
            diff += (a[ip] - a[i]) - (a[i] - a[im]);
        }
        if !self.rm.is_diagonal() {
            for j in 0..p {
                for l in (j + 1)..p {
                    let a = &ws.visc[j * p + l];
                    let (jm, jp) = self.neighbors[j][i];
                    let pp = self.neighbors[l][jp].1;
                    let pm = self.neighbors[l][jp].0;
                    let mp = self.neighbors[l][jm].1;
                    let mm = self.neighbors[l][jm].0;
                    // (j, l) and (l, j) together: 2 · cross difference / 4
                    diff += half * ((a[pp] - a[pm]) - (a[mp] - a[mm]));
                }
            }
        }
        v[i] - dt_dy * flux + dt_dy2 * diff
    }

    /// Deterministic flux, diffusion and biharmonic update over `dt`.
    pub fn advance(&self, v: &TorusField<T>, dt: T) -> Result<TorusField<T>, SolverError> {
        let mut ws = Workspace::default();
        self.advance_with(v, dt, &mut ws)
    }

    fn advance_with(&self, v: &TorusField<T>, dt: T, ws: &mut Workspace<T>) -> Result<TorusField<T>, SolverError> {
        self.check_grid(v)?;
        self.fill_workspace(v, ws);
        let inv_dy = T::from_usize_lossy(self.cells);
        let dt_dy = dt * inv_dy;
        let dt_dy2 = dt_dy * inv_dy;
        let src = v.values();
        let mut out = v.clone();
        let ws_ref = &*ws;
        if src.len() >= PARALLEL_CELLS {
            out.values_mut()
                .par_iter_mut()
                .enumerate()
                .with_min_len(1024)
                .for_each(|(i, o)| *o = self.cell_update(src, ws_ref, i, dt_dy, dt_dy2));
        } else {
            for (i, o) in out.values_mut().iter_mut().enumerate() {
                *o = self.cell_update(src, ws_ref, i, dt_dy, dt_dy2);
            }
        }
        if let Some(plan) = &self.plan {
            apply_biharmonic(plan, &mut out, self.mu, dt);
        }
        Ok(out)
    }

    /// Adds `Σ_k ĥ_k dW_k` with the mean-free cell samples `ĥ_k`.
    pub fn add_noise(&self, v: &mut TorusField<T>, dw: &[T]) {
        for (k, d) in dw.iter().enumerate() {
            if *d != T::zero() {
                v.add_scaled(self.noise.projected(k), *d);
            }
        }
    }

    /// One Lie-split step: deterministic update over `dt`, then the noise
    /// increment. Fails if `dt` exceeds the stable step at Courant number 1.
    pub fn step(&self, v: &TorusField<T>, dw: &[T], dt: T) -> Result<TorusField<T>, SolverError> {
        let limit = self.stable_dt(T::one());
        if dt > limit * (T::one() + T::lit(1e-12)) {
            return Err(SolverError::Cfl { dt: dt.to_f64_lossy(), limit: limit.to_f64_lossy() });
        }
        if dw.len() != self.noise.n_modes() {
            return Err(SolverError::Path(format!("{} increments for {} modes", dw.len(), self.noise.n_modes())));
        }
        let mut out = self.advance(v, dt)?;
        self.add_noise(&mut out, dw);
        if !out.is_finite() {
            return Err(SolverError::NonFinite { t: f64::NAN });
        }
        Ok(out)
    }

    /// Time grid of a run: `(macro steps, macro dt, substeps per macro step)`.
    pub fn schedule(&self, path: Option<&WienerPath<T>>, cfg: &SolverConfig<T>) -> Result<(usize, T, usize), SolverError> {
        if !(cfg.t_end >= T::zero()) || !cfg.t_end.is_finite() {
            return Err(SolverError::Config(format!("t_end must be finite and non-negative, got {}", cfg.t_end)));
        }
        if !(cfg.cfl > T::zero() && cfg.cfl <= T::one()) {
            return Err(SolverError::Config(format!("cfl must lie in (0, 1], got {}", cfg.cfl)));
        }
        let mut limit = self.stable_dt(cfg.cfl);
        if let Some(m) = cfg.max_dt {
            limit = limit.min(m);
        }
        let n_modes = self.noise.n_modes();
        if n_modes > 0 {
            let path = path.ok_or_else(|| SolverError::Path("noise model has modes but no path was given".into()))?;
            if path.n_modes() != n_modes {
                return Err(SolverError::Path(format!("path has {} modes, model {}", path.n_modes(), n_modes)));
            }
            let dt = path.dt();
            let n = (cfg.t_end / dt - T::lit(1e-9)).ceil().max(T::zero()).to_usize().unwrap_or(0);
            if n > path.n_steps() {
                return Err(SolverError::Path(format!("run needs {n} path steps, path has {}", path.n_steps())));
            }
            let sub = (dt / limit).ceil().max(T::one()).to_usize().unwrap_or(1);
            Ok((n, dt, sub))
        } else {
            if cfg.t_end == T::zero() {
                return Ok((0, T::zero(), 1));
            }
            let n = (cfg.t_end / limit).ceil().max(T::one()).to_usize().unwrap_or(1);
            Ok((n, cfg.t_end / T::from_usize_lossy(n), 1))
        }
    }

    /// Runs to `cfg.t_end`, calling `observer(n, t_n, v_n)` at `n = 0` and
    /// after every macro step.
    pub fn run_observed<F>(
        &self,
        v0: &TorusField<T>,
        path: Option<&WienerPath<T>>,
        cfg: &SolverConfig<T>,
        mut observer: F,
    ) -> Result<Trajectory<T>, SolverError>
    where
        F: FnMut(usize, T, &TorusField<T>),
    {
        self.check_grid(v0)?;
        if !v0.is_finite() {
            return Err(SolverError::NonFinite { t: 0.0 });
        }
        let (n_macro, macro_dt, sub) = self.schedule(path, cfg)?;
        let dt_sub = if sub > 0 { macro_dt / T::from_usize_lossy(sub) } else { macro_dt };
        let n_modes = self.noise.n_modes();

        let mut traj = Trajectory::new(self.dims, self.cells, macro_dt, sub);
        let mut requested: Vec<T> = cfg.snapshot_times.clone();
        requested.sort_by(|a, b| a.partial_cmp(b).unwrap());
        let mut next_snap = 0;
        let snap_tol = macro_dt * T::lit(1e-9);

        let mut v = v0.clone();
        let mut ws = Workspace::default();
        let mut dw = vec![T::zero(); n_modes];
        let mut beta = vec![T::zero(); n_modes];
        let mut j_now = TorusField::zeros(self.dims, self.cells);
        let mut j_next = j_now.clone();

        traj.push_state(cfg.retain_states, T::zero(), &v);
        while next_snap < requested.len() && requested[next_snap] <= snap_tol {
            traj.snapshots.push(Snapshot { requested: requested[next_snap], t: T::zero(), field: v.clone() });
            next_snap += 1;
        }
        observer(0, T::zero(), &v);

        for n in 0..n_macro {
            let t = macro_dt * T::from_usize_lossy(n + 1);
            let mut next = v.clone();
            for _ in 0..sub {
                next = self.advance_with(&next, dt_sub, &mut ws)?;
            }
            if n_modes > 0 {
                let path = path.expect("checked by schedule");
                for k in 0..n_modes {
                    dw[k] = path.increment(k, n);
                    beta[k] += dw[k];
                }
                self.add_noise(&mut next, &dw);
            }
            if !next.is_finite() {
                return Err(SolverError::NonFinite { t: t.to_f64_lossy() });
            }
            let entropy = match cfg.entropy_probe {
                Some(EntropyProbe { c, eps }) => {
                    if n_modes > 0 {
                        self.noise.combine(&beta, true, &mut j_next);
                    }
                    let r = step_residual(self.rm, &v, &j_now, &next, &j_next, macro_dt, c, eps, n_modes > 0);
                    std::mem::swap(&mut j_now, &mut j_next);
                    Some(r.iter().fold(T::zero(), |m, x| m.max(*x)).to_f64_lossy())
                }
                None => None,
            };
            traj.diagnostics.push(StepDiagnostics::of(t, macro_dt, &next, entropy));
            traj.push_state(cfg.retain_states, t, &next);
            while next_snap < requested.len() && requested[next_snap] <= t + snap_tol {
                traj.snapshots.push(Snapshot { requested: requested[next_snap], t, field: next.clone() });
                next_snap += 1;
            }
            v = next;
            observer(n + 1, t, &v);
        }
        traj.final_state = v;
        Ok(traj)
    }

    pub fn run(
        &self,
        v0: &TorusField<T>,
        path: Option<&WienerPath<T>>,
        cfg: &SolverConfig<T>,
    ) -> Result<Trajectory<T>, SolverError> {
        self.run_observed(v0, path, cfg, |_, _, _| {})
    }
}
