//! Explicit finite-volume solver for the reduced equation on `T^P`.
//!
//! The update is Lie-split: Engquist–Osher (or Lax–Friedrichs) fluxes plus
//! centered diffusion of the integrated viscosity `Ã_ε`, then the exact
//! biharmonic multiplier when `μ > 0`, then the cell increment
//! `Σ_k ĥ_k ΔW_k` with mean-free samples `ĥ_k`.

mod entropy;
mod scheme;
mod spectral;
mod study;

use std::io::Write;

use serde::{Deserialize, Serialize};

pub use entropy::{entropy_residual, eta, eta_prime, eta_second, sgn_eps, step_residual};
pub use scheme::{stable_dt, Solver};
pub use spectral::{apply_biharmonic, biharmonic_multiplier};
pub use study::vanishing_viscosity_study;

use crate::field::TorusField;
use crate::model::{NoiseModel, ReducedModel};
use crate::noise::WienerPath;
use crate::scalar::Scalar;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum SolverError {
    #[error("time step {dt} exceeds the stable limit {limit}")]
    Cfl { dt: f64, limit: f64 },
    #[error("non-finite values at t = {t}")]
    NonFinite { t: f64 },
    #[error("grid: {0}")]
    Grid(String),
    #[error("noise path: {0}")]
    Path(String),
    #[error("configuration: {0}")]
    Config(String),
    #[error("model: {0}")]
    Model(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FluxScheme {
    #[default]
    EngquistOsher,
    LaxFriedrichs,
}

/// Entropy `η_ε(·, c)` tracked during a run.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EntropyProbe<T> {
    pub c: T,
    pub eps: T,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SolverConfig<T> {
    pub cells: usize,
    /// Courant number in `(0, 1]`.
    pub cfl: T,
    pub t_end: T,
    pub mu: T,
    pub flux_scheme: FluxScheme,
    pub snapshot_times: Vec<T>,
    pub entropy_probe: Option<EntropyProbe<T>>,
    /// Keep every macro-step state (needed by [`entropy_residual`]).
    pub retain_states: bool,
    /// Optional cap on the substep size.
    pub max_dt: Option<T>,
}

impl<T: Scalar> SolverConfig<T> {
    pub fn new(cells: usize, t_end: T) -> Self {
        Self {
            cells,
            cfl: T::lit(0.9),
            t_end,
            mu: T::zero(),
            flux_scheme: FluxScheme::EngquistOsher,
            snapshot_times: Vec::new(),
            entropy_probe: None,
            retain_states: false,
            max_dt: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StepDiagnostics {
    pub t: f64,
    pub dt: f64,
    pub mean: f64,
    pub l1: f64,
    pub l2: f64,
    pub linf: f64,
    pub entropy_violation_max: Option<f64>,
}

impl StepDiagnostics {
    pub fn of<T: Scalar>(t: T, dt: T, v: &TorusField<T>, entropy: Option<f64>) -> Self {
        Self {
            t: t.to_f64_lossy(),
            dt: dt.to_f64_lossy(),
            mean: v.mean().to_f64_lossy(),
            l1: v.l1().to_f64_lossy(),
            l2: v.l2().to_f64_lossy(),
            linf: v.linf().to_f64_lossy(),
            entropy_violation_max: entropy,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Snapshot<T> {
    pub requested: T,
    pub t: T,
    pub field: TorusField<T>,
}

impl<T: Scalar> Snapshot<T> {
    /// CSV with the cell multi-index, the cell center and the value.
    pub fn write_csv<W: Write>(&self, w: W) -> csv::Result<()> {
        let p = self.field.dims();
        let mut wr = csv::Writer::from_writer(w);
        let mut header: Vec<String> = (0..p).map(|j| format!("i{}", j + 1)).collect();
        header.extend((0..p).map(|j| format!("y{}", j + 1)));
        header.push("v".into());
        wr.write_record(&header)?;
        let mut y = vec![T::zero(); p];
        for (i, v) in self.field.values().iter().enumerate() {
            self.field.center_into(i, &mut y);
            let mut rec: Vec<String> = self.field.multi_index(i).iter().map(|m| m.to_string()).collect();
            rec.extend(y.iter().map(|c| c.to_f64_lossy().to_string()));
            rec.push(v.to_f64_lossy().to_string());
            wr.write_record(&rec)?;
        }
        wr.flush()?;
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Trajectory<T> {
    pub dims: usize,
    pub cells: usize,
    /// Length of one macro step (the noise path step when there is noise).
    pub macro_dt: T,
    pub substeps: usize,
    pub snapshots: Vec<Snapshot<T>>,
    pub diagnostics: Vec<StepDiagnostics>,
    /// `(t_n, v_n)` for every macro step when states are retained.
    pub states: Vec<(T, TorusField<T>)>,
    pub final_state: TorusField<T>,
}

impl<T: Scalar> Trajectory<T> {
    fn new(dims: usize, cells: usize, macro_dt: T, substeps: usize) -> Self {
        Self {
            dims,
            cells,
            macro_dt,
            substeps,
            snapshots: Vec::new(),
            diagnostics: Vec::new(),
            states: Vec::new(),
            final_state: TorusField::zeros(dims, cells),
        }
    }

    fn push_state(&mut self, retain: bool, t: T, v: &TorusField<T>) {
        if retain {
            self.states.push((t, v.clone()));
        }
    }

    pub fn write_diagnostics_ndjson<W: Write>(&self, mut w: W) -> std::io::Result<()> {
        for d in &self.diagnostics {
            serde_json::to_writer(&mut w, d)?;
            writeln!(w)?;
        }
        Ok(())
    }
}

/// One explicit step with the Engquist–Osher flux and no biharmonic term.
pub fn step<T: Scalar>(
    v: &TorusField<T>,
    rm: &ReducedModel<T>,
    nm: &NoiseModel<T>,
    dw: &[T],
    dt: T,
) -> Result<TorusField<T>, SolverError> {
    Solver::new(rm, nm, v.cells_per_axis(), FluxScheme::EngquistOsher, T::zero())?.step(v, dw, dt)
}

/// Solves from `v0` to `cfg.t_end` along `path` (required iff `nm` has modes).
pub fn run<T: Scalar>(
    v0: &TorusField<T>,
    rm: &ReducedModel<T>,
    nm: &NoiseModel<T>,
    path: Option<&WienerPath<T>>,
    cfg: &SolverConfig<T>,
) -> Result<Trajectory<T>, SolverError> {
    if v0.cells_per_axis() != cfg.cells {
        return Err(SolverError::Grid(format!("initial data has {} cells per axis, config {}", v0.cells_per_axis(), cfg.cells)));
    }
    Solver::new(rm, nm, cfg.cells, cfg.flux_scheme, cfg.mu)?.run(v0, path, cfg)
}
