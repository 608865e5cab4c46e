//! Experiment configuration: one TOML file with a section per module.

use std::path::{Path, PathBuf};
use std::sync::Arc;

use apcl_core::ap_algebra::{FrequencySet, TrigPolynomial};
use apcl_core::ergodic::{FunctionalSet, PathSpec};
use apcl_core::field::TorusField;
use apcl_core::model::{reduce_model, NoiseMode, NoiseModel, ReducedModel, ReductionOptions, ScalarModel};
use apcl_core::solver::{EntropyProbe, FluxScheme, SolverConfig};
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

#[derive(Debug, thiserror::Error)]
pub enum ConfigError {
    #[error("cannot read {path}")]
    Io { path: PathBuf, source: std::io::Error },
    #[error("{0}")]
    Parse(String),
    #[error("{key}: {reason}")]
    Invalid { key: String, reason: String },
}

fn invalid(key: &str, reason: impl ToString) -> ConfigError {
    ConfigError::Invalid { key: key.into(), reason: reason.to_string() }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    #[serde(default)]
    pub seed: u64,
    #[serde(default = "defaults::n_paths")]
    pub n_paths: usize,
    pub model: ModelSpec,
    #[serde(default)]
    pub frequencies: FrequencySpec,
    #[serde(default)]
    pub noise: NoiseSpec,
    pub solver: SolverSpec,
    #[serde(default)]
    pub initial: Vec<DatumSpec>,
    #[serde(default)]
    pub couple: CoupleSpec,
    #[serde(default)]
    pub invariant: InvariantSpec,
    #[serde(default)]
    pub nondeg: NondegSpec,
    #[serde(default)]
    pub apnorm: ApnormSpec,
    /// Directory against which relative file names resolve.
    #[serde(skip)]
    pub base_dir: PathBuf,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModelSpec {
    /// `zero`, `linear`, `sin_flux`, `cosine_flux`, `saturated_burgers` or `tabulated`.
    pub name: String,
    #[serde(default = "defaults::direction")]
    pub direction: Vec<f64>,
    #[serde(default = "defaults::m_sat")]
    pub m_sat: f64,
    /// CSV table for `tabulated`.
    pub table: Option<String>,
    pub diffusion: Option<DiffusionSpec>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum DiffusionSpec {
    Constant { a0: Vec<f64> },
    Porous { diag: Vec<f64>, kappa0: f64, kappa1: f64, u_sat: f64 },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FrequencySpec {
    /// Empty means the identity basis of the model dimension.
    #[serde(default)]
    pub generators: Vec<Vec<f64>>,
    pub denominator_bound: Option<u64>,
    #[serde(default)]
    pub epsilon: f64,
    #[serde(default = "defaults::half_range")]
    pub half_range: f64,
    #[serde(default = "defaults::nodes_per_unit")]
    pub nodes_per_unit: usize,
}

impl Default for FrequencySpec {
    fn default() -> Self {
        Self {
            generators: Vec::new(),
            denominator_bound: None,
            epsilon: 0.0,
            half_range: defaults::half_range(),
            nodes_per_unit: defaults::nodes_per_unit(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Wave {
    Cos,
    Sin,
}

/// `amp·cos(2π k·y)` or `amp·sin(2π k·y)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TermSpec {
    pub k: Vec<i64>,
    pub kind: Wave,
    pub amp: f64,
}

impl TermSpec {
    fn polynomial(&self) -> TrigPolynomial<f64> {
        match self.kind {
            Wave::Cos => TrigPolynomial::cosine(self.k.clone(), self.amp),
            Wave::Sin => TrigPolynomial::sine(self.k.clone(), self.amp),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModeSpec {
    #[serde(default)]
    pub terms: Vec<TermSpec>,
    /// NDJSON coefficient file, added to `terms`.
    pub file: Option<String>,
    /// Declared bound on `h` and its first two derivatives; defaults to
    /// the coefficient majorants.
    pub alpha: Option<f64>,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct NoiseSpec {
    #[serde(default)]
    pub modes: Vec<ModeSpec>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SolverSpec {
    pub cells: usize,
    pub t_end: f64,
    #[serde(default = "defaults::cfl")]
    pub cfl: f64,
    #[serde(default)]
    pub mu: f64,
    #[serde(default)]
    pub flux_scheme: FluxScheme,
    #[serde(default)]
    pub snapshot_times: Vec<f64>,
    pub max_dt: Option<f64>,
    #[serde(default = "defaults::path_dt")]
    pub path_dt: f64,
    #[serde(default)]
    pub path_index: u64,
    pub entropy_probe: Option<ProbeSpec>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ProbeSpec {
    pub c: f64,
    pub eps: f64,
}

/// Initial datum `mean + Σ terms`, optionally plus a coefficient file.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DatumSpec {
    #[serde(default)]
    pub mean: f64,
    #[serde(default)]
    pub terms: Vec<TermSpec>,
    pub file: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CoupleSpec {
    #[serde(default = "defaults::pairs")]
    pub pairs: Vec<[usize; 2]>,
    /// Upper bound on `d(T)/d(0)` required of every run, if set.
    pub merge_ratio: Option<f64>,
}

impl Default for CoupleSpec {
    fn default() -> Self {
        Self { pairs: defaults::pairs(), merge_ratio: None }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct InvariantSpec {
    #[serde(default = "defaults::lag")]
    pub lag: f64,
    #[serde(default = "defaults::burn_in")]
    pub burn_in: f64,
    #[serde(default = "defaults::fourier_modes")]
    pub fourier_modes: usize,
    #[serde(default = "defaults::sobolev_s")]
    pub sobolev_s: f64,
    #[serde(default = "defaults::sobolev_q")]
    pub sobolev_q: f64,
    #[serde(default)]
    pub first_path: u64,
    /// Radii for the tightness profile; empty skips it.
    #[serde(default)]
    pub tightness_radii: Vec<f64>,
    #[serde(default = "defaults::tightness_paths")]
    pub tightness_paths: usize,
}

impl Default for InvariantSpec {
    fn default() -> Self {
        Self {
            lag: defaults::lag(),
            burn_in: defaults::burn_in(),
            fourier_modes: defaults::fourier_modes(),
            sobolev_s: defaults::sobolev_s(),
            sobolev_q: defaults::sobolev_q(),
            first_path: 0,
            tightness_radii: Vec::new(),
            tightness_paths: defaults::tightness_paths(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct NondegSpec {
    #[serde(default = "defaults::deltas")]
    pub deltas: Vec<f64>,
    #[serde(default = "defaults::nu")]
    pub nu: f64,
    #[serde(default = "defaults::xi_window")]
    pub xi_window: f64,
    #[serde(default = "defaults::xi_core")]
    pub xi_core: f64,
    #[serde(default = "defaults::n_max")]
    pub n_max: i64,
    #[serde(default = "defaults::alpha_points")]
    pub alpha_points: usize,
    /// Open interval the fitted exponent must fall in.
    #[serde(default = "defaults::kappa_range")]
    pub kappa_range: [f64; 2],
}

impl Default for NondegSpec {
    fn default() -> Self {
        Self {
            deltas: defaults::deltas(),
            nu: defaults::nu(),
            xi_window: defaults::xi_window(),
            xi_core: defaults::xi_core(),
            n_max: defaults::n_max(),
            alpha_points: defaults::alpha_points(),
            kappa_range: defaults::kappa_range(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ApnormSpec {
    #[serde(default)]
    pub datum: usize,
    #[serde(default = "defaults::sides")]
    pub sides: Vec<f64>,
    #[serde(default = "defaults::samples_per_unit")]
    pub samples_per_unit: usize,
    #[serde(default = "defaults::torus_cells")]
    pub torus_cells: usize,
    /// Largest relative error accepted on the last side.
    #[serde(default = "defaults::apnorm_tolerance")]
    pub tolerance: f64,
}

impl Default for ApnormSpec {
    fn default() -> Self {
        Self {
            datum: 0,
            sides: defaults::sides(),
            samples_per_unit: defaults::samples_per_unit(),
            torus_cells: defaults::torus_cells(),
            tolerance: defaults::apnorm_tolerance(),
        }
    }
}

mod defaults {
    pub fn n_paths() -> usize {
        10
    }
    pub fn direction() -> Vec<f64> {
        vec![1.0]
    }
    pub fn m_sat() -> f64 {
        4.0
    }
    pub fn half_range() -> f64 {
        16.0
    }
    pub fn nodes_per_unit() -> usize {
        256
    }
    pub fn cfl() -> f64 {
        0.9
    }
    pub fn path_dt() -> f64 {
        0.01
    }
    pub fn pairs() -> Vec<[usize; 2]> {
        vec![[0, 1]]
    }
    pub fn lag() -> f64 {
        2.0
    }
    pub fn burn_in() -> f64 {
        apcl_core::ergodic::DEFAULT_BURN_IN
    }
    pub fn fourier_modes() -> usize {
        3
    }
    pub fn sobolev_s() -> f64 {
        1.0
    }
    pub fn sobolev_q() -> f64 {
        2.0
    }
    pub fn tightness_paths() -> usize {
        10
    }
    pub fn deltas() -> Vec<f64> {
        vec![1e-4, 3e-4, 1e-3, 3e-3, 1e-2, 3e-2, 1e-1]
    }
    pub fn nu() -> f64 {
        1.5
    }
    pub fn xi_window() -> f64 {
        1e3
    }
    pub fn xi_core() -> f64 {
        50.0
    }
    pub fn n_max() -> i64 {
        32
    }
    pub fn alpha_points() -> usize {
        201
    }
    pub fn kappa_range() -> [f64; 2] {
        [0.0, 1.0]
    }
    pub fn sides() -> Vec<f64> {
        vec![50.25, 100.25, 200.25]
    }
    pub fn samples_per_unit() -> usize {
        64
    }
    pub fn torus_cells() -> usize {
        512
    }
    pub fn apnorm_tolerance() -> f64 {
        0.05
    }
}

impl ExperimentConfig {
    pub fn load(path: &Path) -> Result<Self, ConfigError> {
        let text = std::fs::read_to_string(path).map_err(|source| ConfigError::Io { path: path.into(), source })?;
        let mut cfg = Self::parse(&text)?;
        cfg.base_dir = path.parent().map(Path::to_path_buf).unwrap_or_default();
        Ok(cfg)
    }

    /// Parse errors carry the line, column and key reported by the TOML parser.
    pub fn parse(text: &str) -> Result<Self, ConfigError> {
        toml::from_str(text).map_err(|e| ConfigError::Parse(e.to_string()))
    }

    /// SHA-256 of the canonical JSON form, hex encoded.
    pub fn hash(&self) -> String {
        let canonical = serde_json::to_vec(self).expect("config serializes");
        hex::encode(Sha256::digest(&canonical))
    }

    fn resolve(&self, name: &str) -> PathBuf {
        let p = Path::new(name);
        if p.is_absolute() {
            p.into()
        } else {
            self.base_dir.join(p)
        }
    }

    fn open(&self, key: &str, name: &str) -> Result<std::io::BufReader<std::fs::File>, ConfigError> {
        let path = self.resolve(name);
        std::fs::File::open(&path).map(std::io::BufReader::new).map_err(|e| invalid(key, format!("{}: {e}", path.display())))
    }

    pub fn scalar_model(&self) -> Result<ScalarModel<f64>, ConfigError> {
        let m = &self.model;
        let d = m.direction.clone();
        let base = match m.name.as_str() {
            "zero" => ScalarModel::zero(d.len()),
            "linear" => ScalarModel::linear(d),
            "sin_flux" => ScalarModel::sin_flux(d),
            "cosine_flux" => ScalarModel::cosine_flux(d),
            "saturated_burgers" => ScalarModel::saturated_burgers(d, m.m_sat).map_err(|e| invalid("model", e))?,
            "tabulated" => {
                let name = m.table.as_deref().ok_or_else(|| invalid("model.table", "required for tabulated models"))?;
                ScalarModel::from_csv(name, self.open("model.table", name)?).map_err(|e| invalid("model.table", e))?
            }
            other => return Err(invalid("model.name", format!("unknown model `{other}`"))),
        };
        match &m.diffusion {
            None => Ok(base),
            Some(DiffusionSpec::Constant { a0 }) => base.with_constant_diffusion(a0.clone()),
            Some(DiffusionSpec::Porous { diag, kappa0, kappa1, u_sat }) => {
                base.with_porous_viscosity(diag.clone(), *kappa0, *kappa1, *u_sat)
            }
        }
        .map_err(|e| invalid("model.diffusion", e))
    }

    pub fn frequencies(&self, model_dim: usize) -> Result<FrequencySet<f64>, ConfigError> {
        let f = &self.frequencies;
        if f.generators.is_empty() {
            return Ok(FrequencySet::identity(model_dim));
        }
        let r = match f.denominator_bound {
            Some(q) => FrequencySet::with_bound(f.generators.clone(), q),
            None => FrequencySet::new(f.generators.clone()),
        };
        r.map_err(|e| invalid("frequencies.generators", e))
    }

    /// Torus dimension `P`.
    pub fn dims(&self) -> usize {
        if self.frequencies.generators.is_empty() {
            self.model.direction.len()
        } else {
            self.frequencies.generators.len()
        }
    }

    pub fn reduction_options(&self) -> ReductionOptions<f64> {
        ReductionOptions {
            half_range: self.frequencies.half_range,
            nodes_per_unit: self.frequencies.nodes_per_unit,
            ..Default::default()
        }
    }

    pub fn reduced_model(&self) -> Result<ReducedModel<f64>, ConfigError> {
        let m = self.scalar_model()?;
        let freqs = self.frequencies(m.dim())?;
        reduce_model(Arc::new(m), freqs, self.frequencies.epsilon, &self.reduction_options())
            .map_err(|e| invalid("model", e))
    }

    fn polynomial(&self, key: &str, terms: &[TermSpec], file: Option<&str>, mean: f64) -> Result<TrigPolynomial<f64>, ConfigError> {
        let p = self.dims();
        let mut poly = TrigPolynomial::constant(p, mean);
        for t in terms {
            if t.k.len() != p {
                return Err(invalid(key, format!("wave vector {:?} has length {}, torus dimension is {p}", t.k, t.k.len())));
            }
            poly = poly.add(&t.polynomial());
        }
        if let Some(name) = file {
            let q = TrigPolynomial::read_ndjson(self.open(key, name)?).map_err(|e| invalid(key, e))?;
            if q.dims() != p {
                return Err(invalid(key, format!("coefficient file has dimension {}, expected {p}", q.dims())));
            }
            poly = poly.add(&q);
        }
        Ok(poly)
    }

    pub fn noise_model(&self) -> Result<NoiseModel<f64>, ConfigError> {
        let modes = self
            .noise
            .modes
            .iter()
            .enumerate()
            .map(|(i, m)| {
                let key = format!("noise.modes[{i}]");
                let h = self.polynomial(&key, &m.terms, m.file.as_deref(), 0.0)?;
                let alpha = m.alpha.unwrap_or_else(|| {
                    let (a, b, c) = h.derivative_majorants();
                    a + b + c
                });
                Ok(NoiseMode { h, alpha })
            })
            .collect::<Result<Vec<_>, ConfigError>>()?;
        NoiseModel::new(self.dims(), modes).map_err(|e| invalid("noise", e))
    }

    /// Without an `[[initial]]` entry the single datum is zero.
    pub fn initial_polynomials(&self) -> Result<Vec<TrigPolynomial<f64>>, ConfigError> {
        if self.initial.is_empty() {
            return Ok(vec![TrigPolynomial::zero(self.dims())]);
        }
        self.initial
            .iter()
            .enumerate()
            .map(|(i, d)| self.polynomial(&format!("initial[{i}]"), &d.terms, d.file.as_deref(), d.mean))
            .collect()
    }

    pub fn initial_fields(&self) -> Result<Vec<TorusField<f64>>, ConfigError> {
        Ok(self.initial_polynomials()?.iter().map(|p| p.sample(self.solver.cells)).collect())
    }

    pub fn initial_field(&self, i: usize) -> Result<TorusField<f64>, ConfigError> {
        self.initial_fields()?.into_iter().nth(i).ok_or_else(|| invalid("initial", format!("no datum with index {i}")))
    }

    pub fn solver_config(&self) -> Result<SolverConfig<f64>, ConfigError> {
        let s = &self.solver;
        if s.cells == 0 {
            return Err(invalid("solver.cells", "must be positive"));
        }
        if !(s.t_end >= 0.0) {
            return Err(invalid("solver.t_end", "must be non-negative"));
        }
        if !(s.path_dt > 0.0) {
            return Err(invalid("solver.path_dt", "must be positive"));
        }
        let mut cfg = SolverConfig::new(s.cells, s.t_end);
        cfg.cfl = s.cfl;
        cfg.mu = s.mu;
        cfg.flux_scheme = s.flux_scheme;
        cfg.snapshot_times = s.snapshot_times.clone();
        cfg.max_dt = s.max_dt;
        cfg.entropy_probe = s.entropy_probe.map(|p| EntropyProbe { c: p.c, eps: p.eps });
        Ok(cfg)
    }

    pub fn path_spec(&self, seed: u64) -> PathSpec<f64> {
        PathSpec { seed, dt: self.solver.path_dt }
    }

    pub fn functionals(&self) -> FunctionalSet {
        let i = &self.invariant;
        FunctionalSet::standard(self.dims(), i.fourier_modes, i.sobolev_s, i.sobolev_q)
    }
}
