use std::path::Path;

use apcl_core::ap_algebra::{isometry_study, lift_polynomial, torus_n1, Independence, IsometryStudy};
use apcl_core::ergodic::{coupling_run, invariance_test, tightness_profile, InvarianceConfig, InvarianceReport, TightnessProfile};
use apcl_core::model::{uniform_samples, validate_model, validate_noise, ModelReport, NoiseReport};
use apcl_core::nondegeneracy::{kappa_study, KappaSummary, SymbolProbe};
use apcl_core::solver::{run, Snapshot};
use anyhow::{bail, Context};
use rayon::prelude::*;
use serde::Serialize;

use crate::config::ExperimentConfig;
use crate::output::{Header, OutputDir};

#[derive(Debug, Clone, Copy, PartialEq, Eq, clap::ValueEnum)]
pub enum Command {
    Validate,
    Simulate,
    Couple,
    Invariant,
    Nondeg,
    Apnorm,
}

/// `pass == false` is a property failure, not an error.
#[derive(Debug, Clone)]
pub struct Outcome {
    pub pass: bool,
    pub summary: String,
    pub files: Vec<std::path::PathBuf>,
}

/// Runs `cmd` on a pool of `jobs` workers (all cores if `None`) and writes
/// its files under `out`.
pub fn execute(cmd: Command, cfg: &ExperimentConfig, seed: Option<u64>, out: &Path, jobs: Option<usize>) -> anyhow::Result<Outcome> {
    let seed = seed.unwrap_or(cfg.seed);
    let mut dir = OutputDir::create(out, Header::new(cfg.hash(), seed)).with_context(|| format!("creating {}", out.display()))?;
    let mut pool = rayon::ThreadPoolBuilder::new();
    if let Some(j) = jobs {
        pool = pool.num_threads(j.max(1));
    }
    let pool = pool.build()?;
    let (pass, summary) = pool.install(|| match cmd {
        Command::Validate => validate(cfg, &mut dir),
        Command::Simulate => simulate(cfg, seed, &mut dir),
        Command::Couple => couple(cfg, seed, &mut dir),
        Command::Invariant => invariant(cfg, seed, &mut dir),
        Command::Nondeg => nondeg(cfg, &mut dir),
        Command::Apnorm => apnorm(cfg, &mut dir),
    })?;
    Ok(Outcome { pass, summary, files: dir.written().to_vec() })
}

#[derive(Debug, Serialize)]
struct IndependenceReport {
    independent: bool,
    bound: Option<u64>,
    witness: Option<Vec<i64>>,
}

#[derive(Debug, Serialize)]
struct ValidateReport {
    pass: bool,
    model: ModelReport,
    noise: NoiseReport,
    frequencies: IndependenceReport,
    errors: Vec<String>,
}

pub fn validate(cfg: &ExperimentConfig, dir: &mut OutputDir) -> anyhow::Result<(bool, String)> {
    let model = cfg.scalar_model()?;
    let freqs = cfg.frequencies(model.dim())?;
    let h = cfg.frequencies.half_range;
    let model_report = validate_model(&model, &uniform_samples(-h, h, cfg.reduction_options().validation_samples));
    let noise_report = validate_noise(&cfg.noise_model()?);
    let frequencies = match freqs.check_z_independence() {
        Independence::Independent { bound } => IndependenceReport { independent: true, bound: Some(bound), witness: None },
        Independence::Dependent { witness } => IndependenceReport { independent: false, bound: None, witness: Some(witness) },
    };
    let mut errors = Vec::new();
    if let Err(e) = cfg.initial_fields() {
        errors.push(e.to_string());
    }
    if let Err(e) = cfg.solver_config() {
        errors.push(e.to_string());
    }
    let pass = model_report.passed() && noise_report.passed() && frequencies.independent && errors.is_empty();
    let summary = match &frequencies.witness {
        Some(w) => format!("validate: fail (frequency relation {w:?})"),
        None => format!("validate: {}", if pass { "pass" } else { "fail" }),
    };
    let report = ValidateReport { pass, model: model_report, noise: noise_report, frequencies, errors };
    dir.json("validate.json", &report)?;
    Ok((pass, summary))
}

pub fn simulate(cfg: &ExperimentConfig, seed: u64, dir: &mut OutputDir) -> anyhow::Result<(bool, String)> {
    let rm = cfg.reduced_model()?;
    let nm = cfg.noise_model()?;
    let scfg = cfg.solver_config()?;
    let v0 = cfg.initial_field(0)?;
    let path = if nm.is_empty() { None } else { Some(cfg.path_spec(seed).sample(&nm, scfg.t_end, cfg.solver.path_index)?) };
    let traj = run(&v0, &rm, &nm, path.as_ref(), &scfg)?;
    dir.ndjson("diagnostics.ndjson", |w| traj.write_diagnostics_ndjson(w))?;
    for (k, s) in traj.snapshots.iter().enumerate() {
        dir.csv(&format!("snapshots/snapshot_{k:03}.csv"), |w| s.write_csv(w))?;
    }
    let last = Snapshot { requested: scfg.t_end, t: scfg.t_end, field: traj.final_state.clone() };
    dir.csv("final.csv", |w| last.write_csv(w))?;
    Ok((true, format!("simulate: {} steps, final mean {:e}", traj.diagnostics.len(), traj.final_state.mean())))
}

#[derive(Debug, Serialize)]
struct CoupleRun {
    path_index: u64,
    pair: [usize; 2],
    d0: f64,
    d_end: f64,
    ratio: Option<f64>,
    max_increase: f64,
    violations: usize,
    file: String,
}

#[derive(Debug, Serialize)]
struct CoupleReport {
    pass: bool,
    contracts: bool,
    max_ratio: Option<f64>,
    merge_ratio: Option<f64>,
    runs: Vec<CoupleRun>,
}

pub fn couple(cfg: &ExperimentConfig, seed: u64, dir: &mut OutputDir) -> anyhow::Result<(bool, String)> {
    let rm = cfg.reduced_model()?;
    let nm = cfg.noise_model()?;
    let scfg = cfg.solver_config()?;
    let data = cfg.initial_fields()?;
    let spec = cfg.path_spec(seed);
    for p in &cfg.couple.pairs {
        if p.iter().any(|&i| i >= data.len()) {
            bail!("couple.pairs: index out of range in {p:?} ({} initial data)", data.len());
        }
    }
    let jobs: Vec<(u64, usize)> =
        (0..cfg.n_paths as u64).flat_map(|p| (0..cfg.couple.pairs.len()).map(move |q| (p, q))).collect();
    let series = jobs
        .par_iter()
        .map(|&(p, q)| {
            let [a, b] = cfg.couple.pairs[q];
            coupling_run(&data[a], &data[b], &rm, &nm, &scfg, &spec, p)
        })
        .collect::<Result<Vec<_>, _>>()?;
    let mut runs = Vec::with_capacity(series.len());
    for (&(p, q), s) in jobs.iter().zip(&series) {
        let file = format!("coupling/path{p:04}_pair{q:02}.csv");
        dir.csv(&file, |w| s.write_csv(w))?;
        runs.push(CoupleRun {
            path_index: p,
            pair: cfg.couple.pairs[q],
            d0: s.d.first().copied().unwrap_or(0.0),
            d_end: s.d.last().copied().unwrap_or(0.0),
            ratio: s.ratio(),
            max_increase: s.max_increase,
            violations: s.violations.len(),
            file,
        });
    }
    let contracts = series.iter().all(|s| s.contracts());
    let max_ratio = runs.iter().filter_map(|r| r.ratio).reduce(f64::max);
    let merged = match cfg.couple.merge_ratio {
        Some(bound) => runs.iter().all(|r| r.ratio.is_none_or(|x| x < bound)),
        None => true,
    };
    let pass = contracts && merged;
    let report = CoupleReport { pass, contracts, max_ratio, merge_ratio: cfg.couple.merge_ratio, runs };
    dir.json("couple.json", &report)?;
    Ok((pass, format!("couple: {} runs, contracts {contracts}, max d(T)/d(0) {:?}", report.runs.len(), max_ratio)))
}

#[derive(Debug, Serialize)]
struct InvariantOutput {
    invariance: InvarianceReport,
    tightness: Option<TightnessProfile>,
}

pub fn invariant(cfg: &ExperimentConfig, seed: u64, dir: &mut OutputDir) -> anyhow::Result<(bool, String)> {
    let rm = cfg.reduced_model()?;
    let nm = cfg.noise_model()?;
    let scfg = cfg.solver_config()?;
    let data = cfg.initial_fields()?;
    let funcs = cfg.functionals();
    let inv = &cfg.invariant;
    let icfg = InvarianceConfig {
        n_paths: cfg.n_paths,
        lag: inv.lag,
        burn_in: inv.burn_in,
        paths: cfg.path_spec(seed),
        first_path: inv.first_path,
    };
    let report = invariance_test(&data, &rm, &nm, &scfg, &funcs, &icfg)?;
    let tightness = if inv.tightness_radii.is_empty() {
        None
    } else {
        let mut tcfg = scfg.clone();
        tcfg.retain_states = true;
        let spec = cfg.path_spec(seed);
        let trajs = (0..inv.tightness_paths.min(cfg.n_paths) as u64)
            .into_par_iter()
            .map(|p| {
                let path = spec.sample(&nm, tcfg.t_end, inv.first_path + p)?;
                Ok(run(&data[0], &rm, &nm, (!nm.is_empty()).then_some(&path), &tcfg)?)
            })
            .collect::<anyhow::Result<Vec<_>>>()?;
        let prof = tightness_profile(&trajs, inv.sobolev_s, inv.sobolev_q, &inv.tightness_radii);
        dir.csv("tightness.csv", |w| prof.write_csv(w))?;
        Some(prof)
    };
    let pass = report.pass;
    let failed = report.comparisons.iter().filter(|c| !c.pass).count();
    let summary = format!("invariant: {} comparisons, {failed} outside tolerance", report.comparisons.len());
    dir.json("invariant.json", &InvariantOutput { invariance: report, tightness })?;
    Ok((pass, summary))
}

#[derive(Debug, Serialize)]
struct NondegOutput {
    summary: KappaSummary,
    kappa_range: [f64; 2],
    pass: bool,
}

pub fn nondeg(cfg: &ExperimentConfig, dir: &mut OutputDir) -> anyhow::Result<(bool, String)> {
    let model = cfg.scalar_model()?;
    let n = &cfg.nondeg;
    let mut probe = SymbolProbe::new(&model);
    probe.nu = n.nu;
    probe.xi_window = n.xi_window;
    probe.xi_core = n.xi_core;
    probe.n_max = n.n_max;
    probe.alpha_points = n.alpha_points;
    let report = kappa_study(&n.deltas, &probe)?;
    dir.csv("nondeg.csv", |w| report.write_csv(w))?;
    let summary = report.summary();
    let [lo, hi] = n.kappa_range;
    let pass = summary.kappa.is_some_and(|k| k > lo && k < hi);
    let line = match summary.kappa {
        Some(k) => format!("nondeg: kappa {k:.4}, r2 {:.4}", summary.r2.unwrap_or(f64::NAN)),
        None => format!("nondeg: no fit ({})", summary.fit_error.as_deref().unwrap_or("unknown")),
    };
    dir.json("nondeg.json", &NondegOutput { summary, kappa_range: n.kappa_range, pass })?;
    Ok((pass, line))
}

#[derive(Debug, Serialize)]
struct ApnormOutput {
    torus_n1: f64,
    study: IsometryStudy,
    tolerance: f64,
    pass: bool,
}

pub fn apnorm(cfg: &ExperimentConfig, dir: &mut OutputDir) -> anyhow::Result<(bool, String)> {
    let a = &cfg.apnorm;
    let model_dim = cfg.model.direction.len();
    let freqs = cfg.frequencies(model_dim)?;
    let poly = cfg
        .initial_polynomials()?
        .into_iter()
        .nth(a.datum)
        .with_context(|| format!("apnorm.datum: no initial datum with index {}", a.datum))?;
    let reference = torus_n1(&poly.sample(a.torus_cells))?;
    let field = lift_polynomial(poly, freqs, vec![0.0; cfg.dims()])?;
    let study = isometry_study(&field, reference, &a.sides, a.samples_per_unit)?;
    dir.csv("apnorm.csv", |w| {
        let mut wr = csv::Writer::from_writer(w);
        wr.write_record(["R", "cube_n1", "torus_n1", "abs_error", "rel_error"])?;
        for r in &study.rows {
            wr.write_record([r.r, r.cube_n1, r.torus_n1, r.abs_error, r.rel_error].map(|x| x.to_string()))?;
        }
        wr.flush()?;
        Ok(())
    })?;
    let last = study.rows.last().map_or(f64::INFINITY, |r| r.rel_error);
    let pass = study.decreasing && last < a.tolerance;
    let summary = format!("apnorm: torus N1 {reference:.6}, final relative error {last:.3e}, decreasing {}", study.decreasing);
    dir.json("apnorm.json", &ApnormOutput { torus_n1: reference, study, tolerance: a.tolerance, pass })?;
    Ok((pass, summary))
}
