//! One line per headline property, then a single verdict.
//!
//! Lines are written straight to the stderr handle so they show up even
//! when the harness captures test output.

use std::f64::consts::PI;
use std::io::Write;
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::{Path, PathBuf};
use std::sync::Arc;
use std::time::{Duration, Instant};

use apcl_cli::{execute, Command, ExperimentConfig};
use apcl_core::ap_algebra::{lift_polynomial, torus_n1, FrequencySet, TrigPolynomial};
use apcl_core::field::TorusField;
use apcl_core::fourier::FourierPlan;
use apcl_core::model::{reduce_model, NoiseMode, NoiseModel, ReducedModel, ReductionOptions, ScalarModel};
use apcl_core::noise::sample_path;
use apcl_core::nondegeneracy::{iota_theta, kappa_study, SymbolProbe};
use apcl_core::solver::{apply_biharmonic, run, EntropyProbe, FluxScheme, Solver, SolverConfig};
use serde_json::Value;

type Check = fn() -> Result<String, String>;

/// Value of the fitted exponent for `b = sin ξ` on the shipped ladder,
/// recorded from the first computation.
const PINNED_KAPPA: f64 = 0.18346;
/// Largest `d(T)/d(0)` over the shipped coupling runs, recorded likewise
/// and padded by a factor of ten.
const PINNED_MERGE_RATIO: f64 = 1.8e-5;

fn ensure(cond: bool, msg: impl FnOnce() -> String) -> Result<(), String> {
    if cond {
        Ok(())
    } else {
        Err(msg())
    }
}

fn config(name: &str) -> ExperimentConfig {
    ExperimentConfig::load(&Path::new(env!("CARGO_MANIFEST_DIR")).join("../../configs").join(name)).unwrap()
}

fn report(dir: &Path, name: &str) -> Value {
    let v: Value = serde_json::from_str(&std::fs::read_to_string(dir.join(name)).unwrap()).unwrap();
    v["report"].clone()
}

fn reduce(m: ScalarModel<f64>) -> ReducedModel<f64> {
    let opts = ReductionOptions { half_range: 8.0, nodes_per_unit: 128, ..Default::default() };
    reduce_model(Arc::new(m), FrequencySet::identity(1), 0.0, &opts).unwrap()
}

fn burgers() -> ReducedModel<f64> {
    reduce(ScalarModel::saturated_burgers(vec![1.0], 4.0).unwrap().with_porous_viscosity(vec![1.0], 0.01, 0.01, 1.0).unwrap())
}

fn sine(cells: usize, amp: f64) -> TorusField<f64> {
    TorusField::from_fn(1, cells, |y: &[f64]| amp * (2.0 * PI * y[0]).sin())
}

fn max_abs_diff(a: &TorusField<f64>, b: &TorusField<f64>) -> f64 {
    a.values().iter().zip(b.values()).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max)
}

fn isometry() -> Result<String, String> {
    let out = tempfile::tempdir().unwrap();
    let o = execute(Command::Apnorm, &config("apnorm.toml"), None, out.path(), Some(1)).map_err(|e| e.to_string())?;
    let oracle = 2.0 / PI;
    let rows = report(out.path(), "apnorm.json")["study"]["rows"].as_array().unwrap().clone();
    let errs: Vec<f64> = rows.iter().map(|r| (r["cube_n1"].as_f64().unwrap() - oracle).abs() / oracle).collect();
    ensure(errs.windows(2).all(|w| w[1] < w[0]), || format!("errors not decreasing: {errs:?}"))?;
    ensure(errs[errs.len() - 1] < 0.05, || format!("final error {errs:?}"))?;

    let torus = torus_n1(&TrigPolynomial::cosine(vec![1, 0], 1.0).sample(512)).unwrap();
    ensure((torus - oracle).abs() < 1e-4, || format!("torus N1 {torus}"))?;
    // the lift used by the study is the one on the line with frequencies {1, √2}
    let f = FrequencySet::new(vec![vec![1.0], vec![2f64.sqrt()]]).unwrap();
    let u = lift_polynomial(TrigPolynomial::cosine(vec![1, 0], 1.0), f, vec![0.0, 0.0]).unwrap();
    ensure((u.eval(&[0.3]).unwrap() - (2.0 * PI * 0.3).cos()).abs() < 1e-12, || "lift".into())?;
    Ok(format!("relative errors {:.2e} {:.2e} {:.2e}; torus N1 error {:.1e}; {}", errs[0], errs[1], errs[2], (torus - oracle).abs(), o.summary))
}

fn solver_oracles() -> Result<String, String> {
    let rm = reduce(ScalarModel::linear(vec![1.0]));
    let err = |m: usize| {
        let v0 = sine(m, 1.0);
        run(&v0, &rm, &NoiseModel::none(1), None, &SolverConfig::new(m, 1.0)).unwrap().final_state.l1_distance(&v0)
    };
    let (e128, e256) = (err(128), err(256));
    let order = (e128 / e256).log2();
    ensure((0.7..=1.1).contains(&order), || format!("advection order {order}"))?;

    let kappa = 0.1;
    let heat = reduce(ScalarModel::zero(1).with_constant_diffusion(vec![kappa]).unwrap());
    let traj = run(&sine(256, 1.0), &heat, &NoiseModel::none(1), None, &SolverConfig::new(256, 0.1)).unwrap();
    let exact = sine(256, (-4.0 * PI * PI * kappa * 0.1).exp());
    let linf = max_abs_diff(&traj.final_state, &exact);
    ensure(linf < 1e-3, || format!("heat L∞ error {linf}"))?;
    Ok(format!("advection order {order:.3}; heat L∞ error {linf:.2e}"))
}

fn couple_report() -> &'static Value {
    static REPORT: std::sync::OnceLock<Value> = std::sync::OnceLock::new();
    REPORT.get_or_init(|| {
        let out = tempfile::tempdir().unwrap();
        execute(Command::Couple, &config("acceptance.toml"), None, out.path(), None).unwrap();
        report(out.path(), "couple.json")
    })
}

fn contraction() -> Result<String, String> {
    let r = couple_report();
    let runs = r["runs"].as_array().unwrap();
    let paths: std::collections::BTreeSet<u64> = runs.iter().map(|x| x["path_index"].as_u64().unwrap()).collect();
    let pairs: std::collections::BTreeSet<String> = runs.iter().map(|x| x["pair"].to_string()).collect();
    ensure(paths.len() >= 10 && pairs.len() >= 5, || format!("{} paths x {} pairs", paths.len(), pairs.len()))?;
    // d is the normalized distance, so 1e-12·M on the cell sum is 1e-12 here
    let worst = runs.iter().map(|x| x["max_increase"].as_f64().unwrap()).fold(f64::NEG_INFINITY, f64::max);
    let violations: u64 = runs.iter().map(|x| x["violations"].as_u64().unwrap()).sum();
    ensure(violations == 0 && worst <= 1e-12, || format!("{violations} violations, worst increase {worst:e}"))?;
    Ok(format!("{} paths x {} pairs; largest one-step increase {worst:.1e}", paths.len(), pairs.len()))
}

fn merging() -> Result<String, String> {
    let r = couple_report();
    let ratios: Vec<f64> = r["runs"].as_array().unwrap().iter().map(|x| x["ratio"].as_f64().unwrap()).collect();
    let max = ratios.iter().cloned().fold(0.0, f64::max);
    ensure(ratios.len() >= 10 && max < 0.5, || format!("max d(T)/d(0) = {max}"))?;
    ensure(max < PINNED_MERGE_RATIO, || format!("max d(T)/d(0) = {max:e} above the recorded {PINNED_MERGE_RATIO:e}"))?;
    Ok(format!("max d(20)/d(0) over {} runs = {max:.3e}", ratios.len()))
}

fn conservation() -> Result<String, String> {
    let rm = burgers();
    let modes = vec![
        NoiseMode { h: TrigPolynomial::cosine(vec![1], 0.2), alpha: 0.2 * (1.0 + 2.0 * PI + 4.0 * PI * PI) },
        NoiseMode { h: TrigPolynomial::sine(vec![2], 0.2), alpha: 0.2 * (1.0 + 4.0 * PI + 16.0 * PI * PI) },
    ];
    let nm = NoiseModel::new(1, modes).unwrap();
    let path = sample_path(2, 10_000, 1e-3, 11, 0).unwrap();
    let v0 = TorusField::from_fn(1, 64, |y: &[f64]| 0.5 + 0.3 * (2.0 * PI * y[0]).cos());
    let solver = Solver::new(&rm, &nm, 64, FluxScheme::EngquistOsher, 0.0).unwrap();
    let m0 = v0.mean();
    let mut drift: f64 = 0.0;
    let traj = solver
        .run_observed(&v0, Some(&path), &SolverConfig::new(64, 10.0), |_, _, v| drift = drift.max((v.mean() - m0).abs() / m0.abs()))
        .unwrap();
    ensure(traj.diagnostics.len() >= 10_000, || format!("{} steps", traj.diagnostics.len()))?;
    ensure(drift < 1e-10, || format!("relative drift {drift:e}"))?;
    Ok(format!("{} steps, relative drift {drift:.1e}", traj.diagnostics.len()))
}

fn entropy() -> Result<String, String> {
    let probe = |rm: &ReducedModel<f64>, m: usize, v0: TorusField<f64>| {
        let mut cfg = SolverConfig::new(m, 0.1);
        cfg.entropy_probe = Some(EntropyProbe { c: 0.0, eps: 0.5 });
        let traj = run(&v0, rm, &NoiseModel::none(1), None, &cfg).unwrap();
        traj.diagnostics.iter().map(|d| d.entropy_violation_max.unwrap()).fold(f64::NEG_INFINITY, f64::max)
    };
    let mut parts = Vec::new();
    for (name, rm) in [("linear", reduce(ScalarModel::linear(vec![1.0]))), ("burgers", burgers())] {
        let (r64, r128) = (probe(&rm, 64, sine(64, 0.5)), probe(&rm, 128, sine(128, 0.5)));
        ensure(r128 < r64, || format!("{name}: residual {r64:e} -> {r128:e}"))?;
        parts.push(format!("{name} {r64:.3e} -> {r128:.3e}"));
        let r = probe(&rm, 64, TorusField::constant(1, 64, 0.4));
        ensure(r <= 1e-12, || format!("{name}: constant state residual {r:e}"))?;
    }
    Ok(format!("{}; constants <= 1e-12", parts.join(", ")))
}

fn nondegeneracy() -> Result<String, String> {
    let ladder = [1e-4, 3e-4, 1e-3, 3e-3, 1e-2, 3e-2, 1e-1];
    let zero = SymbolProbe::new(ScalarModel::<f64>::zero(1));
    for d in ladder {
        let i = iota_theta(d, &zero).map_err(|e| e.to_string())?.iota;
        ensure((i - PI).abs() <= 1e-6, || format!("degenerate iota({d}) = {i}"))?;
    }

    let mut parabolic = SymbolProbe::new(ScalarModel::<f64>::zero(1).with_constant_diffusion(vec![1.0]).unwrap());
    parabolic.xi_window = 1e8;
    let fit = kappa_study(&ladder, &parabolic).map_err(|e| e.to_string())?.fit.ok_or("no parabolic fit")?;
    ensure((fit.kappa - 1.0).abs() <= 0.05, || format!("parabolic kappa {}", fit.kappa))?;

    let out = tempfile::tempdir().unwrap();
    let o = execute(Command::Nondeg, &config("nondeg_cosine.toml"), None, out.path(), None).map_err(|e| e.to_string())?;
    let s = &report(out.path(), "nondeg.json")["summary"];
    let (kappa, r2) = (s["kappa"].as_f64().ok_or("no fit")?, s["r2"].as_f64().ok_or("no fit")?);
    ensure(o.pass && kappa > 0.0 && kappa < 1.0 && r2 > 0.95, || format!("sin drift kappa {kappa}, r2 {r2}"))?;
    ensure((kappa - PINNED_KAPPA).abs() < 5e-3, || format!("kappa {kappa} moved from {PINNED_KAPPA}"))?;
    Ok(format!("degenerate = pi; parabolic kappa {:.4}; sin drift kappa {kappa:.4} (r2 {r2:.4})", fit.kappa))
}

fn biharmonic() -> Result<String, String> {
    let rm = reduce(ScalarModel::zero(1));
    let nm = NoiseModel::none(1);
    let v0 = sine(64, 1.0);
    let plan = FourierPlan::new(1, 64);
    let mut v = v0.clone();
    apply_biharmonic(&plan, &mut v, 0.0, 1e-3);
    ensure(v == v0, || "mu = 0 changed the field".into())?;
    let same = Solver::new(&rm, &nm, 64, FluxScheme::EngquistOsher, 0.0).unwrap().step(&v0, &[], 1e-3).unwrap();
    ensure(same == v0, || "mu = 0 step changed the field".into())?;

    let (mu, dt) = (1.0, 1e-4);
    let stepped = Solver::new(&rm, &nm, 64, FluxScheme::EngquistOsher, mu).unwrap().step(&v0, &[], dt).unwrap();
    let err = max_abs_diff(&stepped, &sine(64, (-mu * (2.0 * PI).powi(4) * dt).exp()));
    ensure(err < 1e-12, || format!("error {err:e}"))?;
    Ok(format!("identity at mu = 0; one step error {err:.1e}"))
}

fn invariance() -> Result<String, String> {
    let out = tempfile::tempdir().unwrap();
    let o = execute(Command::Invariant, &config("invariance.toml"), None, out.path(), None).map_err(|e| e.to_string())?;
    let r = &report(out.path(), "invariant.json")["invariance"];
    let failed: Vec<String> = r["comparisons"]
        .as_array()
        .unwrap()
        .iter()
        .filter(|c| !c["pass"].as_bool().unwrap())
        .map(|c| format!("{} {}", c["functional"], c["label"]))
        .collect();
    ensure(o.pass && failed.is_empty() && r["n_paths"] == 200, || format!("failed: {failed:?}"))?;
    Ok(o.summary)
}

fn determinism() -> Result<String, String> {
    let cfg = config("simulate.toml");
    let dirs: Vec<PathBuf> = (0..2).map(|_| tempfile::tempdir().unwrap().keep()).collect();
    execute(Command::Simulate, &cfg, Some(11), &dirs[0], Some(1)).map_err(|e| e.to_string())?;
    execute(Command::Simulate, &cfg, Some(11), &dirs[1], None).map_err(|e| e.to_string())?;
    let a = std::fs::read(dirs[0].join("diagnostics.ndjson")).unwrap();
    let b = std::fs::read(dirs[1].join("diagnostics.ndjson")).unwrap();
    for d in &dirs {
        let _ = std::fs::remove_dir_all(d);
    }
    ensure(a == b, || "diagnostics differ".into())?;
    Ok(format!("{} identical bytes", a.len()))
}

#[test]
fn primary_criteria() {
    let checks: [(&str, Check); 10] = [
        ("isometry", isometry),
        ("solver oracles", solver_oracles),
        ("pathwise contraction", contraction),
        ("merging", merging),
        ("conservation", conservation),
        ("entropy inequality", entropy),
        ("non-degeneracy functional", nondegeneracy),
        ("biharmonic multiplier", biharmonic),
        ("invariance", invariance),
        ("determinism", determinism),
    ];
    let mut failed = Vec::new();
    let mut err = std::io::stderr();
    for (name, check) in checks {
        let start = Instant::now();
        let result = catch_unwind(AssertUnwindSafe(check)).unwrap_or_else(|p| {
            Err(p.downcast_ref::<String>().cloned().or(p.downcast_ref::<&str>().map(|s| s.to_string())).unwrap_or_default())
        });
        let secs = Duration::as_secs_f64(&start.elapsed());
        let line = match &result {
            Ok(detail) => format!("PASS  {name:<26} {secs:>7.2}s  {detail}"),
            Err(why) => format!("FAIL  {name:<26} {secs:>7.2}s  {why}"),
        };
        writeln!(err, "{line}").unwrap();
        if result.is_err() {
            failed.push(line);
        }
    }
    assert!(failed.is_empty(), "{}", failed.join("\n"));
}
