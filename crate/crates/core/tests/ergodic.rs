use std::f64::consts::PI;
use std::sync::Arc;

use apcl_core::ap_algebra::{FrequencySet, TrigPolynomial};
use apcl_core::ergodic::{
    average_signal, coupling_run, invariance_test, sobolev_surrogate, tightness_from_series, tightness_profile,
    time_average, window_average, ErgodicError, Functional, FunctionalEvaluator, FunctionalSet, InvarianceConfig,
    PathSpec,
};
use apcl_core::field::TorusField;
use apcl_core::fourier::FourierPlan;
use apcl_core::model::{reduce_model, NoiseMode, NoiseModel, ReducedModel, ReductionOptions, ScalarModel};
use apcl_core::solver::{run, SolverConfig};
use proptest::prelude::*;

fn reduce(m: ScalarModel<f64>) -> ReducedModel<f64> {
    let opts = ReductionOptions { half_range: 8.0, nodes_per_unit: 128, ..Default::default() };
    reduce_model(Arc::new(m), FrequencySet::identity(1), 0.0, &opts).unwrap()
}

fn burgers() -> ReducedModel<f64> {
    reduce(ScalarModel::saturated_burgers(vec![1.0], 4.0).unwrap().with_porous_viscosity(vec![1.0], 0.01, 0.01, 1.0).unwrap())
}

fn noise(amp: f64) -> NoiseModel<f64> {
    let modes = [(1, true), (1, false), (2, true), (2, false)]
        .into_iter()
        .map(|(k, cos)| NoiseMode {
            h: if cos { TrigPolynomial::cosine(vec![k], amp) } else { TrigPolynomial::sine(vec![k], amp) },
            alpha: 100.0,
        })
        .collect();
    NoiseModel::new(1, modes).unwrap()
}

fn field(cells: usize, f: impl Fn(f64) -> f64) -> TorusField<f64> {
    TorusField::from_fn(1, cells, |y: &[f64]| f(y[0]))
}

fn retained(cells: usize, t_end: f64) -> SolverConfig<f64> {
    let mut cfg = SolverConfig::new(cells, t_end);
    cfg.retain_states = true;
    cfg.max_dt = Some(t_end / 200.0);
    cfg
}

#[test]
fn constant_trajectory_averages() {
    let rm = burgers();
    let traj = run(&TorusField::constant(1, 32, 0.3), &rm, &NoiseModel::none(1), None, &retained(32, 1.0)).unwrap();
    let avg = time_average(&traj, &FunctionalSet { functionals: vec![Functional::Mean] }, 0.2).unwrap();
    assert!((avg[0].mean - 0.3).abs() < 1e-15);
    assert!(avg[0].se < 1e-15);
}

#[test]
fn zero_solution_averages_vanish() {
    let rm = burgers();
    let traj = run(&TorusField::zeros(1, 32), &rm, &NoiseModel::none(1), None, &retained(32, 1.0)).unwrap();
    let avg = time_average(&traj, &FunctionalSet::standard(1, 2, 1.0, 2.0), 0.0).unwrap();
    assert!(avg.iter().all(|a| a.mean == 0.0 && a.se < 1e-15));
}

#[test]
fn heat_l2_average_matches_the_time_integral() {
    let kappa = 0.05;
    let rm = reduce(ScalarModel::zero(1).with_constant_diffusion(vec![kappa]).unwrap());
    let t_end = 2.0;
    let traj = run(&field(128, |y| (2.0 * PI * y).sin()), &rm, &NoiseModel::none(1), None, &retained(128, t_end)).unwrap();
    let avg = time_average(&traj, &FunctionalSet { functionals: vec![Functional::L2] }, 0.0).unwrap();
    let a = 4.0 * PI * PI * kappa;
    let oracle = (1.0 - (-a * t_end).exp()) / (a * t_end) / 2f64.sqrt();
    assert!((avg[0].mean - oracle).abs() < 1e-3 * oracle, "{} vs {oracle}", avg[0].mean);
}

#[test]
fn too_few_samples_is_an_error() {
    let t: Vec<f64> = (0..30).map(|i| i as f64).collect();
    assert!(matches!(average_signal(&t, &t, 0.0, 29.0), Err(ErgodicError::TooFewSamples { .. })));
}

#[test]
fn mean_average_keeps_the_initial_mean() {
    let rm = burgers();
    let nm = noise(0.2);
    let path = PathSpec { seed: 1, dt: 0.01 }.sample(&nm, 5.0, 0).unwrap();
    let v0 = field(64, |y| 0.25 + 0.5 * (2.0 * PI * y).sin());
    let mut cfg = SolverConfig::new(64, 5.0);
    cfg.retain_states = true;
    let traj = run(&v0, &rm, &nm, Some(&path), &cfg).unwrap();
    let avg = time_average(&traj, &FunctionalSet { functionals: vec![Functional::Mean] }, 1.0).unwrap();
    assert!((avg[0].mean - v0.mean()).abs() <= 1e-10 * v0.mean().abs());
}

#[test]
fn identical_data_do_not_separate() {
    let rm = burgers();
    let v = field(64, |y| (2.0 * PI * y).cos());
    let c = coupling_run(&v, &v, &rm, &noise(0.2), &SolverConfig::new(64, 1.0), &PathSpec { seed: 3, dt: 0.01 }, 0).unwrap();
    assert!(c.d.iter().all(|d| *d == 0.0));
    assert_eq!(c.ratio(), None);
}

#[test]
fn constant_offset_is_transported_unchanged() {
    let rm = reduce(ScalarModel::linear(vec![1.0]));
    let a = field(64, |y| (2.0 * PI * y).sin());
    let b = a.map(|x| x + 0.3);
    let c = coupling_run(&a, &b, &rm, &noise(0.2), &SolverConfig::new(64, 1.0), &PathSpec { seed: 3, dt: 0.01 }, 4).unwrap();
    assert!(c.d.iter().all(|d| (d - 0.3).abs() < 1e-13));
    assert!(c.contracts());
}

#[test]
fn viscous_burgers_merges() {
    let rm = burgers();
    let a = field(128, |y| (2.0 * PI * y).sin());
    let b = field(128, |y| -0.5 * (4.0 * PI * y).cos());
    let c = coupling_run(&a, &b, &rm, &noise(0.2), &SolverConfig::new(128, 5.0), &PathSpec { seed: 9, dt: 0.01 }, 1).unwrap();
    assert!(c.contracts(), "max increase {}", c.max_increase);
    assert!(c.ratio().unwrap() < 0.5);
    let mut buf = Vec::new();
    c.write_csv(&mut buf).unwrap();
    assert!(String::from_utf8(buf).unwrap().starts_with("t,d\n"));
}

#[test]
fn invariance_needs_enough_paths_and_data() {
    let rm = burgers();
    let nm = noise(0.2);
    let cfg = SolverConfig::new(32, 2.0);
    let funcs = FunctionalSet::standard(1, 1, 1.0, 2.0);
    let icfg = InvarianceConfig { n_paths: 5, lag: 0.5, burn_in: 0.2, paths: PathSpec { seed: 1, dt: 0.01 }, first_path: 0 };
    let u = field(32, |y| (2.0 * PI * y).sin());
    assert!(matches!(invariance_test(&[u.clone(), u.clone()], &rm, &nm, &cfg, &funcs, &icfg), Err(ErgodicError::SampleSize { .. })));
    let icfg = InvarianceConfig { n_paths: 10, ..icfg };
    assert!(invariance_test(std::slice::from_ref(&u), &rm, &nm, &cfg, &funcs, &icfg).is_err());
    let r = invariance_test(&[u.clone(), u], &rm, &nm, &cfg, &funcs, &icfg).unwrap();
    // common random numbers make the two data indistinguishable
    assert!(r.comparisons.iter().filter(|c| c.label.starts_with("data")).all(|c| c.a == c.b));
}

#[test]
fn deterministic_decay_agrees_across_data() {
    let rm = reduce(ScalarModel::zero(1).with_constant_diffusion(vec![0.1]).unwrap());
    let cfg = SolverConfig::new(32, 20.0);
    let funcs = FunctionalSet::standard(1, 2, 1.0, 2.0);
    let icfg = InvarianceConfig { n_paths: 10, lag: 2.0, burn_in: 0.5, paths: PathSpec { seed: 1, dt: 0.01 }, first_path: 0 };
    let data = [field(32, |y| (2.0 * PI * y).sin()), field(32, |y| (4.0 * PI * y).cos())];
    let r = invariance_test(&data, &rm, &NoiseModel::none(1), &cfg, &funcs, &icfg).unwrap();
    assert!(r.pass, "{:?}", r.comparisons.iter().filter(|c| !c.pass).collect::<Vec<_>>());
}

#[test]
fn tightness_examples() {
    let rm = burgers();
    let traj = run(&TorusField::zeros(1, 16), &rm, &NoiseModel::none(1), None, &retained(16, 0.5)).unwrap();
    let prof = tightness_profile(&[traj], 1.0, 2.0, &[0.0, 1.0]);
    assert!(prof.rows.iter().all(|r| (r.fraction - 1.0).abs() < 1e-12));
    assert_eq!(prof.average, 0.0);

    let v = field(32, |y| (2.0 * PI * y).cos() + 0.5 * (6.0 * PI * y).sin());
    let c = FourierPlan::new(1, 32).forward(&v);
    // |v̂(±1)| = 1/2, |v̂(±3)| = 1/4
    let direct = 2.0 * 0.5f64.powi(2) + 2.0 * 3f64.powf(1.5) * 0.25f64.powi(2);
    assert!((sobolev_surrogate(&c, 1, 32, 1.5, 2.0) - direct).abs() < 1e-13);
    let eval = FunctionalEvaluator::new(FunctionalSet { functionals: vec![Functional::FourierAbs { k: vec![3] }] }, 1, 32);
    assert!((eval.evaluate(&v)[0] - 0.25).abs() < 1e-14);

    let t = vec![0.0, 1.0, 2.0];
    let prof = tightness_from_series(&[(t, vec![0.0, 2.0, 0.0])], &[1.0]);
    assert!((prof.rows[0].fraction - 0.5).abs() < 1e-15);
    assert!((prof.average - 1.0).abs() < 1e-15);
}

proptest! {
    #[test]
    fn cesaro_windows_compose(values in prop::collection::vec(-10.0f64..10.0, 81), dt in 0.01f64..1.0) {
        let t: Vec<f64> = (0..81).map(|i| i as f64 * dt).collect();
        let tt = t[80];
        let whole = window_average(&t, &values, 0.0, tt).unwrap();
        let first = window_average(&t, &values, 0.0, t[40]).unwrap();
        let second = window_average(&t, &values, t[40], tt).unwrap();
        prop_assert!((whole - 0.5 * (first + second)).abs() <= 1e-12 * (1.0 + whole.abs()));
    }
}
