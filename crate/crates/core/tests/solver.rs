#![allow(clippy::needless_range_loop)]

use std::f64::consts::PI;
use std::sync::Arc;

use apcl_core::ap_algebra::{FrequencySet, TrigPolynomial};
use apcl_core::field::TorusField;
use apcl_core::model::{reduce_model, NoiseMode, NoiseModel, ReducedModel, ReductionOptions, ScalarModel};
use apcl_core::noise::sample_path;
use apcl_core::solver::{
    entropy_residual, run, stable_dt, step, vanishing_viscosity_study, EntropyProbe, FluxScheme, Solver, SolverConfig,
};
use proptest::prelude::*;

fn opts(half_range: f64) -> ReductionOptions<f64> {
    ReductionOptions { half_range, nodes_per_unit: 128, ..Default::default() }
}

fn reduce(m: ScalarModel<f64>, eps: f64, half_range: f64) -> ReducedModel<f64> {
    reduce_model(Arc::new(m), FrequencySet::identity(1), eps, &opts(half_range)).unwrap()
}

fn sine(cells: usize) -> TorusField<f64> {
    TorusField::from_fn(1, cells, |y: &[f64]| (2.0 * PI * y[0]).sin())
}

fn burgers() -> ReducedModel<f64> {
    let m = ScalarModel::saturated_burgers(vec![1.0], 4.0).unwrap().with_porous_viscosity(vec![1.0], 0.01, 0.01, 1.0).unwrap();
    reduce(m, 0.0, 8.0)
}

fn two_mode_noise(amp: f64) -> NoiseModel<f64> {
    let modes = vec![
        NoiseMode { h: TrigPolynomial::cosine(vec![1], amp), alpha: amp * (1.0 + 2.0 * PI + 4.0 * PI * PI) },
        NoiseMode { h: TrigPolynomial::sine(vec![2], amp), alpha: amp * (1.0 + 4.0 * PI + 16.0 * PI * PI) },
    ];
    NoiseModel::new(1, modes).unwrap()
}

#[test]
fn constants_are_steady() {
    let rm = burgers();
    let v = TorusField::constant(1, 32, 0.7);
    let out = step(&v, &rm, &NoiseModel::none(1), &[], stable_dt(&rm, 32, 0.9)).unwrap();
    assert!(out.values().iter().all(|x| (*x - 0.7).abs() < 1e-15));
}

#[test]
fn pure_noise_step_adds_the_projected_mode() {
    let rm = reduce(ScalarModel::zero(1), 0.0, 4.0);
    let nm = NoiseModel::new(1, vec![NoiseMode { h: TrigPolynomial::cosine(vec![3], 0.5), alpha: 100.0 }]).unwrap();
    let v = sine(16);
    let out = step(&v, &rm, &nm, &[0.25], 0.01).unwrap();
    for (i, (a, b)) in out.values().iter().zip(v.values()).enumerate() {
        let y = (i as f64 + 0.5) / 16.0;
        let want = b + 0.25 * 0.5 * (2.0 * PI * 3.0 * y).cos();
        assert!((a - want).abs() < 1e-15);
    }
}

#[test]
fn zero_data_without_noise_stays_zero() {
    let rm = burgers();
    let v0 = TorusField::zeros(1, 32);
    let traj = run(&v0, &rm, &NoiseModel::none(1), None, &SolverConfig::new(32, 0.5)).unwrap();
    assert!(traj.final_state.values().iter().all(|x| *x == 0.0));
    assert!(traj.diagnostics.iter().all(|d| d.l1 == 0.0));
}

#[test]
fn heat_mode_decays_at_the_exact_rate() {
    let kappa = 0.1;
    let rm = reduce(ScalarModel::zero(1).with_constant_diffusion(vec![kappa]).unwrap(), 0.0, 4.0);
    let cfg = SolverConfig::new(256, 0.1);
    let traj = run(&sine(256), &rm, &NoiseModel::none(1), None, &cfg).unwrap();
    let decay = (-4.0 * PI * PI * kappa * 0.1).exp();
    let exact = TorusField::from_fn(1, 256, |y: &[f64]| decay * (2.0 * PI * y[0]).sin());
    let err = traj.final_state.values().iter().zip(exact.values()).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
    assert!(err < 1e-3, "L∞ error {err}");
}

fn advection_error(cells: usize) -> f64 {
    let rm = reduce(ScalarModel::linear(vec![1.0]), 0.0, 4.0);
    let v0 = sine(cells);
    let traj = run(&v0, &rm, &NoiseModel::none(1), None, &SolverConfig::new(cells, 1.0)).unwrap();
    traj.final_state.l1_distance(&v0)
}

#[test]
fn advection_converges_at_first_order() {
    let errs: Vec<f64> = [64, 128, 256, 512].iter().map(|&m| advection_error(m)).collect();
    for w in errs.windows(2) {
        let order = (w[0] / w[1]).log2();
        assert!((0.7..=1.1).contains(&order), "errors {errs:?}");
    }
}

#[test]
fn lax_friedrichs_also_converges() {
    let rm = reduce(ScalarModel::sin_flux(vec![1.0]), 0.0, 4.0);
    let mut cfg = SolverConfig::new(128, 0.2);
    cfg.flux_scheme = FluxScheme::LaxFriedrichs;
    let v0 = TorusField::from_fn(1, 128, |y: &[f64]| 0.5 * (2.0 * PI * y[0]).sin());
    let traj = run(&v0, &rm, &NoiseModel::none(1), None, &cfg).unwrap();
    assert!((traj.final_state.mean() - v0.mean()).abs() < 1e-14);
    let (lo, hi) = traj.final_state.min_max();
    assert!(lo >= -0.5 - 1e-12 && hi <= 0.5 + 1e-12);
}

#[test]
fn mean_is_conserved_under_projected_noise() {
    let rm = burgers();
    let nm = two_mode_noise(0.2);
    let path = sample_path(2, 10_000, 1e-3, 11, 0).unwrap();
    let v0 = TorusField::from_fn(1, 32, |y: &[f64]| 0.5 + 0.3 * (2.0 * PI * y[0]).cos());
    let cfg = SolverConfig::new(32, 10.0);
    let solver = Solver::new(&rm, &nm, 32, FluxScheme::EngquistOsher, 0.0).unwrap();
    let m0 = v0.mean();
    let mut worst: f64 = 0.0;
    let traj = solver.run_observed(&v0, Some(&path), &cfg, |_, _, v| worst = worst.max((v.mean() - m0).abs())).unwrap();
    assert_eq!(traj.diagnostics.len(), 10_000);
    assert!(worst <= 1e-12 * m0.abs(), "drift {worst}");
}

#[test]
fn biharmonic_step_matches_the_multiplier() {
    let rm = reduce(ScalarModel::zero(1), 0.0, 4.0);
    let mut cfg = SolverConfig::new(64, 1e-4);
    cfg.mu = 1.0;
    cfg.max_dt = Some(1e-4);
    let v0 = TorusField::from_fn(1, 64, |y: &[f64]| (2.0 * PI * y[0]).sin() + 0.5 * (4.0 * PI * y[0]).cos());
    let traj = run(&v0, &rm, &NoiseModel::none(1), None, &cfg).unwrap();
    let f1 = (-(2.0 * PI).powi(4) * 1e-4f64).exp();
    let f2 = (-(4.0 * PI).powi(4) * 1e-4f64).exp();
    let exact = TorusField::from_fn(1, 64, |y: &[f64]| f1 * (2.0 * PI * y[0]).sin() + 0.5 * f2 * (4.0 * PI * y[0]).cos());
    let err = traj.final_state.values().iter().zip(exact.values()).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
    assert!(err < 1e-12, "{err}");
}

#[test]
fn snapshots_land_within_one_step() {
    let rm = burgers();
    let nm = two_mode_noise(0.1);
    let path = sample_path(2, 100, 0.01, 3, 0).unwrap();
    let mut cfg = SolverConfig::new(32, 1.0);
    cfg.snapshot_times = vec![0.0, 0.333, 1.0];
    let traj = run(&TorusField::zeros(1, 32), &rm, &nm, Some(&path), &cfg).unwrap();
    assert_eq!(traj.snapshots.len(), 3);
    for s in &traj.snapshots {
        assert!(s.t >= s.requested - 1e-12 && s.t - s.requested < 0.01 + 1e-12);
    }
}

#[test]
fn short_path_is_an_error() {
    let rm = burgers();
    let nm = two_mode_noise(0.1);
    let path = sample_path(2, 10, 0.01, 3, 0).unwrap();
    assert!(run(&TorusField::zeros(1, 16), &rm, &nm, Some(&path), &SolverConfig::new(16, 1.0)).is_err());
    assert!(run(&TorusField::zeros(1, 16), &rm, &nm, None, &SolverConfig::new(16, 0.05)).is_err());
}

#[test]
fn entropy_residual_vanishes_on_constants() {
    let rm = burgers();
    let mut cfg = SolverConfig::new(32, 0.2);
    cfg.retain_states = true;
    let traj = run(&TorusField::constant(1, 32, 0.4), &rm, &NoiseModel::none(1), None, &cfg).unwrap();
    let r = entropy_residual(&traj, &rm, &NoiseModel::none(1), None, 0.3, 0.5).unwrap();
    assert!(r.iter().all(|x| *x <= 1e-12));
}

#[test]
fn entropy_residual_requires_retained_states() {
    let rm = burgers();
    let traj = run(&TorusField::zeros(1, 16), &rm, &NoiseModel::none(1), None, &SolverConfig::new(16, 0.1)).unwrap();
    assert!(entropy_residual(&traj, &rm, &NoiseModel::none(1), None, 0.0, 0.5).is_err());
}

#[test]
fn quadratic_entropy_dissipates_under_heat() {
    let rm = reduce(ScalarModel::zero(1).with_constant_diffusion(vec![0.1]).unwrap(), 0.0, 4.0);
    let mut cfg = SolverConfig::new(64, 0.05);
    cfg.retain_states = true;
    let traj = run(&sine(64), &rm, &NoiseModel::none(1), None, &cfg).unwrap();
    let r = entropy_residual(&traj, &rm, &NoiseModel::none(1), None, 0.0, 1e9).unwrap();
    assert!(r.iter().all(|x| *x <= 1e-8), "{:?}", r.iter().cloned().fold(0.0, f64::max));
}

#[test]
fn probe_and_post_hoc_residuals_agree_with_noise() {
    let rm = burgers();
    let nm = two_mode_noise(0.2);
    let path = sample_path(2, 50, 0.01, 5, 2).unwrap();
    let mut cfg = SolverConfig::new(32, 0.5);
    cfg.retain_states = true;
    cfg.entropy_probe = Some(EntropyProbe { c: 0.1, eps: 0.3 });
    let v0 = TorusField::from_fn(1, 32, |y: &[f64]| 0.3 * (2.0 * PI * y[0]).sin());
    let traj = run(&v0, &rm, &nm, Some(&path), &cfg).unwrap();
    let post = entropy_residual(&traj, &rm, &nm, Some(&path), 0.1, 0.3).unwrap();
    for (d, p) in traj.diagnostics.iter().zip(&post) {
        assert_eq!(d.entropy_violation_max.unwrap(), *p);
    }
}

#[test]
fn equal_viscosities_give_zero_distance() {
    let m = Arc::new(ScalarModel::sin_flux(vec![1.0]));
    let d = vanishing_viscosity_study(
        &sine(32),
        m,
        &FrequencySet::identity(1),
        &opts(4.0),
        &NoiseModel::none(1),
        None,
        &[0.01, 0.01],
        &SolverConfig::new(32, 0.1),
    )
    .unwrap();
    assert_eq!(d, vec![0.0, 0.0]);
}

#[test]
fn viscosity_distance_is_linear_in_epsilon_for_the_heat_flow() {
    // Pure ε-diffusion of sin(2πy): ‖v^ε − v^0‖_{L¹} = (2/π)(1 − e^{−4π²εt}) ≈ (8π εt)
    let m = Arc::new(ScalarModel::zero(1).with_constant_diffusion(vec![0.0]).unwrap());
    let eps = [4e-4, 2e-4, 1e-4, 0.0];
    let t = 0.1;
    let d = vanishing_viscosity_study(
        &sine(128),
        m,
        &FrequencySet::identity(1),
        &opts(4.0),
        &NoiseModel::none(1),
        None,
        &eps,
        &SolverConfig::new(128, t),
    )
    .unwrap();
    for (e, di) in eps.iter().zip(&d).take(3) {
        let oracle = 2.0 / PI * (1.0 - (-4.0 * PI * PI * e * t).exp());
        assert!((di - oracle).abs() < 0.02 * oracle, "eps {e}: {di} vs {oracle}");
    }
    assert!(d[0] > d[1] && d[1] > d[2]);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(12))]

    #[test]
    fn same_path_contracts_in_l1(seed in 0u64..1000, a in -1.0f64..1.0, b in -1.0f64..1.0, shift in 0.0f64..1.0) {
        let rm = burgers();
        let nm = two_mode_noise(0.2);
        let path = sample_path(2, 50, 0.01, seed, 0).unwrap();
        let cells = 64;
        let v1 = TorusField::from_fn(1, cells, |y: &[f64]| a * (2.0 * PI * y[0]).sin());
        let v2 = TorusField::from_fn(1, cells, |y: &[f64]| b * (2.0 * PI * (y[0] + shift)).cos() + 0.2);
        let cfg = SolverConfig::new(cells, 0.5);
        let solver = Solver::new(&rm, &nm, cells, FluxScheme::EngquistOsher, 0.0).unwrap();
        let mut s1 = Vec::new();
        let mut s2 = Vec::new();
        solver.run_observed(&v1, Some(&path), &cfg, |_, _, v| s1.push(v.clone())).unwrap();
        solver.run_observed(&v2, Some(&path), &cfg, |_, _, v| s2.push(v.clone())).unwrap();
        let d: Vec<f64> = s1.iter().zip(&s2).map(|(x, y)| x.l1_distance(y)).collect();
        for w in d.windows(2) {
            prop_assert!(w[1] <= w[0] + 1e-12, "{} -> {}", w[0], w[1]);
        }
    }

    #[test]
    fn shifted_variable_obeys_the_source_bound(seed in 0u64..1000, amp in 0.1f64..1.0) {
        // Pure transport: w = v − J can only leave its initial range through
        // the oscillation of J across one stencil and its change per step.
        let rm = reduce(ScalarModel::saturated_burgers(vec![1.0], 4.0).unwrap(), 0.0, 8.0);
        let nm = two_mode_noise(0.2);
        let cells = 64;
        let path = sample_path(2, 100, 0.002, seed, 1).unwrap();
        prop_assert!(stable_dt(&rm, cells, 0.9) >= 0.002);
        let grid = apcl_core::noise::NoiseGrid::new(&nm, cells);
        let v0 = TorusField::from_fn(1, cells, |y: &[f64]| amp * (2.0 * PI * y[0]).sin());
        let solver = Solver::new(&rm, &nm, cells, FluxScheme::EngquistOsher, 0.0).unwrap();
        let mut states = Vec::new();
        solver.run_observed(&v0, Some(&path), &SolverConfig::new(cells, 0.2), |_, _, v| states.push(v.clone())).unwrap();
        let mut j = TorusField::zeros(1, cells);
        let mut beta = [0.0, 0.0];
        let (mut lo, mut hi) = v0.min_max();
        for (n, v) in states.iter().enumerate() {
            if n > 0 {
                let prev = j.clone();
                for k in 0..2 {
                    beta[k] += path.increment(k, n - 1);
                }
                grid.combine(&beta, true, &mut j);
                let osc = (0..cells)
                    .map(|i| (prev.values()[(i + 1) % cells] - prev.values()[i]).abs().max((prev.values()[(i + cells - 1) % cells] - prev.values()[i]).abs()))
                    .fold(0.0, f64::max);
                let jump = prev.values().iter().zip(j.values()).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
                lo -= osc + jump;
                hi += osc + jump;
            }
            let w: Vec<f64> = v.values().iter().zip(j.values()).map(|(a, b)| a - b).collect();
            for x in w {
                prop_assert!(x >= lo - 1e-12 && x <= hi + 1e-12);
            }
        }
    }
}
