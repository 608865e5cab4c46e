use std::path::{Path, PathBuf};
use std::process::Command as Process;

use apcl_cli::{execute, Command, ExperimentConfig};

const SMALL: &str = r#"
seed = 3
n_paths = 2

[model]
name = "saturated_burgers"
diffusion = { kind = "porous", diag = [1.0], kappa0 = 0.01, kappa1 = 0.01, u_sat = 1.0 }

[frequencies]
half_range = 8.0

[noise]
modes = [{ terms = [{ k = [1], kind = "cos", amp = 0.2 }] }]

[solver]
cells = 32
t_end = 0.5

[[initial]]
terms = [{ k = [1], kind = "sin", amp = 0.5 }]

[[initial]]
terms = [{ k = [1], kind = "sin", amp = 0.5 }]
"#;

fn repo_config(name: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../../configs").join(name)
}

fn write_config(dir: &Path, text: &str) -> PathBuf {
    let p = dir.join("exp.toml");
    std::fs::write(&p, text).unwrap();
    p
}

fn report(dir: &Path, name: &str) -> serde_json::Value {
    let v: serde_json::Value = serde_json::from_str(&std::fs::read_to_string(dir.join(name)).unwrap()).unwrap();
    v["report"].clone()
}

/// Data rows of a CSV written by the tool (comment header and column line dropped).
fn rows(path: &Path) -> Vec<Vec<String>> {
    std::fs::read_to_string(path).unwrap().lines().skip(2).map(|l| l.split(',').map(String::from).collect()).collect()
}

#[test]
fn empty_noise_validates() {
    let cfg = ExperimentConfig::parse(&SMALL.replace(r#"modes = [{ terms = [{ k = [1], kind = "cos", amp = 0.2 }] }]"#, "modes = []")).unwrap();
    let out = tempfile::tempdir().unwrap();
    let o = execute(Command::Validate, &cfg, None, out.path(), Some(1)).unwrap();
    assert!(o.pass, "{}", o.summary);
    assert_eq!(report(out.path(), "validate.json")["noise"]["d0"], 0.0);
}

#[test]
fn dependent_frequencies_fail_with_a_witness() {
    let text = r#"
[model]
name = "linear"
[frequencies]
generators = [[1.0], [2.0]]
[solver]
cells = 16
t_end = 0.1
"#;
    let cfg = ExperimentConfig::parse(text).unwrap();
    let out = tempfile::tempdir().unwrap();
    let o = execute(Command::Validate, &cfg, None, out.path(), Some(1)).unwrap();
    assert!(!o.pass);
    let w: Vec<i64> = serde_json::from_value(report(out.path(), "validate.json")["frequencies"]["witness"].clone()).unwrap();
    assert_eq!(w[0] + w[1] * 2, 0);
    assert!(w.iter().any(|m| *m != 0));
}

#[test]
fn shipped_acceptance_config_validates() {
    let cfg = ExperimentConfig::load(&repo_config("acceptance.toml")).unwrap();
    let out = tempfile::tempdir().unwrap();
    assert!(execute(Command::Validate, &cfg, None, out.path(), Some(1)).unwrap().pass);
}

#[test]
fn zero_model_simulation_gives_zero_snapshots() {
    let text = r#"
[model]
name = "zero"
[solver]
cells = 16
t_end = 0.5
max_dt = 0.05
snapshot_times = [0.0, 0.25, 0.5]
"#;
    let cfg = ExperimentConfig::parse(text).unwrap();
    let out = tempfile::tempdir().unwrap();
    assert!(execute(Command::Simulate, &cfg, None, out.path(), Some(1)).unwrap().pass);
    for k in 0..3 {
        let r = rows(&out.path().join(format!("snapshots/snapshot_{k:03}.csv")));
        assert_eq!(r.len(), 16);
        assert!(r.iter().all(|row| row[2].parse::<f64>().unwrap() == 0.0));
    }
}

#[test]
fn identical_data_couple_at_zero_distance() {
    let cfg = ExperimentConfig::parse(SMALL).unwrap();
    let out = tempfile::tempdir().unwrap();
    let o = execute(Command::Couple, &cfg, None, out.path(), Some(1)).unwrap();
    assert!(o.pass);
    for p in 0..2 {
        let r = rows(&out.path().join(format!("coupling/path{p:04}_pair00.csv")));
        assert!(!r.is_empty());
        assert!(r.iter().all(|row| row[1].parse::<f64>().unwrap() == 0.0));
    }
}

#[test]
fn apnorm_error_decreases_toward_two_over_pi() {
    let cfg = ExperimentConfig::load(&repo_config("apnorm.toml")).unwrap();
    let out = tempfile::tempdir().unwrap();
    let o = execute(Command::Apnorm, &cfg, None, out.path(), Some(1)).unwrap();
    assert!(o.pass, "{}", o.summary);
    let oracle = 2.0 / std::f64::consts::PI;
    let r = rows(&out.path().join("apnorm.csv"));
    let errs: Vec<f64> = r.iter().map(|row| (row[1].parse::<f64>().unwrap() - oracle).abs() / oracle).collect();
    assert!(errs.windows(2).all(|w| w[1] < w[0]) && errs[2] < 0.05, "{errs:?}");
}

#[test]
fn every_file_carries_the_header() {
    let cfg = ExperimentConfig::parse(SMALL).unwrap();
    let out = tempfile::tempdir().unwrap();
    let o = execute(Command::Simulate, &cfg, Some(99), out.path(), Some(1)).unwrap();
    let hash = cfg.hash();
    assert_eq!(hash.len(), 64);
    for f in &o.files {
        let first = std::fs::read_to_string(f).unwrap().lines().next().unwrap().to_string();
        assert!(first.contains(&hash) && first.contains("99") && first.contains(env!("CARGO_PKG_VERSION")), "{first}");
    }
    // no temporary files left behind
    let names: Vec<_> = std::fs::read_dir(out.path()).unwrap().map(|e| e.unwrap().file_name()).collect();
    assert!(names.iter().all(|n| !n.to_string_lossy().starts_with(".tmp")), "{names:?}");
}

#[test]
fn hash_ignores_formatting_but_not_values() {
    let a = ExperimentConfig::parse(SMALL).unwrap();
    let b = ExperimentConfig::parse(&format!("# comment\n{SMALL}\n\n")).unwrap();
    let c = ExperimentConfig::parse(&SMALL.replace("t_end = 0.5", "t_end = 0.6")).unwrap();
    assert_eq!(a.hash(), b.hash());
    assert_ne!(a.hash(), c.hash());
}

#[test]
fn parse_errors_name_the_key() {
    let e = ExperimentConfig::parse(&SMALL.replace("cells = 32", "cells = \"many\"")).unwrap_err();
    assert!(e.to_string().contains("cells"), "{e}");
    let e = ExperimentConfig::parse(&SMALL.replace("[solver]", "[solver]\nbogus = 1")).unwrap_err();
    assert!(e.to_string().contains("bogus"), "{e}");
}

#[test]
fn exit_codes() {
    let dir = tempfile::tempdir().unwrap();
    let bin = env!("CARGO_BIN_EXE_apcl");

    let ok = write_config(dir.path(), SMALL);
    let s = Process::new(bin).args(["simulate", "--config"]).arg(&ok).arg("--out").arg(dir.path().join("a")).status().unwrap();
    assert_eq!(s.code(), Some(0));

    let dep = SMALL.replace("[frequencies]", "[frequencies]\ngenerators = [[1.0], [3.0]]");
    let dep = dep.replace("k = [1]", "k = [1, 0]");
    let p = write_config(dir.path(), &dep);
    let s = Process::new(bin).args(["validate", "--config"]).arg(&p).arg("--out").arg(dir.path().join("b")).status().unwrap();
    assert_eq!(s.code(), Some(2));

    let s = Process::new(bin).args(["simulate", "--config"]).arg(dir.path().join("missing.toml")).status().unwrap();
    assert_eq!(s.code(), Some(1));

    // OUTPUT_DIR stands in for --out
    let ok = write_config(dir.path(), SMALL);
    let s = Process::new(bin)
        .args(["simulate", "--config"])
        .arg(&ok)
        .env("OUTPUT_DIR", dir.path().join("env"))
        .status()
        .unwrap();
    assert_eq!(s.code(), Some(0));
    assert!(dir.path().join("env/diagnostics.ndjson").exists());
}
