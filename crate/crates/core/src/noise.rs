//! Brownian increments and the shifted field `J(t, y) = Σ_k h_k(y) β_k(t)`.
//!
//! Gaussian draws are a pure function of `(seed, path_index, mode, step)`:
//! the ChaCha20 key comes from `seed`, the stream id is `path_index`, and
//! draw `(mode, step)` reads the two 64-bit words at word position
//! `mode · 2⁵⁶ + 4 · step`
//! (the ChaCha word counter has 68 bits, leaving room for 4096 modes of
//! 2⁵⁴ steps each). Paths can therefore be generated in any order
//! or on any worker and always agree bit for bit.

use std::io::{BufRead, Write};

use rand::{RngCore, SeedableRng};
use rand_chacha::ChaCha20Rng;
use serde::{Deserialize, Serialize};

use crate::field::TorusField;
use crate::model::NoiseModel;
use crate::scalar::Scalar;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum NoiseError {
    #[error("time step must be positive, got {0}")]
    TimeStep(f64),
    #[error("step {step} is outside the path ({len} steps)")]
    StepRange { step: usize, len: usize },
    #[error("dimension mismatch: {0}")]
    Dimension(String),
    #[error("path file line {line}: {reason}")]
    Parse { line: usize, reason: String },
}

/// Increments `Δβ_k(t_m) ~ N(0, dt)` for `n_modes` independent Brownian
/// motions on the uniform time grid `t_m = m·dt`.
#[derive(Debug, Clone, PartialEq)]
pub struct WienerPath<T> {
    dt: T,
    seed: u64,
    path_index: u64,
    n_steps: usize,
    /// `increments[k][m]`.
    increments: Vec<Vec<T>>,
}

const MODE_SHIFT: u32 = 56;

#[inline]
fn unit_open<Rg: RngCore>(rng: &mut Rg) -> f64 {
    // (0, 1]: 53 random bits, shifted off zero
    ((rng.next_u64() >> 11) as f64 + 1.0) * (1.0 / (1u64 << 53) as f64)
}

#[inline]
fn box_muller<Rg: RngCore>(rng: &mut Rg) -> f64 {
    let u1 = unit_open(rng);
    let u2 = unit_open(rng);
    (-2.0 * u1.ln()).sqrt() * (std::f64::consts::TAU * u2).cos()
}

fn stream(seed: u64, path_index: u64, mode: usize) -> ChaCha20Rng {
    let mut rng = ChaCha20Rng::seed_from_u64(seed);
    rng.set_stream(path_index);
    rng.set_word_pos((mode as u128) << MODE_SHIFT);
    rng
}

/// Standard normal draw for `(seed, path_index, mode, step)`.
pub fn standard_normal(seed: u64, path_index: u64, mode: usize, step: usize) -> f64 {
    let mut rng = ChaCha20Rng::seed_from_u64(seed);
    rng.set_stream(path_index);
    rng.set_word_pos(((mode as u128) << MODE_SHIFT) + 4 * step as u128);
    box_muller(&mut rng)
}

/// Samples a path; identical arguments give bit-identical increments and
/// distinct `path_index` values use disjoint ChaCha streams.
pub fn sample_path<T: Scalar>(
    n_modes: usize,
    n_steps: usize,
    dt: T,
    seed: u64,
    path_index: u64,
) -> Result<WienerPath<T>, NoiseError> {
    if !(dt > T::zero()) || !dt.is_finite() {
        return Err(NoiseError::TimeStep(dt.to_f64_lossy()));
    }
    let sd = dt.to_f64_lossy().sqrt();
    let increments = (0..n_modes)
        .map(|k| {
            let mut rng = stream(seed, path_index, k);
            (0..n_steps).map(|_| T::lit(box_muller(&mut rng) * sd)).collect()
        })
        .collect();
    Ok(WienerPath { dt, seed, path_index, n_steps, increments })
}

impl<T: Scalar> WienerPath<T> {
    /// Path with explicit increments (`increments[k][m]`).
    pub fn from_increments(dt: T, seed: u64, path_index: u64, increments: Vec<Vec<T>>) -> Result<Self, NoiseError> {
        if !(dt > T::zero()) {
            return Err(NoiseError::TimeStep(dt.to_f64_lossy()));
        }
        let n_steps = increments.first().map_or(0, Vec::len);
        if increments.iter().any(|r| r.len() != n_steps) {
            return Err(NoiseError::Dimension("modes have different numbers of steps".into()));
        }
        Ok(Self { dt, seed, path_index, n_steps, increments })
    }

    pub fn dt(&self) -> T {
        self.dt
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn path_index(&self) -> u64 {
        self.path_index
    }

    pub fn n_modes(&self) -> usize {
        self.increments.len()
    }

    pub fn n_steps(&self) -> usize {
        self.n_steps
    }

    /// `Δβ_k` over `[t_m, t_{m+1}]`.
    #[inline]
    pub fn increment(&self, mode: usize, step: usize) -> T {
        self.increments[mode][step]
    }

    pub fn increments(&self, mode: usize) -> &[T] {
        &self.increments[mode]
    }

    /// `β_k(t_n) = Σ_{m<n} Δβ_k(t_m)`, summed in step order.
    pub fn beta(&self, mode: usize, n: usize) -> T {
        self.increments[mode][..n].iter().copied().sum()
    }

    /// `(β_1(t_n), …, β_K(t_n))`.
    pub fn betas(&self, n: usize) -> Vec<T> {
        (0..self.n_modes()).map(|k| self.beta(k, n)).collect()
    }

    /// NDJSON: one header line, then one line per mode.
    pub fn write_ndjson<W: Write>(&self, mut w: W) -> std::io::Result<()> {
        let header = PathHeader {
            seed: self.seed,
            path_index: self.path_index,
            dt: self.dt.to_f64_lossy(),
            n_modes: self.n_modes(),
            n_steps: self.n_steps,
        };
        serde_json::to_writer(&mut w, &header)?;
        writeln!(w)?;
        for (mode, incs) in self.increments.iter().enumerate() {
            let rec = PathRecord { mode, increments: incs.iter().map(|v| v.to_f64_lossy()).collect() };
            serde_json::to_writer(&mut w, &rec)?;
            writeln!(w)?;
        }
        Ok(())
    }

    pub fn read_ndjson<R: BufRead>(r: R) -> Result<Self, NoiseError> {
        let mut lines = r.lines().enumerate().filter(|(_, l)| l.as_ref().map_or(true, |s| !s.trim().is_empty()));
        let parse_err = |line: usize, e: &dyn std::fmt::Display| NoiseError::Parse { line: line + 1, reason: e.to_string() };
        let (ln, first) = lines.next().ok_or(NoiseError::Parse { line: 1, reason: "missing header".into() })?;
        let first = first.map_err(|e| parse_err(ln, &e))?;
        let header: PathHeader = serde_json::from_str(&first).map_err(|e| parse_err(ln, &e))?;
        let mut increments = vec![Vec::new(); header.n_modes];
        let mut seen = vec![false; header.n_modes];
        for (ln, line) in lines {
            let line = line.map_err(|e| parse_err(ln, &e))?;
            let rec: PathRecord = serde_json::from_str(&line).map_err(|e| parse_err(ln, &e))?;
            if rec.mode >= header.n_modes || seen[rec.mode] {
                return Err(parse_err(ln, &format!("unexpected mode {}", rec.mode)));
            }
            if rec.increments.len() != header.n_steps {
                return Err(parse_err(ln, &format!("expected {} increments", header.n_steps)));
            }
            seen[rec.mode] = true;
            increments[rec.mode] = rec.increments.into_iter().map(T::lit).collect();
        }
        if let Some(k) = seen.iter().position(|s| !s) {
            return Err(NoiseError::Parse { line: 0, reason: format!("mode {k} missing") });
        }
        let mut path = Self::from_increments(T::lit(header.dt), header.seed, header.path_index, increments)?;
        path.n_steps = header.n_steps;
        Ok(path)
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
struct PathHeader {
    seed: u64,
    path_index: u64,
    dt: f64,
    n_modes: usize,
    n_steps: usize,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
struct PathRecord {
    mode: usize,
    increments: Vec<f64>,
}

/// `J` on the grid at one time.
#[derive(Debug, Clone, PartialEq)]
pub struct JField<T> {
    pub values: TorusField<T>,
    pub time: T,
}

/// Noise coefficients sampled at the cell centers of one grid.
#[derive(Debug, Clone)]
pub struct NoiseGrid<T> {
    samples: Vec<TorusField<T>>,
    projected: Vec<TorusField<T>>,
}

impl<T: Scalar> NoiseGrid<T> {
    pub fn new(nm: &NoiseModel<T>, cells: usize) -> Self {
        let samples: Vec<TorusField<T>> = nm.modes().iter().map(|m| m.h.sample(cells)).collect();
        let projected = samples
            .iter()
            .map(|s| {
                let mean = s.mean();
                s.map(|v| v - mean)
            })
            .collect();
        Self { samples, projected }
    }

    pub fn n_modes(&self) -> usize {
        self.samples.len()
    }

    /// `h_k` at cell centers.
    pub fn sample(&self, k: usize) -> &TorusField<T> {
        &self.samples[k]
    }

    /// `h_k` at cell centers minus its grid mean.
    pub fn projected(&self, k: usize) -> &TorusField<T> {
        &self.projected[k]
    }

    /// `Σ_k coeff_k · h_k`, from the projected samples if `projected`.
    pub fn combine(&self, coeffs: &[T], projected: bool, out: &mut TorusField<T>) {
        let src = if projected { &self.projected } else { &self.samples };
        out.values_mut().iter_mut().for_each(|v| *v = T::zero());
        for (h, c) in src.iter().zip(coeffs) {
            if *c != T::zero() {
                out.add_scaled(h, *c);
            }
        }
    }
}

/// `J(t_n) = Σ_k h_k β_k(t_n)` at the cell centers of a `cells^P` grid.
pub fn eval_j<T: Scalar>(
    nm: &NoiseModel<T>,
    path: &WienerPath<T>,
    step_index: usize,
    cells: usize,
) -> Result<JField<T>, NoiseError> {
    if step_index > path.n_steps() {
        return Err(NoiseError::StepRange { step: step_index, len: path.n_steps() });
    }
    if path.n_modes() != nm.len() {
        return Err(NoiseError::Dimension(format!("{} modes in the model, {} in the path", nm.len(), path.n_modes())));
    }
    if cells == 0 {
        return Err(NoiseError::Dimension("grid has no cells".into()));
    }
    let grid = NoiseGrid::new(nm, cells);
    let mut values = TorusField::zeros(nm.dims(), cells);
    grid.combine(&path.betas(step_index), false, &mut values);
    Ok(JField { values, time: path.dt() * T::from_usize_lossy(step_index) })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn empty_path() {
        let p = sample_path::<f64>(3, 0, 0.01, 1, 0).unwrap();
        assert_eq!(p.n_steps(), 0);
        assert_eq!(p.betas(0), vec![0.0; 3]);
    }

    #[test]
    fn sequential_and_random_access_agree() {
        let p = sample_path::<f64>(2, 50, 1.0, 42, 7).unwrap();
        for k in 0..2 {
            for m in [0, 1, 17, 49] {
                assert_eq!(p.increment(k, m), standard_normal(42, 7, k, m));
            }
        }
        assert!(sample_path::<f64>(1, 1, 0.0, 0, 0).is_err());
    }

    #[test]
    fn ndjson_round_trip_is_exact() {
        let p = sample_path::<f64>(3, 20, 0.001, 9, 4).unwrap();
        let mut buf = Vec::new();
        p.write_ndjson(&mut buf).unwrap();
        let q = WienerPath::<f64>::read_ndjson(buf.as_slice()).unwrap();
        assert_eq!(p, q);
    }
}
