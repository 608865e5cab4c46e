use std::collections::BTreeMap;
use std::io::{BufRead, Write};

use num_complex::Complex;
use serde::{Deserialize, Serialize};

use super::{ApError, FrequencySet};
use crate::field::TorusField;
use crate::scalar::Scalar;

/// Tolerance for Hermitian consistency of mirrored coefficients.
const HERMITIAN_TOL: f64 = 1e-12;

/// Real trigonometric polynomial `p(y) = Σ_k a_k e^{2πi k·y}` on `T^P`
/// with finite support and `a_{−k} = conj(a_k)`.
///
/// Through `y = y(x)` it is simultaneously an almost-periodic function on
/// `R^N` whose spectrum lies in the group generated by the frequency set.
#[derive(Debug, Clone, PartialEq)]
pub struct TrigPolynomial<T> {
    dims: usize,
    coeffs: BTreeMap<Vec<i64>, Complex<T>>,
}

/// One NDJSON record of the coefficient file format.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CoefficientRecord {
    pub k: Vec<i64>,
    pub re: f64,
    pub im: f64,
}

fn neg(k: &[i64]) -> Vec<i64> {
    k.iter().map(|v| -v).collect()
}

impl<T: Scalar> TrigPolynomial<T> {
    pub fn zero(dims: usize) -> Self {
        Self { dims, coeffs: BTreeMap::new() }
    }

    pub fn constant(dims: usize, c: T) -> Self {
        let mut p = Self::zero(dims);
        if c != T::zero() {
            p.coeffs.insert(vec![0; dims], Complex::new(c, T::zero()));
        }
        p
    }

    /// `amp · cos(2π k·y)`.
    pub fn cosine(k: Vec<i64>, amp: T) -> Self {
        let dims = k.len();
        if k.iter().all(|v| *v == 0) {
            return Self::constant(dims, amp);
        }
        let half = amp * T::lit(0.5);
        let mut p = Self::zero(dims);
        p.coeffs.insert(neg(&k), Complex::new(half, T::zero()));
        p.coeffs.insert(k, Complex::new(half, T::zero()));
        p
    }

    /// `amp · sin(2π k·y)`.
    pub fn sine(k: Vec<i64>, amp: T) -> Self {
        let dims = k.len();
        if k.iter().all(|v| *v == 0) {
            return Self::zero(dims);
        }
        let half = amp * T::lit(0.5);
        let mut p = Self::zero(dims);
        p.coeffs.insert(neg(&k), Complex::new(T::zero(), half));
        p.coeffs.insert(k, Complex::new(T::zero(), -half));
        p
    }

    /// Builds a polynomial from coefficient terms, completing missing
    /// mirror coefficients and rejecting contradictory ones.
    pub fn from_terms<I>(dims: usize, terms: I) -> Result<Self, ApError>
    where
        I: IntoIterator<Item = (Vec<i64>, Complex<T>)>,
    {
        let tol = T::lit(HERMITIAN_TOL);
        let mut given: BTreeMap<Vec<i64>, Complex<T>> = BTreeMap::new();
        for (k, a) in terms {
            if k.len() != dims {
                return Err(ApError::Dimension { expected: dims, got: k.len() });
            }
            if !(a.re.is_finite() && a.im.is_finite()) {
                return Err(ApError::Hermitian { k, reason: "non-finite coefficient".into() });
            }
            if let Some(prev) = given.get(&k) {
                if (*prev - a).norm() > tol * (T::one() + a.norm()) {
                    return Err(ApError::Hermitian { k, reason: "duplicate with a different value".into() });
                }
                continue;
            }
            given.insert(k, a);
        }
        let mut coeffs = given.clone();
        for (k, a) in &given {
            let mk = neg(k);
            if *k == mk {
                if a.im.abs() > tol * (T::one() + a.re.abs()) {
                    return Err(ApError::Hermitian { k: k.clone(), reason: "zero-frequency coefficient must be real".into() });
                }
                coeffs.insert(k.clone(), Complex::new(a.re, T::zero()));
                continue;
            }
            match given.get(&mk) {
                Some(b) => {
                    if (*b - a.conj()).norm() > tol * (T::one() + a.norm()) {
                        return Err(ApError::Hermitian {
                            k: k.clone(),
                            reason: "mirror coefficient is not the complex conjugate".into(),
                        });
                    }
                }
                None => {
                    coeffs.insert(mk, a.conj());
                }
            }
        }
        coeffs.retain(|_, a| *a != Complex::new(T::zero(), T::zero()));
        Ok(Self { dims, coeffs })
    }

    pub fn dims(&self) -> usize {
        self.dims
    }

    pub fn coefficients(&self) -> &BTreeMap<Vec<i64>, Complex<T>> {
        &self.coeffs
    }

    pub fn coefficient(&self, k: &[i64]) -> Complex<T> {
        self.coeffs.get(k).copied().unwrap_or_else(|| Complex::new(T::zero(), T::zero()))
    }

    pub fn is_zero(&self) -> bool {
        self.coeffs.is_empty()
    }

    /// Largest `|k_j|` over the support.
    pub fn max_frequency(&self) -> i64 {
        self.coeffs.keys().flat_map(|k| k.iter().map(|v| v.abs())).max().unwrap_or(0)
    }

    /// Mean value `M(p) = Re a_0`; exact for trigonometric polynomials.
    pub fn mean_value(&self) -> T {
        self.coefficient(&vec![0; self.dims]).re
    }

    /// `Sp(p) = { Σ_j k_j λ_j : a_k ≠ 0 }`, in coefficient order.
    pub fn spectrum(&self, freqs: &FrequencySet<T>) -> Result<Vec<Vec<T>>, ApError> {
        if freqs.rank() != self.dims {
            return Err(ApError::Dimension { expected: freqs.rank(), got: self.dims });
        }
        Ok(self.coeffs.keys().map(|k| freqs.group_element(k)).collect())
    }

    #[inline]
    fn phase(k: &[i64], y: &[T]) -> T {
        let mut s = T::zero();
        for (kj, yj) in k.iter().zip(y) {
            s += T::from_i64(*kj).unwrap() * *yj;
        }
        s * T::two_pi()
    }

    pub fn eval(&self, y: &[T]) -> T {
        let mut s = T::zero();
        for (k, a) in &self.coeffs {
            let th = Self::phase(k, y);
            s += a.re * th.cos() - a.im * th.sin();
        }
        s
    }

    /// Exact gradient at `y`.
    pub fn gradient(&self, y: &[T]) -> Vec<T> {
        let mut g = vec![T::zero(); self.dims];
        for (k, a) in &self.coeffs {
            let th = Self::phase(k, y);
            // Re(a · 2πi k_j e^{iθ})
            let v = -(a.re * th.sin() + a.im * th.cos()) * T::two_pi();
            for (gj, kj) in g.iter_mut().zip(k) {
                *gj += v * T::from_i64(*kj).unwrap();
            }
        }
        g
    }

    /// Exact Hessian at `y` (row-major `P × P`).
    pub fn hessian(&self, y: &[T]) -> Vec<T> {
        let p = self.dims;
        let mut h = vec![T::zero(); p * p];
        let tp2 = T::two_pi() * T::two_pi();
        for (k, a) in &self.coeffs {
            let th = Self::phase(k, y);
            let v = -(a.re * th.cos() - a.im * th.sin()) * tp2;
            for j in 0..p {
                for l in 0..p {
                    h[j * p + l] += v * T::from_i64(k[j] * k[l]).unwrap();
                }
            }
        }
        h
    }

    /// Coefficient majorants of `sup|p|`, `sup|∇p|` and `sup|D²p|`.
    pub fn derivative_majorants(&self) -> (T, T, T) {
        let mut m0 = T::zero();
        let mut m1 = T::zero();
        let mut m2 = T::zero();
        for (k, a) in &self.coeffs {
            let r = a.norm();
            let k2: T = k.iter().map(|v| T::from_i64(v * v).unwrap()).sum();
            m0 += r;
            m1 += r * k2.sqrt();
            m2 += r * k2;
        }
        (m0, m1 * T::two_pi(), m2 * T::two_pi() * T::two_pi())
    }

    /// Replaces `a_k` by `a_k e^{2πi k·z}`, i.e. `p(· + z)`.
    pub fn shifted(&self, z: &[T]) -> Self {
        let coeffs = self
            .coeffs
            .iter()
            .map(|(k, a)| {
                let th = Self::phase(k, z);
                (k.clone(), *a * Complex::new(th.cos(), th.sin()))
            })
            .collect();
        Self { dims: self.dims, coeffs }
    }

    pub fn scaled(&self, s: T) -> Self {
        let coeffs = self.coeffs.iter().map(|(k, a)| (k.clone(), *a * s)).collect();
        Self { dims: self.dims, coeffs }
    }

    pub fn add(&self, other: &Self) -> Self {
        assert_eq!(self.dims, other.dims);
        let mut coeffs = self.coeffs.clone();
        for (k, a) in &other.coeffs {
            let e = coeffs.entry(k.clone()).or_insert_with(|| Complex::new(T::zero(), T::zero()));
            *e += *a;
        }
        coeffs.retain(|_, a| *a != Complex::new(T::zero(), T::zero()));
        Self { dims: self.dims, coeffs }
    }

    /// Pointwise product (coefficient convolution).
    pub fn mul(&self, other: &Self) -> Self {
        assert_eq!(self.dims, other.dims);
        let mut coeffs: BTreeMap<Vec<i64>, Complex<T>> = BTreeMap::new();
        for (k1, a1) in &self.coeffs {
            for (k2, a2) in &other.coeffs {
                let k: Vec<i64> = k1.iter().zip(k2).map(|(x, y)| x + y).collect();
                let e = coeffs.entry(k).or_insert_with(|| Complex::new(T::zero(), T::zero()));
                *e += *a1 * *a2;
            }
        }
        coeffs.retain(|_, a| *a != Complex::new(T::zero(), T::zero()));
        Self { dims: self.dims, coeffs }
    }

    /// Cell-center samples on an `M^P` grid.
    pub fn sample(&self, cells: usize) -> TorusField<T> {
        TorusField::from_fn(self.dims, cells, |y| self.eval(y))
    }

    pub fn to_records(&self) -> Vec<CoefficientRecord> {
        self.coeffs
            .iter()
            .map(|(k, a)| CoefficientRecord { k: k.clone(), re: a.re.to_f64_lossy(), im: a.im.to_f64_lossy() })
            .collect()
    }

    pub fn write_ndjson<W: Write>(&self, mut w: W) -> std::io::Result<()> {
        for r in self.to_records() {
            serde_json::to_writer(&mut w, &r)?;
            w.write_all(b"\n")?;
        }
        Ok(())
    }

    /// Reads the NDJSON coefficient format; blank lines are skipped.
    pub fn read_ndjson<R: BufRead>(r: R) -> Result<Self, ApError> {
        let mut terms = Vec::new();
        let mut dims = None;
        for (lineno, line) in r.lines().enumerate() {
            let line = line.map_err(|e| ApError::Parse { line: lineno + 1, reason: e.to_string() })?;
            if line.trim().is_empty() {
                continue;
            }
            let rec: CoefficientRecord = serde_json::from_str(&line)
                .map_err(|e| ApError::Parse { line: lineno + 1, reason: e.to_string() })?;
            match dims {
                None => dims = Some(rec.k.len()),
                Some(d) if d != rec.k.len() => {
                    return Err(ApError::Parse {
                        line: lineno + 1,
                        reason: format!("frequency vector has {} entries, expected {d}", rec.k.len()),
                    })
                }
                _ => {}
            }
            terms.push((rec.k, Complex::new(T::lit(rec.re), T::lit(rec.im))));
        }
        let dims = dims.ok_or(ApError::Parse { line: 0, reason: "no coefficient records".into() })?;
        Self::from_terms(dims, terms)
    }
}
