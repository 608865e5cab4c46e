use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::ApError;
use crate::linalg::{dot, norm2};
use crate::scalar::{frac, Scalar};

/// Default bound on the integer coefficients tried by the dependence search.
pub const DEFAULT_DENOMINATOR_BOUND: u64 = 10_000;

/// Relative tolerance under which an integer combination counts as zero.
pub const INDEPENDENCE_RTOL: f64 = 1e-12;

/// Generators `λ_1, …, λ_P ∈ R^N` of the frequency group and the induced
/// reduction map `x ↦ (λ_1·x, …, λ_P·x) mod 1`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FrequencySet<T> {
    generators: Vec<Vec<T>>,
    denominator_bound: u64,
}

/// Outcome of the bounded integer-relation search.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Independence {
    /// No relation with coefficients bounded by `bound` was found.
    Independent { bound: u64 },
    /// `Σ m_j λ_j ≈ 0` for this nonzero integer vector.
    Dependent { witness: Vec<i64> },
}

impl Independence {
    pub fn is_independent(&self) -> bool {
        matches!(self, Independence::Independent { .. })
    }
}

impl<T: Scalar> FrequencySet<T> {
    pub fn new(generators: Vec<Vec<T>>) -> Result<Self, ApError> {
        Self::with_bound(generators, DEFAULT_DENOMINATOR_BOUND)
    }

    pub fn with_bound(generators: Vec<Vec<T>>, denominator_bound: u64) -> Result<Self, ApError> {
        if generators.is_empty() {
            return Err(ApError::NoGenerators);
        }
        let n = generators[0].len();
        if n == 0 {
            return Err(ApError::Dimension { expected: 1, got: 0 });
        }
        for (j, g) in generators.iter().enumerate() {
            if g.len() != n {
                return Err(ApError::Dimension { expected: n, got: g.len() });
            }
            if g.iter().all(|c| *c == T::zero()) {
                return Err(ApError::ZeroGenerator(j));
            }
        }
        if denominator_bound == 0 {
            return Err(ApError::InvalidArgument("denominator bound must be positive".into()));
        }
        Ok(Self { generators, denominator_bound })
    }

    /// Standard basis `λ_j = e_j` (`P = N`), i.e. the purely periodic case.
    pub fn identity(n: usize) -> Self {
        let gens = (0..n)
            .map(|j| (0..n).map(|i| if i == j { T::one() } else { T::zero() }).collect())
            .collect();
        Self::new(gens).expect("unit vectors are valid generators")
    }

    /// Number of generators `P`.
    pub fn rank(&self) -> usize {
        self.generators.len()
    }

    /// Ambient dimension `N`.
    pub fn dim(&self) -> usize {
        self.generators[0].len()
    }

    pub fn generators(&self) -> &[Vec<T>] {
        &self.generators
    }

    pub fn generator(&self, j: usize) -> &[T] {
        &self.generators[j]
    }

    pub fn denominator_bound(&self) -> u64 {
        self.denominator_bound
    }

    /// Row-major `P × N` matrix with rows `λ_j`.
    pub fn matrix(&self) -> Vec<T> {
        self.generators.iter().flatten().copied().collect()
    }

    /// Gram matrix `G_{jl} = λ_j · λ_l` (`P × P`, row-major).
    pub fn gram(&self) -> Vec<T> {
        let p = self.rank();
        let mut g = vec![T::zero(); p * p];
        for j in 0..p {
            for l in 0..p {
                g[j * p + l] = dot(&self.generators[j], &self.generators[l]);
            }
        }
        g
    }

    /// Group element `Σ_j k_j λ_j`.
    pub fn group_element(&self, k: &[i64]) -> Vec<T> {
        let mut out = vec![T::zero(); self.dim()];
        for (kj, g) in k.iter().zip(&self.generators) {
            let s = T::from_i64(*kj).expect("integer representable");
            for (o, c) in out.iter_mut().zip(g) {
                *o += s * *c;
            }
        }
        out
    }

    /// `y(x) = (λ_j · x mod 1)_j ∈ [0, 1)^P`.
    pub fn reduction_point(&self, x: &[T]) -> Result<Vec<T>, ApError> {
        if x.len() != self.dim() {
            return Err(ApError::Dimension { expected: self.dim(), got: x.len() });
        }
        Ok(self.generators.iter().map(|g| frac(dot(g, x))).collect())
    }

    /// Bounded search for an integer relation among the generators.
    ///
    /// Every outer coefficient vector `(m_1, …, m_{P−1})` with `|m_j| ≤ Q`
    /// and first nonzero entry positive is visited; the last coefficient is
    /// the integer minimizer of the (convex) residual norm. A negative
    /// answer falsifies relations up to `Q` only; it is not a proof of
    /// independence over Z.
    pub fn check_z_independence(&self) -> Independence {
        let p = self.rank();
        let q = self.denominator_bound as i64;
        if p == 1 {
            return Independence::Independent { bound: self.denominator_bound };
        }
        let scale = self.generators.iter().map(|g| norm2(g)).fold(T::zero(), T::max);
        let tol = T::lit(INDEPENDENCE_RTOL) * scale;
        let last = &self.generators[p - 1];
        let last_sq = dot(last, last);
        let n = self.dim();

        let probe = |outer: &[i64]| -> Option<Vec<i64>> {
            let mut r = vec![T::zero(); n];
            for (m, g) in outer.iter().zip(&self.generators) {
                let s = T::from_i64(*m).unwrap();
                for (ri, gi) in r.iter_mut().zip(g) {
                    *ri += s * *gi;
                }
            }
            let target = -dot(&r, last) / last_sq;
            let base = target.floor().to_i64().unwrap_or(0);
            for cand in [base, base + 1] {
                if cand.abs() > q {
                    continue;
                }
                if outer.iter().all(|m| *m == 0) && cand == 0 {
                    continue;
                }
                let s = T::from_i64(cand).unwrap();
                let res: T = r.iter().zip(last).map(|(ri, li)| (*ri + s * *li) * (*ri + s * *li)).sum();
                if res.sqrt() < tol {
                    let mut w = outer.to_vec();
                    w.push(cand);
                    return Some(w);
                }
            }
            None
        };

        // first outer coordinate carries the sign convention
        let found = (0..=q).into_par_iter().find_map_first(|m0| {
            let mut outer = vec![0i64; p - 1];
            outer[0] = m0;
            search_rest(&mut outer, 1, q, m0 != 0, &probe)
        });
        match found {
            Some(witness) => Independence::Dependent { witness },
            None => Independence::Independent { bound: self.denominator_bound },
        }
    }
}

fn search_rest<F: Fn(&[i64]) -> Option<Vec<i64>>>(
    outer: &mut Vec<i64>,
    pos: usize,
    q: i64,
    sign_fixed: bool,
    probe: &F,
) -> Option<Vec<i64>> {
    if pos == outer.len() {
        return probe(outer);
    }
    let lo = if sign_fixed { -q } else { 0 };
    for m in lo..=q {
        outer[pos] = m;
        if let Some(w) = search_rest(outer, pos + 1, q, sign_fixed || m != 0, probe) {
            return Some(w);
        }
    }
    outer[pos] = 0;
    None
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn single_generator_is_independent() {
        let f = FrequencySet::new(vec![vec![1.0]]).unwrap();
        assert!(f.check_z_independence().is_independent());
    }

    #[test]
    fn collinear_pair_has_witness() {
        let f = FrequencySet::new(vec![vec![1.0, 0.0], vec![2.0, 0.0]]).unwrap();
        assert_eq!(f.check_z_independence(), Independence::Dependent { witness: vec![2, -1] });
    }

    #[test]
    fn sqrt2_is_independent_up_to_a_million() {
        let f = FrequencySet::with_bound(vec![vec![1.0], vec![2f64.sqrt()]], 1_000_000).unwrap();
        assert_eq!(f.check_z_independence(), Independence::Independent { bound: 1_000_000 });
    }

    #[test]
    fn three_generators_with_hidden_relation() {
        // λ_3 = 3λ_1 − 2λ_2
        let l1 = vec![1.0, 0.5];
        let l2 = vec![0.25, 2f64.sqrt()];
        let l3: Vec<f64> = l1.iter().zip(&l2).map(|(a, b)| 3.0 * a - 2.0 * b).collect();
        let f = FrequencySet::with_bound(vec![l1, l2, l3], 5).unwrap();
        match f.check_z_independence() {
            Independence::Dependent { witness } => {
                let e = f.group_element(&witness);
                assert!(e.iter().all(|c| c.abs() < 1e-12), "{witness:?}");
            }
            other => panic!("expected a relation, got {other:?}"),
        }
    }

    #[test]
    fn rejects_zero_generator() {
        assert_eq!(FrequencySet::new(vec![vec![1.0], vec![0.0]]).unwrap_err(), ApError::ZeroGenerator(1));
    }

    #[test]
    fn reduction_point_examples() {
        let f = FrequencySet::new(vec![vec![1.0], vec![2f64.sqrt()]]).unwrap();
        assert_eq!(f.reduction_point(&[0.0]).unwrap(), vec![0.0, 0.0]);
        let y = f.reduction_point(&[1.0]).unwrap();
        assert_eq!(y[0], 0.0);
        assert!((y[1] - (2f64.sqrt() - 1.0)).abs() < 1e-12);
        let g = FrequencySet::new(vec![vec![1.0, 1.0]]).unwrap();
        assert_eq!(g.reduction_point(&[0.5, 0.5]).unwrap(), vec![0.0]);
        assert!(matches!(g.reduction_point(&[0.5]), Err(ApError::Dimension { .. })));
    }
}
