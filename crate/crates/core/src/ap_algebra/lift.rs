use super::{ApError, FrequencySet, TrigPolynomial};
use crate::field::TorusField;
use crate::scalar::{frac, Scalar};

#[derive(Debug, Clone, PartialEq)]
pub enum FieldBase<T> {
    /// Grid data, evaluated by periodic multilinear interpolation.
    Grid(TorusField<T>),
    /// Trigonometric polynomial, evaluated exactly.
    Trig(TrigPolynomial<T>),
}

impl<T: Scalar> FieldBase<T> {
    fn dims(&self) -> usize {
        match self {
            FieldBase::Grid(v) => v.dims(),
            FieldBase::Trig(p) => p.dims(),
        }
    }

    fn eval(&self, y: &[T]) -> T {
        match self {
            FieldBase::Grid(v) => v.interpolate(y),
            FieldBase::Trig(p) => p.eval(y),
        }
    }
}

/// `u(x) = w(z₀ + y(x))`: a torus function lifted to an almost-periodic
/// function on `R^N`.
#[derive(Debug, Clone, PartialEq)]
pub struct AlmostPeriodicField<T> {
    base: FieldBase<T>,
    freqs: FrequencySet<T>,
    shift: Vec<T>,
}

impl<T: Scalar> AlmostPeriodicField<T> {
    pub fn new(base: FieldBase<T>, freqs: FrequencySet<T>, shift: Vec<T>) -> Result<Self, ApError> {
        if base.dims() != freqs.rank() {
            return Err(ApError::Dimension { expected: freqs.rank(), got: base.dims() });
        }
        if shift.len() != freqs.rank() {
            return Err(ApError::Dimension { expected: freqs.rank(), got: shift.len() });
        }
        Ok(Self { base, freqs, shift })
    }

    pub fn dim(&self) -> usize {
        self.freqs.dim()
    }

    pub fn frequencies(&self) -> &FrequencySet<T> {
        &self.freqs
    }

    pub fn base(&self) -> &FieldBase<T> {
        &self.base
    }

    pub fn shift(&self) -> &[T] {
        &self.shift
    }

    /// Torus point `z₀ + y(x) mod 1` that `x` is mapped to.
    pub fn torus_point(&self, x: &[T]) -> Result<Vec<T>, ApError> {
        let y = self.freqs.reduction_point(x)?;
        Ok(y.iter().zip(&self.shift).map(|(a, b)| frac(*a + *b)).collect())
    }

    pub fn eval(&self, x: &[T]) -> Result<T, ApError> {
        let y = self.torus_point(x)?;
        Ok(self.base.eval(&y))
    }
}

/// Lifts grid data; point evaluation interpolates linearly per axis.
pub fn lift<T: Scalar>(
    v: TorusField<T>,
    freqs: FrequencySet<T>,
    shift: Vec<T>,
) -> Result<AlmostPeriodicField<T>, ApError> {
    AlmostPeriodicField::new(FieldBase::Grid(v), freqs, shift)
}

/// Lifts a trigonometric polynomial; point evaluation is exact.
pub fn lift_polynomial<T: Scalar>(
    p: TrigPolynomial<T>,
    freqs: FrequencySet<T>,
    shift: Vec<T>,
) -> Result<AlmostPeriodicField<T>, ApError> {
    AlmostPeriodicField::new(FieldBase::Trig(p), freqs, shift)
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn constant_lifts_to_constant() {
        let f = FrequencySet::new(vec![vec![1.0, 0.3], vec![2f64.sqrt(), -1.0]]).unwrap();
        let u = lift(TorusField::constant(2, 8, 1.5), f, vec![0.2, 0.7]).unwrap();
        for x in [[0.0, 0.0], [13.1, -7.2], [1e3, 2.5]] {
            assert_eq!(u.eval(&x).unwrap(), 1.5);
        }
    }

    #[test]
    fn integer_shift_is_invisible() {
        let f = FrequencySet::new(vec![vec![1.0], vec![2f64.sqrt()]]).unwrap();
        let v = TrigPolynomial::cosine(vec![1, 2], 1.0).sample(64);
        let a = lift(v.clone(), f.clone(), vec![0.1, 0.4]).unwrap();
        let b = lift(v, f, vec![1.1, 0.4]).unwrap();
        for i in 0..50 {
            let x = [i as f64 * 0.731];
            assert!((a.eval(&x).unwrap() - b.eval(&x).unwrap()).abs() < 1e-12);
        }
    }

    #[test]
    fn lifted_cosine_matches_composition() {
        let lambda = 1.7;
        let f = FrequencySet::new(vec![vec![lambda]]).unwrap();
        let v = TrigPolynomial::cosine(vec![1], 1.0).sample(512);
        let u = lift(v, f, vec![0.0]).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let dy: f64 = 1.0 / 512.0;
        // linear interpolation error ≤ (2π)² dy² / 8
        let tol = (2.0 * std::f64::consts::PI).powi(2) * dy * dy / 8.0 + 1e-12;
        for _ in 0..100 {
            let x: f64 = rng.gen_range(-50.0..50.0);
            let exact = (2.0 * std::f64::consts::PI * lambda * x).cos();
            assert!((u.eval(&[x]).unwrap() - exact).abs() <= tol);
        }
    }

    #[test]
    fn rejects_wrong_rank() {
        let f = FrequencySet::new(vec![vec![1.0], vec![2f64.sqrt()]]).unwrap();
        assert!(lift(TorusField::<f64>::zeros(1, 4), f, vec![0.0, 0.0]).is_err());
    }
}
