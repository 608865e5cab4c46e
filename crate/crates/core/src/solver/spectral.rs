use num_complex::Complex;

use crate::field::TorusField;
use crate::fourier::{signed_frequency, FourierPlan};
use crate::scalar::Scalar;

/// Factors `exp(−μ (2π|k|)⁴ dt)` of the biharmonic semigroup, one per
/// Fourier coefficient in transform order. `k = 0` always maps to 1, so
/// the mean is preserved; large arguments underflow to 0.
pub fn biharmonic_multiplier<T: Scalar>(mu: T, dt: T, dims: usize, cells: usize) -> Vec<T> {
    let total = cells.pow(dims as u32);
    let tp = T::two_pi();
    (0..total)
        .map(|idx| {
            if mu == T::zero() {
                return T::one();
            }
            let k2: T = signed_frequency(idx, dims, cells)
                .iter()
                .map(|k| T::from_i64(k * k).unwrap())
                .sum();
            (-mu * tp.powi(4) * k2 * k2 * dt).exp()
        })
        .collect()
}

/// One exact step of `v_t = −μ Δ²v` on the grid's trigonometric interpolant.
pub fn apply_biharmonic<T: Scalar>(plan: &FourierPlan<T>, v: &mut TorusField<T>, mu: T, dt: T) {
    if mu == T::zero() {
        return;
    }
    let factors = biharmonic_multiplier(mu, dt, v.dims(), v.cells_per_axis());
    let mut c = plan.forward(v);
    for (ci, f) in c.iter_mut().zip(&factors) {
        *ci *= Complex::new(*f, T::zero());
    }
    *v = plan.inverse(&c);
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn zero_mu_is_identity_and_mean_is_kept() {
        assert!(biharmonic_multiplier(0.0f64, 1.0, 2, 8).iter().all(|f| *f == 1.0));
        let m = biharmonic_multiplier(1.0f64, 1.0, 1, 8);
        assert_eq!(m[0], 1.0);
        // exp(−16π⁴) underflows
        assert_eq!(m[1], 0.0);
    }
}
