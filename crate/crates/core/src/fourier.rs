//! Separable discrete Fourier transforms of torus fields.

use std::sync::Arc;

use num_complex::Complex;
use rustfft::{Fft, FftPlanner};

use crate::field::TorusField;
use crate::scalar::Scalar;

/// Forward/inverse DFT on an `M^P` grid, applied axis by axis.
///
/// `forward` is normalized so that coefficient `k` equals
/// `M^{-P} Σ_i v_i e^{-2πi k·i/M}`; `inverse` undoes it exactly.
pub struct FourierPlan<T: Scalar> {
    dims: usize,
    cells: usize,
    fwd: Arc<dyn Fft<T>>,
    inv: Arc<dyn Fft<T>>,
}

impl<T: Scalar> std::fmt::Debug for FourierPlan<T> {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("FourierPlan").field("dims", &self.dims).field("cells", &self.cells).finish()
    }
}

impl<T: Scalar> FourierPlan<T> {
    pub fn new(dims: usize, cells: usize) -> Self {
        let mut planner = FftPlanner::new();
        Self { dims, cells, fwd: planner.plan_fft_forward(cells), inv: planner.plan_fft_inverse(cells) }
    }

    pub fn dims(&self) -> usize {
        self.dims
    }

    pub fn cells(&self) -> usize {
        self.cells
    }

    fn transform_axes(&self, data: &mut [Complex<T>], fft: &Arc<dyn Fft<T>>) {
        let m = self.cells;
        let total = data.len();
        let mut line = vec![Complex::new(T::zero(), T::zero()); m];
        for axis in 0..self.dims {
            let stride = m.pow((self.dims - 1 - axis) as u32);
            for start in 0..total {
                // visit each line once: starts have axis-index 0
                if !(start / stride).is_multiple_of(m) {
                    continue;
                }
                for (k, slot) in line.iter_mut().enumerate() {
                    *slot = data[start + k * stride];
                }
                fft.process(&mut line);
                for (k, slot) in line.iter().enumerate() {
                    data[start + k * stride] = *slot;
                }
            }
        }
    }

    pub fn forward(&self, field: &TorusField<T>) -> Vec<Complex<T>> {
        assert_eq!(field.dims(), self.dims);
        assert_eq!(field.cells_per_axis(), self.cells);
        let mut data: Vec<Complex<T>> = field.values().iter().map(|&v| Complex::new(v, T::zero())).collect();
        self.transform_axes(&mut data, &self.fwd);
        let norm = T::one() / T::from_usize_lossy(data.len());
        for c in data.iter_mut() {
            *c *= norm;
        }
        data
    }

    /// Real part of the inverse transform of normalized coefficients.
    pub fn inverse(&self, coeffs: &[Complex<T>]) -> TorusField<T> {
        let mut data = coeffs.to_vec();
        self.transform_axes(&mut data, &self.inv);
        TorusField::new(self.dims, self.cells, data.into_iter().map(|c| c.re).collect())
            .expect("coefficient array matches the plan")
    }

    /// Signed integer frequency vector of linear coefficient index `idx`.
    pub fn frequency(&self, idx: usize) -> Vec<i64> {
        signed_frequency(idx, self.dims, self.cells)
    }
}

/// Signed frequency of each axis index: `m` for `m ≤ M/2`, else `m − M`.
pub fn signed_frequency(mut idx: usize, dims: usize, cells: usize) -> Vec<i64> {
    let mut k = vec![0i64; dims];
    for axis in (0..dims).rev() {
        let m = idx % cells;
        idx /= cells;
        k[axis] = if 2 * m <= cells { m as i64 } else { m as i64 - cells as i64 };
    }
    k
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn single_mode_has_single_coefficient_pair() {
        let m = 16;
        let f = TorusField::from_fn(2, m, |y: &[f64]| (2.0 * std::f64::consts::PI * (y[0] + 2.0 * y[1])).cos());
        let plan = FourierPlan::new(2, m);
        let c = plan.forward(&f);
        let mut big = 0;
        for (i, z) in c.iter().enumerate() {
            if z.norm() > 1e-12 {
                big += 1;
                let k = plan.frequency(i);
                assert!(k == vec![1, 2] || k == vec![-1, -2], "{k:?}");
                assert!((z.norm() - 0.5).abs() < 1e-12);
            }
        }
        assert_eq!(big, 2);
        let back = plan.inverse(&c);
        for (a, b) in back.values().iter().zip(f.values()) {
            assert!((a - b).abs() < 1e-13);
        }
    }
}
