use serde::Serialize;

use super::{AlmostPeriodicField, ApError};
use crate::field::TorusField;
use crate::scalar::Scalar;

/// Midpoint tensor-grid estimate of `R^{−N} ∫_{C_R} |u(x)| dx` on the cube
/// `C_R = [−R/2, R/2]^N` with `samples_per_axis^N` nodes.
///
/// For Lipschitz `u` the quadrature error is `O(h²)` away from the zero set
/// of `u` and `O(h²)` per kink of `|u|`, `h = R / samples_per_axis`.
pub fn cube_average_n1<T: Scalar>(
    u: &AlmostPeriodicField<T>,
    r: T,
    samples_per_axis: usize,
) -> Result<T, ApError> {
    if !(r > T::zero()) {
        return Err(ApError::InvalidArgument(format!("cube side must be positive, got {r}")));
    }
    if samples_per_axis == 0 {
        return Err(ApError::InvalidArgument("samples_per_axis must be positive".into()));
    }
    let n = u.dim();
    let h = r / T::from_usize_lossy(samples_per_axis);
    let start = -r * T::lit(0.5) + h * T::lit(0.5);
    let total = samples_per_axis.pow(n as u32);
    let mut x = vec![T::zero(); n];
    // pairwise-ish accumulation by rows keeps the sum stable for large grids
    let mut acc = T::zero();
    let mut row = T::zero();
    for idx in 0..total {
        let mut rest = idx;
        for xi in x.iter_mut().rev() {
            let i = rest % samples_per_axis;
            rest /= samples_per_axis;
            *xi = start + h * T::from_usize_lossy(i);
        }
        row += u.eval(&x)?.abs();
        if (idx + 1) % samples_per_axis == 0 {
            acc += row;
            row = T::zero();
        }
    }
    acc += row;
    Ok(acc / T::from_usize_lossy(total))
}

/// `∫_{T^P} |v| dy` by the cell-average rule; through the isometry this is
/// the Besicovitch norm `N₁` of every lift of `v`.
pub fn torus_n1<T: Scalar>(v: &TorusField<T>) -> Result<T, ApError> {
    if v.is_empty() {
        return Err(ApError::InvalidArgument("empty grid".into()));
    }
    Ok(v.l1())
}

#[derive(Debug, Clone, Serialize)]
pub struct IsometryRow {
    pub r: f64,
    pub cube_n1: f64,
    pub torus_n1: f64,
    pub abs_error: f64,
    pub rel_error: f64,
}

/// Cube estimates over a ladder of sides against the torus value.
#[derive(Debug, Clone, Serialize)]
pub struct IsometryStudy {
    pub rows: Vec<IsometryRow>,
    /// `max − min` of the cube estimates over the ladder.
    pub oscillation: f64,
    /// Whether the absolute error decreases strictly along the ladder.
    pub decreasing: bool,
}

/// Compares `cube_average_n1(u, R)` with `reference` (normally `torus_n1`)
/// for each side in `sides`, using `samples_per_unit · R` nodes per axis.
pub fn isometry_study<T: Scalar>(
    u: &AlmostPeriodicField<T>,
    reference: T,
    sides: &[T],
    samples_per_unit: usize,
) -> Result<IsometryStudy, ApError> {
    let mut rows = Vec::with_capacity(sides.len());
    for &r in sides {
        let n = (r * T::from_usize_lossy(samples_per_unit)).ceil().to_usize().unwrap_or(1).max(1);
        let cube = cube_average_n1(u, r, n)?;
        let abs_error = (cube - reference).abs().to_f64_lossy();
        let refv = reference.to_f64_lossy();
        rows.push(IsometryRow {
            r: r.to_f64_lossy(),
            cube_n1: cube.to_f64_lossy(),
            torus_n1: refv,
            abs_error,
            rel_error: if refv != 0.0 { abs_error / refv.abs() } else { abs_error },
        });
    }
    let (lo, hi) = rows.iter().fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), r| (lo.min(r.cube_n1), hi.max(r.cube_n1)));
    let decreasing = rows.windows(2).all(|w| w[1].abs_error < w[0].abs_error);
    Ok(IsometryStudy { rows, oscillation: if hi >= lo { hi - lo } else { 0.0 }, decreasing })
}
