//! Dense helpers for the small (N, P ≤ a handful) matrices that appear in
//! the coefficient maps. Matrices are row-major slices.

use crate::scalar::Scalar;

pub fn dot<T: Scalar>(a: &[T], b: &[T]) -> T {
    a.iter().zip(b).map(|(&x, &y)| x * y).sum()
}

pub fn norm2<T: Scalar>(a: &[T]) -> T {
    dot(a, a).sqrt()
}

/// Frobenius norm.
pub fn frobenius<T: Scalar>(m: &[T]) -> T {
    norm2(m)
}

/// `out = m mᵀ` for an `rows × cols` matrix `m`.
pub fn gram_rows<T: Scalar>(m: &[T], rows: usize, cols: usize, out: &mut [T]) {
    for i in 0..rows {
        for j in 0..rows {
            let mut s = T::zero();
            for k in 0..cols {
                s += m[i * cols + k] * m[j * cols + k];
            }
            out[i * rows + j] = s;
        }
    }
}

/// `out = L A Lᵀ` where `L` is `p × n` and `A` is `n × n`.
pub fn congruence<T: Scalar>(l: &[T], a: &[T], p: usize, n: usize, out: &mut [T]) {
    for i in 0..p {
        for j in 0..p {
            let mut s = T::zero();
            for r in 0..n {
                let li = l[i * n + r];
                if li == T::zero() {
                    continue;
                }
                for c in 0..n {
                    s += li * a[r * n + c] * l[j * n + c];
                }
            }
            out[i * p + j] = s;
        }
    }
}

/// Eigenvalues of a symmetric `n × n` matrix by cyclic Jacobi rotations,
/// returned in ascending order.
pub fn symmetric_eigenvalues<T: Scalar>(m: &[T], n: usize) -> Vec<T> {
    let mut a = m.to_vec();
    // symmetrize to suppress tiny asymmetries from rounding
    for i in 0..n {
        for j in (i + 1)..n {
            let s = (a[i * n + j] + a[j * n + i]) * T::lit(0.5);
            a[i * n + j] = s;
            a[j * n + i] = s;
        }
    }
    for _sweep in 0..64 {
        let mut off = T::zero();
        for i in 0..n {
            for j in (i + 1)..n {
                off += a[i * n + j] * a[i * n + j];
            }
        }
        let scale: T = a.iter().map(|x| *x * *x).sum();
        if off <= T::epsilon() * T::epsilon() * scale || off == T::zero() {
            break;
        }
        for p in 0..n {
            for q in (p + 1)..n {
                let apq = a[p * n + q];
                if apq == T::zero() {
                    continue;
                }
                let app = a[p * n + p];
                let aqq = a[q * n + q];
                let theta = (aqq - app) / (T::lit(2.0) * apq);
                let t = theta.signum() / (theta.abs() + (theta * theta + T::one()).sqrt());
                let c = T::one() / (t * t + T::one()).sqrt();
                let s = t * c;
                for k in 0..n {
                    let akp = a[k * n + p];
                    let akq = a[k * n + q];
                    a[k * n + p] = c * akp - s * akq;
                    a[k * n + q] = s * akp + c * akq;
                }
                for k in 0..n {
                    let apk = a[p * n + k];
                    let aqk = a[q * n + k];
                    a[p * n + k] = c * apk - s * aqk;
                    a[q * n + k] = s * apk + c * aqk;
                }
            }
        }
    }
    let mut ev: Vec<T> = (0..n).map(|i| a[i * n + i]).collect();
    ev.sort_by(|x, y| x.partial_cmp(y).unwrap_or(std::cmp::Ordering::Equal));
    ev
}

/// Largest absolute row sum; a cheap upper bound of the spectral norm.
pub fn max_row_sum<T: Scalar>(m: &[T], n: usize) -> T {
    (0..n)
        .map(|i| (0..n).map(|j| m[i * n + j].abs()).sum::<T>())
        .fold(T::zero(), T::max)
}

/// Lower-triangular factor `L` with `L Lᵀ = m` for symmetric PSD `m`.
/// Pivots below `tol` are treated as zero (semi-definite case).
pub fn psd_cholesky<T: Scalar>(m: &[T], n: usize, tol: T) -> Vec<T> {
    let mut l = vec![T::zero(); n * n];
    for j in 0..n {
        let mut d = m[j * n + j];
        for k in 0..j {
            d -= l[j * n + k] * l[j * n + k];
        }
        if d <= tol {
            continue;
        }
        let djj = d.sqrt();
        l[j * n + j] = djj;
        for i in (j + 1)..n {
            let mut s = m[i * n + j];
            for k in 0..j {
                s -= l[i * n + k] * l[j * n + k];
            }
            l[i * n + j] = s / djj;
        }
    }
    l
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn eigenvalues_of_diagonal_and_rotated() {
        let ev = symmetric_eigenvalues(&[3.0, 0.0, 0.0, -1.0], 2);
        assert_eq!(ev, vec![-1.0, 3.0]);
        // [[2,1],[1,2]] has eigenvalues 1, 3
        let ev = symmetric_eigenvalues::<f64>(&[2.0, 1.0, 1.0, 2.0], 2);
        assert!((ev[0] - 1.0).abs() < 1e-14 && (ev[1] - 3.0).abs() < 1e-14);
        let m = [4.0, 1.0, 0.5, 1.0, 3.0, 0.2, 0.5, 0.2, 1.0];
        let ev = symmetric_eigenvalues(&m, 3);
        let trace: f64 = ev.iter().sum();
        assert!((trace - 8.0).abs() < 1e-12);
    }

    #[test]
    fn congruence_matches_explicit_product() {
        // λ = (1, 1), a = I  ->  λᵀ a λ = 2
        let mut out = [0.0];
        congruence(&[1.0, 1.0], &[1.0, 0.0, 0.0, 1.0], 1, 2, &mut out);
        assert_eq!(out[0], 2.0);
    }

    #[test]
    fn cholesky_of_semidefinite() {
        let m = [1.0f64, 1.0, 1.0, 1.0];
        let l = psd_cholesky(&m, 2, 1e-14);
        let mut back = [0.0; 4];
        gram_rows(&l, 2, 2, &mut back);
        for (x, y) in back.iter().zip(&m) {
            assert!((x - y).abs() < 1e-14);
        }
    }
}
