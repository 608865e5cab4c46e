//! Interpolation on ordered abscissae.

use crate::scalar::Scalar;

/// Piecewise-linear table on a uniform lattice with linear extrapolation
/// by the end secants. Monotone data give a monotone interpolant and the
/// interpolant's slopes never exceed the data's largest secant.
#[derive(Debug, Clone)]
pub struct UniformTable<T> {
    lo: T,
    step: T,
    values: Vec<T>,
}

impl<T: Scalar> UniformTable<T> {
    pub fn new(lo: T, step: T, values: Vec<T>) -> Self {
        assert!(values.len() >= 2, "table needs at least two nodes");
        assert!(step > T::zero());
        Self { lo, step, values }
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn values(&self) -> &[T] {
        &self.values
    }

    pub fn node(&self, i: usize) -> T {
        self.lo + self.step * T::from_usize_lossy(i)
    }

    /// Cell index and local coordinate of `x`; shared by tables built on
    /// the same lattice.
    #[inline]
    pub fn locate(&self, x: T) -> (usize, T) {
        let n = self.values.len();
        let s = (x - self.lo) / self.step;
        let i = if s <= T::zero() {
            0
        } else {
            let f = s.floor().to_usize().unwrap_or(usize::MAX);
            f.min(n - 2)
        };
        (i, s - T::from_usize_lossy(i))
    }

    #[inline]
    pub fn eval_located(&self, (i, t): (usize, T)) -> T {
        let (a, b) = (self.values[i], self.values[i + 1]);
        a + (b - a) * t
    }

    #[inline]
    pub fn eval(&self, x: T) -> T {
        self.eval_located(self.locate(x))
    }

    /// Largest absolute secant slope, i.e. the Lipschitz constant of the
    /// interpolant (including the extrapolated tails).
    pub fn lipschitz(&self) -> T {
        self.values
            .windows(2)
            .map(|w| ((w[1] - w[0]) / self.step).abs())
            .fold(T::zero(), T::max)
    }

    /// Largest secant slope (signed).
    pub fn max_slope(&self) -> T {
        self.values
            .windows(2)
            .map(|w| (w[1] - w[0]) / self.step)
            .fold(T::neg_infinity(), T::max)
    }

    pub fn min_slope(&self) -> T {
        self.values
            .windows(2)
            .map(|w| (w[1] - w[0]) / self.step)
            .fold(T::infinity(), T::min)
    }
}

/// Monotone piecewise-cubic Hermite interpolant (Fritsch–Carlson slopes)
/// on arbitrary increasing abscissae; linear beyond the end nodes.
#[derive(Debug, Clone)]
pub struct Pchip<T> {
    x: Vec<T>,
    y: Vec<T>,
    d: Vec<T>,
}

impl<T: Scalar> Pchip<T> {
    pub fn new(x: Vec<T>, y: Vec<T>) -> Result<Self, String> {
        let n = x.len();
        if n < 2 || y.len() != n {
            return Err("pchip needs at least two (x, y) pairs of equal length".into());
        }
        if x.windows(2).any(|w| w[1] <= w[0]) {
            return Err("pchip abscissae must be strictly increasing".into());
        }
        let h: Vec<T> = x.windows(2).map(|w| w[1] - w[0]).collect();
        let del: Vec<T> = (0..n - 1).map(|i| (y[i + 1] - y[i]) / h[i]).collect();
        let mut d = vec![T::zero(); n];
        if n == 2 {
            d[0] = del[0];
            d[1] = del[0];
        } else {
            for k in 1..n - 1 {
                if del[k - 1] * del[k] > T::zero() {
                    let w1 = T::lit(2.0) * h[k] + h[k - 1];
                    let w2 = h[k] + T::lit(2.0) * h[k - 1];
                    d[k] = (w1 + w2) / (w1 / del[k - 1] + w2 / del[k]);
                }
            }
            d[0] = end_slope(h[0], h[1], del[0], del[1]);
            d[n - 1] = end_slope(h[n - 2], h[n - 3], del[n - 2], del[n - 3]);
        }
        Ok(Self { x, y, d })
    }

    fn locate(&self, t: T) -> usize {
        let n = self.x.len();
        match self.x.binary_search_by(|p| p.partial_cmp(&t).unwrap_or(std::cmp::Ordering::Less)) {
            Ok(i) => i.min(n - 2),
            Err(i) => i.saturating_sub(1).min(n - 2),
        }
    }

    pub fn eval(&self, t: T) -> T {
        let n = self.x.len();
        if t <= self.x[0] {
            return self.y[0] + self.d[0] * (t - self.x[0]);
        }
        if t >= self.x[n - 1] {
            return self.y[n - 1] + self.d[n - 1] * (t - self.x[n - 1]);
        }
        let i = self.locate(t);
        let h = self.x[i + 1] - self.x[i];
        let s = (t - self.x[i]) / h;
        let s2 = s * s;
        let s3 = s2 * s;
        let two = T::lit(2.0);
        let three = T::lit(3.0);
        let h00 = two * s3 - three * s2 + T::one();
        let h10 = s3 - two * s2 + s;
        let h01 = -two * s3 + three * s2;
        let h11 = s3 - s2;
        h00 * self.y[i] + h10 * h * self.d[i] + h01 * self.y[i + 1] + h11 * h * self.d[i + 1]
    }

    pub fn derivative(&self, t: T) -> T {
        let n = self.x.len();
        if t <= self.x[0] {
            return self.d[0];
        }
        if t >= self.x[n - 1] {
            return self.d[n - 1];
        }
        let i = self.locate(t);
        let h = self.x[i + 1] - self.x[i];
        let s = (t - self.x[i]) / h;
        let s2 = s * s;
        let six = T::lit(6.0);
        let d00 = (six * s2 - six * s) / h;
        let d10 = T::lit(3.0) * s2 - T::lit(4.0) * s + T::one();
        let d01 = (six * s - six * s2) / h;
        let d11 = T::lit(3.0) * s2 - T::lit(2.0) * s;
        d00 * self.y[i] + d10 * self.d[i] + d01 * self.y[i + 1] + d11 * self.d[i + 1]
    }

    pub fn range(&self) -> (T, T) {
        (self.x[0], self.x[self.x.len() - 1])
    }
}

fn end_slope<T: Scalar>(h0: T, h1: T, del0: T, del1: T) -> T {
    let d = ((T::lit(2.0) * h0 + h1) * del0 - h0 * del1) / (h0 + h1);
    if d.signum() != del0.signum() {
        T::zero()
    } else if del0.signum() != del1.signum() && d.abs() > (T::lit(3.0) * del0).abs() {
        T::lit(3.0) * del0
    } else {
        d
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn uniform_table_interpolates_and_extrapolates() {
        let t = UniformTable::new(-1.0, 0.5, vec![-1.0, -0.5, 0.0, 0.5, 1.0]);
        assert_eq!(t.eval(0.25), 0.25);
        assert_eq!(t.eval(3.0), 3.0);
        assert_eq!(t.eval(-2.0), -2.0);
        assert_eq!(t.lipschitz(), 1.0);
    }

    #[test]
    fn pchip_reproduces_linear_and_keeps_monotone() {
        let x: Vec<f64> = (0..6).map(|i| i as f64).collect();
        let y: Vec<f64> = x.iter().map(|v| 2.0 * v + 1.0).collect();
        let p = Pchip::new(x, y).unwrap();
        assert!((p.eval(2.3) - 5.6).abs() < 1e-13);
        assert!((p.derivative(2.3) - 2.0).abs() < 1e-13);

        let x = vec![0.0, 1.0, 2.0, 3.0, 4.0];
        let y = vec![0.0, 0.0, 1.0, 1.0, 1.0];
        let p = Pchip::new(x, y).unwrap();
        let mut prev = p.eval(0.0);
        for i in 1..=400 {
            let v = p.eval(i as f64 / 100.0);
            assert!(v >= prev - 1e-15);
            prev = v;
        }
    }
}
