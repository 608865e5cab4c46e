//! Cell-averaged grid functions on the torus T^P.

use serde::{Deserialize, Serialize};

use crate::scalar::Scalar;

/// `M^P` cell values on the unit torus, cell width `1/M`. Cells are stored
/// row-major with axis 0 slowest; cell `i` has center `(i + 1/2)/M`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TorusField<T> {
    dims: usize,
    cells: usize,
    values: Vec<T>,
}

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum FieldError {
    #[error("torus field needs at least one axis and one cell per axis (got P = {dims}, M = {cells})")]
    Empty { dims: usize, cells: usize },
    #[error("expected {expected} values for the grid, got {got}")]
    Length { expected: usize, got: usize },
    #[error("grid mismatch: {0}")]
    Mismatch(String),
}

impl<T: Scalar> TorusField<T> {
    pub fn new(dims: usize, cells: usize, values: Vec<T>) -> Result<Self, FieldError> {
        if dims == 0 || cells == 0 {
            return Err(FieldError::Empty { dims, cells });
        }
        let expected = cells.pow(dims as u32);
        if values.len() != expected {
            return Err(FieldError::Length { expected, got: values.len() });
        }
        Ok(Self { dims, cells, values })
    }

    pub fn zeros(dims: usize, cells: usize) -> Self {
        Self::constant(dims, cells, T::zero())
    }

    pub fn constant(dims: usize, cells: usize, c: T) -> Self {
        assert!(dims > 0 && cells > 0, "empty torus grid");
        Self { dims, cells, values: vec![c; cells.pow(dims as u32)] }
    }

    /// Samples `f` at cell centers (midpoint approximation of cell averages).
    pub fn from_fn<F: Fn(&[T]) -> T>(dims: usize, cells: usize, f: F) -> Self {
        let mut out = Self::zeros(dims, cells);
        let mut y = vec![T::zero(); dims];
        for idx in 0..out.values.len() {
            out.center_into(idx, &mut y);
            out.values[idx] = f(&y);
        }
        out
    }

    pub fn dims(&self) -> usize {
        self.dims
    }

    pub fn cells_per_axis(&self) -> usize {
        self.cells
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn dy(&self) -> T {
        T::one() / T::from_usize_lossy(self.cells)
    }

    pub fn values(&self) -> &[T] {
        &self.values
    }

    pub fn values_mut(&mut self) -> &mut [T] {
        &mut self.values
    }

    pub fn into_values(self) -> Vec<T> {
        self.values
    }

    /// Stride of `axis` in the linear index.
    #[inline]
    pub fn stride(&self, axis: usize) -> usize {
        self.cells.pow((self.dims - 1 - axis) as u32)
    }

    pub fn multi_index(&self, mut idx: usize) -> Vec<usize> {
        let mut out = vec![0; self.dims];
        for axis in (0..self.dims).rev() {
            out[axis] = idx % self.cells;
            idx /= self.cells;
        }
        out
    }

    pub fn linear_index(&self, multi: &[usize]) -> usize {
        multi.iter().fold(0, |acc, &i| acc * self.cells + (i % self.cells))
    }

    pub fn center_into(&self, idx: usize, out: &mut [T]) {
        let m = T::from_usize_lossy(self.cells);
        let mut rest = idx;
        for axis in (0..self.dims).rev() {
            let i = rest % self.cells;
            rest /= self.cells;
            out[axis] = (T::from_usize_lossy(i) + T::lit(0.5)) / m;
        }
    }

    pub fn center(&self, idx: usize) -> Vec<T> {
        let mut y = vec![T::zero(); self.dims];
        self.center_into(idx, &mut y);
        y
    }

    /// Linear index of the neighbour of `idx` shifted by `offset` cells along `axis` (periodic).
    #[inline]
    pub fn shifted(&self, idx: usize, axis: usize, offset: isize) -> usize {
        let stride = self.stride(axis);
        let i = (idx / stride) % self.cells;
        let m = self.cells as isize;
        let j = ((i as isize + offset) % m + m) % m;
        idx - i * stride + j as usize * stride
    }

    pub fn mean(&self) -> T {
        let s: T = self.values.iter().copied().sum();
        s / T::from_usize_lossy(self.values.len())
    }

    pub fn l1(&self) -> T {
        let s: T = self.values.iter().map(|v| v.abs()).sum();
        s / T::from_usize_lossy(self.values.len())
    }

    pub fn l2(&self) -> T {
        let s: T = self.values.iter().map(|v| *v * *v).sum();
        (s / T::from_usize_lossy(self.values.len())).sqrt()
    }

    pub fn linf(&self) -> T {
        self.values.iter().map(|v| v.abs()).fold(T::zero(), T::max)
    }

    pub fn min_max(&self) -> (T, T) {
        self.values.iter().fold((T::infinity(), T::neg_infinity()), |(lo, hi), &v| (lo.min(v), hi.max(v)))
    }

    pub fn same_grid(&self, other: &Self) -> bool {
        self.dims == other.dims && self.cells == other.cells
    }

    pub fn check_same_grid(&self, other: &Self) -> Result<(), FieldError> {
        if self.same_grid(other) {
            Ok(())
        } else {
            Err(FieldError::Mismatch(format!(
                "P = {}, M = {} vs P = {}, M = {}",
                self.dims, self.cells, other.dims, other.cells
            )))
        }
    }

    /// `‖self − other‖_{L¹(T^P)}` with the cell-average quadrature.
    pub fn l1_distance(&self, other: &Self) -> T {
        debug_assert!(self.same_grid(other));
        let s: T = self.values.iter().zip(&other.values).map(|(a, b)| (*a - *b).abs()).sum();
        s / T::from_usize_lossy(self.values.len())
    }

    pub fn map<F: Fn(T) -> T>(&self, f: F) -> Self {
        Self { dims: self.dims, cells: self.cells, values: self.values.iter().map(|&v| f(v)).collect() }
    }

    pub fn add_scaled(&mut self, other: &Self, s: T) {
        for (a, b) in self.values.iter_mut().zip(&other.values) {
            *a += s * *b;
        }
    }

    pub fn is_finite(&self) -> bool {
        self.values.iter().all(|v| v.is_finite())
    }

    /// Periodic multilinear interpolation of the cell-center samples.
    pub fn interpolate(&self, y: &[T]) -> T {
        let m = T::from_usize_lossy(self.cells);
        let p = self.dims;
        let mut base = vec![0usize; p];
        let mut w = vec![T::zero(); p];
        for axis in 0..p {
            let s = crate::scalar::frac(y[axis]) * m - T::lit(0.5);
            let fl = s.floor();
            w[axis] = s - fl;
            let i = fl.to_isize().unwrap_or(0);
            base[axis] = (((i % self.cells as isize) + self.cells as isize) % self.cells as isize) as usize;
        }
        let mut acc = T::zero();
        let mut corner = vec![0usize; p];
        for mask in 0..(1usize << p) {
            let mut weight = T::one();
            for axis in 0..p {
                if mask >> axis & 1 == 1 {
                    corner[axis] = (base[axis] + 1) % self.cells;
                    weight *= w[axis];
                } else {
                    corner[axis] = base[axis];
                    weight *= T::one() - w[axis];
                }
            }
            if weight != T::zero() {
                acc += weight * self.values[self.linear_index(&corner)];
            }
        }
        acc
    }
}
