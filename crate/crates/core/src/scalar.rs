//! Scalar abstraction and a small dense row-major matrix.

use std::fmt::{Debug, Display};
use std::ops::{Index, IndexMut};

use num_traits::{Float, FromPrimitive, ToPrimitive};

/// Real scalar usable by the statistics and simulation code.
pub trait Scalar:
    Float + FromPrimitive + ToPrimitive + Debug + Display + Default + Send + Sync + 'static
{
    /// Lossy conversion from `f64`; every supported type can represent an
    /// approximation of any finite `f64`.
    fn of(value: f64) -> Self {
        Self::from_f64(value).unwrap_or_else(Self::nan)
    }

    fn as_f64(self) -> f64 {
        self.to_f64().unwrap_or(f64::NAN)
    }
}

impl<T> Scalar for T where
    T: Float + FromPrimitive + ToPrimitive + Debug + Display + Default + Send + Sync + 'static
{
}

/// Dense row-major matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct Matrix<T> {
    rows: usize,
    cols: usize,
    data: Vec<T>,
}

impl<T: Scalar> Matrix<T> {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Self {
            rows,
            cols,
            data: vec![T::zero(); rows * cols],
        }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Self::zeros(n, n);
        for i in 0..n {
            m[(i, i)] = T::one();
        }
        m
    }

    /// Builds a matrix from row-major data.
    ///
    /// Panics if `data.len() != rows * cols`.
    pub fn from_row_major(rows: usize, cols: usize, data: Vec<T>) -> Self {
        assert_eq!(data.len(), rows * cols, "matrix shape mismatch");
        Self { rows, cols, data }
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn row(&self, r: usize) -> &[T] {
        &self.data[r * self.cols..(r + 1) * self.cols]
    }

    pub fn row_mut(&mut self, r: usize) -> &mut [T] {
        let c = self.cols;
        &mut self.data[r * c..(r + 1) * c]
    }

    pub fn column(&self, c: usize) -> impl Iterator<Item = T> + '_ {
        (0..self.rows).map(move |r| self.data[r * self.cols + c])
    }

    pub fn as_slice(&self) -> &[T] {
        &self.data
    }

    pub fn into_vec(self) -> Vec<T> {
        self.data
    }

    /// Square submatrix over the given row/column indices, in that order.
    pub fn principal_submatrix(&self, idx: &[usize]) -> Self {
        let k = idx.len();
        let mut out = Self::zeros(k, k);
        for (a, &ra) in idx.iter().enumerate() {
            for (b, &cb) in idx.iter().enumerate() {
                out[(a, b)] = self[(ra, cb)];
            }
        }
        out
    }

    /// Keeps the listed rows in order.
    pub fn select_rows(&self, keep: &[usize]) -> Self {
        let mut data = Vec::with_capacity(keep.len() * self.cols);
        for &r in keep {
            data.extend_from_slice(self.row(r));
        }
        Self::from_row_major(keep.len(), self.cols, data)
    }

    /// Maximum absolute column sum.
    pub fn norm_one(&self) -> T {
        (0..self.cols)
            .map(|c| self.column(c).fold(T::zero(), |acc, v| acc + v.abs()))
            .fold(T::zero(), T::max)
    }

    /// Gauss-Jordan inverse with partial pivoting. `None` when a pivot
    /// vanishes exactly.
    pub fn inverse(&self) -> Option<Self> {
        assert_eq!(self.rows, self.cols, "inverse of a non-square matrix");
        let n = self.rows;
        let mut a = self.clone();
        let mut inv = Self::identity(n);
        for col in 0..n {
            let pivot = (col..n).max_by(|&x, &y| {
                a[(x, col)]
                    .abs()
                    .partial_cmp(&a[(y, col)].abs())
                    .unwrap_or(std::cmp::Ordering::Equal)
            })?;
            let p = a[(pivot, col)];
            if p == T::zero() || !p.is_finite() {
                return None;
            }
            if pivot != col {
                a.swap_rows(pivot, col);
                inv.swap_rows(pivot, col);
            }
            let scale = T::one() / a[(col, col)];
            for c in 0..n {
                a[(col, c)] = a[(col, c)] * scale;
                inv[(col, c)] = inv[(col, c)] * scale;
            }
            for r in 0..n {
                if r == col {
                    continue;
                }
                let factor = a[(r, col)];
                if factor == T::zero() {
                    continue;
                }
                for c in 0..n {
                    a[(r, c)] = a[(r, c)] - factor * a[(col, c)];
                    inv[(r, c)] = inv[(r, c)] - factor * inv[(col, c)];
                }
            }
        }
        Some(inv)
    }

    fn swap_rows(&mut self, x: usize, y: usize) {
        for c in 0..self.cols {
            self.data.swap(x * self.cols + c, y * self.cols + c);
        }
    }
}

impl<T> Index<(usize, usize)> for Matrix<T> {
    type Output = T;

    fn index(&self, (r, c): (usize, usize)) -> &T {
        &self.data[r * self.cols + c]
    }
}

impl<T> IndexMut<(usize, usize)> for Matrix<T> {
    fn index_mut(&mut self, (r, c): (usize, usize)) -> &mut T {
        &mut self.data[r * self.cols + c]
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn inverse_of_known_matrix() {
        let m = Matrix::from_row_major(2, 2, vec![4.0, 7.0, 2.0, 6.0]);
        let inv = m.inverse().unwrap();
        let expected = [0.6, -0.7, -0.2, 0.4];
        for (got, want) in inv.as_slice().iter().zip(expected) {
            assert!((got - want).abs() < 1e-12);
        }
    }

    #[test]
    fn singular_matrix_has_no_inverse() {
        let m = Matrix::from_row_major(2, 2, vec![1.0f32, 2.0, 2.0, 4.0]);
        assert!(m.inverse().is_none());
    }

    #[test]
    fn inverse_needs_pivoting() {
        let m = Matrix::from_row_major(2, 2, vec![0.0, 1.0, 1.0, 0.0]);
        let inv = m.inverse().unwrap();
        assert_eq!(inv.as_slice(), &[0.0, 1.0, 1.0, 0.0]);
    }
}
