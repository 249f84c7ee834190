//! Minimal dense row-major matrix plus a cyclic Jacobi eigen-solver for the
//! small symmetric matrices (graph Laplacians) this crate needs.

use std::ops::{Index, IndexMut};

use num_traits::{NumCast, Zero};

use crate::scalar::Scalar;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Matrix<T> {
    rows: usize,
    cols: usize,
    data: Vec<T>,
}

impl<T: Copy + Zero> Matrix<T> {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Self { rows, cols, data: vec![T::zero(); rows * cols] }
    }

    /// Builds a matrix from row slices; panics if the rows are ragged.
    pub fn from_rows(rows: &[Vec<T>]) -> Self {
        let cols = rows.first().map_or(0, Vec::len);
        assert!(rows.iter().all(|r| r.len() == cols), "ragged rows");
        Self { rows: rows.len(), cols, data: rows.iter().flatten().copied().collect() }
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn row(&self, i: usize) -> &[T] {
        &self.data[i * self.cols..(i + 1) * self.cols]
    }

    pub fn transpose(&self) -> Self {
        let mut t = Self::zeros(self.cols, self.rows);
        for i in 0..self.rows {
            for j in 0..self.cols {
                t[(j, i)] = self[(i, j)];
            }
        }
        t
    }

    pub fn to_rows(&self) -> Vec<Vec<T>> {
        (0..self.rows).map(|i| self.row(i).to_vec()).collect()
    }
}

impl<T> Matrix<T>
where
    T: Copy + Zero + std::ops::Mul<Output = T>,
{
    pub fn matmul(&self, rhs: &Self) -> Self {
        assert_eq!(self.cols, rhs.rows, "inner dimensions differ");
        let mut out = Self::zeros(self.rows, rhs.cols);
        for i in 0..self.rows {
            for k in 0..self.cols {
                let a = self[(i, k)];
                for j in 0..rhs.cols {
                    out[(i, j)] = out[(i, j)] + a * rhs[(k, j)];
                }
            }
        }
        out
    }

    pub fn mul_vec(&self, x: &[T]) -> Vec<T> {
        assert_eq!(self.cols, x.len());
        (0..self.rows).map(|i| self.row(i).iter().zip(x).fold(T::zero(), |acc, (&a, &b)| acc + a * b)).collect()
    }
}

impl<T: Copy + NumCast> Matrix<T> {
    /// Element-wise numeric conversion (e.g. exact integer Laplacian to floats).
    pub fn cast<U: Copy + NumCast>(&self) -> Matrix<U> {
        Matrix {
            rows: self.rows,
            cols: self.cols,
            data: self.data.iter().map(|&x| U::from(x).expect("representable")).collect(),
        }
    }
}

impl<T> Index<(usize, usize)> for Matrix<T> {
    type Output = T;
    fn index(&self, (i, j): (usize, usize)) -> &T {
        &self.data[i * self.cols + j]
    }
}

impl<T> IndexMut<(usize, usize)> for Matrix<T> {
    fn index_mut(&mut self, (i, j): (usize, usize)) -> &mut T {
        &mut self.data[i * self.cols + j]
    }
}

/// Off-diagonal tolerance of the Jacobi sweep, relative to the Frobenius norm.
pub const JACOBI_TOL: f64 = 1e-12;
const JACOBI_MAX_SWEEPS: usize = 100;

/// Eigenvalues of a symmetric matrix, ascending, by cyclic Jacobi rotations.
///
/// Intended for small matrices (n ≤ 64). Only the upper triangle is read.
pub fn symmetric_eigenvalues<T: Scalar>(m: &Matrix<T>) -> Vec<T> {
    assert_eq!(m.rows(), m.cols(), "matrix must be square");
    let n = m.rows();
    let mut a = m.clone();
    for i in 0..n {
        for j in 0..i {
            a[(i, j)] = a[(j, i)];
        }
    }
    let frob = a.data.iter().fold(T::zero(), |acc, &x| acc + x * x).sqrt();
    let tol = T::lit(JACOBI_TOL) * frob.max(T::min_positive_value());
    let two = T::lit(2.0);

    for _ in 0..JACOBI_MAX_SWEEPS {
        let mut off = T::zero();
        for p in 0..n {
            for q in p + 1..n {
                off = off + a[(p, q)] * a[(p, q)];
            }
        }
        if off.sqrt() <= tol {
            break;
        }
        for p in 0..n {
            for q in p + 1..n {
                let apq = a[(p, q)];
                if apq == T::zero() {
                    continue;
                }
                let theta = (a[(q, q)] - a[(p, p)]) / (two * apq);
                let t = theta.signum() / (theta.abs() + (theta * theta + T::one()).sqrt());
                let t = if theta == T::zero() { T::one() } else { t };
                let c = T::one() / (t * t + T::one()).sqrt();
                let s = t * c;
                for k in 0..n {
                    let akp = a[(k, p)];
                    let akq = a[(k, q)];
                    a[(k, p)] = c * akp - s * akq;
                    a[(k, q)] = s * akp + c * akq;
                }
                for k in 0..n {
                    let apk = a[(p, k)];
                    let aqk = a[(q, k)];
                    a[(p, k)] = c * apk - s * aqk;
                    a[(q, k)] = s * apk + c * aqk;
                }
            }
        }
    }
    let mut eig: Vec<T> = (0..n).map(|i| a[(i, i)]).collect();
    eig.sort_by(|x, y| x.partial_cmp(y).expect("finite eigenvalues"));
    eig
}
