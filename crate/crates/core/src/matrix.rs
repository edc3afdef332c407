//! Dense complex matrices for the `T×T` space-time algebra (`T ≤ 4`).

use std::ops::{Index, IndexMut, Mul, Sub};

use crate::scalar::{Cplx, Real};

/// Row-major complex matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct CMatrix<T> {
    rows: usize,
    cols: usize,
    data: Vec<Cplx<T>>,
}

impl<T: Real> CMatrix<T> {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Self { rows, cols, data: vec![Cplx::new(T::zero(), T::zero()); rows * cols] }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Self::zeros(n, n);
        for i in 0..n {
            m[(i, i)] = Cplx::new(T::one(), T::zero());
        }
        m
    }

    /// Panics if the rows are ragged.
    pub fn from_rows(rows: Vec<Vec<Cplx<T>>>) -> Self {
        let r = rows.len();
        let c = rows.first().map_or(0, Vec::len);
        assert!(rows.iter().all(|row| row.len() == c), "ragged matrix rows");
        Self { rows: r, cols: c, data: rows.into_iter().flatten().collect() }
    }

    pub fn from_real(rows: &[&[f64]]) -> Self {
        Self::from_rows(rows.iter().map(|r| r.iter().map(|&v| Cplx::new(T::of(v), T::zero())).collect()).collect())
    }

    /// Builds a matrix whose columns are the given vectors.
    pub fn from_columns(cols: &[Vec<Cplx<T>>]) -> Self {
        let c = cols.len();
        let r = cols.first().map_or(0, Vec::len);
        let mut m = Self::zeros(r, c);
        for (j, col) in cols.iter().enumerate() {
            assert_eq!(col.len(), r, "ragged matrix columns");
            for (i, v) in col.iter().enumerate() {
                m[(i, j)] = *v;
            }
        }
        m
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn is_square(&self) -> bool {
        self.rows == self.cols
    }

    pub fn conj(&self) -> Self {
        Self { rows: self.rows, cols: self.cols, data: self.data.iter().map(|v| v.conj()).collect() }
    }

    pub fn transpose(&self) -> Self {
        let mut m = Self::zeros(self.cols, self.rows);
        for i in 0..self.rows {
            for j in 0..self.cols {
                m[(j, i)] = self[(i, j)];
            }
        }
        m
    }

    /// Conjugate transpose.
    pub fn adjoint(&self) -> Self {
        self.transpose().conj()
    }

    pub fn scale(&self, s: Cplx<T>) -> Self {
        Self { rows: self.rows, cols: self.cols, data: self.data.iter().map(|v| *v * s).collect() }
    }

    pub fn scale_real(&self, s: T) -> Self {
        self.scale(Cplx::new(s, T::zero()))
    }

    pub fn add(&self, other: &Self) -> Self {
        assert_eq!((self.rows, self.cols), (other.rows, other.cols));
        Self {
            rows: self.rows,
            cols: self.cols,
            data: self.data.iter().zip(&other.data).map(|(a, b)| *a + *b).collect(),
        }
    }

    pub fn mul_vec(&self, v: &[Cplx<T>]) -> Vec<Cplx<T>> {
        assert_eq!(v.len(), self.cols);
        (0..self.rows)
            .map(|i| {
                self.data[i * self.cols..(i + 1) * self.cols]
                    .iter()
                    .zip(v)
                    .fold(Cplx::new(T::zero(), T::zero()), |acc, (a, b)| acc + *a * *b)
            })
            .collect()
    }

    /// `selfᴴ·v` without materializing the adjoint.
    pub fn adjoint_mul_vec(&self, v: &[Cplx<T>]) -> Vec<Cplx<T>> {
        assert_eq!(v.len(), self.rows);
        (0..self.cols)
            .map(|j| (0..self.rows).fold(Cplx::new(T::zero(), T::zero()), |acc, i| acc + self[(i, j)].conj() * v[i]))
            .collect()
    }

    pub fn diagonal(&self) -> Vec<Cplx<T>> {
        (0..self.rows.min(self.cols)).map(|i| self[(i, i)]).collect()
    }

    pub fn frobenius_norm(&self) -> T {
        self.data.iter().fold(T::zero(), |a, v| a + v.norm_sqr()).sqrt()
    }

    pub fn max_abs(&self) -> T {
        self.data.iter().fold(T::zero(), |a, v| a.max(v.norm()))
    }

    pub fn is_zero(&self) -> bool {
        self.data.iter().all(|v| *v == Cplx::new(T::zero(), T::zero()))
    }

    /// `‖AᴴA − I‖_max ≤ tol`
    pub fn is_unitary(&self, tol: T) -> bool {
        self.is_square() && (&(&self.adjoint() * self) - &Self::identity(self.rows)).max_abs() <= tol
    }

    /// Determinant by LU decomposition with partial pivoting.
    pub fn det(&self) -> Cplx<T> {
        assert!(self.is_square(), "determinant of a non-square matrix");
        let n = self.rows;
        let mut a = self.data.clone();
        let mut det = Cplx::new(T::one(), T::zero());
        for col in 0..n {
            let pivot = (col..n)
                .max_by(|&i, &j| a[i * n + col].norm().partial_cmp(&a[j * n + col].norm()).unwrap())
                .unwrap();
            if a[pivot * n + col].norm() == T::zero() {
                return Cplx::new(T::zero(), T::zero());
            }
            if pivot != col {
                for j in 0..n {
                    a.swap(col * n + j, pivot * n + j);
                }
                det = -det;
            }
            let p = a[col * n + col];
            det = det * p;
            for i in col + 1..n {
                let f = a[i * n + col] / p;
                for j in col..n {
                    let v = a[col * n + j];
                    a[i * n + j] = a[i * n + j] - f * v;
                }
            }
        }
        det
    }
}

impl<T> Index<(usize, usize)> for CMatrix<T> {
    type Output = Cplx<T>;
    fn index(&self, (i, j): (usize, usize)) -> &Cplx<T> {
        &self.data[i * self.cols + j]
    }
}

impl<T> IndexMut<(usize, usize)> for CMatrix<T> {
    fn index_mut(&mut self, (i, j): (usize, usize)) -> &mut Cplx<T> {
        &mut self.data[i * self.cols + j]
    }
}

impl<T: Real> Mul for &CMatrix<T> {
    type Output = CMatrix<T>;
    fn mul(self, rhs: &CMatrix<T>) -> CMatrix<T> {
        assert_eq!(self.cols, rhs.rows, "matrix dimension mismatch");
        let mut out = CMatrix::zeros(self.rows, rhs.cols);
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
}

impl<T: Real> Sub for &CMatrix<T> {
    type Output = CMatrix<T>;
    fn sub(self, rhs: &CMatrix<T>) -> CMatrix<T> {
        self.add(&rhs.scale_real(-T::one()))
    }
}
