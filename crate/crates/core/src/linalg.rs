//! Small dense linear algebra for the parameter-sized systems of the estimators.

use std::ops::{Index, IndexMut};

use serde::{Deserialize, Serialize};

use crate::scalar::Scalar;

/// Row-major dense matrix.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(bound = "S: Scalar")]
pub struct Matrix<S> {
    rows: usize,
    cols: usize,
    data: Vec<S>,
}

impl<S: Scalar> Matrix<S> {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Matrix {
            rows,
            cols,
            data: vec![S::zero(); rows * cols],
        }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Self::zeros(n, n);
        for i in 0..n {
            m[(i, i)] = S::one();
        }
        m
    }

    pub fn from_rows(rows: &[Vec<S>]) -> Self {
        let r = rows.len();
        let c = rows.first().map_or(0, Vec::len);
        let mut data = Vec::with_capacity(r * c);
        for row in rows {
            assert_eq!(row.len(), c, "ragged rows");
            data.extend_from_slice(row);
        }
        Matrix { rows: r, cols: c, data }
    }

    pub fn from_fn(rows: usize, cols: usize, f: impl Fn(usize, usize) -> S) -> Self {
        let mut m = Self::zeros(rows, cols);
        for i in 0..rows {
            for j in 0..cols {
                m[(i, j)] = f(i, j);
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

    pub fn row(&self, i: usize) -> &[S] {
        &self.data[i * self.cols..(i + 1) * self.cols]
    }

    pub fn row_mut(&mut self, i: usize) -> &mut [S] {
        &mut self.data[i * self.cols..(i + 1) * self.cols]
    }

    pub fn to_rows(&self) -> Vec<Vec<S>> {
        (0..self.rows).map(|i| self.row(i).to_vec()).collect()
    }

    pub fn diagonal(&self) -> Vec<S> {
        (0..self.rows.min(self.cols)).map(|i| self[(i, i)]).collect()
    }

    pub fn transpose(&self) -> Self {
        Self::from_fn(self.cols, self.rows, |i, j| self[(j, i)])
    }

    pub fn mul_vec(&self, x: &[S]) -> Vec<S> {
        assert_eq!(x.len(), self.cols);
        (0..self.rows).map(|i| dot(self.row(i), x)).collect()
    }

    pub fn matmul(&self, other: &Matrix<S>) -> Self {
        assert_eq!(self.cols, other.rows);
        let mut out = Self::zeros(self.rows, other.cols);
        for i in 0..self.rows {
            for k in 0..self.cols {
                let a = self[(i, k)];
                if a == S::zero() {
                    continue;
                }
                for j in 0..other.cols {
                    out[(i, j)] = out[(i, j)] + a * other[(k, j)];
                }
            }
        }
        out
    }

    pub fn scale(&self, c: S) -> Self {
        Matrix {
            rows: self.rows,
            cols: self.cols,
            data: self.data.iter().map(|&x| x * c).collect(),
        }
    }

    pub fn add(&self, other: &Matrix<S>) -> Self {
        assert_eq!((self.rows, self.cols), (other.rows, other.cols));
        Matrix {
            rows: self.rows,
            cols: self.cols,
            data: self.data.iter().zip(&other.data).map(|(&a, &b)| a + b).collect(),
        }
    }

    /// `self += c * x xᵀ`.
    pub fn add_outer(&mut self, c: S, x: &[S]) {
        assert_eq!(self.rows, x.len());
        assert_eq!(self.cols, x.len());
        for i in 0..x.len() {
            let ci = c * x[i];
            if ci == S::zero() {
                continue;
            }
            for j in 0..x.len() {
                self[(i, j)] = self[(i, j)] + ci * x[j];
            }
        }
    }

    pub fn symmetrize(&mut self) {
        let half = S::of(0.5);
        for i in 0..self.rows {
            for j in i + 1..self.cols {
                let m = half * (self[(i, j)] + self[(j, i)]);
                self[(i, j)] = m;
                self[(j, i)] = m;
            }
        }
    }

    pub fn max_abs(&self) -> S {
        self.data.iter().fold(S::zero(), |m, &x| m.max(x.abs()))
    }

    pub fn is_finite(&self) -> bool {
        self.data.iter().all(|x| x.is_finite())
    }

    /// Lower Cholesky factor of a symmetric positive definite matrix.
    pub fn cholesky(&self) -> Option<Matrix<S>> {
        let n = self.rows;
        assert_eq!(n, self.cols);
        let mut l = Self::zeros(n, n);
        for j in 0..n {
            let mut d = self[(j, j)];
            for k in 0..j {
                d = d - l[(j, k)] * l[(j, k)];
            }
            if !(d > S::zero()) || !d.is_finite() {
                return None;
            }
            let d = d.sqrt();
            l[(j, j)] = d;
            for i in j + 1..n {
                let mut s = self[(i, j)];
                for k in 0..j {
                    s = s - l[(i, k)] * l[(j, k)];
                }
                l[(i, j)] = s / d;
            }
        }
        Some(l)
    }

    /// Solves `A x = b` given the Cholesky factor `L` of `A`.
    pub fn cholesky_solve(l: &Matrix<S>, b: &[S]) -> Vec<S> {
        let n = l.rows;
        let mut y = b.to_vec();
        for i in 0..n {
            let mut s = y[i];
            for k in 0..i {
                s = s - l[(i, k)] * y[k];
            }
            y[i] = s / l[(i, i)];
        }
        for i in (0..n).rev() {
            let mut s = y[i];
            for k in i + 1..n {
                s = s - l[(k, i)] * y[k];
            }
            y[i] = s / l[(i, i)];
        }
        y
    }

    /// Inverse of a symmetric positive definite matrix.
    pub fn spd_inverse(&self) -> Option<Matrix<S>> {
        let l = self.cholesky()?;
        let n = self.rows;
        let mut inv = Self::zeros(n, n);
        let mut e = vec![S::zero(); n];
        for j in 0..n {
            e.iter_mut().for_each(|x| *x = S::zero());
            e[j] = S::one();
            let col = Self::cholesky_solve(&l, &e);
            for i in 0..n {
                inv[(i, j)] = col[i];
            }
        }
        inv.symmetrize();
        Some(inv)
    }

    /// Eigen-decomposition of a symmetric matrix by cyclic Jacobi rotations.
    /// Returns eigenvalues and the eigenvectors as columns.
    pub fn symmetric_eigen(&self) -> (Vec<S>, Matrix<S>) {
        let n = self.rows;
        assert_eq!(n, self.cols);
        let mut a = self.clone();
        let mut v = Self::identity(n);
        let eps = S::epsilon();
        for _sweep in 0..100 {
            let mut off = S::zero();
            for i in 0..n {
                for j in i + 1..n {
                    off = off + a[(i, j)] * a[(i, j)];
                }
            }
            let scale = a.max_abs().max(S::min_positive_value());
            if off.sqrt() <= eps * scale {
                break;
            }
            for p in 0..n {
                for q in p + 1..n {
                    let apq = a[(p, q)];
                    if apq.abs() <= S::min_positive_value() {
                        continue;
                    }
                    let theta = (a[(q, q)] - a[(p, p)]) / (S::of(2.0) * apq);
                    let t = theta.signum() / (theta.abs() + (theta * theta + S::one()).sqrt());
                    let c = S::one() / (t * t + S::one()).sqrt();
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
                    for k in 0..n {
                        let vkp = v[(k, p)];
                        let vkq = v[(k, q)];
                        v[(k, p)] = c * vkp - s * vkq;
                        v[(k, q)] = s * vkp + c * vkq;
                    }
                }
            }
        }
        (a.diagonal(), v)
    }

    /// Moore-Penrose pseudo-inverse of a symmetric matrix. Also reports
    /// whether any eigenvalue was dropped as numerically zero.
    pub fn symmetric_pinv(&self) -> (Matrix<S>, bool) {
        let n = self.rows;
        let (vals, vecs) = self.symmetric_eigen();
        let top = vals.iter().fold(S::zero(), |m, &x| m.max(x.abs()));
        let cutoff = top * S::of_usize(n.max(1)) * S::epsilon() * S::of(16.0);
        let mut out = Self::zeros(n, n);
        let mut dropped = false;
        for (idx, &lambda) in vals.iter().enumerate() {
            if lambda.abs() <= cutoff {
                dropped = true;
                continue;
            }
            let inv = S::one() / lambda;
            for i in 0..n {
                let vi = vecs[(i, idx)] * inv;
                for j in 0..n {
                    out[(i, j)] = out[(i, j)] + vi * vecs[(j, idx)];
                }
            }
        }
        out.symmetrize();
        (out, dropped)
    }

    pub fn map<T: Scalar>(&self, f: impl Fn(S) -> T) -> Matrix<T> {
        Matrix {
            rows: self.rows,
            cols: self.cols,
            data: self.data.iter().map(|&x| f(x)).collect(),
        }
    }
}

impl<S> Index<(usize, usize)> for Matrix<S> {
    type Output = S;

    #[inline]
    fn index(&self, (i, j): (usize, usize)) -> &S {
        &self.data[i * self.cols + j]
    }
}

impl<S> IndexMut<(usize, usize)> for Matrix<S> {
    #[inline]
    fn index_mut(&mut self, (i, j): (usize, usize)) -> &mut S {
        &mut self.data[i * self.cols + j]
    }
}

#[inline]
pub fn dot<S: Scalar>(a: &[S], b: &[S]) -> S {
    a.iter().zip(b).fold(S::zero(), |acc, (&x, &y)| acc + x * y)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use proptest::prelude::*;

    fn spd(seed: &[f64], n: usize) -> Matrix<f64> {
        let b = Matrix::from_fn(n, n, |i, j| seed[(i * n + j) % seed.len()] + if i == j { 0.5 } else { 0.0 });
        b.matmul(&b.transpose()).add(&Matrix::identity(n).scale(0.1))
    }

    #[test]
    fn cholesky_inverse_round_trip() {
        let a = spd(&[0.3, -1.2, 0.7, 2.0, 0.1], 4);
        let inv = a.spd_inverse().unwrap();
        let prod = a.matmul(&inv);
        for i in 0..4 {
            for j in 0..4 {
                assert_relative_eq!(prod[(i, j)], if i == j { 1.0 } else { 0.0 }, epsilon = 1e-10);
            }
        }
    }

    #[test]
    fn cholesky_rejects_indefinite() {
        let a = Matrix::from_rows(&[vec![1.0, 2.0], vec![2.0, 1.0]]);
        assert!(a.cholesky().is_none());
    }

    #[test]
    fn pinv_of_singular_matrix() {
        let a = Matrix::from_rows(&[vec![1.0, 1.0], vec![1.0, 1.0]]);
        let (p, dropped) = a.symmetric_pinv();
        assert!(dropped);
        for i in 0..2 {
            for j in 0..2 {
                assert_relative_eq!(p[(i, j)], 0.25, epsilon = 1e-12);
            }
        }
    }

    proptest! {
        #[test]
        fn eigen_reconstructs(seed in proptest::collection::vec(-2.0f64..2.0, 25), n in 1usize..6) {
            let a = spd(&seed, n);
            let (vals, vecs) = a.symmetric_eigen();
            let rebuilt = Matrix::from_fn(n, n, |i, j| (0..n).map(|k| vecs[(i, k)] * vals[k] * vecs[(j, k)]).sum::<f64>());
            for i in 0..n {
                for j in 0..n {
                    prop_assert!((rebuilt[(i, j)] - a[(i, j)]).abs() < 1e-8 * (1.0 + a.max_abs()));
                }
            }
        }
    }
}
