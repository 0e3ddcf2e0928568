//! Dense row-major matrices with the handful of factorizations the mixed
//! model needs: Cholesky for symmetric positive-definite systems and
//! Householder QR with column pivoting for rank detection and least squares.

use alloc::vec;
use alloc::vec::Vec;
use core::ops::{Index, IndexMut};

use crate::error::{Error, Result};
use serde::{Deserialize, Serialize};

#[derive(Clone, Debug, PartialEq)]
pub struct Matrix {
    rows: usize,
    cols: usize,
    data: Vec<f64>,
}

impl Matrix {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Self { rows, cols, data: vec![0.0; rows * cols] }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Self::zeros(n, n);
        for i in 0..n {
            m[(i, i)] = 1.0;
        }
        m
    }

    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self> {
        let cols = rows.first().map_or(0, Vec::len);
        if rows.iter().any(|r| r.len() != cols) {
            return Err(Error::Validation("ragged matrix rows".into()));
        }
        Ok(Self { rows: rows.len(), cols, data: rows.iter().flatten().copied().collect() })
    }

    pub fn from_row_major(rows: usize, cols: usize, data: Vec<f64>) -> Result<Self> {
        if data.len() != rows * cols {
            return Err(Error::Validation("matrix data length mismatch".into()));
        }
        Ok(Self { rows, cols, data })
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.data[i * self.cols..(i + 1) * self.cols]
    }

    pub fn column(&self, j: usize) -> Vec<f64> {
        (0..self.rows).map(|i| self[(i, j)]).collect()
    }

    pub fn diagonal(&self) -> Vec<f64> {
        (0..self.rows.min(self.cols)).map(|i| self[(i, i)]).collect()
    }

    /// `selfᵀ · self`.
    pub fn gram(&self) -> Matrix {
        let p = self.cols;
        let mut g = Matrix::zeros(p, p);
        for i in 0..self.rows {
            let r = self.row(i);
            for a in 0..p {
                let ra = r[a];
                if ra == 0.0 {
                    continue;
                }
                for b in a..p {
                    g[(a, b)] += ra * r[b];
                }
            }
        }
        for a in 0..p {
            for b in 0..a {
                g[(a, b)] = g[(b, a)];
            }
        }
        g
    }

    /// `selfᵀ · v`.
    pub fn t_mul_vec(&self, v: &[f64]) -> Vec<f64> {
        let mut out = vec![0.0; self.cols];
        for i in 0..self.rows {
            let vi = v[i];
            for (o, x) in out.iter_mut().zip(self.row(i)) {
                *o += x * vi;
            }
        }
        out
    }

    pub fn mul_vec(&self, v: &[f64]) -> Vec<f64> {
        (0..self.rows).map(|i| dot(self.row(i), v)).collect()
    }

    pub fn mul(&self, other: &Matrix) -> Matrix {
        let mut out = Matrix::zeros(self.rows, other.cols);
        for i in 0..self.rows {
            for k in 0..self.cols {
                let a = self[(i, k)];
                if a == 0.0 {
                    continue;
                }
                for j in 0..other.cols {
                    out[(i, j)] += a * other[(k, j)];
                }
            }
        }
        out
    }

    pub fn transpose(&self) -> Matrix {
        let mut t = Matrix::zeros(self.cols, self.rows);
        for i in 0..self.rows {
            for j in 0..self.cols {
                t[(j, i)] = self[(i, j)];
            }
        }
        t
    }

    /// Keeps the listed rows in the given order.
    pub fn select_rows(&self, idx: &[usize]) -> Matrix {
        let mut data = Vec::with_capacity(idx.len() * self.cols);
        for &i in idx {
            data.extend_from_slice(self.row(i));
        }
        Matrix { rows: idx.len(), cols: self.cols, data }
    }
}

impl Index<(usize, usize)> for Matrix {
    type Output = f64;
    fn index(&self, (i, j): (usize, usize)) -> &f64 {
        &self.data[i * self.cols + j]
    }
}

impl IndexMut<(usize, usize)> for Matrix {
    fn index_mut(&mut self, (i, j): (usize, usize)) -> &mut f64 {
        &mut self.data[i * self.cols + j]
    }
}

pub fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// Lower-triangular Cholesky factor `L` with `A = L Lᵀ`.
#[derive(Clone, Debug)]
pub struct Cholesky {
    l: Matrix,
}

impl Cholesky {
    pub fn new(a: &Matrix) -> Result<Self> {
        let n = a.rows();
        if a.cols() != n {
            return Err(Error::Numerical("cholesky of non-square matrix".into()));
        }
        let mut l = Matrix::zeros(n, n);
        for j in 0..n {
            let mut d = a[(j, j)];
            for k in 0..j {
                d -= l[(j, k)] * l[(j, k)];
            }
            if !(d > 0.0) || !d.is_finite() {
                return Err(Error::Numerical("matrix is not positive definite".into()));
            }
            let djj = libm::sqrt(d);
            l[(j, j)] = djj;
            for i in (j + 1)..n {
                let mut s = a[(i, j)];
                for k in 0..j {
                    s -= l[(i, k)] * l[(j, k)];
                }
                l[(i, j)] = s / djj;
            }
        }
        Ok(Self { l })
    }

    pub fn factor(&self) -> &Matrix {
        &self.l
    }

    /// Solves `L z = b`.
    pub fn forward(&self, b: &[f64]) -> Vec<f64> {
        let n = self.l.rows();
        let mut z = b.to_vec();
        for i in 0..n {
            let mut s = z[i];
            for k in 0..i {
                s -= self.l[(i, k)] * z[k];
            }
            z[i] = s / self.l[(i, i)];
        }
        z
    }

    /// Solves `Lᵀ x = z`.
    pub fn backward(&self, z: &[f64]) -> Vec<f64> {
        let n = self.l.rows();
        let mut x = z.to_vec();
        for i in (0..n).rev() {
            let mut s = x[i];
            for k in (i + 1)..n {
                s -= self.l[(k, i)] * x[k];
            }
            x[i] = s / self.l[(i, i)];
        }
        x
    }

    pub fn solve(&self, b: &[f64]) -> Vec<f64> {
        self.backward(&self.forward(b))
    }

    pub fn log_det(&self) -> f64 {
        2.0 * self.l.diagonal().iter().map(|d| libm::log(*d)).sum::<f64>()
    }

    pub fn inverse(&self) -> Matrix {
        let n = self.l.rows();
        let mut inv = Matrix::zeros(n, n);
        let mut e = vec![0.0; n];
        for j in 0..n {
            e.iter_mut().for_each(|x| *x = 0.0);
            e[j] = 1.0;
            let col = self.solve(&e);
            for i in 0..n {
                inv[(i, j)] = col[i];
            }
        }
        inv
    }
}

/// Householder QR with column pivoting, `A P = Q R`.
#[derive(Clone, Debug)]
pub struct PivotedQr {
    /// Householder vectors below the diagonal, R on and above.
    qr: Matrix,
    tau: Vec<f64>,
    /// `perm[k]` is the original column in position k.
    perm: Vec<usize>,
    rank: usize,
}

impl PivotedQr {
    /// Factorizes `a`; a column is deemed dependent when its remaining norm
    /// falls below `tol` times the largest diagonal of R.
    pub fn new(a: &Matrix, tol: f64) -> Self {
        let (m, n) = (a.rows(), a.cols());
        let mut qr = a.clone();
        let mut perm: Vec<usize> = (0..n).collect();
        let mut norms: Vec<f64> = (0..n).map(|j| (0..m).map(|i| qr[(i, j)] * qr[(i, j)]).sum()).collect();
        let steps = m.min(n);
        let mut tau = vec![0.0; steps];
        let mut rank = 0;
        let mut r00 = 0.0f64;
        for k in 0..steps {
            // pivot: recompute remaining column norms exactly for stability
            for j in k..n {
                norms[j] = (k..m).map(|i| qr[(i, j)] * qr[(i, j)]).sum();
            }
            let (best, &best_norm) = norms[k..]
                .iter()
                .enumerate()
                .max_by(|a, b| a.1.total_cmp(b.1))
                .map(|(i, v)| (i + k, v))
                .expect("non-empty");
            if best != k {
                for i in 0..m {
                    let t = qr[(i, k)];
                    qr[(i, k)] = qr[(i, best)];
                    qr[(i, best)] = t;
                }
                perm.swap(k, best);
                norms.swap(k, best);
            }
            let alpha_norm = libm::sqrt(best_norm);
            if k == 0 {
                r00 = alpha_norm;
            }
            if alpha_norm <= tol * r00.max(f64::MIN_POSITIVE) {
                break;
            }
            let x0 = qr[(k, k)];
            let alpha = if x0 >= 0.0 { -alpha_norm } else { alpha_norm };
            let v0 = x0 - alpha;
            // v = [1, x_{k+1..}/v0], tau = (alpha - x0) / alpha
            for i in (k + 1)..m {
                qr[(i, k)] /= v0;
            }
            tau[k] = (alpha - x0) / alpha;
            qr[(k, k)] = alpha;
            for j in (k + 1)..n {
                let mut s = qr[(k, j)];
                for i in (k + 1)..m {
                    s += qr[(i, k)] * qr[(i, j)];
                }
                s *= tau[k];
                qr[(k, j)] -= s;
                for i in (k + 1)..m {
                    let vik = qr[(i, k)];
                    qr[(i, j)] -= s * vik;
                }
            }
            rank += 1;
        }
        Self { qr, tau, perm, rank }
    }

    pub fn rank(&self) -> usize {
        self.rank
    }

    /// Original indices of columns judged linearly dependent on the others.
    pub fn dependent_columns(&self) -> Vec<usize> {
        let mut v: Vec<usize> = self.perm[self.rank..].to_vec();
        v.sort_unstable();
        v
    }

    /// Applies `Qᵀ` to `b`.
    pub fn qt_mul(&self, b: &[f64]) -> Vec<f64> {
        let m = self.qr.rows();
        let mut y = b.to_vec();
        for k in 0..self.rank {
            let mut s = y[k];
            for i in (k + 1)..m {
                s += self.qr[(i, k)] * y[i];
            }
            s *= self.tau[k];
            y[k] -= s;
            for i in (k + 1)..m {
                y[i] -= s * self.qr[(i, k)];
            }
        }
        y
    }

    /// Least-squares solution for a full-rank factorization.
    pub fn solve_least_squares(&self, b: &[f64]) -> Result<Vec<f64>> {
        let n = self.qr.cols();
        if self.rank < n {
            return Err(Error::Numerical("least squares on rank-deficient factorization".into()));
        }
        let y = self.qt_mul(b);
        let mut z = vec![0.0; n];
        for i in (0..n).rev() {
            let mut s = y[i];
            for k in (i + 1)..n {
                s -= self.qr[(i, k)] * z[k];
            }
            z[i] = s / self.qr[(i, i)];
        }
        let mut x = vec![0.0; n];
        for (k, &orig) in self.perm.iter().enumerate() {
            x[orig] = z[k];
        }
        Ok(x)
    }

    /// `(AᵀA)⁻¹ = P R⁻¹ R⁻ᵀ Pᵀ` for a full-rank factorization.
    pub fn gram_inverse(&self) -> Result<Matrix> {
        let n = self.qr.cols();
        if self.rank < n {
            return Err(Error::Numerical("gram inverse of rank-deficient factorization".into()));
        }
        // R⁻¹ by back substitution, column by column
        let mut rinv = Matrix::zeros(n, n);
        for j in 0..n {
            for i in (0..=j).rev() {
                let mut s = if i == j { 1.0 } else { 0.0 };
                for k in (i + 1)..=j {
                    s -= self.qr[(i, k)] * rinv[(k, j)];
                }
                rinv[(i, j)] = s / self.qr[(i, i)];
            }
        }
        let g = rinv.mul(&rinv.transpose());
        let mut out = Matrix::zeros(n, n);
        for a in 0..n {
            for b in 0..n {
                out[(self.perm[a], self.perm[b])] = g[(a, b)];
            }
        }
        Ok(out)
    }
}

impl Serialize for Matrix {
    fn serialize<S: serde::Serializer>(&self, s: S) -> core::result::Result<S::Ok, S::Error> {
        s.collect_seq((0..self.rows()).map(|i| self.row(i)))
    }
}

impl<'de> Deserialize<'de> for Matrix {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> core::result::Result<Self, D::Error> {
        let rows: Vec<Vec<f64>> = Vec::deserialize(d)?;
        Matrix::from_rows(&rows).map_err(serde::de::Error::custom)
    }
}
