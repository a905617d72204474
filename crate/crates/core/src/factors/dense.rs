//! Small dense matrices: LU with partial pivoting, log-magnitude determinants, Cramer's rule.

use serde::Serialize;

use crate::error::{Error, Result};

/// Row-major square matrix.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Matrix {
    pub n: usize,
    pub data: Vec<f64>,
}

impl Matrix {
    pub fn zeros(n: usize) -> Self {
        Matrix { n, data: vec![0.0; n * n] }
    }

    pub fn identity(n: usize) -> Self {
        Matrix::from_fn(n, |i, j| if i == j { 1.0 } else { 0.0 })
    }

    pub fn from_fn(n: usize, f: impl Fn(usize, usize) -> f64) -> Self {
        let mut m = Matrix::zeros(n);
        for i in 0..n {
            for j in 0..n {
                m.data[i * n + j] = f(i, j);
            }
        }
        m
    }

    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self> {
        let n = rows.len();
        if let Some(r) = rows.iter().find(|r| r.len() != n) {
            return Err(Error::DimensionMismatch { expected: n, got: r.len() });
        }
        Ok(Matrix::from_fn(n, |i, j| rows[i][j]))
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.data[i * self.n + j]
    }

    pub fn set(&mut self, i: usize, j: usize, v: f64) {
        self.data[i * self.n + j] = v;
    }

    pub fn rows(&self) -> Vec<Vec<f64>> {
        self.data.chunks(self.n).map(|r| r.to_vec()).collect()
    }

    pub fn apply(&self, x: &[f64]) -> Vec<f64> {
        self.data.chunks(self.n).map(|r| r.iter().zip(x).map(|(a, b)| a * b).sum()).collect()
    }

    pub fn transpose(&self) -> Matrix {
        Matrix::from_fn(self.n, |i, j| self.get(j, i))
    }

    /// Copy with column `col` replaced by `v`.
    pub fn replace_column(&self, col: usize, v: &[f64]) -> Matrix {
        let mut m = self.clone();
        for i in 0..self.n {
            m.set(i, col, v[i]);
        }
        m
    }

    /// Sub-matrix on the given rows and columns.
    pub fn select(&self, rows: &[usize], cols: &[usize]) -> Vec<Vec<f64>> {
        rows.iter().map(|&i| cols.iter().map(|&j| self.get(i, j)).collect()).collect()
    }

    pub fn max_abs(&self) -> f64 {
        self.data.iter().fold(0.0, |m, v| m.max(v.abs()))
    }

    /// Largest `|M_ij - M_ji|` over the largest entry.
    pub fn asymmetry(&self) -> f64 {
        let mut w = 0.0f64;
        for i in 0..self.n {
            for j in 0..i {
                w = w.max((self.get(i, j) - self.get(j, i)).abs());
            }
        }
        w / self.max_abs().max(f64::MIN_POSITIVE)
    }

    /// Lower Cholesky factor, or `None` if the matrix is not positive definite.
    pub fn cholesky(&self) -> Option<Matrix> {
        let n = self.n;
        let mut l = Matrix::zeros(n);
        for j in 0..n {
            let mut s = self.get(j, j);
            for k in 0..j {
                s -= l.get(j, k) * l.get(j, k);
            }
            if !(s > 0.0) {
                return None;
            }
            let ljj = s.sqrt();
            l.set(j, j, ljj);
            for i in j + 1..n {
                let mut s = self.get(i, j);
                for k in 0..j {
                    s -= l.get(i, k) * l.get(j, k);
                }
                l.set(i, j, s / ljj);
            }
        }
        Some(l)
    }
}

/// Determinant as sign and base-10 log magnitude.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Determinant {
    pub sign: f64,
    pub log10_abs: f64,
}

impl Determinant {
    pub fn value(&self) -> f64 {
        if self.sign == 0.0 {
            0.0
        } else {
            self.sign * 10f64.powf(self.log10_abs)
        }
    }

    /// `self / other`, computed in log space.
    pub fn ratio(&self, other: &Determinant) -> f64 {
        if self.sign == 0.0 {
            return 0.0;
        }
        self.sign * other.sign * 10f64.powf(self.log10_abs - other.log10_abs)
    }
}

/// `PA = LU` with unit lower `L`.
#[derive(Debug, Clone)]
pub struct Lu {
    lu: Matrix,
    perm: Vec<usize>,
    swaps: usize,
    /// Sum of `log10` of the row norms, the Hadamard bound on `|det|`.
    log10_scale: f64,
}

impl Lu {
    pub fn new(a: &Matrix) -> Lu {
        let n = a.n;
        let log10_scale = a
            .data
            .chunks(n)
            .map(|r| r.iter().map(|v| v * v).sum::<f64>().sqrt().max(f64::MIN_POSITIVE).log10())
            .sum();
        let mut lu = a.clone();
        let mut perm: Vec<usize> = (0..n).collect();
        let mut swaps = 0;
        for k in 0..n {
            let p = (k..n).max_by(|&i, &j| lu.get(i, k).abs().total_cmp(&lu.get(j, k).abs())).unwrap();
            if p != k {
                for j in 0..n {
                    lu.data.swap(k * n + j, p * n + j);
                }
                perm.swap(k, p);
                swaps += 1;
            }
            let piv = lu.get(k, k);
            if piv == 0.0 {
                continue;
            }
            for i in k + 1..n {
                let f = lu.get(i, k) / piv;
                lu.set(i, k, f);
                for j in k + 1..n {
                    let v = lu.get(i, j) - f * lu.get(k, j);
                    lu.set(i, j, v);
                }
            }
        }
        Lu { lu, perm, swaps, log10_scale }
    }

    pub fn det(&self) -> Determinant {
        let mut sign = if self.swaps % 2 == 0 { 1.0 } else { -1.0 };
        let mut log = 0.0;
        for k in 0..self.lu.n {
            let u = self.lu.get(k, k);
            if u == 0.0 {
                return Determinant { sign: 0.0, log10_abs: f64::NEG_INFINITY };
            }
            sign *= u.signum();
            log += u.abs().log10();
        }
        Determinant { sign, log10_abs: log }
    }

    /// `|det|` below `1e-12` times the Hadamard bound.
    pub fn is_singular(&self) -> bool {
        self.det().log10_abs < self.log10_scale - 12.0
    }

    pub fn solve(&self, b: &[f64]) -> Result<Vec<f64>> {
        if self.is_singular() {
            return Err(Error::Singular { log10_abs_det: self.det().log10_abs });
        }
        let n = self.lu.n;
        let mut x: Vec<f64> = self.perm.iter().map(|&p| b[p]).collect();
        for i in 0..n {
            for j in 0..i {
                x[i] -= self.lu.get(i, j) * x[j];
            }
        }
        for i in (0..n).rev() {
            for j in i + 1..n {
                x[i] -= self.lu.get(i, j) * x[j];
            }
            x[i] /= self.lu.get(i, i);
        }
        Ok(x)
    }
}

pub fn det(a: &Matrix) -> Determinant {
    Lu::new(a).det()
}

/// `x_k = det(A with column k replaced by b) / det(A)` for the requested columns.
pub fn cramer(a: &Matrix, b: &[f64], cols: &[usize]) -> Result<Vec<f64>> {
    let lu = Lu::new(a);
    if lu.is_singular() {
        return Err(Error::Singular { log10_abs_det: lu.det().log10_abs });
    }
    let d = lu.det();
    Ok(cols.iter().map(|&k| det(&a.replace_column(k, b)).ratio(&d)).collect())
}
