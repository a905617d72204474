//! CSR matrices, preconditioned conjugate gradients, a sparse Cholesky
//! factorisation and a Lanczos estimate of the smallest eigenvalue.

use faer::linalg::solvers::Solve;
use faer::sparse::{SparseColMat, Triplet};
use faer::{Mat, Side};

use crate::error::{Error, Result};

/// Square sparse matrix in compressed-row form.
#[derive(Debug, Clone, PartialEq)]
pub struct Csr {
    pub n: usize,
    pub row_ptr: Vec<usize>,
    pub col: Vec<usize>,
    pub val: Vec<f64>,
}

impl Csr {
    /// Sums duplicate `(row, col, value)` entries.
    pub fn from_triplets(n: usize, mut entries: Vec<(u32, u32, f64)>) -> Self {
        entries.sort_unstable_by_key(|&(r, c, _)| ((r as u64) << 32) | c as u64);
        let mut row_ptr = vec![0usize; n + 1];
        let mut col = Vec::with_capacity(entries.len() / 2);
        let mut val: Vec<f64> = Vec::with_capacity(entries.len() / 2);
        let mut last: Option<(u32, u32)> = None;
        for (r, c, v) in entries {
            if last == Some((r, c)) {
                *val.last_mut().unwrap() += v;
            } else {
                col.push(c as usize);
                val.push(v);
                row_ptr[r as usize + 1] += 1;
                last = Some((r, c));
            }
        }
        for i in 0..n {
            row_ptr[i + 1] += row_ptr[i];
        }
        Csr { n, row_ptr, col, val }
    }

    pub fn nnz(&self) -> usize {
        self.val.len()
    }

    pub fn row(&self, i: usize) -> impl Iterator<Item = (usize, f64)> + '_ {
        (self.row_ptr[i]..self.row_ptr[i + 1]).map(move |k| (self.col[k], self.val[k]))
    }

    pub fn matvec(&self, x: &[f64], y: &mut [f64]) {
        for i in 0..self.n {
            y[i] = self.row(i).map(|(j, v)| v * x[j]).sum();
        }
    }

    pub fn apply(&self, x: &[f64]) -> Vec<f64> {
        let mut y = vec![0.0; self.n];
        self.matvec(x, &mut y);
        y
    }

    /// `x^T A y`.
    pub fn bilinear(&self, x: &[f64], y: &[f64]) -> f64 {
        (0..self.n).map(|i| x[i] * self.row(i).map(|(j, v)| v * y[j]).sum::<f64>()).sum()
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.row(i).find(|(c, _)| *c == j).map(|(_, v)| v).unwrap_or(0.0)
    }

    /// Largest `|A_ij - A_ji|` relative to the largest entry.
    pub fn asymmetry(&self) -> f64 {
        let scale = self.val.iter().fold(0.0f64, |m, v| m.max(v.abs()));
        let mut worst = 0.0f64;
        for i in 0..self.n {
            for (j, v) in self.row(i) {
                worst = worst.max((v - self.get(j, i)).abs());
            }
        }
        worst / scale.max(f64::MIN_POSITIVE)
    }
}

/// Preconditioner for [`cg`].
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Preconditioner {
    Jacobi,
    /// Diagonal blocks of the given size (one per vertex for vector problems).
    BlockJacobi(usize),
}

/// Outcome of an iterative solve.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CgStats {
    pub iterations: usize,
    pub relative_residual: f64,
}

fn block_inverse(a: &Csr, bs: usize) -> Result<Vec<f64>> {
    let nb = a.n / bs;
    let mut inv = vec![0.0; a.n * bs];
    for b in 0..nb {
        let mut m = vec![0.0; bs * bs];
        for r in 0..bs {
            for (c, v) in a.row(b * bs + r) {
                if c >= b * bs && c < (b + 1) * bs {
                    m[r * bs + (c - b * bs)] = v;
                }
            }
        }
        let mi = invert_small(&m, bs)
            .ok_or_else(|| Error::Solver(format!("singular diagonal block {b}")))?;
        inv[b * bs * bs..(b + 1) * bs * bs].copy_from_slice(&mi);
    }
    Ok(inv)
}

fn invert_small(m: &[f64], n: usize) -> Option<Vec<f64>> {
    let mut a = m.to_vec();
    let mut inv = vec![0.0; n * n];
    for i in 0..n {
        inv[i * n + i] = 1.0;
    }
    for k in 0..n {
        let p = (k..n).max_by(|&i, &j| a[i * n + k].abs().total_cmp(&a[j * n + k].abs()))?;
        if a[p * n + k] == 0.0 {
            return None;
        }
        for j in 0..n {
            a.swap(k * n + j, p * n + j);
            inv.swap(k * n + j, p * n + j);
        }
        let d = a[k * n + k];
        for j in 0..n {
            a[k * n + j] /= d;
            inv[k * n + j] /= d;
        }
        for i in 0..n {
            if i != k {
                let f = a[i * n + k];
                for j in 0..n {
                    a[i * n + j] -= f * a[k * n + j];
                    inv[i * n + j] -= f * inv[k * n + j];
                }
            }
        }
    }
    Some(inv)
}

/// Preconditioned conjugate gradients from a zero start.
pub fn cg(a: &Csr, b: &[f64], pre: Preconditioner, rel_tol: f64, max_iter: usize) -> Result<(Vec<f64>, CgStats)> {
    let n = a.n;
    let bs = match pre {
        Preconditioner::Jacobi => 1,
        Preconditioner::BlockJacobi(k) => k,
    };
    if n % bs != 0 {
        return Err(Error::Solver(format!("block size {bs} does not divide {n}")));
    }
    let inv = block_inverse(a, bs)?;
    let precond = |r: &[f64], z: &mut [f64]| {
        for blk in 0..n / bs {
            for i in 0..bs {
                z[blk * bs + i] =
                    (0..bs).map(|j| inv[blk * bs * bs + i * bs + j] * r[blk * bs + j]).sum();
            }
        }
    };
    let bnorm = b.iter().map(|v| v * v).sum::<f64>().sqrt();
    let mut x = vec![0.0; n];
    if bnorm == 0.0 {
        return Ok((x, CgStats { iterations: 0, relative_residual: 0.0 }));
    }
    let mut r = b.to_vec();
    let mut z = vec![0.0; n];
    precond(&r, &mut z);
    let mut p = z.clone();
    let mut rz: f64 = r.iter().zip(&z).map(|(a, b)| a * b).sum();
    let mut ap = vec![0.0; n];
    for it in 1..=max_iter {
        a.matvec(&p, &mut ap);
        let pap: f64 = p.iter().zip(&ap).map(|(a, b)| a * b).sum();
        if !(pap > 0.0) {
            return Err(Error::Solver("matrix is not positive definite".into()));
        }
        let alpha = rz / pap;
        for i in 0..n {
            x[i] += alpha * p[i];
            r[i] -= alpha * ap[i];
        }
        let rel = r.iter().map(|v| v * v).sum::<f64>().sqrt() / bnorm;
        if rel <= rel_tol {
            return Ok((x, CgStats { iterations: it, relative_residual: rel }));
        }
        precond(&r, &mut z);
        let rz_new: f64 = r.iter().zip(&z).map(|(a, b)| a * b).sum();
        let beta = rz_new / rz;
        rz = rz_new;
        for i in 0..n {
            p[i] = z[i] + beta * p[i];
        }
    }
    let rel = r.iter().map(|v| v * v).sum::<f64>().sqrt() / bnorm;
    Err(Error::Solver(format!("CG stalled after {max_iter} iterations at relative residual {rel:.3e}")))
}

/// Sparse Cholesky factor of a symmetric positive definite matrix.
pub struct Cholesky {
    n: usize,
    llt: faer::sparse::linalg::solvers::Llt<usize, f64>,
}

impl std::fmt::Debug for Cholesky {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("Cholesky").field("n", &self.n).finish()
    }
}

impl Cholesky {
    pub fn new(a: &Csr) -> Result<Self> {
        let mut trips = Vec::with_capacity(a.nnz());
        for i in 0..a.n {
            for (j, v) in a.row(i) {
                if j <= i {
                    trips.push(Triplet::new(i, j, v));
                }
            }
        }
        let m = SparseColMat::<usize, f64>::try_new_from_triplets(a.n, a.n, &trips)
            .map_err(|e| Error::Solver(format!("sparse matrix construction failed: {e:?}")))?;
        let llt = m
            .sp_cholesky(Side::Lower)
            .map_err(|e| Error::Solver(format!("Cholesky factorisation failed: {e:?}")))?;
        Ok(Cholesky { n: a.n, llt })
    }

    /// Solves for several right-hand sides at once.
    pub fn solve_many(&self, rhs: &[Vec<f64>]) -> Vec<Vec<f64>> {
        let k = rhs.len();
        let mut b = Mat::<f64>::from_fn(self.n, k, |i, j| rhs[j][i]);
        self.llt.solve_in_place(b.as_mut());
        (0..k).map(|j| (0..self.n).map(|i| b[(i, j)]).collect()).collect()
    }
}

/// Smallest Ritz value after `steps` Lanczos iterations with full reorthogonalisation.
pub fn lanczos_min_ritz(a: &Csr, steps: usize) -> f64 {
    let n = a.n;
    let steps = steps.min(n).max(1);
    // deterministic start vector
    let mut q: Vec<f64> = (0..n).map(|i| ((i as f64 + 1.0) * 0.618_033_988_75).fract() - 0.5).collect();
    let norm = q.iter().map(|v| v * v).sum::<f64>().sqrt();
    q.iter_mut().for_each(|v| *v /= norm);
    let mut basis: Vec<Vec<f64>> = vec![q];
    let mut alpha = Vec::new();
    let mut beta: Vec<f64> = Vec::new();
    let mut w = vec![0.0; n];
    for k in 0..steps {
        a.matvec(&basis[k], &mut w);
        let ak: f64 = w.iter().zip(&basis[k]).map(|(x, y)| x * y).sum();
        alpha.push(ak);
        for b in &basis {
            let c: f64 = w.iter().zip(b).map(|(x, y)| x * y).sum();
            w.iter_mut().zip(b).for_each(|(x, y)| *x -= c * y);
        }
        let bk = w.iter().map(|v| v * v).sum::<f64>().sqrt();
        if k + 1 == steps || bk < 1e-14 * ak.abs().max(1.0) {
            break;
        }
        beta.push(bk);
        basis.push(w.iter().map(|v| v / bk).collect());
    }
    tridiagonal_min_eigenvalue(&alpha, &beta)
}

/// Smallest eigenvalue of a symmetric tridiagonal matrix by Sturm bisection.
pub fn tridiagonal_min_eigenvalue(alpha: &[f64], beta: &[f64]) -> f64 {
    let n = alpha.len();
    let mut lo = f64::INFINITY;
    let mut hi = f64::NEG_INFINITY;
    for i in 0..n {
        let r = if i > 0 { beta[i - 1].abs() } else { 0.0 } + if i < beta.len().min(n - 1) { beta[i].abs() } else { 0.0 };
        lo = lo.min(alpha[i] - r);
        hi = hi.max(alpha[i] + r);
    }
    let below = |x: f64| -> usize {
        let mut count = 0;
        let mut d = 1.0;
        for i in 0..n {
            let b2 = if i > 0 { beta[i - 1] * beta[i - 1] } else { 0.0 };
            d = alpha[i] - x - if i > 0 { b2 / d } else { 0.0 };
            if d == 0.0 {
                d = -1e-300;
            }
            if d < 0.0 {
                count += 1;
            }
        }
        count
    };
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if below(mid) >= 1 {
            hi = mid;
        } else {
            lo = mid;
        }
        if hi - lo <= 1e-15 * hi.abs().max(lo.abs()).max(1e-300) {
            break;
        }
    }
    0.5 * (lo + hi)
}
