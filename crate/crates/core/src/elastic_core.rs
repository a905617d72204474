//! Isotropic elasticity tensor, rigid motions and the Lamé constants that
//! multiply the leading gap integrals.
//!
//! Second-order tensors are passed as row-major `d*d` slices.

use crate::error::{invalid, Error, Result};

/// Lamé pair together with the ellipticity margin `tau0`.
#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct LameParams {
    pub lambda: f64,
    pub mu: f64,
    pub d: usize,
    pub tau0: f64,
}

impl LameParams {
    /// Builds the tensor with the widest valid margin,
    /// `tau0 = 0.5 * min(mu, 1 / (d*lambda + 2*mu))`.
    pub fn new(lambda: f64, mu: f64, d: usize) -> Result<Self> {
        if d < 2 {
            return invalid(format!("dimension d = {d} must be at least 2"));
        }
        let bulk = d as f64 * lambda + 2.0 * mu;
        if !(mu > 0.0) || !(bulk > 0.0) {
            return invalid(format!(
                "strong ellipticity needs mu > 0 and d*lambda + 2*mu > 0 (mu = {mu}, d*lambda + 2*mu = {bulk})"
            ));
        }
        let tau0 = 0.5 * mu.min(1.0 / bulk);
        Self::with_tau0(lambda, mu, d, tau0)
    }

    /// Builds the tensor and checks `tau0 < mu` and `d*lambda + 2*mu < 1/tau0`.
    pub fn with_tau0(lambda: f64, mu: f64, d: usize, tau0: f64) -> Result<Self> {
        if d < 2 {
            return invalid(format!("dimension d = {d} must be at least 2"));
        }
        let bulk = d as f64 * lambda + 2.0 * mu;
        if !(tau0 > 0.0) || !(tau0 < mu) || !(bulk > 0.0) || !(bulk < 1.0 / tau0) {
            return invalid(format!(
                "ellipticity margin violated: need 0 < tau0 < mu and 0 < d*lambda + 2*mu < 1/tau0 \
                 (tau0 = {tau0}, mu = {mu}, d*lambda + 2*mu = {bulk})"
            ));
        }
        Ok(Self { lambda, mu, d, tau0 })
    }

    /// Tensor entry `C_{ijkl}` with 0-based indices.
    pub fn entry(&self, i: usize, j: usize, k: usize, l: usize) -> f64 {
        let dl = |a: usize, b: usize| if a == b { 1.0 } else { 0.0 };
        self.lambda * dl(i, j) * dl(k, l) + self.mu * (dl(i, k) * dl(j, l) + dl(i, l) * dl(j, k))
    }

    /// `C A = lambda tr(A) I + mu (A + A^T)`.
    pub fn apply(&self, a: &[f64]) -> Result<Vec<f64>> {
        let d = self.d;
        check_len(a, d * d)?;
        let tr: f64 = (0..d).map(|i| a[i * d + i]).sum();
        let mut out = vec![0.0; d * d];
        for i in 0..d {
            for j in 0..d {
                out[i * d + j] = self.mu * (a[i * d + j] + a[j * d + i]);
            }
            out[i * d + i] += self.lambda * tr;
        }
        Ok(out)
    }

    /// [`apply`](Self::apply) for symmetric `A`; anything else is rejected.
    pub fn apply_symmetric(&self, a: &[f64]) -> Result<Vec<f64>> {
        check_symmetric(a, self.d)?;
        self.apply(a)
    }

    /// `(C xi, xi)` for symmetric `xi`.
    pub fn quadratic_form(&self, xi: &[f64]) -> Result<f64> {
        check_symmetric(xi, self.d)?;
        self.energy_density(xi, xi)
    }

    /// Pointwise energy density `(C A, B)`.
    pub fn energy_density(&self, a: &[f64], b: &[f64]) -> Result<f64> {
        check_len(b, self.d * self.d)?;
        let ca = self.apply(a)?;
        Ok(ca.iter().zip(b).map(|(x, y)| x * y).sum())
    }

    /// Sharp ellipticity bounds on symmetric matrices: `(min, max)` of `{2 mu, d lambda + 2 mu}`.
    pub fn ellipticity_bounds(&self) -> (f64, f64) {
        let a = 2.0 * self.mu;
        let b = self.d as f64 * self.lambda + 2.0 * self.mu;
        (a.min(b), a.max(b))
    }

    /// Lamé operator `mu Δu + (lambda + mu) ∇(∇·u)` from the Hessians of the
    /// components. `hess[k]` is the row-major Hessian of `u_k`.
    pub fn lame_operator(&self, hess: &[Vec<f64>]) -> Vec<f64> {
        let d = self.d;
        (0..d)
            .map(|k| {
                let lap: f64 = (0..d).map(|j| hess[k][j * d + j]).sum();
                let grad_div: f64 = (0..d).map(|j| hess[j][k * d + j]).sum();
                self.mu * lap + (self.lambda + self.mu) * grad_div
            })
            .collect()
    }
}

fn check_len(a: &[f64], n: usize) -> Result<()> {
    if a.len() != n {
        return Err(Error::DimensionMismatch { expected: n, got: a.len() });
    }
    Ok(())
}

/// Relative asymmetry accepted by the symmetric entry points.
pub const SYMMETRY_TOL: f64 = 1e-12;

fn check_symmetric(a: &[f64], d: usize) -> Result<()> {
    check_len(a, d * d)?;
    let scale = a.iter().fold(1.0f64, |m, v| m.max(v.abs()));
    for i in 0..d {
        for j in 0..i {
            if (a[i * d + j] - a[j * d + i]).abs() > SYMMETRY_TOL * scale {
                return invalid(format!("matrix is not symmetric: entries ({i},{j}) and ({j},{i}) differ"));
            }
        }
    }
    Ok(())
}

/// Number of independent rigid motions, `d(d+1)/2`.
pub fn rigid_count(d: usize) -> usize {
    d * (d + 1) / 2
}

/// Symbolic form of a rigid motion: `psi(x)_k = const_k + sum_j lin[k][j] x_j`.
#[derive(Debug, Clone, PartialEq)]
pub struct RigidMotion {
    pub d: usize,
    pub constant: Vec<f64>,
    /// Row-major `d*d` gradient, constant in space.
    pub gradient: Vec<f64>,
}

impl RigidMotion {
    pub fn eval(&self, x: &[f64]) -> Vec<f64> {
        let d = self.d;
        (0..d)
            .map(|k| self.constant[k] + (0..d).map(|j| self.gradient[k * d + j] * x[j]).sum::<f64>())
            .collect()
    }

    /// True when the motion is a translation (`alpha <= d`).
    pub fn is_translation(&self) -> bool {
        self.gradient.iter().all(|g| *g == 0.0)
    }
}

/// Slots `(i, j)` (0-based, `i < j < d-1`) of the purely tangential rotations,
/// in the order they are labelled from `alpha = 2d` upward.
fn tangential_pairs(d: usize) -> Vec<(usize, usize)> {
    let mut out = Vec::new();
    for i in 0..d.saturating_sub(1) {
        for j in i + 1..d - 1 {
            out.push((i, j));
        }
    }
    out
}

/// Rigid motion number `alpha` (1-based).
///
/// Translations `e_alpha` come first, then the rotations mixing a tangential
/// direction with `x_d`, then the purely tangential rotations.
pub fn rigid_motion(d: usize, alpha: usize) -> Result<RigidMotion> {
    let k = rigid_count(d);
    if d < 2 {
        return invalid(format!("dimension d = {d} must be at least 2"));
    }
    if alpha == 0 || alpha > k {
        return Err(Error::IndexOutOfRange { index: alpha, max: k });
    }
    let mut constant = vec![0.0; d];
    let mut gradient = vec![0.0; d * d];
    if alpha <= d {
        constant[alpha - 1] = 1.0;
    } else if alpha < 2 * d {
        // x_d e_a - x_a e_d with a = alpha - d
        let a = alpha - d - 1;
        gradient[a * d + (d - 1)] = 1.0;
        gradient[(d - 1) * d + a] = -1.0;
    } else {
        let (i, j) = tangential_pairs(d)[alpha - 2 * d];
        gradient[i * d + j] = 1.0;
        gradient[j * d + i] = -1.0;
    }
    Ok(RigidMotion { d, constant, gradient })
}

/// Evaluates `psi_alpha(x)`.
pub fn rigid_motions(d: usize, alpha: usize, x: &[f64]) -> Result<Vec<f64>> {
    check_len(x, d)?;
    Ok(rigid_motion(d, alpha)?.eval(x))
}

/// The constants `L_d^alpha`, `alpha = 1..=d(d+1)/2`, as a 0-based vector.
pub fn lame_constants(p: &LameParams) -> Vec<f64> {
    let d = p.d;
    let (mu, lm) = (p.mu, p.lambda + 2.0 * p.mu);
    if d == 2 {
        return vec![mu, lm, lm];
    }
    (1..=rigid_count(d))
        .map(|a| {
            if a < d {
                mu
            } else if a < 2 * d {
                lm
            } else {
                2.0 * mu
            }
        })
        .collect()
}

/// Single constant `L_d^alpha`.
pub fn lame_constant(p: &LameParams, alpha: usize) -> Result<f64> {
    let k = rigid_count(p.d);
    if alpha == 0 || alpha > k {
        return Err(Error::IndexOutOfRange { index: alpha, max: k });
    }
    Ok(lame_constants(p)[alpha - 1])
}
