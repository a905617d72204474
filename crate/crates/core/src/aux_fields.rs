//! Explicit auxiliary fields in the gap: the linear interpolant `vbar` and the
//! corrected vector fields `ubar_1^alpha`, `ubar_2^alpha`.
//!
//! Everything is built on [`Jet`]s, so values, gradients and Hessians are exact
//! to rounding. Fields are defined on the closed gap over `|x'| <= 2R`; pass
//! `eps = 0` for the touching configuration.

use crate::elastic_core::{rigid_motion, LameParams};
use crate::error::{invalid, Error, Result};
use crate::geometry::{GapProfile, ProfileShape};
use crate::jet::Jet;

/// Which inclusion carries the rigid motion.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Side {
    /// `D1`, the upper inclusion.
    Upper,
    /// `D2`, the lower inclusion.
    Lower,
}

/// Value, gradient and Hessians of a vector field at a point.
#[derive(Debug, Clone, PartialEq)]
pub struct FieldSample {
    pub value: Vec<f64>,
    /// `gradient[k*d + j] = ∂_j u_k`.
    pub gradient: Vec<f64>,
    /// `hessians[k]` is the row-major Hessian of `u_k`.
    pub hessians: Vec<Vec<f64>>,
}

impl FieldSample {
    fn from_jets(u: &[Jet], d: usize) -> Self {
        let value = u.iter().map(|j| j.value()).collect();
        let mut gradient = vec![0.0; d * d];
        for (k, j) in u.iter().enumerate() {
            gradient[k * d..(k + 1) * d].copy_from_slice(&j.gradient(d));
        }
        FieldSample { value, gradient, hessians: u.iter().map(|j| j.hessian(d)).collect() }
    }
}

/// `f(v) = (v - 1/2)^2 / 2 - 1/8`, vanishing on both inclusion boundaries.
pub fn f_of_v(v: f64) -> f64 {
    0.5 * (v - 0.5).powi(2) - 0.125
}

/// Auxiliary fields for a fixed profile, Lamé pair and separation.
#[derive(Debug, Clone)]
pub struct AuxFields<'a> {
    pub profile: &'a GapProfile,
    pub lame: LameParams,
    pub eps: f64,
}

/// Slack allowed when testing that a point lies in the closed gap.
const CLOSURE_TOL: f64 = 1e-12;

impl<'a> AuxFields<'a> {
    pub fn new(profile: &'a GapProfile, lame: LameParams, eps: f64) -> Result<Self> {
        if lame.d != profile.d {
            return Err(Error::DimensionMismatch { expected: profile.d, got: lame.d });
        }
        if !(eps >= 0.0) {
            return invalid(format!("separation eps = {eps} must be non-negative"));
        }
        Ok(AuxFields { profile, lame, eps })
    }

    /// Checks that `x` lies in the closed gap and returns the point's jets with `h1`, `h2`.
    fn gap_point(&self, x: &[f64]) -> Result<(Vec<Jet>, Jet, Jet)> {
        let d = self.profile.d;
        if x.len() != d {
            return Err(Error::DimensionMismatch { expected: d, got: x.len() });
        }
        let xp = &x[..d - 1];
        let r = xp.iter().map(|v| v * v).sum::<f64>().sqrt();
        let mut reach = 2.0 * self.profile.radius;
        if let ProfileShape::Caps { r1, r2 } = self.profile.shape {
            reach = reach.min(r1.min(r2));
        }
        let outside = |region| Err(Error::OutsideDomain { point: x.to_vec(), region });
        if r > reach {
            return outside("auxiliary slab |x'| <= 2R");
        }
        let xj = Jet::vars(x);
        let (h1, h2) = self.profile.h_jets(&xj[..d - 1]);
        let scale = 1.0 + x[d - 1].abs();
        if x[d - 1] < h2.value() - CLOSURE_TOL * scale || x[d - 1] > self.eps + h1.value() + CLOSURE_TOL * scale {
            return outside("closed gap");
        }
        if self.eps + h1.value() - h2.value() <= 0.0 {
            return outside("gap (zero width at the touching point)");
        }
        Ok((xj, h1, h2))
    }

    fn check_point(&self, x: &[f64]) -> Result<()> {
        self.gap_point(x).map(|_| ())
    }

    /// Gap width derivatives and `vbar` from the profile jets.
    fn gap_jets(&self, x: &[Jet], h1: Jet, h2: Jet) -> (Vec<Jet>, Jet) {
        let d = self.profile.d;
        let delta = h1 - h2 + self.eps;
        let ddelta = (0..d - 1).map(|i| delta.diff(i)).collect();
        let vbar = (x[d - 1] - h2) / delta;
        (ddelta, vbar)
    }

    /// `vbar = (x_d - h2) / delta` with its derivatives.
    pub fn vbar(&self, x: &[f64]) -> Result<Jet> {
        let (xj, h1, h2) = self.gap_point(x)?;
        Ok(self.gap_jets(&xj, h1, h2).1)
    }

    /// Correction term `F_alpha` as jets.
    fn correction(&self, psi: &[Jet], ddelta: &[Jet], vbar: Jet) -> Vec<Jet> {
        let d = self.profile.d;
        let (lam, mu) = (self.lame.lambda, self.lame.mu);
        let fv = {
            let s = vbar - 0.5;
            s * s * 0.5 - 0.125
        };
        let mut out = vec![Jet::constant(0.0); d];
        let tang = fv * psi[d - 1] * ((lam + mu) / mu);
        for i in 0..d - 1 {
            out[i] = tang * ddelta[i];
        }
        let normal = (0..d - 1).fold(Jet::constant(0.0), |acc, i| acc + psi[i] * ddelta[i]);
        out[d - 1] = fv * normal * ((lam + mu) / (lam + 2.0 * mu));
        out
    }

    fn ubar_jets(&self, alpha: usize, side: Side, x: &[f64]) -> Result<Vec<Jet>> {
        let (xj, h1, h2) = self.gap_point(x)?;
        let d = self.profile.d;
        let rm = rigid_motion(d, alpha)?;
        let psi: Vec<Jet> = (0..d)
            .map(|k| {
                (0..d).fold(Jet::constant(rm.constant[k]), |acc, j| acc + xj[j] * rm.gradient[k * d + j])
            })
            .collect();
        let (ddelta, vbar) = self.gap_jets(&xj, h1, h2);
        let f = self.correction(&psi, &ddelta, vbar);
        Ok(match side {
            Side::Upper => psi.iter().zip(&f).map(|(p, c)| *p * vbar + *c).collect(),
            Side::Lower => {
                let w = Jet::constant(1.0) - vbar;
                psi.iter().zip(&f).map(|(p, c)| *p * w - *c).collect()
            }
        })
    }

    /// `ubar_i^alpha` (`alpha` 1-based) with gradient and Hessians.
    pub fn ubar(&self, alpha: usize, side: Side, x: &[f64]) -> Result<FieldSample> {
        Ok(FieldSample::from_jets(&self.ubar_jets(alpha, side, x)?, self.profile.d))
    }

    /// `L ubar_i^alpha = mu Δu + (lambda + mu) ∇(∇·u)`.
    pub fn lame_residual(&self, alpha: usize, side: Side, x: &[f64]) -> Result<Vec<f64>> {
        let s = self.ubar(alpha, side, x)?;
        Ok(self.lame.lame_operator(&s.hessians))
    }

    /// Right-hand shape of the residual bound,
    /// `|psi| delta^{-2/m} + |grad psi| delta^{-1} + 1`.
    pub fn residual_scale(&self, alpha: usize, x: &[f64]) -> Result<f64> {
        self.check_point(x)?;
        let d = self.profile.d;
        let rm = rigid_motion(d, alpha)?;
        let psi = rm.eval(x).iter().map(|v| v * v).sum::<f64>().sqrt();
        let gpsi = rm.gradient.iter().map(|v| v * v).sum::<f64>().sqrt();
        let delta = self.profile.delta(self.eps, &x[..d - 1])?;
        Ok(psi * delta.powf(-2.0 / self.profile.m) + gpsi / delta + 1.0)
    }
}

/// Quotient `|L ubar| / scale` maximised over the given points; the fitted
/// constant of the residual bound.
pub fn fitted_residual_constant(aux: &AuxFields, alpha: usize, side: Side, points: &[Vec<f64>]) -> Result<f64> {
    let mut c = 0.0f64;
    for x in points {
        let r = aux.lame_residual(alpha, side, x)?;
        let norm = r.iter().map(|v| v * v).sum::<f64>().sqrt();
        c = c.max(norm / aux.residual_scale(alpha, x)?);
    }
    Ok(c)
}

/// Points spread through the gap over `|x'| < R`: tangential sample grid times
/// `layers` heights.
pub fn gap_points(profile: &GapProfile, eps: f64, n_tangential: usize, layers: usize) -> Vec<Vec<f64>> {
    let mut out = Vec::new();
    for xp in profile.sample_grid(n_tangential) {
        let (h1, h2) = match profile.h(&xp) {
            Ok(v) => v,
            Err(_) => continue,
        };
        if eps + h1 - h2 <= 0.0 {
            continue;
        }
        for k in 0..layers {
            let t = (k as f64 + 0.5) / layers as f64;
            let mut x = xp.clone();
            x.push(h2 + t * (eps + h1 - h2));
            out.push(x);
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    fn setup() -> (GapProfile, LameParams) {
        (GapProfile::monomial(2, 2.0, 1.0, 0.5).unwrap(), LameParams::new(1.0, 1.0, 2).unwrap())
    }

    #[test]
    fn boundary_values() {
        let (p, l) = setup();
        let aux = AuxFields::new(&p, l, 1e-2).unwrap();
        let x1 = 0.2;
        let (h1, h2) = p.h(&[x1]).unwrap();
        for alpha in 1..=3 {
            let psi = rigid_motion(2, alpha).unwrap().eval(&[x1, aux.eps + h1]);
            let top = aux.ubar(alpha, Side::Upper, &[x1, aux.eps + h1]).unwrap();
            let bot = aux.ubar(alpha, Side::Upper, &[x1, h2]).unwrap();
            for k in 0..2 {
                assert!((top.value[k] - psi[k]).abs() < 1e-13);
                assert!(bot.value[k].abs() < 1e-13);
            }
        }
        assert!(aux.ubar(1, Side::Upper, &[0.0, 0.5]).is_err());
        assert!(aux.ubar(1, Side::Upper, &[1.2, 0.0]).is_err());
        assert!(aux.ubar(4, Side::Upper, &[0.0, 0.001]).is_err());
    }

    #[test]
    fn touching_point_is_rejected() {
        let (p, l) = setup();
        let aux = AuxFields::new(&p, l, 0.0).unwrap();
        assert!(aux.vbar(&[0.0, 0.0]).is_err());
        assert!(aux.vbar(&[0.1, 0.0]).is_ok());
    }
}
