//! Finite-gap estimate of the bounded remainder `M` in `a_11 = L ∫ w/δ + M`.
//!
//! The display route splits the energy of `v_1` into the far part and the
//! gap part written against the auxiliary field; the dual route subtracts the
//! exact gap integral from `a_11`. The `R`-probe compares the `R`-independent
//! combination `K(R) = M(R) + L·fp∫_{|x'|<R} w / (h1 - h2)` at `R` and `R/2`.

use rayon::prelude::*;
use serde::Serialize;

use super::SolvedFields;
use crate::aux_fields::{AuxFields, Side};
use crate::elastic_core::{lame_constant, rigid_motion, LameParams};
use crate::error::{invalid, Error, Result};
use crate::fem::{Field, Physics};
use crate::gap_integrals::{gap_integral, Weight, GAP_TOL};
use crate::geometry::{DomainSpec, GapProfile};
use crate::quadrature;

/// Allowed relative drift of `K` between `R` and `R/2`.
pub const R_SENSITIVITY_TOL: f64 = 0.1;

#[derive(Debug, Clone, Serialize)]
pub struct MStarEstimate {
    pub alpha: usize,
    pub epsilon: f64,
    pub radius: f64,
    /// `L_α`.
    pub lame_constant: f64,
    pub a11: f64,
    /// Far energy of `v_1` outside the gap strip.
    pub outer: f64,
    /// Gap part of the display.
    pub inner: f64,
    pub m_display: f64,
    pub m_dual: f64,
    pub k_radius: f64,
    pub k_half: f64,
    pub r_sensitivity: f64,
    pub flagged: bool,
}

// Degree-5 seven-point rule on the reference triangle (barycentric, weights sum to 1).
const TRI7: [([f64; 3], f64); 7] = {
    const A1: f64 = 0.059_715_871_789_769_82;
    const B1: f64 = 0.470_142_064_105_115_1;
    const A2: f64 = 0.797_426_985_353_087_3;
    const B2: f64 = 0.101_286_507_323_456_3;
    const W1: f64 = 0.132_394_152_788_506_2;
    const W2: f64 = 0.125_939_180_544_827_1;
    [
        ([1.0 / 3.0, 1.0 / 3.0, 1.0 / 3.0], 0.225),
        ([A1, B1, B1], W1),
        ([B1, A1, B1], W1),
        ([B1, B1, A1], W1),
        ([A2, B2, B2], W2),
        ([B2, A2, B2], W2),
        ([B2, B2, A2], W2),
    ]
};

fn tri_area(p: [[f64; 2]; 3]) -> f64 {
    0.5 * ((p[1][0] - p[0][0]) * (p[2][1] - p[0][1]) - (p[2][0] - p[0][0]) * (p[1][1] - p[0][1]))
}

/// Clips a polygon to `sign * x <= cut`.
fn clip(poly: &[[f64; 2]], cut: f64, sign: f64) -> Vec<[f64; 2]> {
    let inside = |p: &[f64; 2]| sign * p[0] <= cut;
    let mut out = Vec::with_capacity(poly.len() + 2);
    for k in 0..poly.len() {
        let (a, b) = (poly[k], poly[(k + 1) % poly.len()]);
        if inside(&a) {
            out.push(a);
        }
        if inside(&a) != inside(&b) {
            let t = (sign * cut - a[0]) / (b[0] - a[0]);
            out.push([sign * cut, a[1] + t * (b[1] - a[1])]);
        }
    }
    out
}

/// Integrand of the display's gap part at one point.
struct Display<'a> {
    aux: AuxFields<'a>,
    alpha: usize,
    lame: Option<LameParams>,
}

impl Display<'_> {
    /// `g` is the constant P1 gradient of `v_1` on the element.
    fn density(&self, x: [f64; 2], g: &[f64]) -> Result<f64> {
        let prof = self.aux.profile;
        let (h1, h2) = prof.h(&x[..1])?;
        // polygonal elements overhang the curved boundary by the chord sagitta
        let y = x[1].clamp(h2, self.aux.eps + h1);
        let q = [x[0], y];
        let vb = self.aux.vbar(&q)?;
        let gv = [vb.d1(0), vb.d1(1)];
        let Some(lame) = &self.lame else {
            let w = [g[0] - gv[0], g[1] - gv[1]];
            return Ok(2.0 * (gv[0] * w[0] + gv[1] * w[1]) + w[0] * w[0] + w[1] * w[1] + gv[0] * gv[0]);
        };
        let ub = self.aux.ubar(self.alpha, Side::Upper, &q)?;
        let rm = rigid_motion(2, self.alpha)?;
        let psi = rm.eval(&q);
        let v = vb.value();
        let mut gpv = [0.0; 4];
        for k in 0..2 {
            for j in 0..2 {
                gpv[k * 2 + j] = psi[k] * gv[j] + v * rm.gradient[k * 2 + j];
            }
        }
        let gu = &ub.gradient;
        let gf: Vec<f64> = (0..4).map(|i| gu[i] - gpv[i]).collect();
        let gw: Vec<f64> = (0..4).map(|i| g[i] - gu[i]).collect();
        let e = |a: &[f64], b: &[f64]| lame.energy_density(a, b);
        let (l, mu) = (lame.lambda, lame.mu);
        let (g1, g2) = (gv[0], gv[1]);
        let (x1, x2) = (q[0], q[1]);
        let case = match self.alpha {
            1 => (l + mu) * g1 * g1 + mu * g1 * g1,
            2 => mu * g1 * g1,
            _ => {
                mu * (x1 * x1 + x2 * x2) * g1 * g1 + mu * (x2 * g2).powi(2) + (l + mu) * (x2 * g1).powi(2)
                    - 2.0 * (l + mu) * x1 * x2 * g1 * g2
            }
        };
        Ok(e(&gw, &gw)? + 2.0 * e(&gw, gu)? + 2.0 * e(&gpv, &gf)? + e(&gf, &gf)? + case)
    }
}

fn weight_for(alpha: usize) -> Weight {
    if alpha >= 3 {
        Weight::TangentialSquared
    } else {
        Weight::One
    }
}

/// Integral of the display density over a convex polygon.
fn polygon_integral(disp: &Display, poly: &[[f64; 2]], g: &[f64]) -> Result<(f64, f64)> {
    let mut area = 0.0;
    let mut sum = 0.0;
    for k in 1..poly.len().saturating_sub(1) {
        let sub = [poly[0], poly[k], poly[k + 1]];
        let a = tri_area(sub);
        if a <= 0.0 {
            continue;
        }
        area += a;
        for (b, w) in TRI7 {
            let x = [
                b[0] * sub[0][0] + b[1] * sub[1][0] + b[2] * sub[2][0],
                b[0] * sub[0][1] + b[1] * sub[1][1] + b[2] * sub[2][1],
            ];
            sum += a * w * disp.density(x, g)?;
        }
    }
    Ok((area, sum))
}

/// Display pieces for the strip cut at `|x'| = R` and at `|x'| = R/2`:
/// `[(outer, inner) at R, (outer, inner) at R/2]`.
fn display_pieces(f: &SolvedFields, dom: &DomainSpec, disp: &Display, v1: &Field, radius: f64) -> Result<[(f64, f64); 2]> {
    let mesh = f.problem.mesh;
    let (ylo, yhi) = (dom.d2.center[1], dom.d1.center[1]);
    let half = 0.5 * radius;
    // (energy outside R, display inside R/2, display on R/2 < |x'| < R, energy on that ring)
    let element = |t: usize| -> Result<[f64; 4]> {
        let g = v1.gradient_on(mesh, t);
        let dens = match &disp.lame {
            Some(l) => l.energy_density(&g, &g)?,
            None => g[0] * g[0] + g[1] * g[1],
        };
        let area = mesh.area(t);
        let c = mesh.centroid(t);
        let p = mesh.triangles[t].map(|i| mesh.vertices[i]);
        let in_strip = c[1] > ylo && c[1] < yhi && p.iter().any(|q| q[0].abs() < radius);
        if !in_strip {
            return Ok([dens * area, 0.0, 0.0, 0.0]);
        }
        let core = clip(&clip(&p, half, 1.0), half, -1.0);
        let right = clip(&clip(&p, radius, 1.0), -half, -1.0);
        let left = clip(&clip(&p, radius, -1.0), -half, 1.0);
        let (a_core, i_core) = polygon_integral(disp, &core, &g)?;
        let (a_r, i_r) = polygon_integral(disp, &right, &g)?;
        let (a_l, i_l) = polygon_integral(disp, &left, &g)?;
        let ring = a_r + a_l;
        Ok([dens * (area - a_core - ring), i_core, i_r + i_l, dens * ring])
    };
    // per-element values are summed in order so the result does not depend on the thread count
    let parts: Vec<[f64; 4]> = (0..mesh.triangles.len()).into_par_iter().map(element).collect::<Result<_>>()?;
    let total = |k: usize| parts.iter().map(|p| p[k]).sum::<f64>();
    let (far, core, ring, ring_energy) = (total(0), total(1), total(2), total(3));
    Ok([(far, core + ring), (far + ring_energy, core)])
}

/// Hadamard finite part of `∫_{|x|<R} w / (h1 - h2)` at the touching configuration (planar).
pub fn finite_part(weight: Weight, profile: &GapProfile) -> Result<f64> {
    if profile.d != 2 {
        return invalid("finite part is implemented for planar profiles");
    }
    let tau = profile.tau().ok_or_else(|| Error::InvalidParameter("profile has no leading coefficient".into()))?;
    let (m, r) = (profile.m, profile.radius);
    let p = weight.degree() as f64;
    let w = |x: f64| if p == 0.0 { 1.0 } else { x * x };
    let diff = |x: f64| {
        let width = profile.radial_width(x);
        w(x) / width - w(x) / (tau * x.powf(m))
    };
    // the difference is smooth and even but cancels to rounding noise near 0,
    // so [0, x0] takes its value at x0
    let x0 = 1e-3 * r;
    let regular = quadrature::adaptive_breaks(&diff, &quadrature::geometric_breaks(x0, r), 1e-9, 1e-12)?.value
        + x0 * diff(x0);
    let e = p + 1.0 - m;
    let mono = if e == 0.0 { r.ln() / tau } else { r.powf(e) / (tau * e) };
    Ok(2.0 * (regular + mono))
}

fn with_radius(profile: &GapProfile, radius: f64) -> GapProfile {
    GapProfile { radius, ..profile.clone() }
}

/// Estimates `M` for motion `alpha` (1 for the scalar problem) on the solved fields.
pub fn estimate_m_star(f: &SolvedFields, dom: &DomainSpec, alpha: usize) -> Result<MStarEstimate> {
    let (lame, aux_lame, l_alpha) = match f.problem.physics {
        Physics::Scalar => {
            if alpha != 1 {
                return Err(Error::IndexOutOfRange { index: alpha, max: 1 });
            }
            (None, LameParams::new(1.0, 1.0, 2)?, 1.0)
        }
        Physics::Lame(l) => {
            if alpha == 0 || alpha > 3 {
                return Err(Error::IndexOutOfRange { index: alpha, max: 3 });
            }
            (Some(l), l, lame_constant(&l, alpha)?)
        }
    };
    let eps = dom.epsilon;
    let profile = &dom.profile;
    let radius = profile.radius;
    let disp = Display { aux: AuxFields::new(profile, aux_lame, eps)?, alpha, lame };
    let v1 = &f.v[0][alpha - 1];
    let a11 = f.problem.energy(v1, v1)?;
    let weight = weight_for(if lame.is_some() { alpha } else { 1 });
    let [(outer, inner), (o2, i2)] = display_pieces(f, dom, &disp, v1, radius)?;
    let gap = gap_integral(weight, profile, eps, GAP_TOL)?.value;
    let fp = finite_part(weight, profile)?;
    let fp2 = finite_part(weight, &with_radius(profile, 0.5 * radius))?;
    let m_display = outer + inner;
    let k_radius = m_display + l_alpha * fp;
    let k_half = o2 + i2 + l_alpha * fp2;
    let r_sensitivity = (k_radius - k_half).abs() / k_radius.abs().max(f64::MIN_POSITIVE);
    Ok(MStarEstimate {
        alpha,
        epsilon: eps,
        radius,
        lame_constant: l_alpha,
        a11,
        outer,
        inner,
        m_display,
        m_dual: a11 - l_alpha * gap,
        k_radius,
        k_half,
        r_sensitivity,
        flagged: r_sensitivity > R_SENSITIVITY_TOL,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn clipping_keeps_area() {
        let tri = [[-1.0, 0.0], [1.0, 0.0], [0.0, 1.0]];
        let p = clip(&clip(&tri, 0.5, 1.0), 0.5, -1.0);
        let mut a = 0.0;
        for k in 1..p.len() - 1 {
            a += tri_area([p[0], p[k], p[k + 1]]);
        }
        // area of the triangle between x = -0.5 and 0.5
        assert!((a - 0.75).abs() < 1e-14);
    }

    #[test]
    fn rule_integrates_quintics() {
        let sub = [[0.0, 0.0], [1.0, 0.0], [0.0, 1.0]];
        let mut s = 0.0;
        for (b, w) in TRI7 {
            let x = b[1] * sub[1][0];
            let y = b[2] * sub[2][1];
            s += 0.5 * w * x.powi(2) * y.powi(3);
        }
        // ∫ x^2 y^3 over the unit triangle = 2! 3! / 7!
        assert!((s - 12.0 / 5040.0).abs() < 1e-15);
    }

    #[test]
    fn monomial_finite_part() {
        let p = GapProfile::monomial(2, 2.0, 2.0, 0.5).unwrap();
        // fp ∫_{-R}^{R} dx / (2 x^2) = -1 / R
        assert!((finite_part(Weight::One, &p).unwrap() + 2.0).abs() < 1e-12);
        // ∫ x^2 / (2 x^2) = R
        assert!((finite_part(Weight::TangentialSquared, &p).unwrap() - 0.5).abs() < 1e-12);
    }
}
