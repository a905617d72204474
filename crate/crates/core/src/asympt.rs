//! Rate functions, Gamma brackets, the constants `M1`, `M2`, angular integrals
//! over the quarter circle and the geometric constants `K` and `G`.

use std::f64::consts::{FRAC_PI_2, FRAC_PI_4, PI};

use serde::Serialize;

use crate::elastic_core::{lame_constant, LameParams};
use crate::error::{invalid, Result};
use crate::quadrature;

const LANCZOS_G: f64 = 7.0;
const LANCZOS: [f64; 9] = [
    0.999_999_999_999_809_93,
    676.520_368_121_885_1,
    -1_259.139_216_722_402_8,
    771.323_428_777_653_13,
    -176.615_029_162_140_59,
    12.507_343_278_686_905,
    -0.138_571_095_265_720_12,
    9.984_369_578_019_571_6e-6,
    1.505_632_735_149_311_6e-7,
];

/// Gamma function (Lanczos, `g = 7`, nine terms; reflection below 1/2).
pub fn gamma(x: f64) -> f64 {
    if x < 0.5 {
        return PI / ((PI * x).sin() * gamma(1.0 - x));
    }
    let x = x - 1.0;
    let mut a = LANCZOS[0];
    let t = x + LANCZOS_G + 0.5;
    for (i, c) in LANCZOS.iter().enumerate().skip(1) {
        a += c / (x + i as f64);
    }
    (2.0 * PI).sqrt() * t.powf(x + 0.5) * (-t).exp() * a
}

/// `Γ[(i+2)/m] = Γ(1 - (i+2)/m) Γ((i+2)/m)` for `m > i + 2`, and `1` at `m = i + 2`.
pub fn gamma_bracket(i: u32, m: f64) -> Result<f64> {
    let k = i as f64 + 2.0;
    if m == k {
        return Ok(1.0);
    }
    if !(m > k) {
        return invalid(format!("gamma bracket [{k}/m] needs m >= {k}, got m = {m}"));
    }
    let s = k / m;
    Ok(gamma(1.0 - s) * gamma(s))
}

/// `rho_i(d, m; eps)`: `eps^{(d+i-1)/m - 1}`, `|ln eps|` or `1`.
pub fn rho(i: u32, d: usize, m: f64, eps: f64) -> Result<f64> {
    check_eps(eps)?;
    let k = (d as f64) + i as f64 - 1.0;
    Ok(if m > k {
        eps.powf(k / m - 1.0)
    } else if m == k {
        eps.ln().abs()
    } else {
        1.0
    })
}

fn check_eps(eps: f64) -> Result<()> {
    if !(eps > 0.0 && eps < 1.0) {
        return invalid(format!("rate functions need 0 < eps < 1, got {eps}"));
    }
    Ok(())
}

/// Convergence rate `r_eps` of the Lamé blow-up factors.
pub fn r_eps(d: usize, m: f64, eps: f64) -> Result<f64> {
    check_eps(eps)?;
    let d = d as f64;
    let l = eps.ln().abs();
    Ok(if m > d + 1.0 {
        eps.powf((0.25f64).min((m - d - 1.0) / m))
    } else if m == d + 1.0 {
        1.0 / l
    } else if m > d - 1.0 {
        eps.powf(((d + 1.0 - m) / (12.0 * m)).min((m - d + 1.0) / m))
    } else if m == d - 1.0 {
        1.0 / l
    } else {
        eps.powf((1.0f64 / 6.0).min((d - 1.0 - m) / (12.0 * m)))
    })
}

/// Convergence rate `rbar_eps` of the scalar blow-up factor.
pub fn rbar_eps(d: usize, m: f64, eps: f64) -> Result<f64> {
    check_eps(eps)?;
    let d = d as f64;
    Ok(if m > d - 1.0 {
        eps.powf((0.25f64).min((m - d + 1.0) / m))
    } else if m == d - 1.0 {
        1.0 / eps.ln().abs()
    } else {
        eps.powf((1.0f64 / 6.0).min((d - 1.0 - m) / (12.0 * m)))
    })
}

/// Remainder rate for the convex case: `sqrt(eps)` in 2D, `|ln eps|^{-1}` in 3D.
pub fn rho_d(d: usize, eps: f64) -> Result<f64> {
    check_eps(eps)?;
    match d {
        2 => Ok(eps.sqrt()),
        3 => Ok(1.0 / eps.ln().abs()),
        _ => invalid(format!("rho_d is defined for d = 2, 3, got {d}")),
    }
}

/// Which block of the free-constant system dominates.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum Regime {
    /// `m >= d + 1`: every `a_11` entry blows up; the `D` block alone decides.
    #[serde(rename = "m>=d+1")]
    Translational,
    /// `d - 1 <= m < d + 1`: rotational entries stay bounded.
    #[serde(rename = "d-1<=m<d+1")]
    Rotational,
    /// `m < d - 1`: nothing blows up; the full system is needed.
    #[serde(rename = "m<d-1")]
    Full,
}

impl Regime {
    pub fn lame(d: usize, m: f64) -> Regime {
        let d = d as f64;
        if m >= d + 1.0 {
            Regime::Translational
        } else if m >= d - 1.0 {
            Regime::Rotational
        } else {
            Regime::Full
        }
    }

    /// Scalar problem: only translations exist, so the threshold is `d - 1`.
    pub fn scalar(d: usize, m: f64) -> Regime {
        if m >= d as f64 - 1.0 {
            Regime::Translational
        } else {
            Regime::Full
        }
    }

    pub fn label(&self) -> &'static str {
        match self {
            Regime::Translational => "m>=d+1",
            Regime::Rotational => "d-1<=m<d+1",
            Regime::Full => "m<d-1",
        }
    }
}

/// Effective coefficient `tau = (tau1 tau2)^{1/m}`.
pub fn tau_eff(m: f64, tau1: f64, tau2: f64) -> f64 {
    (tau1 * tau2).powf(1.0 / m)
}

/// `M1 = 2 pi Γ[2/m] / (m tau)`.
pub fn m1(m: f64, tau1: f64, tau2: f64) -> Result<f64> {
    check_taus(tau1, tau2)?;
    Ok(2.0 * PI * gamma_bracket(0, m)? / (m * tau_eff(m, tau1, tau2)))
}

/// `M2 = pi Γ[4/m] / (m tau^2)`.
pub fn m2(m: f64, tau1: f64, tau2: f64) -> Result<f64> {
    check_taus(tau1, tau2)?;
    let t = tau_eff(m, tau1, tau2);
    Ok(PI * gamma_bracket(2, m)? / (m * t * t))
}

fn check_taus(tau1: f64, tau2: f64) -> Result<()> {
    if !(tau1 > 0.0 && tau2 > 0.0) {
        return invalid(format!("tau1, tau2 must be positive, got ({tau1}, {tau2})"));
    }
    Ok(())
}

/// `E(θ) = s^{2/m-1} c^{2/m+1} + s^{2/m+1} c^{2/m-1}`.
pub fn angular_e(m: f64, theta: f64) -> f64 {
    let (s, c) = theta.sin_cos();
    let p = 2.0 / m;
    s.powf(p - 1.0) * c.powf(p + 1.0) + s.powf(p + 1.0) * c.powf(p - 1.0)
}

/// `R(θ) = R (tau1^{-2/m} c^{4/m} + tau2^{-2/m} s^{4/m})^{-1/2}`, the polar
/// extent of the anisotropic gap radius.
pub fn angular_r(m: f64, tau1: f64, tau2: f64, radius: f64, theta: f64) -> f64 {
    let (s, c) = theta.sin_cos();
    let p = 4.0 / m;
    radius / (tau1.powf(-2.0 / m) * c.powf(p) + tau2.powf(-2.0 / m) * s.powf(p)).sqrt()
}

/// `F(θ) = (tau2/tau1)^{1/m} c^{4/m} + (tau1/tau2)^{1/m} s^{4/m}`.
pub fn angular_f(m: f64, tau1: f64, tau2: f64, theta: f64) -> f64 {
    let (s, c) = theta.sin_cos();
    let p = 4.0 / m;
    (tau2 / tau1).powf(1.0 / m) * c.powf(p) + (tau1 / tau2).powf(1.0 / m) * s.powf(p)
}

/// Integrand of `∫_0^{π/2} E(θ) g(θ) dθ` after `θ = u^{m/2}` on `[0, π/4]`
/// and its mirror on `[π/4, π/2]`; both halves are regular in `u`.
fn weighted_halves<G: Fn(f64) -> f64>(m: f64, g: &G) -> (impl Fn(f64) -> f64 + '_, f64)
where
    G: Sync,
{
    let q = m / 2.0;
    let upper = FRAC_PI_4.powf(1.0 / q);
    let f = move |u: f64| {
        let t = u.powf(q);
        let jac = q * u.powf(q - 1.0);
        // E is symmetric about π/4; evaluating it at π/2 - t would lose the small cosine
        angular_e(m, t) * (g(t) + g(FRAC_PI_2 - t)) * jac
    };
    (f, upper)
}

/// `∫_0^{π/2} E(θ) g(θ) dθ` to relative tolerance `tol`.
pub fn e_weighted_integral<G: Fn(f64) -> f64 + Sync>(m: f64, g: &G, tol: f64) -> Result<f64> {
    let (f, upper) = weighted_halves(m, g);
    let breaks = quadrature::geometric_breaks(upper / 64.0, upper);
    Ok(quadrature::adaptive_breaks(&f, &breaks, tol, 1e-300)?.value)
}

/// Same integral with a fixed `n`-point rule on each half, for node-doubling checks.
pub fn e_weighted_fixed<G: Fn(f64) -> f64 + Sync>(m: f64, g: &G, n: usize) -> f64 {
    let (f, upper) = weighted_halves(m, g);
    quadrature::fixed(&f, 0.0, upper, n)
}

/// Angular integrals entering the three-dimensional constants.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct AngularIntegrals {
    pub e: f64,
    pub ef: f64,
    pub e_ln_r: f64,
    pub ef_ln_r: f64,
    /// `∫ E R(θ)^{2-m}`.
    pub e_r_pow: f64,
    /// `∫ E F R(θ)^{4-m}`.
    pub ef_r_pow: f64,
}

const ANGULAR_TOL: f64 = 1e-13;

pub fn angular_integrals(m: f64, tau1: f64, tau2: f64, radius: f64) -> Result<AngularIntegrals> {
    check_taus(tau1, tau2)?;
    if !(m >= 2.0) || !(radius > 0.0) {
        return invalid(format!("angular integrals need m >= 2 and R > 0 (m = {m}, R = {radius})"));
    }
    let r = |t: f64| angular_r(m, tau1, tau2, radius, t);
    let f = |t: f64| angular_f(m, tau1, tau2, t);
    Ok(AngularIntegrals {
        e: e_weighted_integral(m, &|_| 1.0, ANGULAR_TOL)?,
        ef: e_weighted_integral(m, &f, ANGULAR_TOL)?,
        e_ln_r: e_weighted_integral(m, &|t| r(t).ln(), ANGULAR_TOL)?,
        ef_ln_r: e_weighted_integral(m, &|t| f(t) * r(t).ln(), ANGULAR_TOL)?,
        e_r_pow: e_weighted_integral(m, &|t| r(t).powf(2.0 - m), ANGULAR_TOL)?,
        ef_r_pow: e_weighted_integral(m, &|t| f(t) * r(t).powf(4.0 - m), ANGULAR_TOL)?,
    })
}

/// Inputs of the three-dimensional constants.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GeometryInput {
    pub m: f64,
    pub tau1: f64,
    pub tau2: f64,
    pub radius: f64,
}

/// `K_alpha`, the bounded part of `a_11^{alpha alpha}` in three dimensions.
///
/// Translations and the two mixed rotations (`alpha <= 3`) need `m >= 2`; the
/// tangential rotation (`alpha >= 4`) needs `m >= 4`.
pub fn k_constant(lame: &LameParams, alpha: usize, g: GeometryInput, m_star: f64) -> Result<f64> {
    if lame.d != 3 {
        return invalid("K constants are three-dimensional");
    }
    let l = lame_constant(lame, alpha)?;
    k_with_weight(l, alpha <= 3, g, m_star)
}

fn k_with_weight(l: f64, unit_weight: bool, g: GeometryInput, m_star: f64) -> Result<f64> {
    let GeometryInput { m, tau1, tau2, radius } = g;
    let tau = tau_eff(m, tau1, tau2);
    let ang = angular_integrals(m, tau1, tau2, radius)?;
    if unit_weight {
        if m == 2.0 {
            Ok(m_star + 4.0 * l * ang.e_ln_r / (tau1 * tau2).sqrt())
        } else if m > 2.0 {
            Ok(m_star - 8.0 * l * ang.e_r_pow / (m * (m - 2.0) * tau))
        } else {
            invalid(format!("K for alpha <= 3 needs m >= 2, got {m}"))
        }
    } else if m == 4.0 {
        Ok(m_star + l * ang.ef_ln_r / (tau * tau))
    } else if m > 4.0 {
        Ok(m_star - 4.0 * l * ang.ef_r_pow / (m * (m - 4.0) * tau * tau))
    } else {
        invalid(format!("K for alpha >= 4 needs m >= 4, got {m}"))
    }
}

/// `G_alpha = m pi K / (4 L M_1 ∫E)` for `alpha <= 3`, with `M_2 ∫EF` for `alpha >= 4`.
pub fn g_constant(lame: &LameParams, alpha: usize, g: GeometryInput, m_star: f64) -> Result<f64> {
    let l = lame_constant(lame, alpha)?;
    let k = k_constant(lame, alpha, g, m_star)?;
    normalise(k, l, alpha <= 3, g)
}

fn normalise(k: f64, l: f64, unit_weight: bool, g: GeometryInput) -> Result<f64> {
    let ang = angular_integrals(g.m, g.tau1, g.tau2, g.radius)?;
    let denom = if unit_weight {
        4.0 * l * m1(g.m, g.tau1, g.tau2)? * ang.e
    } else {
        4.0 * l * m2(g.m, g.tau1, g.tau2)? * ang.ef
    };
    Ok(g.m * PI * k / denom)
}

/// Scalar analogue `G*_m` built from `M*_R` (unit Lamé constant).
pub fn g_scalar(g: GeometryInput, m_star_r: f64) -> Result<f64> {
    let k = k_with_weight(1.0, true, g, m_star_r)?;
    normalise(k, 1.0, true, g)
}

/// Every constant for one configuration, as reported by the CLI.
#[derive(Debug, Clone, Serialize)]
pub struct ConstantsReport {
    pub d: usize,
    pub m: f64,
    pub tau1: f64,
    pub tau2: f64,
    pub radius: f64,
    pub lambda: f64,
    pub mu: f64,
    pub m_star: Option<f64>,
    pub gamma_bracket_2_over_m: Option<f64>,
    pub gamma_bracket_4_over_m: Option<f64>,
    pub m1: Option<f64>,
    pub m2: Option<f64>,
    pub angular: Option<AngularIntegrals>,
    pub lame_constants: Vec<f64>,
    pub k: Vec<Option<f64>>,
    pub g: Vec<Option<f64>>,
    pub g_scalar: Option<f64>,
}

/// Collects whatever constants are defined for `(m, tau1, tau2, R)`. `K` and `G`
/// need the energy constant and are left out without it.
pub fn constants_report(lame: &LameParams, g: GeometryInput, m_star: Option<f64>) -> ConstantsReport {
    let angular = if lame.d == 3 { angular_integrals(g.m, g.tau1, g.tau2, g.radius).ok() } else { None };
    let count = crate::elastic_core::rigid_count(lame.d);
    let (k, gs) = if let (3, Some(m_star)) = (lame.d, m_star) {
        (
            (1..=count).map(|a| k_constant(lame, a, g, m_star).ok()).collect(),
            (1..=count).map(|a| g_constant(lame, a, g, m_star).ok()).collect(),
        )
    } else {
        (vec![None; count], vec![None; count])
    };
    ConstantsReport {
        d: lame.d,
        m: g.m,
        tau1: g.tau1,
        tau2: g.tau2,
        radius: g.radius,
        lambda: lame.lambda,
        mu: lame.mu,
        m_star,
        gamma_bracket_2_over_m: gamma_bracket(0, g.m).ok(),
        gamma_bracket_4_over_m: gamma_bracket(2, g.m).ok(),
        m1: m1(g.m, g.tau1, g.tau2).ok(),
        m2: m2(g.m, g.tau1, g.tau2).ok(),
        angular,
        lame_constants: crate::elastic_core::lame_constants(lame),
        k,
        g: gs,
        g_scalar: m_star.filter(|_| lame.d == 3).and_then(|ms| g_scalar(g, ms).ok()),
    }
}
