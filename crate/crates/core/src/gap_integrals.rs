//! Weighted gap integrals `∫_{|x'|<R} w(x') / delta(x') dx'` and fits of their
//! leading behaviour as `eps -> 0`.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::asympt::{angular_e, angular_f, angular_r, gamma, tau_eff};
use crate::error::{invalid, Error, Result};
use crate::geometry::{GapProfile, ProfileShape};
use crate::quadrature::{self, Estimate};

/// Weight in the gap integral.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Weight {
    One,
    /// `|x'|^2`.
    TangentialSquared,
    /// `x_k^2` for a tangential direction `k` (1-based, `k < d`).
    Component(usize),
}

impl Weight {
    pub fn degree(&self) -> u32 {
        match self {
            Weight::One => 0,
            _ => 2,
        }
    }

    /// Parses `1`, `x'^2` / `r2`, or `x1^2`, `x2^2`, ...
    pub fn parse(s: &str) -> Result<Self> {
        match s.trim() {
            "1" | "one" => Ok(Weight::One),
            "r2" | "x'^2" | "|x'|^2" => Ok(Weight::TangentialSquared),
            t => t
                .strip_prefix('x')
                .and_then(|r| r.strip_suffix("^2"))
                .and_then(|k| k.parse().ok())
                .map(Weight::Component)
                .ok_or_else(|| Error::Config(format!("unknown weight {t:?}"))),
        }
    }
}

/// Default relative tolerance of the gap quadrature.
pub const GAP_TOL: f64 = 1e-9;

/// `∫_{|x'|<R} w / delta`; `eps = 0` is accepted only where the integral converges.
pub fn gap_integral(weight: Weight, profile: &GapProfile, eps: f64, tol: f64) -> Result<Estimate> {
    let d = profile.d;
    if let Weight::Component(k) = weight {
        if k == 0 || k >= d {
            return Err(Error::IndexOutOfRange { index: k, max: d - 1 });
        }
    }
    if !(eps >= 0.0) {
        return invalid(format!("separation eps = {eps} must be non-negative"));
    }
    let threshold = (d - 1) as f64 + weight.degree() as f64;
    if eps == 0.0 && profile.m >= threshold {
        return Err(Error::Divergent(format!(
            "weight of degree {} diverges at eps = 0 for m = {} >= {}",
            weight.degree(),
            profile.m,
            threshold
        )));
    }
    match &profile.shape {
        ProfileShape::Anisotropic { tau } if tau.contains(&0.0) => {
            invalid("gap integrals need every tau_i > 0 (degenerate profile)")
        }
        ProfileShape::Anisotropic { tau } if d == 3 && tau[0] != tau[1] => {
            anisotropic_polar(weight, profile.m, tau[0], tau[1], profile.radius, eps, tol)
        }
        ProfileShape::Anisotropic { .. } if d > 3 => {
            invalid("anisotropic profiles are supported up to d = 3")
        }
        _ => radial(weight, profile, eps, tol),
    }
}

/// Surface area of the unit sphere in `R^n`.
fn sphere_area(n: usize) -> f64 {
    2.0 * PI.powf(n as f64 / 2.0) / gamma(n as f64 / 2.0)
}

fn radial(weight: Weight, profile: &GapProfile, eps: f64, tol: f64) -> Result<Estimate> {
    let d = profile.d;
    let n = d - 1;
    let big_r = profile.radius;
    let (p, factor) = match weight {
        Weight::One => (0.0, 1.0),
        Weight::TangentialSquared => (2.0, 1.0),
        Weight::Component(_) => (2.0, 1.0 / n as f64),
    };
    // In 1D both half-lines are counted; the angular measure in general.
    let measure = if n == 1 { 2.0 } else { sphere_area(n) } * factor;
    let width = |r: f64| profile.radial_width(r);
    let k = p + (n as f64) - 1.0;
    if eps > 0.0 {
        let tau_est = width(big_r) / big_r.powf(profile.m);
        let s = (eps / tau_est).powf(1.0 / profile.m).min(big_r);
        let f = |r: f64| r.powf(k) / (eps + width(r));
        let est = quadrature::adaptive_breaks(&f, &quadrature::geometric_breaks(s, big_r), tol, 0.0)?;
        return Ok(scale(est, measure));
    }
    // r = R t^q flattens the r^beta behaviour at the touching point.
    let beta = k - profile.m;
    let q = 1.0 / (beta + 1.0);
    let f = |t: f64| {
        if t == 0.0 {
            return 0.0;
        }
        let r = big_r * t.powf(q);
        let w = width(r);
        // r^k / w = r^beta * (r^m / w)
        big_r.powf(beta + 1.0) * q * r.powf(profile.m) / w
    };
    let est = quadrature::adaptive_breaks(&f, &quadrature::geometric_breaks(1e-3, 1.0), tol, 0.0)?;
    Ok(scale(est, measure))
}

fn scale(e: Estimate, s: f64) -> Estimate {
    Estimate { value: e.value * s, error: e.error * s }
}

/// `x' = tau_i^{-1/m} y`, `|y_1| = t c^{2/m}`, `|y_2| = t s^{2/m}` turns the
/// anisotropic gap into `t^m` over `t < R(θ)` with Jacobian `(2t/m) E(θ)`.
fn anisotropic_polar(
    weight: Weight,
    m: f64,
    tau1: f64,
    tau2: f64,
    big_r: f64,
    eps: f64,
    tol: f64,
) -> Result<Estimate> {
    let tau = tau_eff(m, tau1, tau2);
    // weight = t^2 * angular(θ) / prefactor
    let (k, pref): (f64, f64) = match weight {
        Weight::One => (1.0, 8.0 / (m * tau)),
        _ => (3.0, 8.0 / (m * tau)),
    };
    let angular = |th: f64| -> f64 {
        let (s, c) = th.sin_cos();
        match weight {
            Weight::One => 1.0,
            Weight::TangentialSquared => angular_f(m, tau1, tau2, th) / tau,
            Weight::Component(1) => tau1.powf(-2.0 / m) * c.powf(4.0 / m),
            Weight::Component(_) => tau2.powf(-2.0 / m) * s.powf(4.0 / m),
        }
    };
    let inner_tol = tol / 10.0;
    let inner = |th: f64| -> Result<f64> {
        let rt = angular_r(m, tau1, tau2, big_r, th);
        if eps == 0.0 {
            return Ok(rt.powf(k + 1.0 - m) / (k + 1.0 - m));
        }
        let f = |t: f64| t.powf(k) / (eps + t.powf(m));
        let s = eps.powf(1.0 / m).min(rt);
        Ok(quadrature::adaptive_breaks(&f, &quadrature::geometric_breaks(s, rt), inner_tol, 0.0)?.value)
    };
    // θ = u^{m/2} near 0 and its mirror, as for the angular constants.
    let q = m / 2.0;
    let upper = std::f64::consts::FRAC_PI_4.powf(1.0 / q);
    let failure = std::cell::Cell::new(None);
    let outer = |u: f64| -> f64 {
        let t = u.powf(q);
        let jac = q * u.powf(q - 1.0);
        let mut acc = 0.0;
        for th in [t, std::f64::consts::FRAC_PI_2 - t] {
            match inner(th) {
                // E is symmetric about π/4, so it is evaluated at t on both halves
                Ok(v) => acc += angular_e(m, t) * angular(th) * v,
                Err(e) => {
                    failure.set(Some(e.to_string()));
                    return f64::NAN;
                }
            }
        }
        acc * jac
    };
    let breaks = quadrature::geometric_breaks(upper / 64.0, upper);
    let est = quadrature::adaptive_breaks(&outer, &breaks, tol, 0.0);
    if let Some(msg) = failure.take() {
        return Err(Error::Divergent(msg));
    }
    Ok(scale(est?, pref))
}

/// Form of the leading behaviour of a gap integral.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Leading {
    /// `c eps^exponent + b` with a negative exponent.
    Power { exponent: f64 },
    /// `c |ln eps| + b`.
    Log,
    /// Finite limit `b`; the correction is fitted as `c eps^exponent` with positive exponent.
    Bounded { exponent: f64 },
}

/// Least-squares fit of `value ≈ coefficient * g(eps) + constant`.
#[derive(Debug, Clone, Serialize)]
pub struct LeadingFit {
    pub leading: Leading,
    pub coefficient: f64,
    pub constant: f64,
    pub max_relative_residual: f64,
    pub values: Vec<(f64, f64)>,
}

pub fn leading_form(weight: Weight, d: usize, m: f64) -> Leading {
    let k = (d - 1) as f64 + weight.degree() as f64;
    if m > k {
        Leading::Power { exponent: k / m - 1.0 }
    } else if m == k {
        Leading::Log
    } else {
        Leading::Bounded { exponent: k / m - 1.0 }
    }
}

/// Evaluates the integral on `eps_list` and fits the predicted leading form.
pub fn leading_term_check(weight: Weight, profile: &GapProfile, eps_list: &[f64]) -> Result<LeadingFit> {
    if eps_list.len() < 2 || eps_list.iter().any(|e| !(*e > 0.0 && *e < 1.0)) {
        return invalid("leading-term fit needs at least two separations in (0, 1)");
    }
    let leading = leading_form(weight, profile.d, profile.m);
    let g = |e: f64| match leading {
        Leading::Power { exponent } | Leading::Bounded { exponent } => e.powf(exponent),
        Leading::Log => e.ln().abs(),
    };
    let values: Vec<(f64, f64)> = eps_list
        .iter()
        .map(|&e| gap_integral(weight, profile, e, GAP_TOL).map(|v| (e, v.value)))
        .collect::<Result<_>>()?;
    let xs: Vec<f64> = values.iter().map(|(e, _)| g(*e)).collect();
    let ys: Vec<f64> = values.iter().map(|(_, v)| *v).collect();
    let (coefficient, constant) = linear_fit(&xs, &ys);
    let max_relative_residual = xs
        .iter()
        .zip(&ys)
        .map(|(x, y)| ((coefficient * x + constant - y) / y).abs())
        .fold(0.0, f64::max);
    Ok(LeadingFit { leading, coefficient, constant, max_relative_residual, values })
}

/// Ordinary least squares `y = a x + b`.
pub fn linear_fit(xs: &[f64], ys: &[f64]) -> (f64, f64) {
    let n = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let sxx: f64 = xs.iter().map(|x| (x - mx).powi(2)).sum();
    let sxy: f64 = xs.iter().zip(ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let a = sxy / sxx;
    (a, my - a * mx)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn weight_parsing() {
        assert_eq!(Weight::parse("1").unwrap(), Weight::One);
        assert_eq!(Weight::parse("x2^2").unwrap(), Weight::Component(2));
        assert_eq!(Weight::parse("r2").unwrap(), Weight::TangentialSquared);
        assert!(Weight::parse("y").is_err());
    }

    #[test]
    fn divergent_touching_request_is_rejected() {
        let p = GapProfile::monomial(2, 2.0, 1.0, 0.5).unwrap();
        assert!(matches!(gap_integral(Weight::One, &p, 0.0, 1e-9), Err(Error::Divergent(_))));
        assert!(gap_integral(Weight::TangentialSquared, &p, 0.0, 1e-9).is_ok());
        let p3 = GapProfile::monomial(2, 3.0, 1.0, 0.5).unwrap();
        assert!(gap_integral(Weight::TangentialSquared, &p3, 0.0, 1e-9).is_err());
        let p = GapProfile::monomial(3, 2.5, 1.0, 0.5).unwrap();
        assert!(gap_integral(Weight::TangentialSquared, &p, 0.0, 1e-9).is_ok());
        assert!(gap_integral(Weight::Component(3), &p, 1e-3, 1e-9).is_err());
    }
}
