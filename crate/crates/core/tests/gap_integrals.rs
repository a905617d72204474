use std::f64::consts::{FRAC_PI_2, PI};

use gapstress::asympt::{angular_e, angular_f};
use gapstress::gap_integrals::*;
use gapstress::geometry::GapProfile;
use gapstress::quadrature;
use gapstress::Error;
use proptest::prelude::*;

const EPS_RANGE: [f64; 4] = [1e-2, 1e-3, 1e-4, 1e-5];

fn rel(a: f64, b: f64) -> f64 {
    (a - b).abs() / b.abs()
}

/// `∫_0^{2π} ∫_0^R r^{1+p} / (eps + a(φ) r^m) dr dφ` with `a(φ) = τ1|cos φ|^m + τ2|sin φ|^m`,
/// computed in plain polar coordinates of `x'`.
fn polar_oracle(m: f64, tau1: f64, tau2: f64, radius: f64, p: f64, eps: f64) -> f64 {
    let outer = |phi: f64| {
        let a = tau1 * phi.cos().abs().powf(m) + tau2 * phi.sin().abs().powf(m);
        let f = |r: f64| r.powf(1.0 + p) / (eps + a * r.powf(m));
        let s = (eps / a).powf(1.0 / m).min(radius);
        quadrature::adaptive_breaks(&f, &quadrature::geometric_breaks(s, radius), 1e-13, 0.0).unwrap().value
    };
    // the integrand has period π/2 in φ
    4.0 * quadrature::adaptive(&outer, 0.0, FRAC_PI_2, 1e-12).unwrap().value
}

#[test]
fn planar_quadratic_matches_arctan() {
    for tau in [0.5, 1.0, 3.0] {
        let p = GapProfile::monomial(2, 2.0, tau, 0.5).unwrap();
        for eps in EPS_RANGE {
            let exact = 2.0 / (eps * tau).sqrt() * (0.5 * (tau / eps).sqrt()).atan();
            let got = gap_integral(Weight::One, &p, eps, GAP_TOL).unwrap();
            assert!(rel(got.value, exact) < 1e-8, "tau {tau}, eps {eps}: {} vs {exact}", got.value);
            assert!(got.error <= 1e-8 * exact);
        }
    }
}

#[test]
fn spatial_quadratic_matches_log() {
    for tau in [0.5, 2.0] {
        let p = GapProfile::monomial(3, 2.0, tau, 0.5).unwrap();
        for eps in EPS_RANGE {
            let exact = PI / tau * (1.0 + tau * 0.25 / eps).ln();
            let got = gap_integral(Weight::One, &p, eps, GAP_TOL).unwrap().value;
            assert!(rel(got, exact) < 1e-8, "tau {tau}, eps {eps}");
        }
    }
}

#[test]
fn anisotropic_integrals_match_plain_polar_quadrature() {
    for (m, t1, t2) in [(2.0, 1.0, 3.0), (3.0, 0.5, 2.0), (4.0, 1.0, 2.0), (5.0, 2.0, 1.0)] {
        let p = GapProfile::anisotropic(m, vec![t1, t2], 0.5).unwrap();
        for eps in [1e-2, 1e-4] {
            for (w, pw) in [(Weight::One, 0.0), (Weight::TangentialSquared, 2.0)] {
                let got = gap_integral(w, &p, eps, 1e-11).unwrap().value;
                let want = polar_oracle(m, t1, t2, 0.5, pw, eps);
                assert!(rel(got, want) < 1e-8, "m {m}, eps {eps}, {w:?}: {got} vs {want}");
            }
        }
    }
}

#[test]
fn component_weights_sum_to_the_tangential_square() {
    let profiles = [
        GapProfile::anisotropic(3.0, vec![1.0, 2.5], 0.5).unwrap(),
        GapProfile::monomial(3, 2.0, 1.0, 0.5).unwrap(),
        GapProfile::monomial(4, 4.0, 1.0, 0.5).unwrap(),
    ];
    for p in &profiles {
        let total = gap_integral(Weight::TangentialSquared, p, 1e-3, 1e-11).unwrap().value;
        let parts: f64 =
            (1..p.d).map(|k| gap_integral(Weight::Component(k), p, 1e-3, 1e-11).unwrap().value).sum();
        assert!(rel(parts, total) < 1e-9, "d {}: {parts} vs {total}", p.d);
    }
    let p = &profiles[0];
    assert!(matches!(gap_integral(Weight::Component(3), p, 1e-3, GAP_TOL), Err(Error::IndexOutOfRange { .. })));
    assert!(gap_integral(Weight::Component(0), p, 1e-3, GAP_TOL).is_err());
}

#[test]
fn anisotropic_log_coefficient() {
    let (t1, t2) = (1.0, 3.0);
    let p = GapProfile::anisotropic(2.0, vec![t1, t2], 0.5).unwrap();
    let fit = leading_term_check(Weight::One, &p, &[1e-3, 1e-4, 1e-5, 1e-6]).unwrap();
    assert_eq!(fit.leading, Leading::Log);
    let want = PI / (t1 * t2).sqrt();
    assert!(rel(fit.coefficient, want) < 0.02, "{} vs {want}", fit.coefficient);
}

#[test]
fn tangential_square_at_m_four_has_a_log_coefficient() {
    let (m, t1, t2) = (4.0, 1.0, 2.0);
    let p = GapProfile::anisotropic(m, vec![t1, t2], 0.5).unwrap();
    let fit = leading_term_check(Weight::TangentialSquared, &p, &[1e-3, 1e-4, 1e-5, 1e-6]).unwrap();
    assert_eq!(fit.leading, Leading::Log);
    // the |x'|^2 weight carries a second factor (τ1τ2)^{-1/m} from the coordinate scaling
    let ef = quadrature::adaptive(&|th: f64| angular_e(m, th) * angular_f(m, t1, t2, th), 1e-14, FRAC_PI_2, 1e-10)
        .unwrap()
        .value;
    let want = ef / (2.0 * (t1 * t2).powf(2.0 / m));
    // polar oracle: the coefficient of |ln eps| is ∫_0^{2π} dφ / (4 a(φ))
    let oracle = quadrature::adaptive(
        &|phi: f64| 1.0 / (4.0 * (t1 * phi.cos().powi(4) + t2 * phi.sin().powi(4))),
        0.0,
        2.0 * PI,
        1e-12,
    )
    .unwrap()
    .value;
    assert!(rel(want, oracle) < 1e-6, "{want} vs {oracle}");
    assert!(rel(fit.coefficient, oracle) < 0.02, "{} vs {oracle}", fit.coefficient);
}

#[test]
fn power_leading_coefficient_for_steep_profiles() {
    // planar m = 4: ∫ dx / (eps + x^4) → 2 Γ(1/4) Γ(3/4) / 4 eps^{-3/4}
    let p = GapProfile::monomial(2, 4.0, 1.0, 0.5).unwrap();
    let fit = leading_term_check(Weight::One, &p, &[1e-4, 1e-5, 1e-6, 1e-7]).unwrap();
    assert_eq!(fit.leading, Leading::Power { exponent: -0.75 });
    let want = 2.0 * PI / (PI / 4.0).sin() / 4.0;
    assert!(rel(fit.coefficient, want) < 1e-3, "{} vs {want}", fit.coefficient);
}

#[test]
fn halving_eps_scales_by_the_predicted_power() {
    for (d, m) in [(2usize, 3.0), (2, 4.0), (3, 3.0), (3, 6.0)] {
        let p = GapProfile::monomial(d, m, 1.0, 0.5).unwrap();
        let eps = 1e-8;
        let a = gap_integral(Weight::One, &p, 2.0 * eps, 1e-11).unwrap().value;
        let b = gap_integral(Weight::One, &p, eps, 1e-11).unwrap().value;
        let want = 2f64.powf((d - 1) as f64 / m - 1.0);
        assert!(rel(a / b, want) < 1e-2, "d {d}, m {m}: {} vs {want}", a / b);
    }
}

#[test]
fn splitting_at_an_inner_radius() {
    // ∫_{ρ<r<R} w/W + ∫_{r<ρ} w/(ε+W) = ∫_{r<R} w/(ε+W) + ∫_{ρ<r<R} ε w / (W (ε+W))
    let (m, rho, big_r, eps) = (3.0, 0.2, 0.5, 1e-4);
    let outer = GapProfile::monomial(3, m, 1.0, big_r).unwrap();
    let inner = GapProfile::monomial(3, m, 1.0, rho).unwrap();
    let w = Weight::TangentialSquared;
    let tol = 1e-12;
    let g = |p: &GapProfile, e: f64| gap_integral(w, p, e, tol).unwrap().value;
    let annulus_free = g(&outer, 0.0) - g(&inner, 0.0);
    let lhs = annulus_free + g(&inner, eps);
    let tail = 2.0
        * PI
        * quadrature::adaptive(&|r: f64| eps * r.powi(3) / (r.powf(m) * (eps + r.powf(m))), rho, big_r, 1e-13)
            .unwrap()
            .value;
    let rhs = g(&outer, eps) + tail;
    assert!(rel(lhs, rhs) < 1e-10, "{lhs} vs {rhs}");
    assert!(annulus_free > 0.0 && tail > 0.0);
}

#[test]
fn touching_limits() {
    let p = GapProfile::monomial(2, 2.0, 1.0, 0.5).unwrap();
    assert!(matches!(gap_integral(Weight::One, &p, 0.0, GAP_TOL), Err(Error::Divergent(_))));
    // x^2 / x^2 = 1 over (-R, R)
    let v = gap_integral(Weight::Component(1), &p, 0.0, GAP_TOL).unwrap().value;
    assert!((v - 1.0).abs() < 1e-9);
    let p3 = GapProfile::monomial(3, 2.5, 1.0, 0.5).unwrap();
    assert!(gap_integral(Weight::One, &p3, 0.0, GAP_TOL).is_err());
    assert!(gap_integral(Weight::TangentialSquared, &p3, 0.0, GAP_TOL).is_ok());
    assert!(gap_integral(Weight::One, &p, -1e-3, GAP_TOL).is_err());
    let degenerate = GapProfile::anisotropic(2.0, vec![1.0, 0.0], 0.5).unwrap();
    assert!(gap_integral(Weight::One, &degenerate, 1e-3, GAP_TOL).is_err());
}

#[test]
fn leading_forms() {
    assert_eq!(leading_form(Weight::One, 2, 2.0), Leading::Power { exponent: -0.5 });
    assert_eq!(leading_form(Weight::One, 3, 2.0), Leading::Log);
    assert_eq!(leading_form(Weight::TangentialSquared, 3, 4.0), Leading::Log);
    assert_eq!(leading_form(Weight::TangentialSquared, 3, 2.0), Leading::Bounded { exponent: 1.0 });
    let p = GapProfile::monomial(2, 2.0, 1.0, 0.5).unwrap();
    assert!(leading_term_check(Weight::One, &p, &[1e-3]).is_err());
    assert!(leading_term_check(Weight::One, &p, &[1e-3, 1.5]).is_err());
}

#[test]
fn linear_fit_recovers_a_line() {
    let xs = [0.0, 1.0, 2.0, 5.0];
    let ys: Vec<f64> = xs.iter().map(|x| 3.0 * x - 1.25).collect();
    let (a, b) = linear_fit(&xs, &ys);
    assert!((a - 3.0).abs() < 1e-14 && (b + 1.25).abs() < 1e-14);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn decreasing_in_eps(d in 2usize..4, m in 2.0f64..6.0, tau in 0.3f64..3.0, e in 1e-5f64..1e-2) {
        let p = GapProfile::monomial(d, m, tau, 0.5).unwrap();
        let a = gap_integral(Weight::One, &p, e, GAP_TOL).unwrap().value;
        let b = gap_integral(Weight::One, &p, 1.5 * e, GAP_TOL).unwrap().value;
        prop_assert!(a > b && b > 0.0);
    }
}
