use std::f64::consts::{FRAC_PI_2, PI};

use gapstress::asympt::*;
use gapstress::elastic_core::{lame_constant, LameParams};
use proptest::prelude::*;

fn rel(a: f64, b: f64) -> f64 {
    (a - b).abs() / b.abs().max(1e-300)
}

#[test]
fn rho_branches() {
    assert!(rel(rho(0, 2, 2.0, 0.01).unwrap(), 10.0) < 1e-14);
    let eps: f64 = 1e-3;
    assert_eq!(rho(0, 3, 2.0, eps).unwrap(), eps.ln().abs());
    assert_eq!(rho(2, 3, 4.0, eps).unwrap(), eps.ln().abs());
    assert_eq!(rho(2, 2, 2.0, eps).unwrap(), 1.0);
    assert!(rel(rho(2, 2, 4.0, eps).unwrap(), eps.powf(-0.25)) < 1e-14);
    assert!(rho(0, 2, 2.0, 1.0).is_err());
    assert!(rho(0, 2, 2.0, 0.0).is_err());
}

#[test]
fn r_eps_branches() {
    let eps: f64 = 1e-3;
    let l = eps.ln().abs();
    assert!(rel(r_eps(3, 6.0, eps).unwrap(), eps.powf(0.25)) < 1e-14);
    assert!(rel(r_eps(2, 4.0, eps).unwrap(), eps.powf(0.25)) < 1e-14);
    assert!(rel(r_eps(2, 3.5, eps).unwrap(), eps.powf(0.5 / 3.5)) < 1e-14);
    assert_eq!(r_eps(2, 3.0, eps).unwrap(), 1.0 / l);
    assert!(rel(r_eps(2, 2.0, eps).unwrap(), eps.powf(1.0 / 24.0)) < 1e-14);
    assert_eq!(r_eps(3, 2.0, eps).unwrap(), 1.0 / l);
    assert!(rel(r_eps(5, 2.0, eps).unwrap(), eps.powf(1.0 / 12.0)) < 1e-14);
    assert!(rel(r_eps(9, 2.0, eps).unwrap(), eps.powf(1.0 / 6.0)) < 1e-14);
}

#[test]
fn rbar_eps_branches() {
    let eps: f64 = 1e-3;
    assert!(rel(rbar_eps(2, 2.0, eps).unwrap(), eps.powf(0.25)) < 1e-14);
    assert!(rel(rbar_eps(3, 2.5, eps).unwrap(), eps.powf(0.2)) < 1e-14);
    assert_eq!(rbar_eps(3, 2.0, eps).unwrap(), 1.0 / eps.ln().abs());
    assert!(rel(rbar_eps(5, 2.0, eps).unwrap(), eps.powf(1.0 / 12.0)) < 1e-14);
    assert!(rel(rho_d(2, eps).unwrap(), eps.sqrt()) < 1e-15);
    assert_eq!(rho_d(3, eps).unwrap(), 1.0 / eps.ln().abs());
    assert!(rho_d(4, eps).is_err());
}

#[test]
fn regime_labels() {
    assert_eq!(Regime::lame(2, 3.0).label(), "m>=d+1");
    assert_eq!(Regime::lame(3, 2.0).label(), "d-1<=m<d+1");
    assert_eq!(Regime::lame(4, 2.0).label(), "m<d-1");
    assert_eq!(Regime::scalar(3, 2.0), Regime::Translational);
    assert_eq!(Regime::scalar(4, 2.0), Regime::Full);
}

#[test]
fn gamma_brackets() {
    assert_eq!(gamma_bracket(0, 2.0).unwrap(), 1.0);
    assert!((gamma_bracket(2, 8.0).unwrap() - PI).abs() < 1e-12);
    assert!((gamma_bracket(0, 4.0).unwrap() - PI).abs() < 1e-12);
    assert!(gamma_bracket(0, 1.9).is_err());
    // the value 1 at m = i + 2 is a convention: by reflection the bracket is π / sin(π(i+2)/m)
    for i in [0u32, 2] {
        let k = i as f64 + 2.0;
        for m in [k + 0.3, 2.0 * k, 7.5] {
            assert!(rel(gamma_bracket(i, m).unwrap(), PI / (PI * k / m).sin()) < 1e-12);
        }
        assert!(gamma_bracket(i, k + 1e-8).unwrap() > 1e6);
    }
}

#[test]
fn big_m_constants() {
    assert!((m1(2.0, 1.0, 1.0).unwrap() - PI).abs() < 1e-15);
    assert!((m2(4.0, 1.0, 1.0).unwrap() - PI / 4.0).abs() < 1e-15);
    assert!((m1(4.0, 1.0, 1.0).unwrap() - PI * PI / 2.0).abs() < 1e-12);
    assert!(m2(3.0, 1.0, 1.0).is_err());
    assert!(m1(2.0, 0.0, 1.0).is_err());
    // tau enters through (tau1 tau2)^{1/m}
    assert!(rel(m1(2.0, 2.0, 8.0).unwrap(), PI / 4.0) < 1e-14);
}

#[test]
fn angular_integrals_for_circular_caps() {
    let r = 0.4;
    let a = angular_integrals(2.0, 1.0, 1.0, r).unwrap();
    assert!((a.e - FRAC_PI_2).abs() < 1e-12);
    assert!((a.ef - FRAC_PI_2).abs() < 1e-12);
    assert!((a.e_ln_r - FRAC_PI_2 * r.ln()).abs() < 1e-12);
    assert!((a.e_r_pow - FRAC_PI_2).abs() < 1e-12);
    assert!(angular_integrals(1.5, 1.0, 1.0, r).is_err());
}

#[test]
fn angular_quadratures_are_stable_under_node_doubling() {
    for (m, t1, t2) in [(2.0, 1.0, 1.0), (3.0, 1.0, 2.0), (4.0, 1.0, 1.0), (6.0, 0.5, 3.0)] {
        let r = |t: f64| angular_r(m, t1, t2, 0.5, t);
        let f = |t: f64| angular_f(m, t1, t2, t);
        let integrands: [&(dyn Fn(f64) -> f64 + Sync); 6] = [
            &|_| 1.0,
            &f,
            &|t| r(t).ln(),
            &|t| f(t) * r(t).ln(),
            &|t| r(t).powf(2.0 - m),
            &|t| f(t) * r(t).powf(4.0 - m),
        ];
        for g in integrands {
            let a = e_weighted_fixed(m, &g, 64);
            let b = e_weighted_fixed(m, &g, 128);
            assert!(rel(a, b) < 1e-10, "m = {m}: {a} vs {b}");
            let adaptive = e_weighted_integral(m, &g, 1e-12).unwrap();
            assert!(rel(adaptive, b) < 1e-10);
        }
    }
}

fn geom(m: f64, radius: f64) -> GeometryInput {
    GeometryInput { m, tau1: 1.0, tau2: 1.0, radius }
}

#[test]
fn k_and_g_with_zero_energy_constant() {
    let lame = LameParams::new(0.8, 1.1, 3).unwrap();
    let radius = 0.5;
    for alpha in 1..=3 {
        let l = lame_constant(&lame, alpha).unwrap();
        let k = k_constant(&lame, alpha, geom(2.0, radius), 0.0).unwrap();
        assert!(rel(k, 4.0 * l * FRAC_PI_2 * radius.ln()) < 1e-12);
        let g = g_constant(&lame, alpha, geom(2.0, radius), 0.0).unwrap();
        assert!(rel(g, 2.0 * radius.ln()) < 1e-12);
    }
    assert!(k_constant(&lame, 4, geom(3.0, radius), 0.0).is_err());
    assert!(k_constant(&LameParams::new(1.0, 1.0, 2).unwrap(), 1, geom(2.0, radius), 0.0).is_err());
}

#[test]
fn g_is_affine_in_the_energy_constant() {
    let lame = LameParams::new(0.8, 1.1, 3).unwrap();
    for (m, alpha) in [(2.0, 1), (3.0, 3), (4.0, 4), (5.0, 6)] {
        let g = geom(m, 0.5);
        let ang = angular_integrals(m, 1.0, 1.0, 0.5).unwrap();
        let l = lame_constant(&lame, alpha).unwrap();
        let slope = if alpha <= 3 {
            m * PI / (4.0 * l * m1(m, 1.0, 1.0).unwrap() * ang.e)
        } else {
            m * PI / (4.0 * l * m2(m, 1.0, 1.0).unwrap() * ang.ef)
        };
        let g0 = g_constant(&lame, alpha, g, 0.0).unwrap();
        let g1 = g_constant(&lame, alpha, g, 2.5).unwrap();
        assert!(rel((g1 - g0) / 2.5, slope) < 1e-12, "m = {m}, alpha = {alpha}");
    }
}

#[test]
fn tangential_rotation_at_m_four_uses_the_log_branch() {
    let lame = LameParams::new(0.8, 1.1, 3).unwrap();
    let (t1, t2, radius) = (1.0, 2.0, 0.5);
    let g = GeometryInput { m: 4.0, tau1: t1, tau2: t2, radius };
    let ang = angular_integrals(4.0, t1, t2, radius).unwrap();
    let tau = tau_eff(4.0, t1, t2);
    let l = lame_constant(&lame, 4).unwrap();
    let k = k_constant(&lame, 4, g, 1.5).unwrap();
    assert!(rel(k, 1.5 + l * ang.ef_ln_r / (tau * tau)) < 1e-13);
}

#[test]
fn report_without_energy_constant_leaves_k_unset() {
    let lame = LameParams::new(1.0, 1.0, 3).unwrap();
    let rep = constants_report(&lame, geom(2.0, 0.5), None);
    assert!(rep.k.iter().all(Option::is_none) && rep.g_scalar.is_none());
    assert_eq!(rep.m1, Some(PI));
    let rep = constants_report(&lame, geom(2.0, 0.5), Some(0.0));
    assert!(rep.k[0].is_some() && rep.k[3].is_none());
    assert!(rel(rep.g_scalar.unwrap(), 2.0 * 0.5f64.ln()) < 1e-12);
}

proptest! {
    #[test]
    fn gamma_recurrence_and_reflection(x in 0.05f64..8.0) {
        prop_assert!(rel(gamma(x + 1.0), x * gamma(x)) < 1e-12);
        if x < 1.0 {
            prop_assert!(rel(gamma(x) * gamma(1.0 - x), PI / (PI * x).sin()) < 1e-12);
        }
    }

    #[test]
    fn rates_are_positive_and_small(d in 2usize..5, m in 2.0f64..8.0, eps in 1e-8f64..0.5) {
        for r in [r_eps(d, m, eps).unwrap(), rbar_eps(d, m, eps).unwrap()] {
            prop_assert!(r > 0.0 && r < 1.0);
        }
        prop_assert!(rho(0, d, m, eps).unwrap() >= 1.0 || m < d as f64 - 1.0);
    }
}
