use gapstress::geometry::{DomainSpec, GapProfile, HypothesisBounds, Region};
use proptest::prelude::*;

#[test]
fn delta_examples() {
    let p = GapProfile::monomial(2, 2.0, 1.0, 0.5).unwrap();
    assert!((p.delta(0.01, &[0.1]).unwrap() - 0.02).abs() < 1e-15);
    assert_eq!(p.delta(0.01, &[0.0]).unwrap(), 0.01);
    let a = GapProfile::anisotropic(2.0, vec![1.0, 2.0], 0.5).unwrap();
    assert!((a.delta(0.0, &[0.1, 0.1]).unwrap() - 0.03).abs() < 1e-15);
    let caps = GapProfile::caps(2.0, 1.0, 1.5, 0.5).unwrap();
    assert_eq!(caps.delta(0.003, &[0.0]).unwrap(), 0.003);
}

#[test]
fn delta_outside_the_profile_disc_is_rejected() {
    let p = GapProfile::monomial(3, 2.0, 1.0, 0.5).unwrap();
    assert!(p.delta(0.01, &[0.8, 0.6]).is_ok());
    assert!(p.delta(0.01, &[0.8, 0.7]).is_err());
    assert!(p.delta(0.01, &[0.1]).is_err());
}

#[test]
fn invalid_profiles_are_rejected() {
    assert!(GapProfile::monomial(1, 2.0, 1.0, 0.5).is_err());
    assert!(GapProfile::monomial(2, 1.5, 1.0, 0.5).is_err());
    assert!(GapProfile::monomial(2, 2.0, 0.0, 0.5).is_err());
    assert!(GapProfile::monomial(2, 2.0, 1.0, 0.0).is_err());
    assert!(GapProfile::anisotropic(2.0, vec![0.0, 0.0], 0.5).is_err());
    assert!(GapProfile::caps(2.0, 0.4, 1.0, 0.5).is_err());
}

fn exact(t1: f64, t2: f64) -> HypothesisBounds {
    HypothesisBounds { kappa1: t1 * (1.0 - 1e-12), kappa2: t2 * (1.0 + 1e-12), kappa3: 10.0, kappa4: 100.0 }
}

#[test]
fn monomial_hypothesis_holds_with_equality() {
    for d in [2, 3] {
        let p = GapProfile::monomial(d, 2.0, 1.7, 0.5).unwrap();
        let rep = p.check_hypotheses(&exact(1.7, 1.7), 10_000);
        assert!(rep.ok(), "{:?}", rep.violations);
        assert!((rep.min_ratio - 1.7).abs() < 1e-12 && (rep.max_ratio - 1.7).abs() < 1e-12);
    }
}

#[test]
fn degenerate_profile_fails_the_lower_bound() {
    let p = GapProfile::anisotropic(2.0, vec![1.0, 0.0], 0.5).unwrap();
    let rep = p.check_hypotheses(&exact(0.5, 1.0), 10_000);
    assert!(!rep.ok());
    assert!(rep.min_ratio < 1e-3, "min ratio {}", rep.min_ratio);
    assert!(rep.violations.iter().any(|v| v.contains("below kappa1")));
}

#[test]
fn anisotropic_extreme_ratios() {
    // min and max of (x^2 + 2 y^2) / (x^2 + y^2) over the circle are 1 and 2
    let p = GapProfile::anisotropic(2.0, vec![1.0, 2.0], 0.5).unwrap();
    let rep = p.check_hypotheses(&exact(1.0, 2.0), 10_000);
    assert!(rep.ok(), "{:?}", rep.violations);
    assert!(rep.min_ratio - 1.0 < 1e-2 && 2.0 - rep.max_ratio < 1e-2);
}

#[test]
fn tabulated_profile_follows_its_samples() {
    let r: Vec<f64> = (0..=60).map(|i| i as f64 / 50.0).collect();
    let h1: Vec<f64> = r.iter().map(|x| 0.5 * x * x).collect();
    let h2: Vec<f64> = r.iter().map(|x| -0.25 * x * x).collect();
    let p = GapProfile::tabulated(2, 2.0, 0.5, r, h1, h2).unwrap();
    for x in [0.05, 0.2, 0.45] {
        let w = p.delta(0.0, &[x]).unwrap();
        assert!((w - 0.75 * x * x).abs() < 1e-5, "x = {x}: {w}");
    }
    let rep = p.check_hypotheses(&HypothesisBounds { kappa1: 0.7, kappa2: 0.8, kappa3: 2.0, kappa4: 1e6 }, 1000);
    assert!(rep.ok(), "{:?}", rep.violations);
}

#[test]
fn planar_domain_has_the_requested_separation() {
    for eps in [1e-1, 1e-2, 1e-4] {
        let dom = DomainSpec::planar(2.0, 1.0, eps, 8.0, 0.5).unwrap();
        let n = 4000;
        let pts = |s: &gapstress::geometry::Superellipse| -> Vec<[f64; 2]> {
            (0..n).map(|k| s.point(2.0 * std::f64::consts::PI * k as f64 / n as f64)).collect()
        };
        let (a, b) = (pts(&dom.d1), pts(&dom.d2));
        // closest points are at the poles, which are sampled
        let lowest = a.iter().map(|p| p[1]).fold(f64::INFINITY, f64::min);
        let highest = b.iter().map(|p| p[1]).fold(f64::NEG_INFINITY, f64::max);
        assert!((lowest - highest - eps).abs() < 1e-12 * (1.0 + eps.recip()) * eps);
        for p in a.iter().chain(&b) {
            assert!(dom.outer.half_width - (p[0] - dom.outer.center[0]).abs() > 1.0);
            assert!(dom.outer.half_width - (p[1] - dom.outer.center[1]).abs() > 1.0);
        }
        assert_eq!(dom.classify([0.0, 0.5 * eps]), Region::Matrix);
        assert!(DomainSpec::planar(2.0, 1.0, 0.0, 8.0, 0.5).is_err());
    }
}

fn profiles() -> Vec<GapProfile> {
    let r: Vec<f64> = (0..=40).map(|i| i as f64 / 20.0).collect();
    let h1: Vec<f64> = r.iter().map(|x| x * x * x).collect();
    let h2: Vec<f64> = r.iter().map(|x| -x * x).collect();
    vec![
        GapProfile::monomial(2, 2.0, 1.0, 0.5).unwrap(),
        GapProfile::monomial(3, 3.5, 0.7, 0.5).unwrap(),
        GapProfile::anisotropic(2.0, vec![1.0, 3.0], 0.5).unwrap(),
        GapProfile::anisotropic(4.0, vec![0.5, 2.0], 0.5).unwrap(),
        GapProfile::caps(2.0, 1.0, 2.0, 0.5).unwrap(),
        GapProfile::caps(3.0, 1.0, 1.0, 0.5).unwrap(),
        GapProfile::tabulated(3, 2.0, 0.5, r, h1, h2).unwrap(),
    ]
}

proptest! {
    #[test]
    fn delta_is_even_in_each_coordinate(which in 0usize..7, x in -1.0f64..1.0, y in -0.7f64..0.7) {
        let p = &profiles()[which];
        let xp: Vec<f64> = if p.d == 2 { vec![x] } else { vec![x * 0.7, y] };
        let base = p.delta(1e-3, &xp).unwrap();
        for k in 0..xp.len() {
            let mut flipped = xp.clone();
            flipped[k] = -flipped[k];
            prop_assert!((p.delta(1e-3, &flipped).unwrap() - base).abs() <= 1e-14 * (1.0 + base));
        }
    }

    #[test]
    fn delta_is_shifted_by_eps(which in 0usize..7, x in -1.0f64..1.0, y in -0.7f64..0.7, eps in 0.0f64..0.5) {
        let p = &profiles()[which];
        let xp: Vec<f64> = if p.d == 2 { vec![x] } else { vec![x * 0.7, y] };
        let diff = p.delta(eps, &xp).unwrap() - p.delta(0.0, &xp).unwrap();
        let scale = 1.0 + p.delta(0.0, &xp).unwrap();
        prop_assert!((diff - eps).abs() <= 4.0 * f64::EPSILON * scale);
        prop_assert!(p.delta(eps, &xp).unwrap() >= eps);
    }
}

#[test]
fn c2_proxy_only_warns() {
    let p = GapProfile::monomial(2, 2.0, 1.0, 0.5).unwrap();
    let rep = p.check_hypotheses(&HypothesisBounds { kappa4: 1e-6, ..exact(1.0, 1.0) }, 1000);
    assert!(rep.ok(), "{:?}", rep.violations);
    assert!(rep.c2_proxy > 1e-6 && rep.warnings.iter().any(|w| w.contains("kappa4")));
}
