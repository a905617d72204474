use gapstress::elastic_core::{lame_constant, lame_constants, rigid_count, rigid_motion, rigid_motions, LameParams};
use proptest::prelude::*;

fn close(a: &[f64], b: &[f64], tol: f64) -> bool {
    a.len() == b.len() && a.iter().zip(b).all(|(x, y)| (x - y).abs() <= tol)
}

#[test]
fn tensor_action_on_basic_matrices() {
    let t = LameParams::new(1.0, 1.0, 2).unwrap();
    assert!(close(&t.apply_symmetric(&[1.0, 0.0, 0.0, 0.0]).unwrap(), &[3.0, 0.0, 0.0, 1.0], 1e-15));
    assert!(close(&t.apply_symmetric(&[1.0, 0.0, 0.0, 1.0]).unwrap(), &[4.0, 0.0, 0.0, 4.0], 1e-15));
    assert!(close(&t.apply_symmetric(&[0.0; 4]).unwrap(), &[0.0; 4], 0.0));
    assert!(t.apply_symmetric(&[0.0, 1.0, 0.0, 0.0]).is_err());
    assert!(t.apply_symmetric(&[1.0, 0.0, 0.0]).is_err());
}

#[test]
fn quadratic_form_extremes() {
    let t = LameParams::new(1.0, 1.0, 2).unwrap();
    assert!((t.quadratic_form(&[1.0, 0.0, 0.0, 1.0]).unwrap() - 8.0).abs() < 1e-14);
    // traceless off-diagonal pair, |xi|^2 = 2
    let xi = [0.0, 1.0, 1.0, 0.0];
    assert!((t.quadratic_form(&xi).unwrap() - 2.0 * t.mu * 2.0).abs() < 1e-14);
    assert!(t.quadratic_form(&[0.0, 1.0, -1.0, 0.0]).is_err());
}

#[test]
fn tensor_has_full_symmetry() {
    let t = LameParams::new(0.7, 1.3, 3).unwrap();
    for i in 0..3 {
        for j in 0..3 {
            for k in 0..3 {
                for l in 0..3 {
                    let c = t.entry(i, j, k, l);
                    assert_eq!(c, t.entry(k, l, i, j));
                    assert_eq!(c, t.entry(k, l, j, i));
                }
            }
        }
    }
}

#[test]
fn ellipticity_window_is_enforced() {
    assert!(LameParams::new(1.0, 0.0, 2).is_err());
    assert!(LameParams::new(-1.0, 0.5, 2).is_err());
    assert!(LameParams::new(-0.6, 1.0, 3).is_ok());
    assert!(LameParams::new(1.0, 1.0, 1).is_err());
    let t = LameParams::new(1.0, 1.0, 2).unwrap();
    assert!((t.tau0 - 0.5 * (1.0f64).min(1.0 / 4.0)).abs() < 1e-15);
    assert!(LameParams::with_tau0(1.0, 1.0, 2, 1.0).is_err());
}

#[test]
fn planar_rigid_basis_order() {
    let x = [0.3, -0.7];
    assert_eq!(rigid_count(2), 3);
    assert_eq!(rigid_motions(2, 1, &x).unwrap(), vec![1.0, 0.0]);
    assert_eq!(rigid_motions(2, 2, &x).unwrap(), vec![0.0, 1.0]);
    assert_eq!(rigid_motions(2, 3, &x).unwrap(), vec![x[1], -x[0]]);
    assert!(rigid_motion(2, 4).is_err());
    assert!(rigid_motion(2, 0).is_err());
    assert!(rigid_motion(1, 1).is_err());
}

#[test]
fn spatial_rigid_basis_order() {
    let x = [0.2, 0.5, -0.4];
    assert_eq!(rigid_count(3), 6);
    assert_eq!(rigid_motions(3, 4, &x).unwrap(), vec![x[2], 0.0, -x[0]]);
    assert_eq!(rigid_motions(3, 5, &x).unwrap(), vec![0.0, x[2], -x[1]]);
    assert_eq!(rigid_motions(3, 6, &x).unwrap(), vec![x[1], -x[0], 0.0]);
}

#[test]
fn rigid_motions_have_no_strain() {
    for d in 2..=4 {
        for a in 1..=rigid_count(d) {
            let g = rigid_motion(d, a).unwrap().gradient;
            for i in 0..d {
                for j in 0..d {
                    assert_eq!(g[i * d + j] + g[j * d + i], 0.0, "d = {d}, alpha = {a}");
                }
            }
        }
    }
}

/// Rank by Gaussian elimination with partial pivoting.
fn rank(mut rows: Vec<Vec<f64>>, tol: f64) -> usize {
    let ncol = rows[0].len();
    let mut r = 0;
    for c in 0..ncol {
        let Some(p) = (r..rows.len()).max_by(|&a, &b| rows[a][c].abs().total_cmp(&rows[b][c].abs())) else {
            break;
        };
        if rows[p][c].abs() < tol {
            continue;
        }
        rows.swap(r, p);
        for i in r + 1..rows.len() {
            let f = rows[i][c] / rows[r][c];
            for k in c..ncol {
                rows[i][k] -= f * rows[r][k];
            }
        }
        r += 1;
    }
    r
}

#[test]
fn rigid_motions_are_independent() {
    for d in 2..=4 {
        // generic points: the origin and d shifted unit vectors
        let points: Vec<Vec<f64>> = (0..=d)
            .map(|p| (0..d).map(|k| if p > 0 && k == p - 1 { 1.0 } else { 0.1 * (k + 1) as f64 }).collect())
            .collect();
        let rows: Vec<Vec<f64>> = (1..=rigid_count(d))
            .map(|a| points.iter().flat_map(|x| rigid_motions(d, a, x).unwrap()).collect())
            .collect();
        assert_eq!(rank(rows, 1e-12), rigid_count(d), "d = {d}");
    }
}

#[test]
fn lame_constant_tables() {
    let p = LameParams::new(0.5, 2.0, 2).unwrap();
    assert_eq!(lame_constants(&p), vec![2.0, 4.5, 4.5]);
    let p = LameParams::new(0.5, 2.0, 3).unwrap();
    assert_eq!(lame_constants(&p), vec![2.0, 2.0, 4.5, 4.5, 4.5, 4.0]);
    let p = LameParams::new(0.5, 2.0, 4).unwrap();
    let l = lame_constants(&p);
    assert_eq!(l.len(), 10);
    assert_eq!(&l[..3], &[2.0; 3]);
    assert_eq!(&l[3..7], &[4.5; 4]);
    assert_eq!(&l[7..], &[4.0; 3]);
    assert!(lame_constant(&p, 11).is_err());
}

fn lame_pair(d: usize) -> impl Strategy<Value = LameParams> {
    (0.05f64..5.0, -1.0f64..5.0)
        .prop_filter("ellipticity", move |(mu, lam)| d as f64 * lam + 2.0 * mu > 1e-3)
        .prop_map(move |(mu, lam)| LameParams::new(lam, mu, d).unwrap())
}

fn symmetric(d: usize) -> impl Strategy<Value = Vec<f64>> {
    prop::collection::vec(-3.0f64..3.0, d * d).prop_map(move |mut a| {
        for i in 0..d {
            for j in 0..i {
                a[j * d + i] = a[i * d + j];
            }
        }
        a
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(1000))]

    #[test]
    fn quadratic_form_respects_ellipticity_bounds(
        (t, xi) in (2usize..=3).prop_flat_map(|d| (lame_pair(d), symmetric(d)))
    ) {
        let n2: f64 = xi.iter().map(|v| v * v).sum();
        prop_assume!(n2 > 1e-8);
        let q = t.quadratic_form(&xi).unwrap();
        let (lo, hi) = t.ellipticity_bounds();
        let slack = 1e-12 * hi * n2;
        prop_assert!(q >= lo * n2 - slack, "q = {q}, lower = {}", lo * n2);
        prop_assert!(q <= hi * n2 + slack, "q = {q}, upper = {}", hi * n2);
    }

    #[test]
    fn tensor_is_self_adjoint(
        (t, a, b) in (2usize..=3).prop_flat_map(|d| (lame_pair(d), symmetric(d), symmetric(d)))
    ) {
        let ab = t.energy_density(&a, &b).unwrap();
        let ba = t.energy_density(&b, &a).unwrap();
        prop_assert!((ab - ba).abs() <= 1e-12 * (1.0 + ab.abs()));
    }
}
