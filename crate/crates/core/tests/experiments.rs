use std::f64::consts::PI;
use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use gapstress::experiments::*;

#[test]
fn synthetic_power_and_log_fits() {
    let eps: [f64; 5] = [1e-1, 3e-2, 1e-2, 3e-3, 1e-3];
    let power: Vec<(f64, f64)> = eps.iter().map(|e| (*e, e.powf(-0.5))).collect();
    let f = fit_rate(&power, FitModel::Power).unwrap();
    assert!((f.slope + 0.5).abs() < 1e-12 && f.intercept.abs() < 1e-12 && f.rms < 1e-12);
    let log: Vec<(f64, f64)> = eps.iter().map(|e| (*e, 3.0 * e.ln().abs())).collect();
    let f = fit_rate(&log, FitModel::Log).unwrap();
    assert!((f.slope - 1.0).abs() < 1e-12 && (f.intercept - 3f64.ln()).abs() < 1e-12);
    assert_eq!(f.points, 5);
}

#[test]
fn fit_input_is_validated() {
    assert!(fit_rate(&[(1e-2, 1.0), (1e-3, 2.0)], FitModel::Power).is_err());
    assert!(fit_rate(&[(1e-2, 1.0), (1e-3, 0.0), (1e-4, 2.0)], FitModel::Log).is_err());
    assert!(fit_rate(&[(1e-2, 1.0), (1e-2, 2.0), (1e-2, 3.0)], FitModel::Power).is_err());
    assert!(fit_rate(&[(1e-2, 1.0), (2.0, 2.0), (1e-4, 3.0)], FitModel::Power).is_err());
}

#[test]
fn plans_are_validated() {
    let cfg = Config::default();
    let grid = vec![4e-2, 2e-2, 1e-2, 5e-3];
    assert!(SweepPlan::new(ExperimentKind::ConductivityBlowup, grid.clone(), cfg.clone()).is_ok());
    assert!(SweepPlan::new(ExperimentKind::ConductivityBlowup, grid[..3].to_vec(), cfg.clone()).is_err());
    assert!(SweepPlan::new(ExperimentKind::ConductivityBlowup, vec![1e-2, 2e-2, 5e-3, 1e-3], cfg.clone()).is_err());
    assert!(SweepPlan::new(ExperimentKind::ConductivityBlowup, vec![1.5, 2e-2, 5e-3, 1e-3], cfg.clone()).is_err());
    let coarse_ref = Config { eps_ref: 1e-2, ..cfg.clone() };
    assert!(SweepPlan::new(ExperimentKind::FactorConvergence, grid.clone(), coarse_ref).is_err());
    let spatial = Config { d: 3, ..cfg.clone() };
    assert!(SweepPlan::new(ExperimentKind::LameBlowup, grid.clone(), spatial.clone()).is_err());
    assert!(SweepPlan::new(ExperimentKind::GapIntegral, grid, spatial).is_ok());
}

#[test]
fn default_grids() {
    let c = Config::default();
    assert_eq!(c.epsilons(), vec![4e-2, 2e-2, 1e-2, 5e-3, 2.5e-3]);
    let l = Config::from_toml("physics = \"lame\"").unwrap();
    assert_eq!(l.epsilons(), vec![4e-2, 2e-2, 1e-2, 5e-3]);
    assert_eq!(l.kind(), ExperimentKind::LameBlowup);
    assert!(Config::from_toml("physics = \"lame\"\nphi = \"x1\"").unwrap().phi().is_err());
    assert!(Config::from_toml("unknown_key = 1").is_err());
}

#[test]
fn planar_leading_coefficients() {
    assert!((planar_leading_coefficient(1.0, 2.0, 1.0).unwrap() - PI).abs() < 1e-13);
    assert!((planar_leading_coefficient(1.0, 2.0, 4.0).unwrap() - PI / 2.0).abs() < 1e-13);
    // 2 Γ(3/4) Γ(1/4) / 4 = π / √2
    assert!((planar_leading_coefficient(3.0, 4.0, 1.0).unwrap() - PI / 2f64.sqrt()).abs() < 1e-12);
    assert!(planar_leading_coefficient(3.0, 2.0, 1.0).is_none());
}

fn values(t: &SweepTable) -> Vec<Vec<(String, f64)>> {
    t.rows.iter().map(|r| r.columns.clone()).collect()
}

#[test]
fn sweeps_are_deterministic() {
    let cfg = Config::default();
    let plan = SweepPlan::new(ExperimentKind::ConductivityBlowup, vec![4e-2, 3e-2, 2e-2, 1.5e-2], cfg).unwrap();
    let a = run_sweep(&plan, 1).unwrap();
    let b = run_sweep(&plan, 2).unwrap();
    assert!(a.ok(), "{:?}", a.failures());
    assert_eq!(values(&a), values(&b));
    let eps: Vec<f64> = a.rows.iter().map(|r| r.epsilon).collect();
    assert_eq!(eps, plan.epsilons);
    // the gradient at the gap centre grows as the gap closes
    let g = a.column("grad_center");
    assert!(g.windows(2).all(|w| w[1].1 > w[0].1), "{g:?}");
}

#[test]
fn failing_points_do_not_stop_the_sweep() {
    let mut cfg = Config::default();
    cfg.mesh.max_vertices = 3000;
    let plan = SweepPlan::new(ExperimentKind::ConductivityBlowup, vec![4e-2, 1e-2, 1e-3, 1e-4], cfg).unwrap();
    let t = run_sweep(&plan, 1).unwrap();
    assert_eq!(t.rows.len(), 4);
    assert!(!t.ok());
    assert!(t.rows.iter().any(|r| r.error.is_some()));
    assert!(t.failures().iter().any(|f| f.contains("vertex budget")));
}

#[test]
fn gap_integral_sweep_scales_out_the_leading_power() {
    let cfg = Config { epsilons: Some(vec![1e-3, 1e-4, 1e-5, 1e-6]), ..Config::default() };
    let plan = SweepPlan::new(ExperimentKind::GapIntegral, cfg.epsilons(), cfg).unwrap();
    let t = run_sweep(&plan, 1).unwrap();
    // √ε ∫ dx / (ε + x²) over |x| < 1/2 is 2 arctan(1 / (2√ε)) → π
    let scaled = t.column("scaled");
    for &(e, s) in &scaled {
        assert!((s - 2.0 * (0.5 / e.sqrt()).atan()).abs() < 1e-8, "{e}: {s}");
    }
    assert!((scaled[3].1 - PI).abs() < 5e-3);
}

fn gapstress(args: &[&str], dir: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_gapstress")).args(args).current_dir(dir).output().unwrap()
}

#[test]
fn cli_constants_and_gapint() {
    let dir = tempfile::tempdir().unwrap();
    let out = gapstress(&["constants", "--out", "c"], dir.path());
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let json: serde_json::Value = serde_json::from_str(&fs::read_to_string(dir.path().join("c/constants.json")).unwrap()).unwrap();
    assert!(json.get("constants").is_some());

    let out = gapstress(&["gapint", "--eps", "1e-2,1e-3", "--out", "g"], dir.path());
    assert!(out.status.success());
    let csv = fs::read_to_string(dir.path().join("g/gapint.csv")).unwrap();
    let rows: Vec<&str> = csv.lines().collect();
    assert_eq!(rows[0], "epsilon,value,error");
    assert_eq!(rows.len(), 3);
    let v: f64 = rows[1].split(',').nth(1).unwrap().parse().unwrap();
    let exact = 2.0 / 1e-2f64.sqrt() * (0.5 / 1e-2f64.sqrt()).atan();
    assert!((v - exact).abs() < 1e-8 * exact);
}

#[test]
fn cli_fit_reads_a_sweep_table() {
    let dir = tempfile::tempdir().unwrap();
    let mut csv = String::from("epsilon,y,error\n");
    for e in [1e-1f64, 1e-2, 1e-3, 1e-4] {
        csv.push_str(&format!("{e:e},{:e},\n", 2.0 * e.powf(-0.5)));
    }
    csv.push_str("1e-5,,solver failed\n");
    fs::write(dir.path().join("t.csv"), csv).unwrap();
    let out = gapstress(&["fit", "--input", "t.csv", "--column", "y", "--out", "f"], dir.path());
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let fit: serde_json::Value = serde_json::from_str(&fs::read_to_string(dir.path().join("f/fit.json")).unwrap()).unwrap();
    assert!((fit["slope"].as_f64().unwrap() + 0.5).abs() < 1e-12);
    assert_eq!(fit["points"].as_u64(), Some(4));
    let out = gapstress(&["fit", "--input", "t.csv", "--column", "nope"], dir.path());
    assert_eq!(out.status.code(), Some(1));
}

#[test]
fn cli_solve_and_sweep_exit_codes() {
    let dir = tempfile::tempdir().unwrap();
    let out = gapstress(&["solve", "--eps", "2e-2", "--out", "s"], dir.path());
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    for f in ["solve.json", "field.csv", "mesh.txt"] {
        assert!(dir.path().join("s").join(f).exists(), "{f}");
    }

    fs::write(dir.path().join("ok.toml"), "epsilons = [4e-2, 3e-2, 2e-2, 1.5e-2]\n").unwrap();
    let out = gapstress(&["sweep", "--config", "ok.toml", "--out", "w", "--jobs", "2"], dir.path());
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let csv = fs::read_to_string(dir.path().join("w/sweep.csv")).unwrap();
    assert_eq!(csv.lines().count(), 5);
    let summary: serde_json::Value = serde_json::from_str(&fs::read_to_string(dir.path().join("w/sweep.json")).unwrap()).unwrap();
    assert!(summary["fit"]["slope"].as_f64().unwrap() < 0.0);

    fs::write(dir.path().join("bad.toml"), "epsilons = [4e-2, 1e-2, 1e-3, 1e-4]\n[mesh]\nmax_vertices = 3000\n").unwrap();
    let out = gapstress(&["sweep", "--config", "bad.toml", "--out", "b"], dir.path());
    assert_eq!(out.status.code(), Some(3), "{}", String::from_utf8_lossy(&out.stderr));

    fs::write(dir.path().join("typo.toml"), "epsilom = 1\n").unwrap();
    let out = gapstress(&["solve", "--config", "typo.toml"], dir.path());
    assert_eq!(out.status.code(), Some(1));
}
