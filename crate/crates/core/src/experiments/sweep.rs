use std::io::Write;
use std::time::Instant;

use rayon::prelude::*;
use serde::Serialize;

use super::config::{Config, ExperimentKind};
use crate::asympt::{gamma, rho};
use crate::elastic_core::lame_constant;
use crate::error::{Error, Result};
use crate::factors::{estimate_m_star, solve_fields, BlowupReport, CStar, FactorSystem, MStarEstimate};
use crate::fem::{mesh_domain, min_gap_layers, Field, Mesh, MeshReport, Physics, MIN_ANGLE_FLOOR};
use crate::gap_integrals::{gap_integral, leading_form, Leading, Weight, GAP_TOL};

pub const MIN_SWEEP_POINTS: usize = 4;

/// Vertical sections sampled when counting gap layers.
const LAYER_SAMPLES: usize = 15;

#[derive(Debug, Clone, Serialize)]
pub struct SweepPlan {
    pub kind: ExperimentKind,
    pub epsilons: Vec<f64>,
    pub config: Config,
}

impl SweepPlan {
    pub fn new(kind: ExperimentKind, epsilons: Vec<f64>, config: Config) -> Result<Self> {
        let bad = |msg: String| Err(Error::Config(msg));
        if epsilons.len() < MIN_SWEEP_POINTS {
            return bad(format!("a sweep needs at least {MIN_SWEEP_POINTS} separations, got {}", epsilons.len()));
        }
        if epsilons.iter().any(|e| !(*e > 0.0 && *e < 1.0)) {
            return bad("separations must lie in (0, 1)".into());
        }
        if epsilons.windows(2).any(|w| !(w[1] < w[0])) {
            return bad("separations must be strictly decreasing".into());
        }
        if kind.needs_fem() && config.d != 2 {
            return bad(format!("{} sweeps are planar, got d = {}", kind.name(), config.d));
        }
        if kind == ExperimentKind::FactorConvergence && !(config.eps_ref < *epsilons.last().unwrap()) {
            return bad(format!("eps_ref = {} must be below every swept separation", config.eps_ref));
        }
        Ok(SweepPlan { kind, epsilons, config })
    }

    pub fn from_config(config: &Config) -> Result<Self> {
        Self::new(config.kind(), config.epsilons(), config.clone())
    }
}

/// A P1 gradient sample: constant on the containing element, whose diameter
/// is the resolution of the sample.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct GradientSample {
    pub point: [f64; 2],
    pub magnitude: f64,
    pub element_diameter: f64,
}

fn sample(mesh: &Mesh, u: &Field, p: [f64; 2]) -> Result<GradientSample> {
    let (g, h) = u.gradient_at(mesh, p)?;
    Ok(GradientSample { point: p, magnitude: g.iter().map(|v| v * v).sum::<f64>().sqrt(), element_diameter: h })
}

/// Everything computed from one finite element solve.
#[derive(Debug, Clone, Serialize)]
pub struct PointReport {
    pub epsilon: f64,
    pub mesh: MeshReport,
    pub gap_layers: usize,
    /// `|∇u|` at the gap centre `(0, eps/2)`.
    pub grad_center: GradientSample,
    /// `|∇u|` at mid-gap above `x1 = eps^(1/m)`.
    pub grad_rotational: GradientSample,
    pub system: BlowupReport,
    pub c_star: CStar,
    pub m_star: Vec<MStarEstimate>,
    pub violations: Vec<String>,
    pub warnings: Vec<String>,
    pub elapsed_s: f64,
}

pub struct SolvedPoint {
    pub report: PointReport,
    pub mesh: Mesh,
    pub u: Field,
}

/// Meshes, solves every cell problem and the factor system at `eps`.
pub fn solve_point(cfg: &Config, eps: f64, with_m_star: bool) -> Result<SolvedPoint> {
    let start = Instant::now();
    let dom = cfg.domain(eps)?;
    let mesh = mesh_domain(&dom, &cfg.mesh)?;
    let mesh_report = mesh.report();
    let gap_layers = min_gap_layers(&mesh, &dom, LAYER_SAMPLES)?;
    let physics = cfg.physics()?;
    let phi = cfg.phi()?;
    let fields = solve_fields(&mesh, physics, &|p| phi.iter().map(|f| f.eval(p)).collect(), cfg.solver)?;
    let sys = FactorSystem::from_fields(&fields, 2, cfg.m, eps)?;
    let system = sys.solve()?;
    let c_star = sys.c_star()?;
    let u = fields.total(&system.c1_minus_c2, &system.c2)?;

    let x_rot = eps.powf(1.0 / cfg.m);
    let (h1, h2) = dom.profile.h(&[x_rot])?;
    let grad_center = sample(&mesh, &u, [0.0, 0.5 * eps])?;
    let grad_rotational = sample(&mesh, &u, [x_rot, 0.5 * (eps + h1 + h2)])?;

    let mut m_star = Vec::new();
    if with_m_star {
        for alpha in 1..=sys.k() {
            m_star.push(estimate_m_star(&fields, &dom, alpha)?);
        }
    }
    drop(fields);

    let mut violations = Vec::new();
    let mut warnings = Vec::new();
    if !mesh_report.ok(MIN_ANGLE_FLOOR) {
        violations.push(format!("mesh invariants failed: {mesh_report:?}"));
    }
    if gap_layers < cfg.mesh.n_gap {
        violations.push(format!("gap resolved by {gap_layers} layers, {} requested", cfg.mesh.n_gap));
    }
    if !system.solver_crosscheck.ok {
        violations.push(format!("factor system crosscheck failed: {:?}", system.solver_crosscheck));
    }
    for m in m_star.iter().filter(|m| m.flagged) {
        warnings.push(format!(
            "energy constant for alpha = {} drifts by {:.1}% between R and R/2",
            m.alpha,
            100.0 * m.r_sensitivity
        ));
    }
    let report = PointReport {
        epsilon: eps,
        mesh: mesh_report,
        gap_layers,
        grad_center,
        grad_rotational,
        system,
        c_star,
        m_star,
        violations,
        warnings,
        elapsed_s: start.elapsed().as_secs_f64(),
    };
    Ok(SolvedPoint { report, mesh, u })
}

/// `2 ∫_0^∞ t^(k-1) / (1 + tau t^m) dt` for `k < m`: the coefficient of the
/// power-law part of the planar gap integral with weight `|x|^(k-1)`.
pub fn planar_leading_coefficient(k: f64, m: f64, tau: f64) -> Option<f64> {
    (k < m).then(|| 2.0 * gamma(k / m) * gamma(1.0 - k / m) / (m * tau.powf(k / m)))
}

/// One sweep point.
#[derive(Debug, Clone, Serialize)]
pub struct Row {
    pub epsilon: f64,
    pub columns: Vec<(String, f64)>,
    pub error: Option<String>,
    pub violations: Vec<String>,
}

impl Row {
    pub fn get(&self, name: &str) -> Option<f64> {
        self.columns.iter().find(|(n, _)| n == name).map(|(_, v)| *v)
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct SweepTable {
    pub kind: ExperimentKind,
    pub reference: Option<Row>,
    pub rows: Vec<Row>,
}

impl SweepTable {
    /// `(eps, value)` for rows that computed `name`.
    pub fn column(&self, name: &str) -> Vec<(f64, f64)> {
        self.rows.iter().filter_map(|r| r.get(name).map(|v| (r.epsilon, v))).collect()
    }

    /// No failed point and no violated invariant.
    pub fn ok(&self) -> bool {
        self.rows.iter().chain(&self.reference).all(|r| r.error.is_none() && r.violations.is_empty())
    }

    pub fn failures(&self) -> Vec<String> {
        let mut out = Vec::new();
        for r in self.reference.iter().chain(&self.rows) {
            if let Some(e) = &r.error {
                out.push(format!("eps = {:e}: {e}", r.epsilon));
            }
            out.extend(r.violations.iter().map(|v| format!("eps = {:e}: {v}", r.epsilon)));
        }
        out
    }

    /// Columns in first-seen order; missing values are left empty.
    pub fn write_csv<W: Write>(&self, w: W) -> Result<()> {
        let mut names: Vec<&str> = Vec::new();
        for r in &self.rows {
            for (n, _) in &r.columns {
                if !names.contains(&n.as_str()) {
                    names.push(n);
                }
            }
        }
        let mut out = csv::Writer::from_writer(w);
        let csv_err = |e: csv::Error| Error::Io(std::io::Error::other(e));
        let mut header = vec!["epsilon"];
        header.extend(&names);
        header.push("error");
        out.write_record(&header).map_err(csv_err)?;
        for r in &self.rows {
            let mut rec = vec![format!("{:e}", r.epsilon)];
            rec.extend(names.iter().map(|n| r.get(n).map(|v| format!("{v:e}")).unwrap_or_default()));
            rec.push(r.error.clone().unwrap_or_default());
            out.write_record(&rec).map_err(csv_err)?;
        }
        out.flush()?;
        Ok(())
    }
}

fn blowup_columns(cfg: &Config, rep: &PointReport) -> Result<Vec<(String, f64)>> {
    let mut c = vec![
        ("vertices".to_string(), rep.mesh.vertices as f64),
        ("gap_layers".into(), rep.gap_layers as f64),
        ("grad_center".into(), rep.grad_center.magnitude),
        ("h_center".into(), rep.grad_center.element_diameter),
        ("grad_rot".into(), rep.grad_rotational.magnitude),
        ("h_rot".into(), rep.grad_rotational.element_diameter),
    ];
    let sys = &rep.system;
    let physics = cfg.physics()?;
    for (a, row) in sys.a_blocks.a11.iter().enumerate() {
        let alpha = a + 1;
        let (l, i) = match physics {
            Physics::Scalar => (1.0, 0),
            Physics::Lame(p) => (lame_constant(&p, alpha)?, if alpha <= 2 { 0 } else { 2 }),
        };
        c.push((format!("a11_{alpha}"), row[a]));
        c.push((format!("a11_scaled_{alpha}"), row[a] / (l * rho(i, 2, cfg.m, rep.epsilon)?)));
    }
    for (a, v) in sys.c1_minus_c2.iter().enumerate() {
        c.push((format!("c1_minus_c2_{}", a + 1), *v));
    }
    for (a, v) in sys.c2.iter().enumerate() {
        c.push((format!("c2_{}", a + 1), *v));
    }
    match (&sys.factors.b_beta, sys.factors.q) {
        (Some(b), _) => c.extend(b.iter().enumerate().map(|(a, v)| (format!("B_{}", a + 1), *v))),
        (None, Some(q)) => c.push(("Q".into(), q)),
        _ => {}
    }
    for (a, v) in rep.c_star.values.iter().enumerate() {
        c.push((format!("c_star_{}", a + 1), *v));
    }
    Ok(c)
}

fn fem_row(cfg: &Config, eps: f64) -> Result<Row> {
    let rep = solve_point(cfg, eps, false)?.report;
    Ok(Row { epsilon: eps, columns: blowup_columns(cfg, &rep)?, error: None, violations: rep.violations })
}

fn factor_values(row: &Row) -> Vec<f64> {
    row.columns
        .iter()
        .filter(|(n, _)| n == "Q" || n.starts_with("B_"))
        .map(|(_, v)| *v)
        .collect()
}

/// `(value, error)` of the configured gap integral.
pub fn gap_integral_point(cfg: &Config, eps: f64) -> Result<(f64, f64)> {
    let weight = Weight::parse(&cfg.weight)?;
    let est = gap_integral(weight, &cfg.profile()?, eps, GAP_TOL)?;
    Ok((est.value, est.error))
}

fn gap_row(cfg: &Config, eps: f64) -> Result<Row> {
    let (value, error) = gap_integral_point(cfg, eps)?;
    let weight = Weight::parse(&cfg.weight)?;
    let scaled = match leading_form(weight, cfg.d, cfg.m) {
        Leading::Power { exponent } => value * eps.powf(-exponent),
        Leading::Log => value / eps.ln().abs(),
        Leading::Bounded { .. } => value,
    };
    let columns = vec![("value".into(), value), ("error".into(), error), ("scaled".into(), scaled)];
    Ok(Row { epsilon: eps, columns, error: None, violations: Vec::new() })
}

fn constants_row(cfg: &Config, eps: f64) -> Result<Row> {
    let mut row = fem_row(cfg, eps)?;
    let physics = cfg.physics()?;
    let count = if matches!(physics, Physics::Scalar) { 1 } else { 3 };
    for alpha in 1..=count {
        let k = if alpha <= 2 { 1.0 } else { 3.0 };
        if let Some(c) = planar_leading_coefficient(k, cfg.m, cfg.tau) {
            row.columns.push((format!("a11_limit_{alpha}"), c));
        }
    }
    Ok(row)
}

fn failed(eps: f64, e: Error) -> Row {
    Row { epsilon: eps, columns: Vec::new(), error: Some(e.to_string()), violations: Vec::new() }
}

/// Runs the plan on a pool of `jobs` workers; rows come back in plan order and a
/// failing point is recorded without stopping the others.
pub fn run_sweep(plan: &SweepPlan, jobs: usize) -> Result<SweepTable> {
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(jobs.max(1))
        .build()
        .map_err(|e| Error::Config(format!("cannot start {jobs} workers: {e}")))?;
    let cfg = &plan.config;
    let point = |eps: f64| -> Result<Row> {
        match plan.kind {
            ExperimentKind::ConductivityBlowup | ExperimentKind::LameBlowup | ExperimentKind::FactorConvergence => {
                fem_row(cfg, eps)
            }
            ExperimentKind::GapIntegral => gap_row(cfg, eps),
            ExperimentKind::Constants => constants_row(cfg, eps),
        }
    };
    pool.install(|| {
        let reference = match plan.kind {
            ExperimentKind::FactorConvergence => {
                Some(point(cfg.eps_ref).unwrap_or_else(|e| failed(cfg.eps_ref, e)))
            }
            _ => None,
        };
        let mut rows: Vec<Row> =
            plan.epsilons.par_iter().map(|&e| point(e).unwrap_or_else(|err| failed(e, err))).collect();
        if let Some(r) = reference.as_ref().filter(|r| r.error.is_none()) {
            let fref = factor_values(r);
            for row in rows.iter_mut().filter(|r| r.error.is_none()) {
                let f = factor_values(row);
                let dist = f.iter().zip(&fref).map(|(a, b)| (a - b).powi(2)).sum::<f64>().sqrt();
                row.columns.push(("factor_error".into(), dist));
            }
        }
        Ok(SweepTable { kind: plan.kind, reference, rows })
    })
}
