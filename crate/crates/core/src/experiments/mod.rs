//! Orchestration behind the `gapstress` binary: configuration, separation
//! sweeps, rate fits and the constants report.

mod config;
mod fit;
mod sweep;

use serde::Serialize;

pub use config::{Affine, Config, ExperimentKind, PhiSpec, PhysicsKind};
pub use fit::{fit_rate, FitModel, RateFit};
pub use sweep::{
    gap_integral_point, planar_leading_coefficient, run_sweep, solve_point, GradientSample, PointReport, Row,
    SolvedPoint, SweepPlan, SweepTable, MIN_SWEEP_POINTS,
};

use crate::asympt::{constants_report, ConstantsReport, GeometryInput};
use crate::error::Result;
use crate::factors::MStarEstimate;

#[derive(Debug, Clone, Serialize)]
pub struct ConstantsOutput {
    pub constants: ConstantsReport,
    /// Planar leading coefficients of `a_11^{αα} / (L_α rho)`, where they exist.
    pub planar_leading: Vec<Option<f64>>,
    /// Energy constants estimated at `eps_ref` when requested.
    pub m_star: Vec<MStarEstimate>,
    pub warnings: Vec<String>,
}

/// Constants for the configuration. In the plane the energy constant can be
/// estimated from a solve at `eps_ref`; in three dimensions it must be supplied.
pub fn constants(cfg: &Config) -> Result<ConstantsOutput> {
    let tau2 = cfg.tau2.unwrap_or(cfg.tau);
    let g = GeometryInput { m: cfg.m, tau1: cfg.tau, tau2, radius: cfg.radius };
    let mut m_star = Vec::new();
    let mut warnings = Vec::new();
    if cfg.d == 2 && cfg.estimate_m_star {
        let point = solve_point(cfg, cfg.eps_ref, true)?.report;
        warnings.extend(point.violations);
        warnings.extend(point.warnings);
        m_star = point.m_star;
    }
    let supplied = cfg.m_star.or_else(|| m_star.first().map(|m| m.m_display));
    let planar_leading = match (cfg.d, cfg.physics) {
        (2, PhysicsKind::Scalar) => vec![planar_leading_coefficient(1.0, cfg.m, cfg.tau)],
        (2, PhysicsKind::Lame) => [1.0, 1.0, 3.0].iter().map(|&k| planar_leading_coefficient(k, cfg.m, cfg.tau)).collect(),
        _ => Vec::new(),
    };
    Ok(ConstantsOutput { constants: constants_report(&cfg.lame()?, g, supplied), planar_leading, m_star, warnings })
}
