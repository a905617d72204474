use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::elastic_core::LameParams;
use crate::error::{Error, Result};
use crate::fem::{MeshOptions, Physics, SolverKind};
use crate::geometry::{DomainSpec, GapProfile};

/// Experiment configuration, read from TOML.
///
/// ```toml
/// d = 2
/// m = 2.0
/// tau = 1.0
/// epsilon = 1e-2
/// R = 0.5
/// outer = 8.0
/// phi = "x2"            # scalar; the Lamé system takes ["x1", "x2"]
/// physics = "scalar"    # or "lame", with lambda and mu
/// kind = "conductivity-blowup"
/// epsilons = [4e-2, 2e-2, 1e-2, 5e-3, 2.5e-3]
///
/// [mesh]
/// n_gap = 6
/// ```
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Config {
    pub d: usize,
    pub m: f64,
    pub tau: f64,
    /// Second principal coefficient of an anisotropic profile (`d = 3` only).
    pub tau2: Option<f64>,
    pub epsilon: f64,
    #[serde(rename = "R")]
    pub radius: f64,
    /// Side of the outer square.
    pub outer: f64,
    pub phi: Option<PhiSpec>,
    pub physics: PhysicsKind,
    pub lambda: f64,
    pub mu: f64,
    pub kind: Option<ExperimentKind>,
    pub epsilons: Option<Vec<f64>>,
    /// Separation standing in for the touching configuration.
    pub eps_ref: f64,
    /// Gap-integral weight: `1`, `r2` or `xk^2`.
    pub weight: String,
    /// Externally supplied energy constant for the three-dimensional `K`, `G`.
    pub m_star: Option<f64>,
    /// Estimate the energy constant by a solve at `eps_ref` (`d = 2`).
    pub estimate_m_star: bool,
    pub mesh: MeshOptions,
    pub solver: SolverKind,
}

impl Default for Config {
    fn default() -> Self {
        Config {
            d: 2,
            m: 2.0,
            tau: 1.0,
            tau2: None,
            epsilon: 1e-2,
            radius: 0.5,
            outer: 8.0,
            phi: None,
            physics: PhysicsKind::Scalar,
            lambda: 1.0,
            mu: 1.0,
            kind: None,
            epsilons: None,
            eps_ref: 1e-4,
            weight: "1".into(),
            m_star: None,
            estimate_m_star: false,
            mesh: MeshOptions::default(),
            solver: SolverKind::Auto,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum PhysicsKind {
    Scalar,
    Lame,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ExperimentKind {
    ConductivityBlowup,
    LameBlowup,
    FactorConvergence,
    GapIntegral,
    Constants,
}

impl ExperimentKind {
    pub fn name(&self) -> &'static str {
        match self {
            ExperimentKind::ConductivityBlowup => "conductivity-blowup",
            ExperimentKind::LameBlowup => "lame-blowup",
            ExperimentKind::FactorConvergence => "factor-convergence",
            ExperimentKind::GapIntegral => "gap-integral",
            ExperimentKind::Constants => "constants",
        }
    }

    pub fn needs_fem(&self) -> bool {
        !matches!(self, ExperimentKind::GapIntegral)
    }
}

/// Outer boundary data: one affine expression per component.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum PhiSpec {
    Scalar(String),
    Vector(Vec<String>),
}

impl Config {
    pub fn from_toml(text: &str) -> Result<Self> {
        let cfg: Config = toml::from_str(text).map_err(|e| Error::Config(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::Config(format!("cannot read {}: {e}", path.display())))?;
        Self::from_toml(&text)
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(Error::Config(msg));
        if self.d != 2 && self.d != 3 {
            return bad(format!("d = {} (only 2 and 3 are supported)", self.d));
        }
        if self.tau2.is_some() && self.d != 3 {
            return bad("tau2 is only meaningful for d = 3".into());
        }
        if !(self.eps_ref > 0.0 && self.eps_ref < 1.0) {
            return bad(format!("eps_ref = {} must lie in (0, 1)", self.eps_ref));
        }
        if !(self.epsilon > 0.0 && self.epsilon < 1.0) {
            return bad(format!("epsilon = {} must lie in (0, 1)", self.epsilon));
        }
        if !(self.radius > 0.0) || !(self.outer > 0.0) {
            return bad(format!("R = {} and outer = {} must be positive", self.radius, self.outer));
        }
        Ok(())
    }

    pub fn physics(&self) -> Result<Physics> {
        Ok(match self.physics {
            PhysicsKind::Scalar => Physics::Scalar,
            PhysicsKind::Lame => Physics::Lame(LameParams::new(self.lambda, self.mu, 2)?),
        })
    }

    pub fn lame(&self) -> Result<LameParams> {
        LameParams::new(self.lambda, self.mu, self.d)
    }

    /// Planar two-inclusion domain at separation `eps`.
    pub fn domain(&self, eps: f64) -> Result<DomainSpec> {
        if self.d != 2 {
            return Err(Error::Config(format!("finite element runs are planar, got d = {}", self.d)));
        }
        DomainSpec::planar(self.m, self.tau, eps, self.outer, self.radius)
    }

    /// Monomial (or anisotropic) gap profile for the gap integrals and constants.
    pub fn profile(&self) -> Result<GapProfile> {
        match self.tau2 {
            Some(t2) => GapProfile::anisotropic(self.m, vec![self.tau, t2], self.radius),
            None => GapProfile::monomial(self.d, self.m, self.tau, self.radius),
        }
    }

    /// The configured kind, or the blow-up sweep matching the physics.
    pub fn kind(&self) -> ExperimentKind {
        self.kind.unwrap_or(match self.physics {
            PhysicsKind::Scalar => ExperimentKind::ConductivityBlowup,
            PhysicsKind::Lame => ExperimentKind::LameBlowup,
        })
    }

    /// Configured separations, or the default grid for the physics.
    pub fn epsilons(&self) -> Vec<f64> {
        self.epsilons.clone().unwrap_or_else(|| {
            let mut grid = vec![4e-2, 2e-2, 1e-2, 5e-3, 2.5e-3];
            if self.physics == PhysicsKind::Lame {
                grid.pop();
            }
            grid
        })
    }

    /// Outer data as affine forms, one per field component.
    pub fn phi(&self) -> Result<Vec<Affine>> {
        let nc = match self.physics {
            PhysicsKind::Scalar => 1,
            PhysicsKind::Lame => 2,
        };
        let parts: Vec<String> = match &self.phi {
            None if nc == 1 => vec!["x2".into()],
            None => vec!["x1".into(), "x2".into()],
            Some(PhiSpec::Scalar(s)) => vec![s.clone()],
            Some(PhiSpec::Vector(v)) => v.clone(),
        };
        if parts.len() != nc {
            return Err(Error::Config(format!("phi has {} components, the physics needs {nc}", parts.len())));
        }
        parts.iter().map(|s| Affine::parse(s)).collect()
    }
}

/// `c0 + c1 x1 + c2 x2`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Affine(pub [f64; 3]);

impl Affine {
    pub fn eval(&self, p: [f64; 2]) -> f64 {
        self.0[0] + self.0[1] * p[0] + self.0[2] * p[1]
    }

    /// Parses sums such as `x1`, `1 - 2*x2`, `0.5x1 + x2 + 3`.
    pub fn parse(s: &str) -> Result<Self> {
        let err = || Error::Config(format!("cannot parse boundary data {s:?}; expected an affine form in x1, x2"));
        let text: String = s.chars().filter(|c| !c.is_whitespace()).collect();
        if text.is_empty() {
            return Err(err());
        }
        let mut c = [0.0; 3];
        let mut terms = Vec::new();
        let mut start = 0;
        for (i, ch) in text.char_indices() {
            // a sign after an exponent marker belongs to the number
            let after_exp = i > 0 && matches!(text.as_bytes()[i - 1], b'e' | b'E');
            if (ch == '+' || ch == '-') && i > start && !after_exp {
                terms.push(&text[start..i]);
                start = i;
            }
        }
        terms.push(&text[start..]);
        for term in terms {
            let (sign, body) = match term.as_bytes()[0] {
                b'-' => (-1.0, &term[1..]),
                b'+' => (1.0, &term[1..]),
                _ => (1.0, term),
            };
            let (coef, var) = match body.find('x') {
                Some(k) => {
                    let var = match &body[k..] {
                        "x1" => 1,
                        "x2" => 2,
                        _ => return Err(err()),
                    };
                    let head = body[..k].trim_end_matches('*');
                    let coef = if head.is_empty() { 1.0 } else { head.parse::<f64>().map_err(|_| err())? };
                    (coef, var)
                }
                None => (body.parse::<f64>().map_err(|_| err())?, 0),
            };
            c[var] += sign * coef;
        }
        Ok(Affine(c))
    }
}
