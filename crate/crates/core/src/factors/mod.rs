//! Factor systems `(A B; C D)(X1; X2) = (Y1; Y2)` built from solved fields,
//! their Cramer and LU solutions, the starred constants and the blow-up factors.
//!
//! Block matrices are stored with rows indexed by the test motion `β` and
//! columns by the unknown `α`, so `B[β][α] = Σ_i a_i1^{αβ}`.

pub mod dense;
pub mod mstar;

use std::collections::BTreeMap;

use serde::Serialize;

pub use dense::{cramer, det, Determinant, Lu, Matrix};
pub use mstar::{estimate_m_star, MStarEstimate};

use crate::asympt::Regime;
use crate::elastic_core::{rigid_count, rigid_motions};
use crate::error::{invalid, Error, Result};
use crate::fem::{tag, FeProblem, Field, Mesh, Physics, SolverKind};

pub const SYMMETRY_TOL: f64 = 1e-10;
pub const CROSSCHECK_TOL: f64 = 1e-10;
pub const RESIDUAL_TOL: f64 = 1e-9;

/// `v_i^α` for both inclusions and `v_0`, all on one assembled problem.
pub struct SolvedFields<'m> {
    pub problem: FeProblem<'m>,
    /// `v[i][α - 1]`.
    pub v: [Vec<Field>; 2],
    pub v0: Field,
}

fn motions(physics: &Physics, p: [f64; 2]) -> Vec<Vec<f64>> {
    match physics {
        Physics::Scalar => vec![vec![1.0]],
        Physics::Lame(_) => (1..=3).map(|a| rigid_motions(2, a, &p).expect("planar rigid motion")).collect(),
    }
}

/// Solves every cell problem and `v_0` with outer data `phi`, reusing one factorisation.
pub fn solve_fields<'m>(
    mesh: &'m Mesh,
    physics: Physics,
    phi: &dyn Fn([f64; 2]) -> Vec<f64>,
    solver: SolverKind,
) -> Result<SolvedFields<'m>> {
    let problem = FeProblem::new(mesh, physics, solver)?;
    let nc = physics.components();
    let k = if nc == 1 { 1 } else { 3 };
    let mut data: Vec<Box<dyn Fn([f64; 2], u8) -> Vec<f64>>> = Vec::new();
    for side in [tag::UPPER, tag::LOWER] {
        for a in 0..k {
            data.push(Box::new(move |p, t| {
                if t == side {
                    motions(&physics, p).swap_remove(a)
                } else {
                    vec![0.0; nc]
                }
            }));
        }
    }
    data.push(Box::new(move |p, t| if t == tag::OUTER { phi(p) } else { vec![0.0; nc] }));
    let refs: Vec<&dyn Fn([f64; 2], u8) -> Vec<f64>> = data.iter().map(|b| b.as_ref()).collect();
    let mut fields = problem.solve_many(&refs)?;
    let v0 = fields.pop().unwrap();
    let v2 = fields.split_off(k);
    Ok(SolvedFields { problem, v: [fields, v2], v0 })
}

impl SolvedFields<'_> {
    /// `u = Σ_α C_1^α v_1^α + C_2^α v_2^α + v_0` from `X1 = C1 - C2` and `X2 = C2`.
    pub fn total(&self, x1: &[f64], x2: &[f64]) -> Result<Field> {
        let c1: Vec<f64> = x1.iter().zip(x2).map(|(a, b)| a + b).collect();
        let mut terms: Vec<(f64, &Field)> = vec![(1.0, &self.v0)];
        for (a, f) in self.v[0].iter().enumerate() {
            terms.push((c1[a], f));
        }
        for (a, f) in self.v[1].iter().enumerate() {
            terms.push((x2[a], f));
        }
        Field::combine(&terms)
    }
}

/// Block matrices and right-hand sides in equation-by-unknown orientation.
#[derive(Debug, Clone)]
pub struct Blocks {
    pub a: Matrix,
    pub b: Matrix,
    pub c: Matrix,
    pub d: Matrix,
    pub y1: Vec<f64>,
    pub y2: Vec<f64>,
}

#[derive(Debug, Clone, Serialize)]
pub struct FactorSystem {
    pub d: usize,
    pub m: f64,
    pub epsilon: f64,
    pub scalar: bool,
    /// `a[i][j][α][β]` with 0-based indices.
    pub a: [[Vec<Vec<f64>>; 2]; 2],
    /// `b[j][β]`.
    pub b: [Vec<f64>; 2],
}

impl FactorSystem {
    pub fn new(d: usize, m: f64, epsilon: f64, scalar: bool, a: [[Vec<Vec<f64>>; 2]; 2], b: [Vec<f64>; 2]) -> Result<Self> {
        let k = if scalar { 1 } else { rigid_count(d) };
        for blk in a.iter().flatten() {
            if blk.len() != k || blk.iter().any(|r| r.len() != k) {
                return Err(Error::DimensionMismatch { expected: k, got: blk.len() });
            }
        }
        if b.iter().any(|v| v.len() != k) {
            return Err(Error::DimensionMismatch { expected: k, got: b[0].len().min(b[1].len()) });
        }
        let sys = FactorSystem { d, m, epsilon, scalar, a, b };
        let asym = sys.block_asymmetry();
        if asym > SYMMETRY_TOL {
            return Err(Error::Solver(format!(
                "block symmetry a_ij^ab = a_ji^ba violated by {asym:.2e}; refine the mesh"
            )));
        }
        Ok(sys)
    }

    /// Weak-form assembly: `a_ij^{αβ} = E(v_i^α, v_j^β)`, `b_j^β = -E(v_0, v_j^β)`.
    pub fn from_fields(f: &SolvedFields, d: usize, m: f64, epsilon: f64) -> Result<Self> {
        let k = f.v[0].len();
        let e = |u: &Field, v: &Field| f.problem.energy(u, v);
        let mut a: [[Vec<Vec<f64>>; 2]; 2] = Default::default();
        for i in 0..2 {
            for j in 0..2 {
                a[i][j] = (0..k)
                    .map(|al| (0..k).map(|be| e(&f.v[i][al], &f.v[j][be])).collect::<Result<Vec<_>>>())
                    .collect::<Result<_>>()?;
            }
        }
        let mut b: [Vec<f64>; 2] = Default::default();
        for j in 0..2 {
            b[j] = (0..k).map(|be| e(&f.v0, &f.v[j][be]).map(|x| -x)).collect::<Result<_>>()?;
        }
        FactorSystem::new(d, m, epsilon, matches!(f.problem.physics, Physics::Scalar), a, b)
    }

    pub fn k(&self) -> usize {
        self.b[0].len()
    }

    pub fn regime(&self) -> Regime {
        if self.scalar {
            Regime::scalar(self.d, self.m)
        } else {
            Regime::lame(self.d, self.m)
        }
    }

    pub fn regime_label(&self) -> &'static str {
        match (self.scalar, self.regime()) {
            (true, Regime::Translational) => "m>=d-1",
            (true, _) => "m<d-1",
            (false, r) => r.label(),
        }
    }

    /// Largest relative violation of `a_ij^{αβ} = a_ji^{βα}`.
    pub fn block_asymmetry(&self) -> f64 {
        let k = self.k();
        let scale = self.a.iter().flatten().flatten().flatten().fold(0.0f64, |m, v| m.max(v.abs()));
        let mut w = 0.0f64;
        for i in 0..2 {
            for j in 0..2 {
                for al in 0..k {
                    for be in 0..k {
                        w = w.max((self.a[i][j][al][be] - self.a[j][i][be][al]).abs());
                    }
                }
            }
        }
        w / scale.max(f64::MIN_POSITIVE)
    }

    pub fn blocks(&self) -> Blocks {
        let k = self.k();
        let a = &self.a;
        Blocks {
            a: Matrix::from_fn(k, |be, al| a[0][0][al][be]),
            b: Matrix::from_fn(k, |be, al| a[0][0][al][be] + a[1][0][al][be]),
            c: Matrix::from_fn(k, |be, al| a[0][0][al][be] + a[0][1][al][be]),
            d: Matrix::from_fn(k, |be, al| (0..2).flat_map(|i| (0..2).map(move |j| (i, j))).map(|(i, j)| a[i][j][al][be]).sum()),
            y1: self.b[0].clone(),
            y2: (0..k).map(|be| self.b[0][be] + self.b[1][be]).collect(),
        }
    }

    /// Full `2K x 2K` matrix and right-hand side.
    pub fn full(&self) -> (Matrix, Vec<f64>) {
        let k = self.k();
        let bl = self.blocks();
        let f = Matrix::from_fn(2 * k, |r, c| match (r < k, c < k) {
            (true, true) => bl.a.get(r, c),
            (true, false) => bl.b.get(r, c - k),
            (false, true) => bl.c.get(r - k, c),
            (false, false) => bl.d.get(r - k, c - k),
        });
        let mut y = bl.y1;
        y.extend(bl.y2);
        (f, y)
    }

    /// `B_β = -Σ_α C_2^α Σ_i a_i1^{αβ} + b_1^β` (the scalar `Q` when `K = 1`).
    pub fn blowup_factors(&self, c2: &[f64]) -> Vec<f64> {
        let bl = self.blocks();
        let bc = bl.b.apply(c2);
        bl.y1.iter().zip(bc).map(|(y, s)| y - s).collect()
    }

    /// Solves the full system by LU and by Cramer's rule and cross-checks them.
    pub fn solve(&self) -> Result<BlowupReport> {
        let k = self.k();
        let (f, y) = self.full();
        let lu = Lu::new(&f);
        let x = lu.solve(&y)?;
        let xc = cramer(&f, &y, &(0..2 * k).collect::<Vec<_>>())?;
        let xn = x.iter().fold(0.0f64, |m, v| m.max(v.abs()));
        let diff = x.iter().zip(&xc).fold(0.0f64, |m, (p, q)| m.max((p - q).abs()));
        let cross = if xn > 0.0 { diff / xn } else { diff };
        let r = f.apply(&x);
        let rn = r.iter().zip(&y).fold(0.0f64, |m, (p, q)| m.max((p - q).abs()));
        let yn = y.iter().fold(0.0f64, |m, v| m.max(v.abs()));
        let scale = yn + f.max_abs() * xn;
        let residual = if scale > 0.0 { rn / scale } else { 0.0 };
        let bl = self.blocks();
        let spd = bl.d.cholesky().is_some();
        let (c1_minus_c2, c2) = (x[..k].to_vec(), x[k..].to_vec());
        let fac = self.blowup_factors(&c2);
        let mut determinants = BTreeMap::new();
        determinants.insert("F".to_string(), lu.det());
        determinants.insert("A".to_string(), det(&bl.a));
        determinants.insert("D".to_string(), det(&bl.d));
        let factors = if self.scalar {
            Factors { b_beta: None, q: Some(fac[0]) }
        } else {
            Factors { b_beta: Some(fac), q: None }
        };
        let checks = Crosscheck {
            cramer_vs_lu: cross,
            residual,
            block_asymmetry: self.block_asymmetry(),
            d_block_cholesky: spd,
            ok: cross <= CROSSCHECK_TOL && residual <= RESIDUAL_TOL && spd && self.block_asymmetry() <= SYMMETRY_TOL,
        };
        Ok(BlowupReport {
            regime: self.regime_label().to_string(),
            epsilon: self.epsilon,
            a_blocks: ABlocks {
                a11: self.a[0][0].clone(),
                a12: self.a[0][1].clone(),
                a21: self.a[1][0].clone(),
                a22: self.a[1][1].clone(),
            },
            b: BVectors { b1: self.b[0].clone(), b2: self.b[1].clone() },
            c2,
            c1_minus_c2,
            factors,
            determinants,
            solver_crosscheck: checks,
        })
    }

    /// Starred constants by the regime of this system.
    pub fn c_star(&self) -> Result<CStar> {
        self.c_star_for(self.regime())
    }

    /// Starred constants on a requested regime path; a path other than the system's own is rejected.
    pub fn c_star_for(&self, regime: Regime) -> Result<CStar> {
        if regime != self.regime() {
            return invalid(format!(
                "regime mismatch: m = {} in d = {} selects {}, not {}",
                self.m,
                self.d,
                self.regime_label(),
                regime.label()
            ));
        }
        let k = self.k();
        let bl = self.blocks();
        let (mat, rhs, offset, name) = match regime {
            Regime::Translational => (bl.d.clone(), bl.y2.clone(), 0, "D"),
            Regime::Rotational => {
                let rot: Vec<usize> = (self.d..k).collect();
                let all: Vec<usize> = (0..k).collect();
                let r = rot.len();
                let n = r + k;
                let top_l = bl.a.select(&rot, &rot);
                let top_r = bl.b.select(&rot, &all);
                let bot_l = bl.c.select(&all, &rot);
                let f = Matrix::from_fn(n, |i, j| match (i < r, j < r) {
                    (true, true) => top_l[i][j],
                    (true, false) => top_r[i][j - r],
                    (false, true) => bot_l[i - r][j],
                    (false, false) => bl.d.get(i - r, j - r),
                });
                let mut y: Vec<f64> = rot.iter().map(|&b| bl.y1[b]).collect();
                y.extend(&bl.y2);
                (f, y, r, "F0")
            }
            Regime::Full => {
                let (f, y) = self.full();
                (f, y, k, "F1")
            }
        };
        let base = det(&mat);
        let lu = Lu::new(&mat);
        if lu.is_singular() {
            return Err(Error::Singular { log10_abs_det: base.log10_abs });
        }
        let replaced: Vec<Determinant> = (0..k).map(|a| det(&mat.replace_column(offset + a, &rhs))).collect();
        let values = replaced.iter().map(|d| d.ratio(&base)).collect();
        Ok(CStar { regime: self.regime_label().to_string(), matrix: name.to_string(), values, det: base, det_alpha: replaced })
    }
}

/// The closed scalar formulas for `C*`.
pub fn scalar_c_star_formula(sys: &FactorSystem) -> Result<f64> {
    if !sys.scalar {
        return invalid("scalar formula needs a scalar system");
    }
    let a = |i: usize, j: usize| sys.a[i][j][0][0];
    let (b1, b2) = (sys.b[0][0], sys.b[1][0]);
    Ok(match sys.regime() {
        Regime::Translational => (b1 + b2) / (a(0, 0) + a(0, 1) + a(1, 0) + a(1, 1)),
        _ => (a(0, 0) * b2 - b1 * a(1, 0)) / (a(0, 0) * a(1, 1) - a(0, 1) * a(1, 0)),
    })
}

#[derive(Debug, Clone, Serialize)]
pub struct CStar {
    pub regime: String,
    /// Which matrix the ratios are taken of: `D`, `F0` or `F1`.
    pub matrix: String,
    pub values: Vec<f64>,
    pub det: Determinant,
    pub det_alpha: Vec<Determinant>,
}

#[derive(Debug, Clone, Serialize)]
pub struct ABlocks {
    pub a11: Vec<Vec<f64>>,
    pub a12: Vec<Vec<f64>>,
    pub a21: Vec<Vec<f64>>,
    pub a22: Vec<Vec<f64>>,
}

#[derive(Debug, Clone, Serialize)]
pub struct BVectors {
    pub b1: Vec<f64>,
    pub b2: Vec<f64>,
}

#[derive(Debug, Clone, Serialize)]
pub struct Factors {
    #[serde(rename = "B_beta", skip_serializing_if = "Option::is_none")]
    pub b_beta: Option<Vec<f64>>,
    #[serde(rename = "Q", skip_serializing_if = "Option::is_none")]
    pub q: Option<f64>,
}

impl Factors {
    pub fn values(&self) -> Vec<f64> {
        match (&self.b_beta, self.q) {
            (Some(b), _) => b.clone(),
            (None, Some(q)) => vec![q],
            _ => Vec::new(),
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct Crosscheck {
    pub cramer_vs_lu: f64,
    pub residual: f64,
    pub block_asymmetry: f64,
    pub d_block_cholesky: bool,
    pub ok: bool,
}

#[derive(Debug, Clone, Serialize)]
pub struct BlowupReport {
    pub regime: String,
    pub epsilon: f64,
    pub a_blocks: ABlocks,
    pub b: BVectors,
    #[serde(rename = "C2")]
    pub c2: Vec<f64>,
    #[serde(rename = "C1_minus_C2")]
    pub c1_minus_c2: Vec<f64>,
    pub factors: Factors,
    pub determinants: BTreeMap<String, Determinant>,
    pub solver_crosscheck: Crosscheck,
}
