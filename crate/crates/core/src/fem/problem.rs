//! P1 assembly, Dirichlet reduction and solves for the scalar and plane-strain problems.

use std::io::Write;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::mesh::{tag, Mesh};
use super::sparse::{cg, lanczos_min_ritz, Cholesky, CgStats, Csr, Preconditioner};
use crate::elastic_core::LameParams;
use crate::error::{invalid, Error, Result};

/// Unknown counts below which the direct solver is used by default.
pub const DIRECT_LIMIT: usize = 200_000;

pub const CG_TOL: f64 = 1e-10;

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Physics {
    /// `-Δu = 0`.
    Scalar,
    /// Plane strain with the isotropic tensor.
    Lame(LameParams),
}

impl Physics {
    pub fn components(&self) -> usize {
        match self {
            Physics::Scalar => 1,
            Physics::Lame(_) => 2,
        }
    }

    fn element_matrix(&self, g: &[[f64; 2]; 3], area: f64) -> Vec<f64> {
        match self {
            Physics::Scalar => {
                let mut k = vec![0.0; 9];
                for a in 0..3 {
                    for b in 0..3 {
                        k[a * 3 + b] = area * (g[a][0] * g[b][0] + g[a][1] * g[b][1]);
                    }
                }
                k
            }
            Physics::Lame(p) => {
                let (l, mu) = (p.lambda, p.mu);
                let dm = [[l + 2.0 * mu, l, 0.0], [l, l + 2.0 * mu, 0.0], [0.0, 0.0, mu]];
                // strain rows (e11, e22, 2 e12) of each dof
                let mut bm = [[0.0; 6]; 3];
                for a in 0..3 {
                    bm[0][2 * a] = g[a][0];
                    bm[1][2 * a + 1] = g[a][1];
                    bm[2][2 * a] = g[a][1];
                    bm[2][2 * a + 1] = g[a][0];
                }
                let mut k = vec![0.0; 36];
                for i in 0..6 {
                    for j in 0..6 {
                        let mut s = 0.0;
                        for r in 0..3 {
                            for c in 0..3 {
                                s += bm[r][i] * dm[r][c] * bm[c][j];
                            }
                        }
                        k[i * 6 + j] = area * s;
                    }
                }
                k
            }
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "lowercase")]
pub enum SolverKind {
    /// Direct below [`DIRECT_LIMIT`] unknowns, CG above.
    #[default]
    Auto,
    Direct,
    Cg,
}

/// A solved field: `values[v * components + c]`.
#[derive(Debug, Clone, PartialEq)]
pub struct Field {
    pub components: usize,
    pub values: Vec<f64>,
    /// Relative residual of the reduced system.
    pub residual: f64,
}

impl Field {
    pub fn at_vertex(&self, v: usize) -> &[f64] {
        &self.values[v * self.components..(v + 1) * self.components]
    }

    /// Linear combination `Σ c_k f_k`.
    pub fn combine(terms: &[(f64, &Field)]) -> Result<Field> {
        let first = terms.first().ok_or_else(|| Error::InvalidParameter("empty combination".into()))?.1;
        let mut values = vec![0.0; first.values.len()];
        for (c, f) in terms {
            if f.values.len() != values.len() {
                return Err(Error::DimensionMismatch { expected: values.len(), got: f.values.len() });
            }
            values.iter_mut().zip(&f.values).for_each(|(v, x)| *v += c * x);
        }
        let residual = terms.iter().map(|(_, f)| f.residual).fold(0.0, f64::max);
        Ok(Field { components: first.components, values, residual })
    }

    /// Gradient `∂_j u_k` at index `k * 2 + j` on triangle `t`.
    pub fn gradient_on(&self, mesh: &Mesh, t: usize) -> Vec<f64> {
        let g = mesh.basis_gradients(t);
        let nc = self.components;
        let mut out = vec![0.0; 2 * nc];
        for (a, &v) in mesh.triangles[t].iter().enumerate() {
            for k in 0..nc {
                out[k * 2] += self.values[v * nc + k] * g[a][0];
                out[k * 2 + 1] += self.values[v * nc + k] * g[a][1];
            }
        }
        out
    }

    /// Gradient on the triangle containing `p`, with that triangle's diameter.
    pub fn gradient_at(&self, mesh: &Mesh, p: [f64; 2]) -> Result<(Vec<f64>, f64)> {
        let (t, _) = mesh
            .locate(p)
            .ok_or_else(|| Error::OutsideDomain { point: p.to_vec(), region: "mesh" })?;
        Ok((self.gradient_on(mesh, t), mesh.diameter(t)))
    }

    /// CSV rows `vertex,x,y,u0[,u1]`.
    pub fn write_csv<W: Write>(&self, mesh: &Mesh, w: W) -> Result<()> {
        let mut out = csv::Writer::from_writer(w);
        let mut header = vec!["vertex".to_string(), "x".into(), "y".into()];
        header.extend((0..self.components).map(|k| format!("u{k}")));
        out.write_record(&header).map_err(csv_err)?;
        for (v, p) in mesh.vertices.iter().enumerate() {
            let mut rec = vec![v.to_string(), format!("{:.17e}", p[0]), format!("{:.17e}", p[1])];
            rec.extend(self.at_vertex(v).iter().map(|x| format!("{x:.17e}")));
            out.write_record(&rec).map_err(csv_err)?;
        }
        out.flush()?;
        Ok(())
    }
}

fn csv_err(e: csv::Error) -> Error {
    Error::Io(std::io::Error::other(e))
}

enum Factor {
    Direct(Cholesky),
    Iterative(Preconditioner),
}

/// Assembled operator on one mesh with every tagged boundary vertex constrained.
pub struct FeProblem<'m> {
    pub mesh: &'m Mesh,
    pub physics: Physics,
    /// Full stiffness matrix over all dofs.
    pub stiffness: Csr,
    /// Stiffness restricted to free dofs.
    pub reduced: Csr,
    free_index: Vec<usize>,
    free_dofs: Vec<usize>,
    factor: Factor,
}

impl std::fmt::Debug for FeProblem<'_> {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("FeProblem")
            .field("physics", &self.physics)
            .field("dofs", &self.stiffness.n)
            .field("free", &self.free_dofs.len())
            .finish()
    }
}

const NOT_FREE: usize = usize::MAX;

/// Full stiffness matrix, assembled in parallel over elements.
pub fn assemble(mesh: &Mesh, physics: &Physics) -> Result<Csr> {
    if let Physics::Lame(p) = physics {
        if p.d != 2 {
            return invalid(format!("planar elements need d = 2, got d = {}", p.d));
        }
        if !(p.mu > 0.0) || !(2.0 * p.lambda + 2.0 * p.mu > 0.0) {
            return invalid(format!("outside the ellipticity window: lambda {}, mu {}", p.lambda, p.mu));
        }
    }
    let nc = physics.components();
    let n = mesh.vertices.len() * nc;
    let per = 9 * nc * nc;
    let blocks: Vec<Vec<(u32, u32, f64)>> = (0..mesh.triangles.len())
        .into_par_iter()
        .map(|t| {
            let area = mesh.area(t);
            let k = physics.element_matrix(&mesh.basis_gradients(t), area);
            let tri = mesh.triangles[t];
            let mut e = Vec::with_capacity(per);
            let m = 3 * nc;
            for i in 0..m {
                let gi = (tri[i / nc] * nc + i % nc) as u32;
                for j in 0..m {
                    let gj = (tri[j / nc] * nc + j % nc) as u32;
                    e.push((gi, gj, k[i * m + j]));
                }
            }
            e
        })
        .collect();
    if let Some(t) = (0..mesh.triangles.len()).find(|&t| !(mesh.area(t) > 0.0)) {
        return Err(Error::Mesh(format!("triangle {t} has non-positive area")));
    }
    Ok(Csr::from_triplets(n, blocks.into_iter().flatten().collect()))
}

impl<'m> FeProblem<'m> {
    pub fn new(mesh: &'m Mesh, physics: Physics, solver: SolverKind) -> Result<Self> {
        let stiffness = assemble(mesh, &physics)?;
        let nc = physics.components();
        let mut free_index = vec![NOT_FREE; stiffness.n];
        let mut free_dofs = Vec::new();
        for (v, &t) in mesh.tags.iter().enumerate() {
            if t == tag::INTERIOR {
                for c in 0..nc {
                    free_index[v * nc + c] = free_dofs.len();
                    free_dofs.push(v * nc + c);
                }
            }
        }
        let mut entries = Vec::with_capacity(stiffness.nnz());
        for (fi, &dof) in free_dofs.iter().enumerate() {
            for (j, v) in stiffness.row(dof) {
                let fj = free_index[j];
                if fj != NOT_FREE {
                    entries.push((fi as u32, fj as u32, v));
                }
            }
        }
        let reduced = Csr::from_triplets(free_dofs.len(), entries);
        if let Some(i) = (0..reduced.n).find(|&i| !(reduced.get(i, i) > 0.0)) {
            return Err(Error::Solver(format!("non-positive diagonal at free dof {i}")));
        }
        let precond = if nc == 1 { Preconditioner::Jacobi } else { Preconditioner::BlockJacobi(nc) };
        let direct = match solver {
            SolverKind::Direct => true,
            SolverKind::Cg => false,
            SolverKind::Auto => reduced.n < DIRECT_LIMIT,
        };
        let factor = if direct { Factor::Direct(Cholesky::new(&reduced)?) } else { Factor::Iterative(precond) };
        Ok(FeProblem { mesh, physics, stiffness, reduced, free_index, free_dofs, factor })
    }

    pub fn dofs(&self) -> usize {
        self.stiffness.n
    }

    pub fn free_dofs(&self) -> usize {
        self.free_dofs.len()
    }

    pub fn is_free(&self, dof: usize) -> bool {
        self.free_index[dof] != NOT_FREE
    }

    /// Nodal vector from boundary data `g(point, tag)`; free dofs are zero.
    pub fn boundary_vector(&self, g: &dyn Fn([f64; 2], u8) -> Vec<f64>) -> Vec<f64> {
        let nc = self.physics.components();
        let mut u = vec![0.0; self.dofs()];
        for (v, (&p, &t)) in self.mesh.vertices.iter().zip(&self.mesh.tags).enumerate() {
            if t != tag::INTERIOR {
                let val = g(p, t);
                u[v * nc..(v + 1) * nc].copy_from_slice(&val[..nc]);
            }
        }
        u
    }

    /// Solves one problem per boundary data set, reusing the factorisation.
    pub fn solve_many(&self, data: &[&dyn Fn([f64; 2], u8) -> Vec<f64>]) -> Result<Vec<Field>> {
        let lifts: Vec<Vec<f64>> = data.iter().map(|g| self.boundary_vector(*g)).collect();
        let rhs: Vec<Vec<f64>> = lifts
            .iter()
            .map(|u| {
                self.free_dofs
                    .iter()
                    .map(|&dof| -self.stiffness.row(dof).map(|(j, v)| v * u[j]).sum::<f64>())
                    .collect()
            })
            .collect();
        let sols = match &self.factor {
            Factor::Direct(ch) => ch.solve_many(&rhs),
            Factor::Iterative(pre) => rhs
                .iter()
                .map(|b| cg(&self.reduced, b, *pre, CG_TOL, 20 * self.reduced.n + 100).map(|r| r.0))
                .collect::<Result<_>>()?,
        };
        let nc = self.physics.components();
        Ok(lifts
            .into_iter()
            .zip(sols.iter().zip(&rhs))
            .map(|(mut u, (x, b))| {
                for (fi, &dof) in self.free_dofs.iter().enumerate() {
                    u[dof] = x[fi];
                }
                let r = self.reduced.apply(x);
                let bn = b.iter().map(|v| v * v).sum::<f64>().sqrt();
                let rn = r.iter().zip(b).map(|(p, q)| (p - q).powi(2)).sum::<f64>().sqrt();
                Field { components: nc, values: u, residual: if bn > 0.0 { rn / bn } else { rn } }
            })
            .collect())
    }

    pub fn solve(&self, data: &dyn Fn([f64; 2], u8) -> Vec<f64>) -> Result<Field> {
        Ok(self.solve_many(&[data])?.remove(0))
    }

    /// Solves with preconditioned CG regardless of the configured solver.
    pub fn solve_cg(&self, data: &dyn Fn([f64; 2], u8) -> Vec<f64>) -> Result<(Field, CgStats)> {
        let mut u = self.boundary_vector(data);
        let b: Vec<f64> = self
            .free_dofs
            .iter()
            .map(|&dof| -self.stiffness.row(dof).map(|(j, v)| v * u[j]).sum::<f64>())
            .collect();
        let nc = self.physics.components();
        let pre = if nc == 1 { Preconditioner::Jacobi } else { Preconditioner::BlockJacobi(nc) };
        let (x, stats) = cg(&self.reduced, &b, pre, CG_TOL, 20 * self.reduced.n + 100)?;
        for (fi, &dof) in self.free_dofs.iter().enumerate() {
            u[dof] = x[fi];
        }
        Ok((Field { components: nc, values: u, residual: stats.relative_residual }, stats))
    }

    /// `∫ ∇u·∇v` or `∫ (C e(u), e(v))`, exact for P1.
    pub fn energy(&self, u: &Field, v: &Field) -> Result<f64> {
        for f in [u, v] {
            if f.values.len() != self.dofs() {
                return Err(Error::DimensionMismatch { expected: self.dofs(), got: f.values.len() });
            }
        }
        Ok(self.stiffness.bilinear(&u.values, &v.values))
    }

    /// Smallest Ritz value of the reduced operator.
    pub fn min_ritz(&self, steps: usize) -> f64 {
        lanczos_min_ritz(&self.reduced, steps)
    }
}
