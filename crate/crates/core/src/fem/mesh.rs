//! Triangle meshes with boundary tags, text IO and quality checks.

use std::io::{BufRead, Write};

use serde::Serialize;

use crate::error::{Error, Result};

/// Vertex tags.
pub mod tag {
    pub const INTERIOR: u8 = 0;
    /// On `∂D1`.
    pub const UPPER: u8 = 1;
    /// On `∂D2`.
    pub const LOWER: u8 = 2;
    /// On the outer boundary `∂D`.
    pub const OUTER: u8 = 3;
}

#[derive(Debug, Clone, PartialEq)]
pub struct Mesh {
    pub vertices: Vec<[f64; 2]>,
    pub tags: Vec<u8>,
    /// Counter-clockwise vertex triples.
    pub triangles: Vec<[usize; 3]>,
}

/// Quality summary of a mesh.
#[derive(Debug, Clone, Serialize)]
pub struct MeshReport {
    pub vertices: usize,
    pub triangles: usize,
    pub min_angle_deg: f64,
    pub min_area: f64,
    pub max_edge_multiplicity: usize,
    pub untagged_boundary_edges: usize,
}

impl MeshReport {
    /// Positive areas, conforming edges, tagged boundary and the angle floor.
    pub fn ok(&self, min_angle_deg: f64) -> bool {
        self.min_area > 0.0
            && self.max_edge_multiplicity <= 2
            && self.untagged_boundary_edges == 0
            && self.min_angle_deg >= min_angle_deg
    }
}

impl Mesh {
    pub fn area(&self, t: usize) -> f64 {
        let [a, b, c] = self.triangles[t].map(|i| self.vertices[i]);
        0.5 * ((b[0] - a[0]) * (c[1] - a[1]) - (c[0] - a[0]) * (b[1] - a[1]))
    }

    /// Gradients of the three P1 basis functions on triangle `t`.
    pub fn basis_gradients(&self, t: usize) -> [[f64; 2]; 3] {
        let [a, b, c] = self.triangles[t].map(|i| self.vertices[i]);
        let two_a = (b[0] - a[0]) * (c[1] - a[1]) - (c[0] - a[0]) * (b[1] - a[1]);
        [
            [(b[1] - c[1]) / two_a, (c[0] - b[0]) / two_a],
            [(c[1] - a[1]) / two_a, (a[0] - c[0]) / two_a],
            [(a[1] - b[1]) / two_a, (b[0] - a[0]) / two_a],
        ]
    }

    pub fn centroid(&self, t: usize) -> [f64; 2] {
        let [a, b, c] = self.triangles[t].map(|i| self.vertices[i]);
        [(a[0] + b[0] + c[0]) / 3.0, (a[1] + b[1] + c[1]) / 3.0]
    }

    /// Smallest interior angle of triangle `t`, in degrees.
    pub fn min_angle(&self, t: usize) -> f64 {
        let p = self.triangles[t].map(|i| self.vertices[i]);
        let mut best = f64::INFINITY;
        for k in 0..3 {
            let (o, u, v) = (p[k], p[(k + 1) % 3], p[(k + 2) % 3]);
            let a = [u[0] - o[0], u[1] - o[1]];
            let b = [v[0] - o[0], v[1] - o[1]];
            let cross = a[0] * b[1] - a[1] * b[0];
            let dot = a[0] * b[0] + a[1] * b[1];
            best = best.min(cross.abs().atan2(dot).to_degrees());
        }
        best
    }

    pub fn report(&self) -> MeshReport {
        let mut edges: std::collections::HashMap<(usize, usize), usize> = std::collections::HashMap::new();
        for t in &self.triangles {
            for k in 0..3 {
                let (a, b) = (t[k], t[(k + 1) % 3]);
                *edges.entry((a.min(b), a.max(b))).or_default() += 1;
            }
        }
        let untagged = edges
            .iter()
            .filter(|(&(a, b), &n)| n == 1 && (self.tags[a] == tag::INTERIOR || self.tags[b] == tag::INTERIOR))
            .count();
        MeshReport {
            vertices: self.vertices.len(),
            triangles: self.triangles.len(),
            min_angle_deg: (0..self.triangles.len()).map(|t| self.min_angle(t)).fold(f64::INFINITY, f64::min),
            min_area: (0..self.triangles.len()).map(|t| self.area(t)).fold(f64::INFINITY, f64::min),
            max_edge_multiplicity: edges.values().copied().max().unwrap_or(0),
            untagged_boundary_edges: untagged,
        }
    }

    /// Structured `nx x ny` grid of the rectangle `[x0, x1] x [y0, y1]`, boundary tagged outer.
    pub fn rectangle(nx: usize, ny: usize, x0: f64, x1: f64, y0: f64, y1: f64) -> Self {
        let mut vertices = Vec::with_capacity((nx + 1) * (ny + 1));
        let mut tags = Vec::with_capacity(vertices.capacity());
        for j in 0..=ny {
            for i in 0..=nx {
                let x = x0 + (x1 - x0) * i as f64 / nx as f64;
                let y = y0 + (y1 - y0) * j as f64 / ny as f64;
                vertices.push([x, y]);
                let edge = i == 0 || j == 0 || i == nx || j == ny;
                tags.push(if edge { tag::OUTER } else { tag::INTERIOR });
            }
        }
        let id = |i: usize, j: usize| j * (nx + 1) + i;
        let mut triangles = Vec::with_capacity(2 * nx * ny);
        for j in 0..ny {
            for i in 0..nx {
                triangles.push([id(i, j), id(i + 1, j), id(i + 1, j + 1)]);
                triangles.push([id(i, j), id(i + 1, j + 1), id(i, j + 1)]);
            }
        }
        Mesh { vertices, tags, triangles }
    }

    /// Edges used by exactly one triangle, oriented as in that triangle.
    pub fn boundary_edges(&self) -> Vec<(usize, usize, usize)> {
        let mut edges: std::collections::HashMap<(usize, usize), (usize, usize, usize, usize)> =
            std::collections::HashMap::new();
        for (t, tri) in self.triangles.iter().enumerate() {
            for k in 0..3 {
                let (a, b) = (tri[k], tri[(k + 1) % 3]);
                edges.entry((a.min(b), a.max(b))).or_insert((a, b, t, 0)).3 += 1;
            }
        }
        let mut out: Vec<_> = edges.into_values().filter(|e| e.3 == 1).map(|(a, b, t, _)| (a, b, t)).collect();
        out.sort_unstable();
        out
    }

    /// Splits every triangle into four through edge midpoints (straight edges, nested spaces).
    pub fn refine_uniform(&self) -> Mesh {
        let boundary: std::collections::HashSet<(usize, usize)> =
            self.boundary_edges().into_iter().map(|(a, b, _)| (a.min(b), a.max(b))).collect();
        let mut vertices = self.vertices.clone();
        let mut tags = self.tags.clone();
        let mut mid: std::collections::HashMap<(usize, usize), usize> = std::collections::HashMap::new();
        let mut triangles = Vec::with_capacity(4 * self.triangles.len());
        for tri in &self.triangles {
            let mut m = [0usize; 3];
            for k in 0..3 {
                let (a, b) = (tri[k], tri[(k + 1) % 3]);
                let key = (a.min(b), a.max(b));
                m[k] = *mid.entry(key).or_insert_with(|| {
                    let (p, q) = (self.vertices[a], self.vertices[b]);
                    vertices.push([0.5 * (p[0] + q[0]), 0.5 * (p[1] + q[1])]);
                    let on_boundary = boundary.contains(&key) && self.tags[a] == self.tags[b];
                    tags.push(if on_boundary { self.tags[a] } else { tag::INTERIOR });
                    vertices.len() - 1
                });
            }
            let [a, b, c] = *tri;
            triangles.push([a, m[0], m[2]]);
            triangles.push([m[0], b, m[1]]);
            triangles.push([m[2], m[1], c]);
            triangles.push([m[0], m[1], m[2]]);
        }
        Mesh { vertices, tags, triangles }
    }

    /// Longest edge of triangle `t`.
    pub fn diameter(&self, t: usize) -> f64 {
        let p = self.triangles[t].map(|i| self.vertices[i]);
        (0..3)
            .map(|k| {
                let (a, b) = (p[k], p[(k + 1) % 3]);
                ((a[0] - b[0]).powi(2) + (a[1] - b[1]).powi(2)).sqrt()
            })
            .fold(0.0, f64::max)
    }

    /// Triangle containing `p` and the barycentric coordinates of `p` in it.
    pub fn locate(&self, p: [f64; 2]) -> Option<(usize, [f64; 3])> {
        let tol = -1e-12;
        (0..self.triangles.len()).find_map(|t| {
            let [a, b, c] = self.triangles[t].map(|i| self.vertices[i]);
            let two_a = (b[0] - a[0]) * (c[1] - a[1]) - (c[0] - a[0]) * (b[1] - a[1]);
            let l0 = ((b[0] - p[0]) * (c[1] - p[1]) - (c[0] - p[0]) * (b[1] - p[1])) / two_a;
            let l1 = ((c[0] - p[0]) * (a[1] - p[1]) - (a[0] - p[0]) * (c[1] - p[1])) / two_a;
            let l2 = 1.0 - l0 - l1;
            (l0 >= tol && l1 >= tol && l2 >= tol).then_some((t, [l0, l1, l2]))
        })
    }

    /// Writes `V T`, then `x y tag` per vertex, then `i j k` per triangle.
    pub fn write_text<W: Write>(&self, mut w: W) -> Result<()> {
        writeln!(w, "{} {}", self.vertices.len(), self.triangles.len())?;
        for (p, t) in self.vertices.iter().zip(&self.tags) {
            writeln!(w, "{:.17e} {:.17e} {}", p[0], p[1], t)?;
        }
        for t in &self.triangles {
            writeln!(w, "{} {} {}", t[0], t[1], t[2])?;
        }
        Ok(())
    }

    /// Reads the text format; a missing tag means interior.
    pub fn read_text<R: BufRead>(r: R) -> Result<Self> {
        let bad = |msg: String| Error::Mesh(msg);
        let mut lines = r.lines().filter_map(|l| l.ok()).filter(|l| !l.trim().is_empty());
        let header = lines.next().ok_or_else(|| bad("empty mesh file".into()))?;
        let counts: Vec<usize> = header
            .split_whitespace()
            .map(|s| s.parse().map_err(|_| bad(format!("bad header {header:?}"))))
            .collect::<Result<_>>()?;
        if counts.len() != 2 {
            return Err(bad(format!("header must be `V T`, got {header:?}")));
        }
        let (nv, nt) = (counts[0], counts[1]);
        let mut vertices = Vec::with_capacity(nv);
        let mut tags = Vec::with_capacity(nv);
        for k in 0..nv {
            let l = lines.next().ok_or_else(|| bad(format!("missing vertex {k}")))?;
            let f: Vec<&str> = l.split_whitespace().collect();
            if f.len() < 2 {
                return Err(bad(format!("vertex line {k}: {l:?}")));
            }
            let x: f64 = f[0].parse().map_err(|_| bad(format!("vertex line {k}: {l:?}")))?;
            let y: f64 = f[1].parse().map_err(|_| bad(format!("vertex line {k}: {l:?}")))?;
            let t: u8 = match f.get(2) {
                Some(s) => s.parse().map_err(|_| bad(format!("vertex tag {k}: {l:?}")))?,
                None => tag::INTERIOR,
            };
            vertices.push([x, y]);
            tags.push(t);
        }
        let mut triangles = Vec::with_capacity(nt);
        for k in 0..nt {
            let l = lines.next().ok_or_else(|| bad(format!("missing triangle {k}")))?;
            let idx: Vec<usize> = l
                .split_whitespace()
                .map(|s| s.parse().map_err(|_| bad(format!("triangle line {k}: {l:?}"))))
                .collect::<Result<_>>()?;
            if idx.len() != 3 || idx.iter().any(|&i| i >= nv) {
                return Err(bad(format!("triangle line {k}: {l:?}")));
            }
            triangles.push([idx[0], idx[1], idx[2]]);
        }
        Ok(Mesh { vertices, tags, triangles })
    }
}
