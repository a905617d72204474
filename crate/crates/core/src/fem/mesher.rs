//! Graded conforming Delaunay meshes of `box \ (D1 ∪ D2)`.
//!
//! The right half `x >= 0` is meshed by Ruppert refinement with a sizing
//! field that resolves the gap with a fixed number of element layers, then
//! mirrored, so the mesh is exactly symmetric under `x -> -x`.

use std::collections::VecDeque;

use serde::{Deserialize, Serialize};

use super::delaunay::{orient, Triangulation};
use super::mesh::{tag, Mesh};
use crate::error::{Error, Result};
use crate::geometry::{DomainSpec, Superellipse};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct MeshOptions {
    /// Element layers across every gap cross-section.
    pub n_gap: usize,
    /// Element size away from the gap.
    pub h_far: f64,
    /// Growth of the element size per unit distance from the gap.
    pub grading: f64,
    /// Refinement target for the smallest angle.
    pub min_angle_deg: f64,
    pub max_vertices: usize,
}

impl Default for MeshOptions {
    fn default() -> Self {
        MeshOptions { n_gap: 6, h_far: 0.25, grading: 0.3, min_angle_deg: 25.0, max_vertices: 4_000_000 }
    }
}

/// Angle floor every generated mesh must satisfy.
pub const MIN_ANGLE_FLOOR: f64 = 15.0;

const SEG_UPPER: u8 = tag::UPPER;
const SEG_LOWER: u8 = tag::LOWER;
const SEG_OUTER: u8 = tag::OUTER;
const SEG_AXIS: u8 = 4;

#[derive(Debug, Clone, Copy)]
enum Kind {
    Straight,
    /// Arc of inclusion `inc` between parameters `t0` and `t1`.
    Arc { inc: usize, t0: f64, t1: f64 },
}

#[derive(Debug, Clone, Copy)]
struct Seg {
    a: u32,
    b: u32,
    kind: Kind,
    tag: u8,
    alive: bool,
}

/// Element size requested at `p`.
struct Sizing<'a> {
    dom: &'a DomainSpec,
    layers: f64,
    h_far: f64,
    grading: f64,
    x_cap: f64,
}

impl Sizing<'_> {
    fn at(&self, p: [f64; 2]) -> f64 {
        let x = p[0].abs();
        let xc = x.min(self.x_cap);
        let (h1, h2) = self.dom.profile.h(&[xc]).unwrap_or((0.0, 0.0));
        let top = self.dom.epsilon + h1;
        let dv = (h2 - p[1]).max(p[1] - top).max(0.0);
        let width = top - h2;
        (width / self.layers + self.grading * ((x - xc) + dv)).min(self.h_far)
    }
}

struct Refiner<'a> {
    dt: Triangulation,
    tags: Vec<u8>,
    segs: Vec<Seg>,
    vsegs: Vec<Vec<u32>>,
    /// Boundary vertices of each inclusion sorted by polar angle about its centre.
    rings: [Vec<(f64, u32)>; 2],
    shapes: [Superellipse; 2],
    size: Sizing<'a>,
    half_width: f64,
    y_center: f64,
    quality_bound: f64,
    max_vertices: usize,
}

impl<'a> Refiner<'a> {
    fn new(dom: &'a DomainSpec, opts: &MeshOptions) -> Self {
        let w = dom.outer.half_width;
        let size = Sizing {
            dom,
            layers: opts.n_gap as f64 + 1.0,
            h_far: opts.h_far,
            grading: opts.grading,
            x_cap: 0.95 * dom.d1.r.min(dom.d2.r),
        };
        Refiner {
            dt: Triangulation::new([0.5 * w, dom.outer.center[1]], w),
            tags: vec![u8::MAX; 3],
            segs: Vec::new(),
            vsegs: vec![Vec::new(); 3],
            rings: [Vec::new(), Vec::new()],
            shapes: [dom.d1, dom.d2],
            size,
            half_width: w,
            y_center: dom.outer.center[1],
            quality_bound: 1.0 / (2.0 * opts.min_angle_deg.to_radians().sin()),
            max_vertices: opts.max_vertices,
        }
    }

    fn p(&self, v: u32) -> [f64; 2] {
        self.dt.pts[v as usize]
    }

    fn add_vertex(&mut self, p: [f64; 2], tag: u8) -> Result<(u32, Vec<u32>)> {
        if self.dt.pts.len() >= self.max_vertices {
            return Err(Error::Mesh(format!(
                "vertex budget {} exhausted; lower n_gap, raise grading or h_far, or increase max_vertices",
                self.max_vertices
            )));
        }
        let (v, new) = self.dt.insert(p)?;
        self.tags.push(tag);
        self.vsegs.push(Vec::new());
        let inc = match tag {
            SEG_UPPER => Some(0),
            SEG_LOWER => Some(1),
            _ => None,
        };
        if let Some(k) = inc {
            let c = self.shapes[k].center;
            let ang = (p[1] - c[1]).atan2(p[0] - c[0]);
            let at = self.rings[k].partition_point(|(a, _)| *a < ang);
            self.rings[k].insert(at, (ang, v));
        }
        Ok((v, new))
    }

    fn add_segment(&mut self, a: u32, b: u32, kind: Kind, tag: u8) -> u32 {
        let id = self.segs.len() as u32;
        self.segs.push(Seg { a, b, kind, tag, alive: true });
        self.vsegs[a as usize].push(id);
        self.vsegs[b as usize].push(id);
        id
    }

    fn in_inclusion(&self, k: usize, p: [f64; 2]) -> bool {
        let ring = &self.rings[k];
        let c = self.shapes[k].center;
        let ang = (p[1] - c[1]).atan2(p[0] - c[0]);
        let i = ring.partition_point(|(a, _)| *a <= ang);
        if i == 0 || i >= ring.len() {
            return false;
        }
        orient(self.p(ring[i - 1].1), self.p(ring[i].1), p) > 0.0
    }

    fn in_domain(&self, p: [f64; 2]) -> bool {
        p[0] > 0.0
            && p[0] < self.half_width
            && (p[1] - self.y_center).abs() < self.half_width
            && !self.in_inclusion(0, p)
            && !self.in_inclusion(1, p)
    }

    fn tri_points(&self, t: u32) -> [[f64; 2]; 3] {
        self.dt.tri[t as usize].map(|v| self.p(v))
    }

    fn tri_in_domain(&self, t: u32) -> bool {
        let v = self.dt.tri[t as usize];
        if v.iter().any(|&x| self.dt.is_super(x)) {
            return false;
        }
        let [a, b, c] = self.tri_points(t);
        self.in_domain([(a[0] + b[0] + c[0]) / 3.0, (a[1] + b[1] + c[1]) / 3.0])
    }

    /// Segment midpoint: on the curve for arcs.
    fn midpoint(&self, s: &Seg) -> ([f64; 2], Option<f64>) {
        match s.kind {
            Kind::Straight => {
                let (a, b) = (self.p(s.a), self.p(s.b));
                ([0.5 * (a[0] + b[0]), 0.5 * (a[1] + b[1])], None)
            }
            Kind::Arc { inc, t0, t1 } => {
                let t = 0.5 * (t0 + t1);
                (self.shapes[inc].point(t), Some(t))
            }
        }
    }

    fn needs_split(&self, id: u32) -> bool {
        let s = self.segs[id as usize];
        if !s.alive {
            return false;
        }
        let (a, b) = (self.p(s.a), self.p(s.b));
        let apexes = match self.dt.edge_apexes(s.a, s.b) {
            None => return true,
            Some(x) => x,
        };
        for v in apexes {
            if self.dt.is_super(v) {
                continue;
            }
            let q = self.p(v);
            if (a[0] - q[0]) * (b[0] - q[0]) + (a[1] - q[1]) * (b[1] - q[1]) <= 0.0 {
                return true;
            }
        }
        let len = ((b[0] - a[0]).powi(2) + (b[1] - a[1]).powi(2)).sqrt();
        let (mid, _) = self.midpoint(&s);
        len > self.size.at(mid)
    }

    /// Segments incident to the vertices of freshly created triangles.
    fn touched_segments(&self, tris: &[u32]) -> Vec<u32> {
        let mut out = Vec::new();
        for &t in tris {
            for v in self.dt.tri[t as usize] {
                out.extend(self.vsegs[v as usize].iter().copied());
            }
        }
        out.sort_unstable();
        out.dedup();
        out
    }

    fn split_segment(&mut self, id: u32, segq: &mut Vec<u32>, triq: &mut VecDeque<(u32, [u32; 3])>) -> Result<()> {
        let s = self.segs[id as usize];
        let (mid, t) = self.midpoint(&s);
        let (m, new) = self.add_vertex(mid, s.tag)?;
        self.segs[id as usize].alive = false;
        for v in [s.a, s.b] {
            self.vsegs[v as usize].retain(|&x| x != id);
        }
        let (k1, k2) = match (s.kind, t) {
            (Kind::Arc { inc, t0, t1 }, Some(tm)) => {
                (Kind::Arc { inc, t0, t1: tm }, Kind::Arc { inc, t0: tm, t1 })
            }
            _ => (Kind::Straight, Kind::Straight),
        };
        segq.push(self.add_segment(s.a, m, k1, s.tag));
        segq.push(self.add_segment(m, s.b, k2, s.tag));
        segq.extend(self.touched_segments(&new));
        for t in new {
            triq.push_back((t, self.dt.tri[t as usize]));
        }
        Ok(())
    }

    fn is_bad(&self, t: u32) -> Option<[f64; 2]> {
        let [a, b, c] = self.tri_points(t);
        let (cc, rad) = circumcircle(a, b, c);
        let lmin = [dist(a, b), dist(b, c), dist(c, a)].into_iter().fold(f64::INFINITY, f64::min);
        let centroid = [(a[0] + b[0] + c[0]) / 3.0, (a[1] + b[1] + c[1]) / 3.0];
        let bad = rad / lmin > self.quality_bound || rad > 0.5 * self.size.at(centroid);
        bad.then_some(cc)
    }

    fn refine(&mut self, segq: &mut Vec<u32>) -> Result<()> {
        let mut triq: VecDeque<(u32, [u32; 3])> =
            self.dt.alive_triangles().map(|t| (t, self.dt.tri[t as usize])).collect();
        loop {
            while let Some(s) = segq.pop() {
                if self.needs_split(s) {
                    self.split_segment(s, segq, &mut triq)?;
                }
            }
            let Some((t, verts)) = triq.pop_front() else { break };
            if !self.dt.alive[t as usize] || self.dt.tri[t as usize] != verts || !self.tri_in_domain(t) {
                continue;
            }
            let Some(cc) = self.is_bad(t) else { continue };
            let Ok(start) = self.dt.locate(cc) else { continue };
            let cav = self.dt.cavity(cc, start);
            let mut encroached = Vec::new();
            for &ct in &cav.triangles {
                let v = self.dt.tri[ct as usize];
                for k in 0..3 {
                    let (a, b) = (v[k], v[(k + 1) % 3]);
                    for &sid in &self.vsegs[a as usize] {
                        let s = self.segs[sid as usize];
                        if (s.a == a && s.b == b) || (s.a == b && s.b == a) {
                            let (pa, pb) = (self.p(a), self.p(b));
                            if (pa[0] - cc[0]) * (pb[0] - cc[0]) + (pa[1] - cc[1]) * (pb[1] - cc[1]) < 0.0 {
                                encroached.push(sid);
                            }
                        }
                    }
                }
            }
            if !encroached.is_empty() {
                encroached.sort_unstable();
                encroached.dedup();
                for sid in encroached {
                    if self.segs[sid as usize].alive {
                        self.split_segment(sid, segq, &mut triq)?;
                    }
                }
                triq.push_back((t, verts));
                continue;
            }
            if !self.in_domain(cc) {
                continue;
            }
            let (_, new) = self.add_vertex(cc, tag::INTERIOR)?;
            segq.extend(self.touched_segments(&new));
            for nt in new {
                triq.push_back((nt, self.dt.tri[nt as usize]));
            }
        }
        Ok(())
    }
}

fn dist(a: [f64; 2], b: [f64; 2]) -> f64 {
    ((a[0] - b[0]).powi(2) + (a[1] - b[1]).powi(2)).sqrt()
}

fn circumcircle(a: [f64; 2], b: [f64; 2], c: [f64; 2]) -> ([f64; 2], f64) {
    let (bx, by) = (b[0] - a[0], b[1] - a[1]);
    let (cx, cy) = (c[0] - a[0], c[1] - a[1]);
    let d = 2.0 * (bx * cy - by * cx);
    let b2 = bx * bx + by * by;
    let c2 = cx * cx + cy * cy;
    let ux = (cy * b2 - by * c2) / d;
    let uy = (bx * c2 - cx * b2) / d;
    ([a[0] + ux, a[1] + uy], (ux * ux + uy * uy).sqrt())
}

/// Builds the symmetric graded mesh of `dom`.
pub fn mesh_domain(dom: &DomainSpec, opts: &MeshOptions) -> Result<Mesh> {
    if !(dom.epsilon > 0.0) {
        return Err(Error::InvalidParameter(format!("meshing needs a positive gap, got epsilon = {}", dom.epsilon)));
    }
    if !(opts.min_angle_deg >= MIN_ANGLE_FLOOR && opts.min_angle_deg <= 30.0) {
        return Err(Error::InvalidParameter(format!(
            "min_angle_deg = {} outside [{MIN_ANGLE_FLOOR}, 30]",
            opts.min_angle_deg
        )));
    }
    if opts.n_gap == 0 || !(opts.h_far > 0.0) || !(opts.grading > 0.0) {
        return Err(Error::InvalidParameter(format!("bad mesh options {opts:?}")));
    }
    let mut r = Refiner::new(dom, opts);
    let w = dom.outer.half_width;
    let yc = dom.outer.center[1];
    let (c1, c2) = (dom.d1.center, dom.d2.center);
    let (r1, r2) = (dom.d1.r, dom.d2.r);

    // Fixed vertices: box corners on the right, axis crossings of the inclusions.
    let bl = r.add_vertex([0.0, yc - w], SEG_OUTER)?.0;
    let br = r.add_vertex([w, yc - w], SEG_OUTER)?.0;
    let tr = r.add_vertex([w, yc + w], SEG_OUTER)?.0;
    let tl = r.add_vertex([0.0, yc + w], SEG_OUTER)?.0;
    let d2_bot = r.add_vertex([0.0, c2[1] - r2], SEG_LOWER)?.0;
    let d2_top = r.add_vertex([0.0, c2[1] + r2], SEG_LOWER)?.0;
    let d1_bot = r.add_vertex([0.0, c1[1] - r1], SEG_UPPER)?.0;
    let d1_top = r.add_vertex([0.0, c1[1] + r1], SEG_UPPER)?.0;

    let mut chains: Vec<(Vec<u32>, Kind, u8)> = Vec::new();
    chains.push((straight_chain(&mut r, bl, br, SEG_OUTER)?, Kind::Straight, SEG_OUTER));
    chains.push((straight_chain(&mut r, br, tr, SEG_OUTER)?, Kind::Straight, SEG_OUTER));
    chains.push((straight_chain(&mut r, tr, tl, SEG_OUTER)?, Kind::Straight, SEG_OUTER));
    chains.push((straight_chain(&mut r, bl, d2_bot, SEG_AXIS)?, Kind::Straight, SEG_AXIS));
    chains.push((straight_chain(&mut r, d2_top, d1_bot, SEG_AXIS)?, Kind::Straight, SEG_AXIS));
    chains.push((straight_chain(&mut r, d1_top, tl, SEG_AXIS)?, Kind::Straight, SEG_AXIS));
    let mut segq = Vec::new();
    for (chain, kind, t) in chains {
        for pair in chain.windows(2) {
            segq.push(r.add_segment(pair[0], pair[1], kind, t));
        }
    }
    for (inc, lo, hi, t) in [(1usize, d2_bot, d2_top, SEG_LOWER), (0usize, d1_bot, d1_top, SEG_UPPER)] {
        let (verts, params) = arc_chain(&mut r, inc, lo, hi, t)?;
        for k in 0..verts.len() - 1 {
            let kind = Kind::Arc { inc, t0: params[k], t1: params[k + 1] };
            segq.push(r.add_segment(verts[k], verts[k + 1], kind, t));
        }
    }
    r.refine(&mut segq)?;
    for s in r.segs.iter().filter(|s| s.alive) {
        if r.dt.find_edge(s.a, s.b).is_none() {
            return Err(Error::Mesh("a boundary segment is missing after refinement".into()));
        }
    }
    Ok(mirror(&r))
}

/// Splits a straight boundary piece according to the sizing field.
fn straight_chain(r: &mut Refiner, a: u32, b: u32, tag: u8) -> Result<Vec<u32>> {
    let (pa, pb) = (r.p(a), r.p(b));
    let len = dist(pa, pb);
    let mut ts = vec![0.0];
    let mut t = 0.0;
    while t < 1.0 {
        let p = [pa[0] + t * (pb[0] - pa[0]), pa[1] + t * (pb[1] - pa[1])];
        t += r.size.at(p) / len;
        if t < 1.0 - 1e-9 {
            ts.push(t);
        }
    }
    let n = ts.len();
    // equal spacing in the gap keeps the axis layers uniform
    if tag == SEG_AXIS && len < 1.0 {
        ts = (0..n).map(|k| k as f64 / n as f64).collect();
    }
    let mut out = vec![a];
    for &t in ts.iter().skip(1) {
        let p = [pa[0] + t * (pb[0] - pa[0]), pa[1] + t * (pb[1] - pa[1])];
        let p = if pa[0] == pb[0] { [pa[0], p[1]] } else { p };
        out.push(r.add_vertex(p, tag)?.0);
    }
    out.push(b);
    Ok(out)
}

/// Right half of an inclusion boundary, from the bottom to the top axis crossing.
fn arc_chain(r: &mut Refiner, inc: usize, lo: u32, hi: u32, tag: u8) -> Result<(Vec<u32>, Vec<f64>)> {
    let shape = r.shapes[inc];
    let (t_start, t_end) = (-std::f64::consts::FRAC_PI_2, std::f64::consts::FRAC_PI_2);
    let mut params = vec![t_start];
    let mut t = t_start;
    loop {
        let p = shape.point(t);
        let h = r.size.at(p);
        // step so that the chord is about h
        let mut dt = h / shape.r;
        for _ in 0..30 {
            let q = shape.point((t + dt).min(t_end));
            let c = dist(p, q);
            if c <= 1.05 * h {
                break;
            }
            dt *= 0.7;
        }
        t += dt;
        if t >= t_end - 1e-12 {
            break;
        }
        params.push(t);
    }
    // never leave a sliver next to the axis
    if params.len() > 1 {
        let last = *params.last().unwrap();
        let prev = params[params.len() - 2];
        if t_end - last < 0.3 * (last - prev) {
            params.pop();
        }
    }
    params.push(t_end);
    let mut verts = vec![lo];
    for &t in &params[1..params.len() - 1] {
        verts.push(r.add_vertex(shape.point(t), tag)?.0);
    }
    verts.push(hi);
    Ok((verts, params))
}

fn mirror(r: &Refiner) -> Mesh {
    let tris: Vec<u32> = r.dt.alive_triangles().filter(|&t| r.tri_in_domain(t)).collect();
    let n = r.dt.pts.len();
    let mut index = vec![usize::MAX; n];
    let mut vertices = Vec::new();
    let mut tags = Vec::new();
    for &t in &tris {
        for v in r.dt.tri[t as usize] {
            let v = v as usize;
            if index[v] == usize::MAX {
                index[v] = vertices.len();
                vertices.push(r.dt.pts[v]);
                tags.push(if r.tags[v] == SEG_AXIS { tag::INTERIOR } else { r.tags[v] });
            }
        }
    }
    let mut image = vec![usize::MAX; vertices.len()];
    let base = vertices.len();
    for k in 0..base {
        let p = vertices[k];
        if p[0] == 0.0 {
            image[k] = k;
        } else {
            image[k] = vertices.len();
            vertices.push([-p[0], p[1]]);
            tags.push(tags[k]);
        }
    }
    let mut triangles = Vec::with_capacity(2 * tris.len());
    for &t in &tris {
        let [a, b, c] = r.dt.tri[t as usize].map(|v| index[v as usize]);
        triangles.push([a, b, c]);
        triangles.push([image[c], image[b], image[a]]);
    }
    Mesh { vertices, tags, triangles }
}

/// Number of triangles crossed by the vertical gap section at `x`.
pub fn gap_layers(mesh: &Mesh, dom: &DomainSpec, x: f64) -> Result<usize> {
    let (h1, h2) = dom.profile.h(&[x])?;
    let (lo, hi) = (h2, dom.epsilon + h1);
    let mut count = 0;
    for t in &mesh.triangles {
        let p = t.map(|i| mesh.vertices[i]);
        let xmin = p.iter().map(|q| q[0]).fold(f64::INFINITY, f64::min);
        let xmax = p.iter().map(|q| q[0]).fold(f64::NEG_INFINITY, f64::max);
        if !(xmin < x && x < xmax) {
            continue;
        }
        // vertical extent of the triangle along the line
        let mut ys = Vec::with_capacity(2);
        for k in 0..3 {
            let (a, b) = (p[k], p[(k + 1) % 3]);
            if (a[0] - x) * (b[0] - x) < 0.0 {
                let s = (x - a[0]) / (b[0] - a[0]);
                ys.push(a[1] + s * (b[1] - a[1]));
            } else if a[0] == x {
                ys.push(a[1]);
            }
        }
        if ys.len() < 2 {
            continue;
        }
        let (y0, y1) = (ys.iter().cloned().fold(f64::INFINITY, f64::min), ys.iter().cloned().fold(f64::NEG_INFINITY, f64::max));
        if y1.min(hi) - y0.max(lo) > 1e-3 * (hi - lo) {
            count += 1;
        }
    }
    Ok(count)
}

/// Smallest layer count over `samples` sections in `|x| <= R/2`.
pub fn min_gap_layers(mesh: &Mesh, dom: &DomainSpec, samples: usize) -> Result<usize> {
    let half = 0.5 * dom.profile.radius;
    let mut best = usize::MAX;
    for k in 0..samples {
        // irrational offsets keep sections off the vertices
        let x = -half + 2.0 * half * ((k as f64 + 0.5 + 0.123_456_7) / samples as f64).min(0.999_999);
        best = best.min(gap_layers(mesh, dom, x)?);
    }
    Ok(best)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn coarse_mesh_is_valid_and_symmetric() {
        let dom = DomainSpec::planar(2.0, 1.0, 4e-2, 8.0, 0.5).unwrap();
        let mesh = mesh_domain(&dom, &MeshOptions::default()).unwrap();
        let rep = mesh.report();
        assert!(rep.ok(MIN_ANGLE_FLOOR), "{rep:?}");
        assert!(min_gap_layers(&mesh, &dom, 15).unwrap() >= 6);
        let mut xs: Vec<(i64, i64)> = mesh.vertices.iter().map(|p| ((p[0] * 1e12) as i64, (p[1] * 1e12) as i64)).collect();
        let mut ms: Vec<(i64, i64)> = xs.iter().map(|(x, y)| (-x, *y)).collect();
        xs.sort_unstable();
        ms.sort_unstable();
        assert_eq!(xs, ms);
    }
}
