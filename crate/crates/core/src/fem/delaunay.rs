//! Incremental Delaunay triangulation (Bowyer–Watson) with exact predicates.

use robust::{incircle, orient2d, Coord};

use crate::error::{Error, Result};

pub const NONE: u32 = u32::MAX;

fn c(p: [f64; 2]) -> Coord<f64> {
    Coord { x: p[0], y: p[1] }
}

pub fn orient(a: [f64; 2], b: [f64; 2], p: [f64; 2]) -> f64 {
    orient2d(c(a), c(b), c(p))
}

/// Positive when `p` is strictly inside the circumcircle of the CCW triangle `abc`.
pub fn in_circle(a: [f64; 2], b: [f64; 2], cc: [f64; 2], p: [f64; 2]) -> f64 {
    incircle(c(a), c(b), c(cc), c(p))
}

/// Triangulation of a point set inside a large super-triangle (vertices 0, 1, 2).
#[derive(Debug, Clone)]
pub struct Triangulation {
    pub pts: Vec<[f64; 2]>,
    pub tri: Vec<[u32; 3]>,
    /// `nbr[t][i]` is the triangle across the edge opposite vertex `i`.
    pub nbr: Vec<[u32; 3]>,
    pub alive: Vec<bool>,
    free: Vec<u32>,
    vtri: Vec<u32>,
    last: u32,
    mark: Vec<u32>,
    stamp: u32,
}

/// Cavity of a prospective insertion.
#[derive(Debug, Default, Clone)]
pub struct Cavity {
    pub triangles: Vec<u32>,
    /// Boundary edges `(a, b, outside)` in CCW order seen from inside.
    pub boundary: Vec<(u32, u32, u32)>,
}

impl Triangulation {
    /// Empty triangulation covering the square `center ± half`.
    pub fn new(center: [f64; 2], half: f64) -> Self {
        let s = 50.0 * half;
        let pts = vec![
            [center[0] - 2.0 * s, center[1] - s],
            [center[0] + 2.0 * s, center[1] - s],
            [center[0], center[1] + 2.0 * s],
        ];
        Triangulation {
            pts,
            tri: vec![[0, 1, 2]],
            nbr: vec![[NONE; 3]],
            alive: vec![true],
            free: Vec::new(),
            vtri: vec![0, 0, 0],
            last: 0,
            mark: vec![0],
            stamp: 0,
        }
    }

    pub fn is_super(&self, v: u32) -> bool {
        v < 3
    }

    fn p(&self, v: u32) -> [f64; 2] {
        self.pts[v as usize]
    }

    /// Triangle containing `p` (possibly on its boundary).
    pub fn locate(&mut self, p: [f64; 2]) -> Result<u32> {
        let mut t = self.last;
        if !self.alive[t as usize] {
            t = self.alive.iter().position(|a| *a).unwrap() as u32;
        }
        let mut steps = 0usize;
        let mut rot = 0usize;
        'walk: loop {
            steps += 1;
            if steps > 10 * self.tri.len() + 100 {
                return Err(Error::Mesh("point location did not terminate".into()));
            }
            let v = self.tri[t as usize];
            rot = (rot + 1) % 3;
            for k in 0..3 {
                let i = (k + rot) % 3;
                let a = self.p(v[(i + 1) % 3]);
                let b = self.p(v[(i + 2) % 3]);
                if orient(a, b, p) < 0.0 {
                    let n = self.nbr[t as usize][i];
                    if n == NONE {
                        return Err(Error::Mesh(format!("point {p:?} outside the triangulation")));
                    }
                    t = n;
                    continue 'walk;
                }
            }
            self.last = t;
            return Ok(t);
        }
    }

    /// Triangles whose circumcircle strictly contains `p`, grown from `start`.
    pub fn cavity(&mut self, p: [f64; 2], start: u32) -> Cavity {
        self.stamp = self.stamp.wrapping_add(1);
        if self.stamp == 0 {
            self.mark.iter_mut().for_each(|m| *m = 0);
            self.stamp = 1;
        }
        let mut cav = Cavity::default();
        let mut stack = vec![start];
        self.mark[start as usize] = self.stamp;
        while let Some(t) = stack.pop() {
            cav.triangles.push(t);
            for i in 0..3 {
                let n = self.nbr[t as usize][i];
                if n == NONE || self.mark[n as usize] == self.stamp {
                    continue;
                }
                let [a, b, cc] = self.tri[n as usize];
                if in_circle(self.p(a), self.p(b), self.p(cc), p) > 0.0 {
                    self.mark[n as usize] = self.stamp;
                    stack.push(n);
                }
            }
        }
        for &t in &cav.triangles {
            let v = self.tri[t as usize];
            for i in 0..3 {
                let n = self.nbr[t as usize][i];
                if n == NONE || self.mark[n as usize] != self.stamp {
                    cav.boundary.push((v[(i + 1) % 3], v[(i + 2) % 3], n));
                }
            }
        }
        cav
    }

    /// Inserts `p`; returns its vertex id and the new triangles.
    pub fn insert(&mut self, p: [f64; 2]) -> Result<(u32, Vec<u32>)> {
        let t0 = self.locate(p)?;
        for &v in &self.tri[t0 as usize] {
            if self.p(v) == p {
                return Err(Error::Mesh(format!("duplicate vertex {p:?}")));
            }
        }
        let cav = self.cavity(p, t0);
        let id = self.pts.len() as u32;
        self.pts.push(p);
        self.vtri.push(NONE);
        let mut slots = cav.triangles.clone();
        for &t in &slots {
            self.alive[t as usize] = false;
            self.free.push(t);
        }
        slots.clear();
        let mut new = Vec::with_capacity(cav.boundary.len());
        for _ in 0..cav.boundary.len() {
            let t = match self.free.pop() {
                Some(t) => t,
                None => {
                    self.tri.push([0; 3]);
                    self.nbr.push([NONE; 3]);
                    self.alive.push(false);
                    self.mark.push(0);
                    (self.tri.len() - 1) as u32
                }
            };
            new.push(t);
        }
        // start vertex -> new triangle, for stitching the fan
        let mut by_start: std::collections::HashMap<u32, u32> = std::collections::HashMap::with_capacity(new.len());
        let mut by_end: std::collections::HashMap<u32, u32> = std::collections::HashMap::with_capacity(new.len());
        for (k, &(a, b, out)) in cav.boundary.iter().enumerate() {
            let t = new[k];
            if orient(self.p(a), self.p(b), p) <= 0.0 {
                return Err(Error::Mesh(format!("degenerate cavity while inserting {p:?}")));
            }
            self.tri[t as usize] = [a, b, id];
            self.nbr[t as usize] = [NONE, NONE, out];
            self.alive[t as usize] = true;
            if out != NONE {
                let on = &mut self.nbr[out as usize];
                for j in 0..3 {
                    let ov = self.tri[out as usize];
                    let (x, y) = (ov[(j + 1) % 3], ov[(j + 2) % 3]);
                    if x == b && y == a {
                        on[j] = t;
                    }
                }
            }
            by_start.insert(a, t);
            by_end.insert(b, t);
            self.vtri[a as usize] = t;
            self.vtri[b as usize] = t;
        }
        for &t in &new {
            let [a, b, _] = self.tri[t as usize];
            // opposite a: edge (b, p), shared with the triangle starting at b
            self.nbr[t as usize][0] = by_start[&b];
            // opposite b: edge (p, a), shared with the triangle ending at a
            self.nbr[t as usize][1] = by_end[&a];
        }
        self.vtri[id as usize] = new[0];
        self.last = new[0];
        Ok((id, new))
    }

    /// The triangle and local index of vertex `a` in a triangle holding the edge `{a, b}`.
    pub fn find_edge(&self, a: u32, b: u32) -> Option<(u32, usize)> {
        let start = self.vtri[a as usize];
        if start == NONE || !self.alive[start as usize] {
            return self.find_edge_slow(a, b);
        }
        let mut t = start;
        for _ in 0..2 {
            loop {
                let v = self.tri[t as usize];
                let ia = v.iter().position(|&x| x == a)?;
                if v[(ia + 1) % 3] == b || v[(ia + 2) % 3] == b {
                    return Some((t, ia));
                }
                let n = self.nbr[t as usize][(ia + 1) % 3];
                if n == NONE {
                    break;
                }
                t = n;
                if t == start {
                    return None;
                }
            }
            // hit the hull; sweep the other way
            t = start;
            loop {
                let v = self.tri[t as usize];
                let ia = v.iter().position(|&x| x == a)?;
                if v[(ia + 1) % 3] == b || v[(ia + 2) % 3] == b {
                    return Some((t, ia));
                }
                let n = self.nbr[t as usize][(ia + 2) % 3];
                if n == NONE {
                    return None;
                }
                t = n;
            }
        }
        None
    }

    fn find_edge_slow(&self, a: u32, b: u32) -> Option<(u32, usize)> {
        for (t, v) in self.tri.iter().enumerate() {
            if !self.alive[t] {
                continue;
            }
            if let Some(ia) = v.iter().position(|&x| x == a) {
                if v.contains(&b) {
                    return Some((t as u32, ia));
                }
            }
        }
        None
    }

    /// Apex vertices of the (one or two) triangles sharing edge `{a, b}`.
    pub fn edge_apexes(&self, a: u32, b: u32) -> Option<Vec<u32>> {
        let (t, _) = self.find_edge(a, b)?;
        let mut out = Vec::with_capacity(2);
        let v = self.tri[t as usize];
        let k = (0..3).find(|&k| v[k] != a && v[k] != b).unwrap();
        out.push(v[k]);
        let n = self.nbr[t as usize][k];
        if n != NONE {
            let w = self.tri[n as usize];
            if let Some(j) = (0..3).find(|&j| w[j] != a && w[j] != b) {
                out.push(w[j]);
            }
        }
        Some(out)
    }

    pub fn alive_triangles(&self) -> impl Iterator<Item = u32> + '_ {
        (0..self.tri.len() as u32).filter(move |&t| self.alive[t as usize])
    }
}
