//! Gauss–Legendre rules and a globally adaptive bisection integrator.

use std::collections::{BinaryHeap, HashMap};
use std::sync::{Arc, Mutex, OnceLock};

use crate::error::{Error, Result};

/// Nodes and weights on `[-1, 1]`.
#[derive(Debug, Clone)]
pub struct Rule {
    pub nodes: Vec<f64>,
    pub weights: Vec<f64>,
}

fn compute_rule(n: usize) -> Rule {
    let mut nodes = vec![0.0; n];
    let mut weights = vec![0.0; n];
    for i in 0..(n + 1) / 2 {
        // Tricomi initial guess, then Newton on P_n.
        let mut x = (std::f64::consts::PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
        let mut dp = 0.0;
        for _ in 0..100 {
            let (mut p0, mut p1) = (1.0, x);
            for k in 2..=n {
                let k = k as f64;
                let p2 = ((2.0 * k - 1.0) * x * p1 - (k - 1.0) * p0) / k;
                p0 = p1;
                p1 = p2;
            }
            let pn = if n == 1 { x } else { p1 };
            let pm = if n == 1 { 1.0 } else { p0 };
            dp = n as f64 * (x * pn - pm) / (x * x - 1.0);
            let dx = pn / dp;
            x -= dx;
            if dx.abs() < 1e-16 {
                break;
            }
        }
        let w = 2.0 / ((1.0 - x * x) * dp * dp);
        nodes[i] = -x;
        nodes[n - 1 - i] = x;
        weights[i] = w;
        weights[n - 1 - i] = w;
    }
    if n % 2 == 1 {
        nodes[n / 2] = 0.0;
    }
    Rule { nodes, weights }
}

/// Cached `n`-point Gauss–Legendre rule.
pub fn gauss_legendre(n: usize) -> Arc<Rule> {
    assert!(n >= 1);
    static CACHE: OnceLock<Mutex<HashMap<usize, Arc<Rule>>>> = OnceLock::new();
    let cache = CACHE.get_or_init(|| Mutex::new(HashMap::new()));
    let mut guard = cache.lock().unwrap();
    guard.entry(n).or_insert_with(|| Arc::new(compute_rule(n))).clone()
}

/// Fixed `n`-point rule on `[a, b]`.
pub fn fixed<F: Fn(f64) -> f64>(f: &F, a: f64, b: f64, n: usize) -> f64 {
    let r = gauss_legendre(n);
    let (c, h) = (0.5 * (a + b), 0.5 * (b - a));
    r.nodes.iter().zip(&r.weights).map(|(x, w)| w * f(c + h * x)).sum::<f64>() * h
}

/// Integral value with an error estimate.
#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize)]
pub struct Estimate {
    pub value: f64,
    pub error: f64,
}

impl std::ops::Add for Estimate {
    type Output = Estimate;
    fn add(self, o: Estimate) -> Estimate {
        Estimate { value: self.value + o.value, error: self.error + o.error }
    }
}

#[derive(Debug)]
struct Panel {
    a: f64,
    b: f64,
    value: f64,
    error: f64,
}

impl PartialEq for Panel {
    fn eq(&self, o: &Self) -> bool {
        self.error == o.error
    }
}
impl Eq for Panel {}
impl PartialOrd for Panel {
    fn partial_cmp(&self, o: &Self) -> Option<std::cmp::Ordering> {
        Some(self.cmp(o))
    }
}
impl Ord for Panel {
    fn cmp(&self, o: &Self) -> std::cmp::Ordering {
        self.error.total_cmp(&o.error)
    }
}

const ORDER: usize = 16;
const MAX_PANELS: usize = 20_000;

fn panel<F: Fn(f64) -> f64>(f: &F, a: f64, b: f64) -> Panel {
    let m = 0.5 * (a + b);
    let whole = fixed(f, a, b, ORDER);
    let halves = fixed(f, a, m, ORDER) + fixed(f, m, b, ORDER);
    Panel { a, b, value: halves, error: (whole - halves).abs() }
}

/// Globally adaptive integration over the given breakpoints.
///
/// Stops once the summed panel error is below `max(rel_tol * |I|, abs_tol)`.
pub fn adaptive_breaks<F: Fn(f64) -> f64>(
    f: &F,
    breaks: &[f64],
    rel_tol: f64,
    abs_tol: f64,
) -> Result<Estimate> {
    let mut heap: BinaryHeap<Panel> =
        breaks.windows(2).filter(|w| w[1] > w[0]).map(|w| panel(f, w[0], w[1])).collect();
    loop {
        let value: f64 = heap.iter().map(|p| p.value).sum();
        let error: f64 = heap.iter().map(|p| p.error).sum();
        if !value.is_finite() {
            return Err(Error::Divergent("integrand produced a non-finite value".into()));
        }
        if error <= (rel_tol * value.abs()).max(abs_tol) {
            return Ok(Estimate { value, error });
        }
        if heap.len() >= MAX_PANELS {
            return Err(Error::QuadratureNotConverged {
                estimate: error,
                tol: (rel_tol * value.abs()).max(abs_tol),
            });
        }
        let worst = heap.pop().unwrap();
        let m = 0.5 * (worst.a + worst.b);
        if !(m > worst.a && m < worst.b) {
            return Err(Error::QuadratureNotConverged { estimate: error, tol: rel_tol * value.abs() });
        }
        heap.push(panel(f, worst.a, m));
        heap.push(panel(f, m, worst.b));
    }
}

/// Globally adaptive integration on `[a, b]`.
pub fn adaptive<F: Fn(f64) -> f64>(f: &F, a: f64, b: f64, rel_tol: f64) -> Result<Estimate> {
    adaptive_breaks(f, &[a, b], rel_tol, 0.0)
}

/// Breakpoints `0, s, 2s, 4s, ...` up to `b`, resolving a feature of width `s` at the origin.
pub fn geometric_breaks(s: f64, b: f64) -> Vec<f64> {
    let mut out = vec![0.0];
    let mut x = s.min(b);
    while x < b {
        out.push(x);
        x *= 2.0;
    }
    out.push(b);
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rule_integrates_polynomials_exactly() {
        for n in [1, 2, 5, 16, 33] {
            for p in 0..(2 * n) {
                let got = fixed(&|x: f64| x.powi(p as i32), 0.0, 1.0, n);
                assert!((got - 1.0 / (p as f64 + 1.0)).abs() < 1e-13, "n={n} p={p}");
            }
        }
    }

    #[test]
    fn adaptive_handles_sharp_peak() {
        let eps: f64 = 1e-6;
        let f = |x: f64| 1.0 / (eps + x * x);
        let exact = (1.0 / eps.sqrt()).atan() / eps.sqrt();
        let est = adaptive_breaks(&f, &geometric_breaks(eps.sqrt(), 1.0), 1e-12, 0.0).unwrap();
        assert!((est.value - exact).abs() / exact < 1e-11);
    }
}
