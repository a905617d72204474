//! Truncated multivariate Taylor arithmetic (total order 3, up to 3 variables).
//!
//! Evaluating a closed-form expression on jets yields its value, gradient and
//! Hessian to rounding error, which is how the auxiliary fields are
//! differentiated. `diff` lowers the order by one, so a quantity that is itself
//! a derivative (such as `∂_i δ`) is still exact through second order.

use std::ops::{Add, Div, Mul, Neg, Sub};
use std::sync::OnceLock;

const N: usize = 20;

/// Exponent triples, grouped by total degree.
fn monomials() -> &'static [[u8; 3]; N] {
    static M: OnceLock<[[u8; 3]; N]> = OnceLock::new();
    M.get_or_init(|| {
        let mut out = [[0u8; 3]; N];
        let mut n = 0;
        for deg in 0..=3u8 {
            for a in (0..=deg).rev() {
                for b in (0..=deg - a).rev() {
                    out[n] = [a, b, deg - a - b];
                    n += 1;
                }
            }
        }
        out
    })
}

fn index_of(e: [u8; 3]) -> Option<usize> {
    static I: OnceLock<[[[u8; 4]; 4]; 4]> = OnceLock::new();
    let table = I.get_or_init(|| {
        let mut t = [[[u8::MAX; 4]; 4]; 4];
        for (k, m) in monomials().iter().enumerate() {
            t[m[0] as usize][m[1] as usize][m[2] as usize] = k as u8;
        }
        t
    });
    if e.iter().any(|&x| x > 3) {
        return None;
    }
    let k = table[e[0] as usize][e[1] as usize][e[2] as usize];
    (k != u8::MAX).then_some(k as usize)
}

/// Pairs `(i, j, k)` with `monomial[i] * monomial[j] = monomial[k]`.
fn product_table() -> &'static [(u8, u8, u8)] {
    static T: OnceLock<Vec<(u8, u8, u8)>> = OnceLock::new();
    T.get_or_init(|| {
        let m = monomials();
        let mut t = Vec::new();
        for i in 0..N {
            for j in 0..N {
                let e = [m[i][0] + m[j][0], m[i][1] + m[j][1], m[i][2] + m[j][2]];
                if let Some(k) = index_of(e) {
                    t.push((i as u8, j as u8, k as u8));
                }
            }
        }
        t
    })
}

/// Jet around a base point; coefficient `k` multiplies the monomial `monomials()[k]`
/// in the displacement from that point.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Jet {
    c: [f64; N],
}

impl Jet {
    pub fn constant(v: f64) -> Self {
        let mut c = [0.0; N];
        c[0] = v;
        Jet { c }
    }

    /// Independent variable `i` (0..3) with base value `x0`.
    pub fn var(i: usize, x0: f64) -> Self {
        let mut j = Self::constant(x0);
        j.c[1 + i] = 1.0;
        j
    }

    /// Independent variables for a point of dimension `x.len() <= 3`.
    pub fn vars(x: &[f64]) -> Vec<Jet> {
        assert!(x.len() <= 3, "jets support at most three variables");
        x.iter().enumerate().map(|(i, &v)| Jet::var(i, v)).collect()
    }

    pub fn value(&self) -> f64 {
        self.c[0]
    }

    pub fn d1(&self, i: usize) -> f64 {
        self.c[1 + i]
    }

    /// Second derivative `∂_i ∂_j`.
    pub fn d2(&self, i: usize, j: usize) -> f64 {
        let mut e = [0u8; 3];
        e[i] += 1;
        e[j] += 1;
        let v = self.c[index_of(e).unwrap()];
        if i == j {
            2.0 * v
        } else {
            v
        }
    }

    pub fn gradient(&self, n: usize) -> Vec<f64> {
        (0..n).map(|i| self.d1(i)).collect()
    }

    /// Row-major `n*n` Hessian.
    pub fn hessian(&self, n: usize) -> Vec<f64> {
        let mut h = vec![0.0; n * n];
        for i in 0..n {
            for j in 0..n {
                h[i * n + j] = self.d2(i, j);
            }
        }
        h
    }

    /// Partial derivative in variable `i`; the result is exact through order 2.
    pub fn diff(&self, i: usize) -> Jet {
        let m = monomials();
        let mut out = [0.0; N];
        for (k, e) in m.iter().enumerate() {
            if e[i] == 0 {
                continue;
            }
            let mut lower = *e;
            lower[i] -= 1;
            out[index_of(lower).unwrap()] += e[i] as f64 * self.c[k];
        }
        Jet { c: out }
    }

    pub fn scale(&self, s: f64) -> Jet {
        let mut c = self.c;
        c.iter_mut().for_each(|v| *v *= s);
        Jet { c }
    }

    /// `f(self)` from the value and first three derivatives of `f` at the base value.
    fn compose(&self, f: [f64; 4]) -> Jet {
        let mut h = *self;
        h.c[0] = 0.0;
        let h2 = h * h;
        let h3 = h2 * h;
        let mut out = h.scale(f[1]) + h2.scale(f[2] / 2.0) + h3.scale(f[3] / 6.0);
        out.c[0] = f[0];
        out
    }

    pub fn recip(&self) -> Jet {
        let x = self.c[0];
        self.compose([1.0 / x, -1.0 / (x * x), 2.0 / (x * x * x), -6.0 / (x * x * x * x)])
    }

    pub fn powf(&self, p: f64) -> Jet {
        let x = self.c[0];
        self.compose([
            x.powf(p),
            p * x.powf(p - 1.0),
            p * (p - 1.0) * x.powf(p - 2.0),
            p * (p - 1.0) * (p - 2.0) * x.powf(p - 3.0),
        ])
    }

    pub fn powi(&self, n: u32) -> Jet {
        let mut out = Jet::constant(1.0);
        for _ in 0..n {
            out = out * *self;
        }
        out
    }

    pub fn sqrt(&self) -> Jet {
        self.powf(0.5)
    }

    pub fn ln(&self) -> Jet {
        let x = self.c[0];
        self.compose([x.ln(), 1.0 / x, -1.0 / (x * x), 2.0 / (x * x * x)])
    }

    /// `(self)^(p/2)` for a non-negative base such as `r^2`; exact polynomial
    /// arithmetic when `p` is an even integer, and zero derivatives at a zero
    /// base otherwise (the limits that exist for `p > 2`).
    pub fn half_power(&self, p: f64) -> Jet {
        let half = p / 2.0;
        if half.fract() == 0.0 && half >= 0.0 {
            return self.powi(half as u32);
        }
        if self.c[0] <= 0.0 {
            return Jet::constant(0.0);
        }
        self.powf(half)
    }
}

impl Add for Jet {
    type Output = Jet;
    fn add(mut self, o: Jet) -> Jet {
        self.c.iter_mut().zip(o.c).for_each(|(a, b)| *a += b);
        self
    }
}

impl Sub for Jet {
    type Output = Jet;
    fn sub(mut self, o: Jet) -> Jet {
        self.c.iter_mut().zip(o.c).for_each(|(a, b)| *a -= b);
        self
    }
}

impl Neg for Jet {
    type Output = Jet;
    fn neg(self) -> Jet {
        self.scale(-1.0)
    }
}

impl Mul for Jet {
    type Output = Jet;
    fn mul(self, o: Jet) -> Jet {
        let mut c = [0.0; N];
        for &(i, j, k) in product_table() {
            c[k as usize] += self.c[i as usize] * o.c[j as usize];
        }
        Jet { c }
    }
}

impl Div for Jet {
    type Output = Jet;
    fn div(self, o: Jet) -> Jet {
        self * o.recip()
    }
}

impl Add<f64> for Jet {
    type Output = Jet;
    fn add(mut self, o: f64) -> Jet {
        self.c[0] += o;
        self
    }
}

impl Sub<f64> for Jet {
    type Output = Jet;
    fn sub(mut self, o: f64) -> Jet {
        self.c[0] -= o;
        self
    }
}

impl Mul<f64> for Jet {
    type Output = Jet;
    fn mul(self, o: f64) -> Jet {
        self.scale(o)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn derivatives_of_a_rational_expression() {
        let (x0, y0) = (0.7, -0.4);
        let v = Jet::vars(&[x0, y0]);
        let f = (v[0] * v[0] * v[1] + 1.0) / (v[0] + 2.0);
        let exact = |x: f64, y: f64| (x * x * y + 1.0) / (x + 2.0);
        assert!((f.value() - exact(x0, y0)).abs() < 1e-15);
        let h = 1e-4;
        let fd_xx = (exact(x0 + h, y0) - 2.0 * exact(x0, y0) + exact(x0 - h, y0)) / (h * h);
        assert!((f.d2(0, 0) - fd_xx).abs() < 1e-6);
        let fd_xy = (exact(x0 + h, y0 + h) - exact(x0 + h, y0 - h) - exact(x0 - h, y0 + h)
            + exact(x0 - h, y0 - h))
            / (4.0 * h * h);
        assert!((f.d2(0, 1) - fd_xy).abs() < 1e-6);
    }

    #[test]
    fn diff_keeps_second_order() {
        let x0 = 1.3;
        let x = Jet::var(0, x0);
        let f = x.powf(3.5).diff(0);
        assert!((f.value() - 3.5 * x0.powf(2.5)).abs() < 1e-12);
        assert!((f.d1(0) - 3.5 * 2.5 * x0.powf(1.5)).abs() < 1e-12);
        assert!((f.d2(0, 0) - 3.5 * 2.5 * 1.5 * x0.powf(0.5)).abs() < 1e-12);
    }

    #[test]
    fn half_power_at_origin() {
        let v = Jet::vars(&[0.0, 0.0]);
        let r2 = v[0] * v[0] + v[1] * v[1];
        let q = r2.half_power(2.0);
        assert_eq!(q.d2(0, 0), 2.0);
        let q = r2.half_power(3.0);
        assert_eq!(q.value(), 0.0);
    }
}
