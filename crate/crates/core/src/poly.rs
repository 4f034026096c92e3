//! Small bivariate polynomials in reference coordinates and the quadrature
//! rules used for every element integral.

use std::ops::{Add, Mul};

/// Polynomial `Σ c[i][j] s^i t^j` with `i, j ≤ 2`.
#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct Poly {
    pub c: [[f64; 3]; 3],
}

impl Poly {
    pub const ZERO: Poly = Poly { c: [[0.0; 3]; 3] };

    pub fn monomial(i: usize, j: usize) -> Poly {
        let mut p = Poly::ZERO;
        p.c[i][j] = 1.0;
        p
    }

    pub fn constant(a: f64) -> Poly {
        let mut p = Poly::ZERO;
        p.c[0][0] = a;
        p
    }

    pub fn eval(&self, s: f64, t: f64) -> f64 {
        let sp = [1.0, s, s * s];
        let tp = [1.0, t, t * t];
        let mut v = 0.0;
        for i in 0..3 {
            for j in 0..3 {
                v += self.c[i][j] * sp[i] * tp[j];
            }
        }
        v
    }

    pub fn ds(&self) -> Poly {
        let mut p = Poly::ZERO;
        for i in 1..3 {
            for j in 0..3 {
                p.c[i - 1][j] = i as f64 * self.c[i][j];
            }
        }
        p
    }

    pub fn dt(&self) -> Poly {
        let mut p = Poly::ZERO;
        for i in 0..3 {
            for j in 1..3 {
                p.c[i][j - 1] = j as f64 * self.c[i][j];
            }
        }
        p
    }

    pub fn scale(&self, a: f64) -> Poly {
        let mut p = *self;
        p.c.iter_mut().flatten().for_each(|x| *x *= a);
        p
    }
}

impl Add for Poly {
    type Output = Poly;
    fn add(mut self, o: Poly) -> Poly {
        for i in 0..3 {
            for j in 0..3 {
                self.c[i][j] += o.c[i][j];
            }
        }
        self
    }
}

impl Mul<f64> for Poly {
    type Output = Poly;
    fn mul(self, a: f64) -> Poly {
        self.scale(a)
    }
}

/// A polynomial 1-form `a1 ds + a2 dt` in reference coordinates.
pub type Poly1 = [Poly; 2];

pub fn poly1_add_scaled(acc: &mut Poly1, p: &Poly1, a: f64) {
    acc[0] = acc[0] + p[0] * a;
    acc[1] = acc[1] + p[1] * a;
}

/// Exterior derivative of a reference 1-form, as a density in `ds∧dt`.
pub fn d_poly1(p: &Poly1) -> Poly {
    p[1].ds() + p[0].dt() * -1.0
}

/// Gauss–Legendre nodes and weights on `[0, 1]`.
pub fn gauss_legendre01(n: usize) -> Vec<(f64, f64)> {
    assert!(n >= 1);
    let mut out = Vec::with_capacity(n);
    for i in 0..n {
        // Newton on P_n starting from the Chebyshev-like guess
        let mut x = (std::f64::consts::PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
        let mut dp = 1.0;
        for _ in 0..100 {
            let (mut p0, mut p1) = (1.0, x);
            for k in 2..=n {
                let p2 = ((2 * k - 1) as f64 * x * p1 - (k - 1) as f64 * p0) / k as f64;
                p0 = p1;
                p1 = p2;
            }
            dp = n as f64 * (x * p1 - p0) / (x * x - 1.0);
            let dx = p1 / dp;
            x -= dx;
            if dx.abs() < 1e-16 {
                break;
            }
        }
        let w = 2.0 / ((1.0 - x * x) * dp * dp);
        out.push((0.5 * (1.0 - x), 0.5 * w));
    }
    out.sort_by(|a, b| a.0.partial_cmp(&b.0).unwrap());
    out
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum RefShape {
    /// `(0,0), (1,0), (0,1)`
    Triangle,
    /// `(0,0), (1,0), (1,1), (0,1)`
    Square,
}

impl RefShape {
    pub fn vertices(self) -> &'static [[f64; 2]] {
        match self {
            RefShape::Triangle => &[[0.0, 0.0], [1.0, 0.0], [0.0, 1.0]],
            RefShape::Square => &[[0.0, 0.0], [1.0, 0.0], [1.0, 1.0], [0.0, 1.0]],
        }
    }

    pub fn area(self) -> f64 {
        match self {
            RefShape::Triangle => 0.5,
            RefShape::Square => 1.0,
        }
    }

    pub fn centroid(self) -> [f64; 2] {
        match self {
            RefShape::Triangle => [1.0 / 3.0, 1.0 / 3.0],
            RefShape::Square => [0.5, 0.5],
        }
    }

    /// Reference quadrature: collapsed Gauss on the triangle (exact to degree
    /// `2n − 2`), tensor Gauss on the square (exact to degree `2n − 1` per
    /// variable).
    pub fn quadrature(self, n: usize) -> Vec<([f64; 2], f64)> {
        let g = gauss_legendre01(n);
        let mut out = Vec::with_capacity(n * n);
        match self {
            RefShape::Triangle => {
                for &(xi, wx) in &g {
                    for &(eta, wy) in &g {
                        out.push(([xi, eta * (1.0 - xi)], wx * wy * (1.0 - xi)));
                    }
                }
            }
            RefShape::Square => {
                for &(x, wx) in &g {
                    for &(y, wy) in &g {
                        out.push(([x, y], wx * wy));
                    }
                }
            }
        }
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn gauss_integrates_polynomials() {
        for n in 1..7 {
            let g = gauss_legendre01(n);
            for k in 0..(2 * n) {
                let q: f64 = g.iter().map(|&(x, w)| w * x.powi(k as i32)).sum();
                assert!((q - 1.0 / (k as f64 + 1.0)).abs() < 1e-14, "n={n} k={k}");
            }
        }
    }

    #[test]
    fn triangle_rule_exact_to_degree_eight() {
        let q = RefShape::Triangle.quadrature(5);
        // ∫ s^a t^b over the reference triangle = a! b! / (a+b+2)!
        let fact = |n: u32| (1..=n).map(|k| k as f64).product::<f64>();
        for a in 0..=8u32 {
            for b in 0..=(8 - a) {
                let exact = fact(a) * fact(b) / fact(a + b + 2);
                let num: f64 = q.iter().map(|(p, w)| w * p[0].powi(a as i32) * p[1].powi(b as i32)).sum();
                assert!((num - exact).abs() < 1e-15, "a={a} b={b}");
            }
        }
    }

    #[test]
    fn poly_derivatives() {
        // p = 1 + 2s + 3st + 4t²
        let p = Poly::constant(1.0) + Poly::monomial(1, 0) * 2.0 + Poly::monomial(1, 1) * 3.0 + Poly::monomial(0, 2) * 4.0;
        assert_eq!(p.eval(0.5, 0.25), 1.0 + 1.0 + 0.375 + 0.25);
        assert_eq!(p.ds().eval(0.5, 0.25), 2.0 + 0.75);
        assert_eq!(p.dt().eval(0.5, 0.25), 1.5 + 2.0);
        let w: Poly1 = [Poly::monomial(0, 1) * -1.0, Poly::monomial(1, 0)];
        assert_eq!(d_poly1(&w).eval(0.3, 0.7), 2.0);
    }
}
