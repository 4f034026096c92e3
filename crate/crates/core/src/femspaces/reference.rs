//! Reference elements built the Ciarlet way: a prime polynomial basis, a list
//! of DOF functionals, and the dual basis obtained by inverting the
//! generalized Vandermonde matrix.

use nalgebra::DMatrix;

use crate::poly::{d_poly1, gauss_legendre01, poly1_add_scaled, Poly, Poly1, RefShape};

/// Where a local DOF lives.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Entity {
    Vertex(usize),
    /// Local edge `k` (from reference vertex `k` to `k + 1`) and the index of
    /// the Legendre polynomial or node on it.
    Edge(usize, usize),
    Interior(usize),
}

#[derive(Clone, Copy, Debug)]
pub enum Functional {
    Value([f64; 2]),
    /// `∫₀¹ α(a + σ(b − a))·(b − a) L_leg(σ) dσ` with `L₀ = 1`, `L₁ = 2σ − 1`.
    EdgeMoment { a: [f64; 2], b: [f64; 2], leg: usize },
    /// `∫ α_comp` over the reference cell.
    InteriorMoment(usize),
}

fn legendre01(leg: usize, s: f64) -> f64 {
    match leg {
        0 => 1.0,
        1 => 2.0 * s - 1.0,
        _ => unreachable!("only two edge moments are used"),
    }
}

impl Functional {
    pub fn apply0(&self, p: &Poly) -> f64 {
        match *self {
            Functional::Value(x) => p.eval(x[0], x[1]),
            _ => panic!("not a 0-form functional"),
        }
    }

    pub fn apply1(&self, shape: RefShape, p: &Poly1) -> f64 {
        match *self {
            Functional::EdgeMoment { a, b, leg } => {
                let t = [b[0] - a[0], b[1] - a[1]];
                gauss_legendre01(4)
                    .iter()
                    .map(|&(s, w)| {
                        let x = a[0] + s * t[0];
                        let y = a[1] + s * t[1];
                        w * (p[0].eval(x, y) * t[0] + p[1].eval(x, y) * t[1]) * legendre01(leg, s)
                    })
                    .sum()
            }
            Functional::InteriorMoment(c) => shape.quadrature(4).iter().map(|(x, w)| w * p[c].eval(x[0], x[1])).sum(),
            Functional::Value(_) => panic!("not a 1-form functional"),
        }
    }
}

/// Round to the nearest multiple of `1/720720` when within roundoff, so that
/// topological matrices come out as exact rationals.
pub fn snap_rational(x: f64) -> f64 {
    const DEN: f64 = 720720.0;
    let y = (x * DEN).round() / DEN;
    if (x - y).abs() < 1e-9 {
        y
    } else {
        x
    }
}

#[derive(Clone, Debug)]
pub struct RefElement {
    pub shape: RefShape,
    pub basis0: Vec<Poly>,
    pub basis1: Vec<Poly1>,
    /// Densities with respect to the physical area (2-forms are pulled back
    /// as 0-forms on affine cells).
    pub basis2: Vec<Poly>,
    pub entities0: Vec<Entity>,
    pub entities1: Vec<Entity>,
    pub entities2: Vec<Entity>,
    /// `n1 × n0`: reference DOFs of `dψ_j`.
    pub d01: Vec<Vec<f64>>,
    /// `n2 × n1`: reference DOFs of `dα_j` as a density on the reference cell.
    pub d12: Vec<Vec<f64>>,
}

fn dual_basis<T: Clone>(prime: &[T], apply: impl Fn(usize, &T) -> f64, combine: impl Fn(&[f64]) -> T) -> Vec<T> {
    let n = prime.len();
    let v = DMatrix::from_fn(n, n, |m, k| apply(m, &prime[k]));
    let x = v.try_inverse().expect("reference DOFs must be unisolvent");
    (0..n).map(|j| combine(&x.column(j).iter().copied().collect::<Vec<_>>())).collect()
}

fn combine0(prime: &[Poly], coef: &[f64]) -> Poly {
    prime.iter().zip(coef).fold(Poly::ZERO, |acc, (p, &c)| acc + *p * c)
}

fn combine1(prime: &[Poly1], coef: &[f64]) -> Poly1 {
    let mut acc = [Poly::ZERO; 2];
    for (p, &c) in prime.iter().zip(coef) {
        poly1_add_scaled(&mut acc, p, c);
    }
    acc
}

fn grad(p: &Poly) -> Poly1 {
    [p.ds(), p.dt()]
}

/// Flux 1-form `(−u₂, u₁)` of a velocity given by its two components.
fn flux(u1: Poly, u2: Poly) -> Poly1 {
    [u2 * -1.0, u1]
}

fn m(i: usize, j: usize) -> Poly {
    Poly::monomial(i, j)
}

struct Spec {
    shape: RefShape,
    prime0: Vec<Poly>,
    dofs0: Vec<(Functional, Entity)>,
    prime1: Vec<Poly1>,
    dofs1: Vec<(Functional, Entity)>,
    prime2: Vec<Poly>,
    dofs2: Vec<(Functional, Entity)>,
}

fn build(spec: Spec) -> RefElement {
    let shape = spec.shape;
    let basis0 = dual_basis(&spec.prime0, |k, p| spec.dofs0[k].0.apply0(p), |c| combine0(&spec.prime0, c));
    let basis1 = dual_basis(&spec.prime1, |k, p| spec.dofs1[k].0.apply1(shape, p), |c| combine1(&spec.prime1, c));
    let basis2 = dual_basis(&spec.prime2, |k, p| spec.dofs2[k].0.apply0(p), |c| combine0(&spec.prime2, c));
    let d01 = spec
        .dofs1
        .iter()
        .map(|(f, _)| basis0.iter().map(|b| snap_rational(f.apply1(shape, &grad(b)))).collect())
        .collect();
    let d12 = spec
        .dofs2
        .iter()
        .map(|(f, _)| basis1.iter().map(|b| snap_rational(f.apply0(&d_poly1(b)))).collect())
        .collect();
    RefElement {
        shape,
        basis0,
        basis1,
        basis2,
        entities0: spec.dofs0.iter().map(|d| d.1).collect(),
        entities1: spec.dofs1.iter().map(|d| d.1).collect(),
        entities2: spec.dofs2.iter().map(|d| d.1).collect(),
        d01,
        d12,
    }
}

fn vertex_values(shape: RefShape) -> Vec<(Functional, Entity)> {
    shape.vertices().iter().enumerate().map(|(k, &v)| (Functional::Value(v), Entity::Vertex(k))).collect()
}

fn edge_moments(shape: RefShape, legs: usize) -> Vec<(Functional, Entity)> {
    let v = shape.vertices();
    let n = v.len();
    let mut out = Vec::new();
    for k in 0..n {
        for leg in 0..legs {
            out.push((Functional::EdgeMoment { a: v[k], b: v[(k + 1) % n], leg }, Entity::Edge(k, leg)));
        }
    }
    out
}

/// Lowest-order Whitney complex P1 / RT0 / P0 on the reference triangle.
pub fn triangle_whitney() -> RefElement {
    let shape = RefShape::Triangle;
    build(Spec {
        shape,
        prime0: vec![m(0, 0), m(1, 0), m(0, 1)],
        dofs0: vertex_values(shape),
        prime1: vec![flux(m(0, 0), Poly::ZERO), flux(Poly::ZERO, m(0, 0)), flux(m(1, 0), m(0, 1))],
        dofs1: edge_moments(shape, 1),
        prime2: vec![m(0, 0)],
        dofs2: vec![(Functional::Value(shape.centroid()), Entity::Interior(0))],
    })
}

/// Q1 / RT0 / P0 on the reference square.
pub fn square_whitney() -> RefElement {
    let shape = RefShape::Square;
    build(Spec {
        shape,
        prime0: vec![m(0, 0), m(1, 0), m(0, 1), m(1, 1)],
        dofs0: vertex_values(shape),
        prime1: vec![
            flux(m(0, 0), Poly::ZERO),
            flux(m(1, 0), Poly::ZERO),
            flux(Poly::ZERO, m(0, 0)),
            flux(Poly::ZERO, m(0, 1)),
        ],
        dofs1: edge_moments(shape, 1),
        prime2: vec![m(0, 0)],
        dofs2: vec![(Functional::Value(shape.centroid()), Entity::Interior(0))],
    })
}

/// P2 / RT1 / P1DG on the reference triangle.
pub fn triangle_second_order() -> RefElement {
    let shape = RefShape::Triangle;
    let v = shape.vertices();
    let mut dofs0 = vertex_values(shape);
    for k in 0..3 {
        let a = v[k];
        let b = v[(k + 1) % 3];
        dofs0.push((Functional::Value([0.5 * (a[0] + b[0]), 0.5 * (a[1] + b[1])]), Entity::Edge(k, 0)));
    }
    let z = Poly::ZERO;
    let prime1 = vec![
        flux(m(0, 0), z),
        flux(m(1, 0), z),
        flux(m(0, 1), z),
        flux(z, m(0, 0)),
        flux(z, m(1, 0)),
        flux(z, m(0, 1)),
        flux(m(2, 0), m(1, 1)),
        flux(m(1, 1), m(0, 2)),
    ];
    let mut dofs1 = edge_moments(shape, 2);
    dofs1.push((Functional::InteriorMoment(0), Entity::Interior(0)));
    dofs1.push((Functional::InteriorMoment(1), Entity::Interior(1)));
    let dofs2 = v.iter().enumerate().map(|(k, &x)| (Functional::Value(x), Entity::Interior(k))).collect();
    build(Spec {
        shape,
        prime0: vec![m(0, 0), m(1, 0), m(0, 1), m(2, 0), m(1, 1), m(0, 2)],
        dofs0,
        prime1,
        dofs1,
        prime2: vec![m(0, 0), m(1, 0), m(0, 1)],
        dofs2,
    })
}
