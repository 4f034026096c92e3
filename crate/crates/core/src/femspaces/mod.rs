//! Discrete form spaces `V⁰ → V¹ → V²` on a mesh.
//!
//! Every 1-form is stored by its components `(a₁, a₂)` in `dx, dy`. The flux
//! form of a velocity `u` is `(−u₂, u₁)`, so div-conforming (flux) and
//! curl-conforming (circulation) lowest-order spaces share one
//! implementation: both are Whitney 1-forms whose DOFs are line integrals
//! along the oriented edges. 2-forms are stored as densities with respect to
//! physical area.

pub mod reference;

use std::fmt;
use std::ops::Range;

use crate::error::{Error, Result};
use crate::linalg::{pcg, CsrMatrix, SolveStats, SolverOptions, Triplets};
use crate::mesh::{CellKind, Mesh, Point};
use crate::poly::{d_poly1, RefShape};
use reference::{Entity, RefElement};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Family {
    /// P1 / RT0 / P0 (Q1 on quadrilaterals, a six-triangle macro element on
    /// hexagons).
    P1Rt0P0,
    /// P1 / N0 / P0 on a dual mesh: same spaces, circulation interpretation.
    P1N0P0,
    /// P2 / RT1 / P1DG on triangles.
    P2Rt1P1dg,
}

impl Family {
    pub fn name(self) -> &'static str {
        match self {
            Family::P1Rt0P0 => "P1/RT0/P0",
            Family::P1N0P0 => "P1/N0/P0",
            Family::P2Rt1P1dg => "P2/RT1/P1DG",
        }
    }

    pub fn from_name(s: &str) -> Option<Self> {
        match s.trim().to_ascii_uppercase().replace(['-', '_'], "/").as_str() {
            "P1/RT0/P0" | "Q1/RT0/P0" => Some(Family::P1Rt0P0),
            "P1/N0/P0" => Some(Family::P1N0P0),
            "P2/RT1/P1DG" => Some(Family::P2Rt1P1dg),
            _ => None,
        }
    }

    pub fn is_whitney(self) -> bool {
        matches!(self, Family::P1Rt0P0 | Family::P1N0P0)
    }
}

impl fmt::Display for Family {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// Coefficients of one discrete form.
#[derive(Clone, Debug, PartialEq)]
pub struct FormCoeffs {
    pub degree: usize,
    pub values: Vec<f64>,
}

impl FormCoeffs {
    pub fn new(degree: usize, values: Vec<f64>) -> Self {
        FormCoeffs { degree, values }
    }

    pub fn zeros(space: &SpaceComplex, degree: usize) -> Self {
        FormCoeffs { degree, values: vec![0.0; space.dim(degree)] }
    }

    pub fn expect(&self, degree: usize, space: &SpaceComplex) -> Result<&[f64]> {
        if self.degree != degree {
            return Err(Error::WrongSpace { expected: degree, got: self.degree });
        }
        if self.values.len() != space.dim(degree) {
            return Err(Error::DimensionMismatch { what: "form coefficients", left: self.values.len(), right: space.dim(degree) });
        }
        Ok(&self.values)
    }
}

/// Affine map `x = x₀ + J x̂` from a reference cell.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ElementMap {
    pub x0: Point,
    /// `j[r][c] = ∂x_r/∂x̂_c`
    pub j: [[f64; 2]; 2],
    pub det: f64,
    jinv: [[f64; 2]; 2],
}

impl ElementMap {
    pub fn new(x0: Point, j: [[f64; 2]; 2]) -> Option<Self> {
        let det = j[0][0] * j[1][1] - j[0][1] * j[1][0];
        if det <= 0.0 || !det.is_finite() {
            return None;
        }
        let jinv = [[j[1][1] / det, -j[0][1] / det], [-j[1][0] / det, j[0][0] / det]];
        Some(ElementMap { x0, j, det, jinv })
    }

    pub fn from_triangle(p: [Point; 3]) -> Option<Self> {
        ElementMap::new(p[0], [[p[1][0] - p[0][0], p[2][0] - p[0][0]], [p[1][1] - p[0][1], p[2][1] - p[0][1]]])
    }

    pub fn map(&self, xh: [f64; 2]) -> Point {
        [
            self.x0[0] + self.j[0][0] * xh[0] + self.j[0][1] * xh[1],
            self.x0[1] + self.j[1][0] * xh[0] + self.j[1][1] * xh[1],
        ]
    }

    pub fn inverse(&self, x: Point) -> [f64; 2] {
        let d = [x[0] - self.x0[0], x[1] - self.x0[1]];
        [self.jinv[0][0] * d[0] + self.jinv[0][1] * d[1], self.jinv[1][0] * d[0] + self.jinv[1][1] * d[1]]
    }

    /// Covariant pullback inverse for 1-forms: `α = J⁻ᵀ α̂`.
    pub fn covariant(&self, a: [f64; 2]) -> [f64; 2] {
        [self.jinv[0][0] * a[0] + self.jinv[1][0] * a[1], self.jinv[0][1] * a[0] + self.jinv[1][1] * a[1]]
    }

    /// Contravariant Piola transform of a reference vector: `u = J û / det J`.
    pub fn piola_map_velocity(&self, uh: [f64; 2]) -> [f64; 2] {
        [
            (self.j[0][0] * uh[0] + self.j[0][1] * uh[1]) / self.det,
            (self.j[1][0] * uh[0] + self.j[1][1] * uh[1]) / self.det,
        ]
    }
}

pub fn piola_map_velocity(e: &ElementMap, reference_values: &[[f64; 2]]) -> Vec<[f64; 2]> {
    reference_values.iter().map(|&u| e.piola_map_velocity(u)).collect()
}

/// Affine sub-element of a cell; cell basis functions restricted to it are
/// fixed combinations of the reference basis.
#[derive(Clone, Debug)]
pub struct Piece {
    pub shape: RefShape,
    pub map: ElementMap,
    /// Combination matrices `T_k` (row-major `n_cell_k × n_ref_k`).
    t: [Vec<f64>; 3],
}

impl Piece {
    /// Physical (unwrapped) corner coordinates, counterclockwise.
    pub fn polygon(&self) -> Vec<Point> {
        self.shape.vertices().iter().map(|&v| self.map.map(v)).collect()
    }
}

/// Values of every cell-local basis function at one point.
#[derive(Clone, Debug, Default)]
pub struct LocalValues {
    pub phi0: Vec<f64>,
    pub dphi0: Vec<[f64; 2]>,
    pub phi1: Vec<[f64; 2]>,
    pub div1: Vec<f64>,
    pub phi2: Vec<f64>,
}

#[derive(Clone, Debug)]
pub struct SpaceComplex {
    mesh: Mesh,
    family: Family,
    refel: RefElement,
    nloc: [usize; 3],
    n: [usize; 3],
    cell_dofs: [Vec<usize>; 3],
    pieces: Vec<Vec<Piece>>,
    /// Per cell: scale turning topological `d12` rows into densities.
    cell_scale: Vec<f64>,
    // quadrature tabulation, flattened over all cells
    qp_range: Vec<Range<usize>>,
    qp_w: Vec<f64>,
    qp_x: Vec<Point>,
    qp_cell: Vec<usize>,
    tab_phi0: Vec<f64>,
    tab_dphi0: Vec<[f64; 2]>,
    tab_phi1: Vec<[f64; 2]>,
    tab_div1: Vec<f64>,
    tab_phi2: Vec<f64>,
    pub m0: CsrMatrix,
    pub m1: CsrMatrix,
    pub m2: CsrMatrix,
    pub d01: CsrMatrix,
    /// Topological (metric-free) `C × E` derivative with rational entries.
    pub d12_ref: CsrMatrix,
    /// Density-valued derivative `diag(1/scale)·d12_ref`.
    pub d12: CsrMatrix,
    pub solver: SolverOptions,
}

const TRI_QUAD: usize = 5;
const QUAD_QUAD: usize = 4;

fn quad_order(shape: RefShape) -> usize {
    match shape {
        RefShape::Triangle => TRI_QUAD,
        RefShape::Square => QUAD_QUAD,
    }
}

fn ref_values(refel: &RefElement, piece: &Piece, xh: [f64; 2], nloc: [usize; 3], out: &mut LocalValues) {
    let (s, t) = (xh[0], xh[1]);
    let m = &piece.map;
    let r0: Vec<f64> = refel.basis0.iter().map(|p| p.eval(s, t)).collect();
    let g0: Vec<[f64; 2]> = refel.basis0.iter().map(|p| m.covariant([p.ds().eval(s, t), p.dt().eval(s, t)])).collect();
    let r1: Vec<[f64; 2]> = refel.basis1.iter().map(|p| m.covariant([p[0].eval(s, t), p[1].eval(s, t)])).collect();
    let d1: Vec<f64> = refel.basis1.iter().map(|p| d_poly1(p).eval(s, t) / m.det).collect();
    let r2: Vec<f64> = refel.basis2.iter().map(|p| p.eval(s, t)).collect();
    out.phi0.clear();
    out.dphi0.clear();
    out.phi1.clear();
    out.div1.clear();
    out.phi2.clear();
    for j in 0..nloc[0] {
        let c = comb(&piece.t[0], r0.len(), j);
        out.phi0.push(c.iter().zip(&r0).map(|(a, b)| a * b).sum());
        let g = c.iter().zip(&g0).fold([0.0, 0.0], |acc, (a, b)| [acc[0] + a * b[0], acc[1] + a * b[1]]);
        out.dphi0.push(g);
    }
    for j in 0..nloc[1] {
        let c = comb(&piece.t[1], r1.len(), j);
        let v = c.iter().zip(&r1).fold([0.0, 0.0], |acc, (a, b)| [acc[0] + a * b[0], acc[1] + a * b[1]]);
        out.phi1.push(v);
        out.div1.push(c.iter().zip(&d1).map(|(a, b)| a * b).sum());
    }
    for j in 0..nloc[2] {
        let c = comb(&piece.t[2], r2.len(), j);
        out.phi2.push(c.iter().zip(&r2).map(|(a, b)| a * b).sum());
    }
}

fn comb(t: &[f64], nref: usize, j: usize) -> &[f64] {
    &t[j * nref..(j + 1) * nref]
}

fn diag_t(mult: &[f64]) -> Vec<f64> {
    let n = mult.len();
    let mut t = vec![0.0; n * n];
    for (i, &m) in mult.iter().enumerate() {
        t[i * n + i] = m;
    }
    t
}

struct CellLayout {
    pieces: Vec<Piece>,
    dofs: [Vec<usize>; 3],
    d01: Vec<Vec<f64>>,
    d12: Vec<Vec<f64>>,
    scale: f64,
}

impl SpaceComplex {
    pub fn mesh(&self) -> &Mesh {
        &self.mesh
    }

    pub fn family(&self) -> Family {
        self.family
    }

    pub fn dim(&self, k: usize) -> usize {
        self.n[k]
    }

    pub fn dof_counts(&self) -> (usize, usize, usize) {
        (self.n[0], self.n[1], self.n[2])
    }

    pub fn n_local(&self, k: usize) -> usize {
        self.nloc[k]
    }

    pub fn cell_dofs(&self, k: usize, c: usize) -> &[usize] {
        &self.cell_dofs[k][c * self.nloc[k]..(c + 1) * self.nloc[k]]
    }

    pub fn pieces(&self, c: usize) -> &[Piece] {
        &self.pieces[c]
    }

    pub fn cell_scale(&self, c: usize) -> f64 {
        self.cell_scale[c]
    }

    pub fn reference(&self) -> &RefElement {
        &self.refel
    }

    pub fn mass(&self, k: usize) -> &CsrMatrix {
        match k {
            0 => &self.m0,
            1 => &self.m1,
            2 => &self.m2,
            _ => panic!("form degree must be 0, 1 or 2"),
        }
    }

    /// Index of the piece of cell `c` containing `x` (in the cell's frame).
    pub fn locate(&self, c: usize, x: Point) -> Option<usize> {
        let tol = 1e-10;
        self.pieces[c].iter().position(|p| {
            let xh = p.map.inverse(x);
            match p.shape {
                RefShape::Triangle => xh[0] >= -tol && xh[1] >= -tol && xh[0] + xh[1] <= 1.0 + tol,
                RefShape::Square => (-tol..=1.0 + tol).contains(&xh[0]) && (-tol..=1.0 + tol).contains(&xh[1]),
            }
        })
    }

    /// Basis values of cell `c` at a physical point `x` (in the cell's frame).
    pub fn basis_at_point(&self, c: usize, x: Point) -> Option<LocalValues> {
        self.locate(c, x).map(|p| self.basis_at(c, p, x))
    }

    /// Basis values of cell `c` at a physical point given in the frame of
    /// `piece`.
    pub fn basis_at(&self, c: usize, piece: usize, x: Point) -> LocalValues {
        let p = &self.pieces[c][piece];
        let mut out = LocalValues::default();
        ref_values(&self.refel, p, p.map.inverse(x), self.nloc, &mut out);
        out
    }

    // quadrature accessors

    pub fn n_qp(&self) -> usize {
        self.qp_w.len()
    }

    pub fn qp_range(&self, c: usize) -> Range<usize> {
        self.qp_range[c].clone()
    }

    pub fn qp_weights(&self) -> &[f64] {
        &self.qp_w
    }

    /// Physical quadrature points, unwrapped in each cell's frame.
    pub fn qp_points(&self) -> &[Point] {
        &self.qp_x
    }

    pub fn qp_cell(&self, q: usize) -> usize {
        self.qp_cell[q]
    }

    pub fn phi0_q(&self, q: usize) -> &[f64] {
        &self.tab_phi0[q * self.nloc[0]..(q + 1) * self.nloc[0]]
    }

    pub fn dphi0_q(&self, q: usize) -> &[[f64; 2]] {
        &self.tab_dphi0[q * self.nloc[0]..(q + 1) * self.nloc[0]]
    }

    pub fn phi1_q(&self, q: usize) -> &[[f64; 2]] {
        &self.tab_phi1[q * self.nloc[1]..(q + 1) * self.nloc[1]]
    }

    pub fn div1_q(&self, q: usize) -> &[f64] {
        &self.tab_div1[q * self.nloc[1]..(q + 1) * self.nloc[1]]
    }

    pub fn phi2_q(&self, q: usize) -> &[f64] {
        &self.tab_phi2[q * self.nloc[2]..(q + 1) * self.nloc[2]]
    }
}

pub fn build_space_complex(mesh: &Mesh, family: Family) -> Result<SpaceComplex> {
    let kind = mesh.kind();
    let refel = match (family, kind) {
        (Family::P1Rt0P0 | Family::P1N0P0, CellKind::Triangle | CellKind::Hexagon) => reference::triangle_whitney(),
        (Family::P1Rt0P0 | Family::P1N0P0, CellKind::Quadrilateral) => reference::square_whitney(),
        (Family::P2Rt1P1dg, CellKind::Triangle) => reference::triangle_second_order(),
        _ => {
            return Err(Error::IncompatibleFamily { family: family.name().into(), kind: kind.name().into() });
        }
    };
    let (nv, ne, nc) = (mesh.n_vertices(), mesh.n_edges(), mesh.n_cells());
    let legs = refel.entities1.iter().filter(|e| matches!(e, Entity::Edge(0, _))).count();
    let v1_int = refel.entities1.iter().filter(|e| matches!(e, Entity::Interior(_))).count();
    let v0_edge = refel.entities0.iter().filter(|e| matches!(e, Entity::Edge(0, _))).count();
    let (nloc, n) = match kind {
        CellKind::Hexagon => ([6, 6, 1], [nv, ne, nc]),
        _ => (
            [refel.basis0.len(), refel.basis1.len(), refel.basis2.len()],
            [nv + v0_edge * ne, legs * ne + v1_int * nc, refel.basis2.len() * nc],
        ),
    };

    let mut layouts = Vec::with_capacity(nc);
    for c in 0..nc {
        let lay = match kind {
            CellKind::Hexagon => hex_layout(mesh, c)?,
            _ => single_piece_layout(mesh, &refel, c, nloc, legs, v1_int)?,
        };
        layouts.push(lay);
    }

    // derivative matrices: edge-shared rows come from the lowest-id cell
    let mut t01 = Triplets::new(n[1], n[0]);
    let mut row_done = vec![false; n[1]];
    let mut t12 = Triplets::new(n[2], n[1]);
    let mut t12s = Triplets::new(n[2], n[1]);
    for lay in &layouts {
        for (m, &g1) in lay.dofs[1].iter().enumerate() {
            if row_done[g1] {
                continue;
            }
            row_done[g1] = true;
            for (j, &g0) in lay.dofs[0].iter().enumerate() {
                let v = lay.d01[m][j];
                if v != 0.0 {
                    t01.push(g1, g0, v);
                }
            }
        }
        for (m, &g2) in lay.dofs[2].iter().enumerate() {
            for (j, &g1) in lay.dofs[1].iter().enumerate() {
                let v = lay.d12[m][j];
                if v != 0.0 {
                    t12.push(g2, g1, v);
                    t12s.push(g2, g1, v / lay.scale);
                }
            }
        }
    }

    let mut sc = SpaceComplex {
        mesh: mesh.clone(),
        family,
        refel,
        nloc,
        n,
        cell_dofs: [Vec::new(), Vec::new(), Vec::new()],
        pieces: Vec::with_capacity(nc),
        cell_scale: Vec::with_capacity(nc),
        qp_range: Vec::with_capacity(nc),
        qp_w: Vec::new(),
        qp_x: Vec::new(),
        qp_cell: Vec::new(),
        tab_phi0: Vec::new(),
        tab_dphi0: Vec::new(),
        tab_phi1: Vec::new(),
        tab_div1: Vec::new(),
        tab_phi2: Vec::new(),
        m0: CsrMatrix::zeros(0, 0),
        m1: CsrMatrix::zeros(0, 0),
        m2: CsrMatrix::zeros(0, 0),
        d01: t01.to_csr(),
        d12_ref: t12.to_csr(),
        d12: t12s.to_csr(),
        solver: SolverOptions { rtol: 1e-13, atol: 0.0, max_iter: None },
    };
    let mut vals = LocalValues::default();
    for (c, lay) in layouts.into_iter().enumerate() {
        let start = sc.qp_w.len();
        for p in &lay.pieces {
            for (xh, w) in p.shape.quadrature(quad_order(p.shape)) {
                ref_values(&sc.refel, p, xh, nloc, &mut vals);
                sc.qp_w.push(w * p.map.det);
                sc.qp_x.push(p.map.map(xh));
                sc.qp_cell.push(c);
                sc.tab_phi0.extend_from_slice(&vals.phi0);
                sc.tab_dphi0.extend_from_slice(&vals.dphi0);
                sc.tab_phi1.extend_from_slice(&vals.phi1);
                sc.tab_div1.extend_from_slice(&vals.div1);
                sc.tab_phi2.extend_from_slice(&vals.phi2);
            }
        }
        sc.qp_range.push(start..sc.qp_w.len());
        for k in 0..3 {
            sc.cell_dofs[k].extend_from_slice(&lay.dofs[k]);
        }
        sc.pieces.push(lay.pieces);
        sc.cell_scale.push(lay.scale);
    }
    let ones = vec![1.0; sc.n_qp()];
    sc.m0 = sc.weighted_mass0(&ones);
    sc.m1 = sc.weighted_mass1(&ones);
    sc.m2 = sc.weighted_mass2(&ones);
    Ok(sc)
}

fn single_piece_layout(mesh: &Mesh, refel: &RefElement, c: usize, nloc: [usize; 3], legs: usize, v1_int: usize) -> Result<CellLayout> {
    let pos = mesh.cell_positions(c);
    let verts = mesh.cell_vertices(c);
    let cell = mesh.cell(c);
    let map = match refel.shape {
        RefShape::Triangle => ElementMap::from_triangle([pos[0], pos[1], pos[2]]),
        RefShape::Square => {
            let tol = 1e-10 * mesh.lx().max(mesh.ly());
            let p2 = [pos[1][0] + pos[3][0] - pos[0][0], pos[1][1] + pos[3][1] - pos[0][1]];
            if (p2[0] - pos[2][0]).abs() > tol || (p2[1] - pos[2][1]).abs() > tol {
                return Err(Error::InvalidMesh(format!("quadrilateral {c} is not a parallelogram (non-affine cells are unsupported)")));
            }
            ElementMap::new(pos[0], [[pos[1][0] - pos[0][0], pos[3][0] - pos[0][0]], [pos[1][1] - pos[0][1], pos[3][1] - pos[0][1]]])
        }
    }
    .ok_or(Error::ZeroAreaElement(c))?;

    let (nv, ne) = (mesh.n_vertices(), mesh.n_edges());
    let mut dofs = [Vec::new(), Vec::new(), Vec::new()];
    let mut mult = [Vec::new(), Vec::new(), Vec::new()];
    for e in &refel.entities0 {
        let (g, s) = match *e {
            Entity::Vertex(k) => (verts[k], 1.0),
            Entity::Edge(k, _) => (nv + cell.edges[k].0, 1.0),
            Entity::Interior(_) => unreachable!("no interior V0 DOFs"),
        };
        dofs[0].push(g);
        mult[0].push(s);
    }
    for e in &refel.entities1 {
        let (g, s) = match *e {
            Entity::Edge(k, leg) => {
                let (ge, sign) = cell.edges[k];
                // L0 moments flip with orientation, L1 moments do not
                let s = if leg % 2 == 0 { sign as f64 } else { 1.0 };
                (legs * ge + leg, s)
            }
            Entity::Interior(m) => (legs * ne + v1_int * c + m, 1.0),
            Entity::Vertex(_) => unreachable!("no vertex V1 DOFs"),
        };
        dofs[1].push(g);
        mult[1].push(s);
    }
    for e in &refel.entities2 {
        match *e {
            Entity::Interior(m) => {
                dofs[2].push(nloc[2] * c + m);
                mult[2].push(1.0);
            }
            _ => unreachable!("V2 DOFs are interior"),
        }
    }
    let d01 = (0..nloc[1]).map(|m| (0..nloc[0]).map(|j| mult[1][m] * mult[0][j] * refel.d01[m][j]).collect()).collect();
    let d12 = (0..nloc[2]).map(|m| (0..nloc[1]).map(|j| mult[2][m] * mult[1][j] * refel.d12[m][j]).collect()).collect();
    let piece = Piece {
        shape: refel.shape,
        map,
        t: [diag_t(&mult[0]), diag_t(&mult[1]), diag_t(&mult[2])],
    };
    Ok(CellLayout { pieces: vec![piece], dofs, d01, d12, scale: map.det })
}

/// Six-triangle macro element around the vertex mean of a hexagon. The
/// centre value of a 0-form is the mean of the vertex values; spoke fluxes of
/// a 1-form make its divergence constant on the hexagon, with the spoke sum
/// fixed to zero.
fn hex_layout(mesh: &Mesh, c: usize) -> Result<CellLayout> {
    let pos = mesh.cell_positions(c);
    let verts = mesh.cell_vertices(c);
    let cell = mesh.cell(c);
    let nk = pos.len();
    if nk != 6 {
        return Err(Error::InvalidMesh(format!("hexagonal mesh cell {c} has {nk} edges")));
    }
    let cen = [pos.iter().map(|p| p[0]).sum::<f64>() / 6.0, pos.iter().map(|p| p[1]).sum::<f64>() / 6.0];
    let mut maps = Vec::with_capacity(6);
    for i in 0..6 {
        maps.push(ElementMap::from_triangle([pos[i], pos[(i + 1) % 6], cen]).ok_or(Error::ZeroAreaElement(c))?);
    }
    let areas: Vec<f64> = maps.iter().map(|m| 0.5 * m.det).collect();
    let area: f64 = areas.iter().sum();
    let signs: Vec<f64> = cell.edges.iter().map(|&(_, s)| s as f64).collect();

    // spokes[j][k]: line integral from the centre to vertex k of basis j
    let mut spokes = vec![[0.0; 6]; 6];
    for j in 0..6 {
        let mut r = [0.0; 6];
        for i in 0..5 {
            let o = if i == j { signs[j] } else { 0.0 };
            r[i + 1] = r[i] + o - areas[i] * signs[j] / area;
        }
        let shift = r.iter().sum::<f64>() / 6.0;
        for k in 0..6 {
            spokes[j][k] = r[k] - shift;
        }
    }

    let mut pieces = Vec::with_capacity(6);
    for (i, &map) in maps.iter().enumerate() {
        let ip = (i + 1) % 6;
        let mut t0 = vec![0.0; 6 * 3];
        let mut t1 = vec![0.0; 6 * 3];
        for j in 0..6 {
            t0[j * 3] = if j == i { 1.0 } else { 0.0 };
            t0[j * 3 + 1] = if j == ip { 1.0 } else { 0.0 };
            t0[j * 3 + 2] = 1.0 / 6.0;
            t1[j * 3] = if j == i { signs[j] } else { 0.0 };
            t1[j * 3 + 1] = -spokes[j][ip];
            t1[j * 3 + 2] = spokes[j][i];
        }
        pieces.push(Piece { shape: RefShape::Triangle, map, t: [t0, t1, vec![1.0]] });
    }
    let mut d01 = vec![vec![0.0; 6]; 6];
    for m in 0..6 {
        d01[m][m] = -signs[m];
        d01[m][(m + 1) % 6] = signs[m];
    }
    let d12 = vec![signs.clone()];
    Ok(CellLayout {
        pieces,
        dofs: [verts.to_vec(), cell.edges.iter().map(|&(e, _)| e).collect(), vec![c]],
        d01,
        d12,
        scale: area,
    })
}

fn dot2(a: [f64; 2], b: [f64; 2]) -> f64 {
    a[0] * b[0] + a[1] * b[1]
}

/// `a ∧ b` for 1-forms in components.
pub fn wedge(a: [f64; 2], b: [f64; 2]) -> f64 {
    a[0] * b[1] - a[1] * b[0]
}

/// Flux 1-form of a velocity vector.
pub fn flux_form(u: [f64; 2]) -> [f64; 2] {
    [-u[1], u[0]]
}

/// Velocity vector of a flux 1-form.
pub fn flux_velocity(a: [f64; 2]) -> [f64; 2] {
    [a[1], -a[0]]
}

impl SpaceComplex {
    fn assemble<F: Fn(usize, usize, usize) -> f64>(&self, k: usize, l: usize, entry: F) -> CsrMatrix {
        let (nk, nl) = (self.nloc[k], self.nloc[l]);
        let mut t = Triplets::new(self.n[k], self.n[l]);
        for c in 0..self.mesh.n_cells() {
            let mut local = vec![0.0; nk * nl];
            for q in self.qp_range(c) {
                for i in 0..nk {
                    for j in 0..nl {
                        local[i * nl + j] += entry(q, i, j);
                    }
                }
            }
            let (ri, cj) = (self.cell_dofs(k, c), self.cell_dofs(l, c));
            for i in 0..nk {
                for j in 0..nl {
                    t.push(ri[i], cj[j], local[i * nl + j]);
                }
            }
        }
        t.to_csr()
    }

    /// `∫ w φ_i φ_j` over V⁰ with `w` given at quadrature points.
    pub fn weighted_mass0(&self, w: &[f64]) -> CsrMatrix {
        self.assemble(0, 0, |q, i, j| self.qp_w[q] * w[q] * self.phi0_q(q)[i] * self.phi0_q(q)[j])
    }

    pub fn weighted_mass1(&self, w: &[f64]) -> CsrMatrix {
        self.assemble(1, 1, |q, i, j| self.qp_w[q] * w[q] * dot2(self.phi1_q(q)[i], self.phi1_q(q)[j]))
    }

    pub fn weighted_mass2(&self, w: &[f64]) -> CsrMatrix {
        self.assemble(2, 2, |q, i, j| self.qp_w[q] * w[q] * self.phi2_q(q)[i] * self.phi2_q(q)[j])
    }

    /// `∫ a_i ∧ a_j` on V¹.
    pub fn wedge_matrix1(&self) -> CsrMatrix {
        self.assemble(1, 1, |q, i, j| self.qp_w[q] * wedge(self.phi1_q(q)[i], self.phi1_q(q)[j]))
    }

    // evaluation at quadrature points

    fn eval_scalar(&self, k: usize, coeffs: &[f64], tab: impl Fn(usize) -> Vec<f64>) -> Vec<f64> {
        let mut out = vec![0.0; self.n_qp()];
        for c in 0..self.mesh.n_cells() {
            let dofs = self.cell_dofs(k, c);
            for q in self.qp_range(c) {
                let b = tab(q);
                out[q] = dofs.iter().zip(&b).map(|(&g, v)| coeffs[g] * v).sum();
            }
        }
        out
    }

    fn eval_vector<'a>(&'a self, k: usize, coeffs: &[f64], tab: impl Fn(usize) -> &'a [[f64; 2]]) -> Vec<[f64; 2]> {
        let mut out = vec![[0.0; 2]; self.n_qp()];
        for c in 0..self.mesh.n_cells() {
            let dofs = self.cell_dofs(k, c);
            for q in self.qp_range(c) {
                let b = tab(q);
                let mut v = [0.0; 2];
                for (&g, bv) in dofs.iter().zip(b) {
                    v[0] += coeffs[g] * bv[0];
                    v[1] += coeffs[g] * bv[1];
                }
                out[q] = v;
            }
        }
        out
    }

    pub fn eval0(&self, c: &[f64]) -> Vec<f64> {
        self.eval_scalar(0, c, |q| self.phi0_q(q).to_vec())
    }

    pub fn grad0(&self, c: &[f64]) -> Vec<[f64; 2]> {
        self.eval_vector(0, c, |q| self.dphi0_q(q))
    }

    pub fn eval1(&self, c: &[f64]) -> Vec<[f64; 2]> {
        self.eval_vector(1, c, |q| self.phi1_q(q))
    }

    pub fn div1(&self, c: &[f64]) -> Vec<f64> {
        self.eval_scalar(1, c, |q| self.div1_q(q).to_vec())
    }

    pub fn eval2(&self, c: &[f64]) -> Vec<f64> {
        self.eval_scalar(2, c, |q| self.phi2_q(q).to_vec())
    }

    // loads: integrals of a quadrature-point field against every basis function

    fn load_scalar(&self, k: usize, f: impl Fn(usize, usize) -> f64) -> Vec<f64> {
        let mut out = vec![0.0; self.n[k]];
        for c in 0..self.mesh.n_cells() {
            let dofs = self.cell_dofs(k, c);
            for q in self.qp_range(c) {
                for (i, &g) in dofs.iter().enumerate() {
                    out[g] += self.qp_w[q] * f(q, i);
                }
            }
        }
        out
    }

    /// `∫ f γ_i`
    pub fn load0(&self, f: &[f64]) -> Vec<f64> {
        self.load_scalar(0, |q, i| f[q] * self.phi0_q(q)[i])
    }

    /// `∫ dγ_i · v`
    pub fn load0_grad(&self, v: &[[f64; 2]]) -> Vec<f64> {
        self.load_scalar(0, |q, i| dot2(self.dphi0_q(q)[i], v[q]))
    }

    /// `∫ dγ_i ∧ v`
    pub fn load0_grad_wedge(&self, v: &[[f64; 2]]) -> Vec<f64> {
        self.load_scalar(0, |q, i| wedge(self.dphi0_q(q)[i], v[q]))
    }

    /// `∫ a_i · v`
    pub fn load1(&self, v: &[[f64; 2]]) -> Vec<f64> {
        self.load_scalar(1, |q, i| dot2(self.phi1_q(q)[i], v[q]))
    }

    /// `∫ a_i ∧ v`
    pub fn load1_wedge(&self, v: &[[f64; 2]]) -> Vec<f64> {
        self.load_scalar(1, |q, i| wedge(self.phi1_q(q)[i], v[q]))
    }

    /// `∫ f d(a_i)`
    pub fn load1_div(&self, f: &[f64]) -> Vec<f64> {
        self.load_scalar(1, |q, i| f[q] * self.div1_q(q)[i])
    }

    /// `∫ f ω_i`
    pub fn load2(&self, f: &[f64]) -> Vec<f64> {
        self.load_scalar(2, |q, i| f[q] * self.phi2_q(q)[i])
    }

    pub fn integrate(&self, f: &[f64]) -> f64 {
        f.iter().zip(&self.qp_w).map(|(a, w)| a * w).sum()
    }

    /// Per-cell integrals of a quadrature-point field.
    pub fn integrate_cells(&self, f: &[f64]) -> Vec<f64> {
        (0..self.mesh.n_cells()).map(|c| self.qp_range(c).map(|q| f[q] * self.qp_w[q]).sum()).collect()
    }

    /// Solve `M_k x = b` by Jacobi-preconditioned CG.
    pub fn solve_mass(&self, k: usize, b: &[f64]) -> Result<(Vec<f64>, SolveStats)> {
        pcg(self.mass(k), b, None, self.solver)
    }

    /// Coefficients `c` with `M_k c = ∫ field·basis`, the field evaluated at
    /// wrapped physical coordinates.
    pub fn project_scalar(&self, k: usize, field: impl Fn(Point) -> f64) -> Result<FormCoeffs> {
        let f: Vec<f64> = self.qp_x.iter().map(|&x| field(self.mesh.wrap(x))).collect();
        let load = match k {
            0 => self.load0(&f),
            2 => self.load2(&f),
            _ => return Err(Error::WrongSpace { expected: 0, got: k }),
        };
        Ok(FormCoeffs::new(k, self.solve_mass(k, &load)?.0))
    }

    /// L2 projection of a 1-form given by its components.
    pub fn project_one_form(&self, field: impl Fn(Point) -> [f64; 2]) -> Result<FormCoeffs> {
        let v: Vec<[f64; 2]> = self.qp_x.iter().map(|&x| field(self.mesh.wrap(x))).collect();
        Ok(FormCoeffs::new(1, self.solve_mass(1, &self.load1(&v))?.0))
    }

    /// Lowest-order interpolation of a 1-form: line integrals along edges.
    pub fn interpolate_one_form(&self, field: impl Fn(Point) -> [f64; 2]) -> Result<FormCoeffs> {
        if !self.family.is_whitney() {
            return Err(Error::IncompatibleFamily { family: self.family.name().into(), kind: "edge interpolation".into() });
        }
        let g = crate::poly::gauss_legendre01(6);
        let m = &self.mesh;
        let vals = (0..m.n_edges())
            .map(|e| {
                let a = m.vertices()[m.edge(e).v[0]];
                let t = m.edge_vector(e);
                g.iter()
                    .map(|&(s, w)| {
                        let f = field(m.wrap([a[0] + s * t[0], a[1] + s * t[1]]));
                        w * dot2(f, t)
                    })
                    .sum()
            })
            .collect();
        Ok(FormCoeffs::new(1, vals))
    }
}

/// L2 projection of an analytic field into `V^k`; for `k = 1` the closure
/// returns 1-form components.
pub fn project_l2(space: &SpaceComplex, k: usize, field: &AnalyticField) -> Result<FormCoeffs> {
    match (k, field) {
        (0 | 2, AnalyticField::Scalar(f)) => space.project_scalar(k, f),
        (1, AnalyticField::OneForm(f)) => space.project_one_form(f),
        _ => Err(Error::WrongSpace { expected: k, got: if matches!(field, AnalyticField::Scalar(_)) { 0 } else { 1 } }),
    }
}

pub enum AnalyticField<'a> {
    Scalar(&'a dyn Fn(Point) -> f64),
    OneForm(&'a dyn Fn(Point) -> [f64; 2]),
}

#[cfg(test)]
mod tests;
