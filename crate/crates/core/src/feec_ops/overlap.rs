//! Integration over the intersection cells of a primal and a dual complex.
//!
//! Both complexes tile the same periodic box. Every primal piece is clipped
//! against every nearby periodic image of every dual piece (convex clipping);
//! the overlap polygons are fan-triangulated and integrated with the
//! collapsed Gauss rule, so pairings of piecewise polynomials are exact.

use std::collections::BTreeSet;

use crate::femspaces::{wedge, SpaceComplex};
use crate::linalg::{CsrMatrix, Triplets};
use crate::mesh::Point;
use crate::poly::RefShape;

fn cross(o: Point, a: Point, b: Point) -> f64 {
    (a[0] - o[0]) * (b[1] - o[1]) - (a[1] - o[1]) * (b[0] - o[0])
}

pub fn polygon_area(p: &[Point]) -> f64 {
    let n = p.len();
    (0..n).map(|i| p[i][0] * p[(i + 1) % n][1] - p[(i + 1) % n][0] * p[i][1]).sum::<f64>() * 0.5
}

/// Sutherland–Hodgman clip of `subject` by the convex counterclockwise
/// polygon `clip`.
pub fn clip_convex(subject: &[Point], clip: &[Point]) -> Vec<Point> {
    let mut out: Vec<Point> = subject.to_vec();
    let n = clip.len();
    for i in 0..n {
        if out.is_empty() {
            break;
        }
        let (a, b) = (clip[i], clip[(i + 1) % n]);
        let input = std::mem::take(&mut out);
        let m = input.len();
        for j in 0..m {
            let p = input[j];
            let q = input[(j + 1) % m];
            let cp = cross(a, b, p);
            let cq = cross(a, b, q);
            if cp >= 0.0 {
                out.push(p);
            }
            if (cp >= 0.0) != (cq >= 0.0) {
                let t = cp / (cp - cq);
                out.push([p[0] + t * (q[0] - p[0]), p[1] + t * (q[1] - p[1])]);
            }
        }
    }
    out
}

/// Quadrature points and weights on a convex polygon.
pub fn polygon_quadrature(p: &[Point], n: usize) -> Vec<(Point, f64)> {
    let rule = RefShape::Triangle.quadrature(n);
    let mut out = Vec::new();
    for k in 1..p.len().saturating_sub(1) {
        let (a, b, c) = (p[0], p[k], p[k + 1]);
        let det = cross(a, b, c);
        if det <= 0.0 {
            continue;
        }
        for (xh, w) in &rule {
            let x = [
                a[0] + xh[0] * (b[0] - a[0]) + xh[1] * (c[0] - a[0]),
                a[1] + xh[0] * (b[1] - a[1]) + xh[1] * (c[1] - a[1]),
            ];
            out.push((x, w * det));
        }
    }
    out
}

fn bbox(p: &[Point]) -> [f64; 4] {
    let mut b = [f64::INFINITY, f64::INFINITY, f64::NEG_INFINITY, f64::NEG_INFINITY];
    for q in p {
        b[0] = b[0].min(q[0]);
        b[1] = b[1].min(q[1]);
        b[2] = b[2].max(q[0]);
        b[3] = b[3].max(q[1]);
    }
    b
}

fn centroid(p: &[Point]) -> Point {
    let n = p.len() as f64;
    [p.iter().map(|q| q[0]).sum::<f64>() / n, p.iter().map(|q| q[1]).sum::<f64>() / n]
}

/// One piece of the common refinement of the two complexes.
pub struct OverlapCell {
    pub primal_cell: usize,
    pub primal_piece: usize,
    pub dual_cell: usize,
    pub dual_piece: usize,
    /// Add to primal-frame coordinates to get dual-frame coordinates.
    pub shift: Point,
    pub polygon: Vec<Point>,
}

/// Common refinement of the pieces of two complexes on the same torus.
pub fn common_refinement(primal: &SpaceComplex, dual: &SpaceComplex) -> Vec<OverlapCell> {
    let mesh = primal.mesh();
    let (lx, ly) = (mesh.lx(), mesh.ly());
    struct P {
        cell: usize,
        piece: usize,
        poly: Vec<Point>,
        bb: [f64; 4],
        cen: Point,
    }
    let collect = |s: &SpaceComplex| -> Vec<P> {
        let mut v = Vec::new();
        for c in 0..s.mesh().n_cells() {
            for (k, p) in s.pieces(c).iter().enumerate() {
                let poly = p.polygon();
                let bb = bbox(&poly);
                let cen = centroid(&poly);
                v.push(P { cell: c, piece: k, poly, bb, cen });
            }
        }
        v
    };
    let ps = collect(primal);
    let ds = collect(dual);
    let diam = ps.iter().chain(&ds).map(|p| (p.bb[2] - p.bb[0]).max(p.bb[3] - p.bb[1])).fold(0.0, f64::max);
    let nbx = ((lx / diam).floor() as usize).max(1);
    let nby = ((ly / diam).floor() as usize).max(1);
    let bin_of = |x: Point| -> (usize, usize) {
        let w = mesh.wrap(x);
        (((w[0] / lx * nbx as f64) as usize).min(nbx - 1), ((w[1] / ly * nby as f64) as usize).min(nby - 1))
    };
    let mut bins: Vec<Vec<usize>> = vec![Vec::new(); nbx * nby];
    for (i, d) in ds.iter().enumerate() {
        let (bx, by) = bin_of(d.cen);
        bins[by * nbx + bx].push(i);
    }
    let reach = 2i64;
    let mut out = Vec::new();
    for p in &ps {
        let (bx, by) = bin_of(p.cen);
        let mut cand = BTreeSet::new();
        for dy in -reach..=reach {
            for dx in -reach..=reach {
                let x = (bx as i64 + dx).rem_euclid(nbx as i64) as usize;
                let y = (by as i64 + dy).rem_euclid(nby as i64) as usize;
                cand.extend(bins[y * nbx + x].iter().copied());
            }
        }
        for &i in &cand {
            let d = &ds[i];
            let base = [((p.cen[0] - d.cen[0]) / lx).round(), ((p.cen[1] - d.cen[1]) / ly).round()];
            for sy in -1..=1 {
                for sx in -1..=1 {
                    let off = [(base[0] + sx as f64) * lx, (base[1] + sy as f64) * ly];
                    let db = [d.bb[0] + off[0], d.bb[1] + off[1], d.bb[2] + off[0], d.bb[3] + off[1]];
                    if db[0] >= p.bb[2] || db[2] <= p.bb[0] || db[1] >= p.bb[3] || db[3] <= p.bb[1] {
                        continue;
                    }
                    let dpoly: Vec<Point> = d.poly.iter().map(|q| [q[0] + off[0], q[1] + off[1]]).collect();
                    let inter = clip_convex(&p.poly, &dpoly);
                    if inter.len() < 3 || polygon_area(&inter) <= 1e-14 * diam * diam {
                        continue;
                    }
                    out.push(OverlapCell {
                        primal_cell: p.cell,
                        primal_piece: p.piece,
                        dual_cell: d.cell,
                        dual_piece: d.piece,
                        shift: [-off[0], -off[1]],
                        polygon: inter,
                    });
                }
            }
        }
    }
    out
}

/// Cross-mesh pairing matrices.
#[derive(Clone, Debug)]
pub struct CrossPairing {
    /// `∫ γ_i ω_j`, `γ ∈ V²_p`, `ω ∈ V⁰_d`
    pub w0: CsrMatrix,
    /// `∫ γ_i ∧ ω_j`, `γ ∈ V¹_p`, `ω ∈ V¹_d`
    pub w1: CsrMatrix,
    /// `∫ γ_i ω_j`, `γ ∈ V⁰_p`, `ω ∈ V²_d`
    pub w2: CsrMatrix,
    /// `∫ ψ_i ω_j`, `ψ ∈ V²_d`, `ω ∈ V²_p`
    pub w22: CsrMatrix,
    /// Total area of the common refinement.
    pub area: f64,
}

pub fn cross_pairing(primal: &SpaceComplex, dual: &SpaceComplex) -> CrossPairing {
    let cells = common_refinement(primal, dual);
    let mut t0 = Triplets::new(primal.dim(2), dual.dim(0));
    let mut t1 = Triplets::new(primal.dim(1), dual.dim(1));
    let mut t2 = Triplets::new(primal.dim(0), dual.dim(2));
    let mut t22 = Triplets::new(dual.dim(2), primal.dim(2));
    let mut area = 0.0;
    for oc in &cells {
        let (pd0, pd1, pd2) = (primal.cell_dofs(0, oc.primal_cell), primal.cell_dofs(1, oc.primal_cell), primal.cell_dofs(2, oc.primal_cell));
        let (dd0, dd1, dd2) = (dual.cell_dofs(0, oc.dual_cell), dual.cell_dofs(1, oc.dual_cell), dual.cell_dofs(2, oc.dual_cell));
        let mut l0 = vec![0.0; pd2.len() * dd0.len()];
        let mut l1 = vec![0.0; pd1.len() * dd1.len()];
        let mut l2 = vec![0.0; pd0.len() * dd2.len()];
        let mut l22 = vec![0.0; dd2.len() * pd2.len()];
        for (x, w) in polygon_quadrature(&oc.polygon, 4) {
            area += w;
            let pv = primal.basis_at(oc.primal_cell, oc.primal_piece, x);
            let dv = dual.basis_at(oc.dual_cell, oc.dual_piece, [x[0] + oc.shift[0], x[1] + oc.shift[1]]);
            for (i, a) in pv.phi2.iter().enumerate() {
                for (j, b) in dv.phi0.iter().enumerate() {
                    l0[i * dd0.len() + j] += w * a * b;
                }
            }
            for (i, a) in pv.phi1.iter().enumerate() {
                for (j, b) in dv.phi1.iter().enumerate() {
                    l1[i * dd1.len() + j] += w * wedge(*a, *b);
                }
            }
            for (i, a) in pv.phi0.iter().enumerate() {
                for (j, b) in dv.phi2.iter().enumerate() {
                    l2[i * dd2.len() + j] += w * a * b;
                }
            }
            for (i, a) in dv.phi2.iter().enumerate() {
                for (j, b) in pv.phi2.iter().enumerate() {
                    l22[i * pd2.len() + j] += w * a * b;
                }
            }
        }
        for (i, &gi) in pd2.iter().enumerate() {
            for (j, &gj) in dd0.iter().enumerate() {
                t0.push(gi, gj, l0[i * dd0.len() + j]);
            }
        }
        for (i, &gi) in pd1.iter().enumerate() {
            for (j, &gj) in dd1.iter().enumerate() {
                t1.push(gi, gj, l1[i * dd1.len() + j]);
            }
        }
        for (i, &gi) in pd0.iter().enumerate() {
            for (j, &gj) in dd2.iter().enumerate() {
                t2.push(gi, gj, l2[i * dd2.len() + j]);
            }
        }
        for (i, &gi) in dd2.iter().enumerate() {
            for (j, &gj) in pd2.iter().enumerate() {
                t22.push(gi, gj, l22[i * pd2.len() + j]);
            }
        }
    }
    CrossPairing { w0: t0.to_csr(), w1: t1.to_csr(), w2: t2.to_csr(), w22: t22.to_csr(), area }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn clip_squares() {
        let a = [[0.0, 0.0], [2.0, 0.0], [2.0, 2.0], [0.0, 2.0]];
        let b = [[1.0, 1.0], [3.0, 1.0], [3.0, 3.0], [1.0, 3.0]];
        let c = clip_convex(&a, &b);
        assert!((polygon_area(&c) - 1.0).abs() < 1e-15);
        let far = [[5.0, 5.0], [6.0, 5.0], [6.0, 6.0]];
        assert!(clip_convex(&a, &far).len() < 3);
    }

    #[test]
    fn polygon_rule_integrates_quadratics() {
        let p = [[0.0, 0.0], [2.0, 0.0], [2.0, 1.0], [0.5, 1.5], [0.0, 1.0]];
        let q = polygon_quadrature(&p, 3);
        let area: f64 = q.iter().map(|(_, w)| w).sum();
        assert!((area - polygon_area(&p)).abs() < 1e-14);
    }
}
