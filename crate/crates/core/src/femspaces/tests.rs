use super::*;
use crate::mesh::build_periodic_mesh;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn all_complexes(nx: usize, ny: usize) -> Vec<SpaceComplex> {
    let mut out = Vec::new();
    for (kind, fam) in [
        (CellKind::Triangle, Family::P1Rt0P0),
        (CellKind::Quadrilateral, Family::P1Rt0P0),
        (CellKind::Hexagon, Family::P1Rt0P0),
        (CellKind::Triangle, Family::P2Rt1P1dg),
    ] {
        let m = build_periodic_mesh(kind, nx, ny, 1.3, 0.9).unwrap();
        out.push(build_space_complex(&m, fam).unwrap());
    }
    out
}

fn random_vec(n: usize, rng: &mut ChaCha8Rng) -> Vec<f64> {
    (0..n).map(|_| rng.random_range(-1.0..1.0)).collect()
}

#[test]
fn dof_counts() {
    let m = build_periodic_mesh(CellKind::Triangle, 4, 4, 1.0, 1.0).unwrap();
    assert_eq!(build_space_complex(&m, Family::P1Rt0P0).unwrap().dof_counts(), (16, 48, 32));
    let s2 = build_space_complex(&m, Family::P2Rt1P1dg).unwrap();
    assert_eq!(s2.dof_counts(), (16 + 48, 2 * 48 + 2 * 32, 3 * 32));
    let h = build_periodic_mesh(CellKind::Hexagon, 4, 4, 1.0, 1.0).unwrap();
    assert_eq!(build_space_complex(&h, Family::P1Rt0P0).unwrap().dof_counts(), (32, 48, 16));
    assert!(matches!(build_space_complex(&h, Family::P2Rt1P1dg), Err(Error::IncompatibleFamily { .. })));
}

#[test]
fn p0_mass_on_quads_is_cell_area() {
    let m = build_periodic_mesh(CellKind::Quadrilateral, 4, 4, 2.0, 1.0).unwrap();
    let s = build_space_complex(&m, Family::P1Rt0P0).unwrap();
    let d = s.m2.to_dense();
    for i in 0..16 {
        for j in 0..16 {
            let e = if i == j { 0.125 } else { 0.0 };
            assert!((d[(i, j)] - e).abs() < 1e-15);
        }
    }
}

#[test]
fn complex_property_on_random_fields() {
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    for s in all_complexes(3, 4) {
        let psi = random_vec(s.dim(0), &mut rng);
        let u = s.d01.mul_vec(&psi);
        let z = s.d12.mul_vec(&u);
        let nrm = psi.iter().fold(0.0f64, |a, x| a.max(x.abs()));
        assert!(z.iter().all(|x| x.abs() <= 1e-13 * nrm), "{}", s.family());
        // constants are in the kernel of d01
        assert!(s.d01.mul_vec(&vec![1.0; s.dim(0)]).iter().all(|x| x.abs() < 1e-14));
    }
}

#[test]
fn d01_matches_pointwise_gradient() {
    // the tabulated gradient of ψ equals the V¹ field of D01·ψ at every point
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    for s in all_complexes(3, 3) {
        let psi = random_vec(s.dim(0), &mut rng);
        let g = s.grad0(&psi);
        let a = s.eval1(&s.d01.mul_vec(&psi));
        for (x, y) in g.iter().zip(&a) {
            assert!((x[0] - y[0]).abs() < 1e-11 && (x[1] - y[1]).abs() < 1e-11, "{}: {x:?} {y:?}", s.family());
        }
        let w = random_vec(s.dim(1), &mut rng);
        let dv = s.div1(&w);
        let dw = s.eval2(&s.d12.mul_vec(&w));
        for (x, y) in dv.iter().zip(&dw) {
            assert!((x - y).abs() < 1e-10 * (1.0 + x.abs()));
        }
    }
}

#[test]
fn mass_matrices_symmetric_positive_definite() {
    for s in all_complexes(2, 3) {
        for k in 0..3 {
            let m = s.mass(k);
            assert!(m.asymmetry() < 1e-15);
            let chol = nalgebra::Cholesky::new(m.to_dense());
            assert!(chol.is_some(), "M{k} of {} not SPD", s.family());
        }
    }
}

/// Tangential component of a V¹ basis function at a point of edge `e`, seen
/// from each adjacent cell.
fn one_sided(s: &SpaceComplex, e: usize, sigma: f64) -> Vec<(usize, f64, f64)> {
    let m = s.mesh();
    let mut out = Vec::new();
    let t = m.edge_vector(e);
    let [a, b] = m.edge_cells(e);
    let mut sides = Vec::new();
    for (c, k) in [a, b] {
        let pos = m.cell_positions(c);
        let sign = m.cell(c).edges[k].1 as f64;
        let start = if sign > 0.0 { pos[k] } else { pos[(k + 1) % pos.len()] };
        let x = [start[0] + sigma * t[0], start[1] + sigma * t[1]];
        // nudge inside the cell to pick the right piece
        let cen = m.cell_centroid_unwrapped(c);
        let xin = [x[0] + 1e-9 * (cen[0] - x[0]), x[1] + 1e-9 * (cen[1] - x[1])];
        let piece = s.locate(c, xin).unwrap();
        let v = s.basis_at(c, piece, x);
        sides.push((c, v));
    }
    for (i, &g) in s.cell_dofs(1, a.0).iter().enumerate() {
        let va = dot2(t, sides[0].1.phi1[i]);
        let vb = s
            .cell_dofs(1, b.0)
            .iter()
            .position(|&h| h == g)
            .map(|j| dot2(t, sides[1].1.phi1[j]))
            .unwrap_or(0.0);
        out.push((g, va, vb));
    }
    out
}

#[test]
fn normal_flux_continuity() {
    for s in all_complexes(3, 3) {
        for e in 0..s.mesh().n_edges() {
            for sigma in [0.2, 0.5, 0.9] {
                for (g, a, b) in one_sided(&s, e, sigma) {
                    assert!((a - b).abs() < 1e-12 * (1.0 + a.abs()), "{} edge {e} dof {g}: {a} vs {b}", s.family());
                }
            }
        }
    }
}

#[test]
fn piola_examples() {
    let id = ElementMap::new([0.0, 0.0], [[1.0, 0.0], [0.0, 1.0]]).unwrap();
    assert_eq!(id.piola_map_velocity([1.0, 0.0]), [1.0, 0.0]);
    let two = ElementMap::new([0.0, 0.0], [[2.0, 0.0], [0.0, 2.0]]).unwrap();
    assert_eq!(two.piola_map_velocity([1.0, 0.0]), [0.5, 0.0]);
}

#[test]
fn piola_preserves_edge_flux() {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let g = crate::poly::gauss_legendre01(8);
    for _ in 0..20 {
        let j = [[rng.random_range(0.5..2.0), rng.random_range(-0.4..0.4)], [rng.random_range(-0.4..0.4), rng.random_range(0.5..2.0)]];
        let map = ElementMap::new([rng.random_range(-1.0..1.0), 0.3], j).unwrap();
        let c: [f64; 6] = std::array::from_fn(|_| rng.random_range(-1.0..1.0));
        let uh = |x: [f64; 2]| [c[0] + c[1] * x[0] + c[2] * x[1] * x[1], c[3] + c[4] * x[0] * x[1] + c[5] * x[1]];
        // reference hypotenuse from (1,0) to (0,1), normal (1,1) unnormalized
        let (a, b) = ([1.0, 0.0], [0.0, 1.0]);
        let mut fref = 0.0;
        let mut fphys = 0.0;
        let (pa, pb) = (map.map(a), map.map(b));
        let tp = [pb[0] - pa[0], pb[1] - pa[1]];
        for &(s, w) in &g {
            let xh = [a[0] + s * (b[0] - a[0]), a[1] + s * (b[1] - a[1])];
            let u = uh(xh);
            fref += w * (u[0] + u[1]);
            let up = map.piola_map_velocity(u);
            fphys += w * (up[0] * tp[1] - up[1] * tp[0]);
        }
        assert!((fref - fphys).abs() < 1e-13);
    }
}

#[test]
fn projection_reproduces_constants() {
    for s in all_complexes(3, 3) {
        let one = s.project_scalar(0, |_| 1.0).unwrap();
        assert!(one.values.iter().all(|v| (v - 1.0).abs() < 1e-11));
        let c = s.project_scalar(2, |_| 2.5).unwrap();
        assert!(c.values.iter().all(|v| (v - 2.5).abs() < 1e-11));
        // constant 1-forms lie in every V¹ space
        let a = s.project_one_form(|_| [0.3, -0.7]).unwrap();
        for v in s.eval1(&a.values) {
            assert!((v[0] - 0.3).abs() < 1e-10 && (v[1] + 0.7).abs() < 1e-10, "{}: {v:?}", s.family());
        }
        // uniform flow is divergence free
        assert!(s.d12.mul_vec(&a.values).iter().all(|x| x.abs() < 1e-9));
    }
}

#[test]
fn projection_converges_at_second_order() {
    let f = |x: Point| (2.0 * std::f64::consts::PI * x[0]).sin();
    let mut errs = Vec::new();
    for n in [8, 16, 32] {
        let m = build_periodic_mesh(CellKind::Triangle, n, n, 1.0, 1.0).unwrap();
        let s = build_space_complex(&m, Family::P1Rt0P0).unwrap();
        let p = s.project_scalar(0, f).unwrap();
        let v = s.eval0(&p.values);
        let e2: Vec<f64> = v.iter().zip(s.qp_points()).map(|(a, x)| (a - f(*x)).powi(2)).collect();
        errs.push(s.integrate(&e2).sqrt());
    }
    for w in errs.windows(2) {
        let slope = (w[0] / w[1]).log2();
        assert!((slope - 2.0).abs() < 0.3, "slope {slope}");
    }
}

#[test]
fn patch_test_linear_scalar() {
    // interpolate a linear function at the vertices of one cell and compare
    // the gradient with its flux-proxy DOFs (edge differences)
    let m = build_periodic_mesh(CellKind::Triangle, 4, 4, 1.0, 1.0).unwrap();
    let s = build_space_complex(&m, Family::P1Rt0P0).unwrap();
    let (gx, gy) = (0.7, -1.9);
    for c in 0..m.n_cells() {
        let pos = m.cell_positions(c);
        let vals: Vec<f64> = pos.iter().map(|p| gx * p[0] + gy * p[1]).collect();
        let d01 = s.d01.to_dense();
        for (k, &(e, sign)) in m.cell(c).edges.iter().enumerate() {
            let t = m.edge_vector(e);
            let expect = gx * t[0] + gy * t[1];
            let local: Vec<usize> = s.cell_dofs(0, c).to_vec();
            let got: f64 = local.iter().enumerate().map(|(j, &g)| d01[(e, g)] * vals[j]).sum();
            let _ = (k, sign);
            assert!((got - expect).abs() < 1e-13);
        }
    }
}

#[test]
fn derivative_matrices_are_metric_free() {
    for kind in [CellKind::Triangle, CellKind::Quadrilateral, CellKind::Hexagon] {
        let m = build_periodic_mesh(kind, 3, 4, 1.0, 1.0).unwrap();
        let fam = Family::P1Rt0P0;
        let a = build_space_complex(&m, fam).unwrap();
        let b = build_space_complex(&m.scaled(3.7).unwrap(), fam).unwrap();
        assert_eq!(a.d01, b.d01);
        assert_eq!(a.d12_ref, b.d12_ref);
        assert_ne!(a.m1, b.m1);
    }
    let m = build_periodic_mesh(CellKind::Triangle, 3, 3, 1.0, 1.0).unwrap();
    let a = build_space_complex(&m, Family::P2Rt1P1dg).unwrap();
    let b = build_space_complex(&m.scaled(0.01).unwrap(), Family::P2Rt1P1dg).unwrap();
    assert_eq!(a.d01, b.d01);
    assert_eq!(a.d12_ref, b.d12_ref);
}
