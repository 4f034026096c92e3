use super::*;
use crate::femspaces::{build_space_complex, Family};
use crate::linalg::{norm_inf, sub};
use crate::mesh::{build_dual_mesh, build_periodic_mesh, CellKind};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn pair(kind: CellKind, n: usize) -> (SpaceComplex, SpaceComplex) {
    let m = build_periodic_mesh(kind, n, n, 1.0, 1.0).unwrap();
    let d = build_dual_mesh(&m).unwrap();
    let p = build_space_complex(&m, Family::P1Rt0P0).unwrap();
    let q = build_space_complex(&d, Family::P1Rt0P0).unwrap();
    (p, q)
}

fn random(n: usize, seed: u64) -> Vec<f64> {
    let mut r = ChaCha8Rng::seed_from_u64(seed);
    (0..n).map(|_| r.random_range(-1.0..1.0)).collect()
}

#[test]
fn refinement_tiles_the_torus() {
    for (kind, n) in [(CellKind::Quadrilateral, 4), (CellKind::Triangle, 4), (CellKind::Hexagon, 4)] {
        let (p, d) = pair(kind, n);
        let cp = cross_pairing(&p, &d);
        assert!((cp.area - 1.0).abs() < 1e-12, "{kind:?}: {}", cp.area);
    }
}

#[test]
fn commuting_diagram_both_degrees() {
    for kind in [CellKind::Quadrilateral, CellKind::Hexagon, CellKind::Triangle] {
        let (p, d) = pair(kind, 4);
        let cross = cross_pairing(&p, &d);
        let h0 = HodgeStarOp::from_pairing(&cross, &p, &d, 0).unwrap();
        let h1 = HodgeStarOp::from_pairing(&cross, &p, &d, 1).unwrap();
        let h2 = HodgeStarOp::from_pairing(&cross, &p, &d, 2).unwrap();

        let w0 = random(d.dim(0), 1);
        let lhs = h1.apply(&d.d01.mul_vec(&w0)).unwrap();
        let rhs = apply_delta_h(&p, 2, &FormCoeffs::new(2, h0.apply(&w0).unwrap())).unwrap().values;
        let err = norm_inf(&sub(&lhs, &rhs)) / norm_inf(&lhs);
        assert!(err < 1e-8, "{kind:?} k=0: {err:e}");

        let w1 = random(d.dim(1), 2);
        let lhs = h2.apply(&d.d12.mul_vec(&w1)).unwrap();
        let rhs = apply_delta_h(&p, 1, &FormCoeffs::new(1, h1.apply(&w1).unwrap())).unwrap().values;
        let err = norm_inf(&sub(&lhs, &rhs)) / norm_inf(&lhs);
        assert!(err < 1e-8, "{kind:?} k=1: {err:e}");
    }
}

#[test]
fn codifferential_is_adjoint() {
    let (p, _) = pair(CellKind::Triangle, 5);
    let a = random(p.dim(1), 3);
    let b = random(p.dim(0), 4);
    let da = apply_delta_h(&p, 1, &FormCoeffs::new(1, a.clone())).unwrap().values;
    let lhs = dot(&p.m0.mul_vec(&da), &b);
    let rhs = dot(&p.m1.mul_vec(&a), &p.d01.mul_vec(&b));
    assert!((lhs - rhs).abs() < 1e-9 * rhs.abs().max(1.0));

    let phi = random(p.dim(2), 5);
    let dp = apply_delta_h(&p, 2, &FormCoeffs::new(2, phi.clone())).unwrap().values;
    let lhs = dot(&p.m1.mul_vec(&dp), &a);
    let rhs = -dot(&p.m2.mul_vec(&phi), &p.d12.mul_vec(&a));
    assert!((lhs - rhs).abs() < 1e-9 * rhs.abs().max(1.0));
}

#[test]
fn codifferential_squares_to_zero() {
    for fam in [Family::P1Rt0P0, Family::P2Rt1P1dg] {
        let m = build_periodic_mesh(CellKind::Triangle, 4, 4, 1.0, 1.0).unwrap();
        let p = build_space_complex(&m, fam).unwrap();
        let phi = random(p.dim(2), 6);
        let a = apply_delta_h(&p, 2, &FormCoeffs::new(2, phi)).unwrap();
        let z = apply_delta_h(&p, 1, &a).unwrap().values;
        assert!(norm_inf(&z) < 1e-9 * norm_inf(&a.values), "{}", norm_inf(&z));
    }
}

#[test]
fn wrong_degree_is_rejected() {
    let (p, _) = pair(CellKind::Quadrilateral, 2);
    assert!(matches!(apply_d(&p, 2, &FormCoeffs::zeros(&p, 2)), Err(Error::WrongSpace { .. })));
    assert!(matches!(apply_delta_h(&p, 0, &FormCoeffs::zeros(&p, 0)), Err(Error::WrongSpace { .. })));
    assert!(apply_d(&p, 0, &FormCoeffs::zeros(&p, 1)).is_err());
}

#[test]
fn star_maps_unit_function_to_volume_form() {
    for kind in [CellKind::Quadrilateral, CellKind::Hexagon] {
        let (p, d) = pair(kind, 4);
        let h0 = build_hodge_star(&p, &d, 0).unwrap();
        let ones = vec![1.0; d.dim(0)];
        let vol = p.project_scalar(2, |_| 1.0).unwrap().values;
        let out = h0.apply(&ones).unwrap();
        assert!(norm_inf(&sub(&out, &vol)) < 1e-10);
        let back = h0.apply_inverse(&vol).unwrap();
        assert!(norm_inf(&sub(&back, &ones)) < 1e-8);
    }
}

#[test]
fn singular_value_estimate_matches_dense() {
    let (p, d) = pair(CellKind::Hexagon, 3);
    let h1 = build_hodge_star(&p, &d, 1).unwrap();
    let sv = h1.to_dense().unwrap().singular_values();
    let dense = sv.min() / sv.max();
    let (est, _) = h1.singular_value_ratio().unwrap();
    assert!((est - dense).abs() < 1e-3 * dense, "{est} vs {dense}");
}

#[test]
fn harmonic_forms_are_two_dimensional() {
    for kind in [CellKind::Triangle, CellKind::Quadrilateral] {
        let m = build_periodic_mesh(kind, 4, 4, 1.0, 1.0).unwrap();
        let p = build_space_complex(&m, Family::P1Rt0P0).unwrap();
        let k = 12;
        let mut stack = nalgebra::DMatrix::zeros(p.dim(1), k);
        for s in 0..k {
            let w = random(p.dim(1), 100 + s as u64);
            let parts = helmholtz_decompose(&p, &FormCoeffs::new(1, w.clone())).unwrap();
            // parts are M1-orthogonal and reassemble w
            let g = dot(&p.m1.mul_vec(&parts.gradient), &parts.rotational);
            let h = dot(&p.m1.mul_vec(&parts.harmonic), &parts.gradient);
            assert!(g.abs() < 1e-9 && h.abs() < 1e-9);
            assert!(norm_inf(&p.d12.mul_vec(&parts.harmonic)) < 1e-8);
            for i in 0..p.dim(1) {
                stack[(i, s)] = parts.harmonic[i];
            }
        }
        let sv = stack.singular_values();
        let rank = sv.iter().filter(|&&x| x > 1e-8 * sv.max()).count();
        assert_eq!(rank, 2, "{kind:?}: {sv:?}");
    }
}
