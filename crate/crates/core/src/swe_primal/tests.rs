use super::*;
use crate::feec_ops::overlap::polygon_quadrature;
use crate::femspaces::{build_space_complex, flux_velocity, Family};
use crate::linalg::{norm2, norm_inf, sub};
use crate::mesh::{build_periodic_mesh, CellKind};
use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use std::f64::consts::PI;

fn space(kind: CellKind, n: usize) -> SpaceComplex {
    let m = build_periodic_mesh(kind, n, n, 1.0, 1.0).unwrap();
    build_space_complex(&m, Family::P1Rt0P0).unwrap()
}

fn random_params(sp: &SpaceComplex, rng: &mut ChaCha8Rng) -> ModelParams {
    let f = smooth_random_field(rng, 1.0, 1.0, 2);
    let b = smooth_random_field(rng, 1.0, 1.0, 2);
    ModelParams {
        g: 1.0,
        f: sp.project_scalar(0, |x| 1.0 + 0.3 * f(x)).unwrap().values,
        b: sp.project_scalar(2, |x| 0.05 * b(x)).unwrap().values,
    }
}

fn rel(a: &[f64], b: &[f64]) -> f64 {
    norm_inf(&sub(a, b)) / norm_inf(b).max(1e-300)
}

#[test]
fn vorticity_of_rest_is_zero_and_integrates_to_zero() {
    let sp = space(CellKind::Triangle, 6);
    assert!(norm_inf(&diagnose_vorticity(&sp, &vec![0.0; sp.dim(1)]).unwrap()) == 0.0);
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let st = random_state(&sp, &mut rng, 1.0, 1.0).unwrap();
    let z = diagnose_vorticity(&sp, &st.u).unwrap();
    assert!(sp.integrate(&sp.eval0(&z)).abs() < 1e-12 * norm_inf(&st.u));
}

#[test]
fn vorticity_converges_to_curl() {
    // u = (sin 2πy, sin 2πx) has curl 2π(cos 2πx − cos 2πy)
    let mut errs = Vec::new();
    for n in [8, 16, 32] {
        let sp = space(CellKind::Quadrilateral, n);
        let u = sp.project_one_form(|x| flux_form([(2.0 * PI * x[1]).sin(), (2.0 * PI * x[0]).sin()])).unwrap().values;
        let z = diagnose_vorticity(&sp, &u).unwrap();
        let exact: Vec<f64> = sp.mesh().vertices().iter().map(|x| 2.0 * PI * ((2.0 * PI * x[0]).cos() - (2.0 * PI * x[1]).cos())).collect();
        errs.push(norm_inf(&sub(&z, &exact)));
    }
    assert!(errs[0] / errs[1] > 1.8 && errs[1] / errs[2] > 1.8, "{errs:?}");
}

#[test]
fn pv_of_uniform_state() {
    let sp = space(CellKind::Hexagon, 4);
    let params = ModelParams::f_plane(&sp, 9.81, 1e-4);
    let st = State::rest(&sp, 100.0);
    let q = diagnose_pv(&sp, &st, &params, &vec![0.0; sp.dim(0)]).unwrap();
    assert!(q.iter().all(|&v| (v - 1e-6).abs() < 1e-17));
}

#[test]
fn pv_is_linear_in_inverse_depth_and_integrates() {
    let sp = space(CellKind::Triangle, 5);
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    let params = random_params(&sp, &mut rng);
    let st = random_state(&sp, &mut rng, 1.0, 1.0).unwrap();
    let z = diagnose_vorticity(&sp, &st.u).unwrap();
    let q = diagnose_pv(&sp, &st, &params, &z).unwrap();
    let doubled = State { u: st.u.clone(), d: scaled(&st.d, 2.0) };
    let q2 = diagnose_pv(&sp, &doubled, &params, &z).unwrap();
    assert!(rel(&scaled(&q2, 2.0), &q) < 1e-11);
    let qd: Vec<f64> = sp.eval0(&q).iter().zip(sp.eval2(&st.d)).map(|(a, b)| a * b).collect();
    let zf: Vec<f64> = z.iter().zip(&params.f).map(|(a, b)| a + b).collect();
    let lhs = sp.integrate(&qd);
    let rhs = sp.integrate(&sp.eval0(&zf));
    assert!((lhs - rhs).abs() < 1e-11 * rhs.abs());
}

#[test]
fn nonpositive_depth_is_rejected() {
    let sp = space(CellKind::Quadrilateral, 3);
    let mut st = State::rest(&sp, 1.0);
    st.d[4] = -0.1;
    assert!(matches!(st.validate(&sp), Err(Error::NonPositiveDepth { element: 4, .. })));
    let params = ModelParams::f_plane(&sp, 1.0, 1.0);
    assert!(diagnose_pv(&sp, &st, &params, &vec![0.0; sp.dim(0)]).is_err());
}

#[test]
fn mass_flux_scales_with_constant_depth() {
    let sp = space(CellKind::Triangle, 5);
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let st = random_state(&sp, &mut rng, 1.0, 1.0).unwrap();
    for c in [1.0, 3.5] {
        let s = State { u: st.u.clone(), d: vec![c; sp.dim(2)] };
        let f = compute_mass_flux(&sp, &s).unwrap();
        assert!(rel(&f, &scaled(&st.u, c)) < 1e-11);
    }
    let zero = State { u: vec![0.0; sp.dim(1)], d: st.d.clone() };
    assert_eq!(norm_inf(&compute_mass_flux(&sp, &zero).unwrap()), 0.0);
}

#[test]
fn constant_pv_gives_unmodified_flux() {
    let sp = space(CellKind::Quadrilateral, 5);
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    let st = random_state(&sp, &mut rng, 1.0, 1.0).unwrap();
    let params = ModelParams::f_plane(&sp, 1.0, 1.0);
    let flux = compute_mass_flux(&sp, &st).unwrap();
    let q0 = 0.7;
    let q = vec![q0; sp.dim(0)];
    let d_t = depth_rhs_projection(&sp, &flux);
    let ctx: Vec<f64> = sp.eval2(&d_t).iter().map(|v| q0 * v).collect();
    for scheme in [PvScheme::EnergyEnstrophy, PvScheme::Apvm, PvScheme::Supg] {
        let cfg = StabilizationConfig { scheme, tau_apvm: 0.3, alpha_supg: 0.5 };
        let pv = compute_q_flux(&sp, &st, &params, &cfg, &q, &flux, Some(&ctx)).unwrap();
        assert!(rel(&pv.project(&sp).unwrap(), &scaled(&flux, q0)) < 1e-11, "{scheme:?}");
    }
}

#[test]
fn rest_states_stay_at_rest() {
    let sp = space(CellKind::Hexagon, 4);
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let mut params = random_params(&sp, &mut rng);
    let cfg = StabilizationConfig::default();
    let flat = State::rest(&sp, 2.0);
    params.b = vec![0.0; sp.dim(2)];
    let t = tendencies(&sp, &flat, &params, &cfg, None).unwrap();
    assert!(norm_inf(&t.u_t) < 1e-14 && norm_inf(&t.d_t) == 0.0);
    params = random_params(&sp, &mut rng);
    let lake = State { u: vec![0.0; sp.dim(1)], d: params.b.iter().map(|b| 2.0 - b).collect() };
    let t = tendencies(&sp, &lake, &params, &cfg, None).unwrap();
    assert!(norm_inf(&t.u_t) < 1e-13, "{}", norm_inf(&t.u_t));
}

#[test]
fn zonal_jet_in_discrete_balance_is_steady() {
    let sp = space(CellKind::Quadrilateral, 8);
    let params = ModelParams::f_plane(&sp, 1.0, 2.0);
    let u = sp.project_one_form(|x| flux_form([0.05 * (2.0 * PI * x[1]).sin(), 0.0])).unwrap().values;
    let (d, res) = balance_depth(&sp, &params, &u, 1.0, 100).unwrap();
    assert!(res < 1e-12, "{res}");
    let st = State { u, d };
    let t = tendencies(&sp, &st, &params, &StabilizationConfig::default(), None).unwrap();
    assert!(norm2(&t.u_t) <= 1e-10 * norm2(&st.u), "{}", norm2(&t.u_t) / norm2(&st.u));
    assert!(norm_inf(&t.d_t) < 1e-14);
}

#[test]
fn depth_tendency_conserves_mass_and_matches_divergence() {
    let sp = space(CellKind::Triangle, 5);
    let mut rng = ChaCha8Rng::seed_from_u64(6);
    let w: Vec<f64> = (0..sp.dim(1)).map(|_| rng.random_range(-1.0..1.0)).collect();
    let dt = depth_rhs_projection(&sp, &w);
    assert!(sp.integrate(&sp.eval2(&dt)).abs() < 1e-12);
    // P0 coefficient is the cell average of −div
    let div = sp.div1(&w);
    let cells = sp.integrate_cells(&div);
    for c in 0..sp.mesh().n_cells() {
        assert!((dt[c] + cells[c] / sp.mesh().cell_area(c)).abs() < 1e-12 * norm_inf(&dt));
    }
}

#[test]
fn diagnostics_closed_forms() {
    let sp = space(CellKind::Quadrilateral, 4);
    let params = ModelParams::f_plane(&sp, 9.81, 0.5);
    let st = State::rest(&sp, 3.0);
    let d = diagnostics(&sp, &st, &params).unwrap();
    assert!((d.energy - 9.81 * 9.0 / 2.0).abs() < 1e-12);
    assert!((d.enstrophy - 0.25 / 3.0).abs() < 1e-14);
    assert!((d.mass - 3.0).abs() < 1e-14);
}

#[test]
fn energy_matches_independent_quadrature() {
    let sp = space(CellKind::Quadrilateral, 4);
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let params = random_params(&sp, &mut rng);
    let st = random_state(&sp, &mut rng, 1.0, 1.0).unwrap();
    let mut e = 0.0;
    for c in 0..sp.mesh().n_cells() {
        let poly = sp.mesh().cell_positions(c).to_vec();
        let dofs1 = sp.cell_dofs(1, c);
        let dofs2 = sp.cell_dofs(2, c);
        for (x, w) in polygon_quadrature(&poly, 7) {
            let lv = sp.basis_at_point(c, x).unwrap();
            let mut a = [0.0; 2];
            for (i, &g) in dofs1.iter().enumerate() {
                a[0] += st.u[g] * lv.phi1[i][0];
                a[1] += st.u[g] * lv.phi1[i][1];
            }
            let u = flux_velocity(a);
            let d: f64 = dofs2.iter().enumerate().map(|(i, &g)| st.d[g] * lv.phi2[i]).sum();
            let b: f64 = dofs2.iter().enumerate().map(|(i, &g)| params.b[g] * lv.phi2[i]).sum();
            e += w * (0.5 * d * (u[0] * u[0] + u[1] * u[1]) + params.g * (0.5 * d * d + b * d));
        }
    }
    let diag = diagnostics(&sp, &st, &params).unwrap();
    assert!((diag.energy - e).abs() < 1e-10 * e.abs());
}

#[test]
fn supg_matches_petrov_galerkin_form() {
    let sp = space(CellKind::Triangle, 5);
    let mut rng = ChaCha8Rng::seed_from_u64(8);
    let params = random_params(&sp, &mut rng);
    let st = random_state(&sp, &mut rng, 1.0, 1.0).unwrap();
    let ctx: Vec<f64> = (0..sp.n_qp()).map(|_| rng.random_range(-0.1..0.1)).collect();
    let cfg = StabilizationConfig { scheme: PvScheme::Supg, tau_apvm: 0.0, alpha_supg: 0.4 };
    let t = tendencies(&sp, &st, &params, &cfg, Some(&ctx)).unwrap();
    let assembled = sp.d01.tr_mul_vec(&sp.m1.mul_vec(&t.u_t));

    // ∫ (γ + (τ/D) ∇γ·F) ((qD)_t + div(qF)) = ∫ γ (qD)_t + ∫ ζ_t-free part
    let (qv, gq, fq, div, dq, uq) = (sp.eval0(&t.q), sp.grad0(&t.q), sp.eval1(&t.flux), sp.div1(&t.flux), sp.eval2(&st.d), sp.eval1(&st.u));
    let mut pg = vec![0.0; sp.dim(0)];
    for c in 0..sp.mesh().n_cells() {
        let h = sp.mesh().cell_area(c).sqrt();
        for qp in sp.qp_range(c) {
            let speed = uq[qp][0].hypot(uq[qp][1]);
            let tau = 0.4 * h / (speed + 1e-8);
            let r = ctx[qp] + (gq[qp][0] * fq[qp][1] - gq[qp][1] * fq[qp][0]) + qv[qp] * div[qp];
            for (i, &g) in sp.cell_dofs(0, c).iter().enumerate() {
                let dg = sp.dphi0_q(qp)[i];
                let gf = dg[0] * fq[qp][1] - dg[1] * fq[qp][0];
                pg[g] += sp.qp_weights()[qp] * (qv[qp] * gf - tau / dq[qp] * gf * r);
            }
        }
    }
    assert!(rel(&assembled, &pg) < 1e-11, "{}", rel(&assembled, &pg));
}

fn check_rates(seed: u64, kind: CellKind) {
    let sp = space(kind, 4);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let params = random_params(&sp, &mut rng);
    let st = random_state(&sp, &mut rng, 1.0, 1.0).unwrap();
    for scheme in [PvScheme::EnergyEnstrophy, PvScheme::Apvm, PvScheme::Supg] {
        let cfg = StabilizationConfig { scheme, tau_apvm: 0.05, alpha_supg: 0.3 };
        let t = tendencies(&sp, &st, &params, &cfg, None).unwrap();
        let e = energy_rate(&sp, &st, &params, &t);
        assert!(e.abs() <= 1e-10 * energy_rate_scale(&sp, &st, &params, &t), "{scheme:?} {e:e}");
        let z = enstrophy_rate(&sp, &t);
        let zs = enstrophy_rate_scale(&sp, &t);
        match scheme {
            PvScheme::EnergyEnstrophy => assert!(z.abs() <= 1e-9 * zs, "{z:e}"),
            PvScheme::Apvm => assert!(z <= 1e-12 * zs, "{z:e}"),
            PvScheme::Supg => {}
        }
        // global PV conservation: d/dt ∫qD = ∫ζ_t = 0
        let zt = sp.solve_mass(0, &sp.d01.tr_mul_vec(&sp.m1.mul_vec(&t.u_t))).unwrap().0;
        assert!(sp.integrate(&sp.eval0(&zt)).abs() < 1e-11 * norm_inf(&t.u_t));
    }
}

fn check_mass_consistency(seed: u64, kind: CellKind) {
    let sp = space(kind, 4);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let st = random_state(&sp, &mut rng, 1.0, 1.0).unwrap();
    let c = 1.3;
    let zeta = diagnose_vorticity(&sp, &st.u).unwrap();
    let md1 = sp.weighted_mass0(&sp.eval2(&st.d)).mul_vec(&vec![c; sp.dim(0)]);
    let f = sub(&sp.solve_mass(0, &md1).unwrap().0, &zeta);
    let params = ModelParams { g: 1.0, f, b: vec![0.0; sp.dim(2)] };
    let flux = compute_mass_flux(&sp, &st).unwrap();
    let d_t = depth_rhs_projection(&sp, &flux);
    let ctx: Vec<f64> = sp.eval2(&d_t).iter().map(|v| c * v).collect();
    for scheme in [PvScheme::EnergyEnstrophy, PvScheme::Apvm, PvScheme::Supg] {
        let cfg = StabilizationConfig { scheme, tau_apvm: 0.05, alpha_supg: 0.3 };
        let t = tendencies(&sp, &st, &params, &cfg, Some(&ctx)).unwrap();
        assert!(norm_inf(&sub(&t.q, &vec![c; sp.dim(0)])) < 1e-11);
        let qt = pv_tendency(&sp, &st, &t.q, &t.u_t, &t.d_t).unwrap();
        assert!(norm_inf(&qt) <= 1e-10 * c, "{scheme:?} {}", norm_inf(&qt));
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(8))]
    #[test]
    fn energy_and_enstrophy_rates(seed in 0u64..1_000_000, k in 0usize..3) {
        check_rates(seed, [CellKind::Triangle, CellKind::Quadrilateral, CellKind::Hexagon][k]);
    }

    #[test]
    fn constant_pv_stays_constant(seed in 0u64..1_000_000, k in 0usize..3) {
        check_mass_consistency(seed, [CellKind::Triangle, CellKind::Quadrilateral, CellKind::Hexagon][k]);
    }
}
