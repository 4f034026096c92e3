//! Acceptance suite: runs criteria 1–10 and prints one PASS/FAIL line each.
//! Exits with a failure status if any criterion fails.

use std::process::ExitCode;
use std::time::Instant;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use feec_swe::driver::{
    betti_numbers, check_conservation, commuting_errors, convergence, harmonic_dimension, hodge_ratio, simulate, CheckReport,
    Equations, Integrator, RunConfig, TestCase,
};
use feec_swe::feec_ops::apply_delta_h;
use feec_swe::femspaces::{build_space_complex, Family, FormCoeffs};
use feec_swe::linalg::{norm2, norm_inf, sub};
use feec_swe::mesh::{build_dual_mesh, build_periodic_mesh, CellKind};
use feec_swe::swe_dual::{linear_dual, linear_primal, PrimalDual};
use feec_swe::swe_primal::{random_state, PvScheme};

const KINDS: [CellKind; 3] = [CellKind::Triangle, CellKind::Quadrilateral, CellKind::Hexagon];

struct Outcome {
    pass: bool,
    detail: String,
}

fn outcome(pass: bool, detail: String) -> Outcome {
    Outcome { pass, detail }
}

fn random_vec(rng: &mut ChaCha8Rng, n: usize) -> Vec<f64> {
    (0..n).map(|_| rng.random_range(-1.0..1.0)).collect()
}

fn unit_config(kind: CellKind, family: Family, n: usize, seed: u64) -> RunConfig {
    RunConfig {
        mesh: kind,
        family,
        nx: n,
        ny: n,
        lx: 1.0,
        ly: 1.0,
        g: 1.0,
        d0: 1.0,
        f0: 1.0,
        dt: 0.01,
        seed,
        stabilization: feec_swe::swe_primal::StabilizationConfig { scheme: PvScheme::EnergyEnstrophy, tau_apvm: 0.05, alpha_supg: 0.3 },
        ..RunConfig::default()
    }
}

fn mimetic_identities() -> Outcome {
    let start = Instant::now();
    let mut nonzeros = 0;
    for kind in KINDS {
        let m = build_periodic_mesh(kind, 32, 32, 1.0, 1.0).unwrap();
        let d = build_dual_mesh(&m).unwrap();
        nonzeros += m.incidence().composition_nonzeros().len() + d.incidence().composition_nonzeros().len();
    }
    let mut worst: f64 = 0.0;
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    for kind in KINDS {
        let m = build_periodic_mesh(kind, 32, 32, 1.0, 1.0).unwrap();
        let sp = build_space_complex(&m, Family::P1Rt0P0).unwrap();
        for _ in 0..100 {
            let a = apply_delta_h(&sp, 2, &FormCoeffs::new(2, random_vec(&mut rng, sp.dim(2)))).unwrap();
            let z = apply_delta_h(&sp, 1, &a).unwrap();
            worst = worst.max(norm_inf(&z.values) / norm_inf(&a.values));
        }
    }
    let secs = start.elapsed().as_secs_f64();
    outcome(
        nonzeros == 0 && worst <= 1e-10 && secs < 10.0,
        format!("d12·d01 nonzeros {nonzeros}; max |(δʰ)²φ|/|δʰφ| {worst:.2e} over 300 fields; {secs:.1} s on 32×32"),
    )
}

fn torus_topology() -> Outcome {
    let mut ok = true;
    let mut parts = Vec::new();
    for kind in KINDS {
        let m = build_periodic_mesh(kind, 8, 8, 1.0, 1.0).unwrap();
        let sp = build_space_complex(&m, Family::P1Rt0P0).unwrap();
        let betti = betti_numbers(&m);
        let (dim, sv) = harmonic_dimension(&sp, 50, 7).unwrap();
        let third = sv.get(2).copied().unwrap_or(0.0) / sv[0];
        ok &= dim == 2 && betti == (1, 2, 1) && third < 1e-8;
        parts.push(format!("{}: dim {dim}, σ3/σ1 {third:.1e}", kind.name()));
    }
    outcome(ok, parts.join("; "))
}

/// Criteria 3–6 share the random-state suite.
struct Suites {
    reports: Vec<(String, CheckReport)>,
}

impl Suites {
    fn run() -> Self {
        let mut reports = Vec::new();
        for (i, kind) in KINDS.into_iter().enumerate() {
            let cfg = unit_config(kind, Family::P1Rt0P0, 4, 100 + i as u64);
            reports.push((kind.name().to_string(), check_conservation(&cfg, 100).unwrap()));
        }
        let cfg = unit_config(CellKind::Triangle, Family::P2Rt1P1dg, 4, 200);
        reports.push(("triangle P2/RT1/P1DG".into(), check_conservation(&cfg, 100).unwrap()));
        Suites { reports }
    }

    fn select(&self, prefix: &[&str]) -> Outcome {
        let mut ok = true;
        let mut worst: Vec<(String, f64, f64)> = Vec::new();
        for (_, r) in &self.reports {
            for l in r.lines.iter().filter(|l| prefix.iter().any(|p| l.name.starts_with(p))) {
                ok &= l.pass;
                match worst.iter_mut().find(|w| w.0 == l.name) {
                    Some(w) => w.1 = w.1.max(l.value),
                    None => worst.push((l.name.clone(), l.value, l.limit)),
                }
            }
        }
        let detail = worst.iter().map(|(n, v, lim)| format!("{n} {v:.1e} (≤ {lim:.0e})")).collect::<Vec<_>>().join("; ");
        outcome(ok && !worst.is_empty(), detail)
    }
}

fn commuting_and_invertibility() -> Outcome {
    let mut ok = true;
    let mut parts = Vec::new();
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    for kind in KINDS {
        let m = build_periodic_mesh(kind, 8, 8, 1.0, 1.0).unwrap();
        let pd = PrimalDual::new(&m, Family::P1Rt0P0).unwrap();
        let (e0, e1) = commuting_errors(&pd, &mut rng, 100).unwrap();
        ok &= e0 <= 1e-10 && e1 <= 1e-10;
        parts.push(format!("{}/{}: k0 {e0:.1e} k1 {e1:.1e}", kind.name(), pd.dual.mesh().kind().name()));
    }
    let mut min_ratio = f64::INFINITY;
    for kind in KINDS {
        for n in [8, 16, 24] {
            let m = build_periodic_mesh(kind, n, n, 1.0, 1.0).unwrap();
            let pd = PrimalDual::new(&m, Family::P1Rt0P0).unwrap();
            min_ratio = min_ratio.min(hodge_ratio(&pd.h1).unwrap());
        }
    }
    ok &= min_ratio > 1e-10;
    parts.push(format!("min σ_min/σ_max of ⋆ₕ up to 24×24 {min_ratio:.2e}"));
    outcome(ok, parts.join("; "))
}

fn steady_geostrophic() -> Outcome {
    let cfg = RunConfig {
        test_case: TestCase::GeostrophicBalance,
        mesh: CellKind::Quadrilateral,
        nx: 16,
        ny: 16,
        integrator: Integrator::SemiImplicit,
        dt: 600.0,
        n_steps: 1000,
        // force real Picard updates every step
        picard_tol: 0.0,
        picard_iters: 2,
        ..RunConfig::default()
    };
    let s = simulate(&cfg, None).unwrap().summary;
    let d = &s.drift;
    outcome(
        d.velocity <= 1e-8 && d.energy <= 1e-8 && d.mass <= 1e-12,
        format!(
            "‖u‖ drift {:.1e}, energy {:.1e}, mass {:.1e} after {} steps (balance residual {:.1e})",
            d.velocity,
            d.energy,
            d.mass,
            s.steps,
            s.balance_residual.unwrap_or(f64::NAN)
        ),
    )
}

fn gravity_wave_convergence() -> Outcome {
    let cfg = RunConfig {
        test_case: TestCase::GravityWave,
        equations: Equations::Linear,
        mesh: CellKind::Quadrilateral,
        family: Family::P1Rt0P0,
        integrator: Integrator::SemiImplicit,
        dt: 1200.0,
        final_time: Some(6000.0),
        levels: vec![8, 16, 32, 64],
        ..RunConfig::default()
    };
    let start = Instant::now();
    let rep = convergence(&cfg).unwrap();
    let secs = start.elapsed().as_secs_f64();
    let fitted = rep.fitted_slope();
    let ok = fitted >= 1.8 && rep.slopes.iter().all(|&s| s >= 1.5) && secs < 300.0;
    let slopes: Vec<String> = rep.slopes.iter().map(|s| format!("{s:.3}")).collect();
    outcome(ok, format!("pairwise slopes [{}], fitted {fitted:.3}, {secs:.1} s", slopes.join(", ")))
}

fn linear_equivalence() -> Outcome {
    let (g, f0, d0) = (1.0, 1.0, 1.0);
    let mut worst_u: f64 = 0.0;
    let mut worst_d: f64 = 0.0;
    let mut per_pair = Vec::new();
    for kind in [CellKind::Quadrilateral, CellKind::Hexagon] {
        let m = build_periodic_mesh(kind, 8, 8, 1.0, 1.0).unwrap();
        let pd = PrimalDual::new(&m, Family::P1Rt0P0).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(10);
        let mut w: f64 = 0.0;
        for _ in 0..50 {
            let st = random_state(&pd.primal, &mut rng, g, d0).unwrap();
            let dp: Vec<f64> = st.d.iter().map(|d| d - d0).collect();
            let (ua, da) = linear_primal(&pd.primal, g, f0, d0, &st.u, &dp).unwrap();
            let (ub, db) = linear_dual(&pd, g, f0, d0, &st.u, &dp).unwrap();
            w = w.max(norm2(&sub(&ua, &ub)) / norm2(&ua));
            worst_d = worst_d.max(norm2(&sub(&da, &db)) / norm2(&da).max(f64::MIN_POSITIVE));
        }
        worst_u = worst_u.max(w);
        per_pair.push(format!("{} {w:.2e}", kind.name()));
    }
    outcome(
        worst_u <= 1e-10 && worst_d <= 1e-10,
        format!("max relative u_t difference {worst_u:.2e} ({}), D_t {worst_d:.1e}, 100 states", per_pair.join(", ")),
    )
}

fn main() -> ExitCode {
    let mut results: Vec<(usize, &str, Outcome)> = Vec::new();
    let mut record = |id, name, f: &dyn Fn() -> Outcome| {
        let t = Instant::now();
        let o = f();
        println!("{} criterion {id:>2} {name}: {} [{:.1} s]", if o.pass { "PASS" } else { "FAIL" }, o.detail, t.elapsed().as_secs_f64());
        results.push((id, name, o));
    };
    record(1, "mimetic identities", &mimetic_identities);
    record(2, "torus topology", &torus_topology);
    let suites = Suites::run();
    record(3, "semi-discrete energy", &|| suites.select(&["energy_rate_"]));
    record(4, "semi-discrete enstrophy", &|| suites.select(&["enstrophy_rate_"]));
    record(5, "mass consistency", &|| suites.select(&["constant_pv_"]));
    record(6, "flux recovery exactness", &|| suites.select(&["fortin_residual", "limiter_flux_residual"]));
    record(7, "commuting diagram and Hodge invertibility", &commuting_and_invertibility);
    record(8, "steady geostrophic state", &steady_geostrophic);
    record(9, "gravity-wave convergence", &gravity_wave_convergence);
    record(10, "linear primal/primal-dual equivalence", &linear_equivalence);
    let failed: Vec<usize> = results.iter().filter(|r| !r.2.pass).map(|r| r.0).collect();
    println!("{} of {} criteria passed", results.len() - failed.len(), results.len());
    if failed.is_empty() {
        ExitCode::SUCCESS
    } else {
        println!("failed: {failed:?}");
        ExitCode::FAILURE
    }
}
