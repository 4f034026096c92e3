//! Property suites behind the `check-mimetic` and `check-conservation`
//! subcommands.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::advect_dg::{dg_depth_rhs, recover_flux_fortin, recover_limiter_flux, slope_limit};
use crate::error::Result;
use crate::feec_ops::{apply_delta_h, helmholtz_decompose, HodgeStarOp};
use crate::femspaces::{build_space_complex, FormCoeffs, SpaceComplex};
use crate::linalg::{gmres, norm_inf, sub, SolverOptions};
use crate::mesh::{build_periodic_mesh, Mesh};
use crate::swe_dual::{dual_pv_tendency, dual_tendencies, dual_velocity, dual_vorticity, PrimalDual};
use crate::swe_primal::{
    compute_mass_flux, depth_rhs_projection, diagnose_vorticity, enstrophy_rate, enstrophy_rate_scale, energy_rate,
    energy_rate_scale, pv_tendency, random_state, smooth_random_field, tendencies, tendencies_with_flux, ModelParams,
    PvScheme, StabilizationConfig, State,
};

use super::config::RunConfig;

#[derive(Clone, Debug, Serialize)]
pub struct CheckLine {
    pub name: String,
    pub value: f64,
    pub limit: f64,
    /// One of `<=`, `>=`, `==`.
    pub relation: &'static str,
    pub pass: bool,
}

impl CheckLine {
    pub fn at_most(name: &str, value: f64, limit: f64) -> Self {
        CheckLine { name: name.into(), value, limit, relation: "<=", pass: value <= limit }
    }

    pub fn at_least(name: &str, value: f64, limit: f64) -> Self {
        CheckLine { name: name.into(), value, limit, relation: ">=", pass: value >= limit }
    }

    pub fn equals(name: &str, value: f64, limit: f64) -> Self {
        CheckLine { name: name.into(), value, limit, relation: "==", pass: value == limit }
    }
}

impl std::fmt::Display for CheckLine {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let tag = if self.pass { "PASS" } else { "FAIL" };
        write!(f, "{tag} {:<36} {:.3e} {} {:.3e}", self.name, self.value, self.relation, self.limit)
    }
}

#[derive(Clone, Debug, Default, Serialize)]
pub struct CheckReport {
    pub lines: Vec<CheckLine>,
}

impl CheckReport {
    pub fn all_pass(&self) -> bool {
        self.lines.iter().all(|l| l.pass)
    }

    pub fn get(&self, name: &str) -> Option<&CheckLine> {
        self.lines.iter().find(|l| l.name == name)
    }
}

fn random_vec(rng: &mut ChaCha8Rng, n: usize) -> Vec<f64> {
    (0..n).map(|_| rng.random_range(-1.0..1.0)).collect()
}

fn rel_inf(a: &[f64], b: &[f64]) -> f64 {
    norm_inf(&sub(a, b)) / norm_inf(b).max(f64::MIN_POSITIVE)
}

fn components(n: usize, links: impl Iterator<Item = (usize, usize)>) -> usize {
    let mut parent: Vec<usize> = (0..n).collect();
    fn find(p: &mut [usize], mut x: usize) -> usize {
        while p[x] != x {
            p[x] = p[p[x]];
            x = p[x];
        }
        x
    }
    for (a, b) in links {
        let (ra, rb) = (find(&mut parent, a), find(&mut parent, b));
        if ra != rb {
            parent[ra] = rb;
        }
    }
    (0..n).filter(|&x| find(&mut parent, x) == x).count()
}

/// Betti numbers `(b0, b1, b2)` from the integer incidence structure.
pub fn betti_numbers(mesh: &Mesh) -> (usize, usize, usize) {
    let b0 = components(mesh.n_vertices(), mesh.edges().iter().map(|e| (e.v[0], e.v[1])));
    let b2 = components(mesh.n_cells(), (0..mesh.n_edges()).map(|e| {
        let [a, b] = mesh.edge_cells(e);
        (a.0, b.0)
    }));
    // rank d01 = V − b0, rank d12 = C − b2 on a closed orientable surface
    let b1 = mesh.n_edges() + b0 + b2 - mesh.n_vertices() - mesh.n_cells();
    (b0, b1, b2)
}

/// Numerical dimension of the harmonic parts of `n` random 1-forms.
pub fn harmonic_dimension(space: &SpaceComplex, n: usize, seed: u64) -> Result<(usize, Vec<f64>)> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut stack = nalgebra::DMatrix::zeros(space.dim(1), n);
    for s in 0..n {
        let w = random_vec(&mut rng, space.dim(1));
        let h = helmholtz_decompose(space, &FormCoeffs::new(1, w))?.harmonic;
        let scale = norm_inf(&h).max(f64::MIN_POSITIVE);
        for (i, v) in h.iter().enumerate() {
            stack[(i, s)] = v / scale;
        }
    }
    let sv: Vec<f64> = stack.singular_values().iter().copied().collect();
    let top = sv.iter().copied().fold(0.0, f64::max);
    Ok((sv.iter().filter(|&&x| x > 1e-8 * top).count(), sv))
}

/// `d²=0`, Betti numbers, `(δʰ)²=0`, harmonic dimension and, for the
/// lowest-order families, the commuting diagram and `⋆ₕ` invertibility.
pub fn check_mimetic(cfg: &RunConfig, n_random: usize) -> Result<CheckReport> {
    let mesh = build_periodic_mesh(cfg.mesh, cfg.nx, cfg.ny, cfg.lx, cfg.ly)?;
    let space = build_space_complex(&mesh, cfg.family)?;
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let mut r = CheckReport::default();

    let nz = mesh.incidence().composition_nonzeros().len();
    r.lines.push(CheckLine::equals("d12_d01_integer_nonzeros", nz as f64, 0.0));
    let dd = space.d12.matmul(&space.d01);
    let dd_max = dd.triplets().map(|(_, _, v)| v.abs()).fold(0.0, f64::max);
    r.lines.push(CheckLine::at_most("d12_d01_assembled_max", dd_max, 0.0));

    let (b0, b1, b2) = betti_numbers(&mesh);
    r.lines.push(CheckLine::equals("betti_0", b0 as f64, 1.0));
    r.lines.push(CheckLine::equals("betti_1", b1 as f64, 2.0));
    r.lines.push(CheckLine::equals("betti_2", b2 as f64, 1.0));

    let mut worst: f64 = 0.0;
    for _ in 0..n_random {
        let phi = FormCoeffs::new(2, random_vec(&mut rng, space.dim(2)));
        let a = apply_delta_h(&space, 2, &phi)?;
        let z = apply_delta_h(&space, 1, &a)?;
        worst = worst.max(norm_inf(&z.values) / norm_inf(&a.values));
    }
    r.lines.push(CheckLine::at_most("delta_h_squared_relative", worst, 1e-10));

    let (hd, _) = harmonic_dimension(&space, n_random.min(50), cfg.seed)?;
    r.lines.push(CheckLine::equals("harmonic_dimension", hd as f64, 2.0));

    if cfg.family.is_whitney() {
        let pd = PrimalDual::new(&mesh, cfg.family)?;
        let (c0, c1) = commuting_errors(&pd, &mut rng, n_random.clamp(1, 10))?;
        r.lines.push(CheckLine::at_most("commuting_k0_relative", c0, 1e-10));
        r.lines.push(CheckLine::at_most("commuting_k1_relative", c1, 1e-10));
        let (ratio, _) = pd.h1.singular_value_ratio()?;
        r.lines.push(CheckLine::at_least("hodge1_sigma_ratio", ratio, 1e-10));
    }
    Ok(r)
}

/// Worst relative errors of `⋆ₕ d = δʰ ⋆ₕ` for `k = 0, 1` over random dual
/// forms.
pub fn commuting_errors(pd: &PrimalDual, rng: &mut ChaCha8Rng, n: usize) -> Result<(f64, f64)> {
    let (p, d) = (&pd.primal, &pd.dual);
    let (mut e0, mut e1): (f64, f64) = (0.0, 0.0);
    for _ in 0..n {
        let w0 = random_vec(rng, d.dim(0));
        let lhs = pd.h1.apply(&d.d01.mul_vec(&w0))?;
        let rhs = apply_delta_h(p, 2, &FormCoeffs::new(2, pd.h0.apply(&w0)?))?.values;
        e0 = e0.max(rel_inf(&rhs, &lhs));
        let w1 = random_vec(rng, d.dim(1));
        let lhs = pd.h2.apply(&d.d12.mul_vec(&w1))?;
        let rhs = apply_delta_h(p, 1, &FormCoeffs::new(1, pd.h1.apply(&w1)?))?.values;
        e1 = e1.max(rel_inf(&rhs, &lhs));
    }
    Ok((e0, e1))
}

/// `σ_min/σ_max` of the 1-form Hodge star on a primal-dual pair.
pub fn hodge_ratio(h: &HodgeStarOp) -> Result<f64> {
    Ok(h.singular_value_ratio()?.0)
}

fn random_params(space: &SpaceComplex, rng: &mut ChaCha8Rng, cfg: &RunConfig) -> Result<ModelParams> {
    let sf = smooth_random_field(rng, cfg.lx, cfg.ly, 2);
    let sb = smooth_random_field(rng, cfg.lx, cfg.ly, 2);
    let f0 = if cfg.f0 == 0.0 { 1e-4 } else { cfg.f0 };
    Ok(ModelParams {
        g: cfg.g,
        f: space.project_scalar(0, |p| f0 * (1.0 + 0.5 * sf(p)))?.values,
        b: space.project_scalar(2, |p| 0.1 * cfg.d0 * sb(p))?.values,
    })
}

/// Coriolis field making `q ≡ c` for the given state.
pub fn constant_pv_coriolis(space: &SpaceComplex, state: &State, c: f64) -> Result<Vec<f64>> {
    let zeta = diagnose_vorticity(space, &state.u)?;
    let md1 = space.weighted_mass0(&space.eval2(&state.d)).mul_vec(&vec![c; space.dim(0)]);
    Ok(sub(&space.solve_mass(0, &md1)?.0, &zeta))
}

/// Coriolis field (primal `V⁰`) making the dual PV `≡ c`.
pub fn constant_dual_pv_coriolis(pd: &PrimalDual, state: &State, c: f64) -> Result<Vec<f64>> {
    let zd = dual_vorticity(&pd.dual, &dual_velocity(&pd.h1, &state.u)?);
    let dd = pd.depth_on_dual(&state.d);
    let dm = pd.dual.mesh();
    let target: Vec<f64> = (0..dm.n_cells()).map(|k| (c * dd[k] - zd[k]) * dm.cell_area(k)).collect();
    let w2 = &pd.cross.w2;
    let opts = SolverOptions { rtol: 1e-15, atol: 0.0, max_iter: None };
    Ok(gmres(|x| w2.tr_mul_vec(x), None, &target, opts, 80)?.0)
}

struct Worst(Vec<(String, f64)>);

impl Worst {
    fn note(&mut self, name: &str, v: f64) {
        match self.0.iter_mut().find(|(n, _)| n == name) {
            Some((_, w)) => *w = w.max(v),
            None => self.0.push((name.into(), v)),
        }
    }

    fn get(&self, name: &str) -> Option<f64> {
        self.0.iter().find(|(n, _)| n == name).map(|x| x.1)
    }
}

/// Semi-discrete invariants on `n_states` random states: energy and
/// enstrophy rates, constant-PV consistency for every depth scheme and
/// formulation, and exactness of the recovered fluxes. Values are the worst
/// ratios to the natural scale of each quantity.
pub fn check_conservation(cfg: &RunConfig, n_states: usize) -> Result<CheckReport> {
    let mesh = build_periodic_mesh(cfg.mesh, cfg.nx, cfg.ny, cfg.lx, cfg.ly)?;
    let space = build_space_complex(&mesh, cfg.family)?;
    let pd = if cfg.family.is_whitney() { Some(PrimalDual::new(&mesh, cfg.family)?) } else { None };
    let sp = &space;
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let schemes = [PvScheme::EnergyEnstrophy, PvScheme::Apvm, PvScheme::Supg];
    let stab = |scheme| StabilizationConfig { scheme, ..cfg.stabilization };
    let mut w = Worst(Vec::new());
    let degree1 = sp.n_local(2) > 1;

    for _ in 0..n_states {
        let st = random_state(sp, &mut rng, cfg.g, cfg.d0)?;
        let params = random_params(sp, &mut rng, cfg)?;
        for scheme in schemes {
            let t = tendencies(sp, &st, &params, &stab(scheme), None)?;
            let e = energy_rate(sp, &st, &params, &t) / energy_rate_scale(sp, &st, &params, &t);
            w.note(&format!("energy_rate_{}", scheme_name(scheme)), e.abs());
            let z = enstrophy_rate(sp, &t) / enstrophy_rate_scale(sp, &t);
            match scheme {
                PvScheme::EnergyEnstrophy => w.note("enstrophy_rate_ee", z.abs()),
                PvScheme::Apvm => w.note("enstrophy_rate_apvm_signed", z),
                PvScheme::Supg => {}
            }
        }

        // constant PV
        let c = 1.3 * cfg.f0.abs().max(1e-4) / cfg.d0;
        let cparams = ModelParams { g: cfg.g, f: constant_pv_coriolis(sp, &st, c)?, b: params.b.clone() };
        let lim_state = State { u: st.u.clone(), d: slope_limit(sp, &st.d) };
        let mut depth_variants = vec![("projection", st.clone(), false), ("upwind", st.clone(), true)];
        if degree1 {
            depth_variants.push(("upwind_limited", lim_state.clone(), true));
        }
        for (name, s, upwind) in depth_variants {
            let cp = ModelParams { f: constant_pv_coriolis(sp, &s, c)?, ..cparams.clone() };
            let (flux, d_t) = if upwind {
                let d_t = dg_depth_rhs(sp, &s)?;
                let rec = recover_flux_fortin(sp, &s, &d_t)?;
                w.note("fortin_residual", rec.residual_norm / norm_inf(&d_t).max(f64::MIN_POSITIVE));
                (rec.flux, d_t)
            } else {
                let f = compute_mass_flux(sp, &s)?;
                let d_t = depth_rhs_projection(sp, &f);
                (f, d_t)
            };
            let ctx: Vec<f64> = sp.eval2(&d_t).iter().map(|v| c * v).collect();
            for scheme in schemes {
                let t = tendencies_with_flux(sp, &s, &cp, &stab(scheme), flux.clone(), d_t.clone(), Some(&ctx))?;
                let qt = pv_tendency(sp, &s, &t.q, &t.u_t, &t.d_t)?;
                w.note(&format!("constant_pv_{name}"), norm_inf(&qt) / c);
            }
            if let Some(pd) = &pd {
                let dp = ModelParams { f: constant_dual_pv_coriolis(pd, &s, c)?, ..cparams.clone() };
                let t = dual_tendencies(pd, &s, &dp, flux.clone(), d_t.clone())?;
                w.note(&format!("constant_pv_dual_{name}"), norm_inf(&dual_pv_tendency(pd, &t)?) / c);
            }
        }
        if degree1 {
            let fs = recover_limiter_flux(sp, &st.d, &lim_state.d)?;
            let change = sub(&lim_state.d, &st.d);
            w.note("limiter_flux_residual", norm_inf(&sub(&sp.d12.mul_vec(&fs), &change)) / norm_inf(&st.d));
        }
    }

    let mut r = CheckReport::default();
    for s in schemes {
        let n = format!("energy_rate_{}", scheme_name(s));
        r.lines.push(CheckLine::at_most(&n, w.get(&n).unwrap_or(0.0), 1e-10));
    }
    r.lines.push(CheckLine::at_most("enstrophy_rate_ee", w.get("enstrophy_rate_ee").unwrap_or(0.0), 1e-9));
    r.lines.push(CheckLine::at_most("enstrophy_rate_apvm_signed", w.get("enstrophy_rate_apvm_signed").unwrap_or(0.0), 1e-12));
    for (n, v) in &w.0 {
        if n.starts_with("constant_pv") {
            r.lines.push(CheckLine::at_most(n, *v, 1e-10));
        }
    }
    r.lines.push(CheckLine::at_most("fortin_residual", w.get("fortin_residual").unwrap_or(0.0), 1e-11));
    if degree1 {
        r.lines.push(CheckLine::at_most("limiter_flux_residual", w.get("limiter_flux_residual").unwrap_or(0.0), 1e-12));
    }
    Ok(r)
}

fn scheme_name(s: PvScheme) -> &'static str {
    match s {
        PvScheme::EnergyEnstrophy => "ee",
        PvScheme::Apvm => "apvm",
        PvScheme::Supg => "supg",
    }
}
