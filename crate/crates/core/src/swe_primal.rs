//! Primal shallow-water tendencies on a single finite element complex.
//!
//! Velocity is carried as the flux 1-form `α = (−u₂, u₁)` in `V¹`, depth as
//! a density in `V²`. Vorticity and potential vorticity live in `V⁰`.

use rand::Rng;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::femspaces::{flux_form, wedge, SpaceComplex};
use crate::linalg::{dot, pcg, scaled};

#[derive(Clone, Debug)]
pub struct ModelParams {
    pub g: f64,
    /// Coriolis parameter, `V⁰` coefficients.
    pub f: Vec<f64>,
    /// Bottom topography, `V²` coefficients.
    pub b: Vec<f64>,
}

impl ModelParams {
    pub fn f_plane(space: &SpaceComplex, g: f64, f0: f64) -> Self {
        ModelParams { g, f: vec![f0; space.dim(0)], b: vec![0.0; space.dim(2)] }
    }

    pub fn validate(&self, space: &SpaceComplex) -> Result<()> {
        if !(self.g > 0.0) {
            return Err(Error::Config(format!("gravity must be positive, got {}", self.g)));
        }
        check_len("coriolis field", self.f.len(), space.dim(0))?;
        check_len("topography", self.b.len(), space.dim(2))
    }
}

fn check_len(what: &'static str, got: usize, want: usize) -> Result<()> {
    if got == want {
        Ok(())
    } else {
        Err(Error::DimensionMismatch { what, left: got, right: want })
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct State {
    pub u: Vec<f64>,
    pub d: Vec<f64>,
}

impl State {
    pub fn rest(space: &SpaceComplex, d0: f64) -> Self {
        State { u: vec![0.0; space.dim(1)], d: space.project_scalar(2, |_| d0).map(|f| f.values).unwrap_or_else(|_| vec![d0; space.dim(2)]) }
    }

    /// Check sizes and `D > 0` at every quadrature point.
    pub fn validate(&self, space: &SpaceComplex) -> Result<()> {
        check_len("velocity", self.u.len(), space.dim(1))?;
        check_len("depth", self.d.len(), space.dim(2))?;
        let dq = space.eval2(&self.d);
        for (q, &v) in dq.iter().enumerate() {
            if !(v > 0.0) {
                return Err(Error::NonPositiveDepth { element: space.qp_cell(q), value: v });
            }
        }
        Ok(())
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum PvScheme {
    EnergyEnstrophy,
    Apvm,
    Supg,
}

impl PvScheme {
    pub fn from_name(s: &str) -> Option<Self> {
        match s.to_ascii_lowercase().as_str() {
            "energy_enstrophy" | "energyenstrophy" | "ee" => Some(PvScheme::EnergyEnstrophy),
            "apvm" => Some(PvScheme::Apvm),
            "supg" => Some(PvScheme::Supg),
            _ => None,
        }
    }
}

#[derive(Clone, Copy, Debug)]
pub struct StabilizationConfig {
    pub scheme: PvScheme,
    pub tau_apvm: f64,
    pub alpha_supg: f64,
}

impl Default for StabilizationConfig {
    fn default() -> Self {
        StabilizationConfig { scheme: PvScheme::EnergyEnstrophy, tau_apvm: 0.0, alpha_supg: 0.0 }
    }
}

impl StabilizationConfig {
    pub fn validate(&self) -> Result<()> {
        if self.tau_apvm < 0.0 || self.alpha_supg < 0.0 {
            return Err(Error::Config("stabilization parameters must be nonnegative".into()));
        }
        Ok(())
    }
}

/// `K = |u|²/2` at quadrature points.
pub fn kinetic_energy_density(space: &SpaceComplex, u: &[f64]) -> Vec<f64> {
    space.eval1(u).iter().map(|a| 0.5 * (a[0] * a[0] + a[1] * a[1])).collect()
}

/// `M₀ ζ = D₀₁ᵀ M₁ u`
pub fn diagnose_vorticity(space: &SpaceComplex, u: &[f64]) -> Result<Vec<f64>> {
    check_len("velocity", u.len(), space.dim(1))?;
    let rhs = space.d01.tr_mul_vec(&space.m1.mul_vec(u));
    Ok(space.solve_mass(0, &rhs)?.0)
}

fn depth_weighted_solve(space: &SpaceComplex, d: &[f64], rhs: &[f64]) -> Result<Vec<f64>> {
    let dq = space.eval2(d);
    if let Some(q) = dq.iter().position(|&v| !(v > 0.0)) {
        return Err(Error::NonPositiveDepth { element: space.qp_cell(q), value: dq[q] });
    }
    let md = space.weighted_mass0(&dq);
    match pcg(&md, rhs, None, space.solver) {
        Ok((x, _)) => Ok(x),
        Err(Error::NotPositiveDefinite { .. }) => Err(Error::NotPositiveDefinite { what: "depth-weighted mass matrix" }),
        Err(e) => Err(e),
    }
}

/// `∫ γ q D = ∫ γ (ζ + f)`
pub fn diagnose_pv(space: &SpaceComplex, state: &State, params: &ModelParams, zeta: &[f64]) -> Result<Vec<f64>> {
    let abs: Vec<f64> = zeta.iter().zip(&params.f).map(|(z, f)| z + f).collect();
    depth_weighted_solve(space, &state.d, &space.m0.mul_vec(&abs))
}

/// `M₁ F = ∫ a · (D α_u)`
pub fn compute_mass_flux(space: &SpaceComplex, state: &State) -> Result<Vec<f64>> {
    let dq = space.eval2(&state.d);
    let v: Vec<[f64; 2]> = space.eval1(&state.u).iter().zip(&dq).map(|(a, d)| [d * a[0], d * a[1]]).collect();
    Ok(space.solve_mass(1, &space.load1(&v))?.0)
}

/// `D_t = −D₁₂ F`
pub fn depth_rhs_projection(space: &SpaceComplex, flux: &[f64]) -> Vec<f64> {
    scaled(&space.d12.mul_vec(flux), -1.0)
}

/// PV flux `Q = q′ F`, kept as the pointwise factor `q′` at quadrature points
/// together with the mass flux it multiplies.
#[derive(Clone, Debug)]
pub struct PvFlux {
    pub q_prime: Vec<f64>,
    pub flux: Vec<f64>,
}

impl PvFlux {
    /// L2 projection of `q′ F` into `V¹`.
    pub fn project(&self, space: &SpaceComplex) -> Result<Vec<f64>> {
        let v: Vec<[f64; 2]> = space.eval1(&self.flux).iter().zip(&self.q_prime).map(|(a, q)| [q * a[0], q * a[1]]).collect();
        Ok(space.solve_mass(1, &space.load1(&v))?.0)
    }
}

/// Reference speed used in the SUPG regularisation.
fn reference_speed(space: &SpaceComplex, state: &State, g: f64) -> f64 {
    let mass = space.integrate(&space.eval2(&state.d));
    (g * mass / space.mesh().total_area()).abs().sqrt()
}

/// `q′` at quadrature points for the chosen scheme. `dqd_dt` is `∂(qD)/∂t`
/// at quadrature points (SUPG only; `None` means zero).
pub fn compute_q_flux(
    space: &SpaceComplex,
    state: &State,
    params: &ModelParams,
    cfg: &StabilizationConfig,
    q: &[f64],
    flux: &[f64],
    dqd_dt: Option<&[f64]>,
) -> Result<PvFlux> {
    let qv = space.eval0(q);
    let mut q_prime = qv.clone();
    if cfg.scheme == PvScheme::EnergyEnstrophy {
        return Ok(PvFlux { q_prime, flux: flux.to_vec() });
    }
    let dq = space.eval2(&state.d);
    let fq = space.eval1(flux);
    let gq = space.grad0(q);
    match cfg.scheme {
        PvScheme::Apvm => {
            for i in 0..q_prime.len() {
                if !(dq[i] > 0.0) {
                    return Err(Error::NonPositiveDepth { element: space.qp_cell(i), value: dq[i] });
                }
                q_prime[i] -= cfg.tau_apvm / dq[i] * wedge(gq[i], fq[i]);
            }
        }
        PvScheme::Supg => {
            let div = space.div1(flux);
            let uq = space.eval1(&state.u);
            let eps = 1e-8 * reference_speed(space, state, params.g);
            for i in 0..q_prime.len() {
                if !(dq[i] > 0.0) {
                    return Err(Error::NonPositiveDepth { element: space.qp_cell(i), value: dq[i] });
                }
                let h = space.mesh().cell_area(space.qp_cell(i)).sqrt();
                let speed = uq[i][0].hypot(uq[i][1]);
                let tau = cfg.alpha_supg * h / (speed + eps);
                let r = dqd_dt.map_or(0.0, |t| t[i]) + wedge(gq[i], fq[i]) + qv[i] * div[i];
                q_prime[i] -= tau / dq[i] * r;
            }
        }
        PvScheme::EnergyEnstrophy => unreachable!(),
    }
    Ok(PvFlux { q_prime, flux: flux.to_vec() })
}

/// `Φ = g(D + b) + K` at quadrature points.
pub fn bernoulli(space: &SpaceComplex, state: &State, params: &ModelParams) -> Vec<f64> {
    let k = kinetic_energy_density(space, &state.u);
    let db: Vec<f64> = state.d.iter().zip(&params.b).map(|(d, b)| d + b).collect();
    space.eval2(&db).iter().zip(&k).map(|(h, k)| params.g * h + k).collect()
}

/// Right-hand side load of the velocity equation,
/// `∫ q′ a ∧ F + ∫ d(a) Φ`.
pub fn velocity_load(space: &SpaceComplex, state: &State, params: &ModelParams, pv: &PvFlux) -> Vec<f64> {
    let fq = space.eval1(&pv.flux);
    let v: Vec<[f64; 2]> = fq.iter().zip(&pv.q_prime).map(|(a, q)| [q * a[0], q * a[1]]).collect();
    let mut load = space.load1_wedge(&v);
    // constants lie in the kernel of the pairing; removing the mean only
    // reduces round-off from the large g·D part
    let mut phi = bernoulli(space, state, params);
    let mean = space.integrate(&phi) / space.mesh().total_area();
    phi.iter_mut().for_each(|p| *p -= mean);
    for (l, p) in load.iter_mut().zip(space.load1_div(&phi)) {
        *l += p;
    }
    load
}

pub fn velocity_rhs(space: &SpaceComplex, state: &State, params: &ModelParams, pv: &PvFlux) -> Result<Vec<f64>> {
    Ok(space.solve_mass(1, &velocity_load(space, state, params, pv))?.0)
}

#[derive(Clone, Debug)]
pub struct Tendencies {
    pub u_t: Vec<f64>,
    pub d_t: Vec<f64>,
    pub flux: Vec<f64>,
    pub zeta: Vec<f64>,
    pub q: Vec<f64>,
    pub pv: PvFlux,
}

/// Full primal tendencies with the projected depth equation.
pub fn tendencies(space: &SpaceComplex, state: &State, params: &ModelParams, cfg: &StabilizationConfig, dqd_dt: Option<&[f64]>) -> Result<Tendencies> {
    let flux = compute_mass_flux(space, state)?;
    let d_t = depth_rhs_projection(space, &flux);
    tendencies_with_flux(space, state, params, cfg, flux, d_t, dqd_dt)
}

/// Tendencies for a given mass flux and the depth tendency it induces.
pub fn tendencies_with_flux(
    space: &SpaceComplex,
    state: &State,
    params: &ModelParams,
    cfg: &StabilizationConfig,
    flux: Vec<f64>,
    d_t: Vec<f64>,
    dqd_dt: Option<&[f64]>,
) -> Result<Tendencies> {
    let zeta = diagnose_vorticity(space, &state.u)?;
    let q = diagnose_pv(space, state, params, &zeta)?;
    let pv = compute_q_flux(space, state, params, cfg, &q, &flux, dqd_dt)?;
    let u_t = velocity_rhs(space, state, params, &pv)?;
    Ok(Tendencies { u_t, d_t, flux, zeta, q, pv })
}

/// `q_t` from `M_D q_t = D₀₁ᵀ M₁ u_t − M_{D_t} q`.
pub fn pv_tendency(space: &SpaceComplex, state: &State, q: &[f64], u_t: &[f64], d_t: &[f64]) -> Result<Vec<f64>> {
    let mut rhs = space.d01.tr_mul_vec(&space.m1.mul_vec(u_t));
    let sub = space.weighted_mass0(&space.eval2(d_t)).mul_vec(q);
    for (r, s) in rhs.iter_mut().zip(sub) {
        *r -= s;
    }
    depth_weighted_solve(space, &state.d, &rhs)
}

/// `Ė = Fᵀ M₁ u_t + ∫ Φ D_t`
pub fn energy_rate(space: &SpaceComplex, state: &State, params: &ModelParams, t: &Tendencies) -> f64 {
    let phi = bernoulli(space, state, params);
    let dt = space.eval2(&t.d_t);
    dot(&t.flux, &space.m1.mul_vec(&t.u_t)) + space.integrate(&phi.iter().zip(&dt).map(|(a, b)| a * b).collect::<Vec<_>>())
}

/// Size of the cancelling terms in `Ė`: `∫ |Φ D_t|`.
pub fn energy_rate_scale(space: &SpaceComplex, state: &State, params: &ModelParams, t: &Tendencies) -> f64 {
    let phi = bernoulli(space, state, params);
    let dt = space.eval2(&t.d_t);
    space.integrate(&phi.iter().zip(&dt).map(|(a, b)| (a * b).abs()).collect::<Vec<_>>())
}

/// `Ż = 2 (D₀₁ q)ᵀ M₁ u_t − ∫ q² D_t`
pub fn enstrophy_rate(space: &SpaceComplex, t: &Tendencies) -> f64 {
    let dq = space.d01.mul_vec(&t.q);
    let qv = space.eval0(&t.q);
    let dt = space.eval2(&t.d_t);
    2.0 * dot(&dq, &space.m1.mul_vec(&t.u_t)) - space.integrate(&qv.iter().zip(&dt).map(|(q, d)| q * q * d).collect::<Vec<_>>())
}

/// Size of the cancelling terms in `Ż`: `∫ |q² D_t|`.
pub fn enstrophy_rate_scale(space: &SpaceComplex, t: &Tendencies) -> f64 {
    let qv = space.eval0(&t.q);
    let dt = space.eval2(&t.d_t);
    space.integrate(&qv.iter().zip(&dt).map(|(q, d)| (q * q * d).abs()).collect::<Vec<_>>())
}

#[derive(Clone, Debug, Serialize, PartialEq)]
pub struct Diagnostics {
    pub mass: f64,
    pub energy: f64,
    pub enstrophy: f64,
    pub total_vorticity: f64,
    pub q_min: f64,
    pub q_max: f64,
    pub d_min: f64,
}

/// `E = ∫ D|u|²/2 + g(D²/2 + bD)`, `Z = ∫ q² D`.
pub fn diagnostics(space: &SpaceComplex, state: &State, params: &ModelParams) -> Result<Diagnostics> {
    let dq = space.eval2(&state.d);
    let bq = space.eval2(&params.b);
    let k = kinetic_energy_density(space, &state.u);
    let zeta = diagnose_vorticity(space, &state.u)?;
    let q = diagnose_pv(space, state, params, &zeta)?;
    let qv = space.eval0(&q);
    let e: Vec<f64> = (0..dq.len()).map(|i| dq[i] * k[i] + params.g * (0.5 * dq[i] * dq[i] + bq[i] * dq[i])).collect();
    let z: Vec<f64> = qv.iter().zip(&dq).map(|(q, d)| q * q * d).collect();
    Ok(Diagnostics {
        mass: space.integrate(&dq),
        energy: space.integrate(&e),
        enstrophy: space.integrate(&z),
        total_vorticity: space.integrate(&space.eval0(&zeta)),
        q_min: q.iter().cloned().fold(f64::INFINITY, f64::min),
        q_max: q.iter().cloned().fold(f64::NEG_INFINITY, f64::max),
        d_min: dq.iter().cloned().fold(f64::INFINITY, f64::min),
    })
}

/// Random band-limited scalar field with `max |s| ≤ 1`.
pub fn smooth_random_field<R: Rng>(rng: &mut R, lx: f64, ly: f64, kmax: i32) -> impl Fn([f64; 2]) -> f64 {
    let mut modes: Vec<(f64, f64, f64, f64)> = Vec::new();
    for kx in -kmax..=kmax {
        for ky in 0..=kmax {
            if kx == 0 && ky == 0 {
                continue;
            }
            modes.push((kx as f64, ky as f64, rng.random_range(-1.0..1.0), rng.random_range(0.0..std::f64::consts::TAU)));
        }
    }
    let norm: f64 = modes.iter().map(|m| m.2.abs()).sum::<f64>().max(1e-300);
    move |x: [f64; 2]| {
        let tau = std::f64::consts::TAU;
        modes.iter().map(|&(kx, ky, a, p)| a * (tau * (kx * x[0] / lx + ky * x[1] / ly) + p).cos()).sum::<f64>() / norm
    }
}

/// Random valid state: `D ∈ [0.55, 1.45]·D₀`, `|u| ≤ 0.1·√(g D₀)`.
pub fn random_state<R: Rng>(space: &SpaceComplex, rng: &mut R, g: f64, d0: f64) -> Result<State> {
    let (lx, ly) = (space.mesh().lx(), space.mesh().ly());
    let s = smooth_random_field(rng, lx, ly, 3);
    let u1 = smooth_random_field(rng, lx, ly, 3);
    let u2 = smooth_random_field(rng, lx, ly, 3);
    let umax = 0.1 * (g * d0).sqrt() / std::f64::consts::SQRT_2;
    let d = space.project_scalar(2, |x| d0 * (1.0 + 0.45 * s(x)))?.values;
    let u = space.project_one_form(|x| flux_form([umax * u1(x), umax * u2(x)]))?.values;
    let st = State { u, d };
    st.validate(space)?;
    Ok(st)
}

/// Depth in discrete balance with a fixed velocity: finds `D` (with the
/// mean of `D₀`) such that the velocity load vanishes up to its component in
/// the kernel of `D₁₂`, which is returned as the relative residual.
pub fn balance_depth(space: &SpaceComplex, params: &ModelParams, u: &[f64], d0: f64, max_iter: usize) -> Result<(Vec<f64>, f64)> {
    let cfg = StabilizationConfig::default();
    let n2 = space.dim(2);
    // D12 = A⁻¹ d12_ref: solve with the well-scaled d12_ref d12_refᵀ
    let r = &space.d12_ref;
    let dd = r.matmul(&r.transpose());
    let mut row_scale = vec![1.0; n2];
    for c in 0..space.mesh().n_cells() {
        for &g in space.cell_dofs(2, c) {
            row_scale[g] = space.cell_scale(c);
        }
    }
    let ones = vec![1.0; n2];
    let area_w = space.m2.mul_vec(&ones);
    let total = dot(&area_w, &ones);
    let mut state = State { u: u.to_vec(), d: vec![d0; n2] };
    let opts = crate::linalg::SolverOptions { rtol: 1e-14, atol: 0.0, max_iter: Some(20 * n2 + 500) };
    let mut residual = f64::INFINITY;
    for _ in 0..max_iter {
        // everything except the g D part of the load
        let mut trial = state.clone();
        trial.d = state.d.iter().zip(&params.b).map(|(_, b)| -b).collect();
        let flux = compute_mass_flux(space, &state)?;
        let zeta = diagnose_vorticity(space, u)?;
        let q = diagnose_pv(space, &state, params, &zeta)?;
        let pv = compute_q_flux(space, &state, params, &cfg, &q, &flux, None)?;
        let y = velocity_load(space, &trial, params, &pv);
        // right side of R Rᵀ w = R y, cleaned of its round-off component
        // along the kernel of Rᵀ
        let mut rhs = r.mul_vec(&y);
        let kern: Vec<f64> = area_w.iter().zip(&row_scale).map(|(a, s)| a / s).collect();
        let along = dot(&kern, &rhs) / dot(&kern, &kern);
        rhs.iter_mut().zip(&kern).for_each(|(x, k)| *x -= along * k);
        let w = if crate::linalg::norm2(&rhs) == 0.0 { vec![0.0; n2] } else { pcg(&dd, &rhs, None, opts)?.0 };
        // g M2 (D + b) = −S w + const
        let z: Vec<f64> = w.iter().zip(&row_scale).map(|(w, s)| w * s).collect();
        let md = space.solve_mass(2, &scaled(&z, -1.0 / params.g))?.0;
        let mut d: Vec<f64> = md.iter().zip(&params.b).map(|(m, b)| m - b).collect();
        let shift = d0 - dot(&area_w, &d) / total;
        d.iter_mut().for_each(|x| *x += shift);
        let change = crate::linalg::norm_inf(&crate::linalg::sub(&d, &state.d));
        state.d = d;
        let load = velocity_load(space, &state, params, &compute_q_flux(space, &state, params, &cfg, &diagnose_pv(space, &state, params, &zeta)?, &compute_mass_flux(space, &state)?, None)?);
        let yn = crate::linalg::norm2(&y).max(1e-300);
        residual = crate::linalg::norm2(&load) / yn;
        if change <= 1e-15 * d0 {
            break;
        }
    }
    Ok((state.d, residual))
}

#[cfg(test)]
mod tests;
