//! Right-hand side assembly and time integrators.

use serde::Serialize;

use crate::advect_dg::{dg_depth_rhs, recover_flux_fortin, recover_limiter_flux, slope_limit};
use crate::error::{Error, Result};
use crate::femspaces::{flux_velocity, SpaceComplex};
use crate::linalg::{dot, gmres, CsrMatrix, SolverOptions, Triplets};
use crate::swe_dual::{dual_tendencies, linear_dual, linear_primal, PrimalDual};
use crate::swe_primal::{
    compute_mass_flux, depth_rhs_projection, diagnose_pv, diagnose_vorticity, tendencies_with_flux, ModelParams, PvScheme,
    StabilizationConfig, State,
};

use super::config::{DepthScheme, Equations, RunConfig};

pub enum Discretisation {
    Primal(SpaceComplex),
    PrimalDual(Box<PrimalDual>),
}

/// Everything needed to evaluate tendencies of a state.
pub struct Model {
    pub disc: Discretisation,
    pub params: ModelParams,
    pub stabilization: StabilizationConfig,
    pub depth_scheme: DepthScheme,
    pub limiter: bool,
    pub equations: Equations,
    pub d0: f64,
    pub f0: f64,
}

impl Model {
    pub fn new(disc: Discretisation, params: ModelParams, cfg: &RunConfig) -> Self {
        Model {
            disc,
            params,
            stabilization: cfg.stabilization,
            depth_scheme: cfg.depth_scheme,
            limiter: cfg.limiter,
            equations: cfg.equations,
            d0: cfg.d0,
            f0: cfg.f0,
        }
    }

    pub fn space(&self) -> &SpaceComplex {
        match &self.disc {
            Discretisation::Primal(s) => s,
            Discretisation::PrimalDual(pd) => &pd.primal,
        }
    }

    pub fn uses_supg(&self) -> bool {
        matches!(self.disc, Discretisation::Primal(_)) && self.stabilization.scheme == PvScheme::Supg
    }

    /// `(u_t, D_t)`. `ctx` is `∂(qD)/∂t` at quadrature points for SUPG.
    pub fn rhs(&self, state: &State, ctx: Option<&[f64]>) -> Result<(Vec<f64>, Vec<f64>)> {
        let sp = self.space();
        let g = self.params.g;
        if self.equations == Equations::Linear {
            return match &self.disc {
                Discretisation::Primal(s) => linear_primal(s, g, self.f0, self.d0, &state.u, &state.d),
                Discretisation::PrimalDual(pd) => linear_dual(pd, g, self.f0, self.d0, &state.u, &state.d),
            };
        }
        let (flux, d_t) = match self.depth_scheme {
            DepthScheme::Projection => {
                let f = compute_mass_flux(sp, state)?;
                let dt = depth_rhs_projection(sp, &f);
                (f, dt)
            }
            DepthScheme::UpwindDg => {
                let dt = dg_depth_rhs(sp, state)?;
                (recover_flux_fortin(sp, state, &dt)?.flux, dt)
            }
        };
        match &self.disc {
            Discretisation::Primal(s) => {
                let t = tendencies_with_flux(s, state, &self.params, &self.stabilization, flux, d_t, ctx)?;
                Ok((t.u_t, t.d_t))
            }
            Discretisation::PrimalDual(pd) => {
                let t = dual_tendencies(pd, state, &self.params, flux, d_t)?;
                Ok((t.u_t, t.d_t))
            }
        }
    }

    /// `qD` at quadrature points, for the SUPG time-derivative term.
    pub fn pv_density(&self, state: &State) -> Result<Vec<f64>> {
        let sp = self.space();
        let zeta = diagnose_vorticity(sp, &state.u)?;
        let q = diagnose_pv(sp, state, &self.params, &zeta)?;
        Ok(sp.eval0(&q).iter().zip(sp.eval2(&state.d)).map(|(q, d)| q * d).collect())
    }

    /// Slope-limits the depth. The change is written as the divergence of a
    /// flux `F_s`, and the velocity receives the matching PV flux so that
    /// the PV stays consistent with the limited depth.
    pub fn apply_limiter(&self, state: State) -> Result<State> {
        if !self.limiter {
            return Ok(state);
        }
        let sp = self.space();
        let after = slope_limit(sp, &state.d);
        if after == state.d {
            return Ok(state);
        }
        let fs = recover_limiter_flux(sp, &state.d, &after)?;
        let zeta = diagnose_vorticity(sp, &state.u)?;
        let q = sp.eval0(&diagnose_pv(sp, &state, &self.params, &zeta)?);
        let v: Vec<[f64; 2]> = sp.eval1(&fs).iter().zip(&q).map(|(a, q)| [-q * a[0], -q * a[1]]).collect();
        let du = sp.solve_mass(1, &sp.load1_wedge(&v))?.0;
        let u = state.u.iter().zip(du).map(|(a, b)| a + b).collect();
        Ok(State { u, d: after })
    }

    /// Advective plus gravity-wave Courant number.
    pub fn cfl(&self, state: &State, dt: f64) -> f64 {
        let sp = self.space();
        let umax = sp.eval1(&state.u).iter().map(|a| a[0].hypot(a[1])).fold(0.0, f64::max);
        let dmax = sp.eval2(&state.d).iter().copied().fold(0.0, f64::max);
        (umax + (self.params.g * dmax).sqrt()) * dt / sp.mesh().min_edge_length()
    }
}

/// `a + wb (b − a) + wt t`, so that zero increments leave `a` bitwise intact.
fn combine(a: &State, b: &State, wb: f64, t: &(Vec<f64>, Vec<f64>), wt: f64) -> State {
    State {
        u: (0..a.u.len()).map(|i| a.u[i] + (wb * (b.u[i] - a.u[i]) + wt * t.0[i])).collect(),
        d: (0..a.d.len()).map(|i| a.d[i] + (wb * (b.d[i] - a.d[i]) + wt * t.1[i])).collect(),
    }
}

/// Three-stage strong-stability-preserving Runge–Kutta step, with the
/// limiter applied after every stage.
pub fn step_ssprk3(model: &Model, state: &State, dt: f64, ctx: Option<&[f64]>) -> Result<State> {
    ssprk3_with(state, dt, |y| model.rhs(y, ctx), |y| model.apply_limiter(y))
}

/// SSPRK3 for an arbitrary right-hand side and post-stage map.
pub fn ssprk3_with<F, P>(state: &State, dt: f64, rhs: F, post: P) -> Result<State>
where
    F: Fn(&State) -> Result<(Vec<f64>, Vec<f64>)>,
    P: Fn(State) -> Result<State>,
{
    let k0 = rhs(state)?;
    let y1 = post(combine(state, state, 0.0, &k0, dt))?;
    let k1 = rhs(&y1)?;
    let y2 = post(combine(state, &y1, 0.25, &k1, 0.25 * dt))?;
    let k2 = rhs(&y2)?;
    post(combine(state, &y2, 2.0 / 3.0, &k2, 2.0 / 3.0 * dt))
}

#[derive(Clone, Copy, Debug, Default, Serialize)]
pub struct StepStats {
    pub picard_iterations: usize,
    /// Scaled residual of the trapezoidal equations at the last iterate.
    pub picard_residual: f64,
    pub linear_iterations: usize,
}

/// Centred (trapezoidal) step solved by Picard iteration. Each iteration
/// solves `(I − Δt/2 L) δ = R` for the linear gravity-wave and Coriolis
/// operator `L` about rest, by a Schur complement onto the depth.
pub struct SemiImplicit {
    theta: f64,
    a: CsrMatrix,
    a_diag: Vec<f64>,
    m1: CsrMatrix,
    m2: CsrMatrix,
    area: f64,
    grad: CsrMatrix,
    d12: CsrMatrix,
    g: f64,
    d0: f64,
    opts: SolverOptions,
    pub picard_iters: usize,
    pub picard_tol: f64,
}

impl SemiImplicit {
    pub fn new(model: &Model, dt: f64, picard_iters: usize, picard_tol: f64, rtol: f64) -> Self {
        let sp = model.space();
        let theta = 0.5 * dt;
        let c = sp.wedge_matrix1();
        let mut t = Triplets::new(sp.dim(1), sp.dim(1));
        for (i, j, v) in sp.m1.triplets() {
            t.push(i, j, v);
        }
        for (i, j, v) in c.triplets() {
            t.push(i, j, -theta * model.f0 * v);
        }
        let a = t.to_csr();
        let a_diag = a.diagonal();
        let grad = sp.d12.transpose().matmul(&sp.m2);
        SemiImplicit {
            theta,
            a,
            a_diag,
            m1: sp.m1.clone(),
            m2: sp.m2.clone(),
            area: sp.mesh().total_area(),
            grad,
            d12: sp.d12.clone(),
            g: model.params.g,
            d0: model.d0,
            opts: SolverOptions { rtol, atol: 0.0, max_iter: None },
            picard_iters: picard_iters.max(1),
            picard_tol,
        }
    }

    fn solve_a(&self, b: &[f64], iters: &mut usize) -> Result<Vec<f64>> {
        if b.iter().all(|&x| x == 0.0) {
            return Ok(vec![0.0; b.len()]);
        }
        let inner = SolverOptions { rtol: self.opts.rtol * 1e-3, ..self.opts };
        let (x, st) = gmres(|x| self.a.mul_vec(x), Some(&self.a_diag), b, inner, 80)?;
        *iters += st.iterations;
        Ok(x)
    }

    /// Solve `(I − θL) δ = (r_u, r_d)`.
    pub fn solve_linear(&self, r_u: &[f64], r_d: &[f64], iters: &mut usize) -> Result<(Vec<f64>, Vec<f64>)> {
        let th = self.theta;
        let m1r = self.m1.mul_vec(r_u);
        let a_m1r = self.solve_a(&m1r, iters)?;
        let rhs: Vec<f64> = r_d.iter().zip(self.d12.mul_vec(&a_m1r)).map(|(r, v)| r - th * self.d0 * v).collect();
        let schur_err = std::cell::Cell::new(None);
        let inner = std::cell::Cell::new(0usize);
        let apply = |x: &[f64]| -> Vec<f64> {
            let mut it = 0;
            let y = match self.solve_a(&self.grad.mul_vec(x), &mut it) {
                Ok(y) => y,
                Err(e) => {
                    schur_err.set(Some(e));
                    vec![0.0; self.a.nrows()]
                }
            };
            inner.set(inner.get() + it);
            let s = self.d12.mul_vec(&y);
            x.iter().zip(s).map(|(a, b)| a + th * th * self.g * self.d0 * b).collect()
        };
        let dd = if rhs.iter().all(|&x| x == 0.0) {
            vec![0.0; rhs.len()]
        } else {
            let (x, st) = gmres(apply, None, &rhs, self.opts, 60)?;
            *iters += st.iterations;
            x
        };
        if let Some(e) = schur_err.take() {
            return Err(e);
        }
        *iters += inner.get();
        let mut b = m1r;
        b.iter_mut().zip(self.grad.mul_vec(&dd)).for_each(|(x, v)| *x += th * self.g * v);
        let du = self.solve_a(&b, iters)?;
        // back-substitute so the depth change is an exact divergence
        let dd = r_d.iter().zip(self.d12.mul_vec(&du)).map(|(r, v)| r - th * self.d0 * v).collect();
        Ok((du, dd))
    }

    /// Root-mean-square value of a field in the given mass norm.
    fn rms(&self, m: &CsrMatrix, v: &[f64]) -> f64 {
        (dot(&m.mul_vec(v), v).max(0.0) / self.area).sqrt()
    }

    pub fn step(&self, model: &Model, state: &State, ctx: Option<&[f64]>) -> Result<(State, StepStats)> {
        let th = self.theta;
        let c = (self.g * self.d0).sqrt();
        let kn = model.rhs(state, ctx)?;
        let mut y = state.clone();
        let mut stats = StepStats::default();
        let (mut prev, mut first) = (f64::INFINITY, f64::INFINITY);
        for k in 0..self.picard_iters {
            let ky = if k == 0 { kn.clone() } else { model.rhs(&y, ctx)? };
            let r_u: Vec<f64> = (0..y.u.len()).map(|i| state.u[i] - y.u[i] + th * (kn.0[i] + ky.0[i])).collect();
            let r_d: Vec<f64> = (0..y.d.len()).map(|i| state.d[i] - y.d[i] + th * (kn.1[i] + ky.1[i])).collect();
            let res = (self.rms(&self.m1, &r_u) / c).max(self.rms(&self.m2, &r_d) / self.d0);
            stats.picard_residual = res;
            if !res.is_finite() || res > first {
                return Err(Error::PicardDiverged(res));
            }
            // converged, or stalled at the round-off floor
            if res <= self.picard_tol || (res > 0.5 * prev && res < 1e-10) {
                break;
            }
            if k == 0 {
                first = res;
            }
            prev = res;
            let (du, dd) = self.solve_linear(&r_u, &r_d, &mut stats.linear_iterations)?;
            y.u.iter_mut().zip(du).for_each(|(a, b)| *a += b);
            y.d.iter_mut().zip(dd).for_each(|(a, b)| *a += b);
            stats.picard_iterations = k + 1;
        }
        Ok((y, stats))
    }
}

/// Cell-centred velocity vectors, for output.
pub fn cell_velocities(space: &SpaceComplex, u: &[f64]) -> Vec<[f64; 2]> {
    let m = space.mesh();
    (0..m.n_cells())
        .map(|c| {
            let x = m.cell_centroid_unwrapped(c);
            match space.basis_at_point(c, x) {
                Some(lv) => {
                    let dofs = space.cell_dofs(1, c);
                    let mut a = [0.0; 2];
                    for (i, &gi) in dofs.iter().enumerate() {
                        a[0] += u[gi] * lv.phi1[i][0];
                        a[1] += u[gi] * lv.phi1[i][1];
                    }
                    flux_velocity(a)
                }
                None => [f64::NAN; 2],
            }
        })
        .collect()
}
