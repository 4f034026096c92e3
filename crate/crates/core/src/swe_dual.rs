//! Primal-dual formulation: circulation velocity and vorticity on the dual
//! mesh, piecewise-constant dual PV with upwind transport, and the dual PV
//! flux `Q̃` fed back into the primal velocity equation through `⋆ₕ`.

use crate::error::{Error, Result};
use crate::feec_ops::{cross_pairing, CrossPairing, HodgeStarOp};
use crate::femspaces::{build_space_complex, Family, SpaceComplex};
use crate::linalg::scaled;
use crate::mesh::{build_dual_mesh, Mesh, Point};
use crate::poly::gauss_legendre01;
use crate::swe_primal::{bernoulli, ModelParams, State};

/// A primal complex, its centroidal dual and the Hodge stars between them.
#[derive(Clone, Debug)]
pub struct PrimalDual {
    pub primal: SpaceComplex,
    pub dual: SpaceComplex,
    pub cross: CrossPairing,
    pub h0: HodgeStarOp,
    pub h1: HodgeStarOp,
    pub h2: HodgeStarOp,
}

impl PrimalDual {
    pub fn new(mesh: &Mesh, family: Family) -> Result<Self> {
        if !family.is_whitney() {
            return Err(Error::IncompatibleFamily { family: family.name().into(), kind: "primal-dual formulation".into() });
        }
        let primal = build_space_complex(mesh, family)?;
        let dual = build_space_complex(&build_dual_mesh(mesh)?, family)?;
        Self::from_spaces(primal, dual)
    }

    pub fn from_spaces(primal: SpaceComplex, dual: SpaceComplex) -> Result<Self> {
        let cross = cross_pairing(&primal, &dual);
        let h0 = HodgeStarOp::from_pairing(&cross, &primal, &dual, 0)?;
        let h1 = HodgeStarOp::from_pairing(&cross, &primal, &dual, 1)?;
        let h2 = HodgeStarOp::from_pairing(&cross, &primal, &dual, 2)?;
        Ok(PrimalDual { primal, dual, cross, h0, h1, h2 })
    }

    fn dual_areas(&self) -> Vec<f64> {
        let m = self.dual.mesh();
        (0..m.n_cells()).map(|c| m.cell_area(c)).collect()
    }

    /// Dual-cell averages of a primal `V²` density.
    pub fn depth_on_dual(&self, d: &[f64]) -> Vec<f64> {
        self.cross.w22.mul_vec(d).iter().zip(self.dual_areas()).map(|(v, a)| v / a).collect()
    }

    /// Dual-cell averages of a primal `V⁰` field.
    pub fn scalar_on_dual(&self, f: &[f64]) -> Vec<f64> {
        self.cross.w2.tr_mul_vec(f).iter().zip(self.dual_areas()).map(|(v, a)| v / a).collect()
    }
}

#[derive(Clone, Debug)]
pub struct DualState {
    pub v: Vec<f64>,
    pub zeta_d: Vec<f64>,
    pub q_d: Vec<f64>,
}

/// `ṽ = H₁⁻¹ u`
pub fn dual_velocity(h1: &HodgeStarOp, u: &[f64]) -> Result<Vec<f64>> {
    if u.iter().all(|&x| x == 0.0) {
        return Ok(vec![0.0; u.len()]);
    }
    h1.apply_inverse(u)
}

/// `ζ_d = d ṽ`
pub fn dual_vorticity(dual: &SpaceComplex, v: &[f64]) -> Vec<f64> {
    dual.d12.mul_vec(v)
}

/// `q_d = (ζ_d + f_d) / D_d` cell by cell.
pub fn diagnose_dual_pv(zeta_d: &[f64], d_dual: &[f64], f_dual: &[f64]) -> Result<Vec<f64>> {
    zeta_d
        .iter()
        .zip(d_dual)
        .zip(f_dual)
        .enumerate()
        .map(|(c, ((z, d), f))| if *d > 0.0 { Ok((z + f) / d) } else { Err(Error::NonPositiveDepth { element: c, value: *d }) })
        .collect()
}

/// Parameter interval of the segment `a + s·t`, `s ∈ [0, 1]`, inside a
/// counterclockwise convex polygon.
fn clip_segment(a: Point, t: Point, poly: &[Point]) -> Option<(f64, f64)> {
    let (mut lo, mut hi) = (0.0f64, 1.0f64);
    let n = poly.len();
    for k in 0..n {
        let (p, q) = (poly[k], poly[(k + 1) % n]);
        let e = [q[0] - p[0], q[1] - p[1]];
        // inside: cross(e, x − p) ≥ 0
        let c0 = e[0] * (a[1] - p[1]) - e[1] * (a[0] - p[0]);
        let dc = e[0] * t[1] - e[1] * t[0];
        if dc.abs() < 1e-300 {
            if c0 < 0.0 {
                return None;
            }
        } else {
            let s = -c0 / dc;
            if dc > 0.0 {
                lo = lo.max(s);
            } else {
                hi = hi.min(s);
            }
        }
    }
    (hi - lo > 1e-14).then_some((lo, hi))
}

/// Line integral of a primal `V¹` field along every dual edge (the flux of
/// the primal field across it), integrated piece by piece through the two
/// primal cells the dual edge crosses.
pub fn dual_edge_flux(pd: &PrimalDual, w: &[f64]) -> Result<Vec<f64>> {
    let p = &pd.primal;
    let m = p.mesh();
    let dm = pd.dual.mesh();
    let g = gauss_legendre01(3);
    let mut out = vec![0.0; dm.n_edges()];
    for (e, item) in out.iter_mut().enumerate() {
        let [l, r] = dm.edge(e).v;
        let t = dm.edge_vector(e);
        let cl = m.cell_centroid_unwrapped(l);
        let cr = m.cell_centroid_unwrapped(r);
        let mut total = 0.0;
        let mut covered = 0.0;
        for (c, a) in [(l, cl), (r, [cr[0] - t[0], cr[1] - t[1]])] {
            let dofs = p.cell_dofs(1, c);
            for (pi, piece) in p.pieces(c).iter().enumerate() {
                let Some((s0, s1)) = clip_segment(a, t, &piece.polygon()) else { continue };
                covered += s1 - s0;
                for &(s, wq) in &g {
                    let ss = s0 + s * (s1 - s0);
                    let x = [a[0] + ss * t[0], a[1] + ss * t[1]];
                    let lv = p.basis_at(c, pi, x);
                    let mut v = [0.0; 2];
                    for (&gd, b) in dofs.iter().zip(&lv.phi1) {
                        v[0] += w[gd] * b[0];
                        v[1] += w[gd] * b[1];
                    }
                    total += wq * (s1 - s0) * (v[0] * t[0] + v[1] * t[1]);
                }
            }
        }
        if (covered - 1.0).abs() > 1e-9 {
            return Err(Error::InvalidMesh(format!("dual edge {e} is not covered by its two primal cells ({covered})")));
        }
        *item = total;
    }
    Ok(out)
}

/// `Q̃` on each dual edge: upwind `q_d` times the flux of `F` across it.
pub fn dual_pv_step_flux(pd: &PrimalDual, q_d: &[f64], flux: &[f64]) -> Result<Vec<f64>> {
    let crossing = dual_edge_flux(pd, flux)?;
    let dm = pd.dual.mesh();
    Ok((0..dm.n_edges())
        .map(|e| {
            // the field's tangential integral is the flux towards the right
            // (second) dual cell
            let [(a, _), (b, _)] = dm.edge_cells(e);
            let s = crossing[e];
            let qu = if s > 0.0 {
                q_d[a]
            } else if s < 0.0 {
                q_d[b]
            } else {
                0.5 * (q_d[a] + q_d[b])
            };
            qu * s
        })
        .collect())
}

/// `u_t = −⋆ₕ Q̃ − δʰ Φ`
pub fn dual_velocity_rhs(pd: &PrimalDual, state: &State, params: &ModelParams, qtilde: &[f64]) -> Result<Vec<f64>> {
    let p = &pd.primal;
    let phi = bernoulli(p, state, params);
    let mut u_t = scaled(&pd.h1.apply(qtilde)?, -1.0);
    let grad = p.solve_mass(1, &p.load1_div(&phi))?.0;
    u_t.iter_mut().zip(grad).for_each(|(a, b)| *a += b);
    Ok(u_t)
}

#[derive(Clone, Debug)]
pub struct DualTendencies {
    pub u_t: Vec<f64>,
    pub d_t: Vec<f64>,
    pub flux: Vec<f64>,
    pub dual: DualState,
    pub d_dual: Vec<f64>,
    pub qtilde: Vec<f64>,
}

/// Primal-dual tendencies for a given mass flux and the depth tendency it
/// induces (`d_t = −D₁₂ F`).
pub fn dual_tendencies(pd: &PrimalDual, state: &State, params: &ModelParams, flux: Vec<f64>, d_t: Vec<f64>) -> Result<DualTendencies> {
    let v = dual_velocity(&pd.h1, &state.u)?;
    let zeta_d = dual_vorticity(&pd.dual, &v);
    let d_dual = pd.depth_on_dual(&state.d);
    let f_dual = pd.scalar_on_dual(&params.f);
    let q_d = diagnose_dual_pv(&zeta_d, &d_dual, &f_dual)?;
    let qtilde = dual_pv_step_flux(pd, &q_d, &flux)?;
    let u_t = dual_velocity_rhs(pd, state, params, &qtilde)?;
    Ok(DualTendencies { u_t, d_t, flux, dual: DualState { v, zeta_d, q_d }, d_dual, qtilde })
}

/// `∂q_d/∂t = (∂ζ_d/∂t − q_d ∂D_d/∂t) / D_d` with `∂ζ_d/∂t = d H₁⁻¹ u_t`.
pub fn dual_pv_tendency(pd: &PrimalDual, t: &DualTendencies) -> Result<Vec<f64>> {
    let zt = dual_vorticity(&pd.dual, &dual_velocity(&pd.h1, &t.u_t)?);
    let dt = pd.depth_on_dual(&t.d_t);
    Ok((0..zt.len()).map(|c| (zt[c] - t.dual.q_d[c] * dt[c]) / t.d_dual[c]).collect())
}

/// Linearised tendencies about rest with depth `d0` and constant `f0`:
/// `(u_t, D′_t)` for the primal formulation.
pub fn linear_primal(space: &SpaceComplex, g: f64, f0: f64, d0: f64, u: &[f64], dp: &[f64]) -> Result<(Vec<f64>, Vec<f64>)> {
    let a = space.eval1(u);
    let cor: Vec<[f64; 2]> = a.iter().map(|v| [f0 * v[0], f0 * v[1]]).collect();
    let mut load = space.load1_wedge(&cor);
    let pres: Vec<f64> = space.eval2(dp).iter().map(|v| g * v).collect();
    load.iter_mut().zip(space.load1_div(&pres)).for_each(|(l, p)| *l += p);
    let u_t = space.solve_mass(1, &load)?.0;
    Ok((u_t, scaled(&space.d12.mul_vec(u), -d0)))
}

/// The same linearisation through the primal-dual route, where the Coriolis
/// term is `−⋆ₕ Q̃` with `Q̃ = (f0/d0)·(crossing flux of d0·u)`.
pub fn linear_dual(pd: &PrimalDual, g: f64, f0: f64, d0: f64, u: &[f64], dp: &[f64]) -> Result<(Vec<f64>, Vec<f64>)> {
    let p = &pd.primal;
    let flux = scaled(u, d0);
    let qtilde = scaled(&dual_edge_flux(pd, &flux)?, f0 / d0);
    let mut u_t = scaled(&pd.h1.apply(&qtilde)?, -1.0);
    let pres: Vec<f64> = p.eval2(dp).iter().map(|v| g * v).collect();
    let grad = p.solve_mass(1, &p.load1_div(&pres))?.0;
    u_t.iter_mut().zip(grad).for_each(|(a, b)| *a += b);
    Ok((u_t, scaled(&p.d12.mul_vec(u), -d0)))
}
