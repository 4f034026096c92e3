//! Upwind discontinuous-Galerkin depth transport with local recovery of a
//! mass flux in `V¹` whose divergence reproduces the transport exactly.

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};
use crate::femspaces::{wedge, LocalValues, SpaceComplex};
use crate::mesh::Point;
use crate::poly::gauss_legendre01;
use crate::swe_primal::State;

const EDGE_POINTS: usize = 4;

#[derive(Clone, Debug)]
pub struct RecoveredFlux {
    pub flux: Vec<f64>,
    /// `max |D_t + D₁₂ F|`
    pub residual_norm: f64,
}

/// Quadrature sample on a local edge, with the upwind depth and the outward
/// flux of `u` through it.
struct EdgeTrace {
    x: Point,
    /// Gauss weight times the tangent `P_{k+1} − P_k`.
    wt: [f64; 2],
    /// Edge parameter in `[0, 1]` along the counterclockwise direction.
    s: f64,
    flux: f64,
    d_up: f64,
}

fn values_at(space: &SpaceComplex, c: usize, x: Point) -> Result<LocalValues> {
    space.basis_at_point(c, x).ok_or_else(|| Error::InvalidMesh(format!("edge point outside cell {c}")))
}

fn combine(dofs: &[usize], coeffs: &[f64], phi: &[f64]) -> f64 {
    dofs.iter().zip(phi).map(|(&g, v)| coeffs[g] * v).sum()
}

fn combine1(dofs: &[usize], coeffs: &[f64], phi: &[[f64; 2]]) -> [f64; 2] {
    dofs.iter().zip(phi).fold([0.0; 2], |a, (&g, v)| [a[0] + coeffs[g] * v[0], a[1] + coeffs[g] * v[1]])
}

/// Neighbour of cell `c` across local edge `k`, and its local edge index.
fn neighbour(space: &SpaceComplex, c: usize, k: usize) -> (usize, usize) {
    let e = space.mesh().cell(c).edges[k].0;
    let [a, b] = space.mesh().edge_cells(e);
    if a == (c, k) {
        b
    } else {
        a
    }
}

fn edge_traces(space: &SpaceComplex, state: &State, c: usize, k: usize) -> Result<Vec<EdgeTrace>> {
    let m = space.mesh();
    let (cn, l) = neighbour(space, c, k);
    let p = m.cell_positions(c);
    let (p0, p1) = (p[k], p[(k + 1) % p.len()]);
    let q = m.cell_positions(cn);
    let (q0, q1) = (q[l], q[(l + 1) % q.len()]);
    let t = [p1[0] - p0[0], p1[1] - p0[1]];
    let (d1, d2, d2n) = (space.cell_dofs(1, c), space.cell_dofs(2, c), space.cell_dofs(2, cn));
    let mut out = Vec::with_capacity(EDGE_POINTS);
    let mut inside = Vec::with_capacity(EDGE_POINTS);
    let mut total = 0.0;
    for (s, w) in gauss_legendre01(EDGE_POINTS) {
        let x = [p0[0] + s * t[0], p0[1] + s * t[1]];
        let xn = [q1[0] + s * (q0[0] - q1[0]), q1[1] + s * (q0[1] - q1[1])];
        let lv = values_at(space, c, x)?;
        let ln = values_at(space, cn, xn)?;
        let a = combine1(d1, &state.u, &lv.phi1);
        let wt = [w * t[0], w * t[1]];
        let flux = a[0] * wt[0] + a[1] * wt[1];
        total += flux;
        inside.push((combine(d2, &state.d, &lv.phi2), combine(d2n, &state.d, &ln.phi2)));
        out.push(EdgeTrace { x, wt, s, flux, d_up: 0.0 });
    }
    for (tr, (din, dout)) in out.iter_mut().zip(inside) {
        tr.d_up = if total > 0.0 {
            din
        } else if total < 0.0 {
            dout
        } else {
            0.5 * (din + dout)
        };
    }
    Ok(out)
}

/// Gradients of the (at most affine) local `V²` basis functions of cell `c`,
/// from a least-squares affine fit at the quadrature points.
fn v2_gradients(space: &SpaceComplex, c: usize) -> Vec<[f64; 2]> {
    let n2 = space.n_local(2);
    if n2 == 1 {
        return vec![[0.0; 2]];
    }
    let r = space.qp_range(c);
    let xs = &space.qp_points()[r.clone()];
    let a = DMatrix::from_fn(xs.len(), 3, |i, j| if j == 0 { 1.0 } else { xs[i][j - 1] });
    let svd = a.svd(true, true);
    (0..n2)
        .map(|i| {
            let b = DVector::from_iterator(xs.len(), r.clone().map(|q| space.phi2_q(q)[i]));
            let x = svd.solve(&b, 1e-14).expect("affine fit");
            [x[1], x[2]]
        })
        .collect()
}

fn local_mass2(space: &SpaceComplex, c: usize) -> DMatrix<f64> {
    let n2 = space.n_local(2);
    let mut m = DMatrix::zeros(n2, n2);
    for q in space.qp_range(c) {
        let p = space.phi2_q(q);
        for i in 0..n2 {
            for j in 0..n2 {
                m[(i, j)] += space.qp_weights()[q] * p[i] * p[j];
            }
        }
    }
    m
}

fn solve_local(a: DMatrix<f64>, b: DVector<f64>) -> Result<DVector<f64>> {
    a.lu().solve(&b).ok_or(Error::SingularLocalSystem)
}

/// `∫_K ω D_t = ∫_K ∇ω·(D u) − ∮ ω D^u u·n`, solved element by element.
pub fn dg_depth_rhs(space: &SpaceComplex, state: &State) -> Result<Vec<f64>> {
    let m = space.mesh();
    let n2 = space.n_local(2);
    let mut out = vec![0.0; space.dim(2)];
    let uq = space.eval1(&state.u);
    let dq = space.eval2(&state.d);
    for c in 0..m.n_cells() {
        if m.cell_area(c) <= 0.0 {
            return Err(Error::ZeroAreaElement(c));
        }
        let grads = v2_gradients(space, c);
        let mut rhs = DVector::zeros(n2);
        for q in space.qp_range(c) {
            for i in 0..n2 {
                rhs[i] += space.qp_weights()[q] * dq[q] * wedge(grads[i], uq[q]);
            }
        }
        for k in 0..m.cell(c).edges.len() {
            for tr in edge_traces(space, state, c, k)? {
                let lv = values_at(space, c, tr.x)?;
                for i in 0..n2 {
                    rhs[i] -= lv.phi2[i] * tr.d_up * tr.flux;
                }
            }
        }
        let x = solve_local(local_mass2(space, c), rhs)?;
        for (i, &g) in space.cell_dofs(2, c).iter().enumerate() {
            out[g] = x[i];
        }
    }
    Ok(out)
}

fn edge_moment_weights(legs: usize, s: f64) -> Vec<f64> {
    (0..legs).map(|m| if m == 0 { 1.0 } else { 2.0 * s - 1.0 }).collect()
}

/// Number of cells each `V¹` DOF belongs to.
fn v1_multiplicity(space: &SpaceComplex) -> Vec<u8> {
    let mut cnt = vec![0u8; space.dim(1)];
    for c in 0..space.mesh().n_cells() {
        for &g in space.cell_dofs(1, c) {
            cnt[g] += 1;
        }
    }
    cnt
}

/// Local flux recovery: edge moments of `F` match those of `D^u u`, and
/// `∫_K ∇ω·F = ∫_K ∇ω·(D u)` for every local `ω ∈ V²`.
pub fn recover_flux_fortin(space: &SpaceComplex, state: &State, d_t: &[f64]) -> Result<RecoveredFlux> {
    let m = space.mesh();
    let n1 = space.n_local(1);
    let mult = v1_multiplicity(space);
    let n_edge_dofs = (0..n1).filter(|&i| mult[space.cell_dofs(1, 0)[i]] == 2).count();
    let legs = n_edge_dofs / m.cell(0).edges.len();
    let uq = space.eval1(&state.u);
    let dq = space.eval2(&state.d);
    let mut flux = vec![0.0; space.dim(1)];
    let mut hits = vec![0u8; space.dim(1)];
    for c in 0..m.n_cells() {
        let mut a = DMatrix::zeros(n1, n1);
        let mut b = DVector::zeros(n1);
        let mut row = 0;
        for k in 0..m.cell(c).edges.len() {
            let traces = edge_traces(space, state, c, k)?;
            for mm in 0..legs {
                for tr in &traces {
                    let lw = edge_moment_weights(legs, tr.s)[mm];
                    let lv = values_at(space, c, tr.x)?;
                    for j in 0..n1 {
                        a[(row, j)] += lw * (lv.phi1[j][0] * tr.wt[0] + lv.phi1[j][1] * tr.wt[1]);
                    }
                    b[row] += lw * tr.d_up * tr.flux;
                }
                row += 1;
            }
        }
        if row < n1 {
            // constant gradients span the gradients of the affine V² functions
            for e in [[1.0, 0.0], [0.0, 1.0]] {
                if row == n1 {
                    break;
                }
                for q in space.qp_range(c) {
                    let w = space.qp_weights()[q];
                    for j in 0..n1 {
                        a[(row, j)] += w * wedge(e, space.phi1_q(q)[j]);
                    }
                    b[row] += w * dq[q] * wedge(e, uq[q]);
                }
                row += 1;
            }
        }
        if row != n1 {
            return Err(Error::SingularLocalSystem);
        }
        let x = solve_local(a, b)?;
        for (j, &g) in space.cell_dofs(1, c).iter().enumerate() {
            flux[g] += x[j];
            hits[g] += 1;
        }
    }
    for (f, h) in flux.iter_mut().zip(&hits) {
        *f /= *h as f64;
    }
    let div = space.d12.mul_vec(&flux);
    let residual_norm = div.iter().zip(d_t).map(|(a, b)| (a + b).abs()).fold(0.0, f64::max);
    Ok(RecoveredFlux { flux, residual_norm })
}

/// Cell means of a `V²` field.
pub fn cell_means(space: &SpaceComplex, d: &[f64]) -> Vec<f64> {
    let m = space.mesh();
    let ints = space.integrate_cells(&space.eval2(d));
    ints.iter().enumerate().map(|(c, v)| v / m.cell_area(c)).collect()
}

/// Barth–Jespersen limiting: each element's deviation from its mean is
/// scaled so that the vertex values stay within the range of the element and
/// edge-neighbour means.
pub fn slope_limit(space: &SpaceComplex, d: &[f64]) -> Vec<f64> {
    if space.n_local(2) == 1 {
        return d.to_vec();
    }
    let m = space.mesh();
    let means = cell_means(space, d);
    let mut out = d.to_vec();
    for c in 0..m.n_cells() {
        let (mut lo, mut hi) = (means[c], means[c]);
        for k in 0..m.cell(c).edges.len() {
            let nb = means[neighbour(space, c, k).0];
            lo = lo.min(nb);
            hi = hi.max(nb);
        }
        let dofs = space.cell_dofs(2, c);
        let mut phi: f64 = 1.0;
        for &x in m.cell_positions(c) {
            let Some(lv) = space.basis_at_point(c, x) else { continue };
            let v = combine(dofs, d, &lv.phi2);
            let dev = v - means[c];
            if dev > 0.0 {
                phi = phi.min((hi - means[c]) / dev);
            } else if dev < 0.0 {
                phi = phi.min((lo - means[c]) / dev);
            }
        }
        if phi < 1.0 {
            let one = constant_coeffs(space, c);
            for (i, &g) in dofs.iter().enumerate() {
                out[g] = means[c] * one[i] + phi * (d[g] - means[c] * one[i]);
            }
        }
    }
    out
}

/// Local coefficients of the constant 1 in `V²` on cell `c`.
fn constant_coeffs(space: &SpaceComplex, c: usize) -> Vec<f64> {
    let n2 = space.n_local(2);
    let mut b = DVector::zeros(n2);
    for q in space.qp_range(c) {
        for i in 0..n2 {
            b[i] += space.qp_weights()[q] * space.phi2_q(q)[i];
        }
    }
    solve_local(local_mass2(space, c), b).map(|x| x.iter().copied().collect()).unwrap_or_else(|_| vec![1.0; n2])
}

/// Flux with vanishing edge moments such that `D₁₂ F_s = after − before`,
/// built from the element-interior `V¹` functions of each cell.
pub fn recover_limiter_flux(space: &SpaceComplex, before: &[f64], after: &[f64]) -> Result<Vec<f64>> {
    let mb = space.integrate(&space.eval2(before));
    let ma = space.integrate(&space.eval2(after));
    let relative = (ma - mb).abs() / mb.abs().max(f64::MIN_POSITIVE);
    if relative > 1e-12 {
        return Err(Error::MassMismatch { relative });
    }
    let mut flux = vec![0.0; space.dim(1)];
    if space.n_local(2) == 1 {
        return Ok(flux);
    }
    let mult = v1_multiplicity(space);
    for c in 0..space.mesh().n_cells() {
        let d2 = space.cell_dofs(2, c);
        let diff: Vec<f64> = d2.iter().map(|&g| after[g] - before[g]).collect();
        if diff.iter().all(|&v| v == 0.0) {
            continue;
        }
        let interior: Vec<usize> = space.cell_dofs(1, c).iter().copied().filter(|&g| mult[g] == 1).collect();
        let a = DMatrix::from_fn(d2.len(), interior.len(), |i, j| space.d12.get(d2[i], interior[j]));
        let x = a.clone().svd(true, true).solve(&DVector::from_vec(diff), 1e-14).map_err(|_| Error::SingularLocalSystem)?;
        for (j, &g) in interior.iter().enumerate() {
            flux[g] = x[j];
        }
    }
    Ok(flux)
}
