//! Exterior derivative, discrete codifferential `δʰ`, discrete Hodge stars
//! between a primal and a dual complex, and the discrete Helmholtz
//! decomposition.
//!
//! `δʰ` on 1-forms is the plain `L²` adjoint of `d` (`M₀ δʰω = D₀₁ᵀ M₁ ω`).
//! On 2-forms it carries the opposite sign (`M₁ δʰφ = −D₁₂ᵀ M₂ φ`), which is
//! the convention under which `⋆ₕ d = δʰ ⋆ₕ` holds for both `k = 0` and
//! `k = 1`.

pub mod overlap;

use crate::error::{Error, Result};
use crate::femspaces::{FormCoeffs, SpaceComplex};
use crate::linalg::{axpy, dot, gmres, norm2, pcg, scaled, CsrMatrix, SolverOptions};

pub use overlap::{cross_pairing, CrossPairing};

pub fn apply_d(space: &SpaceComplex, k: usize, w: &FormCoeffs) -> Result<FormCoeffs> {
    match k {
        0 => Ok(FormCoeffs::new(1, space.d01.mul_vec(w.expect(0, space)?))),
        1 => Ok(FormCoeffs::new(2, space.d12.mul_vec(w.expect(1, space)?))),
        _ => Err(Error::WrongSpace { expected: 1, got: k }),
    }
}

pub fn apply_delta_h(space: &SpaceComplex, k: usize, w: &FormCoeffs) -> Result<FormCoeffs> {
    // solved near round-off so that (δʰ)² vanishes despite the 1/h² growth
    // of M⁻¹ against the unscaled incidence matrices
    let tight = |k: usize, b: &[f64]| pcg(space.mass(k), b, None, SolverOptions { rtol: 1e-15, atol: 0.0, max_iter: Some(10 * b.len() + 500) });
    match k {
        1 => {
            let v = w.expect(1, space)?;
            let rhs = space.d01.tr_mul_vec(&space.m1.mul_vec(v));
            Ok(FormCoeffs::new(0, tight(0, &rhs)?.0))
        }
        2 => {
            let v = w.expect(2, space)?;
            let rhs = scaled(&space.d12.tr_mul_vec(&space.m2.mul_vec(v)), -1.0);
            Ok(FormCoeffs::new(1, tight(1, &rhs)?.0))
        }
        _ => Err(Error::WrongSpace { expected: 1, got: k }),
    }
}

/// `H_k : Λᵏ_d → Λ^{2−k}_p` defined by `M^p_{2−k} (H_k ω) = (−1)ᵏ W_k ω`.
#[derive(Clone, Debug)]
pub struct HodgeStarOp {
    pub k: usize,
    /// `(−1)ᵏ W_k`, rows primal, columns dual.
    pub pairing: CsrMatrix,
    mass: CsrMatrix,
    opts: SolverOptions,
}

impl HodgeStarOp {
    pub fn from_pairing(cross: &CrossPairing, primal: &SpaceComplex, dual: &SpaceComplex, k: usize) -> Result<Self> {
        if k > 2 {
            return Err(Error::WrongSpace { expected: 1, got: k });
        }
        let (np, nd) = (primal.dim(2 - k), dual.dim(k));
        if np != nd {
            return Err(Error::DimensionMismatch { what: "Hodge star", left: np, right: nd });
        }
        let w = match k {
            0 => cross.w0.clone(),
            1 => cross.w1.scale_rows(&vec![-1.0; np]),
            _ => cross.w2.clone(),
        };
        Ok(HodgeStarOp { k, pairing: w, mass: primal.mass(2 - k).clone(), opts: primal.solver })
    }

    pub fn dim(&self) -> usize {
        self.pairing.nrows()
    }

    pub fn apply(&self, w: &[f64]) -> Result<Vec<f64>> {
        Ok(pcg(&self.mass, &self.pairing.mul_vec(w), None, self.opts)?.0)
    }

    /// `H_kᵀ y = (±W)ᵀ M⁻¹ y`
    pub fn apply_transpose(&self, y: &[f64]) -> Result<Vec<f64>> {
        Ok(self.pairing.tr_mul_vec(&pcg(&self.mass, y, None, self.opts)?.0))
    }

    /// `H_k⁻¹ u`, by GMRES on the pairing matrix.
    pub fn apply_inverse(&self, u: &[f64]) -> Result<Vec<f64>> {
        let rhs = self.mass.mul_vec(u);
        let diag = self.pairing.diagonal();
        let opts = SolverOptions { max_iter: Some(20 * self.dim() + 200), ..self.opts };
        Ok(gmres(|x| self.pairing.mul_vec(x), usable_diag(&diag), &rhs, opts, 60)?.0)
    }

    /// `H_k⁻ᵀ y = M (±W)⁻ᵀ y`
    pub fn apply_inverse_transpose(&self, y: &[f64]) -> Result<Vec<f64>> {
        let diag = self.pairing.diagonal();
        let opts = SolverOptions { max_iter: Some(20 * self.dim() + 200), ..self.opts };
        let z = gmres(|x| self.pairing.tr_mul_vec(x), usable_diag(&diag), y, opts, 60)?.0;
        Ok(self.mass.mul_vec(&z))
    }

    /// Dense `H_k`, for small meshes.
    pub fn to_dense(&self) -> Result<nalgebra::DMatrix<f64>> {
        let n = self.dim();
        let mut h = nalgebra::DMatrix::zeros(n, n);
        let mut e = vec![0.0; n];
        for j in 0..n {
            e[j] = 1.0;
            let col = self.apply(&e)?;
            e[j] = 0.0;
            for i in 0..n {
                h[(i, j)] = col[i];
            }
        }
        Ok(h)
    }

    /// Estimate `σ_min/σ_max` by power iteration on `HᵀH` and on
    /// `H⁻¹H⁻ᵀ`; returns the ratio and the approximate right singular
    /// vector for `σ_min`.
    pub fn singular_value_ratio(&self) -> Result<(f64, Vec<f64>)> {
        let n = self.dim();
        let start: Vec<f64> = (0..n).map(|i| 1.0 + ((i * 7919) % 13) as f64 / 13.0).collect();
        let power = |op: &dyn Fn(&[f64]) -> Result<Vec<f64>>| -> Result<(f64, Vec<f64>)> {
            let mut x = scaled(&start, 1.0 / norm2(&start));
            let mut lam = 0.0;
            for it in 0..500 {
                let y = op(&x)?;
                let new = norm2(&y);
                x = scaled(&y, 1.0 / new);
                if it > 10 && (new - lam).abs() <= 1e-9 * new {
                    lam = new;
                    break;
                }
                lam = new;
            }
            Ok((lam, x))
        };
        let (lmax, _) = power(&|x| self.apply_transpose(&self.apply(x)?))?;
        let inv = power(&|x| self.apply_inverse(&self.apply_inverse_transpose(x)?));
        match inv {
            Ok((linv, v)) => Ok(((1.0 / linv).sqrt() / lmax.sqrt(), v)),
            Err(Error::SolverDiverged { .. }) => Ok((0.0, start)),
            Err(e) => Err(e),
        }
    }

    /// Fail with the near-null vector unless `σ_min/σ_max > threshold`.
    pub fn check_invertible(&self, threshold: f64) -> Result<f64> {
        let (ratio, v) = self.singular_value_ratio()?;
        if ratio.is_finite() && ratio > threshold {
            Ok(ratio)
        } else {
            Err(Error::SingularHodgeStar { ratio, near_null: v })
        }
    }
}

fn usable_diag(d: &[f64]) -> Option<&[f64]> {
    if d.iter().all(|x| x.abs() > 1e-300) {
        Some(d)
    } else {
        None
    }
}

/// Assemble `⋆ₕ` of degree `k` (invertibility is checked).
pub fn build_hodge_star(primal: &SpaceComplex, dual: &SpaceComplex, k: usize) -> Result<HodgeStarOp> {
    let cross = cross_pairing(primal, dual);
    let h = HodgeStarOp::from_pairing(&cross, primal, dual, k)?;
    h.check_invertible(1e-10)?;
    Ok(h)
}

#[derive(Clone, Debug)]
pub struct HelmholtzParts {
    /// Potential `ψ ∈ V⁰` (zero mean) of the gradient part.
    pub psi: Vec<f64>,
    /// Potential `φ ∈ V²` (zero mean) of the rotational part.
    pub phi: Vec<f64>,
    pub gradient: Vec<f64>,
    pub rotational: Vec<f64>,
    pub harmonic: Vec<f64>,
}

fn remove_mean(space: &SpaceComplex, k: usize, v: &mut [f64]) {
    let ones = vec![1.0; v.len()];
    let m1 = space.mass(k).mul_vec(&ones);
    let mean = dot(&m1, v) / dot(&m1, &ones);
    v.iter_mut().for_each(|x| *x -= mean);
}

/// `w = dψ + δʰφ + 𝔥` with `M₁`-orthogonal parts.
pub fn helmholtz_decompose(space: &SpaceComplex, w: &FormCoeffs) -> Result<HelmholtzParts> {
    let w = w.expect(1, space)?;
    let opts = SolverOptions { rtol: 1e-13, atol: 1e-300, max_iter: Some(10 * space.dim(0) + 500) };

    // gradient part: D01ᵀ M1 D01 ψ = D01ᵀ M1 w
    let lap = space.d01.transpose().matmul(&space.m1.matmul(&space.d01));
    let rhs = space.d01.tr_mul_vec(&space.m1.mul_vec(w));
    let mut psi = if norm2(&rhs) == 0.0 { vec![0.0; space.dim(0)] } else { pcg(&lap, &rhs, None, opts)?.0 };
    remove_mean(space, 0, &mut psi);
    let gradient = space.d01.mul_vec(&psi);

    // rotational part r = M1⁻¹ D12ᵀ χ with D12 r = D12 w
    let target = space.d12.mul_vec(w);
    let inner = SolverOptions { rtol: 1e-14, atol: 1e-300, max_iter: Some(10 * space.dim(1) + 500) };
    let schur = |chi: &[f64]| -> Vec<f64> {
        let r = pcg(&space.m1, &space.d12.tr_mul_vec(chi), None, inner).map(|x| x.0).unwrap_or_else(|_| vec![f64::NAN; space.dim(1)]);
        space.d12.mul_vec(&r)
    };
    let chi = if norm2(&target) == 0.0 {
        vec![0.0; space.dim(2)]
    } else {
        let o = SolverOptions { rtol: 1e-13, atol: 1e-300, max_iter: Some(10 * space.dim(2) + 500) };
        gmres(schur, None, &target, o, 80)?.0
    };
    let rotational = pcg(&space.m1, &space.d12.tr_mul_vec(&chi), None, inner)?.0;
    let mut phi = scaled(&space.solve_mass(2, &chi)?.0, -1.0);
    remove_mean(space, 2, &mut phi);

    let mut harmonic = w.to_vec();
    axpy(-1.0, &gradient, &mut harmonic);
    axpy(-1.0, &rotational, &mut harmonic);
    Ok(HelmholtzParts { psi, phi, gradient, rotational, harmonic })
}

#[cfg(test)]
mod tests;
