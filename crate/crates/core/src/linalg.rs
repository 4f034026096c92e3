//! Sparse matrices and the Krylov solvers used by every mass-matrix solve.

use nalgebra::DMatrix;

use crate::error::{Error, Result};

/// Compressed sparse row matrix.
#[derive(Clone, Debug, PartialEq)]
pub struct CsrMatrix {
    nrows: usize,
    ncols: usize,
    row_ptr: Vec<usize>,
    col_idx: Vec<usize>,
    values: Vec<f64>,
}

/// Coordinate-format accumulator. Duplicate entries are summed in insertion
/// order so that assembly is bitwise deterministic for a fixed element order.
#[derive(Clone, Debug, Default)]
pub struct Triplets {
    nrows: usize,
    ncols: usize,
    entries: Vec<(usize, usize, f64)>,
}

impl Triplets {
    pub fn new(nrows: usize, ncols: usize) -> Self {
        Self {
            nrows,
            ncols,
            entries: Vec::new(),
        }
    }

    pub fn push(&mut self, row: usize, col: usize, value: f64) {
        debug_assert!(row < self.nrows && col < self.ncols);
        self.entries.push((row, col, value));
    }

    pub fn to_csr(&self) -> CsrMatrix {
        let mut order: Vec<usize> = (0..self.entries.len()).collect();
        // stable sort keeps insertion order among duplicates
        order.sort_by_key(|&k| (self.entries[k].0, self.entries[k].1));
        let mut row_ptr = vec![0usize; self.nrows + 1];
        let mut col_idx = Vec::with_capacity(order.len());
        let mut values: Vec<f64> = Vec::with_capacity(order.len());
        let mut last: Option<(usize, usize)> = None;
        for &k in &order {
            let (r, c, v) = self.entries[k];
            if last == Some((r, c)) {
                *values.last_mut().unwrap() += v;
            } else {
                col_idx.push(c);
                values.push(v);
                row_ptr[r + 1] += 1;
                last = Some((r, c));
            }
        }
        for r in 0..self.nrows {
            row_ptr[r + 1] += row_ptr[r];
        }
        CsrMatrix {
            nrows: self.nrows,
            ncols: self.ncols,
            row_ptr,
            col_idx,
            values,
        }
    }
}

impl CsrMatrix {
    pub fn zeros(nrows: usize, ncols: usize) -> Self {
        Self {
            nrows,
            ncols,
            row_ptr: vec![0; nrows + 1],
            col_idx: Vec::new(),
            values: Vec::new(),
        }
    }

    pub fn identity(n: usize) -> Self {
        Self::from_diagonal(&vec![1.0; n])
    }

    pub fn from_diagonal(d: &[f64]) -> Self {
        let mut t = Triplets::new(d.len(), d.len());
        for (i, &v) in d.iter().enumerate() {
            t.push(i, i, v);
        }
        t.to_csr()
    }

    pub fn nrows(&self) -> usize {
        self.nrows
    }

    pub fn ncols(&self) -> usize {
        self.ncols
    }

    pub fn nnz(&self) -> usize {
        self.values.len()
    }

    /// Iterate over the stored entries of one row as `(col, value)`.
    pub fn row(&self, r: usize) -> impl Iterator<Item = (usize, f64)> + '_ {
        let range = self.row_ptr[r]..self.row_ptr[r + 1];
        self.col_idx[range.clone()]
            .iter()
            .copied()
            .zip(self.values[range].iter().copied())
    }

    pub fn triplets(&self) -> impl Iterator<Item = (usize, usize, f64)> + '_ {
        (0..self.nrows).flat_map(move |r| self.row(r).map(move |(c, v)| (r, c, v)))
    }

    pub fn get(&self, r: usize, c: usize) -> f64 {
        self.row(r).find(|&(cc, _)| cc == c).map_or(0.0, |(_, v)| v)
    }

    pub fn diagonal(&self) -> Vec<f64> {
        (0..self.nrows.min(self.ncols)).map(|i| self.get(i, i)).collect()
    }

    pub fn mul_vec(&self, x: &[f64]) -> Vec<f64> {
        let mut y = vec![0.0; self.nrows];
        self.mul_vec_into(x, &mut y);
        y
    }

    pub fn mul_vec_into(&self, x: &[f64], y: &mut [f64]) {
        assert_eq!(x.len(), self.ncols, "matvec dimension mismatch");
        for (r, yr) in y.iter_mut().enumerate() {
            let mut acc = 0.0;
            for k in self.row_ptr[r]..self.row_ptr[r + 1] {
                acc += self.values[k] * x[self.col_idx[k]];
            }
            *yr = acc;
        }
    }

    /// `y = Aᵀ x`
    pub fn tr_mul_vec(&self, x: &[f64]) -> Vec<f64> {
        assert_eq!(x.len(), self.nrows, "transpose matvec dimension mismatch");
        let mut y = vec![0.0; self.ncols];
        for (r, &xr) in x.iter().enumerate() {
            for k in self.row_ptr[r]..self.row_ptr[r + 1] {
                y[self.col_idx[k]] += self.values[k] * xr;
            }
        }
        y
    }

    pub fn transpose(&self) -> CsrMatrix {
        let mut t = Triplets::new(self.ncols, self.nrows);
        for (r, c, v) in self.triplets() {
            t.push(c, r, v);
        }
        t.to_csr()
    }

    pub fn scale_rows(&self, s: &[f64]) -> CsrMatrix {
        let mut out = self.clone();
        for r in 0..self.nrows {
            for k in out.row_ptr[r]..out.row_ptr[r + 1] {
                out.values[k] *= s[r];
            }
        }
        out
    }

    pub fn matmul(&self, other: &CsrMatrix) -> CsrMatrix {
        assert_eq!(self.ncols, other.nrows);
        let mut t = Triplets::new(self.nrows, other.ncols);
        for r in 0..self.nrows {
            for (k, a) in self.row(r) {
                for (c, b) in other.row(k) {
                    t.push(r, c, a * b);
                }
            }
        }
        t.to_csr()
    }

    pub fn to_dense(&self) -> DMatrix<f64> {
        let mut d = DMatrix::zeros(self.nrows, self.ncols);
        for (r, c, v) in self.triplets() {
            d[(r, c)] += v;
        }
        d
    }

    /// `row col value` lines, one per stored entry.
    pub fn to_coordinate_text(&self) -> String {
        let mut s = String::new();
        for (r, c, v) in self.triplets() {
            s.push_str(&format!("{r} {c} {v:.17e}\n"));
        }
        s
    }

    /// Largest absolute deviation from symmetry.
    pub fn asymmetry(&self) -> f64 {
        self.triplets()
            .map(|(r, c, v)| (v - self.get(c, r)).abs())
            .fold(0.0, f64::max)
    }
}

/// Tolerances for the preconditioned conjugate-gradient mass solves.
#[derive(Clone, Copy, Debug)]
pub struct SolverOptions {
    pub rtol: f64,
    pub atol: f64,
    /// Cap on iterations; `None` means `10·√n` with a floor of 100.
    pub max_iter: Option<usize>,
}

impl Default for SolverOptions {
    fn default() -> Self {
        Self {
            rtol: 1e-12,
            atol: 1e-14,
            max_iter: None,
        }
    }
}

#[derive(Clone, Copy, Debug)]
pub struct SolveStats {
    pub iterations: usize,
    pub residual: f64,
}

pub fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

pub fn norm2(a: &[f64]) -> f64 {
    dot(a, a).sqrt()
}

pub fn norm_inf(a: &[f64]) -> f64 {
    a.iter().fold(0.0, |m, x| m.max(x.abs()))
}

pub fn axpy(alpha: f64, x: &[f64], y: &mut [f64]) {
    for (yi, xi) in y.iter_mut().zip(x) {
        *yi += alpha * xi;
    }
}

pub fn sub(a: &[f64], b: &[f64]) -> Vec<f64> {
    a.iter().zip(b).map(|(x, y)| x - y).collect()
}

pub fn add(a: &[f64], b: &[f64]) -> Vec<f64> {
    a.iter().zip(b).map(|(x, y)| x + y).collect()
}

pub fn scaled(a: &[f64], s: f64) -> Vec<f64> {
    a.iter().map(|x| x * s).collect()
}

/// Jacobi-preconditioned CG for symmetric positive-definite `a`.
///
/// Converged when `‖b − A x‖ ≤ max(rtol·‖b‖, atol)`.
pub fn pcg(a: &CsrMatrix, b: &[f64], x0: Option<&[f64]>, opts: SolverOptions) -> Result<(Vec<f64>, SolveStats)> {
    let n = b.len();
    assert_eq!(a.nrows(), n);
    let diag = a.diagonal();
    let inv_diag: Vec<f64> = diag.iter().map(|&d| if d != 0.0 { 1.0 / d } else { 1.0 }).collect();
    let max_iter = opts
        .max_iter
        .unwrap_or_else(|| ((10.0 * (n as f64).sqrt()) as usize).max(100));
    let bnorm = norm2(b);
    let target = (opts.rtol * bnorm).max(opts.atol);

    let mut x = x0.map_or_else(|| vec![0.0; n], |v| v.to_vec());
    let mut r = if x0.is_some() { sub(b, &a.mul_vec(&x)) } else { b.to_vec() };
    let mut rnorm = norm2(&r);
    if rnorm <= target {
        return Ok((x, SolveStats { iterations: 0, residual: rnorm }));
    }
    let mut z: Vec<f64> = r.iter().zip(&inv_diag).map(|(ri, di)| ri * di).collect();
    let mut p = z.clone();
    let mut rz = dot(&r, &z);
    let mut ap = vec![0.0; n];
    for it in 1..=max_iter {
        a.mul_vec_into(&p, &mut ap);
        let pap = dot(&p, &ap);
        if pap <= 0.0 {
            return Err(Error::NotPositiveDefinite { what: "pcg operator" });
        }
        let alpha = rz / pap;
        axpy(alpha, &p, &mut x);
        axpy(-alpha, &ap, &mut r);
        rnorm = norm2(&r);
        if rnorm <= target {
            // recompute the true residual once to guard against drift
            let true_r = norm2(&sub(b, &a.mul_vec(&x)));
            if true_r <= target.max(4.0 * f64::EPSILON * bnorm) {
                return Ok((x, SolveStats { iterations: it, residual: true_r }));
            }
            r = sub(b, &a.mul_vec(&x));
        }
        for i in 0..n {
            z[i] = r[i] * inv_diag[i];
        }
        let rz_new = dot(&r, &z);
        let beta = rz_new / rz;
        rz = rz_new;
        for i in 0..n {
            p[i] = z[i] + beta * p[i];
        }
    }
    Err(Error::SolverDiverged {
        what: "pcg",
        iterations: max_iter,
        residual: rnorm,
        target,
    })
}

/// Restarted GMRES with right Jacobi preconditioning, for the
/// nonsymmetric systems (Coriolis-coupled blocks, Hodge-star inverses).
pub fn gmres<F>(apply: F, diag: Option<&[f64]>, b: &[f64], opts: SolverOptions, restart: usize) -> Result<(Vec<f64>, SolveStats)>
where
    F: Fn(&[f64]) -> Vec<f64>,
{
    let n = b.len();
    let precond = |v: &[f64]| -> Vec<f64> {
        match diag {
            Some(d) => v.iter().zip(d).map(|(x, di)| x / di).collect(),
            None => v.to_vec(),
        }
    };
    let bnorm = norm2(b);
    let target = (opts.rtol * bnorm).max(opts.atol);
    let max_iter = opts.max_iter.unwrap_or_else(|| (20 * n).max(200));
    let mut x = vec![0.0; n];
    let mut total = 0;
    loop {
        let r = sub(b, &apply(&x));
        let beta = norm2(&r);
        if beta <= target {
            return Ok((x, SolveStats { iterations: total, residual: beta }));
        }
        if total >= max_iter {
            return Err(Error::SolverDiverged { what: "gmres", iterations: total, residual: beta, target });
        }
        let m = restart.min(n.max(1));
        let mut v: Vec<Vec<f64>> = vec![scaled(&r, 1.0 / beta)];
        let mut z: Vec<Vec<f64>> = Vec::with_capacity(m);
        let mut h = vec![vec![0.0; m]; m + 1];
        let mut cs = vec![0.0; m];
        let mut sn = vec![0.0; m];
        let mut g = vec![0.0; m + 1];
        g[0] = beta;
        let mut k_used = 0;
        for k in 0..m {
            let zk = precond(&v[k]);
            let mut w = apply(&zk);
            z.push(zk);
            for (j, vj) in v.iter().enumerate() {
                h[j][k] = dot(&w, vj);
                axpy(-h[j][k], vj, &mut w);
            }
            // second Gram-Schmidt pass
            for (j, vj) in v.iter().enumerate() {
                let c = dot(&w, vj);
                h[j][k] += c;
                axpy(-c, vj, &mut w);
            }
            h[k + 1][k] = norm2(&w);
            for j in 0..k {
                let t = cs[j] * h[j][k] + sn[j] * h[j + 1][k];
                h[j + 1][k] = -sn[j] * h[j][k] + cs[j] * h[j + 1][k];
                h[j][k] = t;
            }
            let denom = (h[k][k] * h[k][k] + h[k + 1][k] * h[k + 1][k]).sqrt();
            if denom == 0.0 {
                k_used = k;
                break;
            }
            cs[k] = h[k][k] / denom;
            sn[k] = h[k + 1][k] / denom;
            h[k][k] = denom;
            h[k + 1][k] = 0.0;
            g[k + 1] = -sn[k] * g[k];
            g[k] *= cs[k];
            total += 1;
            k_used = k + 1;
            let hk1 = {
                // norm of the new basis vector before normalization
                let nw = norm2(&w);
                nw
            };
            if g[k + 1].abs() <= target * 0.5 || hk1 == 0.0 || total >= max_iter {
                break;
            }
            v.push(scaled(&w, 1.0 / hk1));
        }
        // back substitution
        let mut y = vec![0.0; k_used];
        for i in (0..k_used).rev() {
            let mut s = g[i];
            for j in i + 1..k_used {
                s -= h[i][j] * y[j];
            }
            y[i] = s / h[i][i];
        }
        for (j, yj) in y.iter().enumerate() {
            axpy(*yj, &z[j], &mut x);
        }
        if k_used == 0 {
            let res = norm2(&sub(b, &apply(&x)));
            return Err(Error::SolverDiverged { what: "gmres", iterations: total, residual: res, target });
        }
    }
}

/// Dense LU solve with a residual check, for small local systems.
pub fn dense_solve(a: &DMatrix<f64>, b: &[f64]) -> Result<Vec<f64>> {
    let lu = a.clone().lu();
    let rhs = nalgebra::DVector::from_column_slice(b);
    let x = lu.solve(&rhs).ok_or(Error::SingularLocalSystem)?;
    Ok(x.iter().copied().collect())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn laplacian_1d(n: usize) -> CsrMatrix {
        let mut t = Triplets::new(n, n);
        for i in 0..n {
            t.push(i, i, 2.5);
            if i > 0 {
                t.push(i, i - 1, -1.0);
            }
            if i + 1 < n {
                t.push(i, i + 1, -1.0);
            }
        }
        t.to_csr()
    }

    #[test]
    fn duplicate_triplets_are_summed() {
        let mut t = Triplets::new(2, 2);
        t.push(0, 1, 1.0);
        t.push(0, 1, 2.0);
        t.push(1, 0, -1.0);
        let a = t.to_csr();
        assert_eq!(a.get(0, 1), 3.0);
        assert_eq!(a.nnz(), 2);
        assert_eq!(a.transpose().get(1, 0), 3.0);
    }

    #[test]
    fn pcg_solves_spd_system() {
        let a = laplacian_1d(50);
        let xs: Vec<f64> = (0..50).map(|i| (i as f64 * 0.3).sin()).collect();
        let b = a.mul_vec(&xs);
        let (x, stats) = pcg(&a, &b, None, SolverOptions::default()).unwrap();
        assert!(norm_inf(&sub(&x, &xs)) < 1e-10, "{stats:?}");
    }

    #[test]
    fn gmres_solves_nonsymmetric_system() {
        let a = laplacian_1d(40);
        let apply = |v: &[f64]| {
            let mut y = a.mul_vec(v);
            for i in 0..v.len() {
                if i + 1 < v.len() {
                    y[i] += 0.3 * v[i + 1];
                }
                if i > 0 {
                    y[i] -= 0.3 * v[i - 1];
                }
            }
            y
        };
        let xs: Vec<f64> = (0..40).map(|i| 1.0 + (i as f64).cos()).collect();
        let b = apply(&xs);
        let (x, _) = gmres(apply, Some(&a.diagonal()), &b, SolverOptions { rtol: 1e-13, ..Default::default() }, 30).unwrap();
        assert!(norm_inf(&sub(&x, &xs)) < 1e-10);
    }
}
