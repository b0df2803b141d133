//! Compressed sparse row matrices and a Jacobi-preconditioned conjugate
//! gradient solver.
//!
//! Reductions are summed over fixed-size chunks and then combined in index
//! order, so results do not depend on the number of threads.

use rayon::prelude::*;

use crate::error::{Error, Result};

const CHUNK: usize = 4096;

#[derive(Debug, Clone, PartialEq)]
pub struct CsrMatrix {
    pub n: usize,
    pub row_ptr: Vec<usize>,
    pub cols: Vec<usize>,
    pub vals: Vec<f64>,
}

impl CsrMatrix {
    /// Zero matrix with the given sorted row patterns.
    pub fn from_pattern(n: usize, rows: Vec<Vec<usize>>) -> Self {
        let mut row_ptr = Vec::with_capacity(n + 1);
        row_ptr.push(0);
        let mut cols = Vec::new();
        for r in rows {
            cols.extend_from_slice(&r);
            row_ptr.push(cols.len());
        }
        let vals = vec![0.0; cols.len()];
        CsrMatrix { n, row_ptr, cols, vals }
    }

    pub fn identity(n: usize) -> Self {
        CsrMatrix { n, row_ptr: (0..=n).collect(), cols: (0..n).collect(), vals: vec![1.0; n] }
    }

    /// From dense row-major storage, keeping nonzeros.
    pub fn from_dense(n: usize, a: &[f64]) -> Self {
        let rows = (0..n).map(|i| (0..n).filter(|&j| a[i * n + j] != 0.0).collect()).collect();
        let mut m = Self::from_pattern(n, rows);
        for i in 0..n {
            for k in m.row_ptr[i]..m.row_ptr[i + 1] {
                m.vals[k] = a[i * n + m.cols[k]];
            }
        }
        m
    }

    pub fn nnz(&self) -> usize {
        self.cols.len()
    }

    #[inline]
    pub fn position(&self, i: usize, j: usize) -> Option<usize> {
        let s = self.row_ptr[i];
        let row = &self.cols[s..self.row_ptr[i + 1]];
        row.binary_search(&j).ok().map(|k| s + k)
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.position(i, j).map_or(0.0, |k| self.vals[k])
    }

    #[inline]
    pub fn add(&mut self, i: usize, j: usize, v: f64) {
        let k = self.position(i, j).expect("entry outside sparsity pattern");
        self.vals[k] += v;
    }

    pub fn diagonal(&self) -> Vec<f64> {
        (0..self.n).map(|i| self.get(i, i)).collect()
    }

    pub fn matvec(&self, x: &[f64], y: &mut [f64]) {
        y.par_chunks_mut(CHUNK).enumerate().for_each(|(c, ys)| {
            for (o, yi) in ys.iter_mut().enumerate() {
                let i = c * CHUNK + o;
                let mut s = 0.0;
                for k in self.row_ptr[i]..self.row_ptr[i + 1] {
                    s += self.vals[k] * x[self.cols[k]];
                }
                *yi = s;
            }
        });
    }

    pub fn mul(&self, x: &[f64]) -> Vec<f64> {
        let mut y = vec![0.0; self.n];
        self.matvec(x, &mut y);
        y
    }

    /// Largest `|a_ij - a_ji|` relative to the largest entry.
    pub fn asymmetry(&self) -> f64 {
        let scale = self.vals.iter().fold(0.0f64, |m, v| m.max(v.abs())).max(f64::MIN_POSITIVE);
        let mut worst: f64 = 0.0;
        for i in 0..self.n {
            for k in self.row_ptr[i]..self.row_ptr[i + 1] {
                let j = self.cols[k];
                worst = worst.max((self.vals[k] - self.get(j, i)).abs());
            }
        }
        worst / scale
    }

    /// Submatrix on `keep` (sorted global indices) for rows and columns.
    pub fn restrict(&self, keep: &[usize], map: &[usize]) -> CsrMatrix {
        let mut row_ptr = Vec::with_capacity(keep.len() + 1);
        row_ptr.push(0);
        let mut cols = Vec::new();
        let mut vals = Vec::new();
        for &i in keep {
            for k in self.row_ptr[i]..self.row_ptr[i + 1] {
                let j = map[self.cols[k]];
                if j != usize::MAX {
                    cols.push(j);
                    vals.push(self.vals[k]);
                }
            }
            row_ptr.push(cols.len());
        }
        CsrMatrix { n: keep.len(), row_ptr, cols, vals }
    }
}

/// Thread-count independent sum of `f(i)` for `i < n`.
pub fn det_sum<F: Fn(usize) -> f64 + Sync>(n: usize, f: F) -> f64 {
    let nchunks = n.div_ceil(CHUNK);
    let partial: Vec<f64> = (0..nchunks)
        .into_par_iter()
        .map(|c| (c * CHUNK..((c + 1) * CHUNK).min(n)).map(&f).sum())
        .collect();
    partial.iter().sum()
}

pub fn dot(a: &[f64], b: &[f64]) -> f64 {
    det_sum(a.len(), |i| a[i] * b[i])
}

pub fn norm2(a: &[f64]) -> f64 {
    dot(a, a).sqrt()
}

#[derive(Debug, Clone)]
pub struct CgResult {
    pub x: Vec<f64>,
    pub iterations: usize,
    /// Final `||b - A x|| / ||b||`.
    pub residual: f64,
    /// Preconditioned residual norms `r^T M^{-1} r` per iteration.
    pub history: Vec<f64>,
}

#[derive(Debug, Clone, Copy)]
pub struct CgOptions {
    pub rtol: f64,
    pub max_iter: usize,
}

impl Default for CgOptions {
    fn default() -> Self {
        CgOptions { rtol: 1e-10, max_iter: 100_000 }
    }
}

/// Jacobi-preconditioned conjugate gradients from the zero initial guess.
pub fn solve_cg(a: &CsrMatrix, b: &[f64], opts: CgOptions) -> Result<CgResult> {
    solve_cg_from(a, b, vec![0.0; a.n], opts)
}

pub fn solve_cg_from(a: &CsrMatrix, b: &[f64], x0: Vec<f64>, opts: CgOptions) -> Result<CgResult> {
    let n = a.n;
    if b.len() != n || x0.len() != n {
        return Err(Error::Numerical("dimension mismatch in CG".into()));
    }
    let bnorm = norm2(b);
    if bnorm == 0.0 {
        return Ok(CgResult { x: vec![0.0; n], iterations: 0, residual: 0.0, history: vec![] });
    }
    let diag = a.diagonal();
    if let Some(i) = diag.iter().position(|&d| !(d > 0.0)) {
        return Err(Error::Numerical(format!("non-positive diagonal entry at row {i}")));
    }
    let inv: Vec<f64> = diag.iter().map(|d| 1.0 / d).collect();
    let mut x = x0;
    let mut r = vec![0.0; n];
    a.matvec(&x, &mut r);
    r.par_iter_mut().zip(b.par_iter()).for_each(|(ri, bi)| *ri = bi - *ri);
    let mut z: Vec<f64> = r.iter().zip(&inv).map(|(ri, di)| ri * di).collect();
    let mut p = z.clone();
    let mut rz = dot(&r, &z);
    let mut ap = vec![0.0; n];
    let mut history = vec![rz];
    let mut res = norm2(&r) / bnorm;
    let mut it = 0;
    while res > opts.rtol {
        if it >= opts.max_iter {
            return Err(Error::SolverDiverged { iterations: it, residual: res });
        }
        a.matvec(&p, &mut ap);
        let pap = dot(&p, &ap);
        if !(pap > 0.0) {
            return Err(Error::Numerical(format!("matrix is not positive definite (p^T A p = {pap:e})")));
        }
        let alpha = rz / pap;
        x.par_iter_mut().zip(p.par_iter()).for_each(|(xi, pi)| *xi += alpha * pi);
        r.par_iter_mut().zip(ap.par_iter()).for_each(|(ri, api)| *ri -= alpha * api);
        z.par_iter_mut()
            .zip(r.par_iter().zip(inv.par_iter()))
            .for_each(|(zi, (ri, di))| *zi = ri * di);
        let rz_new = dot(&r, &z);
        let beta = rz_new / rz;
        rz = rz_new;
        p.par_iter_mut().zip(z.par_iter()).for_each(|(pi, zi)| *pi = zi + beta * *pi);
        history.push(rz);
        res = norm2(&r) / bnorm;
        it += 1;
        if !res.is_finite() {
            return Err(Error::Numerical("CG residual is not finite".into()));
        }
    }
    Ok(CgResult { x, iterations: it, residual: res, history })
}
