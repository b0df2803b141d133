//! Quadrature on the reference triangle `{x, y >= 0, x + y <= 1}` and the
//! reference tetrahedron.
//!
//! Orders 0 and 1 use the centroid. Higher orders use collapsed
//! Gauss-Jacobi tensor rules, whose 1D nodes come from the Golub-Welsch
//! eigenvalue problem. All weights are positive.

use nalgebra::{DMatrix, SymmetricEigen};

use crate::error::{Error, Result};

pub const MAX_ORDER: usize = 10;

#[derive(Debug, Clone)]
pub struct Quadrature {
    pub dim: usize,
    /// Reference coordinates, unused components zero.
    pub points: Vec<[f64; 3]>,
    pub weights: Vec<f64>,
}

impl Quadrature {
    pub fn len(&self) -> usize {
        self.weights.len()
    }

    pub fn is_empty(&self) -> bool {
        self.weights.is_empty()
    }
}

/// A rule exact for polynomials of total degree `order` on the reference simplex.
pub fn quadrature(order: usize, dim: usize) -> Result<Quadrature> {
    if dim != 2 && dim != 3 {
        return Err(Error::Unsupported(format!("quadrature in dimension {dim}")));
    }
    if order > MAX_ORDER {
        return Err(Error::Unsupported(format!("quadrature order {order} > {MAX_ORDER}")));
    }
    if order <= 1 {
        let (p, w) = if dim == 2 { ([1.0 / 3.0, 1.0 / 3.0, 0.0], 0.5) } else { ([0.25; 3], 1.0 / 6.0) };
        return Ok(Quadrature { dim, points: vec![p], weights: vec![w] });
    }
    let n = order / 2 + 1;
    let legendre = gauss_jacobi01(n, 0);
    let jac1 = gauss_jacobi01(n, 1);
    let mut points = Vec::new();
    let mut weights = Vec::new();
    if dim == 2 {
        for (u, wu) in jac1.iter() {
            for (v, wv) in legendre.iter() {
                points.push([*u, (1.0 - u) * v, 0.0]);
                weights.push(wu * wv);
            }
        }
    } else {
        let jac2 = gauss_jacobi01(n, 2);
        for (u, wu) in jac2.iter() {
            for (v, wv) in jac1.iter() {
                for (w, ww) in legendre.iter() {
                    points.push([*u, (1.0 - u) * v, (1.0 - u) * (1.0 - v) * w]);
                    weights.push(wu * wv * ww);
                }
            }
        }
    }
    Ok(Quadrature { dim, points, weights })
}

/// Gauss rule on `[0, 1]` for the weight `(1 - u)^alpha`.
fn gauss_jacobi01(n: usize, alpha: u32) -> Vec<(f64, f64)> {
    let a = alpha as f64;
    let b = 0.0;
    let mut t = DMatrix::<f64>::zeros(n, n);
    for k in 0..n {
        let kf = k as f64;
        let s = 2.0 * kf + a + b;
        t[(k, k)] = if k == 0 { (b - a) / (a + b + 2.0) } else { (b * b - a * a) / (s * (s + 2.0)) };
        if k + 1 < n {
            let k1 = kf + 1.0;
            let s1 = 2.0 * k1 + a + b;
            let num = 4.0 * k1 * (k1 + a) * (k1 + b) * (k1 + a + b);
            let den = s1 * s1 * (s1 + 1.0) * (s1 - 1.0);
            let off = (num / den).sqrt();
            t[(k, k + 1)] = off;
            t[(k + 1, k)] = off;
        }
    }
    // integral of (1 - t)^alpha over [-1, 1]
    let mu0 = 2f64.powi(alpha as i32 + 1) / (a + 1.0);
    let eig = SymmetricEigen::new(t);
    let mut out: Vec<(f64, f64)> = (0..n)
        .map(|i| {
            let x = eig.eigenvalues[i];
            let w = mu0 * eig.eigenvectors[(0, i)].powi(2);
            ((1.0 + x) / 2.0, w * 2f64.powi(-(alpha as i32) - 1))
        })
        .collect();
    out.sort_by(|p, q| p.0.total_cmp(&q.0));
    out
}
