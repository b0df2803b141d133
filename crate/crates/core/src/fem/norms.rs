//! Lagrange interpolation and L2 / H1-seminorm errors.

use crate::error::{Error, Result};
use crate::fem::assemble::{AffineMap, Tabulation};
use crate::fem::dofmap::DofMap;
use crate::fem::field::ScalarField;
use crate::fem::sparse::{det_sum, CsrMatrix};
use crate::mesh::SimplicialMesh;

/// Nodal values of `u` at every Lagrange node.
pub fn interpolate(u: &dyn ScalarField, dofmap: &DofMap) -> Result<Vec<f64>> {
    dofmap
        .coords
        .iter()
        .enumerate()
        .map(|(i, x)| {
            let v = u.value(x);
            if v.is_finite() {
                Ok(v)
            } else {
                Err(Error::Numerical(format!("non-finite nodal value at dof {i} ({x:?})")))
            }
        })
        .collect()
}

/// `(||u - u_h||_L2, |u - u_h|_H1)` with a rule of order `2m + 2`.
pub fn error_h1(coeffs: &[f64], mesh: &SimplicialMesh, dofmap: &DofMap, u: &dyn ScalarField) -> Result<(f64, f64)> {
    error_h1_order(coeffs, mesh, dofmap, u, 2 * dofmap.m + 2)
}

pub fn error_h1_order(
    coeffs: &[f64],
    mesh: &SimplicialMesh,
    dofmap: &DofMap,
    u: &dyn ScalarField,
    order: usize,
) -> Result<(f64, f64)> {
    let tab = Tabulation::order(dofmap, order, mesh.dim)?;
    let nl = dofmap.n_local();
    let cell_err = |c: usize| -> (f64, f64) {
        let map = match AffineMap::new(mesh.dim, &mesh.cell_points(c)) {
            Ok(m) => m,
            Err(_) => return (f64::NAN, f64::NAN),
        };
        let dofs = dofmap.local(c);
        let (mut l2, mut h1) = (0.0, 0.0);
        for (q, w) in tab.quad.weights.iter().enumerate() {
            let x = map.map(&tab.quad.points[q]);
            let mut uh = 0.0;
            let mut guh = [0.0; 3];
            for k in 0..nl {
                let ck = coeffs[dofs[k]];
                uh += ck * tab.values[q][k];
                let g = map.grad(&tab.grads[q][k]);
                for d in 0..3 {
                    guh[d] += ck * g[d];
                }
            }
            let gu = u.gradient(&x);
            let wq = w * map.abs_det();
            l2 += wq * (u.value(&x) - uh).powi(2);
            h1 += wq * ((gu[0] - guh[0]).powi(2) + (gu[1] - guh[1]).powi(2) + (gu[2] - guh[2]).powi(2));
        }
        (l2, h1)
    };
    let nc = mesh.num_cells();
    let l2 = det_sum(nc, |c| cell_err(c).0);
    let h1 = det_sum(nc, |c| cell_err(c).1);
    if !(l2.is_finite() && h1.is_finite()) {
        return Err(Error::Numerical("error integral is not finite".into()));
    }
    Ok((l2.sqrt(), h1.sqrt()))
}

/// `x^T A x`.
pub fn energy(a: &CsrMatrix, x: &[f64]) -> f64 {
    let ax = a.mul(x);
    det_sum(x.len(), |i| x[i] * ax[i])
}
