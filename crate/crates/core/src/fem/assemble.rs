//! Element maps, stiffness/load assembly and Dirichlet elimination.

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::fem::dofmap::DofMap;
use crate::fem::field::ScalarField;
use crate::fem::quadrature::{quadrature, Quadrature, MAX_ORDER};
use crate::fem::sparse::CsrMatrix;
use crate::geometry::Point;
use crate::mesh::SimplicialMesh;

const CELL_CHUNK: usize = 16384;

/// Affine map from the reference simplex onto a cell.
#[derive(Debug, Clone, Copy)]
pub struct AffineMap {
    pub dim: usize,
    pub origin: Point,
    /// Column `k` is `p_{k+1} - p_0`.
    pub jac: [[f64; 3]; 3],
    pub det: f64,
    inv_t: [[f64; 3]; 3],
}

impl AffineMap {
    pub fn new(dim: usize, pts: &[Point]) -> Result<Self> {
        let mut jac = [[0.0; 3]; 3];
        for k in 0..dim {
            for r in 0..3 {
                jac[r][k] = pts[k + 1][r] - pts[0][r];
            }
        }
        let (det, inv_t) = if dim == 2 {
            let det = jac[0][0] * jac[1][1] - jac[0][1] * jac[1][0];
            let mut it = [[0.0; 3]; 3];
            // inverse transpose of [[a b][c d]] is [[d -c][-b a]] / det
            it[0][0] = jac[1][1] / det;
            it[0][1] = -jac[1][0] / det;
            it[1][0] = -jac[0][1] / det;
            it[1][1] = jac[0][0] / det;
            (det, it)
        } else {
            let j = &jac;
            let cof = |r: usize, c: usize| {
                let (r1, r2) = ((r + 1) % 3, (r + 2) % 3);
                let (c1, c2) = ((c + 1) % 3, (c + 2) % 3);
                j[r1][c1] * j[r2][c2] - j[r1][c2] * j[r2][c1]
            };
            let det = j[0][0] * cof(0, 0) + j[0][1] * cof(0, 1) + j[0][2] * cof(0, 2);
            let mut it = [[0.0; 3]; 3];
            for r in 0..3 {
                for c in 0..3 {
                    it[r][c] = cof(r, c) / det;
                }
            }
            (det, it)
        };
        if det == 0.0 || !det.is_finite() {
            return Err(Error::Numerical("degenerate cell Jacobian".into()));
        }
        Ok(AffineMap { dim, origin: pts[0], jac, det, inv_t })
    }

    #[inline]
    pub fn map(&self, xi: &[f64; 3]) -> Point {
        let mut x = self.origin;
        for r in 0..3 {
            for k in 0..self.dim {
                x[r] += self.jac[r][k] * xi[k];
            }
        }
        x
    }

    /// Physical gradient from a reference gradient.
    #[inline]
    pub fn grad(&self, g: &[f64; 3]) -> Point {
        let mut out = [0.0; 3];
        for r in 0..self.dim {
            for c in 0..self.dim {
                out[r] += self.inv_t[r][c] * g[c];
            }
        }
        out
    }

    /// Physical Hessian `J^{-T} H J^{-1}` from a reference Hessian.
    pub fn hess(&self, h: &[[f64; 3]; 3]) -> [[f64; 3]; 3] {
        let mut tmp = [[0.0; 3]; 3];
        let mut out = [[0.0; 3]; 3];
        let d = self.dim;
        for r in 0..d {
            for c in 0..d {
                for k in 0..d {
                    tmp[r][c] += self.inv_t[r][k] * h[k][c];
                }
            }
        }
        for r in 0..d {
            for c in 0..d {
                for k in 0..d {
                    out[r][c] += tmp[r][k] * self.inv_t[c][k];
                }
            }
        }
        out
    }

    pub fn abs_det(&self) -> f64 {
        self.det.abs()
    }
}

/// Basis values and reference gradients tabulated at quadrature points.
#[derive(Debug, Clone)]
pub struct Tabulation {
    pub quad: Quadrature,
    pub values: Vec<Vec<f64>>,
    pub grads: Vec<Vec<[f64; 3]>>,
}

impl Tabulation {
    pub fn new(dofmap: &DofMap, quad: Quadrature) -> Self {
        let nl = dofmap.n_local();
        let mut values = Vec::with_capacity(quad.len());
        let mut grads = Vec::with_capacity(quad.len());
        for p in &quad.points {
            let mut v = vec![0.0; nl];
            let mut g = vec![[0.0; 3]; nl];
            dofmap.basis.eval(p, &mut v);
            dofmap.basis.grad(p, &mut g);
            values.push(v);
            grads.push(g);
        }
        Tabulation { quad, values, grads }
    }

    pub fn order(dofmap: &DofMap, order: usize, dim: usize) -> Result<Self> {
        Ok(Self::new(dofmap, quadrature(order.min(MAX_ORDER), dim)?))
    }
}

#[derive(Debug, Clone)]
pub struct SparseSystem {
    pub matrix: CsrMatrix,
    pub rhs: Vec<f64>,
    pub n: usize,
}

/// Sparsity pattern coupling every pair of dofs that share a cell.
pub fn sparsity(dofmap: &DofMap) -> CsrMatrix {
    let n = dofmap.n_dofs;
    let nl = dofmap.n_local();
    let nc = dofmap.cell_dofs.len() / nl;
    let mut start = vec![0usize; n + 1];
    for &d in &dofmap.cell_dofs {
        start[d + 1] += 1;
    }
    for i in 0..n {
        start[i + 1] += start[i];
    }
    let mut fill = start.clone();
    let mut incident = vec![0usize; dofmap.cell_dofs.len()];
    for c in 0..nc {
        for &d in dofmap.local(c) {
            incident[fill[d]] = c;
            fill[d] += 1;
        }
    }
    let rows: Vec<Vec<usize>> = (0..n)
        .into_par_iter()
        .map(|d| {
            let mut r: Vec<usize> = incident[start[d]..start[d + 1]]
                .iter()
                .flat_map(|&c| dofmap.local(c).iter().copied())
                .collect();
            r.sort_unstable();
            r.dedup();
            r
        })
        .collect();
    CsrMatrix::from_pattern(n, rows)
}

/// Generic assembly: `local(cell, mat, vec)` fills an `nl x nl` matrix and
/// an `nl` vector; contributions are computed in parallel and added in cell
/// order.
pub fn assemble_with<F>(mesh: &SimplicialMesh, dofmap: &DofMap, local: F) -> Result<SparseSystem>
where
    F: Fn(usize, &mut [f64], &mut [f64]) -> Result<()> + Sync,
{
    let mut matrix = sparsity(dofmap);
    let mut rhs = vec![0.0; dofmap.n_dofs];
    let nl = dofmap.n_local();
    let nc = mesh.num_cells();
    let mut start = 0;
    while start < nc {
        let end = (start + CELL_CHUNK).min(nc);
        let locals: Vec<(Vec<f64>, Vec<f64>)> = (start..end)
            .into_par_iter()
            .map(|c| {
                let mut a = vec![0.0; nl * nl];
                let mut b = vec![0.0; nl];
                local(c, &mut a, &mut b).map_err(|e| e.context(format!("cell {c}")))?;
                Ok((a, b))
            })
            .collect::<Result<_>>()?;
        for (off, (a, b)) in locals.iter().enumerate() {
            let dofs = dofmap.local(start + off);
            for i in 0..nl {
                rhs[dofs[i]] += b[i];
                for j in 0..nl {
                    matrix.add(dofs[i], dofs[j], a[i * nl + j]);
                }
            }
        }
        start = end;
    }
    Ok(SparseSystem { n: dofmap.n_dofs, matrix, rhs })
}

/// Stiffness matrix `(grad phi_i, grad phi_j)` and load `(f, phi_i)`, both
/// with a rule of order `2m`.
pub fn assemble(mesh: &SimplicialMesh, dofmap: &DofMap, f: &dyn ScalarField) -> Result<SparseSystem> {
    let tab = Tabulation::order(dofmap, 2 * dofmap.m, mesh.dim)?;
    let nl = dofmap.n_local();
    assemble_with(mesh, dofmap, |c, a, b| {
        let map = AffineMap::new(mesh.dim, &mesh.cell_points(c))?;
        let mut g = vec![[0.0; 3]; nl];
        for (q, w) in tab.quad.weights.iter().enumerate() {
            let wq = w * map.abs_det();
            for k in 0..nl {
                g[k] = map.grad(&tab.grads[q][k]);
            }
            let fx = f.value(&map.map(&tab.quad.points[q]));
            for i in 0..nl {
                b[i] += wq * fx * tab.values[q][i];
                for j in 0..nl {
                    a[i * nl + j] += wq * (g[i][0] * g[j][0] + g[i][1] * g[j][1] + g[i][2] * g[j][2]);
                }
            }
        }
        Ok(())
    })
}

/// Element stiffness of a single cell, row-major.
pub fn element_stiffness(dofmap: &DofMap, pts: &[Point]) -> Result<Vec<f64>> {
    let dim = pts.len() - 1;
    let tab = Tabulation::order(dofmap, 2 * dofmap.m, dim)?;
    let map = AffineMap::new(dim, pts)?;
    let nl = dofmap.n_local();
    let mut a = vec![0.0; nl * nl];
    for (q, w) in tab.quad.weights.iter().enumerate() {
        let g: Vec<Point> = tab.grads[q].iter().map(|r| map.grad(r)).collect();
        for i in 0..nl {
            for j in 0..nl {
                a[i * nl + j] += w * map.abs_det() * (g[i][0] * g[j][0] + g[i][1] * g[j][1] + g[i][2] * g[j][2]);
            }
        }
    }
    Ok(a)
}

/// System restricted to the free dofs, with Dirichlet values moved to the
/// right-hand side.
#[derive(Debug, Clone)]
pub struct ReducedSystem {
    pub matrix: CsrMatrix,
    pub rhs: Vec<f64>,
    pub free: Vec<usize>,
    /// Full-length vector carrying the Dirichlet values, zero on free dofs.
    pub lift: Vec<f64>,
}

impl ReducedSystem {
    pub fn expand(&self, x: &[f64]) -> Vec<f64> {
        let mut u = self.lift.clone();
        for (k, &i) in self.free.iter().enumerate() {
            u[i] = x[k];
        }
        u
    }
}

/// Symmetric elimination of Dirichlet dofs with nodal values of `g`.
pub fn apply_dirichlet(sys: &SparseSystem, dofmap: &DofMap, g: &dyn ScalarField) -> Result<ReducedSystem> {
    apply_dirichlet_values(sys, dofmap, |i| g.value(&dofmap.coords[i]))
}

pub fn apply_dirichlet_values<G: Fn(usize) -> f64>(
    sys: &SparseSystem,
    dofmap: &DofMap,
    g: G,
) -> Result<ReducedSystem> {
    if !dofmap.dirichlet.iter().any(|&d| d) {
        return Err(Error::Unsupported("empty Dirichlet set (pure Neumann problems are not solved)".into()));
    }
    let mut lift = vec![0.0; sys.n];
    for i in 0..sys.n {
        if dofmap.dirichlet[i] {
            lift[i] = g(i);
            if !lift[i].is_finite() {
                return Err(Error::Numerical(format!("non-finite Dirichlet value at dof {i}")));
            }
        }
    }
    let free: Vec<usize> = (0..sys.n).filter(|&i| !dofmap.dirichlet[i]).collect();
    let mut map = vec![usize::MAX; sys.n];
    for (k, &i) in free.iter().enumerate() {
        map[i] = k;
    }
    let al = sys.matrix.mul(&lift);
    let rhs = free.iter().map(|&i| sys.rhs[i] - al[i]).collect();
    let matrix = sys.matrix.restrict(&free, &map);
    Ok(ReducedSystem { matrix, rhs, free, lift })
}
