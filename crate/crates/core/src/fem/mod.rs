//! Continuous Lagrange finite elements of degree 1 to 3.

pub mod assemble;
pub mod basis;
pub mod dofmap;
pub mod field;
pub mod norms;
pub mod quadrature;
pub mod sparse;

pub use assemble::{apply_dirichlet, assemble, ReducedSystem, SparseSystem};
pub use dofmap::DofMap;
pub use field::ScalarField;
pub use norms::{error_h1, interpolate};
pub use quadrature::quadrature;
pub use sparse::{solve_cg, CgOptions, CsrMatrix};

use crate::error::Result;
use crate::mesh::SimplicialMesh;

/// Result of a Dirichlet Poisson solve.
#[derive(Debug, Clone)]
pub struct Solution {
    pub dofmap: DofMap,
    pub coeffs: Vec<f64>,
    pub iterations: usize,
    pub stiffness: CsrMatrix,
}

/// Solves `-laplace u = f` with `u = g` on the Dirichlet boundary.
pub fn solve_poisson(
    mesh: &SimplicialMesh,
    m: usize,
    f: &dyn ScalarField,
    g: &dyn ScalarField,
    opts: CgOptions,
) -> Result<Solution> {
    let dofmap = DofMap::new(mesh, m)?;
    let sys = assemble(mesh, &dofmap, f)?;
    let red = apply_dirichlet(&sys, &dofmap, g)?;
    let cg = solve_cg(&red.matrix, &red.rhs, opts)?;
    let coeffs = red.expand(&cg.x);
    Ok(Solution { dofmap, coeffs, iterations: cg.iterations, stiffness: sys.matrix })
}
