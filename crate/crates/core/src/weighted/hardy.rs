//! Discrete Hardy constant: the smallest eigenvalue of `K v = lambda M_w v`,
//! where `M_w` is the mass matrix with weight `r^-2`.

use crate::domain::Domain;
use crate::error::{Error, Result};
use crate::fem::assemble::{assemble, assemble_with, AffineMap};
use crate::fem::dofmap::DofMap;
use crate::fem::field::Constant;
use crate::fem::sparse::{dot, solve_cg_from, CgOptions, CsrMatrix};
use crate::mesh::SimplicialMesh;
use crate::weighted::norm::{CompositeRules, DEFAULT_DEPTH};

#[derive(Debug, Clone, Copy)]
pub struct HardyOptions {
    pub m: usize,
    pub depth: usize,
    /// Relative change of the Rayleigh quotient that ends the iteration.
    pub tol: f64,
    pub max_sweeps: usize,
    pub cg: CgOptions,
}

impl Default for HardyOptions {
    fn default() -> Self {
        HardyOptions { m: 1, depth: DEFAULT_DEPTH, tol: 1e-8, max_sweeps: 5000, cg: CgOptions::default() }
    }
}

#[derive(Debug, Clone)]
pub struct HardyEstimate {
    pub lambda: f64,
    pub sweeps: usize,
    pub dofs: usize,
}

/// `(r^-2 phi_i, phi_j)` with composite quadrature on cells touching the
/// singular set.
pub fn weighted_mass(mesh: &SimplicialMesh, dofmap: &DofMap, domain: &Domain, depth: usize) -> Result<CsrMatrix> {
    let rules = CompositeRules::new(mesh.dim, 2 * dofmap.m + 2, depth)?;
    let nl = dofmap.n_local();
    let sys = assemble_with(mesh, dofmap, |c, a, _| {
        let map = AffineMap::new(mesh.dim, &mesh.cell_points(c))?;
        let q = rules.for_cell(mesh, c);
        let mut v = vec![0.0; nl];
        for (p, w) in q.points.iter().zip(&q.weights) {
            dofmap.basis.eval(p, &mut v);
            let r = domain.singular_distance(&map.map(p));
            let wq = w * map.abs_det() / (r * r);
            for i in 0..nl {
                for j in 0..nl {
                    a[i * nl + j] += wq * v[i] * v[j];
                }
            }
        }
        Ok(())
    })?;
    Ok(sys.matrix)
}

/// Inverse iteration with CG inner solves, started from the all-ones vector
/// on the free dofs.
pub fn hardy_min_eigenvalue(mesh: &SimplicialMesh, domain: &Domain, opts: &HardyOptions) -> Result<HardyEstimate> {
    let dofmap = DofMap::new(mesh, opts.m)?;
    if !dofmap.dirichlet.iter().any(|&d| d) {
        return Err(Error::Unsupported("Hardy estimate needs a nonempty Dirichlet set".into()));
    }
    let k_full = assemble(mesh, &dofmap, &Constant(0.0))?.matrix;
    let m_full = weighted_mass(mesh, &dofmap, domain, opts.depth)?;
    let free: Vec<usize> = (0..dofmap.n_dofs).filter(|&i| !dofmap.dirichlet[i]).collect();
    let mut map = vec![usize::MAX; dofmap.n_dofs];
    for (k, &i) in free.iter().enumerate() {
        map[i] = k;
    }
    let k = k_full.restrict(&free, &map);
    let mw = m_full.restrict(&free, &map);
    inverse_iteration(&k, &mw, opts)
}

/// Smallest eigenvalue of `K v = lambda M v` for SPD `K`, `M`.
pub fn inverse_iteration(k: &CsrMatrix, mw: &CsrMatrix, opts: &HardyOptions) -> Result<HardyEstimate> {
    let n = k.n;
    if n == 0 {
        return Err(Error::Numerical("no free dofs".into()));
    }
    let mut v = vec![1.0; n];
    let mv = mw.mul(&v);
    let nrm = dot(&v, &mv).sqrt();
    v.iter_mut().for_each(|x| *x /= nrm);
    let mut rho_prev = f64::NAN;
    let mut guess = vec![0.0; n];
    let mut change = f64::INFINITY;
    for sweep in 1..=opts.max_sweeps {
        let rhs = mw.mul(&v);
        let y = solve_cg_from(k, &rhs, guess, opts.cg)?.x;
        let my = mw.mul(&y);
        let ymy = dot(&y, &my);
        let rho = dot(&y, &rhs) / ymy;
        let s = ymy.sqrt();
        v = y.iter().map(|x| x / s).collect();
        guess = v.iter().map(|x| x / rho).collect();
        change = (rho - rho_prev).abs() / rho.abs();
        if change <= opts.tol {
            return Ok(HardyEstimate { lambda: rho, sweeps: sweep, dofs: n });
        }
        rho_prev = rho;
    }
    Err(Error::EigenDiverged { sweeps: opts.max_sweeps, change })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum HardyVerdict {
    StablePositive,
    Decaying,
    Undecided,
}

impl std::fmt::Display for HardyVerdict {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            HardyVerdict::StablePositive => "STABLE-POSITIVE",
            HardyVerdict::Decaying => "DECAYING",
            HardyVerdict::Undecided => "UNDECIDED",
        })
    }
}

/// Relative change between the last two levels that still counts as stable.
pub const HARDY_STABLE_TOL: f64 = 0.05;

pub fn hardy_verdict(lambdas: &[f64]) -> HardyVerdict {
    if lambdas.len() < 2 {
        return HardyVerdict::Undecided;
    }
    let n = lambdas.len();
    let last = (lambdas[n - 1] - lambdas[n - 2]).abs() / lambdas[n - 2].abs();
    let decreasing = lambdas.windows(2).all(|w| w[1] < w[0]);
    if lambdas[n - 1] > 0.0 && last < HARDY_STABLE_TOL {
        HardyVerdict::StablePositive
    } else if decreasing {
        HardyVerdict::Decaying
    } else {
        HardyVerdict::Undecided
    }
}
