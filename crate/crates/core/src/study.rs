//! Convergence studies: solve on a mesh sequence, measure errors and fit
//! observed rates against the number of degrees of freedom.

use std::fmt::Write as _;
use std::time::Instant;

use crate::error::{Error, Result};
use crate::fem::field::{Constant, NegLaplacian, ScalarField};
use crate::fem::norms::{energy, error_h1};
use crate::fem::{apply_dirichlet, assemble, interpolate, solve_cg, CgOptions, DofMap};
use crate::mesh::SimplicialMesh;

pub const CSV_HEADER: &str = "level,dofs,h_min,L2_error,H1_error,interp_H1_error,rate_L2,rate_H1,rate_level,seconds";

/// Number of finest levels used by the least-squares rate fit.
pub const FIT_LEVELS: usize = 3;

#[derive(Debug, Clone, Default)]
pub struct LevelRow {
    pub level: usize,
    pub dofs: usize,
    pub h_min: f64,
    pub l2_error: f64,
    pub h1_error: f64,
    pub interp_h1_error: f64,
    pub rate_l2: Option<f64>,
    pub rate_h1: Option<f64>,
    /// `log2(e_{n-1} / e_n)` of the H1 error.
    pub rate_level: Option<f64>,
    pub seconds: f64,
    pub cg_iterations: usize,
}

#[derive(Debug, Clone, Default)]
pub struct ConvergenceReport {
    pub rows: Vec<LevelRow>,
}

/// `log(e0 / e1) / log(n1 / n0)`.
pub fn pairwise_rate(e0: f64, e1: f64, n0: usize, n1: usize) -> f64 {
    (e0 / e1).ln() / (n1 as f64 / n0 as f64).ln()
}

/// Least-squares slope of `-log e` against `log n`.
pub fn fit_rate(points: &[(usize, f64)]) -> Option<f64> {
    let pts: Vec<(f64, f64)> =
        points.iter().filter(|(_, e)| e.is_finite() && *e > 0.0).map(|(n, e)| ((*n as f64).ln(), e.ln())).collect();
    if pts.len() < 2 {
        return None;
    }
    let k = pts.len() as f64;
    let mx = pts.iter().map(|p| p.0).sum::<f64>() / k;
    let my = pts.iter().map(|p| p.1).sum::<f64>() / k;
    let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    let sxx: f64 = pts.iter().map(|p| (p.0 - mx).powi(2)).sum();
    (sxx > 0.0).then(|| -sxy / sxx)
}

impl ConvergenceReport {
    pub fn push(&mut self, mut row: LevelRow) {
        let usable = |e: f64| e.is_finite() && e > 0.0;
        if let Some(prev) = self.rows.last() {
            if row.level >= 2 {
                if usable(prev.l2_error) && usable(row.l2_error) {
                    row.rate_l2 = Some(pairwise_rate(prev.l2_error, row.l2_error, prev.dofs, row.dofs));
                }
                if usable(prev.h1_error) && usable(row.h1_error) {
                    row.rate_h1 = Some(pairwise_rate(prev.h1_error, row.h1_error, prev.dofs, row.dofs));
                    let steps = (row.level - prev.level) as f64;
                    row.rate_level = Some((prev.h1_error / row.h1_error).log2() / steps);
                }
            }
        }
        self.rows.push(row);
    }

    fn fit(&self, skip_last: usize, f: impl Fn(&LevelRow) -> f64) -> Option<f64> {
        let usable = self.rows.len().saturating_sub(skip_last);
        let start = usable.saturating_sub(FIT_LEVELS);
        let pts: Vec<(usize, f64)> = self.rows[start..usable].iter().map(|r| (r.dofs, f(r))).collect();
        fit_rate(&pts)
    }

    /// Fitted H1 rate over the last three levels.
    pub fn fit_h1(&self) -> Option<f64> {
        self.fit(0, |r| r.h1_error)
    }

    pub fn fit_l2(&self) -> Option<f64> {
        self.fit(0, |r| r.l2_error)
    }

    /// Fit that leaves out the `skip` finest levels (reference-solution runs).
    pub fn fit_h1_excluding(&self, skip: usize) -> Option<f64> {
        self.fit(skip, |r| r.h1_error)
    }

    /// Mean of `e_n / e_{n-1}` of the interpolation error over the last
    /// `k` pairs.
    pub fn interp_ratio(&self, k: usize) -> Option<f64> {
        let ratios: Vec<f64> =
            self.rows.windows(2).map(|w| w[1].interp_h1_error / w[0].interp_h1_error).collect();
        if ratios.len() < k || k == 0 {
            return None;
        }
        Some(ratios[ratios.len() - k..].iter().sum::<f64>() / k as f64)
    }

    pub fn to_csv(&self) -> String {
        let mut s = String::new();
        s.push_str(CSV_HEADER);
        s.push('\n');
        let opt = |v: Option<f64>| v.map_or(String::new(), |x| format!("{x:.6}"));
        for r in &self.rows {
            let _ = writeln!(
                s,
                "{},{},{:.6e},{:.6e},{:.6e},{:.6e},{},{},{},{:.3}",
                r.level,
                r.dofs,
                r.h_min,
                r.l2_error,
                r.h1_error,
                r.interp_h1_error,
                opt(r.rate_l2),
                opt(r.rate_h1),
                opt(r.rate_level),
                r.seconds
            );
        }
        s
    }
}

/// Error of the Galerkin solution and of the interpolant for a manufactured
/// solution `u` on one mesh, with `f = -laplace u` and `g = u`.
pub fn solve_level(
    mesh: &SimplicialMesh,
    m: usize,
    u: &dyn ScalarField,
    cg: CgOptions,
) -> Result<LevelRow> {
    solve_level_with_solution(mesh, m, u, cg).map(|(row, _)| row)
}

/// [`solve_level`] that also returns the Galerkin coefficients; the first
/// `mesh.nv()` of them are the vertex values.
pub fn solve_level_with_solution(
    mesh: &SimplicialMesh,
    m: usize,
    u: &dyn ScalarField,
    cg: CgOptions,
) -> Result<(LevelRow, Vec<f64>)> {
    let dofmap = DofMap::new(mesh, m)?;
    let f = NegLaplacian(u);
    let sys = assemble(mesh, &dofmap, &f)?;
    let red = apply_dirichlet(&sys, &dofmap, u)?;
    let sol = solve_cg(&red.matrix, &red.rhs, cg)?;
    let uh = red.expand(&sol.x);
    let (l2, h1) = error_h1(&uh, mesh, &dofmap, u)?;
    let ui = interpolate(u, &dofmap)?;
    let (_, ih1) = error_h1(&ui, mesh, &dofmap, u)?;
    let row = LevelRow {
        level: mesh.level,
        dofs: dofmap.n_dofs,
        h_min: mesh.h_min(),
        l2_error: l2,
        h1_error: h1,
        interp_h1_error: ih1,
        cg_iterations: sol.iterations,
        ..Default::default()
    };
    Ok((row, uh))
}

/// Runs a study over meshes produced lazily by `meshes`.
pub fn convergence_study<I>(meshes: I, m: usize, u: &dyn ScalarField, cg: CgOptions) -> Result<ConvergenceReport>
where
    I: IntoIterator<Item = Result<SimplicialMesh>>,
{
    let mut report = ConvergenceReport::default();
    convergence_study_into(meshes, m, u, cg, &mut report)?;
    Ok(report)
}

/// Like [`convergence_study`], but rows finished before a failure stay in
/// `report`.
pub fn convergence_study_into<I>(
    meshes: I,
    m: usize,
    u: &dyn ScalarField,
    cg: CgOptions,
    report: &mut ConvergenceReport,
) -> Result<()>
where
    I: IntoIterator<Item = Result<SimplicialMesh>>,
{
    let mut t0 = Instant::now();
    for mesh in meshes {
        let mesh = mesh?;
        let level = mesh.level;
        let mut row = solve_level(&mesh, m, u, cg).map_err(|e| e.context(format!("level {level}")))?;
        row.seconds = t0.elapsed().as_secs_f64();
        report.push(row);
        t0 = Instant::now();
    }
    Ok(())
}

/// Study without an exact solution: `-laplace u = 1`, `u = 0` on the
/// Dirichlet boundary. Errors are energy differences to the finest level,
/// `|u_ref - u_n|^2 = E_ref - E_n` with `E = u^T A u`, valid for nested
/// spaces. L2 errors are not available and are reported as NaN.
pub fn reference_study<I>(meshes: I, m: usize, cg: CgOptions) -> Result<ConvergenceReport>
where
    I: IntoIterator<Item = Result<SimplicialMesh>>,
{
    let mut report = ConvergenceReport::default();
    reference_study_into(meshes, m, cg, &mut report)?;
    Ok(report)
}

/// Like [`reference_study`]. On failure `report` holds the finished levels
/// measured against the finest of them.
pub fn reference_study_into<I>(meshes: I, m: usize, cg: CgOptions, report: &mut ConvergenceReport) -> Result<()>
where
    I: IntoIterator<Item = Result<SimplicialMesh>>,
{
    let mut raw: Vec<(LevelRow, f64)> = Vec::new();
    let mut t0 = Instant::now();
    let mut outcome = Ok(());
    for mesh in meshes {
        let step = mesh.and_then(|mesh| {
            let dofmap = DofMap::new(&mesh, m)?;
            let sys = assemble(&mesh, &dofmap, &Constant(1.0))?;
            let red = apply_dirichlet(&sys, &dofmap, &Constant(0.0))?;
            let sol = solve_cg(&red.matrix, &red.rhs, cg).map_err(|e| e.context(format!("level {}", mesh.level)))?;
            let uh = red.expand(&sol.x);
            let row = LevelRow {
                level: mesh.level,
                dofs: dofmap.n_dofs,
                h_min: mesh.h_min(),
                l2_error: f64::NAN,
                interp_h1_error: f64::NAN,
                seconds: t0.elapsed().as_secs_f64(),
                cg_iterations: sol.iterations,
                ..Default::default()
            };
            Ok((row, energy(&sys.matrix, &uh)))
        });
        match step {
            Ok(r) => raw.push(r),
            Err(e) => {
                outcome = Err(e);
                break;
            }
        }
        t0 = Instant::now();
    }
    let Some(e_ref) = raw.last().map(|r| r.1) else {
        return outcome.and(Err(Error::Numerical("empty study".into())));
    };
    for (mut row, e) in raw {
        row.h1_error = (e_ref - e).max(0.0).sqrt();
        report.push(row);
    }
    outcome
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn fit_recovers_power_law() {
        let pts: Vec<(usize, f64)> = (1..5).map(|k| (10usize.pow(k), 3.0 * (10f64.powi(k as i32)).powf(-0.5))).collect();
        assert!((fit_rate(&pts).unwrap() - 0.5).abs() < 1e-12);
    }

    #[test]
    fn rates_only_from_level_two() {
        let mut r = ConvergenceReport::default();
        for (level, dofs, e) in [(0, 10, 1.0), (1, 40, 0.5), (2, 160, 0.25)] {
            r.push(LevelRow { level, dofs, l2_error: e, h1_error: e, ..Default::default() });
        }
        assert!(r.rows[1].rate_h1.is_none());
        assert!((r.rows[2].rate_h1.unwrap() - 0.5).abs() < 1e-12);
        assert!((r.rows[2].rate_level.unwrap() - 1.0).abs() < 1e-12);
        assert_eq!(r.to_csv().lines().next().unwrap(), CSV_HEADER);
    }
}
