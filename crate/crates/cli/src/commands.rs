//! The five subcommands.

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};
use std::time::Instant;

use polygrade::fem::{CgOptions, ScalarField};
use polygrade::io::{CellMesh, Format};
use polygrade::mesh::{check_conformity, SimplicialMesh};
use polygrade::refine2d::{refine_mesh2, Mesh2};
use polygrade::refine3d::{check_decomposition, refine_decomposition, Decomposition};
use polygrade::study::{reference_study_into, solve_level_with_solution, ConvergenceReport};
use polygrade::weighted::hardy::{hardy_min_eigenvalue, hardy_verdict, HardyOptions};
use polygrade::weighted::norm::{depth_sweep, sweep_verdict, SweepVerdict};
use polygrade::weighted::{edge_manufactured_problem, manufactured_problem};
use polygrade::{geometry, Domain, Error, Feature, GradingSpec, Result};

use crate::config::{feature_of, parse_flags, Setup, SolutionKind, StudyConfig};

/// Mesh of one level: a triangulation or a tetrahedron/prism decomposition.
pub enum LevelMesh {
    Planar(Mesh2),
    Solid(Decomposition),
}

impl LevelMesh {
    pub fn level(&self) -> usize {
        match self {
            LevelMesh::Planar(m) => m.level,
            LevelMesh::Solid(d) => d.level,
        }
    }

    pub fn simplicial(&self, domain: &Domain) -> Result<SimplicialMesh> {
        match self {
            LevelMesh::Planar(m) => m.to_simplicial(),
            LevelMesh::Solid(d) => d.tetrahedralize(domain),
        }
    }
}

/// Lazily refined sequence `0..=last`.
pub struct Levels<'a> {
    domain: &'a Domain,
    grading: GradingSpec,
    state: Option<Result<LevelMesh>>,
    last: usize,
}

impl<'a> Levels<'a> {
    pub fn new(setup: &'a Setup, grading: GradingSpec, last: usize) -> Self {
        let first = match setup {
            Setup::Planar(d) => Mesh2::initial(d).map(LevelMesh::Planar),
            Setup::Solid(_, d0) => Ok(LevelMesh::Solid(d0.clone())),
        };
        Levels { domain: setup.domain(), grading, state: Some(first), last }
    }

    /// Simplicial meshes of levels `first..=last`.
    pub fn simplicial(self, first: usize) -> impl Iterator<Item = Result<SimplicialMesh>> + 'a {
        let domain = self.domain;
        self.filter(move |l| l.as_ref().map_or(true, |m| m.level() >= first))
            .map(move |l| l.and_then(|m| m.simplicial(domain)))
    }
}

impl Iterator for Levels<'_> {
    type Item = Result<LevelMesh>;

    fn next(&mut self) -> Option<Self::Item> {
        let cur = match self.state.take()? {
            Ok(c) => c,
            Err(e) => return Some(Err(e)),
        };
        if cur.level() < self.last {
            let level = cur.level() + 1;
            let next = match &cur {
                LevelMesh::Planar(m) => refine_mesh2(m, &self.grading).map(LevelMesh::Planar),
                LevelMesh::Solid(d) => refine_decomposition(d, &self.grading).map(LevelMesh::Solid),
            };
            self.state = Some(next.map_err(|e| e.context(format!("level {level}"))));
        }
        Some(Ok(cur))
    }
}

fn write(dir: &Path, name: &str, text: &str) -> Result<PathBuf> {
    fs::create_dir_all(dir).map_err(|e| Error::from(e).context(dir.display().to_string()))?;
    let path = dir.join(name);
    fs::write(&path, text).map_err(|e| Error::from(e).context(path.display().to_string()))?;
    Ok(path)
}

fn cg_options(cfg: &StudyConfig) -> CgOptions {
    CgOptions { rtol: cfg.rtol, ..CgOptions::default() }
}

/// Writes `T'_n` and `T_n` for every level with conformity reports.
pub fn refine(cfg: &StudyConfig) -> Result<String> {
    let setup = cfg.setup()?;
    let domain = setup.domain();
    let grading = cfg.grading(domain)?;
    let dir = cfg.out_dir();
    let mut report = String::new();
    let mut counts = String::new();
    let mut failed = Vec::new();
    for lm in Levels::new(&setup, grading, cfg.levels) {
        let lm = lm?;
        let n = lm.level();
        let mesh = lm.simplicial(domain).map_err(|e| e.context(format!("level {n}")))?;
        match &lm {
            LevelMesh::Planar(m) => {
                if counts.is_empty() {
                    counts.push_str("level,triangles,points\n");
                }
                let _ = writeln!(counts, "{n},{},{}", m.triangles.len(), m.points.len());
                let rep = check_conformity(&mesh, domain);
                let _ = writeln!(report, "level {n}: {rep}");
                if !rep.passed() {
                    failed.push(n);
                }
                write(dir, &format!("level_{n}.vtk"), &CellMesh::from_mesh2(m).to_vtk())?;
            }
            LevelMesh::Solid(d) => {
                if counts.is_empty() {
                    counts.push_str("level,s4,vs3,vess,prisms,tets,points\n");
                }
                let c = d.counts();
                let _ = writeln!(counts, "{n},{},{},{},{},{},{}", c.s4, c.vs3, c.vess, c.prisms, mesh.num_cells(), d.points.len());
                let rep = check_decomposition(d, domain)?;
                let _ = writeln!(report, "{rep}");
                if !rep.passed() {
                    failed.push(n);
                }
                write(dir, &format!("decomposition_{n}.vtk"), &CellMesh::from_decomposition(d).to_vtk())?;
                write(dir, &format!("decomposition_{n}.decomp"), &d.to_text())?;
                write(dir, &format!("level_{n}.vtk"), &CellMesh::from_simplicial(&mesh).to_vtk())?;
            }
        }
    }
    write(dir, "refine_report.txt", &report)?;
    write(dir, "counts.csv", &counts)?;
    if !failed.is_empty() {
        return Err(Error::Conformity(format!("levels {failed:?} failed, see refine_report.txt\n{report}")));
    }
    Ok(format!("{counts}{report}"))
}

/// Manufactured solution chosen by the config, or `None` for the
/// reference-solution study.
fn exact_solution(cfg: &StudyConfig, domain: &Domain) -> Result<Option<(Box<dyn ScalarField>, String)>> {
    let s = &cfg.solution;
    let kind = match s.kind {
        SolutionKind::Auto if domain.dim == 2 => SolutionKind::Corner,
        SolutionKind::Auto => {
            if s.edge.is_some() || reentrant_z_edge(domain).is_some() {
                SolutionKind::Edge
            } else {
                SolutionKind::Reference
            }
        }
        k => k,
    };
    match kind {
        SolutionKind::Corner => {
            let v = match s.vertex {
                Some(v) => v,
                None => sharpest(domain, |f| matches!(f, Feature::Corner(_)))
                    .and_then(|f| match f {
                        Feature::Corner(v) => Some(v),
                        Feature::Edge(_) => None,
                    })
                    .ok_or_else(|| Error::Domain("domain has no singular corner".into()))?,
            };
            let reach = corner_reach(domain, v);
            let (r1, r2) = (s.r1.unwrap_or(0.1 * reach), s.r2.unwrap_or(0.95 * reach));
            let u = manufactured_problem(domain, v, r1, r2)?;
            let desc = format!("corner solution at vertex {v}, exponent {:.6}, cutoff [{r1}, {r2}]", u.exponent());
            Ok(Some((Box::new(u), desc)))
        }
        SolutionKind::Edge => {
            let e = match s.edge {
                Some(pair) => match feature_of(domain, None, Some(pair))? {
                    Feature::Edge(e) => e,
                    Feature::Corner(_) => unreachable!(),
                },
                None => reentrant_z_edge(domain).ok_or_else(|| {
                    Error::Domain("no unique re-entrant edge parallel to z; set solution.edge".into())
                })?,
            };
            let diam = domain.diameter();
            let (r1, r2) = (s.r1.unwrap_or(2.0 * diam), s.r2.unwrap_or(3.0 * diam));
            let u = edge_manufactured_problem(domain, e, r1, r2, cfg.axial())?;
            let desc = format!(
                "edge solution along {:?}, exponent {:.6}, cutoff [{r1}, {r2}], axial {:?}",
                domain.singular_edges[e],
                u.cross.exponent(),
                u.axial
            );
            Ok(Some((Box::new(u), desc)))
        }
        SolutionKind::Reference | SolutionKind::Auto => Ok(None),
    }
}

fn sharpest(domain: &Domain, pick: impl Fn(Feature) -> bool) -> Option<Feature> {
    domain
        .corner_openings
        .iter()
        .filter(|(f, _)| pick(**f))
        .max_by(|a, b| a.1.total_cmp(b.1))
        .map(|(f, _)| *f)
}

/// The only singular edge with opening above pi, if it is parallel to z.
fn reentrant_z_edge(domain: &Domain) -> Option<usize> {
    let reentrant: Vec<usize> = domain
        .corner_openings
        .iter()
        .filter_map(|(f, a)| match f {
            Feature::Edge(e) if *a > std::f64::consts::PI + 1e-9 => Some(*e),
            _ => None,
        })
        .collect();
    let [e] = reentrant[..] else { return None };
    let [a, b] = domain.singular_edges[e];
    let d = geometry::sub(&domain.vertices[b], &domain.vertices[a]);
    (d[0].abs() < 1e-12 && d[1].abs() < 1e-12).then_some(e)
}

/// Distance from a 2D corner to the nearest boundary point not on its legs,
/// capped by the leg lengths.
fn corner_reach(domain: &Domain, v: usize) -> f64 {
    let p = domain.vertices[v];
    let mut reach = f64::INFINITY;
    for f in &domain.facets {
        let (a, b) = (&domain.vertices[f.vertices[0]], &domain.vertices[f.vertices[1]]);
        if f.vertices.contains(&v) {
            let other = if f.vertices[0] == v { b } else { a };
            reach = reach.min(geometry::dist(&p, other));
        } else {
            reach = reach.min(geometry::point_segment_distance(&p, a, b));
        }
    }
    reach
}

/// Errors and rates over the level sequence. The CSV is written even when a
/// level fails.
pub fn convergence(cfg: &StudyConfig) -> Result<String> {
    let setup = cfg.setup()?;
    let domain = setup.domain();
    let grading = cfg.grading(domain)?;
    let m = cfg.degree as usize;
    let cg = cg_options(cfg);
    let dir = cfg.out_dir();
    let meshes = Levels::new(&setup, grading.clone(), cfg.levels).simplicial(cfg.first_level);
    let mut report = ConvergenceReport::default();
    let mut summary = format!("degree {m}, kappa {}, levels {}..{}\n", grading.kappa, cfg.first_level, cfg.levels);
    let (outcome, excluded) = match exact_solution(cfg, domain)? {
        Some((u, desc)) => {
            let _ = writeln!(summary, "{desc}");
            let mut finest = None;
            let mut t0 = Instant::now();
            let mut outcome = Ok(());
            for mesh in meshes {
                let step = mesh.and_then(|mesh| {
                    let level = mesh.level;
                    let (mut row, uh) = solve_level_with_solution(&mesh, m, u.as_ref(), cg)
                        .map_err(|e| e.context(format!("level {level}")))?;
                    row.seconds = t0.elapsed().as_secs_f64();
                    Ok((row, uh, mesh))
                });
                match step {
                    Ok((row, uh, mesh)) => {
                        report.push(row);
                        if cfg.solution.export {
                            finest = Some((mesh, uh));
                        }
                    }
                    Err(e) => {
                        outcome = Err(e);
                        break;
                    }
                }
                t0 = Instant::now();
            }
            if let Some((mesh, uh)) = finest {
                let exact = mesh.points.iter().map(|x| u.value(x)).collect();
                let cm = CellMesh::from_simplicial(&mesh)
                    .with_point_data("u_h", uh[..mesh.nv()].to_vec())
                    .with_point_data("u", exact);
                write(dir, "solution.vtk", &cm.to_vtk())?;
            }
            (outcome, 0)
        }
        None => {
            let _ = writeln!(summary, "reference solution: -laplace u = 1, errors against the finest level");
            (reference_study_into(meshes, m, cg, &mut report), 1)
        }
    };
    write(dir, "convergence.csv", &report.to_csv())?;
    let fmt = |v: Option<f64>| v.map_or("n/a".to_string(), |x| format!("{x:.4}"));
    if excluded == 0 {
        let _ = writeln!(summary, "fitted H1 rate vs dofs (last 3 levels): {}", fmt(report.fit_h1()));
        let _ = writeln!(summary, "fitted L2 rate vs dofs (last 3 levels): {}", fmt(report.fit_l2()));
        let _ = writeln!(summary, "interpolation error ratio (last 3 levels): {}", fmt(report.interp_ratio(3)));
    } else {
        let _ = writeln!(
            summary,
            "fitted H1 rate vs dofs (3 levels before the finest): {}",
            fmt(report.fit_h1_excluding(excluded))
        );
    }
    write(dir, "summary.txt", &summary)?;
    outcome.map(|_| format!("{}{summary}", report.to_csv()))
}

/// Smallest Hardy eigenvalue per level and the verdict.
pub fn hardy(cfg: &StudyConfig) -> Result<String> {
    let mut setup = cfg.setup()?;
    if let Some(flags) = &cfg.hardy.flags {
        let domain = setup.domain().clone().with_flags(&parse_flags(flags)?)?;
        setup = setup.with_domain(domain);
    }
    let domain = setup.domain();
    let grading = cfg.grading(domain)?;
    let defaults = HardyOptions::default();
    let opts = HardyOptions {
        m: cfg.degree as usize,
        depth: cfg.hardy.depth.unwrap_or(defaults.depth),
        tol: cfg.hardy.tol.unwrap_or(defaults.tol),
        cg: cg_options(cfg),
        ..defaults
    };
    let mut csv = String::from("level,dofs,lambda_min\n");
    let mut lambdas = Vec::new();
    for mesh in Levels::new(&setup, grading, cfg.levels).simplicial(cfg.first_level) {
        let mesh = mesh?;
        let est = hardy_min_eigenvalue(&mesh, domain, &opts).map_err(|e| e.context(format!("level {}", mesh.level)))?;
        let _ = writeln!(csv, "{},{},{:.10e}", mesh.level, est.dofs, est.lambda);
        lambdas.push(est.lambda);
    }
    let verdict = format!("verdict: {}\n", hardy_verdict(&lambdas));
    write(cfg.out_dir(), "hardy.csv", &csv)?;
    write(cfg.out_dir(), "hardy_verdict.txt", &verdict)?;
    Ok(format!("{csv}{verdict}"))
}

/// Depth sweeps of the weighted norm of the singular solution on `T_0`.
pub fn norms(cfg: &StudyConfig) -> Result<String> {
    let setup = cfg.setup()?;
    let domain = setup.domain();
    let (u, desc) = exact_solution(cfg, domain)?
        .ok_or_else(|| Error::Domain("weighted-norm sweep needs a corner or edge solution".into()))?;
    let grading = cfg.grading(domain)?;
    let mesh = Levels::new(&setup, grading, 0)
        .simplicial(0)
        .next()
        .expect("level 0 exists")?;
    let [d0, d1] = cfg.norms.depths;
    let mut csv = String::from("a,depth,norm_value,rel_change\n");
    let mut verdicts = format!("{desc}\n");
    for &a in &cfg.norms.a {
        let rows = depth_sweep(u.as_ref(), domain, &mesh, cfg.norms.order, a + 1.0, d0..=d1)?;
        for r in &rows {
            let _ = writeln!(csv, "{a},{},{:.10e},{:.6e}", r.depth, r.value, r.rel_change);
        }
        let v = match sweep_verdict(&rows) {
            SweepVerdict::Stable => "STABLE",
            SweepVerdict::Diverging => "DIVERGING",
            SweepVerdict::Undecided => "UNDECIDED",
        };
        let _ = writeln!(verdicts, "K^{}_(a+1) with a={a}: {v}", cfg.norms.order);
    }
    write(cfg.out_dir(), "norms.csv", &csv)?;
    write(cfg.out_dir(), "norms_verdict.txt", &verdicts)?;
    Ok(format!("{csv}{verdicts}"))
}

/// Exports a mesh file, or the finest level of the configured sequence.
pub fn export(cfg: Option<&StudyConfig>, mesh: Option<&Path>, format: Format, out: &Path) -> Result<String> {
    let ext = match format {
        Format::Vtk => "vtk",
        Format::Plain => "txt",
    };
    let mut written = Vec::new();
    if let Some(path) = mesh {
        let text = fs::read_to_string(path).map_err(|e| Error::from(e).context(path.display().to_string()))?;
        let cm = if text.contains("[cells]") || text.trim().is_empty() {
            CellMesh::parse_plain(&text)?
        } else {
            let cfg = cfg.ok_or_else(|| Error::Domain("a decomposition file needs --config for its domain".into()))?;
            let setup = cfg.setup()?;
            CellMesh::from_decomposition(&Decomposition::parse(&text, setup.domain())?)
        };
        let stem = path.file_stem().and_then(|s| s.to_str()).unwrap_or("mesh");
        written.push(write(out, &format!("{stem}.{ext}"), &cm.render(format))?);
    } else {
        let cfg = cfg.ok_or_else(|| Error::Domain("export needs --mesh or --config".into()))?;
        let setup = cfg.setup()?;
        let domain = setup.domain();
        let grading = cfg.grading(domain)?;
        let last = Levels::new(&setup, grading, cfg.levels).last().expect("level 0 exists")?;
        let n = last.level();
        match &last {
            LevelMesh::Planar(m) => {
                written.push(write(out, &format!("level_{n}.{ext}"), &CellMesh::from_mesh2(m).render(format))?);
            }
            LevelMesh::Solid(d) => {
                let cm = CellMesh::from_decomposition(d);
                written.push(write(out, &format!("decomposition_{n}.{ext}"), &cm.render(format))?);
                let tm = CellMesh::from_simplicial(&d.tetrahedralize(domain)?);
                written.push(write(out, &format!("level_{n}.{ext}"), &tm.render(format))?);
            }
        }
    }
    Ok(written.iter().map(|p| format!("wrote {}\n", p.display())).collect())
}
