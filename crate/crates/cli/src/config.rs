//! Study configuration read from TOML, and the problem setup derived from it.

use std::path::{Path, PathBuf};

use polygrade::fixtures::{self, Fixture};
use polygrade::refine3d::Decomposition;
use polygrade::weighted::Axial;
use polygrade::{BoundaryFlag, Domain, Error, Feature, GradingSpec, Result};
use serde::Deserialize;

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct StudyConfig {
    /// Builtin fixture name or path to a domain file.
    pub domain: String,
    /// Initial decomposition for a 3D domain given by path.
    pub decomposition: Option<String>,
    #[serde(default = "default_degree")]
    pub degree: u32,
    /// Grading strength; 1/2 when absent.
    pub a: Option<f64>,
    /// Global grading ratio override.
    pub kappa: Option<f64>,
    #[serde(default)]
    pub features: Vec<FeatureGrading>,
    pub levels: usize,
    /// First level entering studies; earlier levels are only refined.
    #[serde(default)]
    pub first_level: usize,
    #[serde(default = "default_rtol")]
    pub rtol: f64,
    #[serde(default = "default_out")]
    pub out: PathBuf,
    #[serde(default)]
    pub solution: SolutionConfig,
    #[serde(default)]
    pub hardy: HardyConfig,
    #[serde(default)]
    pub norms: NormsConfig,
    #[serde(skip)]
    pub base_dir: PathBuf,
}

/// Per-feature grading: exactly one of `vertex` (domain vertex index) or
/// `edge` (pair of domain vertex indices).
#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FeatureGrading {
    pub vertex: Option<usize>,
    pub edge: Option<[usize; 2]>,
    pub a: Option<f64>,
    pub kappa: Option<f64>,
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SolutionKind {
    #[default]
    Auto,
    Corner,
    Edge,
    Reference,
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum AxialProfile {
    #[default]
    Constant,
    Sine,
}

#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SolutionConfig {
    #[serde(default)]
    pub kind: SolutionKind,
    pub vertex: Option<usize>,
    pub edge: Option<[usize; 2]>,
    pub r1: Option<f64>,
    pub r2: Option<f64>,
    #[serde(default)]
    pub axial: AxialProfile,
    /// Write the finest Galerkin solution as VTK point data.
    #[serde(default)]
    pub export: bool,
}

#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct HardyConfig {
    /// One `D` or `N` per facet, replacing the flags of the domain.
    pub flags: Option<String>,
    pub depth: Option<usize>,
    pub tol: Option<f64>,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct NormsConfig {
    /// Values of `a` for the `K^order_(a+1)` sweep.
    #[serde(default = "default_norm_a")]
    pub a: Vec<f64>,
    #[serde(default = "default_norm_order")]
    pub order: usize,
    #[serde(default = "default_depths")]
    pub depths: [usize; 2],
}

impl Default for NormsConfig {
    fn default() -> Self {
        NormsConfig { a: default_norm_a(), order: default_norm_order(), depths: default_depths() }
    }
}

fn default_degree() -> u32 {
    1
}
fn default_rtol() -> f64 {
    1e-10
}
fn default_out() -> PathBuf {
    PathBuf::from("out")
}
fn default_norm_a() -> Vec<f64> {
    vec![0.5, 0.9]
}
fn default_norm_order() -> usize {
    2
}
fn default_depths() -> [usize; 2] {
    [2, 7]
}

/// Command-line values that take precedence over the file.
#[derive(Debug, Clone, Default)]
pub struct Overrides {
    pub levels: Option<usize>,
    pub degree: Option<u32>,
    pub kappa: Option<f64>,
    pub out: Option<PathBuf>,
}

impl StudyConfig {
    pub fn load(path: &Path, ov: &Overrides) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::from(e).context(path.display().to_string()))?;
        let mut cfg = Self::parse(&text)?;
        cfg.base_dir = path.parent().map(Path::to_path_buf).unwrap_or_default();
        cfg.apply(ov);
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn parse(text: &str) -> Result<Self> {
        toml::from_str(text).map_err(|e| Error::Domain(format!("config: {}", e.message())))
    }

    pub fn apply(&mut self, ov: &Overrides) {
        if let Some(n) = ov.levels {
            self.levels = n;
        }
        if let Some(m) = ov.degree {
            self.degree = m;
        }
        if let Some(k) = ov.kappa {
            self.kappa = Some(k);
        }
        if let Some(o) = &ov.out {
            self.out = o.clone();
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.levels < 2 {
            return Err(Error::Domain(format!("levels must be at least 2, got {}", self.levels)));
        }
        if self.first_level > self.levels {
            return Err(Error::Domain(format!("first_level {} exceeds levels {}", self.first_level, self.levels)));
        }
        if !(self.rtol > 0.0 && self.rtol < 1.0) {
            return Err(Error::Domain(format!("rtol {} outside (0, 1)", self.rtol)));
        }
        if self.norms.depths[0] > self.norms.depths[1] {
            return Err(Error::Domain("norms.depths must be increasing".into()));
        }
        Ok(())
    }

    fn resolve(&self, p: &str) -> PathBuf {
        let p = Path::new(p);
        if p.is_absolute() {
            p.to_path_buf()
        } else {
            self.base_dir.join(p)
        }
    }

    /// Output directory, relative paths taken from the working directory.
    pub fn out_dir(&self) -> &Path {
        &self.out
    }

    pub fn setup(&self) -> Result<Setup> {
        let name = self.domain.trim();
        let looks_builtin = fixtures::FIXTURE_NAMES.contains(&name) || name.starts_with("sector2d(");
        if looks_builtin && self.decomposition.is_none() {
            return Ok(match fixtures::builtin(name)? {
                Fixture::Planar(domain) => Setup::Planar(domain),
                Fixture::Solid { domain, decomposition } => Setup::Solid(domain, decomposition),
            });
        }
        let domain = if looks_builtin {
            fixtures::builtin(name)?.domain().clone()
        } else {
            let path = self.resolve(name);
            let text = std::fs::read_to_string(&path).map_err(|e| Error::from(e).context(path.display().to_string()))?;
            Domain::parse(&text).map_err(|e| e.context(path.display().to_string()))?
        };
        if domain.dim == 2 {
            return Ok(Setup::Planar(domain));
        }
        let dpath = self
            .decomposition
            .as_deref()
            .ok_or_else(|| Error::Domain("a 3D domain file needs `decomposition`".into()))?;
        let path = self.resolve(dpath);
        let text = std::fs::read_to_string(&path).map_err(|e| Error::from(e).context(path.display().to_string()))?;
        let d = Decomposition::parse(&text, &domain).map_err(|e| e.context(path.display().to_string()))?;
        Ok(Setup::Solid(domain, d))
    }

    pub fn grading(&self, domain: &Domain) -> Result<GradingSpec> {
        let a = self.a.unwrap_or(0.5);
        let mut g = match &domain.grading {
            Some(input) => GradingSpec::from_input(input, self.degree, a)?,
            None => GradingSpec::new(self.degree, a)?,
        };
        if let Some(k) = self.kappa {
            g = g.with_kappa(k)?;
        }
        for fg in &self.features {
            let f = feature_of(domain, fg.vertex, fg.edge)?;
            let kappa = match (fg.kappa, fg.a) {
                (Some(k), _) => Some(k),
                (None, Some(a)) => Some(polygrade::domain::grading_parameter(g.m, a)?),
                (None, None) => None,
            };
            g = g.with_feature(f, fg.a, kappa)?;
        }
        Ok(g)
    }

    pub fn axial(&self) -> Axial {
        match self.solution.axial {
            AxialProfile::Constant => Axial::Constant,
            AxialProfile::Sine => Axial::Sine,
        }
    }
}

/// A singular feature named by vertex index or vertex pair.
pub fn feature_of(domain: &Domain, vertex: Option<usize>, edge: Option<[usize; 2]>) -> Result<Feature> {
    match (vertex, edge) {
        (Some(v), None) => {
            if domain.singular_vertices.contains(&v) {
                Ok(Feature::Corner(v))
            } else {
                Err(Error::Domain(format!("vertex {v} is not a singular vertex")))
            }
        }
        (None, Some([a, b])) => domain
            .edge_index(a, b)
            .map(Feature::Edge)
            .ok_or_else(|| Error::Domain(format!("{a}-{b} is not a singular edge"))),
        _ => Err(Error::Domain("give exactly one of `vertex` or `edge`".into())),
    }
}

/// Parses a facet flag string such as `DDNN`.
pub fn parse_flags(s: &str) -> Result<Vec<BoundaryFlag>> {
    s.chars()
        .filter(|c| !c.is_whitespace())
        .map(|c| match c {
            'D' | 'd' => Ok(BoundaryFlag::Dirichlet),
            'N' | 'n' => Ok(BoundaryFlag::Neumann),
            _ => Err(Error::Domain(format!("boundary flag '{c}' is not D or N"))),
        })
        .collect()
}

/// Domain together with its initial mesh data.
#[derive(Debug, Clone)]
pub enum Setup {
    Planar(Domain),
    Solid(Domain, Decomposition),
}

impl Setup {
    pub fn domain(&self) -> &Domain {
        match self {
            Setup::Planar(d) | Setup::Solid(d, _) => d,
        }
    }

    pub fn with_domain(self, domain: Domain) -> Self {
        match self {
            Setup::Planar(_) => Setup::Planar(domain),
            Setup::Solid(_, d) => Setup::Solid(domain, d),
        }
    }
}
