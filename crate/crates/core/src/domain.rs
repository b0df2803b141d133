//! Polygonal and polyhedral domains with their singular sets.
//!
//! A [`Domain`] carries the boundary description (segments in 2D, planar
//! polygons in 3D), boundary-condition flags, and the singular set: corners in
//! 2D, edges and vertices in 3D. Every geometric corner/edge is singular; the
//! user may add artificial singular points (for instance collinear facet
//! vertices) but never remove geometric ones.

use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::f64::consts::PI;
use std::fmt;

use crate::error::{Error, Result};
use crate::geometry::{self, Point};

/// Tolerance used when comparing recomputed opening angles with user input.
pub const ANGLE_TOL: f64 = 1e-9;

/// Singularity class of a point; ordered `S < E < V`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum VertexType {
    /// Smooth point.
    S,
    /// Point on an open singular edge (3D only).
    E,
    /// Vertex of the domain.
    V,
}

impl VertexType {
    pub fn letter(self) -> char {
        match self {
            VertexType::S => 'S',
            VertexType::E => 'E',
            VertexType::V => 'V',
        }
    }

    pub fn from_letter(c: char) -> Option<Self> {
        match c {
            'S' | 's' => Some(VertexType::S),
            'E' | 'e' => Some(VertexType::E),
            'V' | 'v' => Some(VertexType::V),
            _ => None,
        }
    }
}

impl fmt::Display for VertexType {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.letter())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum BoundaryFlag {
    Dirichlet,
    Neumann,
}

/// A singular vertex (index into `Domain::vertices`) or a singular edge
/// (index into `Domain::singular_edges`).
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Feature {
    Corner(usize),
    Edge(usize),
}

#[derive(Debug, Clone)]
pub struct Facet {
    pub vertices: Vec<usize>,
    pub flag: BoundaryFlag,
}

#[derive(Debug, Clone)]
pub struct Domain {
    pub dim: usize,
    pub vertices: Vec<Point>,
    /// Boundary pieces, oriented so the domain lies to the left (2D) or the
    /// polygon normal points outward (3D).
    pub facets: Vec<Facet>,
    pub singular_vertices: BTreeSet<usize>,
    /// Singular edges as ordered vertex pairs `(min, max)`; 3D only.
    pub singular_edges: Vec<[usize; 2]>,
    /// Opening angle of every singular corner (2D) or singular edge (3D).
    pub corner_openings: BTreeMap<Feature, f64>,
    /// Grading settings read from the `[grading]` section, if any.
    pub grading: Option<GradingInput>,
    diameter: f64,
    facet_normals: Vec<Point>,
}

/// Raw `[grading]` section values.
#[derive(Debug, Clone, Default)]
pub struct GradingInput {
    pub m: Option<u32>,
    pub a: Option<f64>,
    pub kappa: Vec<(Feature, f64)>,
}

/// User-supplied singular set markup.
#[derive(Debug, Clone, Default)]
pub struct SingularMarkup {
    pub vertices: Vec<usize>,
    pub edges: Vec<[usize; 2]>,
    pub alpha: Vec<(Feature, f64)>,
}

impl Domain {
    /// Builds and validates a domain. With `markup = None` every facet
    /// vertex and (in 3D) every facet edge is singular.
    pub fn new(
        dim: usize,
        vertices: Vec<Point>,
        mut facets: Vec<Facet>,
        markup: Option<SingularMarkup>,
    ) -> Result<Self> {
        if dim != 2 && dim != 3 {
            return Err(Error::Domain(format!("dimension must be 2 or 3, got {dim}")));
        }
        for (k, f) in facets.iter().enumerate() {
            if f.vertices.iter().any(|&v| v >= vertices.len()) {
                return Err(Error::Domain(format!("facet {k} references an unknown vertex")));
            }
            let need = if dim == 2 { 2 } else { 3 };
            if (dim == 2 && f.vertices.len() != 2) || f.vertices.len() < need {
                return Err(Error::Domain(format!("facet {k} has {} vertices", f.vertices.len())));
            }
        }
        let mut diameter: f64 = 0.0;
        for a in &vertices {
            for b in &vertices {
                diameter = diameter.max(geometry::dist(a, b));
            }
        }
        let (geo_openings, facet_normals) = if dim == 2 {
            (validate_polygon(&vertices, &mut facets)?, Vec::new())
        } else {
            validate_polyhedron(&vertices, &mut facets, diameter)?
        };

        // geometric singular set: non-flat corners/edges and flag changes
        let mut required_v = BTreeSet::new();
        let mut required_e = BTreeSet::new();
        let mut all_v = BTreeSet::new();
        let mut all_e = BTreeSet::new();
        for (key, info) in &geo_openings {
            let flat = (info.angle - PI).abs() <= ANGLE_TOL && !info.flag_change;
            match key {
                GeoKey::Vertex(v) => {
                    all_v.insert(*v);
                    if !flat {
                        required_v.insert(*v);
                    }
                }
                GeoKey::Edge(e) => {
                    all_e.insert(*e);
                    if !flat {
                        required_e.insert(*e);
                    }
                }
            }
        }
        if dim == 3 {
            // facet vertices where a facet polygon turns are geometric corners
            for f in &facets {
                let n = f.vertices.len();
                for i in 0..n {
                    let p = &vertices[f.vertices[(i + n - 1) % n]];
                    let q = &vertices[f.vertices[i]];
                    let r = &vertices[f.vertices[(i + 1) % n]];
                    let c = geometry::norm(&geometry::cross(&geometry::sub(q, p), &geometry::sub(r, q)));
                    all_v.insert(f.vertices[i]);
                    if c > 1e-12 * diameter * diameter {
                        required_v.insert(f.vertices[i]);
                    }
                }
            }
        }

        let (singular_vertices, edge_set, alpha) = match markup {
            None => (all_v.clone(), all_e.clone(), Vec::new()),
            Some(m) => {
                let sv: BTreeSet<usize> = m.vertices.iter().copied().collect();
                let se: BTreeSet<[usize; 2]> =
                    m.edges.iter().map(|e| [e[0].min(e[1]), e[0].max(e[1])]).collect();
                if let Some(v) = sv.iter().find(|&&v| v >= vertices.len()) {
                    return Err(Error::Domain(format!("singular vertex {v} does not exist")));
                }
                if dim == 2 && !se.is_empty() {
                    return Err(Error::Domain("singular edges are only meaningful in 3D".into()));
                }
                for v in &required_v {
                    if !sv.contains(v) {
                        return Err(Error::Domain(format!(
                            "vertex {v} is a geometric singular point but is not marked singular"
                        )));
                    }
                }
                for e in &required_e {
                    if !se.contains(e) {
                        return Err(Error::Domain(format!(
                            "edge {}-{} is a geometric singular edge but is not marked singular",
                            e[0], e[1]
                        )));
                    }
                }
                for e in &se {
                    if !all_e.contains(e) {
                        return Err(Error::Domain(format!(
                            "singular edge {}-{} is not a boundary edge",
                            e[0], e[1]
                        )));
                    }
                    if !sv.contains(&e[0]) || !sv.contains(&e[1]) {
                        return Err(Error::Domain(format!(
                            "endpoints of singular edge {}-{} must be singular vertices",
                            e[0], e[1]
                        )));
                    }
                }
                (sv, se, m.alpha)
            }
        };
        let singular_edges: Vec<[usize; 2]> = edge_set.into_iter().collect();
        let mut corner_openings = BTreeMap::new();
        if dim == 2 {
            for &v in &singular_vertices {
                if let Some(info) = geo_openings.get(&GeoKey::Vertex(v)) {
                    corner_openings.insert(Feature::Corner(v), info.angle);
                }
            }
        } else {
            for (k, e) in singular_edges.iter().enumerate() {
                let info = &geo_openings[&GeoKey::Edge(*e)];
                corner_openings.insert(Feature::Edge(k), info.angle);
            }
        }
        let mut domain = Domain {
            dim,
            vertices,
            facets,
            singular_vertices,
            singular_edges,
            corner_openings,
            grading: None,
            diameter,
            facet_normals,
        };
        for (feat, a) in alpha {
            let feat = domain.normalize_feature(feat)?;
            let geo = domain.corner_openings.get(&feat).copied().ok_or_else(|| {
                Error::Domain(format!("alpha given for {feat:?}, which has no opening"))
            })?;
            if !(a > 0.0 && a < 2.0 * PI) || (a - geo).abs() > ANGLE_TOL {
                return Err(Error::Domain(format!(
                    "alpha={a} for {feat:?} does not match the geometric opening {geo}"
                )));
            }
            domain.corner_openings.insert(feat, a);
        }
        for (f, a) in &domain.corner_openings {
            if !(*a > 0.0 && *a < 2.0 * PI) {
                return Err(Error::Domain(format!("opening of {f:?} is {a}, outside (0, 2pi)")));
            }
        }
        Ok(domain)
    }

    /// Resolves an `Edge` feature given by raw vertex indices (encoded as
    /// `Feature::Edge(usize::MAX - ...)` by the parser) into an edge index.
    fn normalize_feature(&self, f: Feature) -> Result<Feature> {
        match f {
            Feature::Edge(code) if code >= EDGE_CODE_BASE => {
                let raw = code - EDGE_CODE_BASE;
                let (a, b) = (raw / EDGE_CODE_STRIDE, raw % EDGE_CODE_STRIDE);
                self.edge_index(a, b).map(Feature::Edge).ok_or_else(|| {
                    Error::Domain(format!("{a}-{b} is not a singular edge"))
                })
            }
            Feature::Corner(v) if !self.singular_vertices.contains(&v) => {
                Err(Error::Domain(format!("vertex {v} is not singular")))
            }
            other => Ok(other),
        }
    }

    pub fn edge_index(&self, a: usize, b: usize) -> Option<usize> {
        let key = [a.min(b), a.max(b)];
        self.singular_edges.binary_search(&key).ok()
    }

    pub fn diameter(&self) -> f64 {
        self.diameter
    }

    pub fn default_tol(&self) -> f64 {
        1e-12 * self.diameter
    }

    pub fn measure(&self) -> f64 {
        if self.dim == 2 {
            self.facets
                .iter()
                .map(|f| {
                    let a = &self.vertices[f.vertices[0]];
                    let b = &self.vertices[f.vertices[1]];
                    0.5 * (a[0] * b[1] - a[1] * b[0])
                })
                .sum()
        } else {
            let mut vol = 0.0;
            for f in &self.facets {
                let p0 = &self.vertices[f.vertices[0]];
                for w in f.vertices[1..].windows(2) {
                    vol += geometry::tet_volume(&[0.0; 3], p0, &self.vertices[w[0]], &self.vertices[w[1]]);
                }
            }
            vol
        }
    }

    /// Type of a point: `V` near a singular vertex, `E` near a singular edge,
    /// `S` otherwise.
    pub fn classify_point(&self, x: &Point, tol: f64) -> VertexType {
        match self.locate_feature(x, tol) {
            Some(Feature::Corner(_)) => VertexType::V,
            Some(Feature::Edge(_)) => VertexType::E,
            None => VertexType::S,
        }
    }

    /// The singular feature a point lies on, preferring vertices.
    pub fn locate_feature(&self, x: &Point, tol: f64) -> Option<Feature> {
        for &v in &self.singular_vertices {
            if geometry::dist(x, &self.vertices[v]) <= tol {
                return Some(Feature::Corner(v));
            }
        }
        for (k, e) in self.singular_edges.iter().enumerate() {
            let d = geometry::point_segment_distance(x, &self.vertices[e[0]], &self.vertices[e[1]]);
            if d <= tol {
                return Some(Feature::Edge(k));
            }
        }
        None
    }

    /// Distance to the singular set; 1 when the singular set is empty.
    pub fn singular_distance(&self, x: &Point) -> f64 {
        if self.singular_vertices.is_empty() && self.singular_edges.is_empty() {
            return 1.0;
        }
        let mut best = f64::INFINITY;
        for &v in &self.singular_vertices {
            best = best.min(geometry::dist(x, &self.vertices[v]));
        }
        for e in &self.singular_edges {
            best = best.min(geometry::point_segment_distance(x, &self.vertices[e[0]], &self.vertices[e[1]]));
        }
        best
    }

    /// `pi / alpha` for a singular corner or edge.
    pub fn corner_exponent(&self, feature: Feature) -> Result<f64> {
        let alpha = self
            .corner_openings
            .get(&feature)
            .ok_or_else(|| Error::Domain(format!("{feature:?} has no recorded opening angle")))?;
        Ok(PI / alpha)
    }

    /// Maximum opening over all singular corners/edges.
    pub fn max_opening(&self) -> Option<f64> {
        self.corner_openings.values().copied().reduce(f64::max)
    }

    /// Endpoints of a singular edge.
    pub fn edge_endpoints(&self, e: usize) -> [usize; 2] {
        self.singular_edges[e]
    }

    /// The facet that contains all `pts` (on its plane/segment and inside it).
    pub fn facet_containing(&self, pts: &[Point], tol: f64) -> Option<usize> {
        let c = geometry::centroid(pts);
        for (k, f) in self.facets.iter().enumerate() {
            if self.dim == 2 {
                let a = &self.vertices[f.vertices[0]];
                let b = &self.vertices[f.vertices[1]];
                if pts.iter().all(|p| geometry::point_segment_distance(p, a, b) <= tol) {
                    return Some(k);
                }
            } else {
                let n = &self.facet_normals[k];
                let p0 = &self.vertices[f.vertices[0]];
                if pts.iter().all(|p| geometry::dot(&geometry::sub(p, p0), n).abs() <= tol) {
                    let poly: Vec<Point> = f.vertices.iter().map(|&v| self.vertices[v]).collect();
                    if geometry::point_in_polygon(&c, &poly, n, tol) {
                        return Some(k);
                    }
                }
            }
        }
        None
    }

    /// Boundary flag of the facet containing `pts`, if they lie on the boundary.
    pub fn boundary_flag(&self, pts: &[Point], tol: f64) -> Option<BoundaryFlag> {
        self.facet_containing(pts, tol).map(|k| self.facets[k].flag)
    }

    /// Replaces every facet flag.
    pub fn with_flags(mut self, flags: &[BoundaryFlag]) -> Result<Self> {
        if flags.len() != self.facets.len() {
            return Err(Error::Domain(format!(
                "expected {} flags, got {}",
                self.facets.len(),
                flags.len()
            )));
        }
        for (f, fl) in self.facets.iter_mut().zip(flags) {
            f.flag = *fl;
        }
        Ok(self)
    }

    /// Parses the line-oriented domain description.
    pub fn parse(text: &str) -> Result<Self> {
        parse_domain(text)
    }

    /// Serializes to the text format read by [`Domain::parse`].
    pub fn to_text(&self) -> String {
        use std::fmt::Write;
        let mut s = String::new();
        s.push_str("[vertices]\n");
        for p in &self.vertices {
            if self.dim == 2 {
                let _ = writeln!(s, "{} {}", p[0], p[1]);
            } else {
                let _ = writeln!(s, "{} {} {}", p[0], p[1], p[2]);
            }
        }
        s.push_str("[facets]\n");
        for f in &self.facets {
            let ids: Vec<String> = f.vertices.iter().map(|v| v.to_string()).collect();
            let flag = if f.flag == BoundaryFlag::Dirichlet { 'D' } else { 'N' };
            let _ = writeln!(s, "{} {}", ids.join(" "), flag);
        }
        s.push_str("[singular]\n");
        for v in &self.singular_vertices {
            let _ = writeln!(s, "{v}");
        }
        for e in &self.singular_edges {
            let _ = writeln!(s, "edge {} {}", e[0], e[1]);
        }
        s
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
enum GeoKey {
    Vertex(usize),
    Edge([usize; 2]),
}

struct GeoInfo {
    angle: f64,
    flag_change: bool,
}

fn validate_polygon(vertices: &[Point], facets: &mut [Facet]) -> Result<BTreeMap<GeoKey, GeoInfo>> {
    let mut next: HashMap<usize, usize> = HashMap::new();
    let mut prev: HashMap<usize, usize> = HashMap::new();
    for (k, f) in facets.iter().enumerate() {
        let (a, b) = (f.vertices[0], f.vertices[1]);
        if a == b || geometry::dist(&vertices[a], &vertices[b]) == 0.0 {
            return Err(Error::Domain(format!("facet {k} is degenerate")));
        }
        if next.insert(a, k).is_some() || prev.insert(b, k).is_some() {
            return Err(Error::Domain(format!(
                "boundary is not a simple oriented curve at facet {k}"
            )));
        }
    }
    for &v in next.keys() {
        if !prev.contains_key(&v) {
            return Err(Error::Domain(format!("boundary not closed at vertex {v}")));
        }
    }
    for &v in prev.keys() {
        if !next.contains_key(&v) {
            return Err(Error::Domain(format!("boundary not closed at vertex {v}")));
        }
    }
    // single loop
    let start = facets[0].vertices[0];
    let mut v = start;
    let mut count = 0;
    loop {
        let k = next[&v];
        v = facets[k].vertices[1];
        count += 1;
        if v == start || count > facets.len() {
            break;
        }
    }
    if count != facets.len() {
        return Err(Error::Domain("boundary consists of more than one closed curve".into()));
    }
    let area: f64 = facets
        .iter()
        .map(|f| {
            let a = &vertices[f.vertices[0]];
            let b = &vertices[f.vertices[1]];
            0.5 * (a[0] * b[1] - a[1] * b[0])
        })
        .sum();
    if area.abs() < 1e-300 {
        return Err(Error::Domain("polygon has zero area".into()));
    }
    if area < 0.0 {
        for f in facets.iter_mut() {
            f.vertices.reverse();
        }
        return validate_polygon(vertices, facets);
    }
    // self-intersection check for non-adjacent segments
    for i in 0..facets.len() {
        for j in (i + 1)..facets.len() {
            let (a, b) = (facets[i].vertices[0], facets[i].vertices[1]);
            let (c, d) = (facets[j].vertices[0], facets[j].vertices[1]);
            if a == c || a == d || b == c || b == d {
                continue;
            }
            if segments_intersect(&vertices[a], &vertices[b], &vertices[c], &vertices[d]) {
                return Err(Error::Domain(format!("facets {i} and {j} intersect")));
            }
        }
    }
    let mut out = BTreeMap::new();
    for (&v, &k_out) in &next {
        let k_in = prev[&v];
        let p_prev = &vertices[facets[k_in].vertices[0]];
        let p = &vertices[v];
        let p_next = &vertices[facets[k_out].vertices[1]];
        let d_in = geometry::sub(p, p_prev);
        let d_out = geometry::sub(p_next, p);
        let turn = (d_in[0] * d_out[1] - d_in[1] * d_out[0]).atan2(d_in[0] * d_out[0] + d_in[1] * d_out[1]);
        out.insert(
            GeoKey::Vertex(v),
            GeoInfo { angle: PI - turn, flag_change: facets[k_in].flag != facets[k_out].flag },
        );
    }
    Ok(out)
}

fn segments_intersect(a: &Point, b: &Point, c: &Point, d: &Point) -> bool {
    let o1 = geometry::signed_area2(a, b, c);
    let o2 = geometry::signed_area2(a, b, d);
    let o3 = geometry::signed_area2(c, d, a);
    let o4 = geometry::signed_area2(c, d, b);
    (o1 * o2 < 0.0) && (o3 * o4 < 0.0)
}

fn validate_polyhedron(
    vertices: &[Point],
    facets: &mut [Facet],
    diameter: f64,
) -> Result<(BTreeMap<GeoKey, GeoInfo>, Vec<Point>)> {
    let tol = 1e-9 * diameter;
    // directed edge -> facet
    let mut directed: HashMap<(usize, usize), usize> = HashMap::new();
    for (k, f) in facets.iter().enumerate() {
        let n = f.vertices.len();
        for i in 0..n {
            let (a, b) = (f.vertices[i], f.vertices[(i + 1) % n]);
            if directed.insert((a, b), k).is_some() {
                return Err(Error::Domain(format!(
                    "edge {a}-{b} is traversed twice in the same direction (facet {k}); boundary is not orientable"
                )));
            }
        }
    }
    for (&(a, b), &k) in &directed {
        if !directed.contains_key(&(b, a)) {
            return Err(Error::Domain(format!("boundary not closed: edge {a}-{b} of facet {k} has no neighbour")));
        }
    }
    let mut normals = Vec::with_capacity(facets.len());
    for (k, f) in facets.iter().enumerate() {
        let pts: Vec<Point> = f.vertices.iter().map(|&v| vertices[v]).collect();
        let n = geometry::polygon_normal(&pts);
        if geometry::norm(&n) < 1e-14 * diameter * diameter {
            return Err(Error::Domain(format!("facet {k} is degenerate")));
        }
        let n = geometry::normalize(&n);
        for p in &pts {
            if geometry::dot(&geometry::sub(p, &pts[0]), &n).abs() > tol {
                return Err(Error::Domain(format!("facet {k} is not planar")));
            }
        }
        normals.push(n);
    }
    let mut vol = 0.0;
    for f in facets.iter() {
        let p0 = &vertices[f.vertices[0]];
        for w in f.vertices[1..].windows(2) {
            vol += geometry::tet_volume(&[0.0; 3], p0, &vertices[w[0]], &vertices[w[1]]);
        }
    }
    if vol.abs() < 1e-300 {
        return Err(Error::Domain("polyhedron has zero volume".into()));
    }
    if vol < 0.0 {
        for f in facets.iter_mut() {
            f.vertices.reverse();
        }
        return validate_polyhedron(vertices, facets, diameter);
    }
    let mut out = BTreeMap::new();
    for (&(a, b), &k1) in &directed {
        if a > b {
            continue;
        }
        let k2 = directed[&(b, a)];
        let (n1, n2) = (&normals[k1], &normals[k2]);
        let e = geometry::normalize(&geometry::sub(&vertices[b], &vertices[a]));
        // facet k2 traverses b->a; its interior lies to the left of that direction
        let d2 = geometry::cross(n2, &geometry::scale(&e, -1.0));
        let between = geometry::angle_between(n1, n2);
        let angle = if geometry::dot(&d2, n1) < -1e-12 {
            PI - between
        } else if geometry::dot(&d2, n1) > 1e-12 {
            PI + between
        } else {
            PI
        };
        out.insert(
            GeoKey::Edge([a, b]),
            GeoInfo { angle, flag_change: facets[k1].flag != facets[k2].flag },
        );
    }
    Ok((out, normals))
}

/// Parser encoding for `edge i j` references before edge indices are known.
const EDGE_CODE_BASE: usize = 1 << 60;
const EDGE_CODE_STRIDE: usize = 1 << 28;

fn edge_code(a: usize, b: usize) -> Feature {
    Feature::Edge(EDGE_CODE_BASE + a.min(b) * EDGE_CODE_STRIDE + a.max(b))
}

fn parse_domain(text: &str) -> Result<Domain> {
    #[derive(PartialEq)]
    enum Section {
        None,
        Vertices,
        Facets,
        Singular,
        Grading,
    }
    let mut section = Section::None;
    let mut vertices = Vec::new();
    let mut dim = 0usize;
    let mut facets = Vec::new();
    let mut markup: Option<SingularMarkup> = None;
    let mut grading = GradingInput::default();
    let mut has_grading = false;
    let mut kappa_raw: Vec<(usize, Feature, f64)> = Vec::new();

    for (ln, raw) in text.lines().enumerate() {
        let line_no = ln + 1;
        let line = raw.split('#').next().unwrap().trim();
        if line.is_empty() {
            continue;
        }
        if line.starts_with('[') {
            section = match line {
                "[vertices]" => Section::Vertices,
                "[facets]" => Section::Facets,
                "[singular]" => {
                    markup.get_or_insert_with(SingularMarkup::default);
                    Section::Singular
                }
                "[grading]" => {
                    has_grading = true;
                    Section::Grading
                }
                other => return Err(Error::parse(line_no, format!("unknown section {other}"))),
            };
            continue;
        }
        let toks: Vec<&str> = line.split_whitespace().collect();
        match section {
            Section::None => return Err(Error::parse(line_no, "content before the first section")),
            Section::Vertices => {
                if toks.len() != 2 && toks.len() != 3 {
                    return Err(Error::parse(line_no, "expected `x y` or `x y z`"));
                }
                if dim == 0 {
                    dim = toks.len();
                } else if dim != toks.len() {
                    return Err(Error::parse(line_no, "mixed 2D and 3D coordinates"));
                }
                let mut p = [0.0; 3];
                for (i, t) in toks.iter().enumerate() {
                    p[i] = parse_f64(t, line_no)?;
                }
                vertices.push(p);
            }
            Section::Facets => {
                let (flag_tok, ids) = toks.split_last().unwrap();
                let flag = match *flag_tok {
                    "D" => BoundaryFlag::Dirichlet,
                    "N" => BoundaryFlag::Neumann,
                    _ => return Err(Error::parse(line_no, "facet must end with flag D or N")),
                };
                let ids = ids.iter().map(|t| parse_usize(t, line_no)).collect::<Result<Vec<_>>>()?;
                if ids.len() < 2 {
                    return Err(Error::parse(line_no, "facet needs at least two vertices"));
                }
                facets.push(Facet { vertices: ids, flag });
            }
            Section::Singular => {
                let m = markup.as_mut().unwrap();
                let mut rest = &toks[..];
                let feature = if toks[0] == "edge" {
                    if toks.len() < 3 {
                        return Err(Error::parse(line_no, "expected `edge i j`"));
                    }
                    let a = parse_usize(toks[1], line_no)?;
                    let b = parse_usize(toks[2], line_no)?;
                    m.edges.push([a, b]);
                    rest = &toks[3..];
                    edge_code(a, b)
                } else {
                    let v = parse_usize(toks[0], line_no)?;
                    m.vertices.push(v);
                    rest = &rest[1..];
                    Feature::Corner(v)
                };
                for t in rest {
                    match t.strip_prefix("alpha=") {
                        Some(v) => m.alpha.push((feature, parse_f64(v, line_no)?)),
                        None => return Err(Error::parse(line_no, format!("unexpected token {t}"))),
                    }
                }
            }
            Section::Grading => {
                if toks[0] == "kappa" {
                    if toks.len() != 3 {
                        return Err(Error::parse(line_no, "expected `kappa <id> <value>`"));
                    }
                    let feat = match toks[1].split_once('-') {
                        Some((a, b)) => edge_code(parse_usize(a, line_no)?, parse_usize(b, line_no)?),
                        None => Feature::Corner(parse_usize(toks[1], line_no)?),
                    };
                    kappa_raw.push((line_no, feat, parse_f64(toks[2], line_no)?));
                    continue;
                }
                for t in &toks {
                    if let Some(v) = t.strip_prefix("m=") {
                        let m = parse_usize(v, line_no)?;
                        grading.m = Some(m as u32);
                    } else if let Some(v) = t.strip_prefix("a=") {
                        grading.a = Some(parse_f64(v, line_no)?);
                    } else {
                        return Err(Error::parse(line_no, format!("unexpected token {t}")));
                    }
                }
            }
        }
    }
    if vertices.is_empty() {
        return Err(Error::parse(0, "no [vertices] section"));
    }
    if facets.is_empty() {
        return Err(Error::parse(0, "no [facets] section"));
    }
    let mut domain = Domain::new(dim, vertices, facets, markup)?;
    if has_grading {
        for (line_no, feat, k) in kappa_raw {
            let feat = domain.normalize_feature(feat).map_err(|e| Error::parse(line_no, e.to_string()))?;
            grading.kappa.push((feat, k));
        }
        domain.grading = Some(grading);
    }
    Ok(domain)
}

fn parse_f64(t: &str, line: usize) -> Result<f64> {
    t.parse::<f64>().map_err(|_| Error::parse(line, format!("`{t}` is not a number")))
}

fn parse_usize(t: &str, line: usize) -> Result<usize> {
    t.parse::<usize>().map_err(|_| Error::parse(line, format!("`{t}` is not an index")))
}

/// Largest admissible grading ratio `min(1/2, 2^(-m/a))` for degree `m` and
/// grading strength `a`.
pub fn grading_parameter(m: u32, a: f64) -> Result<f64> {
    if m == 0 {
        return Err(Error::Grading("degree m must be at least 1".into()));
    }
    if !(a > 0.0 && a <= 0.5) {
        return Err(Error::Grading(format!("grading strength a={a} outside (0, 1/2]")));
    }
    Ok(0.5f64.min(2f64.powf(-(m as f64) / a)))
}

/// Degree, grading strengths and grading ratios for every singular feature.
#[derive(Debug, Clone)]
pub struct GradingSpec {
    pub m: u32,
    pub a: f64,
    pub kappa: f64,
    pub per_feature_a: BTreeMap<Feature, f64>,
    pub per_feature_kappa: BTreeMap<Feature, f64>,
}

impl GradingSpec {
    /// The theory-compliant spec: `kappa = grading_parameter(m, a)` everywhere.
    pub fn new(m: u32, a: f64) -> Result<Self> {
        let kappa = grading_parameter(m, a)?;
        Ok(GradingSpec {
            m,
            a,
            kappa,
            per_feature_a: BTreeMap::new(),
            per_feature_kappa: BTreeMap::new(),
        })
    }

    /// Overrides the global ratio. Any value in `(0, 1/2]` is accepted so
    /// that uniform baselines (`kappa = 1/2`) can be run; use
    /// [`GradingSpec::is_quasi_optimal`] to check the rate condition.
    pub fn with_kappa(mut self, kappa: f64) -> Result<Self> {
        check_kappa(kappa)?;
        self.kappa = kappa;
        Ok(self)
    }

    pub fn with_feature(mut self, f: Feature, a: Option<f64>, kappa: Option<f64>) -> Result<Self> {
        if let Some(a) = a {
            grading_parameter(self.m, a)?;
            self.per_feature_a.insert(f, a);
        }
        if let Some(k) = kappa {
            check_kappa(k)?;
            self.per_feature_kappa.insert(f, k);
        }
        Ok(self)
    }

    /// Builds a grading from a domain's `[grading]` section, falling back to
    /// `m`, `a` when the section omits them.
    pub fn from_input(input: &GradingInput, m: u32, a: f64) -> Result<Self> {
        let mut g = GradingSpec::new(input.m.unwrap_or(m), input.a.unwrap_or(a))?;
        for (f, k) in &input.kappa {
            g = g.with_feature(*f, None, Some(*k))?;
        }
        Ok(g)
    }

    pub fn kappa_for(&self, f: Feature) -> f64 {
        self.per_feature_kappa.get(&f).copied().unwrap_or(self.kappa)
    }

    pub fn a_for(&self, f: Feature) -> f64 {
        self.per_feature_a.get(&f).copied().unwrap_or(self.a)
    }

    /// True when every ratio satisfies `kappa <= 2^(-m/a)`.
    pub fn is_quasi_optimal(&self) -> bool {
        let bound = |a: f64| 2f64.powf(-(self.m as f64) / a) * (1.0 + 1e-14);
        self.kappa <= bound(self.a)
            && self.per_feature_kappa.iter().all(|(f, k)| *k <= bound(self.a_for(*f)))
    }
}

fn check_kappa(k: f64) -> Result<()> {
    if !(k > 0.0 && k <= 0.5) {
        return Err(Error::Grading(format!("kappa={k} outside (0, 1/2]")));
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    const LSHAPE: &str = "\
# L-shaped domain
[vertices]
0 0
1 0
1 1
-1 1
-1 -1
0 -1
[facets]
0 1 D
1 2 D
2 3 D
3 4 D
4 5 D
5 0 D
";

    #[test]
    fn lshape_reentrant_corner() {
        let d = Domain::parse(LSHAPE).unwrap();
        assert_eq!(d.singular_vertices.len(), 6);
        let a = d.corner_openings[&Feature::Corner(0)];
        assert!((a - 1.5 * PI).abs() < 1e-14);
        for v in 1..6 {
            assert!((d.corner_openings[&Feature::Corner(v)] - 0.5 * PI).abs() < 1e-14);
        }
        assert!((d.corner_exponent(Feature::Corner(0)).unwrap() - 2.0 / 3.0).abs() < 1e-15);
        assert!((d.measure() - 3.0).abs() < 1e-15);
    }

    #[test]
    fn clockwise_input_is_reoriented() {
        let text = "[vertices]\n0 0\n0 1\n1 1\n1 0\n[facets]\n0 1 D\n1 2 D\n2 3 D\n3 0 D\n";
        let d = Domain::parse(text).unwrap();
        for v in 0..4 {
            assert!((d.corner_openings[&Feature::Corner(v)] - 0.5 * PI).abs() < 1e-14);
        }
    }

    #[test]
    fn gap_in_boundary_is_rejected() {
        let text = "[vertices]\n0 0\n1 0\n1 1\n0 1\n[facets]\n0 1 D\n1 2 D\n2 3 D\n";
        let err = Domain::parse(text).unwrap_err();
        assert!(err.to_string().contains("boundary not closed"), "{err}");
    }

    #[test]
    fn parse_error_reports_line() {
        let text = "[vertices]\n0 0\n1 x\n";
        match Domain::parse(text) {
            Err(Error::Parse { line, .. }) => assert_eq!(line, 3),
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn omitted_geometric_corner_is_rejected() {
        let text = format!("{LSHAPE}[singular]\n1\n2\n3\n4\n5\n");
        let err = Domain::parse(&text).unwrap_err();
        assert!(err.to_string().contains("vertex 0"), "{err}");
    }

    #[test]
    fn alpha_override_must_match_geometry() {
        let ok = format!("{LSHAPE}[singular]\n0 alpha=4.71238898038469\n1\n2\n3\n4\n5\n");
        assert!(Domain::parse(&ok).is_ok());
        let bad = format!("{LSHAPE}[singular]\n0 alpha=4.7\n1\n2\n3\n4\n5\n");
        assert!(Domain::parse(&bad).is_err());
    }

    #[test]
    fn grading_section() {
        let text = format!("{LSHAPE}[grading]\nm=2 a=0.5\nkappa 0 0.0625\n");
        let d = Domain::parse(&text).unwrap();
        let g = GradingSpec::from_input(d.grading.as_ref().unwrap(), 1, 0.5).unwrap();
        assert_eq!(g.m, 2);
        assert_eq!(g.kappa, 1.0 / 16.0);
        assert_eq!(g.kappa_for(Feature::Corner(0)), 1.0 / 16.0);
    }

    #[test]
    fn grading_parameter_values() {
        assert_eq!(grading_parameter(1, 0.5).unwrap(), 0.25);
        assert_eq!(grading_parameter(2, 0.5).unwrap(), 1.0 / 16.0);
        assert!(grading_parameter(1, 0.6).is_err());
        assert!(grading_parameter(1, 0.0).is_err());
        // the cap at 1/2 only binds for m/a <= 1, which the hypothesis on a excludes
        assert!(grading_parameter(1, 0.5).unwrap() <= 0.5);
    }

    #[test]
    fn uniform_override_is_flagged() {
        let g = GradingSpec::new(1, 0.5).unwrap().with_kappa(0.5).unwrap();
        assert!(!g.is_quasi_optimal());
        assert!(GradingSpec::new(1, 0.5).unwrap().is_quasi_optimal());
        assert!(GradingSpec::new(1, 0.5).unwrap().with_kappa(0.6).is_err());
    }

    #[test]
    fn classify_and_distance_in_square() {
        let text = "[vertices]\n0 0\n1 0\n1 1\n0 1\n[facets]\n0 1 D\n1 2 D\n2 3 D\n3 0 D\n";
        let d = Domain::parse(text).unwrap();
        let tol = d.default_tol();
        assert_eq!(d.classify_point(&[0.0, 0.0, 0.0], tol), VertexType::V);
        assert_eq!(d.classify_point(&[0.5, 0.0, 0.0], tol), VertexType::S);
        assert!((d.singular_distance(&[0.5, 0.5, 0.0]) - 0.5f64.sqrt()).abs() < 1e-15);
    }
}
