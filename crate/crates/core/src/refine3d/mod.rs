//! Mixed tetrahedron/prism decompositions of polyhedra and their graded
//! refinement.
//!
//! Tetrahedra carry one of three type patterns: `SSSS`, `VSSS` (a domain
//! vertex at local index 0) and `VESS` (domain vertex at 0, a point on a
//! singular edge at 1). Prisms sit along singular edges: the lateral edge
//! `b0-t0` lies on the edge, the cross-section is graded towards it and the
//! axis is split uniformly. Every prism is cut into three tetrahedra when a
//! simplicial mesh is requested; the cut is fixed by the orientation of the
//! three lateral quadrilaterals ("marks").

mod check;
mod refine;
pub mod split;

use std::collections::{BTreeMap, HashMap};
use std::fmt::Write as _;

use crate::domain::{Domain, Feature, VertexType};
use crate::error::{Error, Result};
use crate::geometry::{self, Point};

pub use check::{check_decomposition, DecompositionReport, DihedralStats, ElementCounts};
pub use refine::{mesh_sequence3, refine_decomposition, refine_decomposition_with};
pub use split::UniformSplit;

/// Lateral quadrilaterals of a prism as column pairs.
pub const QUADS: [(usize, usize); 3] = [(0, 1), (1, 2), (0, 2)];

/// Type pattern of a tetrahedron.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum TetKind {
    S4,
    VS3,
    VESS,
}

impl TetKind {
    pub fn label(self) -> &'static str {
        match self {
            TetKind::S4 => "SSSS",
            TetKind::VS3 => "VSSS",
            TetKind::VESS => "VESS",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Tet4 {
    pub v: [usize; 4],
    pub types: [VertexType; 4],
    pub level: usize,
}

impl Tet4 {
    pub fn kind(&self) -> TetKind {
        match (self.types[0], self.types[1]) {
            (VertexType::V, VertexType::E) => TetKind::VESS,
            (VertexType::V, _) => TetKind::VS3,
            _ => TetKind::S4,
        }
    }
}

/// Straight triangular prism `b0 b1 b2 | t0 t1 t2` with lateral edges
/// `b_i - t_i`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Prism6 {
    pub v: [usize; 6],
    pub types: [VertexType; 6],
    /// Orientation of quad `QUADS[k] = (i, j)`: `true` means the diagonal
    /// runs from `b_i` to `t_j`, `false` from `b_j` to `t_i`.
    pub marks: [bool; 3],
    pub level: usize,
}

impl Prism6 {
    pub fn bottom(&self, i: usize) -> usize {
        self.v[i]
    }

    pub fn top(&self, i: usize) -> usize {
        self.v[3 + i]
    }

    /// True if the axis `b0-t0` lies on a singular edge.
    pub fn has_edge_axis(&self) -> bool {
        self.types[0] == VertexType::E
    }

    /// Does column `i` precede column `j` in the quad orientation?
    pub fn precedes(&self, i: usize, j: usize) -> bool {
        let k = QUADS.iter().position(|&(a, b)| (a, b) == (i.min(j), i.max(j))).expect("distinct columns");
        self.marks[k] == (i < j)
    }

    /// Columns in the total order given by the marks, or `None` if the three
    /// orientations form a cycle.
    pub fn column_order(&self) -> Option<[usize; 3]> {
        let mut cols = [0, 1, 2];
        // three elements: count predecessors
        let mut rank = [0usize; 3];
        for (i, r) in rank.iter_mut().enumerate() {
            *r = (0..3).filter(|&j| j != i && self.precedes(j, i)).count();
        }
        let mut seen = [false; 3];
        for &r in &rank {
            if seen[r] {
                return None;
            }
            seen[r] = true;
        }
        cols.sort_by_key(|&c| rank[c]);
        Some(cols)
    }

    /// The three tetrahedra `(p_b,q_b,r_b,r_t)`, `(p_b,q_b,q_t,r_t)`,
    /// `(p_b,p_t,q_t,r_t)` for the column order `p < q < r`.
    pub fn tetrahedra(&self) -> Option<[[usize; 4]; 3]> {
        let [p, q, r] = self.column_order()?;
        let (b, t) = (|i| self.bottom(i), |i| self.top(i));
        Some([[b(p), b(q), b(r), t(r)], [b(p), b(q), t(q), t(r)], [b(p), t(p), t(q), t(r)]])
    }

    /// Diagonal of quad `k` as `(bottom vertex, top vertex)`.
    pub fn diagonal(&self, k: usize) -> (usize, usize) {
        let (i, j) = QUADS[k];
        if self.marks[k] {
            (self.bottom(i), self.top(j))
        } else {
            (self.bottom(j), self.top(i))
        }
    }

    /// Sorted vertex ids of quad `k`.
    pub fn quad_key(&self, k: usize) -> [usize; 4] {
        let (i, j) = QUADS[k];
        let mut q = [self.bottom(i), self.bottom(j), self.top(i), self.top(j)];
        q.sort_unstable();
        q
    }
}

/// Orientation of quad `(i, j)` under the smallest-id rule: the diagonal
/// starts at the quad vertex with the smallest id.
pub fn default_mark(v: &[usize; 6], (i, j): (usize, usize)) -> bool {
    let cand = [(v[i], true), (v[3 + j], true), (v[j], false), (v[3 + i], false)];
    cand.iter().min_by_key(|c| c.0).map(|c| c.1).unwrap_or(true)
}

#[derive(Debug, Clone)]
pub struct Decomposition {
    pub points: Vec<Point>,
    pub features: Vec<Option<Feature>>,
    pub tets: Vec<Tet4>,
    pub prisms: Vec<Prism6>,
    pub level: usize,
    /// Endpoints of the domain's singular edges, for point typing.
    pub singular_edges: Vec<[usize; 2]>,
}

pub(crate) fn feature_type(f: Option<Feature>) -> VertexType {
    match f {
        Some(Feature::Corner(_)) => VertexType::V,
        Some(Feature::Edge(_)) => VertexType::E,
        None => VertexType::S,
    }
}

impl Decomposition {
    pub fn point_type(&self, v: usize) -> VertexType {
        feature_type(self.features[v])
    }

    /// Singular edge containing the whole segment between two points.
    pub fn common_edge(&self, a: usize, b: usize) -> Option<usize> {
        common_edge(&self.singular_edges, self.features[a], self.features[b])
    }

    pub fn counts(&self) -> ElementCounts {
        let mut c = ElementCounts { prisms: self.prisms.len(), ..Default::default() };
        for t in &self.tets {
            match t.kind() {
                TetKind::S4 => c.s4 += 1,
                TetKind::VS3 => c.vs3 += 1,
                TetKind::VESS => c.vess += 1,
            }
        }
        c
    }

    pub fn volume(&self) -> f64 {
        let p = &self.points;
        let tets: f64 = self.tets.iter().map(|t| geometry::tet_volume(&p[t.v[0]], &p[t.v[1]], &p[t.v[2]], &p[t.v[3]]).abs()).sum();
        let prisms: f64 = self.prisms.iter().map(|q| prism_volume(p, q)).sum();
        tets + prisms
    }

    /// Reads a decomposition and validates it against `domain`.
    pub fn parse(text: &str, domain: &Domain) -> Result<Self> {
        let raw = parse_raw(text)?;
        Self::from_raw(raw, domain)
    }

    fn from_raw(raw: RawDecomposition, domain: &Domain) -> Result<Self> {
        if domain.dim != 3 {
            return Err(Error::Domain("a decomposition needs a 3D domain".into()));
        }
        let tol = 1e-9 * domain.diameter();
        let features: Vec<Option<Feature>> = raw.points.iter().map(|p| domain.locate_feature(p, tol)).collect();
        let mut d = Decomposition {
            points: raw.points,
            features,
            tets: Vec::new(),
            prisms: Vec::new(),
            level: 0,
            singular_edges: domain.singular_edges.clone(),
        };
        let np = d.points.len();
        for (id, (v, letters)) in raw.tets.into_iter().enumerate() {
            let err = |msg: String| Error::Element { id, msg: format!("tetrahedron: {msg}") };
            if v.iter().any(|&i| i >= np) {
                return Err(err("unknown point".into()));
            }
            d.check_letters(&v, &letters).map_err(err)?;
            let t = d.canonical_tet(v).map_err(err)?;
            d.tets.push(t);
        }
        for (id, (v, letters, overrides)) in raw.prisms.into_iter().enumerate() {
            let err = |msg: String| Error::Element { id, msg: format!("prism: {msg}") };
            if v.iter().any(|&i| i >= np) {
                return Err(err("unknown point".into()));
            }
            d.check_letters(&v, &letters).map_err(err)?;
            let mut p = d.make_prism(v).map_err(err)?;
            for (f, dir) in overrides {
                p.marks[f] = dir == 0;
            }
            if p.column_order().is_none() {
                return Err(err("marks form a cycle".into()));
            }
            d.prisms.push(p);
        }
        d.check_mark_compatibility()?;
        d.check_edge_cover(domain)?;
        Ok(d)
    }

    fn check_letters(&self, v: &[usize], letters: &str) -> std::result::Result<(), String> {
        let given: Vec<char> = letters.chars().collect();
        if given.len() != v.len() {
            return Err(format!("expected {} type letters, got '{letters}'", v.len()));
        }
        for (k, (&i, &c)) in v.iter().zip(&given).enumerate() {
            let actual = self.point_type(i);
            if VertexType::from_letter(c) != Some(actual) {
                return Err(format!("vertex {k} (point {i}) is tagged {c} but has type {}", actual.letter()));
            }
        }
        Ok(())
    }

    /// Validates a tetrahedron and reorders it so that the most singular
    /// vertices come first.
    fn canonical_tet(&self, v: [usize; 4]) -> std::result::Result<Tet4, String> {
        let p = |i: usize| self.points[i];
        let vol = geometry::tet_volume(&p(v[0]), &p(v[1]), &p(v[2]), &p(v[3]));
        let scale = (0..4).flat_map(|i| (0..4).map(move |j| (i, j))).map(|(i, j)| geometry::dist(&p(v[i]), &p(v[j]))).fold(0.0, f64::max);
        if vol.abs() <= 1e-12 * scale.powi(3) {
            return Err("degenerate volume".into());
        }
        let types = v.map(|i| self.point_type(i));
        let nv = types.iter().filter(|&&t| t == VertexType::V).count();
        let ne = types.iter().filter(|&&t| t == VertexType::E).count();
        if nv > 1 {
            return Err("VV edge".into());
        }
        if ne > 1 {
            return Err("EE edge in a tetrahedron".into());
        }
        if ne == 1 && nv == 0 {
            return Err("type pattern ESSS is not allowed".into());
        }
        let mut order: Vec<usize> = (0..4).collect();
        order.sort_by(|&a, &b| types[b].cmp(&types[a]));
        let w = [v[order[0]], v[order[1]], v[order[2]], v[order[3]]];
        let t = Tet4 { v: w, types: w.map(|i| self.point_type(i)), level: 0 };
        if t.kind() == TetKind::VESS {
            if self.common_edge(w[0], w[1]).is_none() {
                return Err("VE edge does not lie on a singular edge".into());
            }
            let (a, b) = (p(w[0]), p(w[1]));
            let ab = geometry::sub(&a, &b);
            for c in [p(w[2]), p(w[3])] {
                let bc = geometry::sub(&c, &b);
                if geometry::dot(&ab, &bc).abs() > 1e-9 * geometry::norm(&ab) * geometry::norm(&bc) {
                    return Err("VESS tetrahedron is not right-angled at its E vertex".into());
                }
            }
        }
        Ok(t)
    }

    fn make_prism(&self, v: [usize; 6]) -> std::result::Result<Prism6, String> {
        let types = v.map(|i| self.point_type(i));
        let s = VertexType::S;
        let ess = types == [VertexType::E, s, s, VertexType::E, s, s];
        if !ess && types != [s; 6] {
            return Err("prism type pattern must be ESS|ESS with E first, or all S".into());
        }
        if ess && self.common_edge(v[0], v[3]).is_none() {
            return Err("prism axis does not lie on a singular edge".into());
        }
        check_straight(&v.map(|i| self.points[i]))?;
        let marks = QUADS.map(|q| default_mark(&v, q));
        Ok(Prism6 { v, types, marks, level: 0 })
    }

    /// A quad shared by two prisms must carry the same diagonal in both.
    fn check_mark_compatibility(&self) -> Result<()> {
        let mut seen: HashMap<[usize; 4], ((usize, usize), usize)> = HashMap::new();
        for (id, p) in self.prisms.iter().enumerate() {
            for k in 0..3 {
                let (a, b) = p.diagonal(k);
                let diag = (a.min(b), a.max(b));
                if let Some((other, oid)) = seen.insert(p.quad_key(k), (diag, id)) {
                    if other != diag {
                        return Err(Error::Element {
                            id,
                            msg: format!("prism: mark incompatible with prism {oid}"),
                        });
                    }
                }
            }
        }
        Ok(())
    }

    /// Every singular edge must be covered by VE tetrahedron edges and prism
    /// axes.
    fn check_edge_cover(&self, domain: &Domain) -> Result<()> {
        let mut segs: BTreeMap<[usize; 2], usize> = BTreeMap::new();
        for t in &self.tets {
            if t.kind() == TetKind::VESS {
                if let Some(k) = self.common_edge(t.v[0], t.v[1]) {
                    segs.insert([t.v[0].min(t.v[1]), t.v[0].max(t.v[1])], k);
                }
            }
        }
        for p in &self.prisms {
            if let Some(k) = self.common_edge(p.v[0], p.v[3]).filter(|_| p.has_edge_axis()) {
                segs.insert([p.v[0].min(p.v[3]), p.v[0].max(p.v[3])], k);
            }
        }
        let mut covered = vec![0.0; domain.singular_edges.len()];
        for (s, k) in segs {
            covered[k] += geometry::dist(&self.points[s[0]], &self.points[s[1]]);
        }
        for (k, e) in domain.singular_edges.iter().enumerate() {
            let len = geometry::dist(&domain.vertices[e[0]], &domain.vertices[e[1]]);
            if (covered[k] - len).abs() > 1e-9 * len {
                return Err(Error::Domain(format!(
                    "singular edge {}-{} is covered to length {} of {}",
                    e[0], e[1], covered[k], len
                )));
            }
        }
        Ok(())
    }

    /// Serializes to the format read by [`Decomposition::parse`]. Marks are
    /// written only where they differ from the smallest-id rule.
    pub fn to_text(&self) -> String {
        let mut s = String::from("[points]\n");
        for p in &self.points {
            let _ = writeln!(s, "{} {} {}", p[0], p[1], p[2]);
        }
        s.push_str("[tets]\n");
        for t in &self.tets {
            let letters: String = t.types.iter().map(|x| x.letter()).collect();
            let _ = writeln!(s, "{} {} {} {} {}", t.v[0], t.v[1], t.v[2], t.v[3], letters);
        }
        s.push_str("[prisms]\n");
        for p in &self.prisms {
            let letters: String = p.types.iter().map(|x| x.letter()).collect();
            let ids: Vec<String> = p.v.iter().map(|i| i.to_string()).collect();
            let _ = write!(s, "{} {}", ids.join(" "), letters);
            for (k, &q) in QUADS.iter().enumerate() {
                if p.marks[k] != default_mark(&p.v, q) {
                    let _ = write!(s, " mark {} {}", k, if p.marks[k] { 0 } else { 1 });
                }
            }
            s.push('\n');
        }
        s
    }
}

pub(crate) fn common_edge(edges: &[[usize; 2]], a: Option<Feature>, b: Option<Feature>) -> Option<usize> {
    match (a?, b?) {
        (Feature::Edge(k), Feature::Edge(l)) => (k == l).then_some(k),
        (Feature::Corner(v), Feature::Edge(k)) | (Feature::Edge(k), Feature::Corner(v)) => {
            edges[k].contains(&v).then_some(k)
        }
        (Feature::Corner(v), Feature::Corner(w)) => edges.binary_search(&[v.min(w), v.max(w)]).ok(),
    }
}

pub fn prism_volume(points: &[Point], p: &Prism6) -> f64 {
    let q = |i: usize| points[p.v[i]];
    let base = geometry::triangle_area(&q(0), &q(1), &q(2));
    let n = geometry::cross(&geometry::sub(&q(1), &q(0)), &geometry::sub(&q(2), &q(0)));
    let h = geometry::dot(&geometry::sub(&q(3), &q(0)), &n).abs() / geometry::norm(&n);
    base * h
}

/// Lateral edges must be equal vectors perpendicular to the base.
pub(crate) fn check_straight(q: &[Point; 6]) -> std::result::Result<(), String> {
    let axis = geometry::sub(&q[3], &q[0]);
    let len = geometry::norm(&axis);
    let base_scale = geometry::dist(&q[0], &q[1]).max(geometry::dist(&q[0], &q[2]));
    if len == 0.0 || base_scale == 0.0 {
        return Err("degenerate prism".into());
    }
    for i in 1..3 {
        let lat = geometry::sub(&q[3 + i], &q[i]);
        if geometry::dist(&lat, &axis) > 1e-9 * len {
            return Err("prism not straight: lateral edges differ".into());
        }
        let e = geometry::sub(&q[i], &q[0]);
        if geometry::dot(&e, &axis).abs() > 1e-9 * len * geometry::norm(&e) {
            return Err("prism not straight: lateral edge not perpendicular to the base".into());
        }
    }
    let n = geometry::cross(&geometry::sub(&q[1], &q[0]), &geometry::sub(&q[2], &q[0]));
    if geometry::norm(&n) <= 1e-12 * base_scale * base_scale {
        return Err("degenerate prism base".into());
    }
    Ok(())
}

type RawTet = ([usize; 4], String);
type RawPrism = ([usize; 6], String, Vec<(usize, usize)>);

struct RawDecomposition {
    points: Vec<Point>,
    tets: Vec<RawTet>,
    prisms: Vec<RawPrism>,
}

fn parse_raw(text: &str) -> Result<RawDecomposition> {
    #[derive(PartialEq)]
    enum Sec {
        None,
        Points,
        Tets,
        Prisms,
    }
    let mut sec = Sec::None;
    let mut raw = RawDecomposition { points: Vec::new(), tets: Vec::new(), prisms: Vec::new() };
    for (k, line) in text.lines().enumerate() {
        let ln = k + 1;
        let line = line.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        match line {
            "[points]" => {
                sec = Sec::Points;
                continue;
            }
            "[tets]" => {
                sec = Sec::Tets;
                continue;
            }
            "[prisms]" => {
                sec = Sec::Prisms;
                continue;
            }
            _ if line.starts_with('[') => return Err(Error::parse(ln, format!("unknown section {line}"))),
            _ => {}
        }
        let tok: Vec<&str> = line.split_whitespace().collect();
        let num = |t: &str| t.parse::<usize>().map_err(|_| Error::parse(ln, format!("expected an index, got '{t}'")));
        match sec {
            Sec::None => return Err(Error::parse(ln, "data before the first section")),
            Sec::Points => {
                if tok.len() != 3 {
                    return Err(Error::parse(ln, "a point needs three coordinates"));
                }
                let mut p: Point = [0.0; 3];
                for (x, t) in p.iter_mut().zip(&tok) {
                    *x = t.parse().map_err(|_| Error::parse(ln, format!("bad coordinate '{t}'")))?;
                    if !x.is_finite() {
                        return Err(Error::parse(ln, "non-finite coordinate"));
                    }
                }
                raw.points.push(p);
            }
            Sec::Tets => {
                if tok.len() != 5 {
                    return Err(Error::parse(ln, "a tetrahedron needs four ids and a type string"));
                }
                let v = [num(tok[0])?, num(tok[1])?, num(tok[2])?, num(tok[3])?];
                raw.tets.push((v, tok[4].to_string()));
            }
            Sec::Prisms => {
                if tok.len() < 7 || (tok.len() - 7) % 3 != 0 {
                    return Err(Error::parse(ln, "a prism needs six ids, a type string and optional 'mark f d' triples"));
                }
                let mut v = [0; 6];
                for (x, t) in v.iter_mut().zip(&tok) {
                    *x = num(t)?;
                }
                let mut overrides = Vec::new();
                for m in tok[7..].chunks(3) {
                    if m[0] != "mark" {
                        return Err(Error::parse(ln, format!("expected 'mark', got '{}'", m[0])));
                    }
                    let (f, d) = (num(m[1])?, num(m[2])?);
                    if f > 2 || d > 1 {
                        return Err(Error::parse(ln, "mark face must be 0..2 and direction 0 or 1"));
                    }
                    overrides.push((f, d));
                }
                raw.prisms.push((v, tok[6].to_string(), overrides));
            }
        }
    }
    Ok(raw)
}
