//! Graded triangle meshes on polygons.
//!
//! Every edge is split once per level. The new point sits at ratio `kappa`
//! from the more singular endpoint, or at the midpoint when both endpoints
//! have the same type. Each triangle is then cut into four.

use std::collections::{BTreeMap, HashMap};

use crate::domain::{BoundaryFlag, Domain, Feature, GradingSpec, VertexType};
use crate::error::{Error, Result};
use crate::geometry::{self, Point};
use crate::mesh::{self, SimplicialMesh};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Triangle2 {
    pub v: [usize; 3],
    pub types: [VertexType; 3],
    pub level: usize,
}

#[derive(Debug, Clone)]
pub struct Mesh2 {
    pub points: Vec<Point>,
    /// Domain corner each point coincides with, if any.
    pub features: Vec<Option<Feature>>,
    pub triangles: Vec<Triangle2>,
    /// Boundary edges keyed by sorted vertex pair.
    pub boundary: BTreeMap<[usize; 2], BoundaryFlag>,
    pub level: usize,
}

fn edge_key(a: usize, b: usize) -> [usize; 2] {
    [a.min(b), a.max(b)]
}

/// New point on `AB`: ratio `kappa` from the more singular endpoint, the
/// midpoint if both have the same type.
pub fn split_edge(a: (&Point, VertexType), b: (&Point, VertexType), kappa: f64) -> Point {
    use std::cmp::Ordering::*;
    match a.1.cmp(&b.1) {
        Greater => geometry::lerp(a.0, b.0, kappa),
        Less => geometry::lerp(b.0, a.0, kappa),
        Equal => geometry::lerp(a.0, b.0, 0.5),
    }
}

/// Four-way split of a single triangle given as three points. `kappa_a` etc.
/// are the ratios used when the corresponding vertex is the more singular
/// endpoint of an edge. Children are `(A,C',B')`, `(C',B,A')`, `(B',A',C)`,
/// `(C',A',B')` with `C'` on AB, `B'` on AC, `A'` on BC.
pub fn refine_triangle2(p: [Point; 3], types: [VertexType; 3], kappa: [f64; 3]) -> [[Point; 3]; 4] {
    let k = |i: usize, j: usize| if types[i] >= types[j] { kappa[i] } else { kappa[j] };
    let c1 = split_edge((&p[0], types[0]), (&p[1], types[1]), k(0, 1));
    let b1 = split_edge((&p[0], types[0]), (&p[2], types[2]), k(0, 2));
    let a1 = split_edge((&p[1], types[1]), (&p[2], types[2]), k(1, 2));
    [[p[0], c1, b1], [c1, p[1], a1], [b1, a1, p[2]], [c1, a1, b1]]
}

impl Mesh2 {
    pub fn point_type(&self, v: usize) -> VertexType {
        if self.features[v].is_some() {
            VertexType::V
        } else {
            VertexType::S
        }
    }

    fn kappa_of(&self, v: usize, grading: &GradingSpec) -> f64 {
        match self.features[v] {
            Some(f) => grading.kappa_for(f),
            None => 0.5,
        }
    }

    pub fn area(&self) -> f64 {
        self.triangles
            .iter()
            .map(|t| 0.5 * geometry::signed_area2(&self.points[t.v[0]], &self.points[t.v[1]], &self.points[t.v[2]]))
            .sum()
    }

    /// Coarse mesh for a polygon: ear clipping followed by one midpoint
    /// split, so no triangle has two corner vertices.
    pub fn initial(domain: &Domain) -> Result<Mesh2> {
        if domain.dim != 2 {
            return Err(Error::Domain("2D mesh requested for a 3D domain".into()));
        }
        let ears = ear_clip(domain)?;
        let features: Vec<Option<Feature>> = (0..domain.vertices.len())
            .map(|v| domain.singular_vertices.contains(&v).then_some(Feature::Corner(v)))
            .collect();
        let mut boundary = BTreeMap::new();
        for f in &domain.facets {
            boundary.insert(edge_key(f.vertices[0], f.vertices[1]), f.flag);
        }
        let mut mesh = Mesh2 {
            points: domain.vertices.clone(),
            features,
            triangles: Vec::new(),
            boundary,
            level: 0,
        };
        mesh.triangles = ears
            .into_iter()
            .map(|v| Triangle2 { v, types: v.map(|i| mesh.point_type(i)), level: 0 })
            .collect();
        let uniform = GradingSpec::new(1, 0.5)?.with_kappa(0.5)?;
        let mut m = refine_mesh2(&mesh, &uniform)?;
        m.level = 0;
        for t in &mut m.triangles {
            t.level = 0;
        }
        Ok(m)
    }

    pub fn to_simplicial(&self) -> Result<SimplicialMesh> {
        let cells: Vec<usize> = self.triangles.iter().flat_map(|t| t.v).collect();
        let boundary = self.boundary.iter().map(|(k, f)| (mesh::face_key(k), *f)).collect();
        SimplicialMesh::new(2, self.points.clone(), cells, self.features.clone(), boundary, self.level)
    }

    /// Edge-sharing check: interior edges in two triangles, boundary edges in one.
    pub fn check(&self) -> Result<()> {
        let mut count: HashMap<[usize; 2], u32> = HashMap::new();
        for (i, t) in self.triangles.iter().enumerate() {
            let a = geometry::signed_area2(&self.points[t.v[0]], &self.points[t.v[1]], &self.points[t.v[2]]);
            if a <= 0.0 {
                return Err(Error::Element { id: i, msg: "non-positive area".into() });
            }
            if t.types.iter().filter(|&&ty| ty == VertexType::V).count() > 1 {
                return Err(Error::Element { id: i, msg: "VV edge".into() });
            }
            for j in 0..3 {
                *count.entry(edge_key(t.v[j], t.v[(j + 1) % 3])).or_insert(0) += 1;
            }
        }
        let mut bad: Vec<String> = Vec::new();
        for (e, c) in &count {
            let on_boundary = self.boundary.contains_key(e);
            if (*c == 1) != on_boundary || *c > 2 {
                bad.push(format!("{}-{} (used {c}x, boundary={on_boundary})", e[0], e[1]));
            }
        }
        for e in self.boundary.keys() {
            if !count.contains_key(e) {
                bad.push(format!("{}-{} (boundary edge not in any triangle)", e[0], e[1]));
            }
        }
        if bad.is_empty() {
            Ok(())
        } else {
            bad.sort();
            Err(Error::Conformity(format!("mismatched edges: {}", bad.join(", "))))
        }
    }
}

/// One level of graded refinement. Edges are split once, in triangle order,
/// so the result is deterministic.
pub fn refine_mesh2(mesh: &Mesh2, grading: &GradingSpec) -> Result<Mesh2> {
    let mut points = mesh.points.clone();
    let mut features = mesh.features.clone();
    let mut memo: HashMap<[usize; 2], usize> = HashMap::with_capacity(mesh.triangles.len() * 2);
    let mut boundary = BTreeMap::new();
    let mut triangles = Vec::with_capacity(mesh.triangles.len() * 4);

    let mut split = |a: usize, b: usize, points: &mut Vec<Point>, features: &mut Vec<Option<Feature>>| -> usize {
        let key = edge_key(a, b);
        if let Some(&c) = memo.get(&key) {
            return c;
        }
        let (ta, tb) = (mesh.point_type(a), mesh.point_type(b));
        let kappa = if ta >= tb { mesh.kappa_of(a, grading) } else { mesh.kappa_of(b, grading) };
        let p = split_edge((&mesh.points[a], ta), (&mesh.points[b], tb), kappa);
        points.push(p);
        features.push(None);
        let c = points.len() - 1;
        memo.insert(key, c);
        if let Some(&flag) = mesh.boundary.get(&key) {
            boundary.insert(edge_key(a, c), flag);
            boundary.insert(edge_key(c, b), flag);
        }
        c
    };

    for t in &mesh.triangles {
        let [a, b, c] = t.v;
        let c1 = split(a, b, &mut points, &mut features);
        let b1 = split(a, c, &mut points, &mut features);
        let a1 = split(b, c, &mut points, &mut features);
        for v in [[a, c1, b1], [c1, b, a1], [b1, a1, c], [c1, a1, b1]] {
            triangles.push(Triangle2 { v, types: [VertexType::S; 3], level: mesh.level + 1 });
        }
    }
    let mut out = Mesh2 { points, features, triangles, boundary, level: mesh.level + 1 };
    for t in &mut out.triangles {
        t.types = t.v.map(|i| if out.features[i].is_some() { VertexType::V } else { VertexType::S });
    }
    out.check().map_err(|e| e.context(format!("refinement to level {}", out.level)))?;
    Ok(out)
}

/// Graded sequence `T_0, ..., T_levels`.
pub fn mesh_sequence(domain: &Domain, grading: &GradingSpec, levels: usize) -> Result<Vec<Mesh2>> {
    let mut out = vec![Mesh2::initial(domain)?];
    for _ in 0..levels {
        let next = refine_mesh2(out.last().unwrap(), grading)?;
        out.push(next);
    }
    Ok(out)
}

/// Ear clipping of the boundary loop; among valid ears the one with the
/// largest minimum angle is cut first.
fn ear_clip(domain: &Domain) -> Result<Vec<[usize; 3]>> {
    let mut next: HashMap<usize, usize> = HashMap::new();
    for f in &domain.facets {
        next.insert(f.vertices[0], f.vertices[1]);
    }
    let start = domain.facets[0].vertices[0];
    let mut poly = vec![start];
    let mut v = next[&start];
    while v != start {
        poly.push(v);
        v = next[&v];
    }
    let pts = &domain.vertices;
    let eps = 1e-14 * domain.diameter() * domain.diameter();
    let mut out = Vec::new();
    while poly.len() > 3 {
        let n = poly.len();
        let mut best: Option<(usize, f64)> = None;
        for i in 0..n {
            let (p, q, r) = (poly[(i + n - 1) % n], poly[i], poly[(i + 1) % n]);
            if geometry::signed_area2(&pts[p], &pts[q], &pts[r]) <= eps {
                continue;
            }
            let blocked = poly.iter().any(|&w| {
                w != p && w != q && w != r && in_triangle_closed(&pts[w], &pts[p], &pts[q], &pts[r], eps)
            });
            if blocked {
                continue;
            }
            let ang = geometry::triangle_angles([&pts[p], &pts[q], &pts[r]]);
            let quality = ang.iter().copied().fold(f64::INFINITY, f64::min);
            if best.is_none_or(|(_, bq)| quality > bq + 1e-12) {
                best = Some((i, quality));
            }
        }
        let (i, _) = best.ok_or_else(|| Error::Domain("ear clipping failed; polygon may self-overlap".into()))?;
        out.push([poly[(i + n - 1) % n], poly[i], poly[(i + 1) % n]]);
        poly.remove(i);
    }
    if geometry::signed_area2(&pts[poly[0]], &pts[poly[1]], &pts[poly[2]]) <= eps {
        return Err(Error::Domain("ear clipping left a degenerate triangle".into()));
    }
    out.push([poly[0], poly[1], poly[2]]);
    Ok(out)
}

fn in_triangle_closed(x: &Point, a: &Point, b: &Point, c: &Point, eps: f64) -> bool {
    geometry::signed_area2(a, b, x) >= -eps
        && geometry::signed_area2(b, c, x) >= -eps
        && geometry::signed_area2(c, a, x) >= -eps
}
