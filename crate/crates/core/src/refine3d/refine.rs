//! One refinement step of a decomposition.
//!
//! Points created on shared edges and shared quadrilaterals are memoized,
//! so neighbours see the same vertex ids. Ids are assigned in traversal
//! order: tetrahedra first, then prisms, each in storage order.

use std::collections::HashMap;

use crate::domain::{Feature, GradingSpec, VertexType};
use crate::error::{Error, Result};
use crate::geometry::{self, Point};
use crate::refine2d::split_edge;

use super::split::{vess, UniformSplit, SECTION_CHILDREN, SECTION_EDGES, TET_EDGES};
use super::{common_edge, default_mark, feature_type, Decomposition, Prism6, Tet4, TetKind, QUADS};

struct Refiner<'a> {
    old: &'a Decomposition,
    grading: &'a GradingSpec,
    points: Vec<Point>,
    features: Vec<Option<Feature>>,
    edges: HashMap<(usize, usize), usize>,
    quads: HashMap<[usize; 4], usize>,
}

impl Refiner<'_> {
    fn kappa(&self, v: usize) -> f64 {
        self.features[v].map_or(0.5, |f| self.grading.kappa_for(f))
    }

    fn ty(&self, v: usize) -> VertexType {
        feature_type(self.features[v])
    }

    fn push(&mut self, p: Point, f: Option<Feature>) -> usize {
        self.points.push(p);
        self.features.push(f);
        self.points.len() - 1
    }

    /// Division point of edge `a-b`.
    fn split(&mut self, a: usize, b: usize) -> usize {
        let key = (a.min(b), a.max(b));
        if let Some(&v) = self.edges.get(&key) {
            return v;
        }
        let (ta, tb) = (self.ty(a), self.ty(b));
        let k = if ta >= tb { self.kappa(a) } else { self.kappa(b) };
        let p = split_edge((&self.points[a], ta), (&self.points[b], tb), k);
        let f = common_edge(&self.old.singular_edges, self.features[a], self.features[b]).map(Feature::Edge);
        let v = self.push(p, f);
        self.edges.insert(key, v);
        v
    }

    /// Centre of a quadrilateral whose bottom and top division points are
    /// `lo` and `hi`.
    fn quad_center(&mut self, key: [usize; 4], lo: usize, hi: usize) -> usize {
        if let Some(&v) = self.quads.get(&key) {
            return v;
        }
        let p = geometry::lerp(&self.points[lo], &self.points[hi], 0.5);
        let v = self.push(p, None);
        self.quads.insert(key, v);
        v
    }

    fn tet(&self, v: [usize; 4], level: usize) -> Tet4 {
        Tet4 { v, types: v.map(|i| self.ty(i)), level }
    }

    fn prism(&self, v: [usize; 6], marks: [bool; 3], level: usize) -> Prism6 {
        Prism6 { v, types: v.map(|i| self.ty(i)), marks, level }
    }

    fn refine_uniform(&mut self, t: &Tet4, pattern: UniformSplit, out: &mut Vec<Tet4>) {
        let mut l = Vec::with_capacity(11);
        l.extend_from_slice(&t.v);
        for &(i, j) in &TET_EDGES {
            l.push(self.split(t.v[i], t.v[j]));
        }
        if pattern == UniformSplit::Twelve {
            let g = geometry::centroid(&l[4..10].iter().map(|&i| self.points[i]).collect::<Vec<_>>());
            l.push(self.push(g, None));
        }
        for c in pattern.children() {
            out.push(self.tet(c.map(|i| l[i]), t.level + 1));
        }
    }

    fn refine_vess(&mut self, id: usize, t: &Tet4, tets: &mut Vec<Tet4>, prisms: &mut Vec<Prism6>) -> Result<()> {
        let [a, b, c, d] = t.v;
        let (ka, kb) = (self.kappa(a), self.kappa(b));
        if ka != kb {
            return Err(Error::Grading(format!(
                "VESS tetrahedron {id}: kappa {ka} at its vertex differs from kappa {kb} on its edge"
            )));
        }
        let l = [a, b, c, d, self.split(a, b), self.split(a, c), self.split(a, d), self.split(b, c), self.split(b, d), self.split(c, d)];
        let level = t.level + 1;
        tets.push(self.tet(vess::CORNER.map(|i| l[i]), level));
        let v = vess::PRISM.map(|i| l[i]);
        let mut marks = QUADS.map(|q| default_mark(&v, q));
        let mut prism = self.prism(v, marks, level);
        if prism.column_order().is_none() {
            // only the interior quad (1, 2) is free to flip
            marks[1] = !marks[1];
            prism = self.prism(v, marks, level);
        }
        for ct in &vess::CORNER_TETS {
            tets.push(self.tet(ct.map(|i| l[i]), level));
        }
        let pyramid = if prism.precedes(1, 2) { &vess::PYRAMID_1_2 } else { &vess::PYRAMID_2_1 };
        for pt in pyramid {
            tets.push(self.tet(pt.map(|i| l[i]), level));
        }
        prisms.push(prism);
        Ok(())
    }

    fn refine_prism(&mut self, p: &Prism6, out: &mut Vec<Prism6>) -> Result<()> {
        let order = p.column_order().ok_or_else(|| Error::Mesh("prism marks form a cycle".into()))?;
        let mut rank = [0usize; 6];
        for (k, &c) in order.iter().enumerate() {
            rank[c] = 2 * k;
        }
        for (s, &(i, j)) in SECTION_EDGES.iter().enumerate() {
            rank[3 + s] = (rank[i] + rank[j]) / 2;
        }
        let mut bottom = [0usize; 6];
        let mut top = [0usize; 6];
        let mut mid = [0usize; 6];
        for i in 0..3 {
            bottom[i] = p.bottom(i);
            top[i] = p.top(i);
        }
        for (s, &(i, j)) in SECTION_EDGES.iter().enumerate() {
            bottom[3 + s] = self.split(p.bottom(i), p.bottom(j));
            top[3 + s] = self.split(p.top(i), p.top(j));
        }
        for i in 0..3 {
            mid[i] = self.split(p.bottom(i), p.top(i));
        }
        for (s, &(i, j)) in SECTION_EDGES.iter().enumerate() {
            let k = QUADS.iter().position(|&q| q == (i, j)).expect("section edges are quads");
            mid[3 + s] = if self.ty(p.bottom(i)) == VertexType::S && self.ty(p.bottom(j)) == VertexType::S {
                let (u, w) = p.diagonal(k);
                self.split(u, w)
            } else {
                self.quad_center(p.quad_key(k), bottom[3 + s], top[3 + s])
            };
        }
        for (lo, hi) in [(&bottom, &mid), (&mid, &top)] {
            for c in &SECTION_CHILDREN {
                let v = [lo[c[0]], lo[c[1]], lo[c[2]], hi[c[0]], hi[c[1]], hi[c[2]]];
                let marks = QUADS.map(|(i, j)| rank[c[i]] < rank[c[j]]);
                out.push(self.prism(v, marks, p.level + 1));
            }
        }
        Ok(())
    }
}

/// One refinement step with the default uniform pattern.
pub fn refine_decomposition(d: &Decomposition, grading: &GradingSpec) -> Result<Decomposition> {
    refine_decomposition_with(d, grading, UniformSplit::Bey)
}

pub fn refine_decomposition_with(d: &Decomposition, grading: &GradingSpec, pattern: UniformSplit) -> Result<Decomposition> {
    let mut r = Refiner {
        old: d,
        grading,
        points: d.points.clone(),
        features: d.features.clone(),
        edges: HashMap::with_capacity(d.tets.len() * 2 + d.prisms.len() * 4),
        quads: HashMap::new(),
    };
    let mut tets = Vec::with_capacity(d.tets.len() * 8);
    let mut prisms = Vec::with_capacity(d.prisms.len() * 8);
    for (id, t) in d.tets.iter().enumerate() {
        match t.kind() {
            TetKind::S4 | TetKind::VS3 => r.refine_uniform(t, pattern, &mut tets),
            TetKind::VESS => r.refine_vess(id, t, &mut tets, &mut prisms)?,
        }
    }
    for p in &d.prisms {
        r.refine_prism(p, &mut prisms)?;
    }
    Ok(Decomposition {
        points: r.points,
        features: r.features,
        tets,
        prisms,
        level: d.level + 1,
        singular_edges: d.singular_edges.clone(),
    })
}

/// Decompositions `T'_0 .. T'_levels`.
pub fn mesh_sequence3(d0: &Decomposition, grading: &GradingSpec, levels: usize) -> Result<Vec<Decomposition>> {
    let mut out = vec![d0.clone()];
    for _ in 0..levels {
        let next = refine_decomposition(out.last().expect("nonempty"), grading)?;
        out.push(next);
    }
    Ok(out)
}
