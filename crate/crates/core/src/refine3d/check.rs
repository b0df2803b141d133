//! Tetrahedralization of a decomposition and its invariant checks.

use std::collections::HashMap;
use std::fmt;

use crate::domain::{Domain, VertexType};
use crate::error::{Error, Result};
use crate::geometry;
use crate::mesh::{check_conformity, face_key, ConformityReport, FaceKey, SimplicialMesh};

use super::{check_straight, Decomposition, TetKind};

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct ElementCounts {
    pub s4: usize,
    pub vs3: usize,
    pub vess: usize,
    pub prisms: usize,
}

impl ElementCounts {
    pub fn tets(&self) -> usize {
        self.s4 + self.vs3 + self.vess
    }
}

impl fmt::Display for ElementCounts {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "S4={} VS3={} VESS={} prisms={}", self.s4, self.vs3, self.vess, self.prisms)
    }
}

/// Minimum and maximum dihedral angle (radians) over one element class.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DihedralStats {
    pub min: f64,
    pub max: f64,
}

impl Default for DihedralStats {
    fn default() -> Self {
        DihedralStats { min: f64::INFINITY, max: 0.0 }
    }
}

impl DihedralStats {
    fn add(&mut self, a: f64) {
        self.min = self.min.min(a);
        self.max = self.max.max(a);
    }
}

impl Decomposition {
    /// Simplicial mesh with each prism cut into three tetrahedra along its
    /// marks. Boundary faces get the flag of the facet they lie on.
    pub fn tetrahedralize(&self, domain: &Domain) -> Result<SimplicialMesh> {
        let mut cells = Vec::with_capacity(4 * (self.tets.len() + 3 * self.prisms.len()));
        for t in &self.tets {
            cells.extend_from_slice(&t.v);
        }
        for (id, p) in self.prisms.iter().enumerate() {
            let tets = p.tetrahedra().ok_or(Error::Element { id, msg: "prism marks form a cycle".into() })?;
            for t in tets {
                cells.extend_from_slice(&t);
            }
        }
        let mut faces: HashMap<FaceKey, u8> = HashMap::with_capacity(cells.len());
        for c in cells.chunks(4) {
            for skip in 0..4 {
                let f = [c[(skip + 1) % 4], c[(skip + 2) % 4], c[(skip + 3) % 4]];
                *faces.entry(face_key(&f)).or_insert(0) += 1;
            }
        }
        let tol = 1e-9 * domain.diameter();
        let mut boundary = HashMap::new();
        for (k, n) in faces {
            if n == 1 {
                let pts = [self.points[k[0]], self.points[k[1]], self.points[k[2]]];
                if let Some(flag) = domain.boundary_flag(&pts, tol) {
                    boundary.insert(k, flag);
                }
            }
        }
        SimplicialMesh::new(3, self.points.clone(), cells, self.features.clone(), boundary, self.level)
    }
}

/// Outcome of [`check_decomposition`].
#[derive(Debug, Clone, Default)]
pub struct DecompositionReport {
    pub level: usize,
    pub counts: ElementCounts,
    pub conformity: ConformityReport,
    /// Tetrahedron edges joining two V points.
    pub vv_edges: usize,
    /// Tetrahedron edges joining two E points.
    pub ee_tet_edges: usize,
    /// E points used by a tetrahedron that is not VESS, or at a position
    /// other than the E slot.
    pub e_in_plain_tets: usize,
    /// E points that belong to no prism (counted from level 1 on, level 0
    /// has no prisms yet).
    pub e_without_prism: usize,
    pub cyclic_prisms: usize,
    pub crooked_prisms: usize,
    pub dihedral_s4: DihedralStats,
    pub dihedral_vs3: DihedralStats,
    pub dihedral_vess: DihedralStats,
    /// Range of prism axis lengths along singular edges.
    pub prism_axial: (f64, f64),
    /// Largest ratio of cross-section diameter to axial length over edge
    /// prisms.
    pub prism_aspect: (f64, f64),
}

impl DecompositionReport {
    pub fn passed(&self) -> bool {
        self.conformity.passed()
            && self.vv_edges == 0
            && self.ee_tet_edges == 0
            && self.e_in_plain_tets == 0
            && self.e_without_prism == 0
            && self.cyclic_prisms == 0
            && self.crooked_prisms == 0
    }

    pub fn into_result(self) -> Result<Self> {
        if self.passed() {
            Ok(self)
        } else {
            Err(Error::Conformity(self.to_string()))
        }
    }
}

impl fmt::Display for DecompositionReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let deg = |s: &DihedralStats| {
            if s.min.is_finite() {
                format!("[{:.3}, {:.3}]", s.min.to_degrees(), s.max.to_degrees())
            } else {
                "-".into()
            }
        };
        writeln!(f, "level {}: {}", self.level, self.counts)?;
        writeln!(f, "  conformity: {}", self.conformity)?;
        writeln!(
            f,
            "  VV edges {}, tetrahedral EE edges {}, E in plain tets {}, E outside prisms {}, cyclic prisms {}, crooked prisms {}",
            self.vv_edges, self.ee_tet_edges, self.e_in_plain_tets, self.e_without_prism, self.cyclic_prisms, self.crooked_prisms
        )?;
        writeln!(
            f,
            "  dihedral deg: S4 {} VS3 {} VESS {}",
            deg(&self.dihedral_s4),
            deg(&self.dihedral_vs3),
            deg(&self.dihedral_vess)
        )?;
        write!(
            f,
            "  prism axis [{:.4e}, {:.4e}], section/axis [{:.4}, {:.4}]",
            self.prism_axial.0, self.prism_axial.1, self.prism_aspect.0, self.prism_aspect.1
        )
    }
}

/// Runs the full invariant suite on a decomposition.
pub fn check_decomposition(d: &Decomposition, domain: &Domain) -> Result<DecompositionReport> {
    let mesh = d.tetrahedralize(domain)?;
    let mut r = DecompositionReport {
        level: d.level,
        counts: d.counts(),
        conformity: check_conformity(&mesh, domain),
        prism_axial: (f64::INFINITY, 0.0),
        prism_aspect: (f64::INFINITY, 0.0),
        ..Default::default()
    };
    let ty = |v: usize| d.point_type(v);
    let mut in_prism = vec![false; d.points.len()];
    for p in &d.prisms {
        for &v in &p.v {
            in_prism[v] = true;
        }
    }
    let mut vv = std::collections::HashSet::new();
    let mut ee = std::collections::HashSet::new();
    for t in &d.tets {
        for i in 0..4 {
            for j in (i + 1)..4 {
                let (a, b) = (t.v[i], t.v[j]);
                let key = (a.min(b), a.max(b));
                match (ty(a), ty(b)) {
                    (VertexType::V, VertexType::V) => {
                        vv.insert(key);
                    }
                    (VertexType::E, VertexType::E) => {
                        ee.insert(key);
                    }
                    _ => {}
                }
            }
        }
        let kind = t.kind();
        for (k, &v) in t.v.iter().enumerate() {
            if ty(v) == VertexType::E && !(kind == TetKind::VESS && k == 1) {
                r.e_in_plain_tets += 1;
            }
        }
        let p = t.v.map(|i| d.points[i]);
        let stats = match kind {
            TetKind::S4 => &mut r.dihedral_s4,
            TetKind::VS3 => &mut r.dihedral_vs3,
            TetKind::VESS => &mut r.dihedral_vess,
        };
        for a in geometry::dihedral_angles([&p[0], &p[1], &p[2], &p[3]]) {
            stats.add(a);
        }
    }
    r.vv_edges = vv.len();
    r.ee_tet_edges = ee.len();
    if d.level > 0 {
        r.e_without_prism = (0..d.points.len()).filter(|&v| ty(v) == VertexType::E && !in_prism[v]).count();
    }
    for p in &d.prisms {
        if p.column_order().is_none() {
            r.cyclic_prisms += 1;
        }
        let q = p.v.map(|i| d.points[i]);
        if check_straight(&q).is_err() {
            r.crooked_prisms += 1;
        }
        if p.has_edge_axis() {
            let axial = geometry::dist(&q[0], &q[3]);
            let section = geometry::dist(&q[0], &q[1]).max(geometry::dist(&q[0], &q[2])).max(geometry::dist(&q[1], &q[2]));
            r.prism_axial = (r.prism_axial.0.min(axial), r.prism_axial.1.max(axial));
            let ratio = section / axial;
            r.prism_aspect = (r.prism_aspect.0.min(ratio), r.prism_aspect.1.max(ratio));
        }
    }
    Ok(r)
}
