//! Conforming triangle and tetrahedron meshes, plus the face-hashing
//! conformity check shared by the 2D and 3D refinement pipelines.

use std::collections::HashMap;
use std::fmt;

use crate::domain::{BoundaryFlag, Domain, Feature, VertexType};
use crate::error::{Error, Result};
use crate::geometry::{self, Point};

/// Sorted vertex ids of a boundary face; 2D edges pad with `usize::MAX`.
pub type FaceKey = [usize; 3];

pub fn face_key(ids: &[usize]) -> FaceKey {
    let mut k = [usize::MAX; 3];
    k[..ids.len()].copy_from_slice(ids);
    k.sort_unstable();
    k
}

#[derive(Debug, Clone)]
pub struct SimplicialMesh {
    pub dim: usize,
    pub points: Vec<Point>,
    /// Flat connectivity, `dim + 1` ids per cell, positively oriented.
    pub cells: Vec<usize>,
    /// Singular feature each point lies on (`Corner` for V, `Edge` for E).
    pub features: Vec<Option<Feature>>,
    pub boundary: HashMap<FaceKey, BoundaryFlag>,
    pub level: usize,
}

impl SimplicialMesh {
    /// Builds a mesh, reorienting cells to positive measure and rejecting
    /// degenerate ones.
    pub fn new(
        dim: usize,
        points: Vec<Point>,
        mut cells: Vec<usize>,
        features: Vec<Option<Feature>>,
        boundary: HashMap<FaceKey, BoundaryFlag>,
        level: usize,
    ) -> Result<Self> {
        let nv = dim + 1;
        if cells.len() % nv != 0 {
            return Err(Error::Mesh("cell array length is not a multiple of dim + 1".into()));
        }
        if features.len() != points.len() {
            return Err(Error::Mesh("feature list length differs from point count".into()));
        }
        for (id, c) in cells.chunks_mut(nv).enumerate() {
            if c.iter().any(|&v| v >= points.len()) {
                return Err(Error::Element { id, msg: "references an unknown point".into() });
            }
            let m = signed_measure(dim, &points, c);
            if m == 0.0 || !m.is_finite() {
                return Err(Error::Element { id, msg: "degenerate cell".into() });
            }
            if m < 0.0 {
                c.swap(0, 1);
            }
        }
        Ok(SimplicialMesh { dim, points, cells, features, boundary, level })
    }

    #[inline]
    pub fn nv(&self) -> usize {
        self.dim + 1
    }

    pub fn num_cells(&self) -> usize {
        self.cells.len() / self.nv()
    }

    #[inline]
    pub fn cell(&self, i: usize) -> &[usize] {
        let nv = self.nv();
        &self.cells[i * nv..(i + 1) * nv]
    }

    pub fn cell_points(&self, i: usize) -> Vec<Point> {
        self.cell(i).iter().map(|&v| self.points[v]).collect()
    }

    pub fn cell_measure(&self, i: usize) -> f64 {
        signed_measure(self.dim, &self.points, self.cell(i))
    }

    pub fn total_measure(&self) -> f64 {
        (0..self.num_cells()).map(|i| self.cell_measure(i)).sum()
    }

    pub fn point_type(&self, v: usize) -> VertexType {
        match self.features[v] {
            Some(Feature::Corner(_)) => VertexType::V,
            Some(Feature::Edge(_)) => VertexType::E,
            None => VertexType::S,
        }
    }

    /// True when some vertex of cell `i` lies on the singular set.
    pub fn touches_singular(&self, i: usize) -> bool {
        self.cell(i).iter().any(|&v| self.features[v].is_some())
    }

    /// Shortest edge over the whole mesh.
    pub fn h_min(&self) -> f64 {
        let mut h = f64::INFINITY;
        for i in 0..self.num_cells() {
            let c = self.cell(i);
            for a in 0..c.len() {
                for b in (a + 1)..c.len() {
                    h = h.min(geometry::dist(&self.points[c[a]], &self.points[c[b]]));
                }
            }
        }
        h
    }

    pub fn h_max(&self) -> f64 {
        let mut h: f64 = 0.0;
        for i in 0..self.num_cells() {
            let c = self.cell(i);
            for a in 0..c.len() {
                for b in (a + 1)..c.len() {
                    h = h.max(geometry::dist(&self.points[c[a]], &self.points[c[b]]));
                }
            }
        }
        h
    }

    /// Sorted list of distinct edges.
    pub fn edges(&self) -> Vec<[usize; 2]> {
        let mut out = Vec::with_capacity(self.cells.len() * 2);
        for i in 0..self.num_cells() {
            let c = self.cell(i);
            for a in 0..c.len() {
                for b in (a + 1)..c.len() {
                    out.push([c[a].min(c[b]), c[a].max(c[b])]);
                }
            }
        }
        out.sort_unstable();
        out.dedup();
        out
    }

    /// Distance from singular vertex `v` to the closest other vertex joined
    /// to it by a mesh edge.
    pub fn nearest_neighbour_distance(&self, v: usize) -> f64 {
        let mut d = f64::INFINITY;
        for i in 0..self.num_cells() {
            let c = self.cell(i);
            if c.contains(&v) {
                for &w in c {
                    if w != v {
                        d = d.min(geometry::dist(&self.points[v], &self.points[w]));
                    }
                }
            }
        }
        d
    }
}

pub fn signed_measure(dim: usize, points: &[Point], c: &[usize]) -> f64 {
    if dim == 2 {
        0.5 * geometry::signed_area2(&points[c[0]], &points[c[1]], &points[c[2]])
    } else {
        geometry::tet_volume(&points[c[0]], &points[c[1]], &points[c[2]], &points[c[3]])
    }
}

/// Outcome of [`check_conformity`].
#[derive(Debug, Clone, Default)]
pub struct ConformityReport {
    pub cells: usize,
    /// Faces used by exactly one cell that do not lie on the domain boundary.
    pub unmatched_faces: Vec<FaceKey>,
    /// Faces used by three or more cells.
    pub overshared_faces: Vec<FaceKey>,
    /// Boundary faces of the mesh missing a boundary flag.
    pub unflagged_boundary: usize,
    pub nonpositive_cells: Vec<usize>,
    pub measure: f64,
    pub domain_measure: f64,
    /// Minimum and maximum angle (triangle angles in 2D, dihedral angles in
    /// 3D), in radians.
    pub min_angle: f64,
    pub max_angle: f64,
}

impl ConformityReport {
    pub fn passed(&self) -> bool {
        self.unmatched_faces.is_empty()
            && self.overshared_faces.is_empty()
            && self.nonpositive_cells.is_empty()
            && self.unflagged_boundary == 0
            && self.measure_error() <= 1e-10
    }

    pub fn measure_error(&self) -> f64 {
        (self.measure - self.domain_measure).abs() / self.domain_measure.abs().max(f64::MIN_POSITIVE)
    }

    pub fn into_result(self) -> Result<Self> {
        if self.passed() {
            Ok(self)
        } else {
            Err(Error::Conformity(self.to_string()))
        }
    }
}

impl fmt::Display for ConformityReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "{} cells, {} unmatched faces, {} overshared faces, {} unflagged boundary faces, {} non-positive cells, measure error {:.3e}, angles [{:.4}, {:.4}] deg",
            self.cells,
            self.unmatched_faces.len(),
            self.overshared_faces.len(),
            self.unflagged_boundary,
            self.nonpositive_cells.len(),
            self.measure_error(),
            self.min_angle.to_degrees(),
            self.max_angle.to_degrees()
        )?;
        for face in self.unmatched_faces.iter().take(8) {
            write!(f, "; unmatched {}", fmt_face(face))?;
        }
        for face in self.overshared_faces.iter().take(8) {
            write!(f, "; overshared {}", fmt_face(face))?;
        }
        Ok(())
    }
}

fn fmt_face(k: &FaceKey) -> String {
    let ids: Vec<String> = k.iter().filter(|&&v| v != usize::MAX).map(|v| v.to_string()).collect();
    format!("({})", ids.join(","))
}

/// Each face must be shared by two cells, or by one cell and lie on a domain
/// facet. Also checks orientation, measure partition and angle range.
pub fn check_conformity(mesh: &SimplicialMesh, domain: &Domain) -> ConformityReport {
    let nv = mesh.nv();
    let mut faces: HashMap<FaceKey, u32> = HashMap::with_capacity(mesh.cells.len());
    let mut report = ConformityReport {
        cells: mesh.num_cells(),
        domain_measure: domain.measure(),
        min_angle: f64::INFINITY,
        max_angle: 0.0,
        ..Default::default()
    };
    for i in 0..mesh.num_cells() {
        let c = mesh.cell(i);
        let m = mesh.cell_measure(i);
        if m <= 0.0 {
            report.nonpositive_cells.push(i);
        }
        report.measure += m;
        for skip in 0..nv {
            let ids: Vec<usize> = (0..nv).filter(|&j| j != skip).map(|j| c[j]).collect();
            *faces.entry(face_key(&ids)).or_insert(0) += 1;
        }
        let p = mesh.cell_points(i);
        let angles: Vec<f64> = if mesh.dim == 2 {
            geometry::triangle_angles([&p[0], &p[1], &p[2]]).to_vec()
        } else {
            geometry::dihedral_angles([&p[0], &p[1], &p[2], &p[3]]).to_vec()
        };
        for a in angles {
            report.min_angle = report.min_angle.min(a);
            report.max_angle = report.max_angle.max(a);
        }
    }
    let tol = 1e-9 * domain.diameter();
    let mut keys: Vec<(&FaceKey, &u32)> = faces.iter().collect();
    keys.sort_unstable();
    for (k, &count) in keys {
        if count > 2 {
            report.overshared_faces.push(*k);
        } else if count == 1 {
            let ids: Vec<usize> = k.iter().copied().filter(|&v| v != usize::MAX).collect();
            let pts: Vec<Point> = ids.iter().map(|&v| mesh.points[v]).collect();
            if domain.facet_containing(&pts, tol).is_none() {
                report.unmatched_faces.push(*k);
            } else if !mesh.boundary.contains_key(k) {
                report.unflagged_boundary += 1;
            }
        }
    }
    report
}
