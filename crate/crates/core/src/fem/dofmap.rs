//! Global numbering of Lagrange nodes.
//!
//! Vertex nodes come first and reuse the mesh point ids. Edge nodes follow,
//! `m - 1` per edge, numbered from the lower to the higher global vertex so
//! that both neighbouring cells agree. Face and interior nodes come last.

use std::collections::HashMap;

use crate::domain::BoundaryFlag;
use crate::error::Result;
use crate::fem::basis::{LagrangeBasis, NodeKind, EDGES_2D, EDGES_3D};
use crate::geometry::Point;
use crate::mesh::{face_key, SimplicialMesh};

#[derive(Debug, Clone)]
pub struct DofMap {
    pub m: usize,
    pub basis: LagrangeBasis,
    pub n_dofs: usize,
    /// Flat, `basis.len()` global indices per cell.
    pub cell_dofs: Vec<usize>,
    pub dirichlet: Vec<bool>,
    pub coords: Vec<Point>,
}

impl DofMap {
    pub fn new(mesh: &SimplicialMesh, m: usize) -> Result<Self> {
        let basis = LagrangeBasis::new(m, mesh.dim)?;
        let nl = basis.len();
        let nc = mesh.num_cells();
        let edges: &[(usize, usize)] = if mesh.dim == 2 { &EDGES_2D } else { &EDGES_3D };
        let mut next = mesh.points.len();
        let mut edge_base: HashMap<[usize; 2], usize> = HashMap::new();
        let mut face_base: HashMap<[usize; 3], usize> = HashMap::new();
        let mut cell_dofs = vec![usize::MAX; nc * nl];
        for c in 0..nc {
            let cv = mesh.cell(c);
            let out = &mut cell_dofs[c * nl..(c + 1) * nl];
            for (k, kind) in basis.kinds.iter().enumerate() {
                out[k] = match *kind {
                    NodeKind::Vertex(i) => cv[i],
                    NodeKind::Edge(e, pos) => {
                        let (i, j) = edges[e];
                        let (gi, gj) = (cv[i], cv[j]);
                        let key = [gi.min(gj), gi.max(gj)];
                        let base = *edge_base.entry(key).or_insert_with(|| {
                            let b = next;
                            next += m - 1;
                            b
                        });
                        // position counted from the higher-id endpoint's side
                        let offset = if gi < gj { pos - 1 } else { m - 1 - pos };
                        base + offset
                    }
                    NodeKind::Face(opp) => {
                        let ids: Vec<usize> = (0..4).filter(|&i| i != opp).map(|i| cv[i]).collect();
                        *face_base.entry(face_key(&ids)).or_insert_with(|| {
                            next += 1;
                            next - 1
                        })
                    }
                    NodeKind::Interior => {
                        next += 1;
                        next - 1
                    }
                };
            }
        }
        let n_dofs = next;
        let mut coords = vec![[f64::NAN; 3]; n_dofs];
        coords[..mesh.points.len()].copy_from_slice(&mesh.points);
        let mut dirichlet = vec![false; n_dofs];
        let nb = mesh.dim + 1;
        for c in 0..nc {
            let pts = mesh.cell_points(c);
            let dofs = &cell_dofs[c * nl..(c + 1) * nl];
            for k in 0..nl {
                let a = basis.nodes[k];
                let mut x = [0.0; 3];
                for (i, p) in pts.iter().enumerate() {
                    let w = a[i] as f64 / m as f64;
                    for d in 0..3 {
                        x[d] += w * p[d];
                    }
                }
                coords[dofs[k]] = x;
            }
            let cv = mesh.cell(c);
            for opp in 0..nb {
                let ids: Vec<usize> = (0..nb).filter(|&i| i != opp).map(|i| cv[i]).collect();
                if mesh.boundary.get(&face_key(&ids)) == Some(&BoundaryFlag::Dirichlet) {
                    for k in 0..nl {
                        if basis.nodes[k][opp] == 0 {
                            dirichlet[dofs[k]] = true;
                        }
                    }
                }
            }
        }
        Ok(DofMap { m, basis, n_dofs, cell_dofs, dirichlet, coords })
    }

    #[inline]
    pub fn local(&self, c: usize) -> &[usize] {
        let nl = self.basis.len();
        &self.cell_dofs[c * nl..(c + 1) * nl]
    }

    pub fn n_local(&self) -> usize {
        self.basis.len()
    }

    pub fn n_free(&self) -> usize {
        self.dirichlet.iter().filter(|&&d| !d).count()
    }
}
