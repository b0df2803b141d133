//! Mesh export: VTK legacy ASCII unstructured grids and a plain text format
//! (`[points]`, `[cells]`, `[types]`) that reads back losslessly.

use std::fmt::Write as _;

use crate::error::{Error, Result};
use crate::geometry::{self, Point};
use crate::mesh::SimplicialMesh;
use crate::refine2d::Mesh2;
use crate::refine3d::{Decomposition, TetKind};

/// VTK cell type codes.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CellType {
    Triangle,
    Tetra,
    Wedge,
}

impl CellType {
    pub fn vtk_code(self) -> u8 {
        match self {
            CellType::Triangle => 5,
            CellType::Tetra => 10,
            CellType::Wedge => 13,
        }
    }

    pub fn from_vtk_code(c: u8) -> Option<Self> {
        match c {
            5 => Some(CellType::Triangle),
            10 => Some(CellType::Tetra),
            13 => Some(CellType::Wedge),
            _ => None,
        }
    }

    pub fn num_vertices(self) -> usize {
        match self {
            CellType::Triangle => 3,
            CellType::Tetra => 4,
            CellType::Wedge => 6,
        }
    }
}

/// Mixed cell mesh ready for export.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct CellMesh {
    pub points: Vec<Point>,
    pub cells: Vec<(CellType, Vec<usize>)>,
    pub point_data: Vec<(String, Vec<f64>)>,
    pub cell_data: Vec<(String, Vec<f64>)>,
}

impl CellMesh {
    pub fn from_simplicial(mesh: &SimplicialMesh) -> Self {
        let ty = if mesh.dim == 2 { CellType::Triangle } else { CellType::Tetra };
        let cells = (0..mesh.num_cells()).map(|c| (ty, mesh.cell(c).to_vec())).collect();
        CellMesh { points: mesh.points.clone(), cells, ..Default::default() }
    }

    pub fn from_mesh2(mesh: &Mesh2) -> Self {
        let cells = mesh.triangles.iter().map(|t| (CellType::Triangle, t.v.to_vec())).collect();
        CellMesh { points: mesh.points.clone(), cells, ..Default::default() }
    }

    /// Tetrahedra and wedges of a decomposition, with a `kind` cell field
    /// (0 SSSS, 1 VSSS, 2 VESS, 3 prism).
    pub fn from_decomposition(d: &Decomposition) -> Self {
        let mut cells = Vec::with_capacity(d.tets.len() + d.prisms.len());
        let mut kind = Vec::with_capacity(cells.capacity());
        for t in &d.tets {
            cells.push((CellType::Tetra, t.v.to_vec()));
            kind.push(match t.kind() {
                TetKind::S4 => 0.0,
                TetKind::VS3 => 1.0,
                TetKind::VESS => 2.0,
            });
        }
        for p in &d.prisms {
            cells.push((CellType::Wedge, p.v.to_vec()));
            kind.push(3.0);
        }
        CellMesh { points: d.points.clone(), cells, point_data: Vec::new(), cell_data: vec![("kind".into(), kind)] }
    }

    pub fn with_point_data(mut self, name: &str, values: Vec<f64>) -> Self {
        self.point_data.push((name.to_string(), values));
        self
    }

    /// Legacy VTK ASCII unstructured grid. Wedges are written with the
    /// first triangle's normal pointing away from the second.
    pub fn to_vtk(&self) -> String {
        let mut s = String::from("# vtk DataFile Version 3.0\npolygrade mesh\nASCII\nDATASET UNSTRUCTURED_GRID\n");
        let _ = writeln!(s, "POINTS {} double", self.points.len());
        for p in &self.points {
            let _ = writeln!(s, "{} {} {}", p[0], p[1], p[2]);
        }
        let size: usize = self.cells.iter().map(|c| c.1.len() + 1).sum();
        let _ = writeln!(s, "CELLS {} {}", self.cells.len(), size);
        for (ty, v) in &self.cells {
            let ids = if *ty == CellType::Wedge { self.vtk_wedge(v) } else { v.clone() };
            let strs: Vec<String> = ids.iter().map(|i| i.to_string()).collect();
            let _ = writeln!(s, "{} {}", ids.len(), strs.join(" "));
        }
        let _ = writeln!(s, "CELL_TYPES {}", self.cells.len());
        for (ty, _) in &self.cells {
            let _ = writeln!(s, "{}", ty.vtk_code());
        }
        if !self.cell_data.is_empty() {
            let _ = writeln!(s, "CELL_DATA {}", self.cells.len());
            write_fields(&mut s, &self.cell_data);
        }
        if !self.point_data.is_empty() {
            let _ = writeln!(s, "POINT_DATA {}", self.points.len());
            write_fields(&mut s, &self.point_data);
        }
        s
    }

    fn vtk_wedge(&self, v: &[usize]) -> Vec<usize> {
        let p = |i: usize| self.points[v[i]];
        let n = geometry::cross(&geometry::sub(&p(1), &p(0)), &geometry::sub(&p(2), &p(0)));
        if geometry::dot(&n, &geometry::sub(&p(3), &p(0))) > 0.0 {
            vec![v[0], v[2], v[1], v[3], v[5], v[4]]
        } else {
            v.to_vec()
        }
    }

    /// Plain text format; coordinates use shortest round-trip formatting.
    pub fn to_plain(&self) -> String {
        let mut s = String::from("[points]\n");
        for p in &self.points {
            let _ = writeln!(s, "{} {} {}", p[0], p[1], p[2]);
        }
        s.push_str("[cells]\n");
        for (_, v) in &self.cells {
            let strs: Vec<String> = v.iter().map(|i| i.to_string()).collect();
            let _ = writeln!(s, "{}", strs.join(" "));
        }
        s.push_str("[types]\n");
        for (ty, _) in &self.cells {
            let _ = writeln!(s, "{}", ty.vtk_code());
        }
        s
    }

    pub fn parse_plain(text: &str) -> Result<Self> {
        let mut section = "";
        let mut points = Vec::new();
        let mut conn: Vec<Vec<usize>> = Vec::new();
        let mut types = Vec::new();
        for (k, line) in text.lines().enumerate() {
            let ln = k + 1;
            let line = line.trim();
            if line.is_empty() {
                continue;
            }
            if line.starts_with('[') {
                section = match line {
                    "[points]" => "points",
                    "[cells]" => "cells",
                    "[types]" => "types",
                    _ => return Err(Error::parse(ln, format!("unknown section {line}"))),
                };
                continue;
            }
            match section {
                "points" => {
                    let xs: Vec<f64> = line
                        .split_whitespace()
                        .map(|t| t.parse::<f64>().map_err(|_| Error::parse(ln, format!("bad coordinate '{t}'"))))
                        .collect::<Result<_>>()?;
                    if xs.len() != 3 {
                        return Err(Error::parse(ln, "a point needs three coordinates"));
                    }
                    points.push([xs[0], xs[1], xs[2]]);
                }
                "cells" => {
                    let ids = line
                        .split_whitespace()
                        .map(|t| t.parse::<usize>().map_err(|_| Error::parse(ln, format!("bad index '{t}'"))))
                        .collect::<Result<_>>()?;
                    conn.push(ids);
                }
                "types" => {
                    let c: u8 = line.parse().map_err(|_| Error::parse(ln, format!("bad cell type '{line}'")))?;
                    types.push(CellType::from_vtk_code(c).ok_or_else(|| Error::parse(ln, format!("unsupported cell type {c}")))?);
                }
                _ => return Err(Error::parse(ln, "data before the first section")),
            }
        }
        if conn.len() != types.len() {
            return Err(Error::Mesh(format!("{} cells but {} types", conn.len(), types.len())));
        }
        let mut cells = Vec::with_capacity(conn.len());
        for (id, (v, ty)) in conn.into_iter().zip(types).enumerate() {
            if v.len() != ty.num_vertices() || v.iter().any(|&i| i >= points.len()) {
                return Err(Error::Element { id, msg: "vertex list does not match its type".into() });
            }
            cells.push((ty, v));
        }
        Ok(CellMesh { points, cells, ..Default::default() })
    }
}

fn write_fields(s: &mut String, fields: &[(String, Vec<f64>)]) {
    for (name, vals) in fields {
        let _ = writeln!(s, "SCALARS {name} double 1\nLOOKUP_TABLE default");
        for v in vals {
            let _ = writeln!(s, "{v}");
        }
    }
}

/// Export format selector.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Format {
    Vtk,
    Plain,
}

impl std::str::FromStr for Format {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "vtk" => Ok(Format::Vtk),
            "plain" => Ok(Format::Plain),
            other => Err(Error::Unsupported(format!("export format '{other}' (use vtk or plain)"))),
        }
    }
}

impl CellMesh {
    pub fn render(&self, format: Format) -> String {
        match format {
            Format::Vtk => self.to_vtk(),
            Format::Plain => self.to_plain(),
        }
    }
}
