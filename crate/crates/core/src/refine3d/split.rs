//! Child patterns of the 3D element splits, as index tables over a local
//! point list, plus geometric versions working on coordinates alone.
//!
//! Local tetrahedron points are `a b c d ab ac ad bc bd cd` (indices 0..9)
//! and, for the twelve-way split, the cone point at index 10.

use crate::geometry::{self, Point};

/// Pattern for S4 and VS3 tetrahedra.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum UniformSplit {
    /// Eight children: four corners and the octahedron cut along the
    /// `ac-bd` diagonal. Shape classes stay bounded under repetition.
    #[default]
    Bey,
    /// Twelve children: four corners and a cone from the centroid of the six
    /// division points over the eight octahedron faces.
    Twelve,
}

/// Local edges in the order of the division points 4..9.
pub const TET_EDGES: [(usize, usize); 6] = [(0, 1), (0, 2), (0, 3), (1, 2), (1, 3), (2, 3)];

pub const BEY_CHILDREN: [[usize; 4]; 8] = [
    [0, 4, 5, 6],
    [4, 1, 7, 8],
    [5, 7, 2, 9],
    [6, 8, 9, 3],
    [4, 5, 6, 8],
    [4, 5, 7, 8],
    [5, 6, 8, 9],
    [5, 7, 8, 9],
];

pub const TWELVE_CHILDREN: [[usize; 4]; 12] = [
    [0, 4, 5, 6],
    [4, 1, 7, 8],
    [5, 7, 2, 9],
    [6, 8, 9, 3],
    [10, 4, 5, 6],
    [10, 4, 7, 8],
    [10, 5, 7, 9],
    [10, 6, 8, 9],
    [10, 4, 5, 7],
    [10, 4, 6, 8],
    [10, 5, 6, 9],
    [10, 7, 8, 9],
];

impl UniformSplit {
    pub fn children(self) -> &'static [[usize; 4]] {
        match self {
            UniformSplit::Bey => &BEY_CHILDREN,
            UniformSplit::Twelve => &TWELVE_CHILDREN,
        }
    }
}

/// Local points of a VESS tetrahedron `A B C D`:
/// `A B C D P_AB P_AC P_AD P_BC P_BD M_CD`.
pub mod vess {
    pub const CORNER: [usize; 4] = [0, 4, 5, 6];
    /// Bottom `P_AB P_AC P_AD`, top `B P_BC P_BD`.
    pub const PRISM: [usize; 6] = [4, 5, 6, 1, 7, 8];
    pub const CORNER_TETS: [[usize; 4]; 2] = [[2, 5, 7, 9], [3, 6, 8, 9]];
    /// Pyramid over `P_AC P_BC P_BD P_AD` with apex `M_CD`, split along
    /// `P_AC-P_BD` (prism column 1 before 2) or `P_AD-P_BC`.
    pub const PYRAMID_1_2: [[usize; 4]; 2] = [[9, 5, 7, 8], [9, 5, 8, 6]];
    pub const PYRAMID_2_1: [[usize; 4]; 2] = [[9, 6, 5, 7], [9, 6, 7, 8]];
}

/// Cross-section nodes of a prism: columns 0, 1, 2 followed by the points
/// on the base edges `01`, `02`, `12`.
pub const SECTION_EDGES: [(usize, usize); 3] = [(0, 1), (0, 2), (1, 2)];
pub const SECTION_CHILDREN: [[usize; 3]; 4] = [[0, 3, 4], [3, 1, 5], [4, 5, 2], [3, 5, 4]];

/// Point on `a-b` at ratio `t` from `a`.
fn at(a: &Point, b: &Point, t: f64) -> Point {
    geometry::lerp(a, b, t)
}

/// Division points of a tetrahedron whose edges through vertex 0 are split
/// at ratio `k0` from vertex 0 and all other edges at the midpoint.
pub fn tet_local_points(p: &[Point; 4], k0: f64) -> Vec<Point> {
    let mut out = p.to_vec();
    for &(i, j) in &TET_EDGES {
        let t = if i == 0 { k0 } else { 0.5 };
        out.push(at(&p[i], &p[j], t));
    }
    out.push(geometry::centroid(&out[4..10]));
    out
}

/// Children of a tetrahedron; `k0 = 1/2` is the uniform split, `k0 < 1/2`
/// grades towards vertex 0.
pub fn split_tet(p: &[Point; 4], k0: f64, pattern: UniformSplit) -> Vec<[Point; 4]> {
    let l = tet_local_points(p, k0);
    pattern.children().iter().map(|c| c.map(|i| l[i])).collect()
}

/// Geometric VESS split: `(corner, prism, tetrahedra)` with the pyramid cut
/// along `P_AC-P_BD`.
pub fn split_vess(p: &[Point; 4], kappa: f64) -> ([Point; 4], [Point; 6], Vec<[Point; 4]>) {
    let l = vess_local_points(p, kappa);
    let tets = vess::CORNER_TETS.iter().chain(vess::PYRAMID_1_2.iter()).map(|c| c.map(|i| l[i])).collect();
    (vess::CORNER.map(|i| l[i]), vess::PRISM.map(|i| l[i]), tets)
}

pub fn vess_local_points(p: &[Point; 4], kappa: f64) -> Vec<Point> {
    let mut l = p.to_vec();
    l.push(at(&p[0], &p[1], kappa));
    l.push(at(&p[0], &p[2], kappa));
    l.push(at(&p[0], &p[3], kappa));
    l.push(at(&p[1], &p[2], kappa));
    l.push(at(&p[1], &p[3], kappa));
    l.push(at(&p[2], &p[3], 0.5));
    l
}

/// Geometric prism split. With `edge_axis` the base edges at column 0 are
/// split at ratio `kappa` from it; all other splits are midpoints.
pub fn split_prism(q: &[Point; 6], kappa: f64, edge_axis: bool) -> Vec<[Point; 6]> {
    let section = |base: [Point; 3]| -> [Point; 6] {
        let mut s = [[0.0; 3]; 6];
        s[..3].copy_from_slice(&base);
        for (k, &(i, j)) in SECTION_EDGES.iter().enumerate() {
            let t = if i == 0 && edge_axis { kappa } else { 0.5 };
            s[3 + k] = at(&base[i], &base[j], t);
        }
        s
    };
    let bottom = section([q[0], q[1], q[2]]);
    let top = section([q[3], q[4], q[5]]);
    let mid: Vec<Point> = (0..6).map(|i| at(&bottom[i], &top[i], 0.5)).collect();
    let mut out = Vec::with_capacity(8);
    for (lo, hi) in [(&bottom[..], &mid[..]), (&mid[..], &top[..])] {
        for c in &SECTION_CHILDREN {
            out.push([lo[c[0]], lo[c[1]], lo[c[2]], hi[c[0]], hi[c[1]], hi[c[2]]]);
        }
    }
    out
}

/// Volume of a straight prism.
pub fn straight_prism_volume(q: &[Point; 6]) -> f64 {
    let area = geometry::triangle_area(&q[0], &q[1], &q[2]);
    area * geometry::dist(&q[0], &q[3])
}
