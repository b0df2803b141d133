//! Builtin test domains.
//!
//! The 3D fixtures are unions of unit cubes. Each cube is cut into its 48
//! flag tetrahedra (cube vertex, edge midpoint, face centre, cube centre).
//! Every lattice point on a facet boundary is a domain vertex, so each
//! singular edge is a unit cube edge and the flag tetrahedra along it are
//! VESS. The generated texts are embedded in the crate and checked against
//! the generator by the test suite.

use std::collections::{BTreeMap, BTreeSet, HashMap, HashSet};
use std::f64::consts::PI;
use std::fmt::Write as _;

use crate::domain::{BoundaryFlag, Domain, Facet};
use crate::error::{Error, Result};
use crate::geometry::Point;
use crate::refine3d::Decomposition;

pub const FIXTURE_NAMES: [&str; 6] = ["lshape2d", "square2d", "sector2d(alpha)", "cube3d", "prismwedge3d", "fichera3d"];

const CUBE3D_DOMAIN: &str = include_str!("../fixtures/cube3d.domain");
const CUBE3D_DECOMP: &str = include_str!("../fixtures/cube3d.decomp");
const PRISMWEDGE3D_DOMAIN: &str = include_str!("../fixtures/prismwedge3d.domain");
const PRISMWEDGE3D_DECOMP: &str = include_str!("../fixtures/prismwedge3d.decomp");
const FICHERA3D_DOMAIN: &str = include_str!("../fixtures/fichera3d.domain");
const FICHERA3D_DECOMP: &str = include_str!("../fixtures/fichera3d.decomp");

#[derive(Debug, Clone)]
pub enum Fixture {
    Planar(Domain),
    Solid { domain: Domain, decomposition: Decomposition },
}

impl Fixture {
    pub fn domain(&self) -> &Domain {
        match self {
            Fixture::Planar(d) | Fixture::Solid { domain: d, .. } => d,
        }
    }
}

/// Embedded `(domain, decomposition)` texts of a 3D fixture.
pub fn embedded_text(name: &str) -> Option<(&'static str, &'static str)> {
    match name {
        "cube3d" => Some((CUBE3D_DOMAIN, CUBE3D_DECOMP)),
        "prismwedge3d" => Some((PRISMWEDGE3D_DOMAIN, PRISMWEDGE3D_DECOMP)),
        "fichera3d" => Some((FICHERA3D_DOMAIN, FICHERA3D_DECOMP)),
        _ => None,
    }
}

/// Unit cubes (by minimum corner) making up a 3D fixture.
pub fn fixture_cubes(name: &str) -> Option<Vec<[i32; 3]>> {
    match name {
        "cube3d" => Some(vec![[0, 0, 0]]),
        "prismwedge3d" => Some(vec![[0, 0, 0], [-1, 0, 0], [-1, -1, 0]]),
        "fichera3d" => {
            let mut v = Vec::new();
            for x in [-1, 0] {
                for y in [-1, 0] {
                    for z in [-1, 0] {
                        if [x, y, z] != [0, 0, 0] {
                            v.push([x, y, z]);
                        }
                    }
                }
            }
            Some(v)
        }
        _ => None,
    }
}

/// Looks up a builtin by name; `sector2d(alpha)` takes the opening angle in
/// radians.
pub fn builtin(name: &str) -> Result<Fixture> {
    let name = name.trim();
    if let Some(arg) = name.strip_prefix("sector2d(").and_then(|s| s.strip_suffix(')')) {
        let alpha: f64 = arg
            .trim()
            .parse()
            .map_err(|_| Error::Domain(format!("sector2d needs a numeric angle, got '{arg}'")))?;
        return sector2d(alpha).map(Fixture::Planar);
    }
    match name {
        "lshape2d" => lshape2d().map(Fixture::Planar),
        "square2d" => square2d().map(Fixture::Planar),
        _ => {
            let (dt, mt) = embedded_text(name).ok_or_else(|| {
                Error::Domain(format!("unknown builtin fixture '{name}' (known: {})", FIXTURE_NAMES.join(", ")))
            })?;
            let domain = Domain::parse(dt)?;
            let decomposition = Decomposition::parse(mt, &domain)?;
            Ok(Fixture::Solid { domain, decomposition })
        }
    }
}

fn polygon(pts: &[[f64; 2]]) -> Result<Domain> {
    let n = pts.len();
    let vertices: Vec<Point> = pts.iter().map(|p| [p[0], p[1], 0.0]).collect();
    let facets = (0..n).map(|i| Facet { vertices: vec![i, (i + 1) % n], flag: BoundaryFlag::Dirichlet }).collect();
    Domain::new(2, vertices, facets, None)
}

/// L-shaped domain `(-1,1)^2` minus the quadrant `x > 0, y < 0`; the
/// re-entrant corner is vertex 0 at the origin.
pub fn lshape2d() -> Result<Domain> {
    polygon(&[[0.0, 0.0], [1.0, 0.0], [1.0, 1.0], [-1.0, 1.0], [-1.0, -1.0], [0.0, -1.0]])
}

/// Unit square; facets in order bottom, right, top, left.
pub fn square2d() -> Result<Domain> {
    polygon(&[[0.0, 0.0], [1.0, 0.0], [1.0, 1.0], [0.0, 1.0]])
}

/// Polygonal sector of opening `alpha` with apex at the origin (vertex 0)
/// and unit legs; the arc is replaced by chords.
pub fn sector2d(alpha: f64) -> Result<Domain> {
    if !(alpha > 0.0 && alpha < 2.0 * PI) {
        return Err(Error::Domain(format!("sector opening {alpha} must lie in (0, 2pi)")));
    }
    let n = ((alpha / (PI / 2.0)).ceil() as usize).max(2);
    let mut pts = vec![[0.0, 0.0]];
    for k in 0..=n {
        let t = alpha * k as f64 / n as f64;
        pts.push([t.cos(), t.sin()]);
    }
    polygon(&pts)
}

type Lattice = [i32; 3];

/// Domain and initial decomposition texts for a union of unit cubes.
pub fn box_union_text(cubes: &[[i32; 3]]) -> Result<(String, String)> {
    let domain_text = box_union_domain(cubes)?;
    let domain = Domain::parse(&domain_text)?;
    let cube_set: BTreeSet<Lattice> = cubes.iter().copied().collect();
    // all coordinates doubled so that midpoints stay integral
    let mut tets: Vec<[Lattice; 4]> = Vec::new();
    for c in &cube_set {
        let lo = c.map(|x| 2 * x);
        let center = lo.map(|x| x + 1);
        for axis in 0..3 {
            for side in [0, 2] {
                let mut face = center;
                face[axis] = lo[axis] + side;
                let (u, w) = ((axis + 1) % 3, (axis + 2) % 3);
                for (eu, ew) in [(0, -1), (1, 0), (0, 1), (-1, 0)] {
                    let mut mid = face;
                    mid[u] += eu;
                    mid[w] += ew;
                    let along = if eu == 0 { u } else { w };
                    for s in [-1, 1] {
                        let mut vtx = mid;
                        vtx[along] += s;
                        tets.push([vtx, mid, face, center]);
                    }
                }
            }
        }
    }
    let ids: BTreeMap<Lattice, usize> = {
        let all: BTreeSet<Lattice> = tets.iter().flatten().copied().collect();
        all.into_iter().enumerate().map(|(i, p)| (p, i)).collect()
    };
    let coords = |p: &Lattice| -> Point { p.map(|x| x as f64 / 2.0) };
    let tol = 1e-9 * domain.diameter();
    let mut s = String::from("[points]\n");
    let mut letters = HashMap::new();
    for p in ids.keys() {
        let x = coords(p);
        let _ = writeln!(s, "{} {} {}", x[0], x[1], x[2]);
        letters.insert(*p, domain.classify_point(&x, tol).letter());
    }
    s.push_str("[tets]\n");
    for t in &tets {
        let l: String = t.iter().map(|p| letters[p]).collect();
        let _ = writeln!(s, "{} {} {} {} {}", ids[&t[0]], ids[&t[1]], ids[&t[2]], ids[&t[3]], l);
    }
    s.push_str("[prisms]\n");
    Ok((domain_text, s))
}

/// Boundary of a cube union as merged planar facets. Every lattice point on
/// a facet boundary is kept as a vertex.
fn box_union_domain(cubes: &[[i32; 3]]) -> Result<String> {
    let set: HashSet<Lattice> = cubes.iter().copied().collect();
    if set.is_empty() {
        return Err(Error::Domain("empty cube union".into()));
    }
    // boundary squares grouped by (axis, outward sign, plane)
    let mut groups: BTreeMap<(usize, i32, i32), BTreeSet<(i32, i32)>> = BTreeMap::new();
    for c in &set {
        for axis in 0..3 {
            for sign in [-1, 1] {
                let mut nb = *c;
                nb[axis] += sign;
                if !set.contains(&nb) {
                    let plane = c[axis] + if sign > 0 { 1 } else { 0 };
                    let (u, w) = ((axis + 1) % 3, (axis + 2) % 3);
                    groups.entry((axis, sign, plane)).or_default().insert((c[u], c[w]));
                }
            }
        }
    }
    let mut loops: Vec<Vec<Lattice>> = Vec::new();
    for (&(axis, sign, plane), cells) in &groups {
        let (u, w) = ((axis + 1) % 3, (axis + 2) % 3);
        let lift = |a: i32, b: i32| {
            let mut p = [0; 3];
            p[axis] = plane;
            p[u] = a;
            p[w] = b;
            p
        };
        let mut remaining = cells.clone();
        while let Some(&seed) = remaining.iter().next() {
            // connected component through shared edges
            let mut comp = BTreeSet::new();
            let mut stack = vec![seed];
            remaining.remove(&seed);
            while let Some((a, b)) = stack.pop() {
                comp.insert((a, b));
                for nb in [(a + 1, b), (a - 1, b), (a, b + 1), (a, b - 1)] {
                    if remaining.remove(&nb) {
                        stack.push(nb);
                    }
                }
            }
            // directed boundary edges, counter-clockwise about the outward normal
            let mut edges: HashSet<(Lattice, Lattice)> = HashSet::new();
            for &(a, b) in &comp {
                let mut sq = [lift(a, b), lift(a + 1, b), lift(a + 1, b + 1), lift(a, b + 1)];
                if sign < 0 {
                    sq.reverse();
                }
                for k in 0..4 {
                    let e = (sq[k], sq[(k + 1) % 4]);
                    if !edges.remove(&(e.1, e.0)) {
                        edges.insert(e);
                    }
                }
            }
            let mut next: HashMap<Lattice, Lattice> = HashMap::new();
            for &(a, b) in &edges {
                if next.insert(a, b).is_some() {
                    return Err(Error::Domain("cube union has a pinched facet".into()));
                }
            }
            let start = *next.keys().min().expect("nonempty boundary");
            let mut lp = vec![start];
            let mut cur = next[&start];
            while cur != start {
                lp.push(cur);
                cur = next[&cur];
                if lp.len() > edges.len() {
                    return Err(Error::Domain("facet boundary is not a single loop".into()));
                }
            }
            if lp.len() != edges.len() {
                return Err(Error::Domain("facet with a hole".into()));
            }
            loops.push(lp);
        }
    }
    let verts: BTreeSet<Lattice> = loops.iter().flatten().copied().collect();
    let index: BTreeMap<Lattice, usize> = verts.iter().enumerate().map(|(i, p)| (*p, i)).collect();
    let mut s = String::from("[vertices]\n");
    for p in &verts {
        let _ = writeln!(s, "{} {} {}", p[0], p[1], p[2]);
    }
    s.push_str("[facets]\n");
    for lp in &loops {
        let ids: Vec<String> = lp.iter().map(|p| index[p].to_string()).collect();
        let _ = writeln!(s, "{} D", ids.join(" "));
    }
    Ok(s)
}

/// Regenerates the texts of a named 3D fixture.
pub fn generate_fixture_text(name: &str) -> Result<(String, String)> {
    let cubes = fixture_cubes(name).ok_or_else(|| Error::Domain(format!("'{name}' is not a 3D fixture")))?;
    box_union_text(&cubes)
}
