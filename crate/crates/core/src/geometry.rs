//! Small fixed-size vector helpers shared by the mesh and FEM modules.
//!
//! Points are always stored with three coordinates; planar meshes keep `z = 0`.

pub type Point = [f64; 3];

#[inline]
pub fn sub(a: &Point, b: &Point) -> Point {
    [a[0] - b[0], a[1] - b[1], a[2] - b[2]]
}

#[inline]
pub fn add(a: &Point, b: &Point) -> Point {
    [a[0] + b[0], a[1] + b[1], a[2] + b[2]]
}

#[inline]
pub fn scale(a: &Point, s: f64) -> Point {
    [a[0] * s, a[1] * s, a[2] * s]
}

#[inline]
pub fn dot(a: &Point, b: &Point) -> f64 {
    a[0] * b[0] + a[1] * b[1] + a[2] * b[2]
}

#[inline]
pub fn cross(a: &Point, b: &Point) -> Point {
    [a[1] * b[2] - a[2] * b[1], a[2] * b[0] - a[0] * b[2], a[0] * b[1] - a[1] * b[0]]
}

#[inline]
pub fn norm(a: &Point) -> f64 {
    dot(a, a).sqrt()
}

#[inline]
pub fn dist(a: &Point, b: &Point) -> f64 {
    norm(&sub(a, b))
}

/// `a + t (b - a)`
#[inline]
pub fn lerp(a: &Point, b: &Point, t: f64) -> Point {
    [a[0] + t * (b[0] - a[0]), a[1] + t * (b[1] - a[1]), a[2] + t * (b[2] - a[2])]
}

pub fn centroid(pts: &[Point]) -> Point {
    let mut c = [0.0; 3];
    for p in pts {
        c = add(&c, p);
    }
    scale(&c, 1.0 / pts.len() as f64)
}

pub fn normalize(a: &Point) -> Point {
    let n = norm(a);
    if n == 0.0 {
        *a
    } else {
        scale(a, 1.0 / n)
    }
}

/// Exact Euclidean distance from `x` to the closed segment `[a, b]`.
pub fn point_segment_distance(x: &Point, a: &Point, b: &Point) -> f64 {
    let ab = sub(b, a);
    let len2 = dot(&ab, &ab);
    if len2 == 0.0 {
        return dist(x, a);
    }
    let t = (dot(&sub(x, a), &ab) / len2).clamp(0.0, 1.0);
    dist(x, &lerp(a, b, t))
}

/// Twice the signed area of the planar triangle (xy components).
#[inline]
pub fn signed_area2(a: &Point, b: &Point, c: &Point) -> f64 {
    (b[0] - a[0]) * (c[1] - a[1]) - (b[1] - a[1]) * (c[0] - a[0])
}

#[inline]
pub fn triangle_area(a: &Point, b: &Point, c: &Point) -> f64 {
    0.5 * norm(&cross(&sub(b, a), &sub(c, a)))
}

/// Signed volume of the tetrahedron `abcd`.
#[inline]
pub fn tet_volume(a: &Point, b: &Point, c: &Point, d: &Point) -> f64 {
    dot(&sub(b, a), &cross(&sub(c, a), &sub(d, a))) / 6.0
}

/// Interior angles of a triangle in radians.
pub fn triangle_angles(p: [&Point; 3]) -> [f64; 3] {
    let mut out = [0.0; 3];
    for i in 0..3 {
        let u = sub(p[(i + 1) % 3], p[i]);
        let v = sub(p[(i + 2) % 3], p[i]);
        out[i] = angle_between(&u, &v);
    }
    out
}

pub fn angle_between(u: &Point, v: &Point) -> f64 {
    let c = dot(u, v) / (norm(u) * norm(v));
    c.clamp(-1.0, 1.0).acos()
}

/// The six interior dihedral angles of a tetrahedron, one per edge.
pub fn dihedral_angles(p: [&Point; 4]) -> [f64; 6] {
    const EDGES: [(usize, usize); 6] = [(0, 1), (0, 2), (0, 3), (1, 2), (1, 3), (2, 3)];
    let mut out = [0.0; 6];
    for (k, &(i, j)) in EDGES.iter().enumerate() {
        let others: Vec<usize> = (0..4).filter(|&l| l != i && l != j).collect();
        let e = normalize(&sub(p[j], p[i]));
        let mut u = sub(p[others[0]], p[i]);
        let mut v = sub(p[others[1]], p[i]);
        u = sub(&u, &scale(&e, dot(&u, &e)));
        v = sub(&v, &scale(&e, dot(&v, &e)));
        out[k] = angle_between(&u, &v);
    }
    out
}

/// Newell normal of a planar polygon (length equals twice the area).
pub fn polygon_normal(pts: &[Point]) -> Point {
    let mut n = [0.0; 3];
    for i in 0..pts.len() {
        let a = &pts[i];
        let b = &pts[(i + 1) % pts.len()];
        n[0] += (a[1] - b[1]) * (a[2] + b[2]);
        n[1] += (a[2] - b[2]) * (a[0] + b[0]);
        n[2] += (a[0] - b[0]) * (a[1] + b[1]);
    }
    n
}

/// Point-in-polygon test for a planar polygon with unit normal `n`; points on
/// the polygon boundary (within `tol`) count as inside.
pub fn point_in_polygon(x: &Point, pts: &[Point], n: &Point, tol: f64) -> bool {
    for i in 0..pts.len() {
        if point_segment_distance(x, &pts[i], &pts[(i + 1) % pts.len()]) <= tol {
            return true;
        }
    }
    // project onto the dominant plane and use the crossing rule
    let ax = (0..3).max_by(|&i, &j| n[i].abs().total_cmp(&n[j].abs())).unwrap();
    let (u, v) = match ax {
        0 => (1, 2),
        1 => (2, 0),
        _ => (0, 1),
    };
    let mut inside = false;
    let mut j = pts.len() - 1;
    for i in 0..pts.len() {
        let (pi, pj) = (&pts[i], &pts[j]);
        if (pi[v] > x[v]) != (pj[v] > x[v]) {
            let t = (x[v] - pi[v]) / (pj[v] - pi[v]);
            if x[u] < pi[u] + t * (pj[u] - pi[u]) {
                inside = !inside;
            }
        }
        j = i;
    }
    inside
}
