use std::collections::HashMap;

use polygrade::fixtures;
use polygrade::geometry::Point;
use polygrade::mesh::check_conformity;
use polygrade::refine2d::{mesh_sequence, refine_mesh2, refine_triangle2, split_edge, Mesh2};
use polygrade::{GradingSpec, VertexType};
use proptest::prelude::*;

use VertexType::{S, V};

fn area(p: &[Point; 3]) -> f64 {
    0.5 * ((p[1][0] - p[0][0]) * (p[2][1] - p[0][1]) - (p[2][0] - p[0][0]) * (p[1][1] - p[0][1]))
}

fn d(a: &Point, b: &Point) -> f64 {
    ((a[0] - b[0]).powi(2) + (a[1] - b[1]).powi(2)).sqrt()
}

fn angles(p: [Point; 3]) -> [f64; 3] {
    let ang = |a: &Point, b: &Point, c: &Point| {
        let u = [b[0] - a[0], b[1] - a[1]];
        let v = [c[0] - a[0], c[1] - a[1]];
        ((u[0] * v[0] + u[1] * v[1]) / (u[0].hypot(u[1]) * v[0].hypot(v[1]))).clamp(-1.0, 1.0).acos()
    };
    [ang(&p[0], &p[1], &p[2]), ang(&p[1], &p[2], &p[0]), ang(&p[2], &p[0], &p[1])]
}

fn tri(m: &Mesh2, k: usize) -> [Point; 3] {
    m.triangles[k].v.map(|i| m.points[i])
}

/// Edge use counts from the triangle list.
fn edge_uses(m: &Mesh2) -> HashMap<[usize; 2], usize> {
    let mut uses = HashMap::new();
    for t in &m.triangles {
        for (i, j) in [(0, 1), (1, 2), (2, 0)] {
            let (a, b) = (t.v[i], t.v[j]);
            *uses.entry([a.min(b), a.max(b)]).or_insert(0) += 1;
        }
    }
    uses
}

fn graded(kappa: f64) -> GradingSpec {
    GradingSpec::new(1, 0.5).unwrap().with_kappa(kappa).unwrap()
}

fn nearest_to(m: &Mesh2, c: &Point) -> f64 {
    m.points.iter().map(|p| d(p, c)).filter(|&r| r > 0.0).fold(f64::INFINITY, f64::min)
}

#[test]
fn split_edge_examples() {
    let (a, b) = ([0.0, 0.0, 0.0], [1.0, 0.0, 0.0]);
    assert_eq!(split_edge((&a, V), (&b, S), 0.25), [0.25, 0.0, 0.0]);
    assert_eq!(split_edge((&b, S), (&a, V), 0.25), [0.25, 0.0, 0.0]);
    assert_eq!(split_edge((&a, S), (&b, S), 0.25), [0.5, 0.0, 0.0]);
    assert_eq!(split_edge((&a, V), (&b, S), 0.5), [0.5, 0.0, 0.0]);
}

#[test]
fn corner_child_of_right_triangle() {
    let p = [[0.0, 0.0, 0.0], [1.0, 0.0, 0.0], [0.0, 1.0, 0.0]];
    let ch = refine_triangle2(p, [V, S, S], [0.25; 3]);
    assert_eq!(ch[0], [[0.0, 0.0, 0.0], [0.25, 0.0, 0.0], [0.0, 0.25, 0.0]]);
    assert!((area(&ch[0]) - 1.0 / 32.0).abs() < 1e-16);
}

#[test]
fn sss_split_is_congruent() {
    let p = [[0.1, 0.2, 0.0], [1.3, 0.4, 0.0], [0.5, 1.7, 0.0]];
    let ch = refine_triangle2(p, [S, S, S], [0.25; 3]);
    let parent = area(&p).abs();
    for c in &ch {
        assert!((area(c).abs() - parent / 4.0).abs() < 1e-15);
        let mut a = angles(*c);
        let mut b = angles(p);
        a.sort_by(f64::total_cmp);
        b.sort_by(f64::total_cmp);
        for k in 0..3 {
            assert!((a[k] - b[k]).abs() < 1e-12);
        }
    }
}

#[test]
fn counts_grow_by_four_and_stay_conforming() {
    let dom = fixtures::lshape2d().unwrap();
    let meshes = mesh_sequence(&dom, &graded(0.25), 4).unwrap();
    assert_eq!(meshes[0].triangles.len(), 16);
    for w in meshes.windows(2) {
        assert_eq!(w[1].triangles.len(), 4 * w[0].triangles.len());
    }
    for m in &meshes {
        m.check().unwrap();
        let uses = edge_uses(m);
        for (e, n) in &uses {
            let on_boundary = m.boundary.contains_key(e);
            assert_eq!(*n, if on_boundary { 1 } else { 2 }, "edge {e:?}");
        }
        // no triangle carries two V vertices
        assert!(m.triangles.iter().all(|t| t.types.iter().filter(|&&x| x == V).count() <= 1));
        let report = check_conformity(&m.to_simplicial().unwrap(), &dom);
        assert!(report.passed(), "{report:?}");
    }
}

#[test]
fn area_is_conserved() {
    for dom in [fixtures::lshape2d().unwrap(), fixtures::square2d().unwrap(), fixtures::sector2d(5.0).unwrap()] {
        let target = dom.measure();
        for m in mesh_sequence(&dom, &graded(0.2), 5).unwrap() {
            let total: f64 = (0..m.triangles.len()).map(|k| area(&tri(&m, k))).sum();
            assert!((total - target).abs() <= 1e-12 * target, "{total} vs {target}");
            assert!((0..m.triangles.len()).all(|k| area(&tri(&m, k)) > 0.0));
        }
    }
}

#[test]
fn corner_distance_shrinks_geometrically() {
    let dom = fixtures::lshape2d().unwrap();
    for kappa in [0.25, 0.1, 0.5] {
        let meshes = mesh_sequence(&dom, &graded(kappa), 6).unwrap();
        for v in &dom.singular_vertices {
            let c = dom.vertices[*v];
            let d0 = nearest_to(&meshes[0], &c);
            for (n, m) in meshes.iter().enumerate() {
                let expected = kappa.powi(n as i32) * d0;
                let got = nearest_to(m, &c);
                // coordinates carry an absolute rounding error of a few ulps of |c|
                let slack = 1e-12 * expected + 8.0 * f64::EPSILON * c[0].abs().max(c[1].abs());
                assert!((got - expected).abs() <= slack, "kappa {kappa} level {n}: {got} vs {expected}");
            }
        }
    }
}

#[test]
fn uniform_square_halves_every_edge() {
    let dom = fixtures::square2d().unwrap();
    let meshes = mesh_sequence(&dom, &graded(0.5), 4).unwrap();
    let lengths = |m: &Mesh2| {
        let mut l: Vec<f64> = edge_uses(m).keys().map(|e| d(&m.points[e[0]], &m.points[e[1]])).collect();
        l.sort_by(f64::total_cmp);
        l
    };
    let l0 = lengths(&meshes[0]);
    let (lo0, hi0) = (l0[0], l0[l0.len() - 1]);
    for (n, m) in meshes.iter().enumerate() {
        let l = lengths(m);
        let s = 0.5f64.powi(n as i32);
        assert!((l[0] - lo0 * s).abs() < 1e-14 && (l[l.len() - 1] - hi0 * s).abs() < 1e-14);
    }
}

#[test]
fn angles_away_from_corners_stay_bounded() {
    let dom = fixtures::lshape2d().unwrap();
    let mut m = Mesh2::initial(&dom).unwrap();
    let g = graded(0.25);
    let mut per_level = Vec::new();
    for _ in 0..=8 {
        let mut min = f64::INFINITY;
        for (k, t) in m.triangles.iter().enumerate() {
            if t.types.contains(&V) {
                continue;
            }
            min = min.min(angles(tri(&m, k)).into_iter().fold(f64::INFINITY, f64::min));
        }
        per_level.push(min);
        if per_level.len() <= 8 {
            m = refine_mesh2(&m, &g).unwrap();
        }
    }
    let overall = per_level.iter().copied().fold(f64::INFINITY, f64::min);
    assert!(overall >= 0.9 * per_level[2], "{per_level:?}");
}

#[test]
fn corner_ball_holds_a_bounded_number_of_triangles() {
    let dom = fixtures::lshape2d().unwrap();
    let kappa = 0.25;
    let meshes = mesh_sequence(&dom, &graded(kappa), 6).unwrap();
    let c = dom.vertices[0];
    let d0 = nearest_to(&meshes[0], &c);
    let counts: Vec<usize> = meshes
        .iter()
        .enumerate()
        .map(|(n, m)| {
            let r = kappa.powi(n as i32) * d0 * (1.0 + 1e-9);
            (0..m.triangles.len()).filter(|&k| tri(m, k).iter().any(|p| d(p, &c) <= r)).count()
        })
        .collect();
    assert!(counts.iter().all(|&n| n >= 1 && n == counts[0]), "{counts:?}");
}

#[test]
fn refinement_is_deterministic() {
    let dom = fixtures::lshape2d().unwrap();
    let a = mesh_sequence(&dom, &graded(0.25), 3).unwrap();
    let b = mesh_sequence(&dom, &graded(0.25), 3).unwrap();
    assert_eq!(a[3].points, b[3].points);
    assert_eq!(a[3].triangles, b[3].triangles);
}

fn coord() -> impl Strategy<Value = f64> {
    -10.0f64..10.0
}

proptest! {
    #[test]
    fn children_partition_the_parent(
        xs in proptest::array::uniform6(coord()),
        kappa in 0.01f64..=0.5,
        corner in 0usize..4,
    ) {
        let p = [[xs[0], xs[1], 0.0], [xs[2], xs[3], 0.0], [xs[4], xs[5], 0.0]];
        let parent = area(&p);
        prop_assume!(parent.abs() > 1e-3);
        let mut types = [S; 3];
        if corner < 3 {
            types[corner] = V;
        }
        let ch = refine_triangle2(p, types, [kappa; 3]);
        let sum: f64 = ch.iter().map(area).sum();
        prop_assert!((sum - parent).abs() <= 1e-12 * parent.abs().max(1.0));
        for c in &ch {
            prop_assert!(area(c) * parent > 0.0, "child orientation flipped");
        }
    }
}
