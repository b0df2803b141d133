use std::f64::consts::PI;

use polygrade::domain::grading_parameter;
use polygrade::fixtures::{self, Fixture};
use polygrade::{BoundaryFlag, Domain, Feature, VertexType};
use proptest::prelude::*;

fn cube() -> Domain {
    match fixtures::builtin("cube3d").unwrap() {
        Fixture::Solid { domain, .. } => domain,
        Fixture::Planar(_) => unreachable!(),
    }
}

fn fichera() -> Domain {
    fixtures::builtin("fichera3d").unwrap().domain().clone()
}

/// Brute force over sampled points of every closed singular edge.
fn sampled_edge_distance(d: &Domain, x: &[f64; 3]) -> f64 {
    let mut best = f64::INFINITY;
    for e in &d.singular_edges {
        let (a, b) = (d.vertices[e[0]], d.vertices[e[1]]);
        for k in 0..=20_000 {
            let t = k as f64 / 20_000.0;
            let p = [a[0] + t * (b[0] - a[0]), a[1] + t * (b[1] - a[1]), a[2] + t * (b[2] - a[2])];
            let r = ((x[0] - p[0]).powi(2) + (x[1] - p[1]).powi(2) + (x[2] - p[2]).powi(2)).sqrt();
            best = best.min(r);
        }
    }
    best
}

fn interior_angle(p: [f64; 2], prev: [f64; 2], next: [f64; 2]) -> f64 {
    // counter-clockwise boundary: interior lies to the left
    let a = (next[1] - p[1]).atan2(next[0] - p[0]);
    let b = (prev[1] - p[1]).atan2(prev[0] - p[0]);
    (b - a).rem_euclid(2.0 * PI)
}

#[test]
fn square_has_four_right_corners() {
    let d = fixtures::square2d().unwrap();
    assert_eq!(d.singular_vertices.len(), 4);
    for v in 0..4 {
        assert!((d.corner_openings[&Feature::Corner(v)] - PI / 2.0).abs() < 1e-14);
        assert!((d.corner_exponent(Feature::Corner(v)).unwrap() - 2.0).abs() < 1e-14);
    }
}

#[test]
fn lshape_openings_match_edge_vectors() {
    let d = fixtures::lshape2d().unwrap();
    let n = d.vertices.len();
    for v in 0..n {
        let p = |i: usize| [d.vertices[i][0], d.vertices[i][1]];
        let expected = interior_angle(p(v), p((v + n - 1) % n), p((v + 1) % n));
        assert!((d.corner_openings[&Feature::Corner(v)] - expected).abs() < 1e-12, "vertex {v}");
    }
    assert!((d.corner_openings[&Feature::Corner(0)] - 1.5 * PI).abs() < 1e-14);
    assert!((d.corner_exponent(Feature::Corner(0)).unwrap() - 2.0 / 3.0).abs() < 1e-15);
}

#[test]
fn open_boundary_is_rejected() {
    let err = Domain::parse("[vertices]\n0 0\n1 0\n1 1\n0 1\n[facets]\n0 1 D\n1 2 D\n2 3 D\n").unwrap_err();
    assert!(err.to_string().contains("boundary not closed"), "{err}");
}

#[test]
fn text_round_trip() {
    for d in [fixtures::lshape2d().unwrap(), cube()] {
        let again = Domain::parse(&d.to_text()).unwrap();
        assert_eq!(again.vertices, d.vertices);
        assert_eq!(again.singular_vertices, d.singular_vertices);
        assert_eq!(again.singular_edges, d.singular_edges);
        assert_eq!(again.corner_openings.len(), d.corner_openings.len());
    }
}

#[test]
fn classify_examples() {
    let l = fixtures::lshape2d().unwrap();
    let tol = l.default_tol();
    assert_eq!(l.classify_point(&[0.0, 0.0, 0.0], tol), VertexType::V);
    assert_eq!(l.classify_point(&[-0.3, 0.4, 0.0], tol), VertexType::S);
    // a 2D boundary point between corners is smooth
    assert_eq!(l.classify_point(&[0.5, 0.0, 0.0], tol), VertexType::S);

    let f = fichera();
    let tol = f.default_tol();
    let (e, _) = f
        .singular_edges
        .iter()
        .enumerate()
        .find(|(_, e)| f.corner_openings[&Feature::Edge(f.edge_index(e[0], e[1]).unwrap())] > PI)
        .expect("a re-entrant edge");
    let [a, b] = f.singular_edges[e];
    let mid = polygrade::geometry::lerp(&f.vertices[a], &f.vertices[b], 0.5);
    assert_eq!(f.classify_point(&mid, tol), VertexType::E);
    assert_eq!(f.locate_feature(&mid, tol), Some(Feature::Edge(e)));
    assert_eq!(f.classify_point(&f.vertices[a], tol), VertexType::V);
}

#[test]
fn singular_distance_examples() {
    let s = fixtures::square2d().unwrap();
    assert!((s.singular_distance(&[0.5, 0.5, 0.0]) - 0.5f64.sqrt()).abs() < 1e-15);

    let c = cube();
    let x = [0.5, 0.5, 0.5];
    let oracle = sampled_edge_distance(&c, &x);
    assert!((c.singular_distance(&x) - oracle).abs() < 1e-12, "{} vs {oracle}", c.singular_distance(&x));
}

#[test]
fn dihedral_edge_exponent() {
    let d = fixtures::builtin("prismwedge3d").unwrap().domain().clone();
    let re: Vec<f64> = d.corner_openings.values().copied().filter(|a| *a > PI).collect();
    assert!(!re.is_empty());
    for (f, a) in &d.corner_openings {
        if *a > PI {
            assert!((d.corner_exponent(*f).unwrap() - 2.0 / 3.0).abs() < 1e-14);
        }
    }
}

#[test]
fn grading_parameter_examples() {
    assert_eq!(grading_parameter(1, 0.5).unwrap(), 0.25);
    assert_eq!(grading_parameter(2, 0.5).unwrap(), 1.0 / 16.0);
    assert!(grading_parameter(1, 0.51).is_err());
    assert!(grading_parameter(0, 0.5).is_err());
}

#[test]
fn flags_can_be_replaced() {
    let d = fixtures::square2d().unwrap();
    let n = d.clone().with_flags(&[BoundaryFlag::Neumann, BoundaryFlag::Dirichlet, BoundaryFlag::Dirichlet, BoundaryFlag::Dirichlet]).unwrap();
    assert_eq!(n.facets[0].flag, BoundaryFlag::Neumann);
    assert!(d.with_flags(&[BoundaryFlag::Neumann]).is_err());
}

fn point_in(d: &Domain) -> impl Strategy<Value = [f64; 3]> {
    let lo = d.vertices.iter().fold([f64::INFINITY; 3], |m, p| [m[0].min(p[0]), m[1].min(p[1]), m[2].min(p[2])]);
    let hi = d.vertices.iter().fold([f64::NEG_INFINITY; 3], |m, p| [m[0].max(p[0]), m[1].max(p[1]), m[2].max(p[2])]);
    (lo[0]..=hi[0], lo[1]..=hi[1], lo[2]..=hi[2]).prop_map(|(x, y, z)| [x, y, z])
}

fn dist(a: &[f64; 3], b: &[f64; 3]) -> f64 {
    ((a[0] - b[0]).powi(2) + (a[1] - b[1]).powi(2) + (a[2] - b[2]).powi(2)).sqrt()
}

fn scaled(d: &Domain, s: f64) -> Domain {
    let mut text = String::from("[vertices]\n");
    for p in &d.vertices {
        if d.dim == 2 {
            text.push_str(&format!("{} {}\n", p[0] * s, p[1] * s));
        } else {
            text.push_str(&format!("{} {} {}\n", p[0] * s, p[1] * s, p[2] * s));
        }
    }
    let facets = d.to_text();
    let rest = &facets[facets.find("[facets]").unwrap()..];
    text.push_str(rest);
    Domain::parse(&text).unwrap()
}

proptest! {
    #[test]
    fn singular_distance_is_lipschitz_2d(x in point_in(&fixtures::lshape2d().unwrap()), y in point_in(&fixtures::lshape2d().unwrap())) {
        let d = fixtures::lshape2d().unwrap();
        prop_assert!((d.singular_distance(&x) - d.singular_distance(&y)).abs() <= dist(&x, &y) + 1e-14);
    }

    #[test]
    fn singular_distance_is_lipschitz_3d(x in point_in(&fichera()), y in point_in(&fichera())) {
        let d = fichera();
        prop_assert!((d.singular_distance(&x) - d.singular_distance(&y)).abs() <= dist(&x, &y) + 1e-14);
    }

    #[test]
    fn classification_is_scale_equivariant(s in 0.01f64..100.0, v in 0usize..27, t in 0.0f64..1.0, which in 0usize..3) {
        let d = fichera();
        let ds = scaled(&d, s);
        // a vertex, a point on an edge, or a generic point
        let x = match which {
            0 => d.vertices[v % d.vertices.len()],
            1 => {
                let e = d.singular_edges[v % d.singular_edges.len()];
                polygrade::geometry::lerp(&d.vertices[e[0]], &d.vertices[e[1]], 0.05 + 0.9 * t)
            }
            _ => [0.3 + 0.1 * t, 0.7, 0.45],
        };
        let xs = [x[0] * s, x[1] * s, x[2] * s];
        prop_assert_eq!(d.classify_point(&x, d.default_tol()), ds.classify_point(&xs, ds.default_tol()));
    }

    #[test]
    fn exponent_times_opening_is_pi(alpha in 0.1f64..6.2) {
        let d = fixtures::sector2d(alpha).unwrap();
        let a = d.corner_openings[&Feature::Corner(0)];
        prop_assert!((d.corner_exponent(Feature::Corner(0)).unwrap() * a - PI).abs() < 1e-14);
        prop_assert!((a - alpha).abs() < 1e-9);
    }

    #[test]
    fn grading_parameter_is_monotone(m in 1u32..4, a in 0.01f64..0.5, b in 0.01f64..0.5) {
        let (lo, hi) = if a <= b { (a, b) } else { (b, a) };
        prop_assert!(grading_parameter(m, lo).unwrap() <= grading_parameter(m, hi).unwrap());
        prop_assert!(grading_parameter(m + 1, a).unwrap() <= grading_parameter(m, a).unwrap());
    }
}
