use std::f64::consts::PI;

use polygrade::fem::field::{Constant, Polynomial};
use polygrade::fem::ScalarField;
use polygrade::fixtures;
use polygrade::mesh::SimplicialMesh;
use polygrade::refine2d::mesh_sequence;
use polygrade::weighted::norm::{weighted_norm, weighted_norm_sq_at_depth, WeightedNormSpec};
use polygrade::weighted::{hardy_min_eigenvalue, manufactured_problem, Cutoff, HardyOptions};
use polygrade::{BoundaryFlag, Domain, GradingSpec};
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

const R1: f64 = 0.1;
const R2: f64 = 0.95;

fn mesh_of(d: &Domain, kappa: f64, level: usize) -> SimplicialMesh {
    let g = GradingSpec::new(1, 0.5).unwrap().with_kappa(kappa).unwrap();
    mesh_sequence(d, &g, level).unwrap()[level].to_simplicial().unwrap()
}

type Terms = Vec<(f64, [i32; 3])>;

fn product(p: &Terms, q: &Terms) -> Terms {
    let mut out = Vec::new();
    for (a, e) in p {
        for (b, f) in q {
            out.push((a * b, [e[0] + f[0], e[1] + f[1], 0]));
        }
    }
    out
}

/// Exact integral over the unit square.
fn square_integral(p: &Terms) -> f64 {
    p.iter().map(|(c, e)| c / ((e[0] + 1) * (e[1] + 1)) as f64).sum()
}

#[test]
fn constant_one_gives_root_area() {
    for d in [fixtures::lshape2d().unwrap(), fixtures::square2d().unwrap()] {
        let mesh = mesh_of(&d, 0.25, 2);
        let n = weighted_norm(&Constant(1.0), &d, &mesh, &WeightedNormSpec::new(0, 0.0)).unwrap();
        assert!((n.value - d.measure().sqrt()).abs() < 1e-10, "{}", n.value);
    }
}

#[test]
fn plain_l2_norm_matches_exact_integral() {
    let d = fixtures::square2d().unwrap();
    let mesh = mesh_of(&d, 0.5, 2);
    let terms: Terms = vec![(1.0, [0, 0, 0]), (2.0, [1, 0, 0]), (-1.0, [0, 1, 0]), (3.0, [1, 1, 0]), (0.5, [2, 0, 0])];
    let exact = square_integral(&product(&terms, &terms));
    let got = weighted_norm_sq_at_depth(&Polynomial(terms), &d, &mesh, &WeightedNormSpec::new(0, 0.0)).unwrap();
    assert!((got - exact).abs() < 1e-12 * exact, "{got} vs {exact}");
}

/// Midpoint rule on an `n` by `n` grid of the unit square, with `r` the
/// distance to the nearest corner.
fn grid_integral(n: usize, f: impl Fn(f64, f64, f64) -> f64) -> f64 {
    let h = 1.0 / n as f64;
    let mut total = 0.0;
    for i in 0..n {
        for j in 0..n {
            let (x, y) = ((i as f64 + 0.5) * h, (j as f64 + 0.5) * h);
            let r = [(0.0, 0.0), (1.0, 0.0), (1.0, 1.0), (0.0, 1.0)]
                .iter()
                .map(|(cx, cy)| ((x - cx) * (x - cx) + (y - cy) * (y - cy)).sqrt())
                .fold(f64::INFINITY, f64::min);
            total += f(x, y, r) * h * h;
        }
    }
    total
}

#[test]
fn derivative_terms_carry_powers_of_distance() {
    let d = fixtures::square2d().unwrap();
    let mesh = mesh_of(&d, 0.5, 2);
    // u = x^2 y + x
    let u = Polynomial(vec![(1.0, [2, 1, 0]), (1.0, [1, 0, 0])]);
    let v = |x: f64, y: f64| x * x * y + x;
    let g2 = |x: f64, y: f64| (2.0 * x * y + 1.0).powi(2) + (x * x).powi(2);
    let h2 = |x: f64, y: f64| (2.0 * y).powi(2) + (2.0 * x).powi(2);
    let a = 0.25;
    let w = |r: f64, k: i32| r.powf(2.0 * (k as f64 - a));
    let oracle = [
        grid_integral(2000, |x, y, r| w(r, 0) * v(x, y).powi(2)),
        grid_integral(2000, |x, y, r| w(r, 0) * v(x, y).powi(2) + w(r, 1) * g2(x, y)),
        grid_integral(2000, |x, y, r| w(r, 0) * v(x, y).powi(2) + w(r, 1) * g2(x, y) + w(r, 2) * h2(x, y)),
    ];
    for (m, exact) in oracle.into_iter().enumerate() {
        let got = weighted_norm_sq_at_depth(&u, &d, &mesh, &WeightedNormSpec::new(m, a).with_depth(8)).unwrap();
        assert!((got - exact).abs() < 1e-4 * exact, "m={m}: {got} vs {exact}");
    }
}

#[test]
fn weighted_constant_matches_grid_integral() {
    let d = fixtures::square2d().unwrap();
    let a = 0.3;
    let oracle = grid_integral(4000, |_, _, r| r.powf(-2.0 * a));
    let mesh = mesh_of(&d, 0.25, 2);
    let got = weighted_norm_sq_at_depth(&Constant(1.0), &d, &mesh, &WeightedNormSpec::new(0, a).with_depth(8)).unwrap();
    assert!((got - oracle).abs() < 1e-3 * oracle, "{got} vs {oracle}");
}

#[test]
fn corner_function_vanishes_on_both_legs() {
    let d = fixtures::lshape2d().unwrap();
    let u = manufactured_problem(&d, 0, R1, R2).unwrap();
    assert!((u.alpha - 1.5 * PI).abs() < 1e-14);
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    for _ in 0..100 {
        let r = rng.gen_range(0.0..1.0);
        let leg = if rng.gen_bool(0.5) { u.theta0 } else { u.theta0 + u.alpha };
        let x = [u.corner[0] + r * leg.cos(), u.corner[1] + r * leg.sin(), 0.0];
        assert!(u.pure_value(&x).abs() < 1e-14 && u.value(&x).abs() < 1e-14, "r={r}");
    }
}

#[test]
fn pure_singular_part_is_harmonic() {
    let d = fixtures::lshape2d().unwrap();
    let u = manufactured_problem(&d, 0, R1, R2).unwrap();
    let h = 1e-4;
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    for _ in 0..100 {
        let r = rng.gen_range(0.2..0.9);
        let t = u.theta0 + rng.gen_range(0.05..0.95) * u.alpha;
        let x = [r * t.cos(), r * t.sin(), 0.0];
        let f = |dx: f64, dy: f64| u.pure_value(&[x[0] + dx, x[1] + dy, 0.0]);
        let lap = (f(h, 0.0) + f(-h, 0.0) + f(0.0, h) + f(0.0, -h) - 4.0 * f(0.0, 0.0)) / (h * h);
        assert!(lap.abs() < 1e-4, "{lap}");
    }
}

#[test]
fn gradient_matches_finite_differences_in_the_annulus() {
    let d = fixtures::lshape2d().unwrap();
    let u = manufactured_problem(&d, 0, R1, R2).unwrap();
    let h = 1e-6;
    let mut rng = ChaCha8Rng::seed_from_u64(9);
    for _ in 0..100 {
        let r = rng.gen_range(R1 + 0.01..R2 - 0.01);
        let t = u.theta0 + rng.gen_range(0.05..0.95) * u.alpha;
        let x = [r * t.cos(), r * t.sin(), 0.0];
        let g = u.gradient(&x);
        for k in 0..2 {
            let (mut xp, mut xm) = (x, x);
            xp[k] += h;
            xm[k] -= h;
            let fd = (u.value(&xp) - u.value(&xm)) / (2.0 * h);
            assert!((fd - g[k]).abs() < 1e-7, "{fd} vs {}", g[k]);
        }
        // Laplacian against a five-point stencil of the full function
        let s = 1e-4;
        let f = |dx: f64, dy: f64| u.value(&[x[0] + dx, x[1] + dy, 0.0]);
        let lap = (f(s, 0.0) + f(-s, 0.0) + f(0.0, s) + f(0.0, -s) - 4.0 * f(0.0, 0.0)) / (s * s);
        assert!((lap - u.laplacian(&x)).abs() < 1e-3 * (1.0 + lap.abs()), "{lap} vs {}", u.laplacian(&x));
    }
}

#[test]
fn load_vanishes_outside_the_annulus() {
    let d = fixtures::lshape2d().unwrap();
    let u = manufactured_problem(&d, 0, R1, R2).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(13);
    for _ in 0..200 {
        let r = if rng.gen_bool(0.5) { rng.gen_range(1e-6..R1) } else { rng.gen_range(R2..1.0) };
        let t = u.theta0 + rng.gen_range(0.0..1.0) * u.alpha;
        let x = [r * t.cos(), r * t.sin(), 0.0];
        let scale = r.powf(u.exponent() - 2.0);
        assert!(u.laplacian(&x).abs() <= 1e-12 * scale, "r={r}: {}", u.laplacian(&x));
    }
}

#[test]
fn cutoff_is_twice_continuously_differentiable() {
    let c = Cutoff { r1: R1, r2: R2 };
    assert_eq!(c.eval(R1), (1.0, 0.0, 0.0));
    assert_eq!(c.eval(R2), (0.0, 0.0, 0.0));
    let eps = 1e-7;
    for r in [R1, R2] {
        let (lo, hi) = (c.eval(r - eps), c.eval(r + eps));
        assert!((lo.0 - hi.0).abs() < 1e-12);
        assert!((lo.1 - hi.1).abs() < 1e-9);
        assert!((lo.2 - hi.2).abs() < 1e-4);
    }
    // derivatives agree with differences of the cutoff itself
    let h = 1e-5;
    for k in 1..20 {
        let r = R1 + (R2 - R1) * k as f64 / 20.0;
        let (_, d1, d2) = c.eval(r);
        let (p, m, z) = (c.eval(r + h).0, c.eval(r - h).0, c.eval(r).0);
        assert!(((p - m) / (2.0 * h) - d1).abs() < 1e-8);
        assert!(((p - 2.0 * z + m) / (h * h) - d2).abs() < 1e-3);
    }
}

fn flags(s: &str) -> Vec<BoundaryFlag> {
    s.chars().map(|c| if c == 'D' { BoundaryFlag::Dirichlet } else { BoundaryFlag::Neumann }).collect()
}

#[test]
fn hardy_constant_grows_with_the_dirichlet_set() {
    let opts = HardyOptions { tol: 1e-10, ..HardyOptions::default() };
    let lambda = |f: &str| {
        let d = fixtures::square2d().unwrap().with_flags(&flags(f)).unwrap();
        hardy_min_eigenvalue(&mesh_of(&d, 0.25, 2), &d, &opts).unwrap().lambda
    };
    let (nndd, ndnd, nddd, dddd) = (lambda("NNDD"), lambda("NDND"), lambda("NDDD"), lambda("DDDD"));
    let slack = 1e-6;
    assert!(nndd <= nddd * (1.0 + slack) && nddd <= dddd * (1.0 + slack), "{nndd} {nddd} {dddd}");
    assert!(ndnd <= dddd * (1.0 + slack), "{ndnd} {dddd}");
    assert!(nndd > 0.0);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]

    #[test]
    fn norms_scale_linearly(c in -5.0f64..5.0, a in 0.0f64..0.5, m in 0usize..=2) {
        let d = fixtures::lshape2d().unwrap();
        let mesh = mesh_of(&d, 0.25, 1);
        let terms: Terms = vec![(1.0, [0, 0, 0]), (-2.0, [1, 1, 0]), (0.7, [0, 2, 0])];
        let u = Polynomial(terms.clone());
        let cu = Polynomial(terms.iter().map(|(k, e)| (c * k, *e)).collect());
        let spec = WeightedNormSpec::new(m, a).with_depth(3);
        let base = weighted_norm_sq_at_depth(&u, &d, &mesh, &spec).unwrap().sqrt();
        let scaled = weighted_norm_sq_at_depth(&cu, &d, &mesh, &spec).unwrap().sqrt();
        prop_assert!((scaled - c.abs() * base).abs() <= 1e-12 * base.max(1.0));
    }

    #[test]
    fn norms_grow_with_derivative_order(a in 0.0f64..0.5, k in 0.5f64..3.0) {
        let d = fixtures::square2d().unwrap();
        let mesh = mesh_of(&d, 0.5, 1);
        let u = Polynomial(vec![(k, [2, 1, 0]), (1.0, [0, 0, 0])]);
        let n: Vec<f64> = (0..=2)
            .map(|m| weighted_norm_sq_at_depth(&u, &d, &mesh, &WeightedNormSpec::new(m, a).with_depth(3)).unwrap())
            .collect();
        prop_assert!(n[0] > 0.0 && n[0] <= n[1] && n[1] <= n[2]);
    }
}
