//! Corner singular functions `r^k sin(k theta) chi(r)` with `k = pi / alpha`
//! and the manufactured solutions built from them.

use std::f64::consts::PI;

use crate::domain::{Domain, Feature};
use crate::error::{Error, Result};
use crate::fem::field::{Hessian, ScalarField};
use crate::geometry::{self, Point};

/// Quintic cutoff: 1 for `r <= r1`, 0 for `r >= r2`, C2 in between.
#[derive(Debug, Clone, Copy)]
pub struct Cutoff {
    pub r1: f64,
    pub r2: f64,
}

impl Cutoff {
    /// `(chi, chi', chi'')` at radius `r`.
    pub fn eval(&self, r: f64) -> (f64, f64, f64) {
        if r <= self.r1 {
            return (1.0, 0.0, 0.0);
        }
        if r >= self.r2 {
            return (0.0, 0.0, 0.0);
        }
        let w = self.r2 - self.r1;
        let t = (r - self.r1) / w;
        let s = t * t * t * (10.0 - 15.0 * t + 6.0 * t * t);
        let ds = 30.0 * t * t * (1.0 - t) * (1.0 - t);
        let dds = 60.0 * t * (1.0 - t) * (1.0 - 2.0 * t);
        (1.0 - s, -ds / w, -dds / (w * w))
    }
}

/// Value, gradient and Laplacian of a singular function at a point.
#[derive(Debug, Clone, Copy)]
pub struct SingularEval {
    pub value: f64,
    /// `None` at the corner itself when `k < 1` (unbounded gradient).
    pub gradient: Option<Point>,
    pub laplacian: f64,
}

#[derive(Debug, Clone)]
pub struct CornerSingularFunction {
    pub corner: Point,
    pub alpha: f64,
    /// Direction angle of the leg from which `theta` is measured.
    pub theta0: f64,
    pub cutoff: Cutoff,
}

impl CornerSingularFunction {
    pub fn new(corner: Point, alpha: f64, theta0: f64, r1: f64, r2: f64) -> Result<Self> {
        if !(alpha > 0.0 && alpha < 2.0 * PI) {
            return Err(Error::Domain(format!("opening {alpha} outside (0, 2pi)")));
        }
        if !(r1 > 0.0 && r2 > r1) {
            return Err(Error::Domain(format!("cutoff radii must satisfy 0 < R1 < R2, got {r1}, {r2}")));
        }
        Ok(CornerSingularFunction { corner, alpha, theta0, cutoff: Cutoff { r1, r2 } })
    }

    pub fn exponent(&self) -> f64 {
        PI / self.alpha
    }

    fn local(&self, x: &Point) -> (f64, f64) {
        let (c, s) = (self.theta0.cos(), self.theta0.sin());
        let dx = x[0] - self.corner[0];
        let dy = x[1] - self.corner[1];
        (c * dx + s * dy, -s * dx + c * dy)
    }

    fn polar(&self, x: &Point) -> (f64, f64) {
        let (lx, ly) = self.local(x);
        let mut th = ly.atan2(lx);
        if th < 0.0 {
            th += 2.0 * PI;
        }
        ((lx * lx + ly * ly).sqrt(), th)
    }

    /// Pure part `s`, its gradient and Hessian (global frame, xy block).
    fn pure(&self, x: &Point) -> (f64, [f64; 2], [[f64; 2]; 2]) {
        let k = self.exponent();
        let (r, th) = self.polar(x);
        if r == 0.0 {
            return (0.0, [f64::NAN; 2], [[f64::NAN; 2]; 2]);
        }
        let v = r.powf(k) * (k * th).sin();
        // derivatives of the holomorphic z^k: d/dx' s = Im(k z^(k-1)), d/dy' s = Re(k z^(k-1))
        let a1 = k * r.powf(k - 1.0);
        let (re1, im1) = (a1 * ((k - 1.0) * th).cos(), a1 * ((k - 1.0) * th).sin());
        let a2 = k * (k - 1.0) * r.powf(k - 2.0);
        let (re2, im2) = (a2 * ((k - 2.0) * th).cos(), a2 * ((k - 2.0) * th).sin());
        let gl = [im1, re1];
        let hl = [[im2, re2], [re2, -im2]];
        let (c, s) = (self.theta0.cos(), self.theta0.sin());
        let rot = [[c, -s], [s, c]];
        let mut g = [0.0; 2];
        let mut h = [[0.0; 2]; 2];
        for i in 0..2 {
            for a in 0..2 {
                g[i] += rot[i][a] * gl[a];
                for j in 0..2 {
                    for b in 0..2 {
                        h[i][j] += rot[i][a] * hl[a][b] * rot[j][b];
                    }
                }
            }
        }
        (v, g, h)
    }

    /// `(chi, grad chi, hess chi)` in the xy plane.
    fn radial(&self, x: &Point) -> (f64, [f64; 2], [[f64; 2]; 2]) {
        let d = [x[0] - self.corner[0], x[1] - self.corner[1]];
        let r = (d[0] * d[0] + d[1] * d[1]).sqrt();
        let (c, c1, c2) = self.cutoff.eval(r);
        if r == 0.0 || (c1 == 0.0 && c2 == 0.0) {
            return (c, [0.0; 2], [[0.0; 2]; 2]);
        }
        let e = [d[0] / r, d[1] / r];
        let mut h = [[0.0; 2]; 2];
        for i in 0..2 {
            for j in 0..2 {
                let id = if i == j { 1.0 } else { 0.0 };
                h[i][j] = c2 * e[i] * e[j] + c1 / r * (id - e[i] * e[j]);
            }
        }
        (c, [c1 * e[0], c1 * e[1]], h)
    }

    /// Value, gradient and Hessian of `s chi`.
    fn full(&self, x: &Point) -> (f64, [f64; 2], [[f64; 2]; 2]) {
        let (r, _) = self.polar(x);
        if r >= self.cutoff.r2 {
            return (0.0, [0.0; 2], [[0.0; 2]; 2]);
        }
        let (s, gs, hs) = self.pure(x);
        let (c, gc, hc) = self.radial(x);
        let g = [c * gs[0] + s * gc[0], c * gs[1] + s * gc[1]];
        let mut h = [[0.0; 2]; 2];
        for i in 0..2 {
            for j in 0..2 {
                h[i][j] = c * hs[i][j] + gs[i] * gc[j] + gc[i] * gs[j] + s * hc[i][j];
            }
        }
        (s * c, g, h)
    }

    pub fn eval(&self, x: &Point) -> SingularEval {
        let (r, _) = self.polar(x);
        if r == 0.0 {
            let k = self.exponent();
            return SingularEval { value: 0.0, gradient: (k > 1.0).then_some([0.0; 3]), laplacian: 0.0 };
        }
        let (v, g, h) = self.full(x);
        SingularEval { value: v, gradient: Some([g[0], g[1], 0.0]), laplacian: h[0][0] + h[1][1] }
    }

    /// The pure singular part without cutoff.
    pub fn pure_value(&self, x: &Point) -> f64 {
        self.pure(x).0
    }
}

impl ScalarField for CornerSingularFunction {
    fn value(&self, x: &Point) -> f64 {
        self.eval(x).value
    }
    fn gradient(&self, x: &Point) -> Point {
        self.eval(x).gradient.unwrap_or([f64::INFINITY, f64::INFINITY, 0.0])
    }
    fn hessian(&self, x: &Point) -> Hessian {
        let (_, _, h) = self.full(x);
        [[h[0][0], h[0][1], 0.0], [h[1][0], h[1][1], 0.0], [0.0; 3]]
    }
    fn laplacian(&self, x: &Point) -> f64 {
        self.eval(x).laplacian
    }
}

/// Singular function at 2D corner `vertex` of `domain`, with the cutoff
/// support checked to stay away from facets not through the corner.
pub fn manufactured_problem(domain: &Domain, vertex: usize, r1: f64, r2: f64) -> Result<CornerSingularFunction> {
    if domain.dim != 2 {
        return Err(Error::Unsupported("2D corner problem on a 3D domain".into()));
    }
    let alpha = *domain
        .corner_openings
        .get(&Feature::Corner(vertex))
        .ok_or_else(|| Error::Domain(format!("vertex {vertex} has no recorded opening")))?;
    let p = domain.vertices[vertex];
    let out_leg = domain
        .facets
        .iter()
        .find(|f| f.vertices[0] == vertex)
        .ok_or_else(|| Error::Domain(format!("vertex {vertex} is not on the boundary")))?;
    let q = domain.vertices[out_leg.vertices[1]];
    let theta0 = (q[1] - p[1]).atan2(q[0] - p[0]);
    for f in &domain.facets {
        let a = &domain.vertices[f.vertices[0]];
        let b = &domain.vertices[f.vertices[1]];
        let through = f.vertices.contains(&vertex);
        if through {
            let other = if f.vertices[0] == vertex { b } else { a };
            if geometry::dist(&p, other) < r2 {
                return Err(Error::Domain("cutoff ball exits the domain along a corner leg".into()));
            }
        } else if geometry::point_segment_distance(&p, a, b) <= r2 {
            return Err(Error::Domain("cutoff ball exits the domain".into()));
        }
    }
    CornerSingularFunction::new(p, alpha, theta0, r1, r2)
}

/// Dependence of an edge solution on the coordinate along the edge.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Axial {
    /// `w(z) = 1`; the solution is the cross-section function extruded.
    Constant,
    /// `w(z) = sin(pi (z - z0) / len)`, vanishing at both edge endpoints.
    Sine,
}

/// `u(x, y, z) = phi(x, y) w(z)` for a straight singular edge parallel to the
/// z axis.
#[derive(Debug, Clone)]
pub struct EdgeSingularSolution {
    pub cross: CornerSingularFunction,
    pub axial: Axial,
    pub z0: f64,
    pub len: f64,
}

impl EdgeSingularSolution {
    fn w(&self, z: f64) -> (f64, f64, f64) {
        match self.axial {
            Axial::Constant => (1.0, 0.0, 0.0),
            Axial::Sine => {
                let c = PI / self.len;
                let t = c * (z - self.z0);
                (t.sin(), c * t.cos(), -c * c * t.sin())
            }
        }
    }
}

impl ScalarField for EdgeSingularSolution {
    fn value(&self, x: &Point) -> f64 {
        self.cross.value(x) * self.w(x[2]).0
    }
    fn gradient(&self, x: &Point) -> Point {
        let (w, w1, _) = self.w(x[2]);
        let e = self.cross.eval(x);
        let g = e.gradient.unwrap_or([f64::INFINITY, f64::INFINITY, 0.0]);
        [g[0] * w, g[1] * w, e.value * w1]
    }
    fn hessian(&self, x: &Point) -> Hessian {
        let (w, w1, w2) = self.w(x[2]);
        let h = self.cross.hessian(x);
        let e = self.cross.eval(x);
        let g = e.gradient.unwrap_or([f64::INFINITY, f64::INFINITY, 0.0]);
        [
            [h[0][0] * w, h[0][1] * w, g[0] * w1],
            [h[1][0] * w, h[1][1] * w, g[1] * w1],
            [g[0] * w1, g[1] * w1, e.value * w2],
        ]
    }
    fn laplacian(&self, x: &Point) -> f64 {
        let (w, _, w2) = self.w(x[2]);
        let e = self.cross.eval(x);
        e.laplacian * w + e.value * w2
    }
}

/// Edge-singular manufactured solution for a singular edge parallel to the
/// z axis: the corner function of the edge's cross-section times an axial
/// profile. A cutoff disk of radius `r2` must fit inside the cross-section;
/// this is not checked. Radii beyond the domain give the harmonic
/// `r^(pi/alpha) sin(pi theta/alpha)` itself.
pub fn edge_manufactured_problem(
    domain: &Domain,
    edge: usize,
    r1: f64,
    r2: f64,
    axial: Axial,
) -> Result<EdgeSingularSolution> {
    if domain.dim != 3 || edge >= domain.singular_edges.len() {
        return Err(Error::Domain(format!("singular edge {edge} does not exist")));
    }
    let [a, b] = domain.singular_edges[edge];
    let (pa, pb) = (domain.vertices[a], domain.vertices[b]);
    let (lo, hi) = if pa[2] <= pb[2] { (pa, pb) } else { (pb, pa) };
    let len = hi[2] - lo[2];
    if len <= 0.0 || (hi[0] - lo[0]).abs() > 1e-12 * len || (hi[1] - lo[1]).abs() > 1e-12 * len {
        return Err(Error::Unsupported("edge solution needs an edge parallel to the z axis".into()));
    }
    let alpha = *domain
        .corner_openings
        .get(&Feature::Edge(edge))
        .ok_or_else(|| Error::Domain(format!("edge {edge} has no recorded opening")))?;
    // in-plane direction of each facet through the edge, pointing away from it
    let mut legs = Vec::new();
    for f in &domain.facets {
        let n = f.vertices.len();
        let has = (0..n).any(|i| {
            let (u, v) = (f.vertices[i], f.vertices[(i + 1) % n]);
            (u, v) == (a, b) || (u, v) == (b, a)
        });
        if has {
            let pts: Vec<Point> = f.vertices.iter().map(|&v| domain.vertices[v]).collect();
            let c = geometry::centroid(&pts);
            legs.push((c[1] - lo[1]).atan2(c[0] - lo[0]));
        }
    }
    if legs.len() != 2 {
        return Err(Error::Domain(format!("edge {edge} is not shared by exactly two facets")));
    }
    let wrap = |t: f64| t.rem_euclid(2.0 * PI);
    let close = |x: f64, y: f64| {
        let d = wrap(x - y);
        d.min(2.0 * PI - d) < 1e-6
    };
    let theta0 = if close(legs[0] + alpha, legs[1]) { legs[0] } else { legs[1] };
    let cross = CornerSingularFunction::new(lo, alpha, theta0, r1, r2)?;
    Ok(EdgeSingularSolution { cross, axial, z0: lo[2], len })
}
