//! Weighted Sobolev norms `sum_{|b| <= m} || r^{|b| - a} d^b u ||^2`, where
//! `r` is the distance to the singular set.
//!
//! Cells touching the singular set are integrated with a composite rule:
//! the reference simplex is split recursively (midpoint 4-split in 2D,
//! 8-split in 3D), recursing only into children that touch the singular
//! vertices or the edges joining them, down to a fixed depth.

use std::sync::OnceLock;

use crate::domain::Domain;
use crate::error::{Error, Result};
use crate::fem::assemble::AffineMap;
use crate::fem::dofmap::DofMap;
use crate::fem::field::{Hessian, ScalarField};
use crate::fem::quadrature::{quadrature, Quadrature};
use crate::fem::sparse::det_sum;
use crate::geometry::Point;
use crate::mesh::SimplicialMesh;

pub const DEFAULT_DEPTH: usize = 6;

/// Relative growth per extra depth below which a norm counts as stable.
pub const STABILITY_FACTOR: f64 = 1.02;

type Bary = [f64; 4];

/// Composite rules for each subset of singular local vertices.
pub struct CompositeRules {
    dim: usize,
    depth: usize,
    base: Quadrature,
    rules: Vec<OnceLock<Quadrature>>,
}

impl CompositeRules {
    pub fn new(dim: usize, order: usize, depth: usize) -> Result<Self> {
        let base = quadrature(order, dim)?;
        let rules = (0..(1usize << (dim + 1))).map(|_| OnceLock::new()).collect();
        Ok(CompositeRules { dim, depth, base, rules })
    }

    pub fn base(&self) -> &Quadrature {
        &self.base
    }

    /// Rule for a cell whose local vertices in `mask` lie on the singular set.
    pub fn get(&self, mask: usize) -> &Quadrature {
        if mask == 0 || self.depth == 0 {
            return &self.base;
        }
        self.rules[mask].get_or_init(|| composite_rule(self.dim, mask, self.depth, &self.base))
    }

    /// Rule for cell `c` of `mesh`.
    pub fn for_cell(&self, mesh: &SimplicialMesh, c: usize) -> &Quadrature {
        let mask = mesh
            .cell(c)
            .iter()
            .enumerate()
            .filter(|(_, &v)| mesh.features[v].is_some())
            .fold(0, |m, (i, _)| m | (1 << i));
        self.get(mask)
    }
}

/// Composite rule on the reference simplex refined toward the vertices in
/// `mask` and the edges between them.
pub fn composite_rule(dim: usize, mask: usize, depth: usize, base: &Quadrature) -> Quadrature {
    let nb = dim + 1;
    let root: Vec<Bary> = (0..nb)
        .map(|i| {
            let mut b = [0.0; 4];
            b[i] = 1.0;
            b
        })
        .collect();
    let mut out = Quadrature { dim, points: Vec::new(), weights: Vec::new() };
    let mut stack = vec![(root, 0usize)];
    let shrink = 1.0 / (1usize << dim) as f64;
    while let Some((s, level)) = stack.pop() {
        if level < depth && touches(&s, mask, nb) {
            for child in subdivide(&s, dim) {
                stack.push((child, level + 1));
            }
            continue;
        }
        let scale = shrink.powi(level as i32);
        for (p, w) in base.points.iter().zip(&base.weights) {
            let mut beta = [0.0; 4];
            beta[0] = 1.0 - p[..dim].iter().sum::<f64>();
            beta[1..nb].copy_from_slice(&p[..dim]);
            let mut x = [0.0; 3];
            for (i, v) in s.iter().enumerate() {
                for d in 0..dim {
                    x[d] += beta[i] * v[d + 1];
                }
            }
            out.points.push(x);
            out.weights.push(w * scale);
        }
    }
    out
}

fn touches(s: &[Bary], mask: usize, nb: usize) -> bool {
    s.iter().any(|v| {
        let support: Vec<usize> = (0..nb).filter(|&i| v[i] > 1e-14).collect();
        support.len() <= 2 && support.iter().all(|&i| mask & (1 << i) != 0)
    })
}

fn mid(a: &Bary, b: &Bary) -> Bary {
    [0.5 * (a[0] + b[0]), 0.5 * (a[1] + b[1]), 0.5 * (a[2] + b[2]), 0.5 * (a[3] + b[3])]
}

fn subdivide(s: &[Bary], dim: usize) -> Vec<Vec<Bary>> {
    if dim == 2 {
        let (a, b, c) = (s[0], s[1], s[2]);
        let (ab, ac, bc) = (mid(&a, &b), mid(&a, &c), mid(&b, &c));
        vec![vec![a, ab, ac], vec![ab, b, bc], vec![ac, bc, c], vec![ab, bc, ac]]
    } else {
        let (a, b, c, d) = (s[0], s[1], s[2], s[3]);
        let (ab, ac, ad) = (mid(&a, &b), mid(&a, &c), mid(&a, &d));
        let (bc, bd, cd) = (mid(&b, &c), mid(&b, &d), mid(&c, &d));
        vec![
            vec![a, ab, ac, ad],
            vec![ab, b, bc, bd],
            vec![ac, bc, c, cd],
            vec![ad, bd, cd, d],
            vec![ab, ac, ad, bd],
            vec![ab, ac, bc, bd],
            vec![ac, ad, bd, cd],
            vec![ac, bc, bd, cd],
        ]
    }
}

#[derive(Debug, Clone, Copy)]
pub struct WeightedNormSpec {
    /// Highest derivative order, 0 to 2.
    pub m: usize,
    /// Weight index.
    pub a: f64,
    pub depth: usize,
    pub order: usize,
}

impl WeightedNormSpec {
    pub fn new(m: usize, a: f64) -> Self {
        WeightedNormSpec { m, a, depth: DEFAULT_DEPTH, order: 6 }
    }

    pub fn with_depth(mut self, depth: usize) -> Self {
        self.depth = depth;
        self
    }
}

/// Norm value together with its change under one extra refinement depth.
#[derive(Debug, Clone, Copy)]
pub struct WeightedNorm {
    pub value: f64,
    pub refined: f64,
    pub rel_change: f64,
}

impl WeightedNorm {
    pub fn is_stable(&self) -> bool {
        self.refined <= self.value * STABILITY_FACTOR && self.refined >= self.value / STABILITY_FACTOR
    }
}

/// Squared integrand from value, gradient and Hessian at distance `r`.
fn density(m: usize, a: f64, dim: usize, r: f64, v: f64, g: &Point, h: &Hessian) -> f64 {
    let mut s = r.powf(-2.0 * a) * v * v;
    if m >= 1 {
        s += r.powf(2.0 - 2.0 * a) * (g[0] * g[0] + g[1] * g[1] + g[2] * g[2]);
    }
    if m >= 2 {
        let mut h2 = 0.0;
        for i in 0..dim {
            for j in i..dim {
                h2 += h[i][j] * h[i][j];
            }
        }
        s += r.powf(4.0 - 2.0 * a) * h2;
    }
    s
}

fn check_spec(spec: &WeightedNormSpec) -> Result<()> {
    if spec.m > 2 {
        return Err(Error::Unsupported(format!("weighted norm of order {}", spec.m)));
    }
    Ok(())
}

/// Squared norm at a fixed depth for a closed-form field.
pub fn weighted_norm_sq_at_depth(
    u: &dyn ScalarField,
    domain: &Domain,
    mesh: &SimplicialMesh,
    spec: &WeightedNormSpec,
) -> Result<f64> {
    check_spec(spec)?;
    let rules = CompositeRules::new(mesh.dim, spec.order, spec.depth)?;
    let zero_h = [[0.0; 3]; 3];
    let total = det_sum(mesh.num_cells(), |c| {
        let map = match AffineMap::new(mesh.dim, &mesh.cell_points(c)) {
            Ok(m) => m,
            Err(_) => return f64::NAN,
        };
        let q = rules.for_cell(mesh, c);
        let mut s = 0.0;
        for (p, w) in q.points.iter().zip(&q.weights) {
            let x = map.map(p);
            let r = domain.singular_distance(&x);
            let g = if spec.m >= 1 { u.gradient(&x) } else { [0.0; 3] };
            let h = if spec.m >= 2 { u.hessian(&x) } else { zero_h };
            s += w * density(spec.m, spec.a, mesh.dim, r, u.value(&x), &g, &h);
        }
        s * map.abs_det()
    });
    if total.is_nan() {
        return Err(Error::Numerical("weighted norm integral is NaN".into()));
    }
    Ok(total)
}

/// Norm at `spec.depth` and at `spec.depth + 1`.
pub fn weighted_norm(
    u: &dyn ScalarField,
    domain: &Domain,
    mesh: &SimplicialMesh,
    spec: &WeightedNormSpec,
) -> Result<WeightedNorm> {
    let value = weighted_norm_sq_at_depth(u, domain, mesh, spec)?.sqrt();
    let refined = weighted_norm_sq_at_depth(u, domain, mesh, &spec.with_depth(spec.depth + 1))?.sqrt();
    Ok(WeightedNorm { value, refined, rel_change: (refined - value).abs() / value.max(f64::MIN_POSITIVE) })
}

/// Norm of a finite-element function (derivative order up to the degree).
pub fn weighted_norm_fem(
    coeffs: &[f64],
    dofmap: &DofMap,
    domain: &Domain,
    mesh: &SimplicialMesh,
    spec: &WeightedNormSpec,
) -> Result<f64> {
    check_spec(spec)?;
    let rules = CompositeRules::new(mesh.dim, spec.order, spec.depth)?;
    let nl = dofmap.n_local();
    let total = det_sum(mesh.num_cells(), |c| {
        let map = match AffineMap::new(mesh.dim, &mesh.cell_points(c)) {
            Ok(m) => m,
            Err(_) => return f64::NAN,
        };
        let dofs = dofmap.local(c);
        let q = rules.for_cell(mesh, c);
        let mut vals = vec![0.0; nl];
        let mut grads = vec![[0.0; 3]; nl];
        let mut hess = vec![[[0.0; 3]; 3]; nl];
        let mut s = 0.0;
        for (p, w) in q.points.iter().zip(&q.weights) {
            dofmap.basis.eval(p, &mut vals);
            dofmap.basis.grad(p, &mut grads);
            dofmap.basis.hess(p, &mut hess);
            let mut v = 0.0;
            let mut g = [0.0; 3];
            let mut h = [[0.0; 3]; 3];
            for k in 0..nl {
                let ck = coeffs[dofs[k]];
                v += ck * vals[k];
                let gk = map.grad(&grads[k]);
                let hk = map.hess(&hess[k]);
                for i in 0..3 {
                    g[i] += ck * gk[i];
                    for j in 0..3 {
                        h[i][j] += ck * hk[i][j];
                    }
                }
            }
            let x = map.map(p);
            let r = domain.singular_distance(&x);
            s += w * density(spec.m, spec.a, mesh.dim, r, v, &g, &h);
        }
        s * map.abs_det()
    });
    if total.is_nan() {
        return Err(Error::Numerical("weighted norm integral is NaN".into()));
    }
    Ok(total.sqrt())
}

#[derive(Debug, Clone, Copy)]
pub struct SweepRow {
    pub depth: usize,
    pub value: f64,
    pub rel_change: f64,
}

/// Norm values over a range of quadrature depths.
pub fn depth_sweep(
    u: &dyn ScalarField,
    domain: &Domain,
    mesh: &SimplicialMesh,
    m: usize,
    a: f64,
    depths: std::ops::RangeInclusive<usize>,
) -> Result<Vec<SweepRow>> {
    let mut rows: Vec<SweepRow> = Vec::new();
    for d in depths {
        let spec = WeightedNormSpec::new(m, a).with_depth(d);
        let value = weighted_norm_sq_at_depth(u, domain, mesh, &spec)?.sqrt();
        let rel_change = rows.last().map_or(f64::NAN, |p| (value - p.value) / p.value);
        rows.push(SweepRow { depth: d, value, rel_change });
    }
    Ok(rows)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SweepVerdict {
    /// Last relative change below the stability factor.
    Stable,
    /// Strictly increasing values with non-shrinking increments.
    Diverging,
    Undecided,
}

pub fn sweep_verdict(rows: &[SweepRow]) -> SweepVerdict {
    if rows.len() < 3 {
        return SweepVerdict::Undecided;
    }
    let last = rows[rows.len() - 1].rel_change;
    let increasing = rows.windows(2).all(|w| w[1].value > w[0].value);
    let increments: Vec<f64> = rows.windows(2).map(|w| w[1].value - w[0].value).collect();
    let growing = increments.windows(2).all(|w| w[1] >= w[0]);
    if increasing && growing && last >= STABILITY_FACTOR - 1.0 {
        SweepVerdict::Diverging
    } else if last.abs() < STABILITY_FACTOR - 1.0 {
        SweepVerdict::Stable
    } else {
        SweepVerdict::Undecided
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn composite_rule_integrates_polynomials() {
        for dim in [2, 3] {
            let base = quadrature(4, dim).unwrap();
            for mask in [1usize, 3, 5] {
                let q = composite_rule(dim, mask, 3, &base);
                let vol: f64 = q.weights.iter().sum();
                let exact = if dim == 2 { 0.5 } else { 1.0 / 6.0 };
                assert!((vol - exact).abs() < 1e-14);
                let x2y: f64 = q.points.iter().zip(&q.weights).map(|(p, w)| w * p[0] * p[0] * p[1]).sum();
                let exact = if dim == 2 { 2.0 / 120.0 } else { 2.0 / 720.0 };
                assert!((x2y - exact).abs() < 1e-15, "dim={dim} mask={mask}");
            }
        }
    }
}
