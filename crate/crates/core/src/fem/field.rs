//! Scalar fields with closed-form derivatives.

use crate::geometry::Point;

pub type Hessian = [[f64; 3]; 3];

pub trait ScalarField: Sync {
    fn value(&self, x: &Point) -> f64;

    fn gradient(&self, x: &Point) -> Point;

    /// Second derivatives. The default differentiates the gradient
    /// numerically; manufactured solutions override it.
    fn hessian(&self, x: &Point) -> Hessian {
        let h = 1e-5;
        let mut out = [[0.0; 3]; 3];
        for j in 0..3 {
            let mut xp = *x;
            let mut xm = *x;
            xp[j] += h;
            xm[j] -= h;
            let gp = self.gradient(&xp);
            let gm = self.gradient(&xm);
            for i in 0..3 {
                out[i][j] = (gp[i] - gm[i]) / (2.0 * h);
            }
        }
        out
    }

    fn laplacian(&self, x: &Point) -> f64 {
        let h = self.hessian(x);
        h[0][0] + h[1][1] + h[2][2]
    }
}

/// A field built from closures.
pub struct FnField<V, G, H>
where
    V: Fn(&Point) -> f64 + Sync,
    G: Fn(&Point) -> Point + Sync,
    H: Fn(&Point) -> Hessian + Sync,
{
    pub value: V,
    pub gradient: G,
    pub hessian: H,
}

impl<V, G, H> ScalarField for FnField<V, G, H>
where
    V: Fn(&Point) -> f64 + Sync,
    G: Fn(&Point) -> Point + Sync,
    H: Fn(&Point) -> Hessian + Sync,
{
    fn value(&self, x: &Point) -> f64 {
        (self.value)(x)
    }
    fn gradient(&self, x: &Point) -> Point {
        (self.gradient)(x)
    }
    fn hessian(&self, x: &Point) -> Hessian {
        (self.hessian)(x)
    }
}

#[derive(Debug, Clone, Copy)]
pub struct Constant(pub f64);

impl ScalarField for Constant {
    fn value(&self, _: &Point) -> f64 {
        self.0
    }
    fn gradient(&self, _: &Point) -> Point {
        [0.0; 3]
    }
    fn hessian(&self, _: &Point) -> Hessian {
        [[0.0; 3]; 3]
    }
}

/// `-laplacian(u)`, the load for a manufactured solution `u`.
pub struct NegLaplacian<'a, F: ScalarField + ?Sized>(pub &'a F);

impl<F: ScalarField + ?Sized> ScalarField for NegLaplacian<'_, F> {
    fn value(&self, x: &Point) -> f64 {
        -self.0.laplacian(x)
    }
    fn gradient(&self, _: &Point) -> Point {
        [f64::NAN; 3]
    }
}

/// Polynomial `sum c_k x^a y^b z^c` given as `(c_k, [a, b, c])` terms.
#[derive(Debug, Clone)]
pub struct Polynomial(pub Vec<(f64, [i32; 3])>);

impl ScalarField for Polynomial {
    fn value(&self, x: &Point) -> f64 {
        self.0.iter().map(|(c, e)| c * x[0].powi(e[0]) * x[1].powi(e[1]) * x[2].powi(e[2])).sum()
    }
    fn gradient(&self, x: &Point) -> Point {
        let mut g = [0.0; 3];
        for (c, e) in &self.0 {
            for d in 0..3 {
                if e[d] == 0 {
                    continue;
                }
                let mut t = c * e[d] as f64;
                for k in 0..3 {
                    t *= x[k].powi(if k == d { e[k] - 1 } else { e[k] });
                }
                g[d] += t;
            }
        }
        g
    }
    fn hessian(&self, x: &Point) -> Hessian {
        let mut h = [[0.0; 3]; 3];
        for (c, e) in &self.0 {
            for i in 0..3 {
                for j in 0..3 {
                    let mut ee = *e;
                    let mut t = *c;
                    t *= ee[i] as f64;
                    ee[i] -= 1;
                    t *= ee[j] as f64;
                    ee[j] -= 1;
                    if t == 0.0 {
                        continue;
                    }
                    h[i][j] += t * x[0].powi(ee[0]) * x[1].powi(ee[1]) * x[2].powi(ee[2]);
                }
            }
        }
        h
    }
}
