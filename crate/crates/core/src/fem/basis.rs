//! Lagrange shape functions of degree 1 to 3 on equispaced nodes.
//!
//! Nodes are ordered vertices first, then edge nodes (edges in the order
//! `(0,1), (0,2), (0,3), (1,2), (1,3), (2,3)`, each walked from the lower to
//! the higher local vertex), then face nodes, then interior nodes.

use crate::error::{Error, Result};

pub const EDGES_2D: [(usize, usize); 3] = [(0, 1), (0, 2), (1, 2)];
pub const EDGES_3D: [(usize, usize); 6] = [(0, 1), (0, 2), (0, 3), (1, 2), (1, 3), (2, 3)];

/// Where a local node lives.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum NodeKind {
    Vertex(usize),
    /// Local edge index and position `1..m` counted from the edge's first vertex.
    Edge(usize, usize),
    /// Local face index (the face opposite that vertex) in 3D.
    Face(usize),
    Interior,
}

#[derive(Debug, Clone)]
pub struct LagrangeBasis {
    pub m: usize,
    pub dim: usize,
    /// Barycentric multi-index of each node (sums to `m`).
    pub nodes: Vec<[usize; 4]>,
    pub kinds: Vec<NodeKind>,
}

impl LagrangeBasis {
    pub fn new(m: usize, dim: usize) -> Result<Self> {
        if !(1..=3).contains(&m) {
            return Err(Error::Unsupported(format!("polynomial degree {m}")));
        }
        if dim != 2 && dim != 3 {
            return Err(Error::Unsupported(format!("dimension {dim}")));
        }
        let nb = dim + 1;
        let mut nodes = Vec::new();
        let mut kinds = Vec::new();
        for i in 0..nb {
            let mut a = [0; 4];
            a[i] = m;
            nodes.push(a);
            kinds.push(NodeKind::Vertex(i));
        }
        let edges: &[(usize, usize)] = if dim == 2 { &EDGES_2D } else { &EDGES_3D };
        for (e, &(i, j)) in edges.iter().enumerate() {
            for k in 1..m {
                let mut a = [0; 4];
                a[i] = m - k;
                a[j] = k;
                nodes.push(a);
                kinds.push(NodeKind::Edge(e, k));
            }
        }
        if m == 3 {
            if dim == 2 {
                nodes.push([1, 1, 1, 0]);
                kinds.push(NodeKind::Interior);
            } else {
                for opp in 0..4 {
                    let mut a = [1; 4];
                    a[opp] = 0;
                    nodes.push(a);
                    kinds.push(NodeKind::Face(opp));
                }
            }
        }
        Ok(LagrangeBasis { m, dim, nodes, kinds })
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    /// Reference coordinates of node `k`.
    pub fn node_point(&self, k: usize) -> [f64; 3] {
        let a = self.nodes[k];
        let mut x = [0.0; 3];
        for d in 0..self.dim {
            x[d] = a[d + 1] as f64 / self.m as f64;
        }
        x
    }

    fn barycentric(&self, x: &[f64; 3]) -> [f64; 4] {
        let mut l = [0.0; 4];
        l[0] = 1.0 - x[..self.dim].iter().sum::<f64>();
        l[1..(self.dim + 1)].copy_from_slice(&x[..self.dim]);
        l
    }

    /// Values of all shape functions at reference point `x`.
    pub fn eval(&self, x: &[f64; 3], out: &mut [f64]) {
        let l = self.barycentric(x);
        for (k, a) in self.nodes.iter().enumerate() {
            let mut v = 1.0;
            for i in 0..=self.dim {
                v *= factor(self.m, a[i], l[i]).0;
            }
            out[k] = v;
        }
    }

    /// Reference gradients `d phi_k / d x_d`, written to `out[k][d]`.
    pub fn grad(&self, x: &[f64; 3], out: &mut [[f64; 3]]) {
        let l = self.barycentric(x);
        let nb = self.dim + 1;
        for (k, a) in self.nodes.iter().enumerate() {
            let mut vals = [0.0; 4];
            let mut ders = [0.0; 4];
            for i in 0..nb {
                let (v, d, _) = factor(self.m, a[i], l[i]);
                vals[i] = v;
                ders[i] = d;
            }
            // d/dlambda_i of the product
            let mut dl = [0.0; 4];
            for i in 0..nb {
                let mut p = ders[i];
                for j in 0..nb {
                    if j != i {
                        p *= vals[j];
                    }
                }
                dl[i] = p;
            }
            let mut g = [0.0; 3];
            for d in 0..self.dim {
                g[d] = dl[d + 1] - dl[0];
            }
            out[k] = g;
        }
    }

    /// Reference Hessians of all shape functions.
    pub fn hess(&self, x: &[f64; 3], out: &mut [[[f64; 3]; 3]]) {
        let l = self.barycentric(x);
        let nb = self.dim + 1;
        for (k, a) in self.nodes.iter().enumerate() {
            let mut f = [(0.0, 0.0, 0.0); 4];
            for i in 0..nb {
                f[i] = factor(self.m, a[i], l[i]);
            }
            // second derivatives with respect to the barycentrics
            let mut bl = [[0.0; 4]; 4];
            for i in 0..nb {
                for j in 0..nb {
                    let mut p = if i == j { f[i].2 } else { f[i].1 * f[j].1 };
                    for (q, fq) in f.iter().enumerate().take(nb) {
                        if q != i && q != j {
                            p *= fq.0;
                        }
                    }
                    bl[i][j] = p;
                }
            }
            let mut h = [[0.0; 3]; 3];
            for d in 0..self.dim {
                for e in 0..self.dim {
                    h[d][e] = bl[d + 1][e + 1] - bl[d + 1][0] - bl[0][e + 1] + bl[0][0];
                }
            }
            out[k] = h;
        }
    }
}

/// `prod_{j<a} (m l - j) / (j + 1)` and its first two derivatives in `l`.
fn factor(m: usize, a: usize, l: f64) -> (f64, f64, f64) {
    let mut v = 1.0;
    let mut d = 0.0;
    let mut dd = 0.0;
    let mf = m as f64;
    for j in 0..a {
        let t = (mf * l - j as f64) / (j as f64 + 1.0);
        let dt = mf / (j as f64 + 1.0);
        dd = dd * t + 2.0 * d * dt;
        d = d * t + v * dt;
        v *= t;
    }
    (v, d, dd)
}
