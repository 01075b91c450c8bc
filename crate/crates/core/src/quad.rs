//! Gauss-Legendre quadrature on rectangular parameter domains.

use crate::error::{Error, Result};

/// One-dimensional Gauss-Legendre rule on [-1, 1], applied as a tensor
/// product over a parameter rectangle. Order 64 integrates the smooth
/// contact integrands far below the tolerances used anywhere in the
/// crate; lower orders trade accuracy for speed in bulk sampling.
#[derive(Debug, Clone)]
pub struct Quadrature {
    nodes: Vec<f64>,
    weights: Vec<f64>,
}

impl Quadrature {
    pub const DEFAULT_ORDER: usize = 64;

    /// Builds the rule of the given order (number of 1D nodes).
    pub fn new(order: usize) -> Result<Self> {
        if order < 2 || order > 1024 {
            return Err(Error::domain(format!(
                "quadrature order {order} outside supported range 2..=1024"
            )));
        }
        let mut nodes = vec![0.0; order];
        let mut weights = vec![0.0; order];
        let n = order;
        for i in 0..(n + 1) / 2 {
            // Chebyshev-based initial guess, then Newton on P_n.
            let mut x = (std::f64::consts::PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
            for _ in 0..100 {
                let (p, d) = legendre_with_derivative(n, x);
                let dx = p / d;
                x -= dx;
                if dx.abs() < 1e-15 {
                    break;
                }
            }
            let (_, dp) = legendre_with_derivative(n, x);
            let w = 2.0 / ((1.0 - x * x) * dp * dp);
            nodes[i] = -x;
            nodes[n - 1 - i] = x;
            weights[i] = w;
            weights[n - 1 - i] = w;
        }
        Ok(Self { nodes, weights })
    }

    pub fn order(&self) -> usize {
        self.nodes.len()
    }

    /// Nodes and weights mapped to [a, b].
    pub fn mapped(&self, a: f64, b: f64) -> impl Iterator<Item = (f64, f64)> + '_ {
        let mid = 0.5 * (a + b);
        let half = 0.5 * (b - a);
        self.nodes
            .iter()
            .zip(&self.weights)
            .map(move |(&x, &w)| (mid + half * x, w * half))
    }

    /// Integrates a vector-valued integrand over the rectangle
    /// [u0, u1] x [v0, v1]. Contributions are accumulated in node order
    /// with pairwise summation, so the result is identical for a fixed
    /// order regardless of threading elsewhere.
    pub fn integrate<const K: usize>(
        &self,
        domain: [[f64; 2]; 2],
        mut f: impl FnMut(f64, f64) -> [f64; K],
    ) -> [f64; K] {
        let [u_range, v_range] = domain;
        let n = self.order();
        let mut terms: Vec<[f64; K]> = Vec::with_capacity(n * n);
        for (u, wu) in self.mapped(u_range[0], u_range[1]) {
            for (v, wv) in self.mapped(v_range[0], v_range[1]) {
                let val = f(u, v);
                let mut term = [0.0; K];
                for k in 0..K {
                    term[k] = val[k] * wu * wv;
                }
                terms.push(term);
            }
        }
        pairwise_sum(&terms)
    }
}

fn legendre_with_derivative(n: usize, x: f64) -> (f64, f64) {
    let mut p0 = 1.0;
    let mut p1 = x;
    for k in 2..=n {
        let kf = k as f64;
        let p2 = ((2.0 * kf - 1.0) * x * p1 - (kf - 1.0) * p0) / kf;
        p0 = p1;
        p1 = p2;
    }
    let d = n as f64 * (x * p1 - p0) / (x * x - 1.0);
    (p1, d)
}

/// Pairwise (cascade) summation of fixed-width rows. Deterministic for a
/// given slice and far more accurate than a running sum on long inputs.
pub fn pairwise_sum<const K: usize>(terms: &[[f64; K]]) -> [f64; K] {
    match terms.len() {
        0 => [0.0; K],
        1 => terms[0],
        n => {
            let (a, b) = terms.split_at(n / 2);
            let sa = pairwise_sum(a);
            let sb = pairwise_sum(b);
            let mut out = [0.0; K];
            for k in 0..K {
                out[k] = sa[k] + sb[k];
            }
            out
        }
    }
}

/// Pairwise summation of scalars.
pub fn pairwise_sum_scalar(terms: &[f64]) -> f64 {
    match terms.len() {
        0 => 0.0,
        1 => terms[0],
        n => {
            let (a, b) = terms.split_at(n / 2);
            pairwise_sum_scalar(a) + pairwise_sum_scalar(b)
        }
    }
}
