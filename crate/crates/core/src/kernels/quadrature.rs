use std::f64::consts::PI;

use num_complex::Complex64 as C64;

use super::Interval;

/// Default Clenshaw–Curtis node count.
pub const CC_NODES: usize = 257;

/// Clenshaw–Curtis rule on an interval.
#[derive(Clone, Debug)]
pub struct ClenshawCurtis {
    nodes: Vec<f64>,
    weights: Vec<f64>,
}

impl ClenshawCurtis {
    /// Rule with `n + 1` nodes, `n` even and at least 2.
    pub fn new(domain: Interval, n: usize) -> Self {
        let n = (n.max(2) + 1) & !1;
        let half = 0.5 * domain.len();
        let mut nodes = Vec::with_capacity(n + 1);
        let mut weights = Vec::with_capacity(n + 1);
        for j in 0..=n {
            let theta = PI * j as f64 / n as f64;
            let mut s = 0.0;
            for k in 1..=n / 2 {
                let b = if 2 * k == n { 1.0 } else { 2.0 };
                s += b / (4.0 * (k * k) as f64 - 1.0) * (2.0 * k as f64 * theta).cos();
            }
            let c = if j == 0 || j == n { 1.0 } else { 2.0 };
            nodes.push(domain.from_unit(theta.cos()));
            weights.push(half * c / n as f64 * (1.0 - s));
        }
        Self { nodes, weights }
    }

    pub fn default_for(domain: Interval) -> Self {
        Self::new(domain, CC_NODES - 1)
    }

    pub fn nodes(&self) -> &[f64] {
        &self.nodes
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn integrate<F: Fn(f64) -> C64>(&self, f: F) -> C64 {
        self.nodes.iter().zip(&self.weights).map(|(&x, &w)| f(x) * w).sum()
    }
}
