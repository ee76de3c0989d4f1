//! Fundamental matrices of linear systems `V' = M(x) V` on an interval.
//!
//! Both `V` (with `V(lo) = I`) and its inverse `W` (with `W' = -W M`,
//! `W(lo) = I`) are integrated by classical RK4 through the Chebyshev–Lobatto
//! nodes, doubling the step count until successive node values agree.

use nalgebra::DMatrix;
use num_complex::Complex64 as C64;

use crate::error::{Result, StarError};
use crate::kernels::{Interval, UnivariateFn};

/// Interpolation degree of solver outputs.
pub const OUTPUT_DEGREE: usize = 64;
/// Initial RK4 step count across the whole interval.
pub const INITIAL_STEPS: usize = 512;
const MAX_STEPS: usize = 1 << 17;
const CONDITION_LIMIT: f64 = 1e13;

/// Node values of `V` and `W = V⁻¹`.
#[derive(Clone, Debug)]
pub struct Fundamental {
    domain: Interval,
    /// Lobatto nodes in interpolation order (descending).
    nodes: Vec<f64>,
    v: Vec<DMatrix<C64>>,
    w: Vec<DMatrix<C64>>,
    steps: usize,
    condition: f64,
}

impl Fundamental {
    /// Solves with step doubling until node values differ by less than
    /// `tol / 10` relative to their size.
    pub fn solve<F>(domain: Interval, dim: usize, generator: F, tol: f64) -> Result<Self>
    where
        F: Fn(f64) -> DMatrix<C64> + Sync,
    {
        let nodes = domain.lobatto_points(OUTPUT_DEGREE);
        let target = tol.max(1e-15) / 10.0;
        let mut n = INITIAL_STEPS;
        let (mut v, mut w) = sweep(domain, dim, &generator, &nodes, n);
        loop {
            let (v2, w2) = sweep(domain, dim, &generator, &nodes, 2 * n);
            let diff = max_rel_diff(&v, &v2).max(max_rel_diff(&w, &w2));
            n *= 2;
            v = v2;
            w = w2;
            if diff.is_finite() && diff < target {
                break;
            }
            if n >= MAX_STEPS || !diff.is_finite() {
                return Err(StarError::StepControl { steps: n, difference: diff, target });
            }
        }
        let mut condition: f64 = 1.0;
        for (i, (vi, wi)) in v.iter().zip(&w).enumerate() {
            let c = vi.norm() * wi.norm() / dim as f64;
            if !c.is_finite() || c > CONDITION_LIMIT {
                return Err(StarError::SingularFundamental { x: nodes[i], condition: c });
            }
            condition = condition.max(c);
        }
        Ok(Self { domain, nodes, v, w, steps: n, condition })
    }

    pub fn domain(&self) -> Interval {
        self.domain
    }

    pub fn nodes(&self) -> &[f64] {
        &self.nodes
    }

    pub fn v_at_nodes(&self) -> &[DMatrix<C64>] {
        &self.v
    }

    pub fn w_at_nodes(&self) -> &[DMatrix<C64>] {
        &self.w
    }

    /// Final RK4 step count.
    pub fn steps(&self) -> usize {
        self.steps
    }

    /// Largest `‖V‖_F ‖W‖_F / dim` over the nodes.
    pub fn condition(&self) -> f64 {
        self.condition
    }

    /// Interpolates `x ↦ f(x, node index)` over the nodes.
    pub fn interpolate_nodes(&self, f: impl Fn(usize) -> C64) -> UnivariateFn {
        let vals: Vec<C64> = (0..self.nodes.len()).map(f).collect();
        UnivariateFn::from_lobatto_values(self.domain, &vals)
    }

    /// Entries of `V` as interpolants.
    pub fn v_entries(&self) -> Vec<Vec<UnivariateFn>> {
        let dim = self.v[0].nrows();
        (0..dim)
            .map(|i| (0..dim).map(|j| self.interpolate_nodes(|n| self.v[n][(i, j)])).collect())
            .collect()
    }

    /// Entries of `W = V⁻¹` as interpolants.
    pub fn w_entries(&self) -> Vec<Vec<UnivariateFn>> {
        let dim = self.w[0].nrows();
        (0..dim)
            .map(|i| (0..dim).map(|j| self.interpolate_nodes(|n| self.w[n][(i, j)])).collect())
            .collect()
    }
}

pub(crate) fn amax(m: &DMatrix<C64>) -> f64 {
    m.iter().fold(0.0, |acc, z| acc.max(z.norm()))
}

fn max_rel_diff(a: &[DMatrix<C64>], b: &[DMatrix<C64>]) -> f64 {
    a.iter()
        .zip(b)
        .map(|(x, y)| amax(&(x - y)) / (1.0 + amax(y)))
        .fold(0.0, f64::max)
}

// Values of V and W at `nodes` (descending) from `n` uniform-size steps.
fn sweep<F>(
    domain: Interval,
    dim: usize,
    m: &F,
    nodes: &[f64],
    n: usize,
) -> (Vec<DMatrix<C64>>, Vec<DMatrix<C64>>)
where
    F: Fn(f64) -> DMatrix<C64> + Sync,
{
    let h_max = domain.len() / n as f64;
    let mut v = DMatrix::<C64>::identity(dim, dim);
    let mut w = DMatrix::<C64>::identity(dim, dim);
    let mut x = domain.lo();
    let count = nodes.len();
    let mut vs = vec![v.clone(); count];
    let mut ws = vec![w.clone(); count];
    for idx in (0..count).rev() {
        let target = nodes[idx];
        let span = target - x;
        if span > 0.0 {
            let steps = (span / h_max).ceil().max(1.0) as usize;
            let h = span / steps as f64;
            for _ in 0..steps {
                let m0 = m(x);
                let mh = m(x + 0.5 * h);
                let m1 = m(x + h);
                v = rk4_left(&v, &m0, &mh, &m1, h);
                w = rk4_right(&w, &m0, &mh, &m1, h);
                x += h;
            }
            x = target;
        }
        vs[idx] = v.clone();
        ws[idx] = w.clone();
    }
    (vs, ws)
}

// V' = M V
fn rk4_left(
    v: &DMatrix<C64>,
    m0: &DMatrix<C64>,
    mh: &DMatrix<C64>,
    m1: &DMatrix<C64>,
    h: f64,
) -> DMatrix<C64> {
    let hc = C64::new(h, 0.0);
    let k1 = m0 * v;
    let k2 = mh * (v + &k1 * (hc * 0.5));
    let k3 = mh * (v + &k2 * (hc * 0.5));
    let k4 = m1 * (v + &k3 * hc);
    v + (k1 + k2 * C64::new(2.0, 0.0) + k3 * C64::new(2.0, 0.0) + k4) * (hc / 6.0)
}

// W' = -W M
fn rk4_right(
    w: &DMatrix<C64>,
    m0: &DMatrix<C64>,
    mh: &DMatrix<C64>,
    m1: &DMatrix<C64>,
    h: f64,
) -> DMatrix<C64> {
    let hc = C64::new(-h, 0.0);
    let k1 = w * m0;
    let k2 = (w + &k1 * (hc * 0.5)) * mh;
    let k3 = (w + &k2 * (hc * 0.5)) * mh;
    let k4 = (w + &k3 * hc) * m1;
    w + (k1 + k2 * C64::new(2.0, 0.0) + k3 * C64::new(2.0, 0.0) + k4) * (hc / 6.0)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn scalar_exponential() {
        let d = Interval::unit();
        let f = Fundamental::solve(d, 1, |_| DMatrix::from_element(1, 1, C64::new(2.0, 0.0)), 1e-12)
            .unwrap();
        let v = &f.v_entries()[0][0];
        let w = &f.w_entries()[0][0];
        for &x in &d.chebyshev_points(50) {
            assert!((v.eval(x) - (2.0 * x).exp()).norm() < 1e-11);
            assert!((w.eval(x) - (-2.0 * x).exp()).norm() < 1e-11);
        }
    }

    #[test]
    fn rotation_generator_inverse_pair() {
        let d = Interval::new(0.0, 2.0).unwrap();
        let gen = |_x: f64| {
            DMatrix::from_row_slice(2, 2, &[0.0, 1.0, -1.0, 0.0]).map(|v| C64::new(v, 0.0))
        };
        let f = Fundamental::solve(d, 2, gen, 1e-12).unwrap();
        for (v, w) in f.v_at_nodes().iter().zip(f.w_at_nodes()) {
            let p = v * w;
            assert!(amax(&(p - DMatrix::<C64>::identity(2, 2))) < 1e-12);
        }
        assert!(f.condition() < 1.5);
    }
}
