//! Seminorms `p_k`, the induced metric and the submultiplicativity probe.
//!
//! `p_k(d) = sup_{-1 ≤ i ≤ k} sup_{|α| ≤ k+1} ‖∂^α d_i‖_{∞, K_{k+1}}`, with the
//! sup taken over sampled grids. Coefficients are those of the normal form
//! (x-only Dirac coefficients), so `p_k` depends on the element only.

use std::collections::HashMap;

use rayon::prelude::*;

use crate::error::{Result, StarError};
use crate::kernels::{Interval, SeparableFn};
use crate::star::StarElement;

/// Grid sizes per axis on which sups are sampled; the larger value wins.
pub const SUP_GRIDS: [usize; 2] = [64, 128];
/// Default truncation depth of the metric series.
pub const DEFAULT_KMAX: i32 = 12;

/// Squares `K_k = X_k × Y_k`, `k = -1, 0, 1, ...`; the last square repeats.
#[derive(Clone, Debug, PartialEq)]
pub struct CompactFamily {
    squares: Vec<(Interval, Interval)>,
}

impl CompactFamily {
    /// `K_k = I²` for every `k`.
    pub fn constant(domain: Interval) -> Self {
        Self { squares: vec![(domain, domain)] }
    }

    /// Explicit squares starting at `k = -1`, each contained in the next.
    pub fn nested(squares: Vec<(Interval, Interval)>) -> Result<Self> {
        if squares.is_empty() {
            return Err(StarError::InvalidArgument("empty compact family".into()));
        }
        let inside = |a: &Interval, b: &Interval| b.lo() <= a.lo() && a.hi() <= b.hi();
        for w in squares.windows(2) {
            if !(inside(&w[0].0, &w[1].0) && inside(&w[0].1, &w[1].1)) {
                return Err(StarError::InvalidArgument("compact family is not increasing".into()));
            }
        }
        Ok(Self { squares })
    }

    /// `K_k`.
    pub fn square(&self, k: i32) -> (Interval, Interval) {
        let idx = ((k + 1).max(0) as usize).min(self.squares.len() - 1);
        self.squares[idx]
    }

    /// `|K_k|`.
    pub fn area(&self, k: i32) -> f64 {
        let (a, b) = self.square(k);
        a.len() * b.len()
    }

    fn check(&self, domain: Interval) -> Result<()> {
        let ok = self.squares.iter().all(|(a, b)| {
            a.lo() >= domain.lo() && a.hi() <= domain.hi() && b.lo() >= domain.lo() && b.hi() <= domain.hi()
        });
        if ok {
            Ok(())
        } else {
            Err(StarError::InvalidArgument("compact family leaves the domain square".into()))
        }
    }
}

fn sampled_sup(f: &SeparableFn, square: (Interval, Interval)) -> f64 {
    if f.is_empty() {
        return 0.0;
    }
    SUP_GRIDS
        .iter()
        .map(|&n| {
            let xs = square.0.uniform_points(n);
            let ys = square.1.uniform_points(n);
            f.eval_grid(&xs, &ys).iter().fold(0.0f64, |m, z| m.max(z.norm()))
        })
        .fold(0.0, f64::max)
}

/// Memoized `sup |∂^α d_i|` per square, so that a sweep over `k` reuses work.
#[derive(Debug)]
pub struct SupTable {
    d: StarElement,
    cache: HashMap<(i32, usize, usize, [u64; 4]), f64>,
}

impl SupTable {
    pub fn new(d: &StarElement) -> Result<Self> {
        Ok(Self { d: d.normalized()?, cache: HashMap::new() })
    }

    fn key(square: (Interval, Interval)) -> [u64; 4] {
        [square.0.lo(), square.0.hi(), square.1.lo(), square.1.hi()].map(f64::to_bits)
    }

    /// `p_k` of the underlying element.
    pub fn seminorm(&mut self, k: i32, family: &CompactFamily) -> f64 {
        if k < -1 {
            return 0.0;
        }
        let square = family.square(k + 1);
        let sk = Self::key(square);
        let top = (k + 1) as usize;
        let mut missing = Vec::new();
        for (&i, _) in self.d.parts().range(..=k) {
            for a1 in 0..=top {
                for a2 in 0..=top - a1 {
                    if !self.cache.contains_key(&(i, a1, a2, sk)) {
                        missing.push((i, a1, a2));
                    }
                }
            }
        }
        let d = &self.d;
        let found: Vec<_> = missing
            .par_iter()
            .map(|&(i, a1, a2)| {
                let f = d.part(i).expect("order present").partial(a1, a2);
                ((i, a1, a2, sk), sampled_sup(&f, square))
            })
            .collect();
        self.cache.extend(found);
        let mut best: f64 = 0.0;
        for (&i, _) in self.d.parts().range(..=k) {
            for a1 in 0..=top {
                for a2 in 0..=top - a1 {
                    best = best.max(self.cache[&(i, a1, a2, sk)]);
                }
            }
        }
        best
    }
}

/// `p_k(d)`.
pub fn seminorm(d: &StarElement, k: i32, family: &CompactFamily) -> Result<f64> {
    family.check(d.domain())?;
    Ok(SupTable::new(d)?.seminorm(k, family))
}

/// Truncated metric value with the bound on the omitted tail.
#[derive(Clone, Copy, Debug, PartialEq, serde::Serialize)]
pub struct MetricValue {
    pub value: f64,
    pub tail_bound: f64,
}

/// `Σ_{k=-1}^{k_max} 2^{-(k+1)} p_k(d - e) / (1 + p_k(d - e))`.
pub fn metric(d: &StarElement, e: &StarElement, family: &CompactFamily, k_max: i32) -> Result<MetricValue> {
    family.check(d.domain())?;
    let diff = d.sub(e)?;
    let mut table = SupTable::new(&diff)?;
    let mut value = 0.0;
    for k in -1..=k_max {
        let p = table.seminorm(k, family);
        value += 0.5f64.powi(k + 1) * p / (1.0 + p);
    }
    Ok(MetricValue { value, tail_bound: 0.5f64.powi(k_max + 1) })
}

/// Both sides of `p_k(d ★ e) ≤ c_k p_k(d) p_k(e)`, `c_k = 3^{k+1} + |K_{k+1}|`.
/// The bound can fail when Dirac coefficients oscillate: the order-`i`
/// coefficient of a product carries derivatives that `p_k` does not control.
#[derive(Clone, Copy, Debug, PartialEq, serde::Serialize)]
pub struct SubmultProbe {
    pub lhs: f64,
    pub rhs: f64,
    pub constant: f64,
    pub pass: bool,
}

pub fn submult_probe(d: &StarElement, e: &StarElement, k: i32, family: &CompactFamily) -> Result<SubmultProbe> {
    let prod = d.star(e)?;
    let lhs = seminorm(&prod, k, family)?;
    let constant = 3f64.powi(k + 1) + family.area(k + 1);
    let rhs = constant * seminorm(d, k, family)? * seminorm(e, k, family)?;
    Ok(SubmultProbe { lhs, rhs, constant, pass: lhs <= rhs * (1.0 + 1e-6) })
}
