use nalgebra::DMatrix;
use num_complex::Complex64 as C64;

use super::svd::thin_svd;
use super::{Interval, UnivariateFn, PROBE_POINTS};
use crate::error::{Result, StarError};

/// Singular values below this fraction of the largest are roundoff.
const SVD_FLOOR: f64 = 1e-15;

/// Which argument of `f(x, y)` to act on.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Slot {
    X,
    Y,
}

/// Finite-rank bivariate function `f(x, y) = Σ a_i(x) b_i(y)`.
#[derive(Clone, Debug, PartialEq)]
pub struct SeparableFn {
    domain: Interval,
    terms: Vec<(UnivariateFn, UnivariateFn)>,
}

impl SeparableFn {
    pub fn zero(domain: Interval) -> Self {
        Self { domain, terms: Vec::new() }
    }

    pub fn new(domain: Interval, terms: Vec<(UnivariateFn, UnivariateFn)>) -> Result<Self> {
        if terms.iter().any(|(a, b)| a.domain() != domain || b.domain() != domain) {
            return Err(StarError::DomainMismatch);
        }
        Ok(Self { domain, terms })
    }

    pub fn rank1(a: UnivariateFn, b: UnivariateFn) -> Result<Self> {
        let domain = a.domain();
        Self::new(domain, vec![(a, b)])
    }

    pub fn constant(domain: Interval, c: impl Into<C64>) -> Self {
        Self {
            domain,
            terms: vec![(UnivariateFn::constant(domain, c), UnivariateFn::constant(domain, 1.0))],
        }
    }

    /// `(x, y) ↦ a(x)`.
    pub fn of_x(a: UnivariateFn) -> Self {
        let domain = a.domain();
        Self { domain, terms: vec![(a, UnivariateFn::constant(domain, 1.0))] }
    }

    /// `(x, y) ↦ b(y)`.
    pub fn of_y(b: UnivariateFn) -> Self {
        let domain = b.domain();
        Self { domain, terms: vec![(UnivariateFn::constant(domain, 1.0), b)] }
    }

    /// `(x, y) ↦ (x - y)^n / n!`.
    pub fn difference_power(domain: Interval, n: usize) -> Self {
        let x = UnivariateFn::identity(domain);
        let mut terms = Vec::with_capacity(n + 1);
        let mut xp = UnivariateFn::constant(domain, 1.0);
        let mut xpows = vec![xp.clone()];
        for _ in 0..n {
            xp = xp.times(&x);
            xpows.push(xp.clone());
        }
        // (x - y)^n / n! = Σ_k x^k (-y)^(n-k) / (k! (n-k)!)
        for k in 0..=n {
            let c = (if (n - k) % 2 == 0 { 1.0 } else { -1.0 })
                / (factorial(k) * factorial(n - k));
            terms.push((xpows[k].scale(c), xpows[n - k].clone()));
        }
        Self { domain, terms }
    }

    pub fn domain(&self) -> Interval {
        self.domain
    }

    pub fn terms(&self) -> &[(UnivariateFn, UnivariateFn)] {
        &self.terms
    }

    pub fn rank(&self) -> usize {
        self.terms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.terms.is_empty()
    }

    fn check_domain(&self, other: &Self) -> Result<()> {
        if self.domain == other.domain {
            Ok(())
        } else {
            Err(StarError::DomainMismatch)
        }
    }

    pub fn eval(&self, x: f64, y: f64) -> C64 {
        self.terms.iter().map(|(a, b)| a.eval(x) * b.eval(y)).sum()
    }

    /// Values on the tensor grid `xs × ys`, rows indexed by `xs`.
    pub fn eval_grid(&self, xs: &[f64], ys: &[f64]) -> DMatrix<C64> {
        if self.terms.is_empty() {
            return DMatrix::zeros(xs.len(), ys.len());
        }
        let (a, b) = self.factor_samples(xs, ys);
        a * b.transpose()
    }

    fn factor_samples(&self, xs: &[f64], ys: &[f64]) -> (DMatrix<C64>, DMatrix<C64>) {
        let r = self.terms.len();
        let a = DMatrix::from_fn(xs.len(), r, |i, k| self.terms[k].0.eval(xs[i]));
        let b = DMatrix::from_fn(ys.len(), r, |i, k| self.terms[k].1.eval(ys[i]));
        (a, b)
    }

    /// Max of `|f|` on the default probe grid.
    pub fn probe_sup(&self) -> f64 {
        let p = self.domain.chebyshev_points(PROBE_POINTS);
        self.eval_grid(&p, &p).iter().fold(0.0, |m, v| m.max(v.norm()))
    }

    pub fn add(&self, other: &Self) -> Result<Self> {
        self.check_domain(other)?;
        Ok(self.plus(other))
    }

    pub(crate) fn plus(&self, other: &Self) -> Self {
        let mut terms = self.terms.clone();
        terms.extend(other.terms.iter().cloned());
        Self { domain: self.domain, terms }
    }

    pub fn sub(&self, other: &Self) -> Result<Self> {
        self.add(&other.scale(-1.0))
    }

    pub fn scale(&self, s: impl Into<C64>) -> Self {
        let s = s.into();
        Self {
            domain: self.domain,
            terms: self.terms.iter().map(|(a, b)| (a.scale(s), b.clone())).collect(),
        }
    }

    pub fn conj(&self) -> Self {
        Self {
            domain: self.domain,
            terms: self.terms.iter().map(|(a, b)| (a.conj(), b.conj())).collect(),
        }
    }

    pub fn pointwise_mul(&self, other: &Self) -> Result<Self> {
        self.check_domain(other)?;
        Ok(self.times(other))
    }

    pub(crate) fn times(&self, other: &Self) -> Self {
        let mut terms = Vec::with_capacity(self.rank() * other.rank());
        for (a, b) in &self.terms {
            for (c, d) in &other.terms {
                terms.push((a.times(c), b.times(d)));
            }
        }
        Self { domain: self.domain, terms }
    }

    /// `u(x) f(x, y)`.
    pub fn mul_x(&self, u: &UnivariateFn) -> Self {
        Self {
            domain: self.domain,
            terms: self.terms.iter().map(|(a, b)| (a.times(u), b.clone())).collect(),
        }
    }

    /// `f(x, y) v(y)`.
    pub fn mul_y(&self, v: &UnivariateFn) -> Self {
        Self {
            domain: self.domain,
            terms: self.terms.iter().map(|(a, b)| (a.clone(), b.times(v))).collect(),
        }
    }

    /// `∂_x^k ∂_y^l f`.
    pub fn partial(&self, k: usize, l: usize) -> Self {
        Self {
            domain: self.domain,
            terms: self
                .terms
                .iter()
                .map(|(a, b)| (a.nth_derivative(k), b.nth_derivative(l)))
                .collect(),
        }
    }

    /// `x ↦ f(x, x)`.
    pub fn diag(&self) -> UnivariateFn {
        self.terms
            .iter()
            .fold(UnivariateFn::zero(self.domain), |acc, (a, b)| acc.plus(&a.times(b)))
    }

    /// Substitutes the frozen slot by the other variable, giving a function of
    /// the remaining variable only: `X` yields `(1, f(y, y))`, `Y` yields
    /// `(f(x, x), 1)`.
    pub fn freeze(&self, which: Slot) -> Self {
        let d = self.diag();
        let one = UnivariateFn::constant(self.domain, 1.0);
        let terms = match which {
            Slot::X => vec![(one, d)],
            Slot::Y => vec![(d, one)],
        };
        Self { domain: self.domain, terms }
    }

    /// `(x, y) ↦ f(y, x)`.
    pub fn swap(&self) -> Self {
        Self {
            domain: self.domain,
            terms: self.terms.iter().map(|(a, b)| (b.clone(), a.clone())).collect(),
        }
    }

    /// Rank reduction. The factors are sampled on Chebyshev points, each side
    /// is orthogonalized by an SVD, and the core matrix is truncated so the
    /// sampled deviation stays below `tol · (1 + sup |f|)`. New factors are
    /// linear combinations of the old ones, so no resampling error enters.
    pub fn compress(&self, tol: f64) -> Self {
        let tol = tol.max(0.0);
        let terms: Vec<_> = self
            .terms
            .iter()
            .filter(|(a, b)| !a.is_zero() && !b.is_zero())
            .cloned()
            .collect();
        if terms.is_empty() {
            return Self::zero(self.domain);
        }
        let f = Self { domain: self.domain, terms };
        let maxdeg = f.terms.iter().map(|(a, b)| a.degree().max(b.degree())).max().unwrap_or(0);
        let pts = self.domain.chebyshev_points(PROBE_POINTS.max(maxdeg + 1));
        let (a_s, b_s) = f.factor_samples(&pts, &pts);
        let sup = (&a_s * b_s.transpose()).iter().fold(0.0f64, |m, v| m.max(v.norm()));

        let (ma, pa) = reduced_factor(a_s);
        let (mb, pb) = reduced_factor(b_s);
        let (ma, pa, mb, pb) = match (ma, pa, mb, pb) {
            (Some(ma), Some(pa), Some(mb), Some(pb)) => (ma, pa, mb, pb),
            _ => return Self::zero(self.domain),
        };
        let core = &ma * mb.transpose();
        let (u, sig, vt) = thin_svd(&core);
        let s1 = sig.iter().cloned().fold(0.0, f64::max);
        if s1 == 0.0 {
            return Self::zero(self.domain);
        }
        let budget = tol * (1.0 + sup);
        let mut keep = sig.len();
        let mut tail = 0.0;
        while keep > 0 {
            let s = sig[keep - 1];
            let t = tail + s * s;
            if s <= SVD_FLOOR * s1 || t.sqrt() <= budget {
                tail = t;
                keep -= 1;
            } else {
                break;
            }
        }
        if keep >= f.rank() {
            return f;
        }
        let w = vt.adjoint();
        let left = &pa * mb.transpose();
        let right = &pb * ma.transpose();
        let mut out = Vec::with_capacity(keep);
        for k in 0..keep {
            let ca = &left * w.column(k);
            let cb = (&right * u.column(k).map(|z| z.conj())) / C64::new(sig[k], 0.0);
            out.push((combine(&f.terms, &ca, true), combine(&f.terms, &cb, false)));
        }
        Self { domain: self.domain, terms: out }
    }
}

fn factorial(n: usize) -> f64 {
    (1..=n).fold(1.0, |p, k| p * k as f64)
}

// For samples `S` returns `M = Σ⁺ V⁺ᴴ` and the projector `P = V⁺ V⁺ᴴ` onto the
// retained right singular directions.
fn reduced_factor(s: DMatrix<C64>) -> (Option<DMatrix<C64>>, Option<DMatrix<C64>>) {
    let (_, sig, vt) = thin_svd(&s);
    let smax = sig.iter().cloned().fold(0.0, f64::max);
    let kept: Vec<usize> = (0..sig.len()).filter(|&i| sig[i] > SVD_FLOOR * smax).collect();
    if kept.is_empty() {
        return (None, None);
    }
    let r = vt.ncols();
    let vt_k = DMatrix::from_fn(kept.len(), r, |i, j| vt[(kept[i], j)]);
    let m = DMatrix::from_fn(kept.len(), r, |i, j| vt_k[(i, j)] * sig[kept[i]]);
    let p = vt_k.adjoint() * &vt_k;
    (Some(m), Some(p))
}

fn combine(
    terms: &[(UnivariateFn, UnivariateFn)],
    c: &nalgebra::DVector<C64>,
    left: bool,
) -> UnivariateFn {
    let domain = terms[0].0.domain();
    terms.iter().zip(c.iter()).fold(UnivariateFn::zero(domain), |acc, ((a, b), &ci)| {
        acc.plus(&(if left { a } else { b }).scale(ci))
    })
}
