//! Causal elements `Σ_{i ≥ -1} d_i(x, y) δ^(i)(x - y)` and their ★-product.
//!
//! Internally every product works on a normal form: the Θ part keeps a
//! bivariate coefficient, while each Dirac part is rewritten with a
//! coefficient depending on `x` only, i.e. as the differential operator
//! `Σ_p u_p(x) ∂^p`. Products are then compositions of Volterra operators and
//! differential operators.

use std::collections::BTreeMap;

use num_complex::Complex64 as C64;
use rayon::prelude::*;

use crate::error::{Result, StarError};
use crate::kernels::{Interval, SeparableFn, UnivariateFn, DEFAULT_DEGREE};

/// Compression tolerance applied after every product.
pub const STAR_TOL: f64 = 1e-12;

/// Support of the Θ part: `x ≥ y` (causal) or `y ≥ x` (anticausal).
#[derive(Clone, Copy, Debug, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Orientation {
    Causal,
    Anticausal,
}

/// Finite-order element with coefficients per order `i ≥ -1` (`-1` is Θ).
#[derive(Clone, Debug, PartialEq)]
pub struct StarElement {
    domain: Interval,
    orientation: Orientation,
    parts: BTreeMap<i32, SeparableFn>,
}

pub(crate) fn binom(n: usize, k: usize) -> f64 {
    if k > n {
        return 0.0;
    }
    (0..k).fold(1.0, |acc, i| acc * (n - i) as f64 / (i + 1) as f64)
}

fn sign(k: usize) -> f64 {
    if k % 2 == 0 {
        1.0
    } else {
        -1.0
    }
}

impl StarElement {
    /// `δ^(k)`. Orders below `-1` are the Θ powers `(x - y)^(n-1)/(n-1)! Θ`
    /// with `n = -k`.
    pub fn delta(k: i32, domain: Interval) -> Self {
        Self::single(k, SeparableFn::constant(domain, 1.0))
    }

    pub fn theta(domain: Interval) -> Self {
        Self::delta(-1, domain)
    }

    pub fn identity(domain: Interval) -> Self {
        Self::delta(0, domain)
    }

    pub fn zero(domain: Interval) -> Self {
        Self { domain, orientation: Orientation::Causal, parts: BTreeMap::new() }
    }

    /// `f(x, y) Θ(x - y)`.
    pub fn smooth_part(f: SeparableFn) -> Self {
        Self::single(-1, f)
    }

    /// `f(x, y) δ^(k)(x - y)`.
    pub fn single(k: i32, f: SeparableFn) -> Self {
        let domain = f.domain();
        let mut e = Self::zero(domain);
        e.insert(k, f);
        e
    }

    pub fn from_parts(domain: Interval, parts: Vec<(i32, SeparableFn)>) -> Result<Self> {
        let mut e = Self::zero(domain);
        for (k, f) in parts {
            if f.domain() != domain {
                return Err(StarError::DomainMismatch);
            }
            e.insert(k, f);
        }
        Ok(e)
    }

    pub(crate) fn with_orientation(mut self, orientation: Orientation) -> Self {
        self.orientation = orientation;
        self
    }

    fn insert(&mut self, k: i32, f: SeparableFn) {
        let (k, f) = if k < -1 {
            let n = (-k - 1) as usize;
            (-1, f.times(&SeparableFn::difference_power(self.domain, n)))
        } else {
            (k, f)
        };
        if f.terms().iter().all(|(a, b)| a.is_zero() || b.is_zero()) {
            return;
        }
        let slot = self.parts.entry(k).or_insert_with(|| SeparableFn::zero(f.domain()));
        *slot = slot.plus(&f);
    }

    pub fn domain(&self) -> Interval {
        self.domain
    }

    pub fn orientation(&self) -> Orientation {
        self.orientation
    }

    pub fn parts(&self) -> &BTreeMap<i32, SeparableFn> {
        &self.parts
    }

    pub fn part(&self, k: i32) -> Option<&SeparableFn> {
        self.parts.get(&k)
    }

    /// Largest order present, `None` for the zero element.
    pub fn order(&self) -> Option<i32> {
        self.parts.keys().next_back().copied()
    }

    pub fn is_zero(&self) -> bool {
        self.parts.is_empty()
    }

    pub fn has_theta(&self) -> bool {
        self.parts.contains_key(&-1)
    }

    fn check_compatible(&self, other: &Self) -> Result<()> {
        if self.domain != other.domain {
            return Err(StarError::DomainMismatch);
        }
        if self.orientation != other.orientation && (self.has_theta() && other.has_theta()) {
            return Err(StarError::OrientationMismatch);
        }
        Ok(())
    }

    pub fn add(&self, other: &Self) -> Result<Self> {
        self.check_compatible(other)?;
        let mut out = self.clone();
        if other.has_theta() {
            out.orientation = other.orientation;
        }
        for (&k, f) in &other.parts {
            out.insert(k, f.clone());
        }
        Ok(out)
    }

    pub fn sub(&self, other: &Self) -> Result<Self> {
        self.add(&other.scale(-1.0))
    }

    pub fn scale(&self, s: impl Into<C64>) -> Self {
        let s = s.into();
        Self {
            domain: self.domain,
            orientation: self.orientation,
            parts: self.parts.iter().map(|(&k, f)| (k, f.scale(s))).collect(),
        }
    }

    /// Compresses every coefficient and drops empty ones.
    pub fn compress(&self, tol: f64) -> Self {
        Self {
            domain: self.domain,
            orientation: self.orientation,
            parts: self
                .parts
                .iter()
                .map(|(&k, f)| (k, f.compress(tol)))
                .filter(|(_, f)| !f.is_empty())
                .collect(),
        }
    }

    /// Same element with every Dirac coefficient depending on `x` only.
    pub fn normalized(&self) -> Result<Self> {
        self.require_causal()?;
        Ok(Normal::of(self).into_element())
    }

    fn require_causal(&self) -> Result<()> {
        if self.orientation == Orientation::Anticausal && self.has_theta() {
            Err(StarError::AnticausalOperand)
        } else {
            Ok(())
        }
    }

    /// `(self ★ other)(x, y) = ∫_I self(x, τ) other(τ, y) dτ`.
    pub fn star(&self, other: &Self) -> Result<Self> {
        if self.domain != other.domain {
            return Err(StarError::DomainMismatch);
        }
        self.require_causal()?;
        other.require_causal()?;
        let a = Normal::of(self);
        let b = Normal::of(other);
        let mut out = Normal::empty(self.domain);

        out.theta = theta_theta(&a.theta, &b.theta);

        for (&p, u) in &a.dirac {
            let p = p as usize;
            for (&m, v) in &b.dirac {
                for j in 0..=p {
                    let c = u.times(&v.nth_derivative(p - j)).scale(binom(p, j));
                    out.add_dirac((m as usize + j) as i32, c);
                }
            }
            if !b.theta.is_empty() {
                for j in 0..=p {
                    let g = b.theta.partial(p - j, 0).mul_x(u).scale(binom(p, j));
                    out.add_kernel(j as i32 - 1, &g);
                }
            }
        }

        if !a.theta.is_empty() {
            for (&m, v) in &b.dirac {
                let m = m as usize;
                let cv = a.theta.mul_y(v);
                for k in 0..=m {
                    let g = cv.partial(0, m - k).scale(sign(m + k) * binom(m, k));
                    out.add_kernel(k as i32 - 1, &g);
                }
            }
        }
        Ok(out.into_element())
    }

    /// `self^{★n}`. Negative powers exist only for pure `δ^(k)`.
    pub fn star_power(&self, n: i32) -> Result<Self> {
        if let Some(k) = self.pure_delta_order() {
            return Ok(Self::delta(k * n, self.domain));
        }
        if n < 0 {
            return Err(StarError::NegativePower);
        }
        let mut acc = Self::identity(self.domain);
        for _ in 0..n {
            acc = acc.star(self)?;
        }
        Ok(acc)
    }

    /// `Some(k)` when the element is `δ^(k)` with unit coefficient.
    pub fn pure_delta_order(&self) -> Option<i32> {
        if self.parts.len() != 1 || self.orientation != Orientation::Causal {
            return None;
        }
        let (&k, f) = self.parts.iter().next()?;
        let p = self.domain.chebyshev_points(10);
        let unit = p
            .iter()
            .all(|&x| p.iter().all(|&y| (f.eval(x, y) - 1.0).norm() <= 1e-13));
        unit.then_some(k)
    }

    /// Splits into difference kernels `D_i(x - y)` when every coefficient is
    /// shift invariant within `tol`.
    pub fn to_convolution(&self, tol: f64) -> Result<Convolution> {
        let n = self.normalized()?;
        let len = self.domain.len();
        let lo = self.domain.lo();
        let lag = Interval::new(0.0, len)?;
        let pts = self.domain.chebyshev_points(30);
        let mut profiles = BTreeMap::new();
        for (&k, f) in &n.parts {
            let profile = if k == -1 {
                UnivariateFn::interpolate(|u| f.eval(lo + u, lo), lag, 2 * DEFAULT_DEGREE)?
            } else {
                UnivariateFn::constant(lag, f.eval(lo, lo))
            };
            let mut dev: f64 = 0.0;
            let mut scale: f64 = 0.0;
            for &x in &pts {
                for &y in &pts {
                    if k == -1 && x < y {
                        continue;
                    }
                    let v = f.eval(x, y);
                    scale = scale.max(v.norm());
                    let u = if k == -1 { x - y } else { 0.0 };
                    dev = dev.max((v - profile.eval(u)).norm());
                }
            }
            if dev > tol * (1.0 + scale) {
                return Ok(Convolution::NotStationary { order: k, deviation: dev });
            }
            profiles.insert(k, profile);
        }
        Ok(Convolution::Profiles(profiles))
    }
}

/// Result of [`StarElement::to_convolution`].
#[derive(Clone, Debug, PartialEq)]
pub enum Convolution {
    /// Profile per order, on `[0, |I|]`.
    Profiles(BTreeMap<i32, UnivariateFn>),
    NotStationary { order: i32, deviation: f64 },
}

/// Θ part plus Dirac parts with `x`-only coefficients.
struct Normal {
    domain: Interval,
    theta: SeparableFn,
    dirac: BTreeMap<i32, UnivariateFn>,
}

impl Normal {
    fn empty(domain: Interval) -> Self {
        Self { domain, theta: SeparableFn::zero(domain), dirac: BTreeMap::new() }
    }

    fn of(e: &StarElement) -> Self {
        let mut n = Self::empty(e.domain);
        for (&k, f) in &e.parts {
            n.add_kernel(k, f);
        }
        n
    }

    fn add_dirac(&mut self, k: i32, u: UnivariateFn) {
        let slot = self.dirac.entry(k).or_insert_with(|| UnivariateFn::zero(u.domain()));
        *slot = slot.plus(&u);
    }

    // c(x, y) δ^(q) = Σ_l C(q, l) ∂_y^l c(x, x) δ^(q - l)
    fn add_kernel(&mut self, q: i32, c: &SeparableFn) {
        if c.is_empty() {
            return;
        }
        if q < 0 {
            self.theta = self.theta.plus(c);
            return;
        }
        let q = q as usize;
        for l in 0..=q {
            let d = c.partial(0, l).diag().scale(binom(q, l));
            self.add_dirac((q - l) as i32, d);
        }
    }

    fn into_element(self) -> StarElement {
        let mut parts = BTreeMap::new();
        let theta = self.theta.compress(STAR_TOL);
        if !theta.is_empty() {
            parts.insert(-1, theta);
        }
        for (k, u) in self.dirac {
            if !u.is_zero() {
                parts.insert(k, SeparableFn::of_x(u));
            }
        }
        StarElement { domain: self.domain, orientation: Orientation::Causal, parts }
    }
}

// ∫_y^x f(x, τ) g(τ, y) dτ: per term pair B = ∫ b_f a_g gives
// a_f(x) β(y) (B(x) - B(y)).
fn theta_theta(f: &SeparableFn, g: &SeparableFn) -> SeparableFn {
    let domain = f.domain();
    if f.is_empty() || g.is_empty() {
        return SeparableFn::zero(domain);
    }
    let lo = domain.lo();
    let pairs: Vec<(usize, usize)> = (0..f.rank())
        .flat_map(|i| (0..g.rank()).map(move |j| (i, j)))
        .collect();
    let terms: Vec<_> = pairs
        .par_iter()
        .map(|&(i, j)| {
            let (a, b) = &f.terms()[i];
            let (alpha, beta) = &g.terms()[j];
            let big_b = b.times(alpha).antideriv(lo);
            [(a.times(&big_b), beta.clone()), (a.scale(-1.0), big_b.times(beta))]
        })
        .collect();
    let terms = terms.into_iter().flatten().collect();
    SeparableFn::new(domain, terms)
        .expect("factors share the domain")
        .compress(STAR_TOL)
}

/// `δ^(j) ★ (f δ^(i)) = Σ_{k=0}^{j} C(j, k) f^(j-k, 0) δ^(i+k)`; `j = -1` is
/// evaluated as a product with Θ.
pub fn schwartz_left(j: i32, f: &SeparableFn, i: i32) -> Result<StarElement> {
    check_order(i)?;
    check_order(j)?;
    if j < 0 {
        return StarElement::theta(f.domain()).star(&StarElement::single(i, f.clone()));
    }
    let j = j as usize;
    let parts = (0..=j)
        .map(|k| (i + k as i32, f.partial(j - k, 0).scale(binom(j, k))))
        .collect();
    StarElement::from_parts(f.domain(), parts)
}

/// `(f δ^(i)) ★ δ^(j) = Σ_{k=0}^{j} (-1)^(j+k) C(j, k) f^(0, j-k) δ^(i+k)`;
/// `j = -1` is evaluated as a product with Θ.
pub fn schwartz_right(f: &SeparableFn, i: i32, j: i32) -> Result<StarElement> {
    check_order(i)?;
    check_order(j)?;
    if j < 0 {
        return StarElement::single(i, f.clone()).star(&StarElement::theta(f.domain()));
    }
    let j = j as usize;
    let parts = (0..=j)
        .map(|k| (i + k as i32, f.partial(0, j - k).scale(sign(j + k) * binom(j, k))))
        .collect();
    StarElement::from_parts(f.domain(), parts)
}

fn check_order(k: i32) -> Result<()> {
    if k < -1 {
        Err(StarError::InvalidArgument(format!("order {k} below -1")))
    } else {
        Ok(())
    }
}

/// `(f δ') ★ (g δ')` expanded through the action of the left `δ'`:
/// `f^(0,1)(x,x) g δ' + f(x,x) g^(1,0) δ' + f(x,x) g δ''`.
pub fn dprime_product_left_form(f: &SeparableFn, g: &SeparableFn) -> Result<StarElement> {
    let f01 = f.partial(0, 1).diag();
    let f00 = f.diag();
    let parts = vec![
        (1, g.mul_x(&f01)),
        (1, g.partial(1, 0).mul_x(&f00)),
        (2, g.mul_x(&f00)),
    ];
    StarElement::from_parts(f.domain(), parts)
}

/// `(f δ') ★ (g δ')` expanded through the action of the right `δ'`:
/// `-f^(0,1) g(y,y) δ' - f g^(1,0)(y,y) δ' + f g(y,y) δ''`.
pub fn dprime_product_right_form(f: &SeparableFn, g: &SeparableFn) -> Result<StarElement> {
    let g00 = g.diag();
    let g10 = g.partial(1, 0).diag();
    let parts = vec![
        (1, f.partial(0, 1).mul_y(&g00).scale(-1.0)),
        (1, f.mul_y(&g10).scale(-1.0)),
        (2, f.mul_y(&g00)),
    ];
    StarElement::from_parts(f.domain(), parts)
}
