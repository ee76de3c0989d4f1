use std::f64::consts::PI;

use num_complex::Complex64 as C64;

use super::Interval;
use crate::error::{Result, StarError};

/// Default interpolation degree.
pub const DEFAULT_DEGREE: usize = 32;
/// Degree cap applied after multiplication; longer products are re-interpolated.
pub const MAX_DEGREE: usize = 128;

const ZERO: C64 = C64 { re: 0.0, im: 0.0 };

/// A complex-valued smooth function on an interval, stored as Chebyshev
/// coefficients of the affinely mapped variable.
#[derive(Clone, Debug, PartialEq)]
pub struct UnivariateFn {
    domain: Interval,
    coeffs: Vec<C64>,
}

impl UnivariateFn {
    /// Builds from Chebyshev coefficients. Rejects empty or non-finite input.
    pub fn from_cheb(domain: Interval, coeffs: Vec<C64>) -> Result<Self> {
        if coeffs.is_empty() {
            return Err(StarError::InvalidArgument("empty coefficient list".into()));
        }
        if coeffs.iter().any(|c| !c.re.is_finite() || !c.im.is_finite()) {
            return Err(StarError::InvalidArgument("non-finite Chebyshev coefficient".into()));
        }
        Ok(Self::from_cheb_unchecked(domain, coeffs))
    }

    pub(crate) fn from_cheb_unchecked(domain: Interval, coeffs: Vec<C64>) -> Self {
        let mut f = Self { domain, coeffs };
        f.chop();
        f
    }

    pub fn zero(domain: Interval) -> Self {
        Self { domain, coeffs: vec![ZERO] }
    }

    pub fn constant(domain: Interval, value: impl Into<C64>) -> Self {
        Self { domain, coeffs: vec![value.into()] }
    }

    /// The identity `x ↦ x`.
    pub fn identity(domain: Interval) -> Self {
        let mid = 0.5 * (domain.lo() + domain.hi());
        let half = 0.5 * domain.len();
        Self::from_cheb_unchecked(domain, vec![C64::new(mid, 0.0), C64::new(half, 0.0)])
    }

    /// Polynomial `Σ c_k x^k` in the original variable, converted exactly.
    pub fn from_monomials(domain: Interval, coeffs: &[C64]) -> Self {
        let x = Self::identity(domain);
        let mut p = Self::zero(domain);
        for &c in coeffs.iter().rev() {
            p = p.mul_exact(&x);
            p.coeffs[0] += c;
        }
        p.chop();
        p
    }

    /// Interpolates `sampler` at `degree + 1` Chebyshev–Lobatto points.
    pub fn interpolate<F>(sampler: F, domain: Interval, degree: usize) -> Result<Self>
    where
        F: Fn(f64) -> C64,
    {
        if degree == 0 {
            return Err(StarError::InvalidArgument("interpolation degree must be >= 1".into()));
        }
        let pts = domain.lobatto_points(degree);
        let mut vals = Vec::with_capacity(pts.len());
        for &x in &pts {
            let v = sampler(x);
            if !v.re.is_finite() || !v.im.is_finite() {
                return Err(StarError::NonFiniteSample { x });
            }
            vals.push(v);
        }
        Ok(Self::from_lobatto_values(domain, &vals))
    }

    /// Interpolates at doubling degrees from 16 up to `MAX_DEGREE` until the
    /// trailing coefficients fall below `1e-15` of the largest, then trims them.
    pub fn approximate<F>(sampler: F, domain: Interval) -> Result<Self>
    where
        F: Fn(f64) -> C64,
    {
        let mut degree = 16;
        loop {
            let mut f = Self::interpolate(&sampler, domain, degree)?;
            let scale = f.coeffs.iter().fold(0.0f64, |m, c| m.max(c.norm()));
            let n = f.coeffs.len();
            let tail = f.coeffs[n.saturating_sub(3)..].iter().fold(0.0f64, |m, c| m.max(c.norm()));
            if n + 3 <= degree || tail <= 1e-15 * scale || degree >= MAX_DEGREE {
                while f.coeffs.len() > 1 && f.coeffs.last().map_or(false, |c| c.norm() <= 1e-15 * scale) {
                    f.coeffs.pop();
                }
                return Ok(f);
            }
            degree *= 2;
        }
    }

    /// Coefficients from values at `domain.lobatto_points(values.len() - 1)`.
    pub fn from_lobatto_values(domain: Interval, values: &[C64]) -> Self {
        let n = values.len().saturating_sub(1);
        if n == 0 {
            return Self { domain, coeffs: vec![values.first().copied().unwrap_or(ZERO)] };
        }
        let table: Vec<f64> = (0..2 * n).map(|m| (PI * m as f64 / n as f64).cos()).collect();
        let mut coeffs = vec![ZERO; n + 1];
        for (k, ck) in coeffs.iter_mut().enumerate() {
            let mut acc = ZERO;
            for (j, &v) in values.iter().enumerate() {
                let w = if j == 0 || j == n { 0.5 } else { 1.0 };
                acc += v * (w * table[(j * k) % (2 * n)]);
            }
            let mut c = acc * (2.0 / n as f64);
            if k == 0 || k == n {
                c *= 0.5;
            }
            *ck = c;
        }
        Self::from_cheb_unchecked(domain, coeffs)
    }

    pub fn domain(&self) -> Interval {
        self.domain
    }

    pub fn coeffs(&self) -> &[C64] {
        &self.coeffs
    }

    pub fn degree(&self) -> usize {
        self.coeffs.len() - 1
    }

    pub fn is_zero(&self) -> bool {
        self.coeffs.iter().all(|c| *c == ZERO)
    }

    /// Drops trailing coefficients at roundoff level relative to the largest.
    fn chop(&mut self) {
        let scale = self.coeffs.iter().fold(0.0f64, |m, c| m.max(c.norm()));
        let floor = scale * f64::EPSILON;
        while self.coeffs.len() > 1 && self.coeffs.last().map_or(false, |c| c.norm() <= floor) {
            self.coeffs.pop();
        }
        if scale == 0.0 {
            self.coeffs.truncate(1);
        }
    }

    fn check_domain(&self, other: &Self) -> Result<()> {
        if self.domain == other.domain {
            Ok(())
        } else {
            Err(StarError::DomainMismatch)
        }
    }

    /// Clenshaw evaluation.
    pub fn eval(&self, x: f64) -> C64 {
        let t = self.domain.to_unit(x);
        let mut b1 = ZERO;
        let mut b2 = ZERO;
        for &c in self.coeffs.iter().skip(1).rev() {
            let b0 = c + b1 * (2.0 * t) - b2;
            b2 = b1;
            b1 = b0;
        }
        self.coeffs[0] + b1 * t - b2
    }

    pub fn values_at(&self, points: &[f64]) -> Vec<C64> {
        points.iter().map(|&x| self.eval(x)).collect()
    }

    pub fn max_abs_on(&self, points: &[f64]) -> f64 {
        points.iter().fold(0.0, |m, &x| m.max(self.eval(x).norm()))
    }

    /// Location and value of the minimum of `|f|`: dense scan, then
    /// golden-section refinement around every local minimum of the scan.
    pub fn min_abs(&self) -> (f64, f64) {
        let pts = self.domain.uniform_points(1025);
        let vals: Vec<f64> = pts.iter().map(|&x| self.eval(x).norm()).collect();
        let mut best = (pts[0], vals[0]);
        for i in 0..pts.len() {
            let left = if i > 0 { vals[i - 1] } else { f64::INFINITY };
            let right = if i + 1 < pts.len() { vals[i + 1] } else { f64::INFINITY };
            if vals[i] > left || vals[i] > right {
                continue;
            }
            let a = pts[i.saturating_sub(1)];
            let b = pts[(i + 1).min(pts.len() - 1)];
            let (x, v) = self.golden_min(a, b);
            let (x, v) = if vals[i] < v { (pts[i], vals[i]) } else { (x, v) };
            if v < best.1 {
                best = (x, v);
            }
        }
        best
    }

    fn golden_min(&self, mut a: f64, mut b: f64) -> (f64, f64) {
        let g = 0.5 * (5f64.sqrt() - 1.0);
        let f = |x: f64| self.eval(x).norm();
        let mut c = b - g * (b - a);
        let mut d = a + g * (b - a);
        let (mut fc, mut fd) = (f(c), f(d));
        for _ in 0..80 {
            if fc < fd {
                b = d;
                d = c;
                fd = fc;
                c = b - g * (b - a);
                fc = f(c);
            } else {
                a = c;
                c = d;
                fc = fd;
                d = a + g * (b - a);
                fd = f(d);
            }
        }
        let x = 0.5 * (a + b);
        (x, f(x))
    }

    pub fn add(&self, other: &Self) -> Result<Self> {
        self.check_domain(other)?;
        Ok(self.plus(other))
    }

    // Callers guarantee a shared domain.
    pub(crate) fn plus(&self, other: &Self) -> Self {
        debug_assert_eq!(self.domain, other.domain);
        let n = self.coeffs.len().max(other.coeffs.len());
        let coeffs = (0..n)
            .map(|k| {
                self.coeffs.get(k).copied().unwrap_or(ZERO)
                    + other.coeffs.get(k).copied().unwrap_or(ZERO)
            })
            .collect();
        Self::from_cheb_unchecked(self.domain, coeffs)
    }

    pub fn sub(&self, other: &Self) -> Result<Self> {
        self.add(&other.scale(-1.0))
    }

    pub fn scale(&self, s: impl Into<C64>) -> Self {
        let s = s.into();
        Self::from_cheb_unchecked(self.domain, self.coeffs.iter().map(|c| c * s).collect())
    }

    pub fn conj(&self) -> Self {
        Self { domain: self.domain, coeffs: self.coeffs.iter().map(|c| c.conj()).collect() }
    }

    /// Adds a constant.
    pub fn add_constant(&self, c: impl Into<C64>) -> Self {
        let mut out = self.clone();
        out.coeffs[0] += c.into();
        out.chop();
        out
    }

    /// Pointwise product. Degrees add up to `MAX_DEGREE`; beyond that the
    /// product is re-interpolated at degree `MAX_DEGREE`.
    pub fn mul(&self, other: &Self) -> Result<Self> {
        self.mul_capped(other, MAX_DEGREE)
    }

    pub fn mul_capped(&self, other: &Self, cap: usize) -> Result<Self> {
        self.check_domain(other)?;
        Ok(self.times_capped(other, cap))
    }

    pub(crate) fn times(&self, other: &Self) -> Self {
        self.times_capped(other, MAX_DEGREE)
    }

    fn times_capped(&self, other: &Self, cap: usize) -> Self {
        debug_assert_eq!(self.domain, other.domain);
        if self.degree() + other.degree() <= cap.max(1) {
            return self.mul_exact(other);
        }
        let pts = self.domain.lobatto_points(cap.max(1));
        let vals: Vec<C64> = pts.iter().map(|&x| self.eval(x) * other.eval(x)).collect();
        Self::from_lobatto_values(self.domain, &vals)
    }


    // T_i T_j = (T_{i+j} + T_{|i-j|}) / 2
    fn mul_exact(&self, other: &Self) -> Self {
        let n = self.coeffs.len() + other.coeffs.len() - 1;
        let mut out = vec![ZERO; n];
        for (i, &a) in self.coeffs.iter().enumerate() {
            if a == ZERO {
                continue;
            }
            for (j, &b) in other.coeffs.iter().enumerate() {
                let p = a * b * 0.5;
                out[i + j] += p;
                out[i.abs_diff(j)] += p;
            }
        }
        Self::from_cheb_unchecked(self.domain, out)
    }

    /// First derivative.
    pub fn diff(&self) -> Self {
        let n = self.degree();
        if n == 0 {
            return Self::zero(self.domain);
        }
        let c = &self.coeffs;
        let mut d = vec![ZERO; n + 2];
        for k in (1..=n).rev() {
            d[k - 1] = d[k + 1] + c[k] * (2.0 * k as f64);
        }
        d[0] *= 0.5;
        d.truncate(n);
        let s = 2.0 / self.domain.len();
        Self::from_cheb_unchecked(self.domain, d.into_iter().map(|v| v * s).collect())
    }

    pub fn nth_derivative(&self, k: usize) -> Self {
        let mut f = self.clone();
        for _ in 0..k {
            if f.degree() == 0 {
                return Self::zero(self.domain);
            }
            f = f.diff();
        }
        f
    }

    /// Antiderivative `x ↦ ∫_base^x f`.
    pub fn antideriv(&self, base: f64) -> Self {
        let n = self.degree();
        let c = &self.coeffs;
        let mut out = vec![ZERO; n + 2];
        for (k, &ck) in c.iter().enumerate() {
            match k {
                0 => out[1] += ck,
                1 => out[2] += ck * 0.25,
                _ => {
                    out[k + 1] += ck / (2.0 * (k + 1) as f64);
                    out[k - 1] -= ck / (2.0 * (k - 1) as f64);
                }
            }
        }
        let s = 0.5 * self.domain.len();
        for v in out.iter_mut() {
            *v *= s;
        }
        let mut f = Self::from_cheb_unchecked(self.domain, out);
        let shift = f.eval(base);
        f.coeffs[0] -= shift;
        f
    }

    /// `∫_domain f`.
    pub fn integral(&self) -> C64 {
        let s: C64 = self
            .coeffs
            .iter()
            .enumerate()
            .filter(|(k, _)| k % 2 == 0)
            .map(|(k, &c)| c * (2.0 / (1.0 - (k * k) as f64)))
            .sum();
        s * (0.5 * self.domain.len())
    }

    /// Same coefficients read on another interval (the affine maps coincide
    /// when both intervals have equal length and are shifted copies).
    pub fn with_domain(&self, domain: Interval) -> Self {
        Self { domain, coeffs: self.coeffs.clone() }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn unit() -> Interval {
        Interval::unit()
    }

    fn probe(i: Interval) -> Vec<f64> {
        i.uniform_points(100)
    }

    fn max_err(f: &UnivariateFn, g: impl Fn(f64) -> C64, pts: &[f64]) -> f64 {
        pts.iter().fold(0.0, |m, &x| m.max((f.eval(x) - g(x)).norm()))
    }

    #[test]
    fn interpolates_identity_exactly() {
        let f = UnivariateFn::interpolate(|x| C64::new(x, 0.0), unit(), 3).unwrap();
        assert!(max_err(&f, |x| C64::new(x, 0.0), &probe(unit())) < 1e-14);
        assert_eq!(f.degree(), 1);
    }

    #[test]
    fn interpolates_exp_to_machine_precision() {
        let f = UnivariateFn::interpolate(|x| C64::new(x.exp(), 0.0), unit(), 20).unwrap();
        assert!(max_err(&f, |x| C64::new(x.exp(), 0.0), &probe(unit())) < 1e-13);
    }

    #[test]
    fn zero_sampler_gives_zero_vector() {
        let f = UnivariateFn::interpolate(|_| C64::new(0.0, 0.0), unit(), 9).unwrap();
        assert_eq!(f.coeffs(), &[C64::new(0.0, 0.0)]);
        assert!(f.is_zero());
    }

    #[test]
    fn non_finite_sample_reports_location() {
        let err = UnivariateFn::interpolate(
            |x| if x > 0.99 { C64::new(f64::NAN, 0.0) } else { C64::new(1.0, 0.0) },
            unit(),
            4,
        )
        .unwrap_err();
        assert_eq!(err, StarError::NonFiniteSample { x: 1.0 });
    }

    #[test]
    fn x_times_x_is_exact() {
        let d = Interval::new(-1.0, 1.0).unwrap();
        let x = UnivariateFn::identity(d);
        let x2 = x.mul(&x).unwrap();
        // x^2 = (T_0 + T_2)/2
        assert_eq!(x2.coeffs(), &[C64::new(0.5, 0.0), C64::new(0.0, 0.0), C64::new(0.5, 0.0)]);
    }

    #[test]
    fn f_minus_f_is_zero() {
        let f = UnivariateFn::interpolate(|x| C64::new(x.sin(), x), unit(), 16).unwrap();
        assert!(f.add(&f.scale(-1.0)).unwrap().is_zero());
    }

    #[test]
    fn product_of_exponentials() {
        let e = UnivariateFn::interpolate(|x| C64::new(x.exp(), 0.0), unit(), 24).unwrap();
        let e2 = e.mul(&e).unwrap();
        assert!(max_err(&e2, |x| C64::new((2.0 * x).exp(), 0.0), &probe(unit())) < 1e-12);
    }

    #[test]
    fn long_products_are_capped() {
        let f = UnivariateFn::interpolate(|x| C64::new((5.0 * x).cos(), 0.0), unit(), 100).unwrap();
        let g = f.mul(&f).unwrap();
        assert!(g.degree() <= MAX_DEGREE);
        assert!(max_err(&g, |x| C64::new((5.0 * x).cos().powi(2), 0.0), &probe(unit())) < 1e-13);
    }

    #[test]
    fn derivative_rules() {
        let d = Interval::new(-1.0, 2.0).unwrap();
        let x = UnivariateFn::identity(d);
        let x2 = x.mul(&x).unwrap();
        let dx2 = x2.diff();
        assert!(max_err(&dx2, |x| C64::new(2.0 * x, 0.0), &probe(d)) < 1e-14);
        let one = UnivariateFn::constant(d, 1.0);
        let anti = one.antideriv(d.lo());
        assert!(max_err(&anti, |x| C64::new(x - d.lo(), 0.0), &probe(d)) < 1e-14);
    }

    #[test]
    fn derivative_matches_central_differences() {
        let f = UnivariateFn::interpolate(|x| C64::new(x.exp(), 0.0), unit(), 24).unwrap();
        let df = f.diff();
        let h = 1e-5;
        let pts = Interval::new(0.01, 0.99).unwrap().uniform_points(50);
        let mut worst: f64 = 0.0;
        for &x in &pts {
            // finite-difference oracle on the exact function
            let fd = ((x + h).exp() - (x - h).exp()) / (2.0 * h);
            worst = worst.max((df.eval(x).re - fd).abs() / fd.abs());
        }
        assert!(worst < 1e-6, "{worst}");
    }

    #[test]
    fn min_abs_finds_isolated_zero() {
        let f = UnivariateFn::interpolate(|x| C64::new(x - 0.3, 0.2 * (x - 0.3)), unit(), 4).unwrap();
        let (x, v) = f.min_abs();
        assert!((x - 0.3).abs() < 1e-8 && v < 1e-8);
    }

    #[test]
    fn integral_of_monomials() {
        let d = Interval::new(0.0, 2.0).unwrap();
        let p = UnivariateFn::from_monomials(d, &[C64::new(1.0, 0.0), C64::new(0.0, 0.0), C64::new(3.0, 0.0)]);
        // ∫_0^2 1 + 3x^2 = 2 + 8
        assert!((p.integral() - C64::new(10.0, 0.0)).norm() < 1e-13);
    }

    fn arb_fn() -> impl Strategy<Value = UnivariateFn> {
        prop::collection::vec((-1.0f64..1.0, -1.0f64..1.0), 1..12).prop_map(|cs| {
            UnivariateFn::from_cheb(
                Interval::new(-0.5, 1.5).unwrap(),
                cs.into_iter().map(|(r, i)| C64::new(r, i)).collect(),
            )
            .unwrap()
        })
    }

    proptest! {
        #[test]
        fn diff_inverts_antideriv(f in arb_fn(), base in -0.5f64..1.5) {
            let g = f.antideriv(base).diff();
            let pts = f.domain().uniform_points(100);
            prop_assert!(g.eval(base).is_finite());
            for &x in &pts {
                prop_assert!((g.eval(x) - f.eval(x)).norm() < 1e-12);
            }
            prop_assert!(f.antideriv(base).eval(base).norm() < 1e-14);
        }

        #[test]
        fn product_is_pointwise(f in arb_fn(), g in arb_fn()) {
            let h = f.mul(&g).unwrap();
            prop_assert_eq!(h.degree() <= f.degree() + g.degree(), true);
            for &x in &f.domain().uniform_points(100) {
                let want = f.eval(x) * g.eval(x);
                prop_assert!((h.eval(x) - want).norm() < 1e-12 * (1.0 + want.norm()));
            }
        }
    }
}
