//! Actions of elements on univariate functions, inner/outer products, the
//! two-variable bracket, transpose, and action-based equality.

use num_complex::Complex64 as C64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Result, StarError};
use crate::kernels::{ClenshawCurtis, Interval, SeparableFn, UnivariateFn, PROBE_POINTS};
use crate::star::{Orientation, StarElement};

/// Seed of the test-function family used by [`action_residual`].
pub const ACTION_SEED: u64 = 0x5eed_0f_5ca1e;

/// Which variable an injected univariate function depends on.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Side {
    /// `(x, y) ↦ f(x)`
    Left,
    /// `(x, y) ↦ f(y)`
    Right,
}

/// A univariate function viewed as a bivariate one.
#[derive(Clone, Debug, PartialEq)]
pub struct InjectedFn {
    pub f: UnivariateFn,
    pub side: Side,
}

impl InjectedFn {
    pub fn left(f: UnivariateFn) -> Self {
        Self { f, side: Side::Left }
    }

    pub fn right(f: UnivariateFn) -> Self {
        Self { f, side: Side::Right }
    }

    pub fn to_separable(&self) -> SeparableFn {
        match self.side {
            Side::Left => SeparableFn::of_x(self.f.clone()),
            Side::Right => SeparableFn::of_y(self.f.clone()),
        }
    }
}

fn check(g: &StarElement, f: &UnivariateFn) -> Result<()> {
    if g.domain() == f.domain() {
        Ok(())
    } else {
        Err(StarError::DomainMismatch)
    }
}

fn sign(k: i32) -> f64 {
    if k % 2 == 0 {
        1.0
    } else {
        -1.0
    }
}

/// `x ↦ ∫_I g(x, τ) f(τ) dτ`.
pub fn apply_left(g: &StarElement, f: &UnivariateFn) -> Result<UnivariateFn> {
    check(g, f)?;
    let domain = g.domain();
    let mut out = UnivariateFn::zero(domain);
    for (&k, c) in g.parts() {
        for (a, b) in c.terms() {
            let bf = b.times(f);
            let inner = if k == -1 {
                match g.orientation() {
                    Orientation::Causal => bf.antideriv(domain.lo()),
                    Orientation::Anticausal => bf.antideriv(domain.hi()).scale(-1.0),
                }
            } else {
                bf.nth_derivative(k as usize)
            };
            out = out.plus(&a.times(&inner));
        }
    }
    Ok(out)
}

/// `y ↦ ∫_I f(τ) g(τ, y) dτ`.
pub fn apply_right(f: &UnivariateFn, g: &StarElement) -> Result<UnivariateFn> {
    check(g, f)?;
    let domain = g.domain();
    let mut out = UnivariateFn::zero(domain);
    for (&k, c) in g.parts() {
        for (a, b) in c.terms() {
            let fa = f.times(a);
            let inner = if k == -1 {
                match g.orientation() {
                    Orientation::Causal => fa.antideriv(domain.hi()).scale(-1.0),
                    Orientation::Anticausal => fa.antideriv(domain.lo()),
                }
            } else {
                fa.nth_derivative(k as usize).scale(sign(k))
            };
            out = out.plus(&b.times(&inner));
        }
    }
    Ok(out)
}

/// `1 ★ g`, i.e. `y ↦ ∫_I g(τ, y) dτ`.
pub fn integrate_rows(g: &StarElement) -> Result<UnivariateFn> {
    apply_right(&UnivariateFn::constant(g.domain(), 1.0), g)
}

/// `∫_I h f` by Clenshaw–Curtis quadrature.
pub fn inner(h: &UnivariateFn, f: &UnivariateFn) -> Result<C64> {
    if h.domain() != f.domain() {
        return Err(StarError::DomainMismatch);
    }
    let q = ClenshawCurtis::default_for(h.domain());
    Ok(q.integrate(|x| h.eval(x) * f.eval(x)))
}

/// `∫_I conj(h) f`.
pub fn hermitian_inner(h: &UnivariateFn, f: &UnivariateFn) -> Result<C64> {
    inner(&h.conj(), f)
}

/// `ψ_l(h) ★ ψ_r(f) = |I| h(x) f(y)`.
pub fn outer(h: &UnivariateFn, f: &UnivariateFn) -> Result<SeparableFn> {
    if h.domain() != f.domain() {
        return Err(StarError::DomainMismatch);
    }
    SeparableFn::rank1(h.scale(h.domain().len()), f.clone())
}

/// Product of smooth kernels with full support on `I²`:
/// `∫_I f(x, τ) g(τ, y) dτ`.
pub fn full_star(f: &SeparableFn, g: &SeparableFn) -> Result<SeparableFn> {
    if f.domain() != g.domain() {
        return Err(StarError::DomainMismatch);
    }
    let mut terms = Vec::with_capacity(f.rank() * g.rank());
    for (a, b) in f.terms() {
        for (alpha, beta) in g.terms() {
            let s = b.times(alpha).integral();
            terms.push((a.scale(s), beta.clone()));
        }
    }
    SeparableFn::new(f.domain(), terms)
}

/// `∫_{I²} h(x, y) f(x, y) dx dy`; not a ★-product.
pub fn bracket2(h: &StarElement, f: &SeparableFn) -> Result<C64> {
    if h.domain() != f.domain() {
        return Err(StarError::DomainMismatch);
    }
    let domain = h.domain();
    let mut total = C64::new(0.0, 0.0);
    for (&k, c) in h.parts() {
        let cf = c.times(f);
        if k == -1 {
            for (p, q) in cf.terms() {
                // causal: ∫ p(x) ∫_lo^x q ; anticausal: ∫ p(x) ∫_x^hi q
                let inner = match h.orientation() {
                    Orientation::Causal => q.antideriv(domain.lo()),
                    Orientation::Anticausal => q.antideriv(domain.hi()).scale(-1.0),
                };
                total += p.times(&inner).integral();
            }
        } else {
            total += cf.partial(0, k as usize).diag().integral();
        }
    }
    Ok(total)
}

/// `d^T(x, y) = d(y, x)`. Dirac parts pick up `(-1)^k` and stay causal; a Θ
/// part moves to the opposite triangle.
pub fn transpose(d: &StarElement) -> StarElement {
    let parts = d
        .parts()
        .iter()
        .map(|(&k, c)| (k, c.swap().scale(if k < 0 { 1.0 } else { sign(k) })))
        .collect();
    let out = StarElement::from_parts(d.domain(), parts).expect("parts share the domain");
    let orientation = match (d.has_theta(), d.orientation()) {
        (false, _) => Orientation::Causal,
        (true, Orientation::Causal) => Orientation::Anticausal,
        (true, Orientation::Anticausal) => Orientation::Causal,
    };
    out.with_orientation(orientation)
}

/// Complex-conjugate transpose.
pub fn adjoint(d: &StarElement) -> StarElement {
    let t = transpose(d);
    let parts = t.parts().iter().map(|(&k, c)| (k, c.conj())).collect();
    StarElement::from_parts(d.domain(), parts)
        .expect("parts share the domain")
        .with_orientation(t.orientation())
}

/// Random test function `((x - lo)/|I|)^8 p(x)` with `p` a complex quartic.
/// The flat start makes boundary terms at `lo` vanish to high order.
pub fn test_function(domain: Interval, rng: &mut impl Rng) -> UnivariateFn {
    let c: Vec<C64> = (0..5)
        .map(|_| C64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)))
        .collect();
    UnivariateFn::interpolate(
        |x| {
            let t = domain.to_unit(x);
            let s = 0.5 * (t + 1.0);
            let p = c.iter().rev().fold(C64::new(0.0, 0.0), |acc, &ci| acc * t + ci);
            p * s.powi(8)
        },
        domain,
        16,
    )
    .expect("polynomial samples are finite")
}

/// Largest relative discrepancy between the left actions of `d` and `e` over
/// `trials` test functions, measured on the probe points.
pub fn action_residual(d: &StarElement, e: &StarElement, trials: usize) -> Result<f64> {
    action_residual_seeded(d, e, trials, ACTION_SEED)
}

/// `action_residual` with test functions drawn from `seed`.
pub fn action_residual_seeded(d: &StarElement, e: &StarElement, trials: usize, seed: u64) -> Result<f64> {
    if d.domain() != e.domain() {
        return Err(StarError::DomainMismatch);
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let pts = d.domain().chebyshev_points(PROBE_POINTS);
    let mut worst: f64 = 0.0;
    for _ in 0..trials.max(1) {
        let phi = test_function(d.domain(), &mut rng);
        let u = apply_left(d, &phi)?;
        let v = apply_left(e, &phi)?;
        let mut diff: f64 = 0.0;
        let mut mag: f64 = 1.0;
        for &x in &pts {
            let (a, b) = (u.eval(x), v.eval(x));
            diff = diff.max((a - b).norm());
            mag = mag.max(a.norm()).max(b.norm());
        }
        worst = worst.max(diff / mag);
    }
    Ok(worst)
}

/// Equality through the action on `trials` test functions.
pub fn action_equal(d: &StarElement, e: &StarElement, trials: usize, tol: f64) -> Result<bool> {
    Ok(action_residual(d, e, trials)? <= tol)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn unit() -> Interval {
        Interval::unit()
    }

    fn poly(c: &[f64]) -> UnivariateFn {
        let c: Vec<C64> = c.iter().map(|&v| C64::new(v, 0.0)).collect();
        UnivariateFn::from_monomials(unit(), &c)
    }

    fn close(f: &UnivariateFn, g: impl Fn(f64) -> f64, tol: f64) -> bool {
        f.domain()
            .chebyshev_points(100)
            .iter()
            .all(|&x| (f.eval(x) - C64::new(g(x), 0.0)).norm() < tol)
    }

    #[test]
    fn left_actions() {
        let d = unit();
        let f = poly(&[0.3, -1.0, 2.0]);
        assert_eq!(apply_left(&StarElement::identity(d), &f).unwrap(), f);
        let one = UnivariateFn::constant(d, 1.0);
        assert!(close(&apply_left(&StarElement::theta(d), &one).unwrap(), |x| x, 1e-15));
        let x2 = poly(&[0.0, 0.0, 1.0]);
        assert!(close(&apply_left(&StarElement::delta(1, d), &x2).unwrap(), |x| 2.0 * x, 1e-14));
    }

    #[test]
    fn right_actions_and_rows() {
        let d = unit();
        let one = UnivariateFn::constant(d, 1.0);
        let f = poly(&[0.3, -1.0, 2.0]);
        assert_eq!(apply_right(&f, &StarElement::identity(d)).unwrap(), f);
        assert!(close(&apply_right(&one, &StarElement::theta(d)).unwrap(), |y| 1.0 - y, 1e-15));
        assert!(close(&integrate_rows(&StarElement::identity(d)).unwrap(), |_| 1.0, 1e-15));
        assert!(close(&integrate_rows(&StarElement::theta(d)).unwrap(), |y| 1.0 - y, 1e-15));
        assert!(close(&integrate_rows(&StarElement::delta(1, d)).unwrap(), |_| 0.0, 1e-15));
    }

    #[test]
    fn inner_and_outer() {
        let d = unit();
        let one = UnivariateFn::constant(d, 1.0);
        let x = poly(&[0.0, 1.0]);
        assert!((inner(&one, &one).unwrap() - 1.0).norm() < 1e-14);
        assert!((inner(&x, &x).unwrap() - 1.0 / 3.0).norm() < 1e-13);
        assert_eq!(inner(&x, &one).unwrap(), inner(&one, &x).unwrap());
        let o = outer(&one, &one).unwrap();
        assert!((o.eval(0.2, 0.9) - 1.0).norm() < 1e-15);
        assert!(outer(&x, &UnivariateFn::zero(d)).unwrap().eval(0.4, 0.1).norm() == 0.0);
        let d2 = Interval::new(0.0, 2.0).unwrap();
        let o = outer(&UnivariateFn::identity(d2), &UnivariateFn::constant(d2, 1.0)).unwrap();
        assert!((o.eval(1.5, 0.3) - 3.0).norm() < 1e-14);
    }

    #[test]
    fn brackets() {
        let d = unit();
        let one = SeparableFn::constant(d, 1.0);
        assert!((bracket2(&StarElement::identity(d), &one).unwrap() - 1.0).norm() < 1e-14);
        assert!((bracket2(&StarElement::theta(d), &one).unwrap() - 0.5).norm() < 1e-14);
    }

    #[test]
    fn transpose_rules() {
        let d = unit();
        assert_eq!(transpose(&StarElement::identity(d)), StarElement::identity(d));
        let tp = transpose(&StarElement::delta(1, d));
        assert_eq!(tp, StarElement::delta(1, d).scale(-1.0));
        let t = StarElement::theta(d);
        let tt = transpose(&t);
        assert_eq!(tt.orientation(), Orientation::Anticausal);
        assert_eq!(transpose(&tt), t);
    }

    #[test]
    fn action_equality_basics() {
        let d = unit();
        let f = StarElement::smooth_part(SeparableFn::rank1(poly(&[1.0, 2.0]), poly(&[0.0, 1.0])).unwrap());
        assert!(action_equal(&f, &f.compress(1e-13), 5, 1e-14).unwrap());
        assert!(!action_equal(&StarElement::identity(d), &StarElement::theta(d), 5, 1e-3).unwrap());
        let with_zero = f.add(&StarElement::single(2, SeparableFn::zero(d))).unwrap();
        assert!(action_equal(&f, &with_zero, 5, 0.0).unwrap());
    }
}
