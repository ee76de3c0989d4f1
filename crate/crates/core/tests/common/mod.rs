#![allow(dead_code)]

use num_complex::Complex64 as C64;
use rand::Rng;
use starcalc::{Interval, SeparableFn, StarElement, UnivariateFn};

pub fn c(re: f64) -> C64 {
    C64::new(re, 0.0)
}

pub fn poly(domain: Interval, coeffs: &[f64]) -> UnivariateFn {
    let c: Vec<C64> = coeffs.iter().map(|&v| C64::new(v, 0.0)).collect();
    UnivariateFn::from_monomials(domain, &c)
}

pub fn func(domain: Interval, f: impl Fn(f64) -> f64) -> UnivariateFn {
    UnivariateFn::interpolate(|x| C64::new(f(x), 0.0), domain, 32).unwrap()
}

/// Random complex cubic in the unit variable of `domain`.
pub fn random_fn(domain: Interval, rng: &mut impl Rng) -> UnivariateFn {
    let c: Vec<C64> = (0..4)
        .map(|_| C64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-0.5..0.5)))
        .collect();
    UnivariateFn::from_cheb(domain, c).unwrap()
}

pub fn random_separable(domain: Interval, rank: usize, rng: &mut impl Rng) -> SeparableFn {
    let terms = (0..rank)
        .map(|_| (random_fn(domain, rng), random_fn(domain, rng)))
        .collect();
    SeparableFn::new(domain, terms).unwrap()
}

/// Random element with every order in `-1..=max_order` present.
pub fn random_element(domain: Interval, max_order: i32, rng: &mut impl Rng) -> StarElement {
    let parts = (-1..=max_order)
        .map(|k| {
            let r = rng.gen_range(1..=2);
            (k, random_separable(domain, r, rng))
        })
        .collect();
    StarElement::from_parts(domain, parts).unwrap()
}

pub fn random_theta(domain: Interval, rng: &mut impl Rng) -> StarElement {
    let r = rng.gen_range(1..=2);
    StarElement::smooth_part(random_separable(domain, r, rng))
}

/// Sup of `|f - g|` on an `n × n` Chebyshev grid restricted to `x ≥ y`.
pub fn lower_sup(f: &SeparableFn, g: impl Fn(f64, f64) -> C64, n: usize) -> f64 {
    let p = f.domain().chebyshev_points(n);
    let mut e: f64 = 0.0;
    for &x in &p {
        for &y in &p {
            if x >= y {
                e = e.max((f.eval(x, y) - g(x, y)).norm());
            }
        }
    }
    e
}
