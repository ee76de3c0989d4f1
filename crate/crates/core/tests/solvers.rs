mod common;

use common::*;
use nalgebra::DMatrix;
use num_complex::Complex64 as C64;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use starcalc::actions::action_residual;
use starcalc::inverse::invert_finite_order;
use starcalc::solvers::{
    neumann_toe, solve_volterra2, star_matrix_mul, time_ordered_exp, MatrixStarElement, VolterraProblem,
};
use starcalc::{Interval, SeparableFn, StarElement, UnivariateFn};

fn max_abs(m: &DMatrix<C64>) -> f64 {
    m.iter().fold(0.0, |a, z| a.max(z.norm()))
}

fn constant(d: Interval, v: f64) -> UnivariateFn {
    UnivariateFn::constant(d, v)
}

fn lower_pairs(d: Interval, n: usize) -> Vec<(f64, f64)> {
    let p = d.chebyshev_points(n);
    p.iter().flat_map(|&x| p.iter().filter(move |&&y| y <= x).map(move |&y| (x, y))).collect()
}

#[test]
fn harmonic_oscillator_propagator() {
    let d = Interval::new(0.0, 2.0).unwrap();
    let w = 3.0;
    let a = vec![vec![constant(d, 0.0), constant(d, 1.0)], vec![constant(d, -w * w), constant(d, 0.0)]];
    let toe = time_ordered_exp(&a, 1e-11).unwrap();
    for (x, y) in lower_pairs(d, 15) {
        let t = x - y;
        let want = DMatrix::from_row_slice(2, 2, &[
            C64::from((w * t).cos()), C64::from((w * t).sin() / w),
            C64::from(-w * (w * t).sin()), C64::from((w * t).cos()),
        ]);
        assert!(max_abs(&(toe.eval(x, y) - want)) < 1e-8, "({x}, {y})");
    }
}

#[test]
fn commuting_generator_is_plain_exponential() {
    // A(x) = x N with N = [[1, 2], [0, 1]]: U = e^s [[1, 2s], [0, 1]], s = (x² - y²)/2
    let d = Interval::unit();
    let x = UnivariateFn::identity(d);
    let a = vec![vec![x.clone(), x.scale(2.0)], vec![constant(d, 0.0), x.clone()]];
    let toe = time_ordered_exp(&a, 1e-11).unwrap();
    for (x, y) in lower_pairs(d, 12) {
        let s = 0.5 * (x * x - y * y);
        let want = DMatrix::from_row_slice(2, 2, &[
            C64::from(s.exp()), C64::from(2.0 * s * s.exp()),
            C64::from(0.0), C64::from(s.exp()),
        ]);
        assert!(max_abs(&(toe.eval(x, y) - want)) < 1e-9);
    }
}

#[test]
fn propagator_is_unit_on_the_diagonal_and_composes() {
    let d = Interval::unit();
    let mut rng = ChaCha8Rng::seed_from_u64(41);
    let a: Vec<Vec<_>> = (0..3).map(|_| (0..3).map(|_| random_fn(d, &mut rng)).collect()).collect();
    let toe = time_ordered_exp(&a, 1e-10).unwrap();
    for &x in &d.chebyshev_points(9) {
        assert!(max_abs(&(toe.eval(x, x) - DMatrix::identity(3, 3))) < 1e-9);
    }
    let triples = [(1.0, 0.6, 0.1), (0.9, 0.5, 0.0), (0.4, 0.3, 0.2)];
    assert!(toe.flow_defect(&triples) < 1e-8);
    assert!(toe.resolvent_residual < 1e-8);
}

#[test]
fn neumann_series_agrees_with_kernel() {
    let d = Interval::unit();
    let x = UnivariateFn::identity(d);
    let a = vec![vec![x.scale(0.5), constant(d, 0.3)], vec![constant(d, -0.4), x.scale(-0.2)]];
    let toe = time_ordered_exp(&a, 1e-11).unwrap();
    let series = neumann_toe(&a, 12).unwrap();
    for i in 0..2 {
        for j in 0..2 {
            let gap = action_residual(series.get(i, j), toe.kernel.get(i, j), 10).unwrap();
            assert!(gap < 1e-8, "({i}, {j}): {gap}");
        }
    }
}

#[test]
fn scalar_case_reduces_to_star_inverse() {
    // U Θ = (δ - a(y) Θ)^{-1} ★ Θ
    let d = Interval::unit();
    let a = func(d, |x| (2.0 * x).cos());
    let toe = time_ordered_exp(&[vec![a.clone()]], 1e-11).unwrap();
    let m = StarElement::identity(d).sub(&StarElement::smooth_part(SeparableFn::of_y(a))).unwrap();
    let want = invert_finite_order(&m, 1e-11).unwrap().inverse.star(&StarElement::theta(d)).unwrap();
    assert!(action_residual(toe.kernel.get(0, 0), &want, 10).unwrap() < 1e-8);
}

#[test]
fn matrix_product_is_associative() {
    let d = Interval::unit();
    let mut rng = ChaCha8Rng::seed_from_u64(42);
    let mut random = || {
        let e: Vec<StarElement> = (0..4).map(|_| random_theta(d, &mut rng)).collect();
        MatrixStarElement::from_fn(2, d, |i, j| e[2 * i + j].clone()).unwrap()
    };
    let (a, b, c) = (random(), random(), random());
    let left = star_matrix_mul(&star_matrix_mul(&a, &b).unwrap(), &c).unwrap();
    let right = star_matrix_mul(&a, &star_matrix_mul(&b, &c).unwrap()).unwrap();
    for i in 0..2 {
        for j in 0..2 {
            assert!(action_residual(left.get(i, j), right.get(i, j), 10).unwrap() < 1e-7);
        }
    }
    let id = MatrixStarElement::identity(2, d);
    let ai = star_matrix_mul(&a, &id).unwrap();
    assert!(action_residual(ai.get(1, 0), a.get(1, 0), 10).unwrap() < 1e-12);
}

#[test]
fn volterra_solution_satisfies_the_equation() {
    let d = Interval::new(-1.0, 1.0).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(43);
    let p = VolterraProblem::new(random_separable(d, 2, &mut rng), random_fn(d, &mut rng)).unwrap();
    let s = solve_volterra2(&p, 1e-10).unwrap();
    assert!(s.residual < 1e-9 && p.residual(&s.u) < 1e-9);
    assert!((s.u.eval(-1.0) - p.forcing.eval(-1.0)).norm() < 1e-12);
}

#[test]
fn mismatched_shapes_are_rejected() {
    let d = Interval::unit();
    let a = vec![vec![constant(d, 1.0), constant(d, 0.0)]];
    assert!(time_ordered_exp(&a, 1e-8).is_err());
    assert!(time_ordered_exp(&[], 1e-8).is_err());
    let e = Interval::new(0.0, 2.0).unwrap();
    assert!(VolterraProblem::new(SeparableFn::zero(d), constant(e, 1.0)).is_err());
}
