mod common;

use common::*;
use nalgebra::DMatrix;
use num_complex::Complex64 as C64;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use starcalc::discretize::{
    convergence_probe, delta_matrix, mat_star, mat_transpose, sample, Grid, TriangularSample, MAGIC,
};
use starcalc::{Interval, SeparableFn, StarElement};

fn max_abs(m: &DMatrix<C64>) -> f64 {
    m.iter().fold(0.0, |a, z| a.max(z.norm()))
}

/// Independent first-order rule for two Θ kernels: `Σ_{j ≤ k ≤ i} a(x_i, x_k) b(x_k, x_j) Δx`.
fn riemann_product(a: &SeparableFn, b: &SeparableFn, grid: Grid) -> DMatrix<C64> {
    let p = grid.points();
    let n = p.len();
    DMatrix::from_fn(n, n, |i, j| {
        if j > i {
            return C64::new(0.0, 0.0);
        }
        (j..=i).map(|k| a.eval(p[i], p[k]) * b.eval(p[k], p[j])).sum::<C64>() * grid.dx()
    })
}

#[test]
fn matrix_product_matches_direct_riemann_sum() {
    let d = Interval::unit();
    let mut rng = ChaCha8Rng::seed_from_u64(31);
    let a = random_separable(d, 2, &mut rng);
    let b = random_separable(d, 2, &mut rng);
    let grid = Grid::new(d, 40).unwrap();
    let sa = sample(&StarElement::smooth_part(a.clone()), grid).unwrap();
    let sb = sample(&StarElement::smooth_part(b.clone()), grid).unwrap();
    let p = mat_star(&sa, &sb).unwrap();
    assert!(max_abs(&(p.entries() - riemann_product(&a, &b, grid))) < 1e-13);
}

#[test]
fn error_halves_with_each_doubling() {
    let d = Interval::unit();
    let one = SeparableFn::constant(d, 1.0);
    let e = SeparableFn::rank1(func(d, f64::exp), func(d, |y| (-y).exp())).unwrap();
    let r = convergence_probe(&StarElement::smooth_part(e), &StarElement::smooth_part(one), &[32, 64, 128, 256, 512])
        .unwrap();
    for w in r.errors.windows(2) {
        assert!(w[0] / w[1] >= 1.7, "{:?}", r.errors);
    }
    assert!((r.rate - 1.0).abs() < 0.1, "{}", r.rate);
}

#[test]
fn delta_times_sample_is_exact() {
    let d = Interval::unit();
    let mut rng = ChaCha8Rng::seed_from_u64(32);
    let t = random_theta(d, &mut rng);
    let grid = Grid::new(d, 65).unwrap();
    let s = sample(&t, grid).unwrap();
    let id = sample(&StarElement::identity(d), grid).unwrap();
    assert!(max_abs(&(mat_star(&id, &s).unwrap().entries() - s.entries())) < 1e-12);
    assert!(max_abs(&(mat_star(&s, &id).unwrap().entries() - s.entries())) < 1e-12);
}

#[test]
fn samples_stay_lower_triangular() {
    let d = Interval::unit();
    let mut rng = ChaCha8Rng::seed_from_u64(33);
    let grid = Grid::new(d, 30).unwrap();
    let a = sample(&random_element(d, 2, &mut rng), grid).unwrap();
    let b = sample(&random_element(d, 1, &mut rng), grid).unwrap();
    let p = mat_star(&a, &b).unwrap();
    assert!(!p.is_upper());
    for i in 0..30 {
        for j in i + 1..30 {
            assert_eq!(p.entries()[(i, j)], C64::new(0.0, 0.0));
        }
    }
}

#[test]
fn transpose_is_the_grid_adjoint() {
    let d = Interval::unit();
    let mut rng = ChaCha8Rng::seed_from_u64(34);
    let grid = Grid::new(d, 25).unwrap();
    let s = sample(&random_theta(d, &mut rng), grid).unwrap();
    let st = mat_transpose(&s);
    assert!(st.is_upper());
    let h: Vec<C64> = (0..25).map(|i| C64::new((i as f64).sin(), 0.3)).collect();
    let f: Vec<C64> = (0..25).map(|i| C64::new((i as f64 * 0.7).cos(), -0.1)).collect();
    let lhs = grid.inner(&h, &s.apply(&f));
    let rhs = grid.inner(&st.apply(&h), &f);
    assert!((lhs - rhs).norm() < 1e-13);
    assert!(mat_star(&s, &st).is_err());
}

#[test]
fn higher_derivative_bands() {
    let grid = Grid::new(Interval::unit(), 12).unwrap();
    let d2 = delta_matrix(2, grid);
    let dx = grid.dx();
    let e = d2.entries();
    assert!((e[(5, 5)] * dx.powi(3) - 1.0).norm() < 1e-12);
    assert!((e[(5, 4)] * dx.powi(3) + 2.0).norm() < 1e-12);
    assert!((e[(5, 3)] * dx.powi(3) - 1.0).norm() < 1e-12);
    assert_eq!(e[(5, 2)], C64::new(0.0, 0.0));
    let h2 = delta_matrix(-2, grid);
    assert!((h2.entries()[(7, 3)] - 5.0 * dx).norm() < 1e-14);
}

#[test]
fn binary_dump_round_trip() {
    let d = Interval::new(-1.0, 2.0).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(35);
    let grid = Grid::new(d, 17).unwrap();
    let s = sample(&random_element(d, 1, &mut rng), grid).unwrap();
    let mut buf = Vec::new();
    s.write_binary(&mut buf).unwrap();
    assert_eq!(&buf[..8], MAGIC);
    assert_eq!(u32::from_le_bytes(buf[8..12].try_into().unwrap()), 17);
    assert_eq!(u32::from_le_bytes(buf[12..16].try_into().unwrap()), 0);
    assert_eq!(buf.len(), 16 + 17 * 17 * 16);
    let back = TriangularSample::read_binary(&mut buf.as_slice(), d).unwrap();
    assert_eq!(back, s);
    buf[0] = b'X';
    assert!(TriangularSample::read_binary(&mut buf.as_slice(), d).is_err());
}
