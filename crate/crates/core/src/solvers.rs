//! Volterra equations of the second kind and time-ordered exponentials.

use nalgebra::DMatrix;
use num_complex::Complex64 as C64;

use crate::actions::apply_left;
use crate::error::{Result, StarError};
use crate::fundamental::{amax, Fundamental};
use crate::inverse::volterra_resolvent;
use crate::kernels::{ClenshawCurtis, Interval, SeparableFn, UnivariateFn, PROBE_POINTS};
use crate::star::StarElement;

/// `u(x) = g(x) + ∫_lo^x K(x, τ) u(τ) dτ`.
#[derive(Clone, Debug)]
pub struct VolterraProblem {
    pub kernel: SeparableFn,
    pub forcing: UnivariateFn,
}

#[derive(Clone, Debug)]
pub struct VolterraSolution {
    pub u: UnivariateFn,
    /// Sup of the equation residual at the quadrature probes, relative to
    /// `1 + sup |u|`.
    pub residual: f64,
}

impl VolterraProblem {
    pub fn new(kernel: SeparableFn, forcing: UnivariateFn) -> Result<Self> {
        if kernel.domain() != forcing.domain() {
            return Err(StarError::DomainMismatch);
        }
        Ok(Self { kernel, forcing })
    }

    pub fn domain(&self) -> Interval {
        self.forcing.domain()
    }

    /// Equation residual of `u`, with the integrals evaluated by
    /// Clenshaw–Curtis quadrature on `[lo, x]` at each of the probe nodes.
    pub fn residual(&self, u: &UnivariateFn) -> f64 {
        let domain = self.domain();
        let probes = ClenshawCurtis::default_for(domain);
        let mut worst: f64 = 0.0;
        let mut scale: f64 = 1.0;
        for &x in probes.nodes() {
            let integral = if x > domain.lo() {
                let sub = Interval::new(domain.lo(), x).expect("x above lo");
                ClenshawCurtis::new(sub, 128).integrate(|t| self.kernel.eval(x, t) * u.eval(t))
            } else {
                C64::new(0.0, 0.0)
            };
            let ux = u.eval(x);
            scale = scale.max(ux.norm());
            worst = worst.max((ux - self.forcing.eval(x) - integral).norm());
        }
        worst / scale
    }
}

/// Solves through the resolvent: `u = g + ∫_lo^x R(x, τ) g(τ) dτ`.
pub fn solve_volterra2(p: &VolterraProblem, tol: f64) -> Result<VolterraSolution> {
    let res = volterra_resolvent(&p.kernel, tol)?;
    let correction = apply_left(&StarElement::smooth_part(res.resolvent), &p.forcing)?;
    let u = p.forcing.add(&correction)?;
    let residual = p.residual(&u);
    if residual > tol {
        return Err(StarError::ResidualTooLarge { what: "volterra equation", residual, tol });
    }
    Ok(VolterraSolution { u, residual })
}

/// Square array of elements on a shared domain.
#[derive(Clone, Debug, PartialEq)]
pub struct MatrixStarElement {
    domain: Interval,
    entries: Vec<Vec<StarElement>>,
}

impl MatrixStarElement {
    pub fn new(entries: Vec<Vec<StarElement>>) -> Result<Self> {
        let r = entries.len();
        if r == 0 || entries.iter().any(|row| row.len() != r) {
            return Err(StarError::InvalidArgument("matrix of elements must be square and non-empty".into()));
        }
        let domain = entries[0][0].domain();
        if entries.iter().flatten().any(|e| e.domain() != domain) {
            return Err(StarError::DomainMismatch);
        }
        Ok(Self { domain, entries })
    }

    pub fn from_fn(r: usize, domain: Interval, f: impl Fn(usize, usize) -> StarElement) -> Result<Self> {
        let m = Self::new((0..r).map(|i| (0..r).map(|j| f(i, j)).collect()).collect())?;
        if m.domain != domain {
            return Err(StarError::DomainMismatch);
        }
        Ok(m)
    }

    /// `δ` on the diagonal.
    pub fn identity(r: usize, domain: Interval) -> Self {
        Self::diagonal(r, StarElement::identity(domain))
    }

    /// `e` on the diagonal, zero elsewhere.
    pub fn diagonal(r: usize, e: StarElement) -> Self {
        let domain = e.domain();
        let entries = (0..r)
            .map(|i| {
                (0..r)
                    .map(|j| if i == j { e.clone() } else { StarElement::zero(domain) })
                    .collect()
            })
            .collect();
        Self { domain, entries }
    }

    pub fn dim(&self) -> usize {
        self.entries.len()
    }

    pub fn domain(&self) -> Interval {
        self.domain
    }

    pub fn get(&self, i: usize, j: usize) -> &StarElement {
        &self.entries[i][j]
    }

    pub fn add(&self, other: &Self) -> Result<Self> {
        self.check(other)?;
        let r = self.dim();
        Self::new(
            (0..r)
                .map(|i| (0..r).map(|j| self.entries[i][j].add(&other.entries[i][j])).collect::<Result<_>>())
                .collect::<Result<_>>()?,
        )
    }

    pub fn sub(&self, other: &Self) -> Result<Self> {
        self.add(&other.scale(-1.0))
    }

    pub fn scale(&self, s: impl Into<C64>) -> Self {
        let s = s.into();
        Self {
            domain: self.domain,
            entries: self.entries.iter().map(|row| row.iter().map(|e| e.scale(s)).collect()).collect(),
        }
    }

    fn check(&self, other: &Self) -> Result<()> {
        if self.domain != other.domain {
            return Err(StarError::DomainMismatch);
        }
        if self.dim() != other.dim() {
            return Err(StarError::InvalidArgument("matrix dimensions differ".into()));
        }
        Ok(())
    }

    /// Left action on a vector of functions.
    pub fn apply_left(&self, f: &[UnivariateFn]) -> Result<Vec<UnivariateFn>> {
        if f.len() != self.dim() {
            return Err(StarError::InvalidArgument("vector length differs from matrix dimension".into()));
        }
        self.entries
            .iter()
            .map(|row| {
                row.iter().zip(f).try_fold(UnivariateFn::zero(self.domain), |acc, (e, fj)| {
                    acc.add(&apply_left(e, fj)?)
                })
            })
            .collect()
    }
}

/// `(D ★ E)_{ij} = Σ_k D_{ik} ★ E_{kj}`.
pub fn star_matrix_mul(d: &MatrixStarElement, e: &MatrixStarElement) -> Result<MatrixStarElement> {
    d.check(e)?;
    let r = d.dim();
    let mut rows = Vec::with_capacity(r);
    for i in 0..r {
        let mut row = Vec::with_capacity(r);
        for j in 0..r {
            let mut acc = StarElement::zero(d.domain);
            for k in 0..r {
                acc = acc.add(&d.entries[i][k].star(&e.entries[k][j])?)?;
            }
            row.push(acc.compress(crate::star::STAR_TOL));
        }
        rows.push(row);
    }
    MatrixStarElement::new(rows)
}

/// Propagator `U(x, y) = V(x) V(y)⁻¹` of `V' = A(x) V`.
#[derive(Clone, Debug)]
pub struct TimeOrderedExp {
    /// `U(x, y) Θ` per entry, each a rank-`r` separable kernel.
    pub kernel: MatrixStarElement,
    v: Vec<Vec<UnivariateFn>>,
    w: Vec<Vec<UnivariateFn>>,
    pub steps: usize,
    pub condition: f64,
    /// Sup of the Θ coefficient of `(δ I - A(y) Θ) ★ U Θ - Θ I` on probes
    /// with `x ≥ y`.
    pub resolvent_residual: f64,
}

impl TimeOrderedExp {
    pub fn dim(&self) -> usize {
        self.v.len()
    }

    /// `U(x, y)`.
    pub fn eval(&self, x: f64, y: f64) -> DMatrix<C64> {
        let r = self.dim();
        let vx = DMatrix::from_fn(r, r, |i, j| self.v[i][j].eval(x));
        let wy = DMatrix::from_fn(r, r, |i, j| self.w[i][j].eval(y));
        vx * wy
    }

    /// Largest `|U(x, y) U(y, z) - U(x, z)|` over the given triples.
    pub fn flow_defect(&self, triples: &[(f64, f64, f64)]) -> f64 {
        triples
            .iter()
            .map(|&(x, y, z)| amax(&(self.eval(x, y) * self.eval(y, z) - self.eval(x, z))))
            .fold(0.0, f64::max)
    }
}

fn generator_element(a: &[Vec<UnivariateFn>]) -> Result<MatrixStarElement> {
    let r = a.len();
    let domain = a[0][0].domain();
    MatrixStarElement::from_fn(r, domain, |i, j| StarElement::smooth_part(SeparableFn::of_y(a[i][j].clone())))
}

fn check_square(a: &[Vec<UnivariateFn>]) -> Result<Interval> {
    let r = a.len();
    if r == 0 || a.iter().any(|row| row.len() != r) {
        return Err(StarError::InvalidArgument("generator must be a non-empty square matrix".into()));
    }
    let domain = a[0][0].domain();
    if a.iter().flatten().any(|f| f.domain() != domain) {
        return Err(StarError::DomainMismatch);
    }
    Ok(domain)
}

/// Time-ordered exponential of `A` via the fundamental matrix, with the
/// resolvent identity `(δ I - A(y) Θ) ★ U Θ = Θ I` checked on probes.
pub fn time_ordered_exp(a: &[Vec<UnivariateFn>], tol: f64) -> Result<TimeOrderedExp> {
    let domain = check_square(a)?;
    let r = a.len();
    let generator = |x: f64| DMatrix::from_fn(r, r, |i, j| a[i][j].eval(x));
    let fm = Fundamental::solve(domain, r, generator, tol)?;
    let v = fm.v_entries();
    let w = fm.w_entries();
    let kernel = MatrixStarElement::from_fn(r, domain, |i, j| {
        let terms = (0..r).map(|k| (v[i][k].clone(), w[k][j].clone())).collect();
        StarElement::smooth_part(SeparableFn::new(domain, terms).expect("shared domain"))
    })?;
    let lhs = MatrixStarElement::identity(r, domain).sub(&generator_element(a)?)?;
    let prod = star_matrix_mul(&lhs, &kernel)?;
    let defect = prod.sub(&MatrixStarElement::diagonal(r, StarElement::theta(domain)))?;
    let mut resolvent_residual: f64 = 0.0;
    let p = domain.chebyshev_points(PROBE_POINTS / 2);
    for i in 0..r {
        for j in 0..r {
            let e = defect.get(i, j);
            for (&k, c) in e.parts() {
                let g = c.eval_grid(&p, &p);
                for (xi, &x) in p.iter().enumerate() {
                    for (yi, &y) in p.iter().enumerate() {
                        if k >= 0 || x >= y {
                            resolvent_residual = resolvent_residual.max(g[(xi, yi)].norm());
                        }
                    }
                }
            }
        }
    }
    if resolvent_residual > tol.max(1e-12) * 100.0 {
        return Err(StarError::ResidualTooLarge { what: "time-ordered resolvent identity", residual: resolvent_residual, tol });
    }
    Ok(TimeOrderedExp { kernel, v, w, steps: fm.steps(), condition: fm.condition(), resolvent_residual })
}

/// Truncated series `Σ_{n=0}^{terms-1} (A(y) Θ)^{★n} ★ Θ I`. The omitted
/// remainder is bounded by `(‖A‖ |I|)^{terms} / terms!` times `e^{‖A‖ |I|}`.
pub fn neumann_toe(a: &[Vec<UnivariateFn>], terms: usize) -> Result<MatrixStarElement> {
    let domain = check_square(a)?;
    let r = a.len();
    let k = generator_element(a)?;
    let mut term = MatrixStarElement::diagonal(r, StarElement::theta(domain));
    let mut sum = term.clone();
    for _ in 1..terms {
        term = star_matrix_mul(&k, &term)?;
        sum = sum.add(&term)?;
    }
    Ok(sum)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn unit() -> Interval {
        Interval::unit()
    }

    #[test]
    fn volterra_unit_kernel() {
        let p = VolterraProblem::new(SeparableFn::constant(unit(), 1.0), UnivariateFn::constant(unit(), 1.0)).unwrap();
        let s = solve_volterra2(&p, 1e-10).unwrap();
        assert!((s.u.eval(1.0) - std::f64::consts::E).norm() < 1e-8);
        assert!(s.residual < 1e-9);
    }

    #[test]
    fn volterra_zero_kernel() {
        let g = UnivariateFn::identity(unit());
        let p = VolterraProblem::new(SeparableFn::zero(unit()), g.clone()).unwrap();
        let s = solve_volterra2(&p, 1e-10).unwrap();
        assert!(unit().chebyshev_points(20).iter().all(|&x| (s.u.eval(x) - g.eval(x)).norm() < 1e-15));
    }

    #[test]
    fn volterra_oscillatory_kernel() {
        // K = -(x - y): u'' = -u, u(0) = 0, u'(0) = 1 for g = x
        let d = unit();
        let x = UnivariateFn::identity(d);
        let one = UnivariateFn::constant(d, 1.0);
        let k = SeparableFn::new(d, vec![(x.scale(-1.0), one.clone()), (one, x.clone())]).unwrap();
        let p = VolterraProblem::new(k, x).unwrap();
        let s = solve_volterra2(&p, 1e-8).unwrap();
        for &t in &d.chebyshev_points(20) {
            assert!((s.u.eval(t) - t.sin()).norm() < 1e-9);
        }
    }

    #[test]
    fn scalar_toe() {
        let a = vec![vec![UnivariateFn::constant(unit(), 0.7)]];
        let t = time_ordered_exp(&a, 1e-12).unwrap();
        for &(x, y) in &[(1.0, 0.0), (0.5, 0.25), (0.3, 0.3)] {
            assert!((t.eval(x, y)[(0, 0)] - (0.7 * (x - y)).exp()).norm() < 1e-10);
        }
        let u = t.kernel.get(0, 0).part(-1).unwrap();
        assert!((u.eval(0.9, 0.1) - (0.7f64 * 0.8).exp()).norm() < 1e-10);
    }

    #[test]
    fn identity_is_unit_for_matrices() {
        let d = unit();
        let m = MatrixStarElement::from_fn(2, d, |i, j| {
            StarElement::smooth_part(SeparableFn::constant(d, (i + 2 * j) as f64))
        })
        .unwrap();
        let p = star_matrix_mul(&MatrixStarElement::identity(2, d), &m).unwrap();
        for i in 0..2 {
            for j in 0..2 {
                let r = crate::actions::action_residual(p.get(i, j), m.get(i, j), 5).unwrap();
                assert!(r < 1e-13);
            }
        }
    }
}
