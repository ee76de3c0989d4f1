//! ★-inverses: Volterra resolvents of separable kernels, Θ-kernel inversion,
//! finite-order inversion through Θ powers, and the rank-one closed form.

use nalgebra::DMatrix;
use num_complex::Complex64 as C64;

use crate::actions::action_residual;
use crate::error::{Result, StarError};
use crate::fundamental::{Fundamental, OUTPUT_DEGREE};
use crate::kernels::{SeparableFn, UnivariateFn, PROBE_POINTS};
use crate::star::StarElement;

/// Smallest admissible `|e(x, x)|` when inverting `e Θ`.
pub const DIAG_FLOOR: f64 = 1e-8;
/// Largest Dirac coefficient tolerated in `d ★ Θ^{k+1}`.
pub const DIRAC_RESIDUE: f64 = 1e-9;
/// Test functions used for multiply-back residuals.
pub const RESIDUAL_TRIALS: usize = 10;

/// Resolvent `R` of a separable kernel `K`, with `R = K + K ★ R` on `x ≥ y`.
#[derive(Clone, Debug)]
pub struct ResolventResult {
    pub resolvent: SeparableFn,
    /// `∂_x R`, from `(aᵀV)' = (a' + (aᵀb) a)ᵀ V` at the solver nodes rather
    /// than by differentiating the interpolant.
    pub resolvent_dx: SeparableFn,
    /// `V(x)` with `V' = b aᵀ V`, `V(lo) = I`; empty for `K = 0`.
    pub fundamental: Vec<Vec<UnivariateFn>>,
    /// Largest `‖V‖ ‖V⁻¹‖ / s` over the solver nodes.
    pub condition: f64,
    /// Sup of `|R - K - K ★ R|` on probes with `x ≥ y`, relative to `1 + sup |R|`.
    pub residual: f64,
}

/// An inverse together with its multiply-back residuals against `δ`.
#[derive(Clone, Debug)]
pub struct Inversion {
    pub inverse: StarElement,
    pub left_residual: f64,
    pub right_residual: f64,
}

/// Resolvent of `K(x, y) = Σ a_i(x) b_i(y)` through the fundamental matrix:
/// `R(x, y) = a(x)ᵀ V(x) V(y)⁻¹ b(y)`.
pub fn volterra_resolvent(k: &SeparableFn, tol: f64) -> Result<ResolventResult> {
    let domain = k.domain();
    let k = k.compress(1e-14);
    if k.is_empty() {
        return Ok(ResolventResult {
            resolvent: SeparableFn::zero(domain),
            resolvent_dx: SeparableFn::zero(domain),
            fundamental: Vec::new(),
            condition: 1.0,
            residual: 0.0,
        });
    }
    let s = k.rank();
    let terms = k.terms();
    let generator = |x: f64| {
        let a: Vec<C64> = terms.iter().map(|(a, _)| a.eval(x)).collect();
        let b: Vec<C64> = terms.iter().map(|(_, b)| b.eval(x)).collect();
        DMatrix::from_fn(s, s, |i, j| b[i] * a[j])
    };
    let fm = Fundamental::solve(domain, s, generator, tol)?;
    let nodes = fm.nodes();
    let a_nodes: Vec<Vec<C64>> = nodes.iter().map(|&x| terms.iter().map(|(a, _)| a.eval(x)).collect()).collect();
    let b_nodes: Vec<Vec<C64>> = nodes.iter().map(|&x| terms.iter().map(|(_, b)| b.eval(x)).collect()).collect();
    let da: Vec<UnivariateFn> = terms.iter().map(|(a, _)| a.diff()).collect();
    let da_nodes: Vec<Vec<C64>> = nodes
        .iter()
        .enumerate()
        .map(|(n, &x)| {
            let kxx: C64 = (0..s).map(|i| a_nodes[n][i] * b_nodes[n][i]).sum();
            (0..s).map(|i| da[i].eval(x) + kxx * a_nodes[n][i]).collect()
        })
        .collect();
    let mut out = Vec::with_capacity(s);
    let mut out_dx = Vec::with_capacity(s);
    for j in 0..s {
        let p = fm.interpolate_nodes(|n| (0..s).map(|i| a_nodes[n][i] * fm.v_at_nodes()[n][(i, j)]).sum());
        let dp = fm.interpolate_nodes(|n| (0..s).map(|i| da_nodes[n][i] * fm.v_at_nodes()[n][(i, j)]).sum());
        let q = fm.interpolate_nodes(|n| (0..s).map(|i| fm.w_at_nodes()[n][(j, i)] * b_nodes[n][i]).sum());
        out.push((p, q.clone()));
        out_dx.push((dp, q));
    }
    let resolvent = SeparableFn::new(domain, out)?;
    let resolvent_dx = SeparableFn::new(domain, out_dx)?;
    let residual = resolvent_residual(&k, &resolvent)?;
    if residual > tol {
        return Err(StarError::ResidualTooLarge { what: "resolvent identity", residual, tol });
    }
    Ok(ResolventResult {
        resolvent,
        resolvent_dx,
        fundamental: fm.v_entries(),
        condition: fm.condition(),
        residual,
    })
}

/// Sup over probes with `x ≥ y` of `|R - K - K ★ R|`, relative to `1 + sup |R|`.
pub fn resolvent_residual(k: &SeparableFn, r: &SeparableFn) -> Result<f64> {
    let kr = StarElement::smooth_part(k.clone()).star(&StarElement::smooth_part(r.clone()))?;
    let kr = kr.part(-1).cloned().unwrap_or_else(|| SeparableFn::zero(k.domain()));
    let diff = r.sub(k)?.sub(&kr)?;
    Ok(lower_sup(&diff) / (1.0 + lower_sup(r)))
}

fn lower_sup(f: &SeparableFn) -> f64 {
    let p = f.domain().chebyshev_points(PROBE_POINTS);
    let g = f.eval_grid(&p, &p);
    let mut m: f64 = 0.0;
    for i in 0..p.len() {
        for j in 0..=i {
            m = m.max(g[(i, j)].norm());
        }
    }
    m
}

fn exp_of(f: &UnivariateFn, sign: f64) -> Result<UnivariateFn> {
    UnivariateFn::interpolate(|x| (f.eval(x) * sign).exp(), f.domain(), OUTPUT_DEGREE)
}

/// `(δ - a(x) b(y) Θ)^{★-1} = δ + a(x) b(y) exp(∫_y^x a b) Θ`.
pub fn rank1_resolvent(a: &UnivariateFn, b: &UnivariateFn) -> Result<StarElement> {
    let domain = a.domain();
    let ab = a.mul(b)?;
    let id = StarElement::identity(domain);
    if ab.is_zero() {
        return Ok(id);
    }
    let big_f = ab.antideriv(domain.lo());
    let left = a.mul(&exp_of(&big_f, 1.0)?)?;
    let right = b.mul(&exp_of(&big_f, -1.0)?)?;
    id.add(&StarElement::smooth_part(SeparableFn::rank1(left, right)?))
}

fn multiply_back(d: &StarElement, inverse: StarElement, tol: f64) -> Result<Inversion> {
    let id = StarElement::identity(d.domain());
    let left_residual = action_residual(&d.star(&inverse)?, &id, RESIDUAL_TRIALS)?;
    let right_residual = action_residual(&inverse.star(d)?, &id, RESIDUAL_TRIALS)?;
    let worst = left_residual.max(right_residual);
    if !(worst <= tol) {
        return Err(StarError::ResidualTooLarge { what: "multiply-back", residual: worst, tol });
    }
    Ok(Inversion { inverse, left_residual, right_residual })
}

/// Inverse of `e(x, y) Θ` with a diagonal `D` bounded away from zero:
/// `δ' ★ (δ / D) ★ (δ + R Θ)`, `R` the resolvent of `e_y(x, y) / D(y)`.
/// Expanded as `δ'/D + ((1/D)' + R(x, x)/D) δ + ∂_x(R/D) Θ` so that the
/// computed resolvent is never differentiated numerically.
pub fn invert_theta_kernel(e: &StarElement, tol: f64) -> Result<Inversion> {
    invert_theta_kernel_with_floor(e, tol, DIAG_FLOOR)
}

pub fn invert_theta_kernel_with_floor(e: &StarElement, tol: f64, floor: f64) -> Result<Inversion> {
    let en = e.normalized()?;
    if en.parts().keys().any(|&k| k != -1) {
        return Err(StarError::InvalidArgument("expected an element with only a Θ part".into()));
    }
    let domain = e.domain();
    let coeff = en.part(-1).cloned().unwrap_or_else(|| SeparableFn::zero(domain));
    let diag = coeff.diag();
    let (x, value) = diag.min_abs();
    if !(value > floor) {
        return Err(StarError::VanishingDiagonal { x, value, floor });
    }
    let inv_diag = UnivariateFn::approximate(|x| 1.0 / diag.eval(x), domain)?;
    let ddiag = diag.diff();
    let inv_diag_dx = UnivariateFn::approximate(|x| -ddiag.eval(x) / diag.eval(x).powi(2), domain)?;
    let kernel = coeff.partial(0, 1).mul_y(&inv_diag).compress(1e-14);
    let res = volterra_resolvent(&kernel, tol)?;
    let r = &res.resolvent;
    let order0 = inv_diag_dx.add(&r.diag().mul(&inv_diag)?)?;
    let theta = res.resolvent_dx.mul_x(&inv_diag).add(&r.mul_x(&inv_diag_dx))?;
    let inverse = StarElement::from_parts(
        domain,
        vec![
            (1, SeparableFn::of_x(inv_diag)),
            (0, SeparableFn::of_x(order0)),
            (-1, theta.compress(crate::star::STAR_TOL)),
        ],
    )?;
    multiply_back(e, inverse, tol)
}

/// Inverse of an order-`k` element through `e = d ★ Θ^{k+1}`, which must be a
/// pure Θ kernel: `d^{★-1} = Θ^{k+1} ★ e^{★-1}`.
pub fn invert_finite_order(d: &StarElement, tol: f64) -> Result<Inversion> {
    let domain = d.domain();
    let dn = d.normalized()?;
    let k = dn
        .order()
        .ok_or_else(|| StarError::InvalidArgument("the zero element has no inverse".into()))?;
    let theta_pow = StarElement::theta(domain).star_power(k + 1)?;
    let e = dn.star(&theta_pow)?;
    let probes = domain.chebyshev_points(PROBE_POINTS);
    for (&order, c) in e.parts() {
        if order >= 0 {
            let u = c.diag();
            let magnitude = u.max_abs_on(&probes);
            if magnitude > DIRAC_RESIDUE {
                return Err(StarError::DiracResidue { order, magnitude });
            }
        }
    }
    let theta_only = match e.part(-1) {
        Some(c) => StarElement::smooth_part(c.clone()),
        None => return Err(StarError::VanishingDiagonal { x: domain.lo(), value: 0.0, floor: DIAG_FLOOR }),
    };
    let inner = invert_theta_kernel(&theta_only, tol)?;
    let inverse = theta_pow.star(&inner.inverse)?;
    multiply_back(d, inverse, tol)
}

/// Residual of `δ' ★ (e^{H(x) - H(y)} Θ) ★ (δ - h(x) Θ)` against `δ`, with
/// `H` an antiderivative of `h`.
pub fn exp_identity_check(h: &UnivariateFn) -> Result<f64> {
    let domain = h.domain();
    let big_h = h.antideriv(domain.lo());
    let kernel = SeparableFn::rank1(exp_of(&big_h, 1.0)?, exp_of(&big_h, -1.0)?)?;
    let id = StarElement::identity(domain);
    let chain = StarElement::delta(1, domain)
        .star(&StarElement::smooth_part(kernel))?
        .star(&id.sub(&StarElement::smooth_part(SeparableFn::of_x(h.clone())))?)?;
    action_residual(&chain, &id, RESIDUAL_TRIALS)
}
