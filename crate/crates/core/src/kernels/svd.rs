//! One-sided Jacobi SVD for the small complex matrices met in rank reduction.
//! Tiny singular values come out with small relative error, which the
//! truncation in `SeparableFn::compress` depends on.

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64 as C64;

const MAX_SWEEPS: usize = 80;

/// Thin SVD `m = U diag(σ) Vᴴ` with `σ` descending; `U` is `m × k` and `Vᴴ`
/// is `k × n` for `k = min(m, n)`. Columns of `U` for `σ = 0` are zero.
pub(crate) fn thin_svd(m: &DMatrix<C64>) -> (DMatrix<C64>, DVector<f64>, DMatrix<C64>) {
    if m.nrows() < m.ncols() {
        let (u, s, vt) = thin_svd(&m.adjoint());
        return (vt.adjoint(), s, u.adjoint());
    }
    let n = m.ncols();
    let mut a = m.clone();
    let mut v = DMatrix::<C64>::identity(n, n);
    for _ in 0..MAX_SWEEPS {
        let mut rotated = false;
        for p in 0..n {
            for q in p + 1..n {
                let alpha = a.column(p).norm_squared();
                let beta = a.column(q).norm_squared();
                let gamma = a.column(p).dotc(&a.column(q));
                let g = gamma.norm();
                if g == 0.0 || g <= f64::EPSILON * (alpha * beta).sqrt() {
                    continue;
                }
                rotated = true;
                // rotate column q by the phase of γ so the pair is real
                let phase = (gamma / g).conj();
                let zeta = (beta - alpha) / (2.0 * g);
                let t = zeta.signum() / (zeta.abs() + (1.0 + zeta * zeta).sqrt());
                let c = 1.0 / (1.0 + t * t).sqrt();
                let s = c * t;
                for mat in [&mut a, &mut v] {
                    for i in 0..mat.nrows() {
                        let xp = mat[(i, p)];
                        let xq = mat[(i, q)] * phase;
                        mat[(i, p)] = xp * c - xq * s;
                        mat[(i, q)] = xp * s + xq * c;
                    }
                }
            }
        }
        if !rotated {
            break;
        }
    }
    let norms: Vec<f64> = (0..n).map(|j| a.column(j).norm()).collect();
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| norms[j].total_cmp(&norms[i]));
    let sig = DVector::from_iterator(n, order.iter().map(|&j| norms[j]));
    let u = DMatrix::from_fn(m.nrows(), n, |i, k| {
        let j = order[k];
        if norms[j] > 0.0 {
            a[(i, j)] / norms[j]
        } else {
            C64::new(0.0, 0.0)
        }
    });
    let vt = DMatrix::from_fn(n, n, |k, i| v[(i, order[k])].conj());
    (u, sig, vt)
}
