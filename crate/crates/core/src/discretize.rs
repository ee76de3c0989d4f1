//! Triangular-matrix discretization: elements sampled on uniform grids, with
//! the ★-product replaced by the `Δx`-weighted matrix product.

use std::io::{self, Read, Write};

use nalgebra::DMatrix;
use num_complex::Complex64 as C64;
use rayon::prelude::*;

use crate::error::{Result, StarError};
use crate::kernels::Interval;
use crate::star::{binom, Orientation, StarElement};

/// Header magic of the binary matrix dump.
pub const MAGIC: &[u8; 8] = b"STARMAT1";

/// Inclusive uniform grid `x_i = lo + i Δx`, `Δx = |I| / (N - 1)`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Grid {
    domain: Interval,
    n: usize,
}

impl Grid {
    pub fn new(domain: Interval, n: usize) -> Result<Self> {
        if n < 2 {
            return Err(StarError::InvalidArgument(format!("grid needs at least 2 points, got {n}")));
        }
        Ok(Self { domain, n })
    }

    pub fn domain(&self) -> Interval {
        self.domain
    }

    pub fn len(&self) -> usize {
        self.n
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn dx(&self) -> f64 {
        self.domain.len() / (self.n - 1) as f64
    }

    pub fn point(&self, i: usize) -> f64 {
        if i + 1 == self.n {
            self.domain.hi()
        } else {
            self.domain.lo() + i as f64 * self.dx()
        }
    }

    pub fn points(&self) -> Vec<f64> {
        (0..self.n).map(|i| self.point(i)).collect()
    }

    /// `Σ h_i f_i Δx`.
    pub fn inner(&self, h: &[C64], f: &[C64]) -> C64 {
        h.iter().zip(f).map(|(a, b)| a * b).sum::<C64>() * self.dx()
    }
}

/// Sampled element: lower triangular for causal input, upper triangular for
/// anticausal input or after [`mat_transpose`].
#[derive(Clone, Debug, PartialEq)]
pub struct TriangularSample {
    grid: Grid,
    entries: DMatrix<C64>,
    upper: bool,
}

impl TriangularSample {
    pub fn grid(&self) -> Grid {
        self.grid
    }

    pub fn entries(&self) -> &DMatrix<C64> {
        &self.entries
    }

    pub fn is_upper(&self) -> bool {
        self.upper
    }

    /// `F f`.
    pub fn apply(&self, f: &[C64]) -> Vec<C64> {
        let v = nalgebra::DVector::from_column_slice(f);
        (&self.entries * v).iter().copied().collect()
    }

    /// Writes the 16-byte header and row-major little-endian complex pairs.
    pub fn write_binary(&self, w: &mut impl Write) -> io::Result<()> {
        let n = self.grid.len();
        w.write_all(MAGIC)?;
        w.write_all(&(n as u32).to_le_bytes())?;
        w.write_all(&0u32.to_le_bytes())?;
        for i in 0..n {
            for j in 0..n {
                let z = self.entries[(i, j)];
                w.write_all(&z.re.to_le_bytes())?;
                w.write_all(&z.im.to_le_bytes())?;
            }
        }
        Ok(())
    }

    /// Reads a dump written by [`TriangularSample::write_binary`] onto `domain`.
    pub fn read_binary(r: &mut impl Read, domain: Interval) -> io::Result<Self> {
        let mut head = [0u8; 16];
        r.read_exact(&mut head)?;
        if &head[..8] != MAGIC {
            return Err(io::Error::new(io::ErrorKind::InvalidData, "bad magic"));
        }
        let n = u32::from_le_bytes(head[8..12].try_into().unwrap()) as usize;
        let grid = Grid::new(domain, n).map_err(|e| io::Error::new(io::ErrorKind::InvalidData, e))?;
        let mut entries = DMatrix::zeros(n, n);
        let mut buf = [0u8; 16];
        for i in 0..n {
            for j in 0..n {
                r.read_exact(&mut buf)?;
                let re = f64::from_le_bytes(buf[..8].try_into().unwrap());
                let im = f64::from_le_bytes(buf[8..].try_into().unwrap());
                entries[(i, j)] = C64::new(re, im);
            }
        }
        let upper = (0..n).any(|i| (i + 1..n).any(|j| entries[(i, j)] != C64::new(0.0, 0.0)));
        Ok(Self { grid, entries, upper })
    }
}

/// `H^{-k} / Δx^{k+1}` for any integer `k`, `H` the all-ones lower triangle.
/// Negative `k` gives `H^{|k|} Δx^{|k|-1}`, the grid image of `Θ^{★|k|}`.
pub fn delta_matrix(k: i32, grid: Grid) -> TriangularSample {
    let n = grid.len();
    let dx = grid.dx();
    let scale = dx.powi(-(k + 1));
    let entries = DMatrix::from_fn(n, n, |i, j| {
        if j > i {
            return C64::new(0.0, 0.0);
        }
        C64::new(h_power_entry(k, i - j) * scale, 0.0)
    });
    TriangularSample { grid, entries, upper: false }
}

// Entry at offset l = i - j of H^{-k}.
fn h_power_entry(k: i32, l: usize) -> f64 {
    if k >= 0 {
        let k = k as usize;
        if l > k {
            0.0
        } else {
            let s = if l % 2 == 0 { 1.0 } else { -1.0 };
            s * binom(k, l)
        }
    } else {
        let m = (-k) as usize;
        binom(l + m - 1, m - 1)
    }
}

/// Θ part sampled entrywise with `Θ(0) = 1`; the order-`k` Dirac part `c`
/// contributes `c(x_i, x_j) ∘ H^{-k} / Δx^{k+1}`.
pub fn sample(d: &StarElement, grid: Grid) -> Result<TriangularSample> {
    if d.domain() != grid.domain() {
        return Err(StarError::DomainMismatch);
    }
    if d.orientation() == Orientation::Anticausal && d.has_theta() {
        let causal = crate::actions::transpose(d);
        return Ok(mat_transpose(&sample(&causal, grid)?));
    }
    let n = grid.len();
    let pts = grid.points();
    let dx = grid.dx();
    let mut entries = DMatrix::<C64>::zeros(n, n);
    for (&k, c) in d.parts() {
        if k == -1 {
            let vals = c.eval_grid(&pts, &pts);
            for i in 0..n {
                for j in 0..=i {
                    entries[(i, j)] += vals[(i, j)];
                }
            }
        } else {
            let band = k as usize;
            let scale = dx.powi(-(k + 1));
            for i in 0..n {
                for l in 0..=band.min(i) {
                    let j = i - l;
                    entries[(i, j)] += c.eval(pts[i], pts[j]) * (h_power_entry(k, l) * scale);
                }
            }
        }
    }
    Ok(TriangularSample { grid, entries, upper: false })
}

/// `F G Δx`, summing only over the triangular band.
pub fn mat_star(f: &TriangularSample, g: &TriangularSample) -> Result<TriangularSample> {
    if f.grid != g.grid {
        return Err(StarError::DomainMismatch);
    }
    if f.upper != g.upper {
        return Err(StarError::OrientationMismatch);
    }
    let n = f.grid.len();
    let dx = f.grid.dx();
    let upper = f.upper;
    let rows: Vec<Vec<C64>> = (0..n)
        .into_par_iter()
        .map(|i| {
            let mut row = vec![C64::new(0.0, 0.0); n];
            let cols: Box<dyn Iterator<Item = usize>> =
                if upper { Box::new(i..n) } else { Box::new(0..=i) };
            for j in cols {
                let (lo, hi) = if upper { (i, j) } else { (j, i) };
                let mut s = C64::new(0.0, 0.0);
                for k in lo..=hi {
                    s += f.entries[(i, k)] * g.entries[(k, j)];
                }
                row[j] = s * dx;
            }
            row
        })
        .collect();
    let entries = DMatrix::from_fn(n, n, |i, j| rows[i][j]);
    Ok(TriangularSample { grid: f.grid, entries, upper })
}

pub fn mat_transpose(f: &TriangularSample) -> TriangularSample {
    TriangularSample { grid: f.grid, entries: f.entries.transpose(), upper: !f.upper }
}

/// Sup error per grid size and least-squares rate in `Δx`.
#[derive(Clone, Debug, PartialEq, serde::Serialize)]
pub struct ConvergenceReport {
    pub sizes: Vec<usize>,
    pub dx: Vec<f64>,
    pub errors: Vec<f64>,
    /// Slope of `log error` against `log Δx`; `NaN` when an error vanishes.
    pub rate: f64,
}

/// Compares `mat_star(sample d, sample e)` with `sample(d ★ e)` on each grid.
pub fn convergence_probe(d: &StarElement, e: &StarElement, sizes: &[usize]) -> Result<ConvergenceReport> {
    let exact = d.star(e)?;
    let mut dxs = Vec::with_capacity(sizes.len());
    let mut errors = Vec::with_capacity(sizes.len());
    for &n in sizes {
        let grid = Grid::new(d.domain(), n)?;
        let prod = mat_star(&sample(d, grid)?, &sample(e, grid)?)?;
        let want = sample(&exact, grid)?;
        let err = (prod.entries() - want.entries()).iter().fold(0.0f64, |m, z| m.max(z.norm()));
        dxs.push(grid.dx());
        errors.push(err);
    }
    let rate = fitted_rate(&dxs, &errors);
    Ok(ConvergenceReport { sizes: sizes.to_vec(), dx: dxs, errors, rate })
}

fn fitted_rate(dx: &[f64], err: &[f64]) -> f64 {
    if dx.len() < 2 || err.iter().any(|&e| !(e > 0.0)) {
        return f64::NAN;
    }
    let xs: Vec<f64> = dx.iter().map(|v| v.ln()).collect();
    let ys: Vec<f64> = err.iter().map(|v| v.ln()).collect();
    let n = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let sxy: f64 = xs.iter().zip(&ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let sxx: f64 = xs.iter().map(|x| (x - mx).powi(2)).sum();
    sxy / sxx
}

#[cfg(test)]
mod tests {
    use super::*;

    fn max_abs(m: &DMatrix<C64>) -> f64 {
        m.iter().fold(0.0, |a, z| a.max(z.norm()))
    }

    #[test]
    fn basic_samples() {
        let g = Grid::new(Interval::unit(), 9).unwrap();
        let d = g.domain();
        let h = sample(&StarElement::theta(d), g).unwrap();
        assert_eq!(h, delta_matrix(-1, g));
        assert!(h.entries()[(3, 3)] == C64::new(1.0, 0.0) && h.entries()[(3, 4)] == C64::new(0.0, 0.0));
        let id = sample(&StarElement::identity(d), g).unwrap();
        assert!(max_abs(&(id.entries() - DMatrix::identity(9, 9) / C64::new(g.dx(), 0.0))) < 1e-12);
    }

    #[test]
    fn dprime_theta_is_identity() {
        let g = Grid::new(Interval::unit(), 33).unwrap();
        let p = mat_star(&delta_matrix(1, g), &delta_matrix(-1, g)).unwrap();
        let want = delta_matrix(0, g);
        assert!(max_abs(&(p.entries() - want.entries())) <= 1e-12 * max_abs(want.entries()));
    }

    #[test]
    fn theta_square_first_order() {
        let g = Grid::new(Interval::unit(), 17).unwrap();
        let h = delta_matrix(-1, g);
        let p = mat_star(&h, &h).unwrap();
        for i in 0..17 {
            for j in 0..=i {
                let want = (i - j + 1) as f64 * g.dx();
                assert!((p.entries()[(i, j)].re - want).abs() < 1e-14);
            }
        }
    }

    #[test]
    fn binary_round_trip() {
        let g = Grid::new(Interval::new(-1.0, 2.0).unwrap(), 5).unwrap();
        let s = delta_matrix(2, g);
        let mut buf = Vec::new();
        s.write_binary(&mut buf).unwrap();
        assert_eq!(buf.len(), 16 + 25 * 16);
        assert_eq!(&buf[..8], b"STARMAT1");
        let back = TriangularSample::read_binary(&mut buf.as_slice(), g.domain()).unwrap();
        assert_eq!(back, s);
    }

    #[test]
    fn transpose_of_samples() {
        let g = Grid::new(Interval::unit(), 6).unwrap();
        let d = delta_matrix(0, g);
        assert_eq!(mat_transpose(&d).entries(), d.entries());
        let h = mat_transpose(&delta_matrix(-1, g));
        assert!(h.is_upper());
        assert_eq!(h.entries()[(0, 5)], C64::new(1.0, 0.0));
        assert_eq!(h.entries()[(5, 0)], C64::new(0.0, 0.0));
    }
}
