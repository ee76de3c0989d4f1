//! Coefficient algebra: Chebyshev interpolants, separable bivariate sums and
//! quadrature.

mod interval;
mod quadrature;
mod separable;
mod svd;
mod univariate;

pub use interval::Interval;
pub use quadrature::{ClenshawCurtis, CC_NODES};
pub use separable::{SeparableFn, Slot};
pub use univariate::{UnivariateFn, DEFAULT_DEGREE, MAX_DEGREE};

/// Probe points per axis used by deviation and norm checks.
pub const PROBE_POINTS: usize = 100;
