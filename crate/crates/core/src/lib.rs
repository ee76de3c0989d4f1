//! The ★-product algebra of causal distributions
//! `d = Σ_{i ≥ -1} d_i(x, y) δ^(i)(x - y)` on a compact interval.

pub mod actions;
pub mod cli;
pub mod discretize;
pub mod error;
pub mod fundamental;
pub mod inverse;
pub mod kernels;
pub mod seminorms;
pub mod solvers;
pub mod star;

pub use error::{Result, StarError};
pub use kernels::{Interval, SeparableFn, UnivariateFn};
pub use star::{Orientation, StarElement};
