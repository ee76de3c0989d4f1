use thiserror::Error;

/// Errors raised by the algebra, the solvers and the discretization oracle.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum StarError {
    #[error("invalid interval [{lo}, {hi}]: endpoints must be finite with lo < hi")]
    InvalidInterval { lo: f64, hi: f64 },

    #[error("non-finite sample value at x = {x}")]
    NonFiniteSample { x: f64 },

    #[error("operands live on different domains")]
    DomainMismatch,

    #[error("operands have different orientations")]
    OrientationMismatch,

    #[error("star product defined on causal representation only")]
    AnticausalOperand,

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("negative star power of a non-pure element (only delta(k) admits negative powers)")]
    NegativePower,

    #[error("diagonal |e(x,x)| = {value:.3e} at x = {x} is below the floor {floor:.1e}; isolated non-invertible points are not supported")]
    VanishingDiagonal { x: f64, value: f64, floor: f64 },

    #[error("e = d * Theta^(k+1) keeps a Dirac residue of size {magnitude:.3e} at order {order}")]
    DiracResidue { order: i32, magnitude: f64 },

    #[error("fundamental matrix numerically singular at x = {x} (condition {condition:.3e})")]
    SingularFundamental { x: f64, condition: f64 },

    #[error("step control failed: {steps} steps, successive difference {difference:.3e} above {target:.3e}")]
    StepControl {
        steps: usize,
        difference: f64,
        target: f64,
    },

    #[error("{what}: residual {residual:.3e} exceeds tolerance {tol:.1e}")]
    ResidualTooLarge {
        what: &'static str,
        residual: f64,
        tol: f64,
    },
}

pub type Result<T, E = StarError> = std::result::Result<T, E>;
