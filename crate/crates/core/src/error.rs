//! Crate-wide error type.

use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("rank deficiency at pivot column {pivot} (|R_ii| = {value:.3e})")]
    RankDeficient { pivot: usize, value: f64 },

    #[error("recovery error requested but the instance carries no ground truth")]
    MissingGroundTruth,

    #[error("initial point is infeasible: {detail}")]
    InfeasibleStart { detail: String },

    #[error(
        "dual root finding failed to bracket a root (T({lambda_lo:.3e}) = {t_lo:.3e}, \
         T({lambda_hi:.3e}) = {t_hi:.3e}); the subproblem likely violates the Slater condition"
    )]
    DualRootBracket {
        lambda_lo: f64,
        t_lo: f64,
        lambda_hi: f64,
        t_hi: f64,
    },

    #[error("line search drove the stepsize below {beta:.3e}; an objective or gradient oracle is inconsistent")]
    LineSearchStalled { beta: f64 },

    #[error("retraction root not found in (0, 1): {detail}")]
    RetractionRoot { detail: String },

    #[error("majorant radius is nonpositive ({value:.3e}); the anchor point is infeasible")]
    SigmaTildeNonpositive { value: f64 },

    #[error("solver supports a single smooth inequality constraint, got {count}")]
    UnsupportedConstraints { count: usize },

    #[error("degenerate instance dimensions: {detail}")]
    DegenerateDimensions { detail: String },

    #[error("invalid configuration: {0}")]
    InvalidConfig(String),

    #[error("malformed instance file: {0}")]
    MalformedInstance(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}
