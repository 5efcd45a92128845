use thiserror::Error;

/// Errors produced by the map evaluators and the spectral pipeline.
#[derive(Debug, Error)]
pub enum Error {
    /// Input outside the domain of a map (pole of a Möbius transform, |z| too small, ...).
    #[error("input outside map domain: {0}")]
    Domain(String),

    /// Evaluation landed on a branch cut or at a singular point.
    #[error("degenerate input: {0}")]
    Degenerate(String),

    /// Circle sampling too coarse to unwrap root branches.
    #[error("insufficient angular resolution: phase jump {jump:.3} rad between adjacent samples")]
    InsufficientResolution { jump: f64 },

    /// ψ^k(x) = x has no solution above 1 for this block/k pair.
    #[error("no critical radius: psi(x)^{k} = x has no root in (1, {x_max:.3e})")]
    NoFixedPoint { k: u32, x_max: f64 },

    /// A parameter combination the operation does not support.
    #[error("unsupported parameter: {0}")]
    UnsupportedParameter(String),

    /// Iterative solver ran out of iterations.
    #[error("no convergence after {iterations} iterations (residual {residual:.3e})")]
    NonConvergence { iterations: usize, residual: f64 },

    /// Least-squares fit produced a function that is not positive on the interval.
    #[error("rational fit rejected: not strictly positive on [1, {r:.4}]")]
    FitRejected { r: f64 },

    /// The certified minimum of Pν/ν is not positive; ν gives no bound at this t.
    #[error("vacuous bound: certified minimum {min_ratio:.6} is not positive")]
    BoundVacuous {
        min_ratio: f64,
        certificate: Box<crate::operator::BoundCertificate>,
    },

    /// Invalid user-facing configuration.
    #[error("invalid configuration: {0}")]
    InvalidConfig(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
