use thiserror::Error;

/// Errors surfaced by grid, transform, solver and product operations.
#[derive(Debug, Error)]
pub enum Error {
    #[error("parameter error: {0}")]
    Parameter(String),

    #[error("operation undefined for the zero function")]
    ZeroFunction,

    #[error("Laplace transform of the zero function")]
    TransformOfZero,

    #[error("dual grid degenerate: {0}")]
    DegenerateDualGrid(String),

    #[error("solver did not converge within {max_iter} iterations (|grad| = {grad_norm:.3e})")]
    NonConverged { max_iter: usize, grad_norm: f64 },

    #[error("dichotomy mismatch: support test says {support_says}, solver says {solver_says}")]
    DichotomyMismatch {
        support_says: &'static str,
        solver_says: &'static str,
    },

    #[error("origin outside the dual grid")]
    OriginOutsideGrid,

    #[error("centering hypothesis violated: |first moment| = {moment:.3e} exceeds {tol:.1e}")]
    HypothesisViolated { moment: f64, tol: f64 },

    #[error("infimum not attained at the initial time; the curve has no start point")]
    CurvePreconditionFailed,

    #[error("curve left the dual window at t = {t}")]
    CurveLeftWindow { t: f64 },

    #[error("serialization: {0}")]
    Format(String),
}

pub type Result<T> = std::result::Result<T, Error>;
