use thiserror::Error;

/// Errors produced while constructing bases, quadratures, operators,
/// preconditioners, or while evaluating a parameterized system.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("dimension mismatch in {context}: expected {expected}, got {got}")]
    DimensionMismatch {
        context: &'static str,
        expected: usize,
        got: usize,
    },

    #[error("tensor rule would have {requested} points, exceeding the cap of {cap}")]
    PointCapExceeded { requested: u128, cap: usize },

    #[error(
        "rank deficient Galerkin matrix: {basis} basis polynomials but only {points} \
         quadrature points"
    )]
    RankDeficient { basis: usize, points: usize },

    #[error(
        "quadrature too coarse for the basis: max |QQ^T - I| = {max_dev:.3e} exceeds {tol:.3e}"
    )]
    QuadratureTooCoarse { max_dev: f64, tol: f64 },

    #[error("dense assembly of {size} unknowns exceeds the cap of {cap}")]
    CapExceeded { size: usize, cap: usize },

    #[error("the parameterized system does not provide explicit matrix assembly")]
    AssembleUnsupported,

    #[error("operation requires a system declared symmetric")]
    NotSymmetric,

    #[error("singular preconditioner: {0}")]
    SingularPreconditioner(String),

    #[error("system evaluation failed at point {point:?}: {message}")]
    SystemEval { point: Vec<f64>, message: String },

    #[error("non-finite value encountered in {0}")]
    NonFinite(&'static str),

    #[error("eigensolve failed: {0}")]
    EigensolveFailed(String),

    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),

    #[error("parse error: {0}")]
    Parse(String),
}

pub type Result<T> = std::result::Result<T, Error>;
