use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    /// An argument lies outside the domain where the function is defined.
    #[error("domain error: {0}")]
    Domain(String),

    /// A denominator factor of an infinite product vanished within tolerance.
    #[error("pole: {0}")]
    Pole(String),

    #[error("argument outside the convergence strip: |Im z| = {im} but Re eta = {re_eta}")]
    StripViolation { im: f64, re_eta: f64 },

    #[error("precondition violated: {0}")]
    Precondition(String),

    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    /// The principal square root is only well defined for (numerically) real,
    /// nonnegative single-spin factors.
    #[error("square-root branch ambiguous: {0}")]
    Branch(String),

    #[error("truncated series or product did not converge after {terms} terms")]
    NotConverged { terms: usize },

    #[error(
        "quadrature did not converge: est_rel_err = {est_rel_err:e} at {points_per_dim} points per dimension"
    )]
    QuadratureNotConverged {
        points_per_dim: usize,
        est_rel_err: f64,
    },

    #[error("non-finite value produced by {0}")]
    NonFinite(&'static str),

    #[error("configuration error: {0}")]
    Config(String),

    #[error("rejection sampling gave up after {0} attempts")]
    RejectionLimit(usize),
}
