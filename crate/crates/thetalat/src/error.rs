use thiserror::Error;

/// Errors raised across the crate.
#[derive(Debug, Clone, Error, PartialEq)]
pub enum Error {
    #[error("matrix is not square ({rows}x{cols})")]
    NotSquare { rows: usize, cols: usize },
    #[error("gram matrix is not symmetric")]
    NotSymmetric,
    #[error("gram matrix is not positive definite (leading minor {index} is {sign})")]
    NotPositiveDefinite { index: usize, sign: &'static str },
    #[error("rank-zero lattice")]
    ZeroRank,
    #[error("empty degree list")]
    EmptyDegrees,
    #[error("generators are linearly dependent over Q")]
    DependentGenerators,
    #[error("operation needs an exact gram up to a uniform twist")]
    NonUniformTwist,
    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),
    #[error("enumeration exceeded the point cap of {cap}")]
    BudgetExceeded { cap: u64 },
    #[error("integer overflow in exact arithmetic")]
    Overflow,
    #[error("vectors do not form a basis (determinant {det})")]
    NotABasis { det: String },
    #[error("tolerance {tol:e} unreachable within the enumeration cap")]
    ToleranceUnreachable { tol: f64 },
    #[error("argument {value} outside the domain {domain}")]
    OutOfDomain { value: f64, domain: &'static str },
    #[error("beta = {beta} lies below the certified range [{beta_lo}, inf)")]
    DomainError { beta: f64, beta_lo: f64 },
    #[error("energy {e} is not above the minimum {h_min}")]
    EBelowMinimum { e: f64, h_min: f64 },
    #[error("energy {e} exceeds the certified mean energy {u_max} at the smallest beta")]
    EAboveCertified { e: f64, u_max: f64 },
    #[error("solver did not converge; bracket [{lo}, {hi}]")]
    NoConvergence { lo: f64, hi: f64 },
    #[error("energies are not commensurable with an exact unit")]
    NotArithmetic,
    #[error("measure is only complete up to energy {complete}, {needed} needed")]
    TruncatedMeasure { complete: f64, needed: f64 },
    #[error("n*E/eta = {ratio} is not an integer")]
    NotInNE { ratio: f64 },
    #[error("quadrature did not converge (last relative change {change:e})")]
    QuadratureNotConverged { change: f64 },
    #[error("profiles have disjoint beta domains")]
    DomainMismatch,
    #[error("parse error: {0}")]
    Parse(String),
    #[error("invalid input: {0}")]
    InvalidInput(String),
}

pub type Result<T> = std::result::Result<T, Error>;
