use thiserror::Error;

use crate::point::Point;

/// Errors raised by geometry, measure, trace and verification routines.
#[derive(Debug, Error)]
pub enum Error {
    #[error("point {0:?} is not an interior point of the domain")]
    PointNotInterior(Point),

    #[error("ray from {origin:?} left the bounding box without exiting the domain")]
    RayUnresolved { origin: Point },

    #[error("operation not supported for domain kind `{0}`")]
    UnsupportedKind(&'static str),

    #[error("no accepted sample among {0} draws; domain has no detectable volume")]
    DegenerateDomain(usize),

    #[error("integrand is not finite at {0:?}")]
    NonFiniteIntegrand(Point),

    #[error("quadrature did not converge: error estimate {estimate:e} above tolerance {tolerance:e}")]
    QuadratureNoConverge { estimate: f64, tolerance: f64 },

    #[error("chord length must be positive")]
    ZeroChord,

    #[error("anchoring failed at {} boundary node(s)", .0.len())]
    AnchorFailure(Vec<Point>),

    #[error("trace hypothesis violated: max |trace| = {0:e}")]
    HypothesisViolated(f64),

    #[error("subdomains {0} and {1} overlap")]
    BadPartition(usize, usize),

    #[error("Cantor ratio must lie in (0, 1/3], got {0}")]
    BadRho(f64),

    #[error("invalid direction: {0}")]
    InvalidDirection(String),

    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("invalid domain: {0}")]
    InvalidDomain(String),

    #[error("fiber sweep inconsistent: {0}")]
    SweepInconsistent(String),

    #[error("expression error: {0}")]
    Expression(String),

    #[error("unknown gallery entry or field `{0}`")]
    UnknownName(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
