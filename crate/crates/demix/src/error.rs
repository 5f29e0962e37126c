//! Error type shared by all modules.

use std::fmt;

/// Crate-wide result alias.
pub type Result<T> = std::result::Result<T, DemixError>;

/// Errors produced by construction, estimation and diagnostic routines.
#[derive(Debug, Clone, PartialEq)]
pub enum DemixError {
    /// A domain/validation error: an argument violates a stated precondition.
    Domain(String),
    /// Unsupported or malformed measure specification.
    InvalidMeasure(String),
    /// Overflow or NaN detected while running a recurrence; `k` is the first
    /// failing row.
    NumericalRange { what: String, k: usize },
    /// Requested polynomial degree exceeds the precision ceiling.
    PrecisionCeiling { m: usize, m_max: usize },
    /// Moment matrix not positive definite at the given order.
    NonPositiveDefiniteMoments { order: usize },
    /// A Gram solve was refused or failed because of ill-conditioning.
    IllConditioned { cond: f64 },
    /// The noise Fourier series nearly vanishes; `K_p` diverges.
    DivergentKp,
    /// An estimator was handed an empty histogram.
    EmptyCounts,
    /// Rejection-sampling envelope found invalid during refinement.
    Envelope(String),
    /// A constructive fixture has no feasible solution.
    Infeasible(String),
    /// Configuration file or scenario error.
    Config(String),
}

impl fmt::Display for DemixError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            DemixError::Domain(msg) => write!(f, "domain error: {msg}"),
            DemixError::InvalidMeasure(msg) => write!(f, "invalid measure: {msg}"),
            DemixError::NumericalRange { what, k } => {
                write!(f, "numerical range exceeded in {what} at k = {k}")
            }
            DemixError::PrecisionCeiling { m, m_max } => write!(
                f,
                "degree m = {m} exceeds precision ceiling m_max = {m_max} \
                 (pass an explicit override to go higher)"
            ),
            DemixError::NonPositiveDefiniteMoments { order } => write!(
                f,
                "moment matrix not positive definite at order {order} \
                 (m too large for double precision)"
            ),
            DemixError::IllConditioned { cond } => {
                write!(
                    f,
                    "Gram system too ill-conditioned (estimated condition {cond:.3e})"
                )
            }
            DemixError::DivergentKp => {
                write!(f, "noise Fourier series vanishes on the grid; K_p diverges")
            }
            DemixError::EmptyCounts => write!(f, "empty histogram: need at least one observation"),
            DemixError::Envelope(msg) => write!(f, "rejection envelope invalid: {msg}"),
            DemixError::Infeasible(msg) => write!(f, "infeasible construction: {msg}"),
            DemixError::Config(msg) => write!(f, "config error: {msg}"),
        }
    }
}

impl std::error::Error for DemixError {}
