use thiserror::Error;

use crate::optimizer::OptResult;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Clone, Error)]
pub enum Error {
    /// An argument lies outside the domain of the function it was passed to.
    #[error("domain error: {0}")]
    Domain(String),

    /// The main-lobe edge ray of the satellite beam does not intersect the Earth.
    #[error("beam misses earth: (r_e + a)·sin(omega_th) = {lhs} exceeds r_e = {r_e}")]
    BeamMissesEarth { lhs: f64, r_e: f64 },

    /// A conditional distance law was requested on an event of zero probability.
    #[error("degenerate conditioning: {0}")]
    DegenerateConditioning(String),

    #[error("series did not converge within {n_max} terms (last term {last_term:e}, tolerance {tol:e})")]
    ConvergenceNotReached { n_max: usize, last_term: f64, tol: f64 },

    #[error("quadrature failed to reach tolerance on [{lo}, {hi}]: estimated error {abs_err:e}")]
    QuadratureFailure { lo: f64, hi: f64, abs_err: f64 },

    /// The closed-form exact outage would lose more precision than allowed.
    #[error("closed-form evaluation rejected: {reason}")]
    CancellationOverflow { reason: String },

    #[error("visibility constraint P_vis >= {eta} cannot be met for any theta_min >= 0")]
    InfeasibleVisibility { eta: f64 },

    #[error("rate {rate} bps/Hz violates the outage ceiling {epsilon} even at theta_min = {theta_max_deg} deg")]
    InfeasibleRate { rate: f64, epsilon: f64, theta_max_deg: f64 },

    #[error("no feasible grid point")]
    NoFeasiblePoint,

    #[error("iteration cap reached after {} iterations", best.iterations)]
    IterationCapReached { best: Box<OptResult> },

    #[error("parse error at line {line}: {message}")]
    Parse { line: usize, message: String },

    #[error("invalid value for `{key}`: {message}")]
    Validation { key: String, message: String },
}

impl Error {
    pub(crate) fn domain(msg: impl Into<String>) -> Self {
        Error::Domain(msg.into())
    }

    pub(crate) fn validation(key: impl Into<String>, message: impl Into<String>) -> Self {
        Error::Validation { key: key.into(), message: message.into() }
    }

    /// Stable identifier of the variant, used in CLI diagnostics.
    pub fn name(&self) -> &'static str {
        match self {
            Error::Domain(_) => "DomainError",
            Error::BeamMissesEarth { .. } => "BeamMissesEarth",
            Error::DegenerateConditioning(_) => "DegenerateConditioning",
            Error::ConvergenceNotReached { .. } => "ConvergenceNotReached",
            Error::QuadratureFailure { .. } => "QuadratureFailure",
            Error::CancellationOverflow { .. } => "CancellationOverflow",
            Error::InfeasibleVisibility { .. } => "InfeasibleVisibility",
            Error::InfeasibleRate { .. } => "InfeasibleRate",
            Error::NoFeasiblePoint => "NoFeasiblePoint",
            Error::IterationCapReached { .. } => "IterationCapReached",
            Error::Parse { .. } => "ParseError",
            Error::Validation { .. } => "ValidationError",
        }
    }

    /// True for errors caused by user input rather than numerical failure.
    pub fn is_validation(&self) -> bool {
        matches!(self, Error::Parse { .. } | Error::Validation { .. } | Error::Domain(_))
    }
}
