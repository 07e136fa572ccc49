use thiserror::Error;

use crate::expr::Point;

#[derive(Debug, Error)]
pub enum Error {
    #[error("syntax error at {pos}: {msg}")]
    Syntax { pos: usize, msg: String },
    #[error("unknown function `{name}` at {pos}")]
    UnknownFunction { name: String, pos: usize },
    #[error("malformed derivative marker at {pos}: {msg}")]
    MalformedDerivative { pos: usize, msg: String },

    #[error("unbound symbol `{0}`")]
    Unbound(String),
    #[error("division by near-zero value {value:e}")]
    NearSingular { value: f64 },
    #[error("logarithm of non-positive value {value:e}")]
    LogDomain { value: f64 },
    #[error("non-finite value during evaluation")]
    NonFinite,
    #[error("domain has no feasible sample points after {attempts} attempts")]
    InfeasibleDomain { attempts: usize },

    #[error("invalid Lagrangian: {0}")]
    InvalidLagrangian(String),
    #[error("invalid gauge function: {0}")]
    InvalidGauge(String),
    #[error("path endpoints differ: {0}")]
    EndpointMismatch(String),
    #[error("path leaves the domain at t = {t}")]
    PathExitsDomain { t: f64 },
    #[error("quadrature produced a non-finite value")]
    QuadratureNonFinite,

    #[error("antiderivative outside the supported class: {0}")]
    AntiderivativeUnsupported(String),
    #[error("closed-form integral unavailable: {0}")]
    IntegralUnsupported(String),
    #[error("null certification failed: {0}")]
    NullCertificationFailed(String),
    #[error("null pair has no certificate")]
    NullCertificationMissing,
    #[error("denominator vanishes on the domain")]
    DenominatorVanishes { witness: Box<Point> },
    #[error("negative order {0}")]
    NegativeOrder(i64),
    #[error("order {order} exceeds cap {cap}")]
    OrderCap { order: usize, cap: usize },

    #[error("composer range guard violated")]
    RangeGuardViolated { witness: Box<Point> },
    #[error("leading coefficient vanishes")]
    LeadingCoefficientVanishes { witness: Box<Point> },
    #[error("equation is not linear in x''")]
    NotLinearInAcceleration,
    #[error("constraint violated: {reason}")]
    ConstraintViolated {
        reason: String,
        witness: Option<Box<Point>>,
    },

    #[error("invalid initial value problem: {0}")]
    InvalidIvp(String),
    #[error("trajectory left the guarded domain at t = {t}")]
    DomainExit { t: f64 },
    #[error("non-finite state at t = {t}")]
    NonFiniteState { t: f64 },
    #[error("trajectory grids differ: {0}")]
    GridMismatch(String),

    #[error("invalid input: {0}")]
    Input(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl Error {
    /// Stable machine-readable code for reports.
    pub fn code(&self) -> &'static str {
        match self {
            Error::Syntax { .. } => "syntax",
            Error::UnknownFunction { .. } => "unknown_function",
            Error::MalformedDerivative { .. } => "malformed_derivative",
            Error::Unbound(_) => "unbound_symbol",
            Error::NearSingular { .. } => "near_singular",
            Error::LogDomain { .. } => "log_domain",
            Error::NonFinite => "non_finite",
            Error::InfeasibleDomain { .. } => "infeasible_domain",
            Error::InvalidLagrangian(_) => "invalid_lagrangian",
            Error::InvalidGauge(_) => "invalid_gauge",
            Error::EndpointMismatch(_) => "endpoint_mismatch",
            Error::PathExitsDomain { .. } => "path_exits_domain",
            Error::QuadratureNonFinite => "quadrature_non_finite",
            Error::AntiderivativeUnsupported(_) => "antiderivative_unsupported",
            Error::IntegralUnsupported(_) => "integral_unsupported",
            Error::NullCertificationFailed(_) => "null_certification_failed",
            Error::NullCertificationMissing => "null_certification_missing",
            Error::DenominatorVanishes { .. } => "denominator_vanishes",
            Error::NegativeOrder(_) => "negative_order",
            Error::OrderCap { .. } => "order_cap",
            Error::RangeGuardViolated { .. } => "range_guard_violated",
            Error::LeadingCoefficientVanishes { .. } => "leading_coefficient_vanishes",
            Error::NotLinearInAcceleration => "not_linear_in_acceleration",
            Error::ConstraintViolated { .. } => "constraint_violated",
            Error::InvalidIvp(_) => "invalid_ivp",
            Error::DomainExit { .. } => "domain_exit",
            Error::NonFiniteState { .. } => "non_finite_state",
            Error::GridMismatch(_) => "grid_mismatch",
            Error::Input(_) => "input",
            Error::Io(_) => "io",
        }
    }

    /// Whether the failure stems from malformed user input rather than a
    /// failed verification.
    pub fn is_input_error(&self) -> bool {
        matches!(
            self,
            Error::Syntax { .. }
                | Error::UnknownFunction { .. }
                | Error::MalformedDerivative { .. }
                | Error::Unbound(_)
                | Error::InvalidLagrangian(_)
                | Error::InvalidGauge(_)
                | Error::EndpointMismatch(_)
                | Error::NegativeOrder(_)
                | Error::OrderCap { .. }
                | Error::InvalidIvp(_)
                | Error::GridMismatch(_)
                | Error::Input(_)
                | Error::Io(_)
                | Error::AntiderivativeUnsupported(_)
                | Error::IntegralUnsupported(_)
        )
    }

    pub fn witness(&self) -> Option<&Point> {
        match self {
            Error::DenominatorVanishes { witness }
            | Error::RangeGuardViolated { witness }
            | Error::LeadingCoefficientVanishes { witness } => Some(witness),
            Error::ConstraintViolated { witness, .. } => witness.as_deref(),
            _ => None,
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
