use thiserror::Error;

/// An argument outside the mathematical domain of a function.
#[derive(Debug, Clone, PartialEq, Error)]
#[error("domain error: {what} (got {value})")]
pub struct DomainError {
    pub what: &'static str,
    pub value: f64,
}

impl DomainError {
    pub fn new(what: &'static str, value: f64) -> Self {
        Self { what, value }
    }
}

/// Failure of a duration/BER inversion.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum SolveError {
    #[error("target BER must lie in (0, 1), got {0}")]
    TargetOutOfRange(f64),
    #[error("target BER {target} not reachable below {max_t_ns} ns")]
    Unreachable { target: f64, max_t_ns: f64 },
    #[error(transparent)]
    Domain(#[from] DomainError),
}

/// Failure to fit a model to its anchors.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum CalibrationError {
    #[error("need at least {need} anchors, got {got}")]
    TooFewAnchors { need: usize, got: usize },
    #[error("invalid anchor ({t_ns} ns, BER {ber}): {why}")]
    InvalidAnchor { t_ns: f64, ber: f64, why: &'static str },
    #[error("anchors must have strictly decreasing BER with increasing pulse duration")]
    NotMonotone,
    #[error(
        "fit residual too large at BER {ber:e}: fitted {fitted_t_ns:.4} ns vs anchor {anchor_t_ns:.4} ns (bound {bound})"
    )]
    ResidualBound {
        ber: f64,
        anchor_t_ns: f64,
        fitted_t_ns: f64,
        bound: f64,
    },
    #[error("no device spread in (0, {max_sigma}] reproduces {t_ns} ns at BER {ber:e}")]
    NoVariabilitySolution { ber: f64, t_ns: f64, max_sigma: f64 },
    #[error("anchor pulse {t_ns} ns is shorter than the variability-free duration {deterministic_t_ns} ns")]
    AnchorBelowDeterministic { t_ns: f64, deterministic_t_ns: f64 },
    #[error("energy anchor must be positive, got {0} pJ")]
    NonPositiveEnergy(f64),
    #[error(transparent)]
    Solve(#[from] SolveError),
}
