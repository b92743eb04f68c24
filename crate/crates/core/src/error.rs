use thiserror::Error;

use crate::equilibria::EquilibriumClass;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    /// An input left the domain of the operation (off the half-plane, outside the disk, ...).
    #[error("domain error: {0}")]
    Domain(String),

    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("clifford operands live in different algebras (sigma {left} vs {right})")]
    SigmaMismatch { left: i8, right: i8 },

    /// Two bodies reached the singular set.
    #[error("singular configuration: bodies {pair:?} have theta = {theta:e} at t = {t}")]
    Singularity { pair: (usize, usize), theta: f64, t: f64 },

    #[error("step size underflow at t = {t} (h = {h:e})")]
    StepUnderflow { t: f64, h: f64 },

    #[error("integration exceeded {max_steps} steps at t = {t}")]
    TooManySteps { max_steps: usize, t: f64 },

    #[error("closed-form flow hits a pole at t = {t}")]
    Pole { t: f64 },

    #[error("no convergence after {iterations} iterations (residual {residual:e})")]
    NoConvergence { iterations: usize, residual: f64 },

    #[error("singular jacobian (condition estimate {condition:e})")]
    SingularJacobian { condition: f64 },

    #[error("class {class} cannot be solved for: {reason}")]
    ClassNotSolvable {
        class: EquilibriumClass,
        reason: &'static str,
    },
}

impl Error {
    pub(crate) fn domain(msg: impl Into<String>) -> Self {
        Error::Domain(msg.into())
    }

    pub(crate) fn invalid(msg: impl Into<String>) -> Self {
        Error::InvalidInput(msg.into())
    }
}
