use thiserror::Error;

/// Errors produced by the model, discretization and solver layers.
#[derive(Debug, Clone, Error, PartialEq)]
pub enum Error {
    #[error("{quantity} = {value} lies outside its domain {domain}")]
    Domain {
        quantity: &'static str,
        value: f64,
        domain: &'static str,
    },

    #[error("invalid parameter `{name}` = {value}: {reason}")]
    Parameter {
        name: String,
        value: f64,
        reason: String,
    },

    #[error("cannot construct regularized coupling function: {0}")]
    Construction(String),

    #[error("temperature inversion failed for e = {e}, b = {b}: {reason}")]
    Inversion { e: f64, b: f64, reason: String },

    #[error("dimension mismatch in {what}: expected {expected}, got {got}")]
    Dimension {
        what: &'static str,
        expected: usize,
        got: usize,
    },

    #[error("quadrature resolution too low: {0}")]
    Resolution(String),

    #[error("velocity Gram matrix is not positive definite")]
    SingularGram,

    #[error("non-finite {what} at node ({x}, {y})")]
    NonFinite { what: &'static str, x: f64, y: f64 },

    #[error("step size underflow at t = {t}: h = {h:e} (suspected stiffness)")]
    StepUnderflow { t: f64, h: f64 },

    #[error("step budget of {steps} exhausted at t = {t}")]
    StepBudget { t: f64, steps: usize },

    #[error("invariant violated: {0}")]
    Invariant(String),

    #[error("invalid configuration: {0}")]
    Config(String),
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn param(name: &str, value: f64, reason: &str) -> Error {
    Error::Parameter {
        name: name.to_string(),
        value,
        reason: reason.to_string(),
    }
}
