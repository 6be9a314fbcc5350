//! Command-line driver for the viscotherm solver: model validation, audited
//! runs, re-audits of stored runs and parameter sweeps.
//!
//! Exit codes: `0` pass, `1` check failure, `2` input error, `3` solver
//! failure. [`exit_code`] maps an error chain onto the last three.

pub mod commands;
pub mod output;

use std::fmt;

use viscotherm_core::Error as CoreError;

/// Outcome of a command that ran to completion.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Status {
    Pass,
    CheckFailure,
}

impl Status {
    pub fn code(self) -> i32 {
        match self {
            Status::Pass => 0,
            Status::CheckFailure => 1,
        }
    }
}

/// Marks an error as caused by bad input (config, paths, stored files).
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct InputError(pub String);

impl fmt::Display for InputError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

impl std::error::Error for InputError {}

/// Exit code for an error returned by one of the commands.
pub fn exit_code(err: &anyhow::Error) -> i32 {
    for cause in err.chain() {
        if cause.is::<InputError>() {
            return 2;
        }
        if let Some(e) = cause.downcast_ref::<CoreError>() {
            return match e {
                CoreError::Invariant(_) => 1,
                CoreError::Inversion { .. }
                | CoreError::NonFinite { .. }
                | CoreError::StepUnderflow { .. }
                | CoreError::StepBudget { .. }
                | CoreError::SingularGram => 3,
                CoreError::Domain { .. }
                | CoreError::Parameter { .. }
                | CoreError::Construction(_)
                | CoreError::Dimension { .. }
                | CoreError::Resolution(_)
                | CoreError::Config(_) => 2,
            };
        }
    }
    // I/O failures while writing outputs
    3
}
