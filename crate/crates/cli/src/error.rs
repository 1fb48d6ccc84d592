//! CLI-level failures and their exit codes.

use std::fmt;

use multidirsbm::Error as CoreError;

pub const EXIT_USAGE: u8 = 1;
pub const EXIT_NOT_CONVERGED: u8 = 2;
pub const EXIT_VALIDATION: u8 = 3;

/// Bad or missing arguments.
#[derive(Debug)]
pub struct Usage(pub String);

/// Inputs that disagree with each other, e.g. a fit and a network with different nodes.
#[derive(Debug)]
pub struct Mismatch(pub String);

/// The fit stopped at max-iter; its output was still written.
#[derive(Debug)]
pub struct NotConverged;

impl fmt::Display for Usage {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

impl fmt::Display for Mismatch {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

impl fmt::Display for NotConverged {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str("fit did not converge")
    }
}

impl std::error::Error for Usage {}
impl std::error::Error for Mismatch {}
impl std::error::Error for NotConverged {}

pub fn exit_code(err: &anyhow::Error) -> u8 {
    for cause in err.chain() {
        if cause.is::<NotConverged>() {
            return EXIT_NOT_CONVERGED;
        }
        if cause.is::<Mismatch>() {
            return EXIT_VALIDATION;
        }
        if cause.is::<Usage>() {
            return EXIT_USAGE;
        }
        if let Some(core) = cause.downcast_ref::<CoreError>() {
            return match core {
                CoreError::Parse { .. }
                | CoreError::Validation { .. }
                | CoreError::InvalidNetwork(_)
                | CoreError::DimensionMismatch(_) => EXIT_VALIDATION,
                _ => EXIT_USAGE,
            };
        }
    }
    EXIT_USAGE
}
