use std::fmt;

use hyperbolic_nbody::Error;

/// Failure of a command: a stable machine-readable code, a message and the
/// process exit status.
#[derive(Debug)]
pub struct CliError {
    pub code: &'static str,
    pub message: String,
    pub exit: u8,
}

impl CliError {
    pub fn validation(message: impl Into<String>) -> Self {
        Self { code: "validation", message: message.into(), exit: 1 }
    }

    pub fn io(path: &std::path::Path, err: std::io::Error) -> Self {
        Self { code: "io", message: format!("{}: {err}", path.display()), exit: 1 }
    }

    /// Prefixes the message with the config field it concerns.
    pub fn at(self, path: &str) -> Self {
        Self { message: format!("{path}: {}", self.message), ..self }
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}: {}", self.code, self.message)
    }
}

impl From<Error> for CliError {
    fn from(err: Error) -> Self {
        let (code, exit) = match &err {
            Error::Domain(_) | Error::InvalidInput(_) | Error::SigmaMismatch { .. } => ("validation", 1),
            Error::Pole { .. } => ("pole", 1),
            Error::ClassNotSolvable { .. } => ("nonexistent_class", 1),
            Error::Singularity { .. } => ("singularity", 2),
            Error::StepUnderflow { .. } | Error::TooManySteps { .. } => ("integrator_failure", 3),
            Error::NoConvergence { .. } | Error::SingularJacobian { .. } => ("no_convergence", 3),
        };
        Self { code, message: err.to_string(), exit }
    }
}
