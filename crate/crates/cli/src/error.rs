// SPDX-License-Identifier: Apache-2.0

use std::fmt;

/// Exit status of a command.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ExitCode {
    Ok = 0,
    Other = 1,
    Parse = 2,
    Validate = 3,
    Infeasible = 4,
    Refuted = 5,
    NotHurwitz = 6,
    Numerical = 7,
}

#[derive(Debug)]
pub struct CliError {
    pub code: ExitCode,
    pub message: String,
}

impl CliError {
    pub fn new(code: ExitCode, message: impl Into<String>) -> Self {
        Self {
            code,
            message: message.into(),
        }
    }

    pub fn parse(message: impl Into<String>) -> Self {
        Self::new(ExitCode::Parse, message)
    }

    pub fn validate(message: impl Into<String>) -> Self {
        Self::new(ExitCode::Validate, message)
    }

    pub fn io(path: &std::path::Path, err: std::io::Error) -> Self {
        Self::new(ExitCode::Other, format!("{}: {err}", path.display()))
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.message)
    }
}

impl From<sdmor::Error> for CliError {
    fn from(e: sdmor::Error) -> Self {
        use sdmor::Error as E;
        let code = match &e {
            E::Infeasible { .. } | E::Budget { .. } => ExitCode::Infeasible,
            E::NotHurwitz { .. } => ExitCode::NotHurwitz,
            E::Dimension { .. }
            | E::NonFinite(_)
            | E::InvalidArgument(_)
            | E::ZeroSpace(_)
            | E::LengthMismatch(_)
            | E::Invalid(_) => ExitCode::Validate,
            E::SpanMismatch { .. }
            | E::NotLeftInverse(_)
            | E::Conditioning { .. }
            | E::Consistency(_)
            | E::Numerical(_)
            | E::UndefinedBfr => ExitCode::Numerical,
        };
        Self::new(code, e.to_string())
    }
}

pub type CliResult<T> = Result<T, CliError>;
