use std::fmt;

/// A failed command and the exit code it maps to.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CliError {
    pub code: u8,
    pub message: String,
}

pub const EXIT_VALIDATION: u8 = 2;
pub const EXIT_CALIBRATION: u8 = 3;
pub const EXIT_COMPARISON: u8 = 4;

impl CliError {
    pub fn validation(message: impl Into<String>) -> Self {
        CliError { code: EXIT_VALIDATION, message: message.into() }
    }

    pub fn calibration(message: impl Into<String>) -> Self {
        CliError { code: EXIT_CALIBRATION, message: message.into() }
    }

    pub fn comparison(message: impl Into<String>) -> Self {
        CliError { code: EXIT_COMPARISON, message: message.into() }
    }

    /// File system trouble counts as invalid input.
    pub fn io(path: &std::path::Path, e: impl fmt::Display) -> Self {
        CliError::validation(format!("{}: {e}", path.display()))
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.message)
    }
}

impl std::error::Error for CliError {}
