use std::fmt;
use std::path::Path;

use semiroute_gateway::GatewayError;

/// Printed as `error[category]: message`.
#[derive(Debug)]
pub struct CliError {
    pub category: &'static str,
    pub message: String,
}

impl CliError {
    pub fn new(category: &'static str, message: impl Into<String>) -> Self {
        Self {
            category,
            message: message.into(),
        }
    }

    pub fn io(path: &Path, err: std::io::Error) -> Self {
        Self::new("io", format!("{}: {err}", path.display()))
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let one_line = self.message.replace('\n', " ");
        write!(f, "error[{}]: {one_line}", self.category)
    }
}

impl std::error::Error for CliError {}

impl From<semiroute_core::Error> for CliError {
    fn from(e: semiroute_core::Error) -> Self {
        Self::new(e.category(), e.to_string())
    }
}

impl From<GatewayError> for CliError {
    fn from(e: GatewayError) -> Self {
        Self::new(e.category(), e.to_string())
    }
}
