use semiroute_core::DomainLabel;
use thiserror::Error;

use crate::api::ErrorBody;

#[derive(Debug, Clone, Error, PartialEq)]
pub enum GatewayError {
    #[error("invalid request: {0}")]
    Validation(String),

    #[error("no healthy backend for domain `{0}` and no usable fallback")]
    RoutingUnavailable(DomainLabel),

    #[error("backend for domain `{0}` timed out")]
    Timeout(DomainLabel),

    #[error("backend for domain `{domain}` failed: {message}")]
    Backend { domain: DomainLabel, message: String },

    #[error("embedding failed: {0}")]
    Embed(String),

    #[error("gateway misconfigured: {0}")]
    Config(String),
}

impl GatewayError {
    pub fn category(&self) -> &'static str {
        match self {
            GatewayError::Validation(_) => "validation",
            GatewayError::RoutingUnavailable(_) => "unavailable",
            GatewayError::Timeout(_) => "timeout",
            GatewayError::Backend { .. } => "backend",
            GatewayError::Embed(_) => "embedder",
            GatewayError::Config(_) => "config",
        }
    }

    pub fn status_code(&self) -> u16 {
        match self {
            GatewayError::Validation(_) => 400,
            GatewayError::RoutingUnavailable(_) => 503,
            GatewayError::Timeout(_) => 504,
            GatewayError::Backend { .. } | GatewayError::Embed(_) => 502,
            GatewayError::Config(_) => 500,
        }
    }

    pub fn body(&self) -> ErrorBody {
        ErrorBody {
            category: self.category().to_string(),
            message: self.to_string(),
        }
    }
}
