//! JSON bodies for the inbound API, the outbound backend contract and the
//! sidecar services.

use semiroute_core::{DomainLabel, RoutingDecision};
use serde::{Deserialize, Serialize};

pub const DEFAULT_SOURCE_LANG: &str = "eng_Latn";
pub const DEFAULT_TARGET_LANG: &str = "gle_Latn";

fn default_source_lang() -> String {
    DEFAULT_SOURCE_LANG.to_string()
}

fn default_target_lang() -> String {
    DEFAULT_TARGET_LANG.to_string()
}

/// `POST /translate`
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TranslationRequest {
    pub text: String,
    #[serde(default = "default_source_lang")]
    pub source_lang: String,
    #[serde(default = "default_target_lang")]
    pub target_lang: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub force_domain: Option<DomainLabel>,
}

impl TranslationRequest {
    pub fn new(text: impl Into<String>) -> Self {
        Self {
            text: text.into(),
            source_lang: default_source_lang(),
            target_lang: default_target_lang(),
            force_domain: None,
        }
    }

    pub fn forced(text: impl Into<String>, domain: impl Into<DomainLabel>) -> Self {
        Self {
            force_domain: Some(domain.into()),
            ..Self::new(text)
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TranslationResponse {
    pub translation: String,
    /// Present whenever routing ran.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub routing: Option<RoutingDecision>,
    pub backend_domain: DomainLabel,
    pub latency_ms: u64,
    /// Set when the request was served by the fallback backend.
    #[serde(default)]
    pub fallback_used: bool,
}

/// `POST /translate/batch`
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BatchRequest {
    pub requests: Vec<TranslationRequest>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BatchItem {
    Response(TranslationResponse),
    Error(ErrorBody),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BatchResponse {
    pub responses: Vec<BatchItem>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ErrorBody {
    pub category: String,
    pub message: String,
}

/// Outbound `POST {endpoint}/translate`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BackendRequest {
    pub text: String,
    pub source_lang: String,
    pub target_lang: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BackendResponse {
    pub translation: String,
}

/// Outbound `POST {endpoint}/translate/batch`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BackendBatchRequest {
    pub items: Vec<BackendRequest>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BackendBatchResponse {
    pub translations: Vec<String>,
}

/// Sidecar `POST /embed`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EmbedRequest {
    pub texts: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EmbedResponse {
    pub vectors: Vec<Vec<f32>>,
    pub dim: usize,
    pub model_id: String,
}

/// Sidecar `POST /classify`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClassifyRequest {
    pub texts: Vec<String>,
    pub labels: Vec<String>,
    pub multi_label: bool,
}

/// `scores[i][j]` is the score of `texts[i]` for `labels[j]`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClassifyResponse {
    pub scores: Vec<Vec<f64>>,
}

/// `GET /health`
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HealthReport {
    pub status: String,
    pub uptime_ms: u64,
    pub index: IndexSummary,
    pub backends: Vec<BackendStatus>,
    pub fallback_domain: Option<DomainLabel>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IndexSummary {
    pub embedder_id: String,
    pub dim: usize,
    pub domains: Vec<DomainCount>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DomainCount {
    pub name: DomainLabel,
    pub count: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BackendStatus {
    pub domain: DomainLabel,
    pub endpoint: String,
    pub healthy: bool,
}
