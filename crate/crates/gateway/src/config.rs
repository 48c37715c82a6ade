use indexmap::IndexMap;
use semiroute_core::DomainLabel;
use serde::{Deserialize, Serialize};

use crate::api::{DEFAULT_SOURCE_LANG, DEFAULT_TARGET_LANG};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BackendConfig {
    /// Base URL; the gateway appends `/translate`, `/translate/batch` and `/health`.
    pub endpoint: String,
    #[serde(default = "defaults::timeout_ms")]
    pub timeout_ms: u64,
}

/// What to do when the embedder fails for a request.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EmbedFailurePolicy {
    #[default]
    Error,
    /// Forward to the fallback backend without routing information.
    Fallback,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GatewayConfig {
    #[serde(default = "defaults::bind")]
    pub bind: String,
    #[serde(default = "defaults::port")]
    pub port: u16,
    #[serde(default = "defaults::source_lang")]
    pub source_lang: String,
    #[serde(default = "defaults::target_lang")]
    pub target_lang: String,
    #[serde(default)]
    pub backends: IndexMap<DomainLabel, BackendConfig>,
    #[serde(default)]
    pub fallback_domain: Option<DomainLabel>,
    #[serde(default)]
    pub embed_failure: EmbedFailurePolicy,
    #[serde(default = "defaults::max_in_flight")]
    pub max_in_flight_per_backend: usize,
    #[serde(default = "defaults::batch_size")]
    pub backend_batch_size: usize,
    #[serde(default = "defaults::embed_batch_size")]
    pub embed_batch_size: usize,
    /// Health probe period; 0 disables the background prober.
    #[serde(default = "defaults::probe_interval_ms")]
    pub probe_interval_ms: u64,
}

impl Default for GatewayConfig {
    fn default() -> Self {
        serde_json::from_str("{}").expect("all fields have defaults")
    }
}

mod defaults {
    pub fn timeout_ms() -> u64 {
        30_000
    }
    pub fn bind() -> String {
        "127.0.0.1".into()
    }
    pub fn port() -> u16 {
        8080
    }
    pub fn source_lang() -> String {
        super::DEFAULT_SOURCE_LANG.into()
    }
    pub fn target_lang() -> String {
        super::DEFAULT_TARGET_LANG.into()
    }
    pub fn max_in_flight() -> usize {
        16
    }
    pub fn batch_size() -> usize {
        32
    }
    pub fn embed_batch_size() -> usize {
        64
    }
    pub fn probe_interval_ms() -> u64 {
        5_000
    }
}
