//! Translation gateway: embeds each request, routes it to the nearest domain
//! centroid and forwards it to that domain's translation backend.

pub mod api;
pub mod config;
pub mod error;
pub mod http;
pub mod registry;
pub mod service;
pub mod sidecar;
pub mod stub;

pub use api::{BatchRequest, BatchResponse, HealthReport, TranslationRequest, TranslationResponse};
pub use config::{BackendConfig, EmbedFailurePolicy, GatewayConfig};
pub use error::GatewayError;
pub use registry::{resolve_backend, Backend, BackendRegistry, Resolved};
pub use service::Gateway;
pub use sidecar::{
    build_classifier, build_embedder, ClassifierSpec, EmbedderSpec, RemoteClassifier, RemoteEmbedder,
};
