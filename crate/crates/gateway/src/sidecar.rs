//! Blocking clients for the embedding and classification sidecars, plus the
//! config specs that pick between them and the in-process mocks.
//!
//! The blocking clients must not be created or dropped on an async runtime
//! thread.

use std::sync::Arc;
use std::time::Duration;

use indexmap::IndexMap;
use semiroute_core::labeler::{Classification, ClassifierClient, MockClassifier};
use semiroute_core::{DomainLabel, EmbedderClient, EmbeddingVector, Error, MockEmbedder, Result};
use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};

use crate::api::{ClassifyRequest, ClassifyResponse, EmbedRequest, EmbedResponse};

const DEFAULT_TIMEOUT_MS: u64 = 30_000;
const PROBE_TEXT: &str = "probe";

fn default_timeout_ms() -> u64 {
    DEFAULT_TIMEOUT_MS
}

fn client(timeout_ms: u64) -> std::result::Result<reqwest::blocking::Client, String> {
    reqwest::blocking::Client::builder()
        .timeout(Duration::from_millis(timeout_ms))
        .build()
        .map_err(|e| e.to_string())
}

fn post_json<B: Serialize, R: DeserializeOwned>(
    client: &reqwest::blocking::Client,
    url: &str,
    body: &B,
) -> std::result::Result<R, String> {
    let resp = client.post(url).json(body).send().map_err(|e| e.to_string())?;
    let status = resp.status();
    if !status.is_success() {
        return Err(format!("{url} answered HTTP {status}"));
    }
    resp.json::<R>()
        .map_err(|e| format!("{url}: unreadable response: {e}"))
}

fn endpoint(base: &str, path: &str) -> String {
    format!("{}{path}", base.trim_end_matches('/'))
}

/// Client for `POST {url}/embed`. The model id and dimension are read once at
/// construction.
#[derive(Debug)]
pub struct RemoteEmbedder {
    url: String,
    client: reqwest::blocking::Client,
    model_id: String,
    dim: usize,
}

impl RemoteEmbedder {
    pub fn connect(base_url: &str, timeout_ms: u64) -> Result<Self> {
        let client = client(timeout_ms).map_err(Error::Embedder)?;
        let url = endpoint(base_url, "/embed");
        let probe: EmbedResponse = post_json(
            &client,
            &url,
            &EmbedRequest {
                texts: vec![PROBE_TEXT.into()],
            },
        )
        .map_err(Error::Embedder)?;
        if probe.dim == 0 || probe.model_id.is_empty() {
            return Err(Error::Embedder(format!("{url}: missing dim or model_id")));
        }
        Ok(Self {
            url,
            client,
            model_id: probe.model_id,
            dim: probe.dim,
        })
    }

    pub fn model_id(&self) -> &str {
        &self.model_id
    }
}

impl EmbedderClient for RemoteEmbedder {
    fn id(&self) -> String {
        format!("remote:{}:dim={}", self.model_id, self.dim)
    }

    fn embed(&self, texts: &[&str]) -> Result<Vec<EmbeddingVector>> {
        let req = EmbedRequest {
            texts: texts.iter().map(|t| t.to_string()).collect(),
        };
        let resp: EmbedResponse = post_json(&self.client, &self.url, &req).map_err(Error::Embedder)?;
        if resp.model_id != self.model_id {
            return Err(Error::Embedder(format!(
                "model changed from `{}` to `{}`",
                self.model_id, resp.model_id
            )));
        }
        if resp.vectors.len() != texts.len() {
            return Err(Error::Embedder(format!(
                "sent {} texts, got {} vectors",
                texts.len(),
                resp.vectors.len()
            )));
        }
        resp.vectors
            .into_iter()
            .map(|v| {
                if v.len() != self.dim {
                    return Err(Error::DimensionMismatch {
                        expected: self.dim,
                        found: v.len(),
                    });
                }
                EmbeddingVector::new(v)
            })
            .collect()
    }
}

/// Client for `POST {url}/classify`.
#[derive(Debug)]
pub struct RemoteClassifier {
    url: String,
    client: reqwest::blocking::Client,
}

impl RemoteClassifier {
    pub fn new(base_url: &str, timeout_ms: u64) -> Result<Self> {
        Ok(Self {
            url: endpoint(base_url, "/classify"),
            client: client(timeout_ms).map_err(Error::Classifier)?,
        })
    }
}

impl ClassifierClient for RemoteClassifier {
    fn classify_batch(
        &self,
        texts: &[&str],
        labels: &[DomainLabel],
        multi_label: bool,
    ) -> Result<Vec<Classification>> {
        let req = ClassifyRequest {
            texts: texts.iter().map(|t| t.to_string()).collect(),
            labels: labels.iter().map(|l| l.to_string()).collect(),
            multi_label,
        };
        let resp: ClassifyResponse = post_json(&self.client, &self.url, &req).map_err(Error::Classifier)?;
        if resp.scores.len() != texts.len() {
            return Err(Error::Classifier(format!(
                "sent {} texts, got {} score rows",
                texts.len(),
                resp.scores.len()
            )));
        }
        resp.scores
            .iter()
            .map(|row| Classification::from_scores(labels, row))
            .collect()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum EmbedderSpec {
    Mock {
        dim: usize,
        seed: u64,
    },
    Remote {
        url: String,
        #[serde(default = "default_timeout_ms")]
        timeout_ms: u64,
    },
}

impl Default for EmbedderSpec {
    fn default() -> Self {
        EmbedderSpec::Mock { dim: 64, seed: 42 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum ClassifierSpec {
    Mock {
        keywords: IndexMap<DomainLabel, Vec<String>>,
    },
    Remote {
        url: String,
        #[serde(default = "default_timeout_ms")]
        timeout_ms: u64,
    },
}

pub fn build_embedder(spec: &EmbedderSpec) -> Result<Arc<dyn EmbedderClient>> {
    Ok(match spec {
        EmbedderSpec::Mock { dim, seed } => {
            if *dim < 2 {
                return Err(Error::Config(format!(
                    "mock embedder dim must be at least 2, got {dim}"
                )));
            }
            Arc::new(MockEmbedder::new(*dim, *seed))
        }
        EmbedderSpec::Remote { url, timeout_ms } => Arc::new(RemoteEmbedder::connect(url, *timeout_ms)?),
    })
}

pub fn build_classifier(spec: &ClassifierSpec) -> Result<Arc<dyn ClassifierClient>> {
    Ok(match spec {
        ClassifierSpec::Mock { keywords } => Arc::new(MockClassifier::new(keywords.clone())),
        ClassifierSpec::Remote { url, timeout_ms } => Arc::new(RemoteClassifier::new(url, *timeout_ms)?),
    })
}
