use std::sync::Arc;
use std::time::{Duration, Instant};

use futures::future::join_all;
use indexmap::IndexMap;
use semiroute_core::centroids::route_batch;
use semiroute_core::{CentroidIndex, DomainLabel, EmbedderClient, RoutingDecision};
use serde::de::DeserializeOwned;
use serde::Serialize;
use tokio::task::JoinHandle;

use crate::api::{
    BackendBatchRequest, BackendBatchResponse, BackendRequest, BackendResponse, BackendStatus, DomainCount,
    HealthReport, IndexSummary, TranslationRequest, TranslationResponse,
};
use crate::config::{EmbedFailurePolicy, GatewayConfig};
use crate::error::GatewayError;
use crate::registry::{Backend, BackendRegistry, Resolved};

const PROBE_TIMEOUT: Duration = Duration::from_secs(2);
const MAX_ERROR_BODY: usize = 200;

/// The routing service. Index and registry are fixed after construction; only
/// backend health flags change.
pub struct Gateway {
    config: GatewayConfig,
    index: Arc<CentroidIndex>,
    embedder: Arc<dyn EmbedderClient>,
    registry: BackendRegistry,
    client: reqwest::Client,
    started: Instant,
}

struct Plan {
    routing: Option<RoutingDecision>,
    resolved: Resolved,
}

type ItemResult = Result<TranslationResponse, GatewayError>;

impl Gateway {
    pub fn new(
        config: GatewayConfig,
        index: Arc<CentroidIndex>,
        embedder: Arc<dyn EmbedderClient>,
    ) -> Result<Arc<Self>, GatewayError> {
        let id = embedder.id();
        if id != index.embedder_id() {
            return Err(GatewayError::Config(format!(
                "index was built with `{}` but the embedder is `{id}`",
                index.embedder_id()
            )));
        }
        if config.backend_batch_size == 0 || config.embed_batch_size == 0 {
            return Err(GatewayError::Config("batch sizes must be positive".into()));
        }
        let registry = BackendRegistry::from_config(&config)?;
        registry.check_covers(&index)?;
        let client = reqwest::Client::builder()
            .build()
            .map_err(|e| GatewayError::Config(format!("http client: {e}")))?;
        Ok(Arc::new(Self {
            config,
            index,
            embedder,
            registry,
            client,
            started: Instant::now(),
        }))
    }

    pub fn config(&self) -> &GatewayConfig {
        &self.config
    }

    pub fn registry(&self) -> &BackendRegistry {
        &self.registry
    }

    pub fn index(&self) -> &CentroidIndex {
        &self.index
    }

    pub async fn handle_translate(&self, request: TranslationRequest) -> ItemResult {
        self.handle_batch(vec![request])
            .await
            .pop()
            .expect("one response per request")
    }

    /// Translates every request. Failures are reported per item and the
    /// output order matches `requests`.
    pub async fn handle_batch(&self, requests: Vec<TranslationRequest>) -> Vec<ItemResult> {
        let started = Instant::now();
        let n = requests.len();
        let mut results: Vec<Option<ItemResult>> = (0..n).map(|_| None).collect();
        let mut plans: Vec<Option<Plan>> = (0..n).map(|_| None).collect();

        let mut to_route = Vec::new();
        for (i, req) in requests.iter().enumerate() {
            if let Err(e) = self.validate(req) {
                results[i] = Some(Err(e));
                continue;
            }
            match &req.force_domain {
                Some(domain) => match self.registry.resolve(domain) {
                    Ok(resolved) => {
                        plans[i] = Some(Plan {
                            routing: None,
                            resolved,
                        })
                    }
                    Err(e) => results[i] = Some(Err(e)),
                },
                None => to_route.push(i),
            }
        }

        let texts: Vec<String> = to_route.iter().map(|&i| requests[i].text.clone()).collect();
        let decisions = self.route_texts(texts).await;
        for (i, decision) in to_route.into_iter().zip(decisions) {
            let plan = match decision {
                Ok(d) => self.registry.resolve(&d.chosen).map(|resolved| Plan {
                    routing: Some(d),
                    resolved,
                }),
                Err(e) => self.embed_failure(e),
            };
            match plan {
                Ok(p) => plans[i] = Some(p),
                Err(e) => results[i] = Some(Err(e)),
            }
        }

        let mut groups: IndexMap<DomainLabel, (Arc<Backend>, Vec<usize>)> = IndexMap::new();
        for (i, plan) in plans.iter().enumerate() {
            if let Some(p) = plan {
                groups
                    .entry(p.resolved.backend.domain.clone())
                    .or_insert_with(|| (p.resolved.backend.clone(), Vec::new()))
                    .1
                    .push(i);
            }
        }

        let calls = groups.values().flat_map(|(backend, idx)| {
            idx.chunks(self.config.backend_batch_size).map(|chunk| {
                let items = chunk
                    .iter()
                    .map(|&i| BackendRequest {
                        text: requests[i].text.clone(),
                        source_lang: requests[i].source_lang.clone(),
                        target_lang: requests[i].target_lang.clone(),
                    })
                    .collect();
                let backend = backend.clone();
                async move {
                    let out = self.forward(&backend, items).await;
                    (chunk, out, started.elapsed())
                }
            })
        });

        for (chunk, out, elapsed) in join_all(calls).await {
            let latency_ms = u64::try_from(elapsed.as_millis()).unwrap_or(u64::MAX);
            match out {
                Ok(translations) => {
                    for (&i, translation) in chunk.iter().zip(translations) {
                        let plan = plans[i].take().expect("planned item");
                        results[i] = Some(Ok(TranslationResponse {
                            translation,
                            routing: plan.routing,
                            backend_domain: plan.resolved.backend.domain.clone(),
                            latency_ms,
                            fallback_used: plan.resolved.fallback_used,
                        }));
                    }
                }
                Err(e) => {
                    for &i in chunk {
                        results[i] = Some(Err(e.clone()));
                    }
                }
            }
        }

        results
            .into_iter()
            .map(|r| r.expect("every item resolved"))
            .collect()
    }

    fn validate(&self, req: &TranslationRequest) -> Result<(), GatewayError> {
        if req.text.trim().is_empty() {
            return Err(GatewayError::Validation("text is empty".into()));
        }
        if req.source_lang != self.config.source_lang || req.target_lang != self.config.target_lang {
            return Err(GatewayError::Validation(format!(
                "unsupported language pair {} -> {}; this gateway serves {} -> {}",
                req.source_lang, req.target_lang, self.config.source_lang, self.config.target_lang
            )));
        }
        if let Some(d) = &req.force_domain {
            if !self.registry.contains(d) {
                return Err(GatewayError::Validation(format!("unknown force_domain `{d}`")));
            }
        }
        Ok(())
    }

    fn embed_failure(&self, err: GatewayError) -> Result<Plan, GatewayError> {
        if self.config.embed_failure == EmbedFailurePolicy::Fallback {
            if let Some(resolved) = self.registry.fallback_backend() {
                log::warn!("{err}; forwarding to fallback `{}`", resolved.backend.domain);
                return Ok(Plan {
                    routing: None,
                    resolved,
                });
            }
        }
        Err(err)
    }

    /// Embeds and routes in chunks on the blocking pool.
    async fn route_texts(&self, texts: Vec<String>) -> Vec<Result<RoutingDecision, GatewayError>> {
        let chunks: Vec<Vec<String>> = texts
            .chunks(self.config.embed_batch_size)
            .map(<[String]>::to_vec)
            .collect();
        let tasks = chunks.into_iter().map(|chunk| {
            let index = self.index.clone();
            let embedder = self.embedder.clone();
            let len = chunk.len();
            let task = tokio::task::spawn_blocking(move || {
                let refs: Vec<&str> = chunk.iter().map(String::as_str).collect();
                route_batch(&refs, &index, &*embedder)
            });
            async move {
                match task.await {
                    Ok(Ok(decisions)) => decisions.into_iter().map(Ok).collect(),
                    Ok(Err(e)) => vec![Err(GatewayError::Embed(e.to_string())); len],
                    Err(e) => vec![Err(GatewayError::Embed(format!("embedding task failed: {e}"))); len],
                }
            }
        });
        join_all(tasks).await.into_iter().flatten().collect::<Vec<_>>()
    }

    async fn forward(
        &self,
        backend: &Backend,
        items: Vec<BackendRequest>,
    ) -> Result<Vec<String>, GatewayError> {
        let _permit = backend
            .permits
            .acquire()
            .await
            .map_err(|_| GatewayError::Config("backend semaphore closed".into()))?;
        let n = items.len();
        if n == 1 {
            let item = items.into_iter().next().expect("one item");
            let resp: BackendResponse = self.post(backend, "/translate", &item).await?;
            return Ok(vec![resp.translation]);
        }
        let resp: BackendBatchResponse = self
            .post(backend, "/translate/batch", &BackendBatchRequest { items })
            .await?;
        if resp.translations.len() != n {
            return Err(GatewayError::Backend {
                domain: backend.domain.clone(),
                message: format!("sent {n} items, got {} translations", resp.translations.len()),
            });
        }
        Ok(resp.translations)
    }

    async fn post<B: Serialize, R: DeserializeOwned>(
        &self,
        backend: &Backend,
        path: &str,
        body: &B,
    ) -> Result<R, GatewayError> {
        let failed = |message: String| GatewayError::Backend {
            domain: backend.domain.clone(),
            message,
        };
        let resp = self
            .client
            .post(backend.url(path))
            .timeout(backend.timeout)
            .json(body)
            .send()
            .await
            .map_err(|e| {
                if e.is_timeout() {
                    GatewayError::Timeout(backend.domain.clone())
                } else {
                    if e.is_connect() {
                        backend.set_healthy(false);
                    }
                    failed(e.to_string())
                }
            })?;
        let status = resp.status();
        if !status.is_success() {
            let mut text = resp.text().await.unwrap_or_default();
            if let Some((cut, _)) = text.char_indices().nth(MAX_ERROR_BODY) {
                text.truncate(cut);
            }
            return Err(failed(format!("HTTP {status}: {text}")));
        }
        resp.json::<R>().await.map_err(|e| {
            if e.is_timeout() {
                GatewayError::Timeout(backend.domain.clone())
            } else {
                failed(format!("unreadable response: {e}"))
            }
        })
    }

    pub fn health(&self) -> HealthReport {
        let backends: Vec<BackendStatus> = self
            .registry
            .iter()
            .map(|b| BackendStatus {
                domain: b.domain.clone(),
                endpoint: b.endpoint.clone(),
                healthy: b.is_healthy(),
            })
            .collect();
        let status = if backends.iter().all(|b| b.healthy) {
            "ok"
        } else {
            "degraded"
        };
        HealthReport {
            status: status.into(),
            uptime_ms: u64::try_from(self.started.elapsed().as_millis()).unwrap_or(u64::MAX),
            index: IndexSummary {
                embedder_id: self.index.embedder_id().to_string(),
                dim: self.index.dim(),
                domains: self
                    .index
                    .entries()
                    .iter()
                    .map(|e| DomainCount {
                        name: e.domain.clone(),
                        count: e.count,
                    })
                    .collect(),
            },
            backends,
            fallback_domain: self.registry.fallback().cloned(),
        }
    }

    /// Hits `GET {endpoint}/health` on every backend. Any HTTP answer counts
    /// as alive.
    pub async fn probe_backends(&self) {
        let probes = self.registry.iter().map(|b| async move {
            let timeout = b.timeout.min(PROBE_TIMEOUT);
            let alive = self
                .client
                .get(b.url("/health"))
                .timeout(timeout)
                .send()
                .await
                .is_ok();
            b.set_healthy(alive);
        });
        join_all(probes).await;
    }

    /// Runs [`Gateway::probe_backends`] every `probe_interval_ms`.
    pub fn spawn_prober(self: &Arc<Self>) -> Option<JoinHandle<()>> {
        if self.config.probe_interval_ms == 0 {
            return None;
        }
        let gw = Arc::downgrade(self);
        let period = Duration::from_millis(self.config.probe_interval_ms);
        Some(tokio::spawn(async move {
            let mut ticker = tokio::time::interval(period);
            ticker.set_missed_tick_behavior(tokio::time::MissedTickBehavior::Delay);
            loop {
                ticker.tick().await;
                match gw.upgrade() {
                    Some(gw) => gw.probe_backends().await,
                    None => break,
                }
            }
        }))
    }
}
