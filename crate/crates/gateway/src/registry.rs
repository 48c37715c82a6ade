use std::sync::atomic::{AtomicBool, Ordering};
use std::sync::Arc;
use std::time::Duration;

use indexmap::IndexMap;
use semiroute_core::{CentroidIndex, DomainLabel, RoutingDecision};
use tokio::sync::Semaphore;

use crate::config::GatewayConfig;
use crate::error::GatewayError;

/// One translation endpoint. The health flag is flipped by the prober.
#[derive(Debug)]
pub struct Backend {
    pub domain: DomainLabel,
    pub endpoint: String,
    pub timeout: Duration,
    healthy: AtomicBool,
    pub(crate) permits: Arc<Semaphore>,
}

impl Backend {
    pub fn is_healthy(&self) -> bool {
        self.healthy.load(Ordering::Acquire)
    }

    pub fn set_healthy(&self, healthy: bool) {
        let was = self.healthy.swap(healthy, Ordering::AcqRel);
        if was != healthy {
            log::info!(
                "backend `{}` at {} is now {}",
                self.domain,
                self.endpoint,
                if healthy { "healthy" } else { "unhealthy" }
            );
        }
    }

    pub(crate) fn url(&self, path: &str) -> String {
        format!("{}{}", self.endpoint.trim_end_matches('/'), path)
    }
}

#[derive(Debug)]
pub struct BackendRegistry {
    backends: IndexMap<DomainLabel, Arc<Backend>>,
    fallback: Option<DomainLabel>,
}

/// Where a request goes.
#[derive(Debug, Clone)]
pub struct Resolved {
    pub backend: Arc<Backend>,
    pub fallback_used: bool,
}

impl BackendRegistry {
    pub fn from_config(config: &GatewayConfig) -> Result<Self, GatewayError> {
        if config.max_in_flight_per_backend == 0 {
            return Err(GatewayError::Config(
                "max_in_flight_per_backend must be positive".into(),
            ));
        }
        let mut backends = IndexMap::new();
        for (domain, bc) in &config.backends {
            let url = reqwest::Url::parse(&bc.endpoint).map_err(|e| {
                GatewayError::Config(format!("backend `{domain}` endpoint {:?}: {e}", bc.endpoint))
            })?;
            if !matches!(url.scheme(), "http" | "https") {
                return Err(GatewayError::Config(format!(
                    "backend `{domain}` endpoint must be http(s), got {}",
                    bc.endpoint
                )));
            }
            if let Some(other) = backends.values().find(|b: &&Arc<Backend>| {
                b.endpoint.trim_end_matches('/') == bc.endpoint.trim_end_matches('/')
            }) {
                return Err(GatewayError::Config(format!(
                    "backends `{}` and `{domain}` share endpoint {}",
                    other.domain, bc.endpoint
                )));
            }
            if bc.timeout_ms == 0 {
                return Err(GatewayError::Config(format!(
                    "backend `{domain}` has a zero timeout"
                )));
            }
            backends.insert(
                domain.clone(),
                Arc::new(Backend {
                    domain: domain.clone(),
                    endpoint: bc.endpoint.clone(),
                    timeout: Duration::from_millis(bc.timeout_ms),
                    healthy: AtomicBool::new(true),
                    permits: Arc::new(Semaphore::new(config.max_in_flight_per_backend)),
                }),
            );
        }
        if let Some(fb) = &config.fallback_domain {
            if !backends.contains_key(fb) {
                return Err(GatewayError::Config(format!(
                    "fallback domain `{fb}` has no backend"
                )));
            }
        }
        Ok(Self {
            backends,
            fallback: config.fallback_domain.clone(),
        })
    }

    /// Every index domain needs a backend unless a fallback is configured.
    pub fn check_covers(&self, index: &CentroidIndex) -> Result<(), GatewayError> {
        if self.fallback.is_some() {
            return Ok(());
        }
        match index.domains().find(|d| !self.backends.contains_key(*d)) {
            Some(d) => Err(GatewayError::Config(format!(
                "index domain `{d}` has no backend and no fallback is set"
            ))),
            None => Ok(()),
        }
    }

    pub fn get(&self, domain: &DomainLabel) -> Option<&Arc<Backend>> {
        self.backends.get(domain)
    }

    pub fn contains(&self, domain: &DomainLabel) -> bool {
        self.backends.contains_key(domain)
    }

    pub fn fallback(&self) -> Option<&DomainLabel> {
        self.fallback.as_ref()
    }

    pub fn iter(&self) -> impl Iterator<Item = &Arc<Backend>> {
        self.backends.values()
    }

    /// Backend for `domain`, or the fallback if that one is missing or down.
    pub fn resolve(&self, domain: &DomainLabel) -> Result<Resolved, GatewayError> {
        if let Some(b) = self.backends.get(domain).filter(|b| b.is_healthy()) {
            return Ok(Resolved {
                backend: b.clone(),
                fallback_used: false,
            });
        }
        self.fallback_backend()
            .ok_or_else(|| GatewayError::RoutingUnavailable(domain.clone()))
    }

    /// The healthy fallback backend, if any.
    pub fn fallback_backend(&self) -> Option<Resolved> {
        let b = self.backends.get(self.fallback.as_ref()?)?;
        b.is_healthy().then(|| Resolved {
            backend: b.clone(),
            fallback_used: true,
        })
    }
}

pub fn resolve_backend(
    decision: &RoutingDecision,
    registry: &BackendRegistry,
) -> Result<Resolved, GatewayError> {
    registry.resolve(&decision.chosen)
}
