//! An in-process echo backend that speaks the outbound contract. Useful for
//! tests and local smoke runs.

use std::net::SocketAddr;
use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::Arc;
use std::time::Duration;

use axum::extract::State;
use axum::routing::{get, post};
use axum::{Json, Router};
use tokio::net::TcpListener;
use tokio::sync::oneshot;
use tokio::task::JoinHandle;

use crate::api::{BackendBatchRequest, BackendBatchResponse, BackendRequest, BackendResponse};

#[derive(Debug, Default)]
pub struct CallCounts {
    pub single: AtomicUsize,
    pub batch: AtomicUsize,
    pub items: AtomicUsize,
}

impl CallCounts {
    pub fn single(&self) -> usize {
        self.single.load(Ordering::SeqCst)
    }

    pub fn batch(&self) -> usize {
        self.batch.load(Ordering::SeqCst)
    }

    pub fn items(&self) -> usize {
        self.items.load(Ordering::SeqCst)
    }
}

#[derive(Clone)]
struct StubState {
    name: Arc<str>,
    delay: Duration,
    counts: Arc<CallCounts>,
}

/// Translation is `"[{name}] {text}"`.
pub fn echo(name: &str, text: &str) -> String {
    format!("[{name}] {text}")
}

pub struct EchoBackend {
    pub addr: SocketAddr,
    pub counts: Arc<CallCounts>,
    shutdown: Option<oneshot::Sender<()>>,
    task: JoinHandle<()>,
}

impl EchoBackend {
    pub async fn spawn(name: &str) -> std::io::Result<Self> {
        Self::spawn_with_delay(name, Duration::ZERO).await
    }

    /// Each call sleeps for `delay` before answering.
    pub async fn spawn_with_delay(name: &str, delay: Duration) -> std::io::Result<Self> {
        let listener = TcpListener::bind("127.0.0.1:0").await?;
        let addr = listener.local_addr()?;
        let counts = Arc::new(CallCounts::default());
        let state = StubState {
            name: name.into(),
            delay,
            counts: counts.clone(),
        };
        let app = Router::new()
            .route("/translate", post(single))
            .route("/translate/batch", post(batch))
            .route("/health", get(|| async { "ok" }))
            .with_state(state);
        let (tx, rx) = oneshot::channel();
        let task = tokio::spawn(async move {
            let _ = axum::serve(listener, app)
                .with_graceful_shutdown(async {
                    let _ = rx.await;
                })
                .await;
        });
        Ok(Self {
            addr,
            counts,
            shutdown: Some(tx),
            task,
        })
    }

    pub fn endpoint(&self) -> String {
        format!("http://{}", self.addr)
    }

    /// Stops accepting connections and waits for the server to exit.
    pub async fn stop(mut self) {
        if let Some(tx) = self.shutdown.take() {
            let _ = tx.send(());
        }
        self.task.abort();
        let _ = (&mut self.task).await;
    }
}

async fn single(State(s): State<StubState>, Json(req): Json<BackendRequest>) -> Json<BackendResponse> {
    s.counts.single.fetch_add(1, Ordering::SeqCst);
    s.counts.items.fetch_add(1, Ordering::SeqCst);
    tokio::time::sleep(s.delay).await;
    Json(BackendResponse {
        translation: echo(&s.name, &req.text),
    })
}

async fn batch(
    State(s): State<StubState>,
    Json(req): Json<BackendBatchRequest>,
) -> Json<BackendBatchResponse> {
    s.counts.batch.fetch_add(1, Ordering::SeqCst);
    s.counts.items.fetch_add(req.items.len(), Ordering::SeqCst);
    tokio::time::sleep(s.delay).await;
    Json(BackendBatchResponse {
        translations: req.items.iter().map(|i| echo(&s.name, &i.text)).collect(),
    })
}
