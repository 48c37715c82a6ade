use std::future::Future;
use std::sync::Arc;

use axum::extract::rejection::JsonRejection;
use axum::extract::State;
use axum::http::StatusCode;
use axum::response::{IntoResponse, Response};
use axum::routing::{get, post};
use axum::{Json, Router};
use tokio::net::TcpListener;

use crate::api::{BatchItem, BatchRequest, BatchResponse, HealthReport, TranslationRequest};
use crate::error::GatewayError;
use crate::service::Gateway;

impl IntoResponse for GatewayError {
    fn into_response(self) -> Response {
        let status = StatusCode::from_u16(self.status_code()).unwrap_or(StatusCode::INTERNAL_SERVER_ERROR);
        (status, Json(self.body())).into_response()
    }
}

pub fn router(gateway: Arc<Gateway>) -> Router {
    Router::new()
        .route("/translate", post(translate))
        .route("/translate/batch", post(translate_batch))
        .route("/health", get(health))
        .with_state(gateway)
}

fn rejected(rejection: JsonRejection) -> GatewayError {
    GatewayError::Validation(rejection.body_text())
}

async fn translate(
    State(gw): State<Arc<Gateway>>,
    payload: Result<Json<TranslationRequest>, JsonRejection>,
) -> Response {
    let Json(request) = match payload {
        Ok(p) => p,
        Err(r) => return rejected(r).into_response(),
    };
    match gw.handle_translate(request).await {
        Ok(resp) => Json(resp).into_response(),
        Err(e) => e.into_response(),
    }
}

async fn translate_batch(
    State(gw): State<Arc<Gateway>>,
    payload: Result<Json<BatchRequest>, JsonRejection>,
) -> Response {
    let Json(batch) = match payload {
        Ok(p) => p,
        Err(r) => return rejected(r).into_response(),
    };
    if batch.requests.is_empty() {
        return GatewayError::Validation("requests is empty".into()).into_response();
    }
    let responses = gw
        .handle_batch(batch.requests)
        .await
        .into_iter()
        .map(|r| match r {
            Ok(resp) => BatchItem::Response(resp),
            Err(e) => BatchItem::Error(e.body()),
        })
        .collect();
    Json(BatchResponse { responses }).into_response()
}

async fn health(State(gw): State<Arc<Gateway>>) -> Json<HealthReport> {
    Json(gw.health())
}

/// Serves until `shutdown` resolves. Starts the health prober alongside.
pub async fn serve<F>(gateway: Arc<Gateway>, listener: TcpListener, shutdown: F) -> std::io::Result<()>
where
    F: Future<Output = ()> + Send + 'static,
{
    let prober = gateway.spawn_prober();
    if let Ok(addr) = listener.local_addr() {
        log::info!("gateway listening on http://{addr}");
    }
    let result = axum::serve(listener, router(gateway))
        .with_graceful_shutdown(shutdown)
        .await;
    if let Some(p) = prober {
        p.abort();
    }
    result
}

pub async fn ctrl_c() {
    if let Err(e) = tokio::signal::ctrl_c().await {
        log::error!("cannot listen for ctrl-c: {e}");
        std::future::pending::<()>().await;
    }
}
