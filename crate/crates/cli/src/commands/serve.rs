use std::path::PathBuf;
use std::sync::Arc;

use semiroute_gateway::{build_embedder, http, Gateway};

use super::index::open_index;
use crate::config::Loaded;
use crate::error::CliError;

pub fn serve(
    ctx: &Loaded,
    index: Option<PathBuf>,
    bind: Option<String>,
    port: Option<u16>,
) -> Result<(), CliError> {
    let (index, index_path) = open_index(ctx, index)?;
    let mut config = ctx.config.gateway.clone();
    if let Some(b) = bind {
        config.bind = b;
    }
    if let Some(p) = port {
        config.port = p;
    }
    // Built and dropped outside the runtime: remote clients block.
    let embedder = build_embedder(&ctx.config.embedder)?;
    let addr = format!("{}:{}", config.bind, config.port);

    let runtime = tokio::runtime::Builder::new_multi_thread()
        .enable_all()
        .build()
        .map_err(|e| CliError::new("io", format!("cannot start runtime: {e}")))?;
    let result = runtime.block_on(async {
        let gateway = Gateway::new(config, Arc::new(index), embedder.clone())?;
        let listener = tokio::net::TcpListener::bind(&addr)
            .await
            .map_err(|e| CliError::new("io", format!("bind {addr}: {e}")))?;
        eprintln!(
            "serving {} ({} domains) on http://{}",
            index_path.display(),
            gateway.index().entries().len(),
            listener
                .local_addr()
                .map(|a| a.to_string())
                .unwrap_or(addr.clone())
        );
        http::serve(gateway, listener, http::ctrl_c())
            .await
            .map_err(|e| CliError::new("io", e.to_string()))
    });
    drop(runtime);
    drop(embedder);
    result
}
