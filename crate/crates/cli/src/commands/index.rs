use std::collections::BTreeSet;
use std::fs;
use std::io::{self, BufRead, Write};
use std::path::{Path, PathBuf};

use semiroute_core::centroids::{build_index, load_index, route_batch, save_index};
use semiroute_core::{BuildMetadata, CentroidIndex, LabeledPair, RoutingDecision};
use semiroute_gateway::build_embedder;
use serde::Serialize;

use super::split::SplitManifest;
use super::SPLIT_MANIFEST;
use crate::artifacts::ensure_parent;
use crate::config::Loaded;
use crate::error::CliError;

const DEFAULT_EMBED_BATCH: usize = 64;

fn train_inputs(ctx: &Loaded, explicit: Vec<PathBuf>) -> Result<Vec<PathBuf>, CliError> {
    if !explicit.is_empty() {
        return Ok(explicit);
    }
    let path = ctx.artifact(SPLIT_MANIFEST);
    let text = fs::read_to_string(&path).map_err(|e| CliError::io(&path, e))?;
    let manifest: SplitManifest = serde_json::from_str(&text)
        .map_err(|e| CliError::new("parse", format!("{}: {e}", path.display())))?;
    Ok(manifest.train.iter().map(|f| ctx.artifact(f)).collect())
}

/// Taken from `SOURCE_DATE_EPOCH`; absent otherwise.
fn build_timestamp() -> Option<String> {
    std::env::var("SOURCE_DATE_EPOCH")
        .ok()
        .filter(|v| !v.trim().is_empty())
}

pub fn centroids(ctx: &Loaded, train: Vec<PathBuf>, output: Option<PathBuf>) -> Result<(), CliError> {
    let inputs = train_inputs(ctx, train)?;
    let mut labeled: Vec<LabeledPair> = Vec::new();
    for p in &inputs {
        labeled.extend(crate::artifacts::read_records::<LabeledPair>(p)?);
    }
    if labeled.is_empty() {
        return Err(CliError::new("validation", "training split is empty"));
    }
    let regimes: BTreeSet<&str> = labeled.iter().map(|lp| lp.regime.as_str()).collect();
    let metadata = BuildMetadata {
        regime: Some(regimes.into_iter().collect::<Vec<_>>().join(",")),
        seed: Some(ctx.config.seed),
        timestamp: build_timestamp(),
        config_id: Some(ctx.config_id.clone()),
    };
    let embedder = build_embedder(&ctx.config.embedder)?;
    let batch = ctx.config.embed_batch_size.unwrap_or(DEFAULT_EMBED_BATCH);
    let index = build_index(&labeled, &ctx.config.labeler.domains, &*embedder, batch, metadata)?;
    let out = output.unwrap_or_else(|| ctx.index_path.clone());
    ensure_parent(&out)?;
    save_index(&index, &out)?;
    for e in index.entries() {
        println!("{}\t{}", e.domain, e.count);
    }
    println!(
        "{} domains, dim {}, embedder {} -> {}",
        index.entries().len(),
        index.dim(),
        index.embedder_id(),
        out.display()
    );
    Ok(())
}

pub fn open_index(ctx: &Loaded, path: Option<PathBuf>) -> Result<(CentroidIndex, PathBuf), CliError> {
    let path = path.unwrap_or_else(|| ctx.index_path.clone());
    if !Path::new(&path).exists() {
        return Err(CliError::new(
            "io",
            format!(
                "{} does not exist; run `semiroute centroids` first",
                path.display()
            ),
        ));
    }
    Ok((load_index(&path)?, path))
}

#[derive(Serialize)]
struct RoutedLine<'a> {
    text: &'a str,
    #[serde(flatten)]
    decision: &'a RoutingDecision,
}

pub fn route_stdin(ctx: &Loaded, index: Option<PathBuf>) -> Result<(), CliError> {
    let (index, _) = open_index(ctx, index)?;
    let embedder = build_embedder(&ctx.config.embedder)?;
    let batch = ctx.config.embed_batch_size.unwrap_or(DEFAULT_EMBED_BATCH);
    let lines: Vec<String> = io::stdin()
        .lock()
        .lines()
        .collect::<Result<_, _>>()
        .map_err(|e| CliError::new("io", format!("stdin: {e}")))?;
    let texts: Vec<&str> = lines.iter().map(|l| l.trim()).filter(|l| !l.is_empty()).collect();
    let stdout = io::stdout();
    let mut out = stdout.lock();
    for chunk in texts.chunks(batch.max(1)) {
        for (text, decision) in chunk.iter().zip(route_batch(chunk, &index, &*embedder)?) {
            let line = serde_json::to_string(&RoutedLine {
                text,
                decision: &decision,
            })
            .expect("decision serializes");
            writeln!(out, "{line}").map_err(|e| CliError::new("io", format!("stdout: {e}")))?;
        }
    }
    Ok(())
}
