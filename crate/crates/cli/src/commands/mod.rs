pub mod align;
pub mod corpus;
pub mod evaluate;
pub mod index;
pub mod label;
pub mod serve;
pub mod split;

use std::path::PathBuf;

use semiroute_core::DomainLabel;

use crate::config::Loaded;

pub const CORPUS: &str = "corpus.jsonl";
pub const LABELED: &str = "labeled.jsonl";
pub const LABEL_FAILURES: &str = "label_failures.jsonl";
pub const SPLIT_MANIFEST: &str = "split.json";
pub const EVAL: &str = "eval.jsonl";
pub const MERGED_TRAIN: &str = "train.jsonl";

pub fn train_file(domain: &DomainLabel) -> String {
    format!("train.{domain}.jsonl")
}

pub fn or_artifact(ctx: &Loaded, path: Option<PathBuf>, name: &str) -> PathBuf {
    path.unwrap_or_else(|| ctx.artifact(name))
}

/// `configured` first, then anything else in order of appearance.
pub fn domain_order<'a>(
    configured: &[DomainLabel],
    seen: impl IntoIterator<Item = &'a DomainLabel>,
) -> Vec<DomainLabel> {
    let mut order = configured.to_vec();
    for d in seen {
        if !order.contains(d) {
            order.push(d.clone());
        }
    }
    order
}
