use std::collections::HashMap;
use std::path::PathBuf;

use semiroute_core::corpus::{deduplicate, split_lines, train_eval_split};
use semiroute_core::labeler::{partition_by_domain, Regime};
use semiroute_core::records::Provenance;
use semiroute_core::{Corpus, DomainLabel, LabeledPair};
use serde::{Deserialize, Serialize};
use serde_json::json;

use super::{domain_order, or_artifact, train_file, EVAL, LABELED, MERGED_TRAIN, SPLIT_MANIFEST};
use crate::artifacts::{provenance, read_records, write_json, write_records};
use crate::config::Loaded;
use crate::error::CliError;

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct DomainSplit {
    pub domain: DomainLabel,
    pub labeled: usize,
    pub after_dedup: usize,
    pub after_line_split: usize,
    pub train: usize,
    pub eval: usize,
}

/// Written as `split.json`; lists the files the split produced.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SplitManifest {
    pub provenance: Provenance,
    pub merged: bool,
    /// File names in the work directory.
    pub train: Vec<String>,
    pub eval: String,
    pub domains: Vec<DomainSplit>,
}

type Meta = HashMap<(String, usize), (DomainLabel, f64, Regime)>;

fn relabel(corpus: &Corpus, meta: &Meta) -> Vec<LabeledPair> {
    corpus
        .pairs
        .iter()
        .map(|p| {
            let (domain, confidence, regime) = meta[&(p.origin.clone(), p.line_no)].clone();
            LabeledPair {
                pair: p.clone(),
                domain,
                confidence,
                regime,
            }
        })
        .collect()
}

pub fn split(ctx: &Loaded, merge: bool, input: Option<PathBuf>) -> Result<(), CliError> {
    let path = or_artifact(ctx, input, LABELED);
    let labeled: Vec<LabeledPair> = read_records(&path)?;
    if labeled.is_empty() {
        return Err(CliError::new(
            "validation",
            format!("{} has no records", path.display()),
        ));
    }
    let spec = ctx.split_spec()?;

    let mut meta: Meta = HashMap::new();
    for lp in &labeled {
        let key = (lp.pair.origin.clone(), lp.pair.line_no);
        let value = (lp.domain.clone(), lp.confidence, lp.regime);
        if let Some(prev) = meta.insert(key, value) {
            if prev.0 != lp.domain {
                return Err(CliError::new(
                    "validation",
                    format!("{}:{} carries two labels", lp.pair.origin, lp.pair.line_no),
                ));
            }
        }
    }

    let mut buckets = partition_by_domain(&labeled);
    let order = domain_order(&ctx.config.labeler.domains, buckets.keys());
    let params = json!({
        "train_fraction": spec.train_fraction,
        "split_seed": spec.seed,
        "merge_domains": merge,
    });

    let mut summary = Vec::new();
    let mut train_files = Vec::new();
    let mut merged_train = Vec::new();
    let mut eval_all = Vec::new();
    for domain in order {
        let Some(corpus) = buckets.shift_remove(&domain) else {
            continue;
        };
        let deduped = deduplicate(&corpus);
        let lines = split_lines(&deduped);
        let (train, eval) = train_eval_split(&lines, &spec)?;
        summary.push(DomainSplit {
            domain: domain.clone(),
            labeled: corpus.len(),
            after_dedup: deduped.len(),
            after_line_split: lines.len(),
            train: train.len(),
            eval: eval.len(),
        });
        let train = relabel(&train, &meta);
        eval_all.extend(relabel(&eval, &meta));
        if merge {
            merged_train.extend(train);
        } else {
            let name = train_file(&domain);
            let prov = provenance(ctx, "split", &format!("train.{domain}"), params.clone(), &[&path])?;
            write_records(&ctx.artifact(&name), &prov, &train)?;
            train_files.push(name);
        }
    }
    if merge {
        let prov = provenance(ctx, "split", "train", params.clone(), &[&path])?;
        write_records(&ctx.artifact(MERGED_TRAIN), &prov, &merged_train)?;
        train_files.push(MERGED_TRAIN.to_string());
    }
    let prov = provenance(ctx, "split", "eval", params.clone(), &[&path])?;
    write_records(&ctx.artifact(EVAL), &prov, &eval_all)?;

    let manifest = SplitManifest {
        provenance: provenance(ctx, "split", "split_manifest", params, &[&path])?,
        merged: merge,
        train: train_files,
        eval: EVAL.to_string(),
        domains: summary,
    };
    write_json(&ctx.artifact(SPLIT_MANIFEST), &manifest)?;

    for d in &manifest.domains {
        println!(
            "{}\tlabeled={}\tdedup={}\tlines={}\ttrain={}\teval={}",
            d.domain, d.labeled, d.after_dedup, d.after_line_split, d.train, d.eval
        );
    }
    println!("train files: {}", manifest.train.join(", "));
    Ok(())
}
