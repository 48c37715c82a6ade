use std::collections::HashSet;
use std::path::{Path, PathBuf};

use indexmap::IndexMap;
use semiroute_core::corpus::{corpus_stats, ingest_moses, ingest_tsv};
use semiroute_core::{Corpus, CorpusStats, DomainLabel, SentencePair};
use serde::{Deserialize, Serialize};
use serde_json::json;

use super::{or_artifact, CORPUS};
use crate::artifacts::{provenance, read_records, write_records};
use crate::config::{Loaded, SourceFormat};
use crate::error::CliError;

fn required<'a>(source: &str, field: &str, value: &'a Option<PathBuf>) -> Result<&'a Path, CliError> {
    value
        .as_deref()
        .ok_or_else(|| CliError::new("config", format!("source `{source}` needs `{field}`")))
}

pub fn ingest(ctx: &Loaded) -> Result<(), CliError> {
    let sources = &ctx.config.sources;
    if sources.is_empty() {
        return Err(CliError::new("config", "no sources configured"));
    }
    let mut names = HashSet::new();
    let mut pairs = Vec::new();
    let mut inputs: Vec<&Path> = Vec::new();
    let mut skipped = 0;
    for s in sources {
        if !names.insert(s.name.as_str()) {
            return Err(CliError::new(
                "config",
                format!("source name `{}` is repeated", s.name),
            ));
        }
        let ingested = match s.format {
            SourceFormat::Moses => {
                let src = required(&s.name, "source", &s.source)?;
                let tgt = required(&s.name, "target", &s.target)?;
                inputs.extend([src, tgt]);
                ingest_moses(src, tgt, &s.name)?
            }
            SourceFormat::Tsv => {
                let path = required(&s.name, "path", &s.path)?;
                inputs.push(path);
                ingest_tsv(path, &s.name)?
            }
        };
        eprintln!(
            "{}: {} pairs ({} skipped)",
            s.name,
            ingested.corpus.len(),
            ingested.skipped
        );
        skipped += ingested.skipped;
        pairs.extend(ingested.corpus.pairs);
    }
    let out = ctx.artifact(CORPUS);
    let prov = provenance(
        ctx,
        "ingest",
        "corpus",
        json!({"sources": names.len(), "skipped": skipped}),
        &inputs,
    )?;
    write_records(&out, &prov, &pairs)?;
    println!("{} pairs -> {}", pairs.len(), out.display());
    Ok(())
}

#[derive(Deserialize)]
struct StatsRecord {
    #[serde(flatten)]
    pair: SentencePair,
    #[serde(default)]
    domain: Option<DomainLabel>,
}

#[derive(Serialize)]
struct StatsRow {
    name: String,
    #[serde(flatten)]
    stats: CorpusStats,
}

fn fmt_opt(v: Option<f64>) -> String {
    v.map_or_else(|| "-".into(), |x| format!("{x:.2}"))
}

fn stats_table(rows: &[StatsRow]) -> String {
    let mut out = String::from(
        "| Corpus | Pairs | EN tokens | GA tokens | EN tokens/sent | GA tokens/sent | GA/EN |\n|---|---:|---:|---:|---:|---:|---:|\n",
    );
    for r in rows {
        let s = &r.stats;
        out.push_str(&format!(
            "| {} | {} | {} | {} | {} | {} | {} |\n",
            r.name,
            s.pair_count,
            s.en_tokens,
            s.ga_tokens,
            fmt_opt(s.mean_en_tokens_per_sentence),
            fmt_opt(s.mean_ga_tokens_per_sentence),
            fmt_opt(s.length_ratio),
        ));
    }
    out
}

pub fn stats(ctx: &Loaded, input: Option<PathBuf>, by_domain: bool, as_json: bool) -> Result<(), CliError> {
    let path = or_artifact(ctx, input, CORPUS);
    let records: Vec<StatsRecord> = read_records(&path)?;
    let mut groups: IndexMap<String, Vec<SentencePair>> = IndexMap::new();
    let mut all = Vec::with_capacity(records.len());
    for r in records {
        let key = if by_domain {
            r.domain.as_ref().map(|d| d.to_string()).ok_or_else(|| {
                CliError::new("validation", format!("{} has unlabeled records", path.display()))
            })?
        } else {
            r.pair.origin.clone()
        };
        groups.entry(key).or_default().push(r.pair.clone());
        all.push(r.pair);
    }
    let mut rows: Vec<StatsRow> = groups
        .into_iter()
        .map(|(name, pairs)| StatsRow {
            stats: corpus_stats(&Corpus::new(name.as_str(), pairs)),
            name,
        })
        .collect();
    rows.push(StatsRow {
        name: "total".into(),
        stats: corpus_stats(&Corpus::new("total", all)),
    });
    if as_json {
        println!("{}", serde_json::to_string_pretty(&rows).expect("rows serialize"));
    } else {
        print!("{}", stats_table(&rows));
    }
    Ok(())
}
