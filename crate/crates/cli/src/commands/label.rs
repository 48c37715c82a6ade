use std::path::PathBuf;
use std::sync::Arc;

use indexmap::IndexMap;
use semiroute_core::labeler::{label_by_corpus, label_regime_a, label_regime_b, LabelFailure};
use semiroute_core::{ClassifierClient, DomainLabel, SentencePair};
use semiroute_gateway::{build_classifier, ClassifierSpec};
use serde_json::json;

use super::{or_artifact, CORPUS, LABELED, LABEL_FAILURES};
use crate::artifacts::{provenance, read_records, write_records};
use crate::config::{Loaded, RegimeChoice};
use crate::error::CliError;

fn classifier(spec: Option<&ClassifierSpec>) -> Result<Arc<dyn ClassifierClient>, CliError> {
    let spec = spec.ok_or_else(|| {
        CliError::new(
            "config",
            "labeler.classifier is not set (or set SEMIROUTE_CLASSIFY_URL)",
        )
    })?;
    Ok(build_classifier(spec)?)
}

fn kind(spec: Option<&ClassifierSpec>) -> &'static str {
    match spec {
        Some(ClassifierSpec::Mock { .. }) => "mock",
        Some(ClassifierSpec::Remote { .. }) => "remote",
        None => "none",
    }
}

pub fn label(
    ctx: &Loaded,
    regime: Option<RegimeChoice>,
    threshold: Option<f64>,
    input: Option<PathBuf>,
) -> Result<(), CliError> {
    let section = &ctx.config.labeler;
    let regime = regime.unwrap_or(section.regime);
    let path = or_artifact(ctx, input, CORPUS);
    let pairs: Vec<SentencePair> = read_records(&path)?;
    let spec = section.classifier.as_ref();

    let (labeled, failures, params) = match regime {
        RegimeChoice::A => {
            let clf = classifier(spec)?;
            let out = label_regime_a(
                &pairs,
                &section.domains,
                &*clf,
                section.batch_size,
                section.max_in_flight,
            )?;
            let params = json!({"regime": "a", "domains": section.domains, "classifier": kind(spec)});
            (out.labeled, out.failures, params)
        }
        RegimeChoice::B => {
            let mut cfg = section.threshold_config();
            if let Some(t) = threshold {
                cfg.threshold = t;
            }
            cfg.validate()?;
            let clf = classifier(spec)?;
            let out = label_regime_b(&pairs, &cfg, &*clf)?;
            let params = json!({
                "regime": "b",
                "threshold": cfg.threshold,
                "fallback_domain": cfg.fallback_domain,
                "candidate_domains": cfg.candidate_domains,
                "classifier": kind(spec),
            });
            (out.labeled, out.failures, params)
        }
        RegimeChoice::ByCorpus => {
            let map = ctx.corpus_domains()?;
            let labeled = label_by_corpus(&pairs, &map)?;
            (
                labeled,
                Vec::<LabelFailure>::new(),
                json!({"regime": "by-corpus", "corpus_domains": map}),
            )
        }
    };

    let out = ctx.artifact(LABELED);
    write_records(
        &out,
        &provenance(ctx, "label", "labeled", params.clone(), &[&path])?,
        &labeled,
    )?;
    let failures_path = ctx.artifact(LABEL_FAILURES);
    write_records(
        &failures_path,
        &provenance(ctx, "label", "label_failures", params, &[&path])?,
        &failures,
    )?;

    let mut counts: IndexMap<&DomainLabel, usize> = IndexMap::new();
    for lp in &labeled {
        *counts.entry(&lp.domain).or_default() += 1;
    }
    for (d, n) in &counts {
        println!("{d}\t{n}");
    }
    if !failures.is_empty() {
        eprintln!(
            "{} pairs could not be labeled; see {}",
            failures.len(),
            failures_path.display()
        );
    }
    println!("{} labeled -> {}", labeled.len(), out.display());
    Ok(())
}
