use std::collections::HashMap;
use std::fs;
use std::path::{Path, PathBuf};

use semiroute_core::corpus::normalize;
use semiroute_core::eval::{render_report, stratified_eval, Grouping, ReportFormat, RoutingMode};
use semiroute_core::records::Provenance;
use semiroute_core::{EvalReport, LabeledPair, Smoothing};
use semiroute_gateway::build_embedder;
use serde::Serialize;
use serde_json::json;

use super::index::open_index;
use super::{domain_order, or_artifact, EVAL};
use crate::artifacts::{provenance, read_records, write_json, write_text};
use crate::config::Loaded;
use crate::error::CliError;

const REPORT_JSON: &str = "report.json";
const REPORT_MD: &str = "report.md";

#[derive(Debug, Clone, Copy, PartialEq, Eq, clap::ValueEnum)]
pub enum ModeArg {
    /// Group by the label stored on each eval pair.
    Classifier,
    /// Group by routing each source sentence through the index.
    Centroid,
    /// Group by the configured domain of each source corpus.
    ByCorpus,
}

impl From<ModeArg> for RoutingMode {
    fn from(m: ModeArg) -> Self {
        match m {
            ModeArg::Classifier => RoutingMode::ClassifierLabeled,
            ModeArg::Centroid => RoutingMode::CentroidRouted,
            ModeArg::ByCorpus => RoutingMode::ByCorpus,
        }
    }
}

/// Splits `NAME=PATH`; a bare path is named after its file stem.
pub fn parse_hypothesis_arg(arg: &str) -> (String, PathBuf) {
    match arg.split_once('=') {
        Some((name, path)) if !name.is_empty() => (name.to_string(), PathBuf::from(path)),
        _ => {
            let path = PathBuf::from(arg);
            let name = path
                .file_stem()
                .map(|s| s.to_string_lossy().into_owned())
                .unwrap_or_else(|| arg.to_string());
            (name, path)
        }
    }
}

/// One hypothesis slot per eval pair.
pub fn load_hypotheses(path: &Path, eval: &[LabeledPair]) -> Result<Vec<Option<String>>, CliError> {
    let text = fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
    if path.extension().is_some_and(|e| e == "json") {
        let map: HashMap<String, String> = serde_json::from_str(&text)
            .map_err(|e| CliError::new("parse", format!("{}: {e}", path.display())))?;
        let map: HashMap<String, String> = map.into_iter().map(|(k, v)| (normalize(&k), v)).collect();
        return Ok(eval
            .iter()
            .map(|p| map.get(&p.pair.source_text).cloned())
            .collect());
    }
    let lines: Vec<&str> = text.lines().collect();
    if lines.len() != eval.len() {
        return Err(CliError::new(
            "validation",
            format!(
                "{} has {} lines but the eval set has {} pairs",
                path.display(),
                lines.len(),
                eval.len()
            ),
        ));
    }
    Ok(lines
        .into_iter()
        .map(|l| (!l.trim().is_empty()).then(|| l.to_string()))
        .collect())
}

#[derive(Serialize)]
struct ReportFile<'a> {
    semiroute: &'a Provenance,
    reports: &'a [EvalReport],
}

pub fn evaluate(
    ctx: &Loaded,
    hypotheses: &[String],
    eval: Option<PathBuf>,
    mode: Option<ModeArg>,
    add_one: bool,
    index: Option<PathBuf>,
) -> Result<(), CliError> {
    let eval_path = or_artifact(ctx, eval, EVAL);
    let pairs: Vec<LabeledPair> = read_records(&eval_path)?;
    let mode: RoutingMode = mode
        .map(RoutingMode::from)
        .or(ctx.config.eval.routing_mode)
        .unwrap_or(RoutingMode::ClassifierLabeled);
    let smoothing = if add_one {
        Smoothing::AddOne
    } else {
        ctx.config.eval.smoothing
    };
    let order = domain_order(&ctx.config.labeler.domains, pairs.iter().map(|p| &p.domain));

    let mut inputs: Vec<PathBuf> = vec![eval_path.clone()];
    let corpus_map;
    let loaded_index;
    let embedder;
    let grouping = match mode {
        RoutingMode::ClassifierLabeled => Grouping::ClassifierLabels,
        RoutingMode::ByCorpus => {
            corpus_map = ctx.corpus_domains()?;
            Grouping::ByCorpus(&corpus_map)
        }
        RoutingMode::CentroidRouted => {
            let (idx, path) = open_index(ctx, index)?;
            inputs.push(path);
            loaded_index = idx;
            embedder = build_embedder(&ctx.config.embedder)?;
            Grouping::CentroidRouted {
                index: &loaded_index,
                embedder: &*embedder,
            }
        }
    };

    let mut reports = Vec::new();
    for arg in hypotheses {
        let (name, path) = parse_hypothesis_arg(arg);
        let hyps = load_hypotheses(&path, &pairs)?;
        let mut report = stratified_eval(&pairs, &hyps, &grouping, &order, &ctx.config_id, smoothing)?;
        report.label = Some(name);
        reports.push(report);
        inputs.push(path);
    }

    let input_refs: Vec<&Path> = inputs.iter().map(PathBuf::as_path).collect();
    let prov = provenance(
        ctx,
        "evaluate",
        "report",
        json!({"routing_mode": mode, "smoothing": smoothing}),
        &input_refs,
    )?;
    write_json(
        &ctx.artifact(REPORT_JSON),
        &ReportFile {
            semiroute: &prov,
            reports: &reports,
        },
    )?;
    let mut md = render_report(&reports, ReportFormat::MarkdownTable);
    md.push_str(&format!(
        "\nconfig_id {}, seed {}\n",
        ctx.config_id, ctx.config.seed
    ));
    write_text(&ctx.artifact(REPORT_MD), &md)?;
    print!("{md}");
    Ok(())
}
