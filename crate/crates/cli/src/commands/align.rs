use std::path::{Path, PathBuf};

use semiroute_core::blockalign::{
    filter_blocks, load_block_records, match_blocks, matches_to_pairs, normalize_blocks, BlockRef,
    FilterReport,
};
use serde::Serialize;
use serde_json::json;

use crate::artifacts::{provenance, write_json, write_records};
use crate::config::Loaded;
use crate::error::CliError;

const ALIGNED: &str = "aligned.jsonl";
const ALIGN_REPORT: &str = "align_report.json";

#[derive(Serialize)]
struct SideReport {
    blocks: usize,
    dropped_empty: usize,
    filtered: FilterReport,
    unmatched: Vec<BlockRef>,
    excess_pages: usize,
}

#[derive(Serialize)]
struct AlignReport {
    tau: f64,
    matches: usize,
    pairs: usize,
    mean_distance: Option<f64>,
    source: SideReport,
    target: SideReport,
}

pub fn align_blocks(
    ctx: &Loaded,
    source: &Path,
    target: &Path,
    origin: &str,
    tau: Option<f64>,
    output: Option<PathBuf>,
) -> Result<(), CliError> {
    let section = &ctx.config.blockalign;
    let tau = tau.unwrap_or(section.tau);
    let (src, src_dropped) = load_block_records(source, &section.source_lang)?;
    let (tgt, tgt_dropped) = load_block_records(target, &section.target_lang)?;
    let (src, src_filter) = filter_blocks(&normalize_blocks(&src)?, &section.ignore_patterns)?;
    let (tgt, tgt_filter) = filter_blocks(&normalize_blocks(&tgt)?, &section.ignore_patterns)?;
    let report = match_blocks(&src, &tgt, tau)?;
    let pairs = matches_to_pairs(&report.matches, origin);

    let out = output.unwrap_or_else(|| ctx.artifact(ALIGNED));
    let params = json!({
        "tau": tau,
        "origin": origin,
        "ignore_patterns": section.ignore_patterns,
    });
    let prov = provenance(ctx, "align-blocks", "aligned", params, &[source, target])?;
    write_records(&out, &prov, &pairs)?;

    let n = report.matches.len();
    let summary = AlignReport {
        tau,
        matches: n,
        pairs: pairs.len(),
        mean_distance: (n > 0).then(|| report.matches.iter().map(|m| m.distance).sum::<f64>() / n as f64),
        source: SideReport {
            blocks: src.block_count(),
            dropped_empty: src_dropped,
            filtered: src_filter,
            unmatched: report.unmatched_source,
            excess_pages: report.excess_source_pages,
        },
        target: SideReport {
            blocks: tgt.block_count(),
            dropped_empty: tgt_dropped,
            filtered: tgt_filter,
            unmatched: report.unmatched_target,
            excess_pages: report.excess_target_pages,
        },
    };
    let report_path = out.with_file_name(ALIGN_REPORT);
    write_json(&report_path, &summary)?;
    println!(
        "{} matches, {} pairs -> {} (report {})",
        n,
        pairs.len(),
        out.display(),
        report_path.display()
    );
    Ok(())
}
