use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::{Command, Output, Stdio};

use semiroute_core::records::read_jsonl;
use semiroute_core::{LabeledPair, Regime};
use tempfile::TempDir;

fn toy_dir() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../../data/toy")
}

/// A scratch copy of the toy data, so artifacts land in the temp dir.
fn toy_copy() -> TempDir {
    let dir = tempfile::tempdir().unwrap();
    for entry in fs::read_dir(toy_dir()).unwrap() {
        let entry = entry.unwrap();
        if entry.file_type().unwrap().is_file() {
            fs::copy(entry.path(), dir.path().join(entry.file_name())).unwrap();
        }
    }
    dir
}

fn semiroute(config: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_semiroute"))
        .arg("--config")
        .arg(config)
        .args(args)
        .env_remove("SEMIROUTE_EMBED_URL")
        .env_remove("SEMIROUTE_CLASSIFY_URL")
        .env_remove("SEMIROUTE_PORT")
        .env_remove("SOURCE_DATE_EPOCH")
        .output()
        .unwrap()
}

fn ok(out: Output) -> String {
    assert!(
        out.status.success(),
        "stdout: {}\nstderr: {}",
        String::from_utf8_lossy(&out.stdout),
        String::from_utf8_lossy(&out.stderr)
    );
    String::from_utf8(out.stdout).unwrap()
}

fn labeled(path: &Path) -> Vec<LabeledPair> {
    read_jsonl(path).unwrap().1
}

#[test]
fn stats_on_two_pairs() {
    let dir = tempfile::tempdir().unwrap();
    fs::write(
        dir.path().join("tiny.tsv"),
        "Hello there.\tDia duit.\nGood night.\tOíche mhaith.\n",
    )
    .unwrap();
    let config = dir.path().join("c.json");
    fs::write(
        &config,
        r#"{"sources": [{"name": "tiny", "format": "tsv", "path": "tiny.tsv"}]}"#,
    )
    .unwrap();
    ok(semiroute(&config, &["ingest"]));
    let table = ok(semiroute(&config, &["stats"]));
    assert!(table.contains("| tiny | 2 | 4 | 4 |"), "{table}");
    let json: serde_json::Value =
        serde_json::from_str(&ok(semiroute(&config, &["stats", "--json"]))).unwrap();
    assert_eq!(json[0]["pair_count"], 2);
}

#[test]
fn threshold_labels_follow_keyword_scores() {
    let dir = toy_copy();
    let config = dir.path().join("config.json");
    ok(semiroute(&config, &["ingest"]));
    ok(semiroute(
        &config,
        &["label", "--regime", "b", "--threshold", "0.45"],
    ));
    let out = labeled(&dir.path().join("out/labeled.jsonl"));
    assert_eq!(out.len(), 63);
    let find = |src: &str| out.iter().find(|lp| lp.pair.source_text == src).unwrap();

    let court = find("The court held that the regulation was valid.");
    assert_eq!(court.domain.as_str(), "legal");
    assert_eq!(court.confidence, 1.0);
    assert_eq!(court.regime, Regime::ThresholdFallback);

    let dose = find("Do not exceed the recommended dose.");
    assert_eq!(dose.domain.as_str(), "medical");
    assert_eq!(dose.confidence, 0.5);

    let plain = find("The Commission shall adopt implementing acts.");
    assert_eq!(plain.domain.as_str(), "general");
    assert_eq!(plain.confidence, 1.0);

    ok(semiroute(
        &config,
        &["label", "--regime", "b", "--threshold", "0.5"],
    ));
    let out = labeled(&dir.path().join("out/labeled.jsonl"));
    let dose = out
        .iter()
        .find(|lp| lp.pair.source_text == "Do not exceed the recommended dose.")
        .unwrap();
    assert_eq!(dose.domain.as_str(), "general");
    assert_eq!(dose.confidence, 0.5);
}

#[test]
fn by_corpus_labels_use_source_domains() {
    let dir = toy_copy();
    let config = dir.path().join("config.json");
    ok(semiroute(&config, &["ingest"]));
    ok(semiroute(&config, &["label", "--regime", "by-corpus"]));
    for lp in labeled(&dir.path().join("out/labeled.jsonl")) {
        let expected = match lp.pair.origin.as_str() {
            "dgt" => "legal",
            "ema" => "medical",
            "news" => "wiki_news",
            _ => "general",
        };
        assert_eq!(lp.domain.as_str(), expected);
    }
}

#[test]
fn merged_split_conserves_domain_splits() {
    let dir = toy_copy();
    let config = dir.path().join("config.json");
    let out = dir.path().join("out");
    ok(semiroute(&config, &["ingest"]));
    ok(semiroute(&config, &["label"]));
    ok(semiroute(&config, &["split"]));
    let per_domain: usize = ["general", "legal", "medical", "wiki_news"]
        .iter()
        .map(|d| labeled(&out.join(format!("train.{d}.jsonl"))).len())
        .sum();
    let eval_a = fs::read(out.join("eval.jsonl")).unwrap();

    ok(semiroute(&config, &["split", "--merge-domains"]));
    let merged = labeled(&out.join("train.jsonl"));
    assert_eq!(merged.len(), per_domain);
    let manifest: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(out.join("split.json")).unwrap()).unwrap();
    assert_eq!(manifest["train"], serde_json::json!(["train.jsonl"]));
    let eval_b = labeled(&out.join("eval.jsonl"));
    assert_eq!(labeled_from_bytes(&eval_a).len(), eval_b.len());
}

fn labeled_from_bytes(bytes: &[u8]) -> Vec<LabeledPair> {
    semiroute_core::records::from_jsonl(std::str::from_utf8(bytes).unwrap())
        .unwrap()
        .1
}

#[test]
fn route_reads_stdin() {
    let dir = toy_copy();
    let config = dir.path().join("config.json");
    for step in [
        &["ingest"][..],
        &["label", "--regime", "by-corpus"],
        &["split"],
        &["centroids"],
    ] {
        ok(semiroute(&config, step));
    }
    let mut child = Command::new(env!("CARGO_BIN_EXE_semiroute"))
        .arg("--config")
        .arg(&config)
        .arg("route")
        .env_remove("SEMIROUTE_EMBED_URL")
        .stdin(Stdio::piped())
        .stdout(Stdio::piped())
        .spawn()
        .unwrap();
    child
        .stdin
        .take()
        .unwrap()
        .write_all(b"The patient should take a dose daily.\n\nThe court shall give its ruling.\n")
        .unwrap();
    let stdout = ok(child.wait_with_output().unwrap());
    let lines: Vec<serde_json::Value> = stdout.lines().map(|l| serde_json::from_str(l).unwrap()).collect();
    assert_eq!(lines.len(), 2);
    assert_eq!(lines[0]["chosen"], "medical");
    assert_eq!(lines[1]["chosen"], "legal");
    assert_eq!(lines[0]["similarities"].as_object().unwrap().len(), 4);
}

#[test]
fn evaluate_writes_both_reports() {
    let dir = toy_copy();
    let config = dir.path().join("config.json");
    for step in [&["ingest"][..], &["label"], &["split"]] {
        ok(semiroute(&config, step));
    }
    let adapted = format!("ref={}", dir.path().join("hyp.adapted.json").display());
    let baseline = dir.path().join("hyp.baseline.json");
    let table = ok(semiroute(
        &config,
        &[
            "evaluate",
            "--hypotheses",
            &adapted,
            "--hypotheses",
            baseline.to_str().unwrap(),
        ],
    ));
    assert!(table.starts_with("| Model | general | legal | medical | wiki_news |"));
    assert!(table.contains("| ref |"));
    assert!(table.contains("| hyp.baseline |"));
    let report: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(dir.path().join("out/report.json")).unwrap()).unwrap();
    assert_eq!(report["reports"].as_array().unwrap().len(), 2);
    assert_eq!(report["semiroute"]["seed"], 42);
    let eval_len = labeled(&dir.path().join("out/eval.jsonl")).len();
    let counted: u64 = report["reports"][0]["per_domain"]
        .as_array()
        .unwrap()
        .iter()
        .map(|d| d["pair_count"].as_u64().unwrap())
        .sum();
    assert_eq!(counted as usize, eval_len);
}

#[test]
fn align_blocks_mines_pairs() {
    let dir = toy_copy();
    let config = dir.path().join("config.json");
    let src = dir.path().join("report.en.jsonl");
    let tgt = dir.path().join("report.ga.jsonl");
    ok(semiroute(
        &config,
        &[
            "align-blocks",
            "--source",
            src.to_str().unwrap(),
            "--target",
            tgt.to_str().unwrap(),
        ],
    ));
    let (prov, pairs): (_, Vec<semiroute_core::SentencePair>) =
        read_jsonl(&dir.path().join("out/aligned.jsonl")).unwrap();
    assert_eq!(prov.unwrap().command, "align-blocks");
    assert_eq!(pairs.len(), 7);
    assert!(pairs.iter().all(|p| !p.source_text.starts_with("Page")));
}

#[test]
fn errors_are_one_categorized_line() {
    let dir = tempfile::tempdir().unwrap();
    let out = semiroute(&dir.path().join("missing.json"), &["stats"]);
    assert!(!out.status.success());
    let stderr = String::from_utf8(out.stderr).unwrap();
    assert_eq!(stderr.lines().count(), 1, "{stderr}");
    assert!(stderr.starts_with("error[io]: "), "{stderr}");

    let config = dir.path().join("bad.json");
    fs::write(&config, r#"{"labeler": {"threshold": 2.0}, "sources": []}"#).unwrap();
    fs::create_dir_all(dir.path().join("out")).unwrap();
    fs::write(
        dir.path().join("out/corpus.jsonl"),
        r#"{"source":"a","target":"b","origin":"x","line_no":1}"#,
    )
    .unwrap();
    let out = semiroute(&config, &["label"]);
    assert!(!out.status.success());
    assert!(String::from_utf8(out.stderr)
        .unwrap()
        .starts_with("error[config]: "));
}

#[test]
fn port_override_must_be_numeric() {
    let dir = toy_copy();
    let out = Command::new(env!("CARGO_BIN_EXE_semiroute"))
        .arg("--config")
        .arg(dir.path().join("config.json"))
        .arg("stats")
        .env("SEMIROUTE_PORT", "eighty")
        .output()
        .unwrap();
    assert!(!out.status.success());
    assert!(String::from_utf8(out.stderr)
        .unwrap()
        .starts_with("error[config]: SEMIROUTE_PORT"));
}
