//! Line-delimited JSON artifacts.
//!
//! Every artifact file starts with one header line of the form
//! `{"semiroute": {...provenance...}}`; every following non-blank line is one
//! record. Readers skip the header, so plain record files without one are
//! accepted too.

use std::fs;
use std::io::{BufWriter, Write};
use std::path::Path;

use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Fingerprint of one input file.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct InputDigest {
    /// File name without directories, so artifacts do not depend on where
    /// the pipeline ran.
    pub name: String,
    pub sha256: String,
}

/// Provenance recorded at the top of each artifact.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Provenance {
    pub artifact: String,
    pub command: String,
    pub config_id: String,
    pub seed: u64,
    #[serde(default)]
    pub params: serde_json::Map<String, serde_json::Value>,
    #[serde(default)]
    pub inputs: Vec<InputDigest>,
}

#[derive(Serialize, Deserialize)]
struct HeaderLine {
    semiroute: Provenance,
}

/// Serializes `records` as JSONL, preceded by the provenance header if given.
pub fn to_jsonl<T: Serialize>(provenance: Option<&Provenance>, records: &[T]) -> String {
    let mut out = String::new();
    if let Some(p) = provenance {
        out.push_str(
            &serde_json::to_string(&HeaderLine { semiroute: p.clone() }).expect("header serializes"),
        );
        out.push('\n');
    }
    for r in records {
        out.push_str(&serde_json::to_string(r).expect("record serializes"));
        out.push('\n');
    }
    out
}

pub fn write_jsonl<T: Serialize>(path: &Path, provenance: Option<&Provenance>, records: &[T]) -> Result<()> {
    let file = fs::File::create(path).map_err(|e| Error::io(path, e))?;
    let mut w = BufWriter::new(file);
    w.write_all(to_jsonl(provenance, records).as_bytes())
        .and_then(|_| w.flush())
        .map_err(|e| Error::io(path, e))
}

/// Parses JSONL records, returning the header if present.
pub fn from_jsonl<T: DeserializeOwned>(text: &str) -> Result<(Option<Provenance>, Vec<T>)> {
    let mut header = None;
    let mut records = Vec::new();
    for (i, line) in text.lines().enumerate() {
        if line.trim().is_empty() {
            continue;
        }
        if i == 0 && line.trim_start().starts_with("{\"semiroute\"") {
            let h: HeaderLine = serde_json::from_str(line).map_err(|e| Error::Parse {
                line: 1,
                message: format!("bad artifact header: {e}"),
            })?;
            header = Some(h.semiroute);
            continue;
        }
        records.push(serde_json::from_str(line).map_err(|e| Error::Parse {
            line: i + 1,
            message: e.to_string(),
        })?);
    }
    Ok((header, records))
}

pub fn read_jsonl<T: DeserializeOwned>(path: &Path) -> Result<(Option<Provenance>, Vec<T>)> {
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    from_jsonl(&text).map_err(|e| match e {
        Error::Parse { line, message } => Error::Parse {
            line,
            message: format!("{}: {message}", path.display()),
        },
        other => other,
    })
}
