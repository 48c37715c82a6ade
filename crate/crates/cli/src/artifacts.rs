use std::fs;
use std::path::Path;

use semiroute_core::records::{read_jsonl, write_jsonl, InputDigest, Provenance};
use serde::de::DeserializeOwned;
use serde::Serialize;
use serde_json::{Map, Value};
use sha2::{Digest, Sha256};

use crate::config::Loaded;
use crate::error::CliError;

pub fn digest(path: &Path) -> Result<InputDigest, CliError> {
    let bytes = fs::read(path).map_err(|e| CliError::io(path, e))?;
    Ok(InputDigest {
        name: path
            .file_name()
            .map(|n| n.to_string_lossy().into_owned())
            .unwrap_or_default(),
        sha256: hex::encode(Sha256::digest(&bytes)),
    })
}

pub fn provenance(
    ctx: &Loaded,
    command: &str,
    artifact: &str,
    params: Value,
    inputs: &[&Path],
) -> Result<Provenance, CliError> {
    let params = match params {
        Value::Object(m) => m,
        Value::Null => Map::new(),
        other => {
            let mut m = Map::new();
            m.insert("value".into(), other);
            m
        }
    };
    Ok(Provenance {
        artifact: artifact.into(),
        command: command.into(),
        config_id: ctx.config_id.clone(),
        seed: ctx.config.seed,
        params,
        inputs: inputs.iter().map(|p| digest(p)).collect::<Result<_, _>>()?,
    })
}

pub fn ensure_parent(path: &Path) -> Result<(), CliError> {
    match path.parent() {
        Some(dir) if !dir.as_os_str().is_empty() => fs::create_dir_all(dir).map_err(|e| CliError::io(dir, e)),
        _ => Ok(()),
    }
}

pub fn write_records<T: Serialize>(path: &Path, prov: &Provenance, records: &[T]) -> Result<(), CliError> {
    ensure_parent(path)?;
    write_jsonl(path, Some(prov), records)?;
    log::info!("wrote {} records to {}", records.len(), path.display());
    Ok(())
}

pub fn read_records<T: DeserializeOwned>(path: &Path) -> Result<Vec<T>, CliError> {
    if !path.exists() {
        return Err(CliError::new(
            "io",
            format!(
                "{} does not exist; run the producing subcommand first",
                path.display()
            ),
        ));
    }
    Ok(read_jsonl(path)?.1)
}

/// Pretty JSON with a trailing newline.
pub fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<(), CliError> {
    ensure_parent(path)?;
    let mut s = serde_json::to_string_pretty(value).expect("value serializes");
    s.push('\n');
    fs::write(path, s).map_err(|e| CliError::io(path, e))
}

pub fn write_text(path: &Path, text: &str) -> Result<(), CliError> {
    ensure_parent(path)?;
    fs::write(path, text).map_err(|e| CliError::io(path, e))
}
