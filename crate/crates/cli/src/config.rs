use std::fs;
use std::path::{Path, PathBuf};

use indexmap::IndexMap;
use semiroute_core::eval::RoutingMode;
use semiroute_core::{default_domains, DomainLabel, LabelerConfig, Smoothing, SplitSpec};
use semiroute_gateway::{ClassifierSpec, EmbedderSpec, GatewayConfig};
use serde::Deserialize;
use sha2::{Digest, Sha256};

use crate::error::CliError;

pub const ENV_EMBED_URL: &str = "SEMIROUTE_EMBED_URL";
pub const ENV_CLASSIFY_URL: &str = "SEMIROUTE_CLASSIFY_URL";
pub const ENV_PORT: &str = "SEMIROUTE_PORT";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "kebab-case")]
pub enum RegimeChoice {
    /// Argmax over all domains.
    A,
    /// Threshold over candidates with a fallback domain.
    B,
    /// Domain taken from the source corpus.
    ByCorpus,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SourceFormat {
    Moses,
    Tsv,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SourceConfig {
    /// Becomes the `origin` of every pair.
    pub name: String,
    pub format: SourceFormat,
    /// Moses: English side.
    pub source: Option<PathBuf>,
    /// Moses: Irish side.
    pub target: Option<PathBuf>,
    /// TSV file.
    pub path: Option<PathBuf>,
    /// Corpus-level domain, used by the by-corpus regime.
    pub domain: Option<DomainLabel>,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct LabelerSection {
    pub regime: RegimeChoice,
    pub threshold: f64,
    pub fallback_domain: DomainLabel,
    /// All domains, in tie-breaking order.
    pub domains: Vec<DomainLabel>,
    /// Threshold regime candidates; defaults to `domains` minus the fallback.
    pub candidate_domains: Option<Vec<DomainLabel>>,
    pub batch_size: usize,
    pub max_in_flight: usize,
    pub classifier: Option<ClassifierSpec>,
}

impl Default for LabelerSection {
    fn default() -> Self {
        let base = LabelerConfig::default();
        Self {
            regime: RegimeChoice::B,
            threshold: base.threshold,
            fallback_domain: base.fallback_domain,
            domains: default_domains(),
            candidate_domains: None,
            batch_size: base.batch_size,
            max_in_flight: base.max_in_flight,
            classifier: None,
        }
    }
}

impl LabelerSection {
    pub fn threshold_config(&self) -> LabelerConfig {
        let candidate_domains = self.candidate_domains.clone().unwrap_or_else(|| {
            self.domains
                .iter()
                .filter(|d| **d != self.fallback_domain)
                .cloned()
                .collect()
        });
        LabelerConfig {
            threshold: self.threshold,
            fallback_domain: self.fallback_domain.clone(),
            candidate_domains,
            batch_size: self.batch_size,
            max_in_flight: self.max_in_flight,
        }
    }
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SplitSection {
    #[serde(default = "default_train_fraction")]
    pub train_fraction: f64,
    /// Defaults to the top-level seed.
    pub seed: Option<u64>,
}

fn default_train_fraction() -> f64 {
    SplitSpec::default().train_fraction
}

impl Default for SplitSection {
    fn default() -> Self {
        Self {
            train_fraction: default_train_fraction(),
            seed: None,
        }
    }
}

#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct EvalSection {
    pub routing_mode: Option<RoutingMode>,
    pub smoothing: Smoothing,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct BlockAlignSection {
    pub tau: f64,
    /// Regexes matched against whole block texts; matching blocks are dropped.
    pub ignore_patterns: Vec<String>,
    pub source_lang: String,
    pub target_lang: String,
}

impl Default for BlockAlignSection {
    fn default() -> Self {
        Self {
            tau: semiroute_core::blockalign::DEFAULT_TAU,
            ignore_patterns: Vec::new(),
            source_lang: "en".into(),
            target_lang: "ga".into(),
        }
    }
}

fn default_seed() -> u64 {
    SplitSpec::DEFAULT_SEED
}

fn default_work_dir() -> PathBuf {
    PathBuf::from("out")
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PipelineConfig {
    #[serde(default = "default_seed")]
    pub seed: u64,
    /// Where artifacts go, relative to the config file.
    #[serde(default = "default_work_dir")]
    pub work_dir: PathBuf,
    #[serde(default)]
    pub sources: Vec<SourceConfig>,
    #[serde(default)]
    pub labeler: LabelerSection,
    #[serde(default)]
    pub split: SplitSection,
    #[serde(default)]
    pub embedder: EmbedderSpec,
    #[serde(default)]
    pub embed_batch_size: Option<usize>,
    /// Defaults to `index.bin` in the work directory.
    pub index_path: Option<PathBuf>,
    #[serde(default)]
    pub gateway: GatewayConfig,
    #[serde(default)]
    pub eval: EvalSection,
    #[serde(default)]
    pub blockalign: BlockAlignSection,
}

/// A loaded config with its identity and paths resolved.
#[derive(Debug, Clone)]
pub struct Loaded {
    pub config: PipelineConfig,
    /// First 16 hex digits of the SHA-256 of the config file.
    pub config_id: String,
    pub work_dir: PathBuf,
    pub index_path: PathBuf,
}

fn resolve(base: &Path, p: &Path) -> PathBuf {
    if p.is_absolute() {
        p.to_path_buf()
    } else {
        base.join(p)
    }
}

pub fn config_id(bytes: &[u8]) -> String {
    hex::encode(Sha256::digest(bytes))[..16].to_string()
}

impl Loaded {
    pub fn from_path(path: &Path, work_dir_override: Option<&Path>) -> Result<Self, CliError> {
        let bytes = fs::read(path).map_err(|e| CliError::io(path, e))?;
        let mut config: PipelineConfig = serde_json::from_slice(&bytes)
            .map_err(|e| CliError::new("config", format!("{}: {e}", path.display())))?;
        let base = path.parent().unwrap_or(Path::new("."));
        for s in &mut config.sources {
            for p in [&mut s.source, &mut s.target, &mut s.path].into_iter().flatten() {
                *p = resolve(base, p);
            }
        }
        apply_env(&mut config)?;
        let work_dir = match work_dir_override {
            Some(w) => w.to_path_buf(),
            None => resolve(base, &config.work_dir),
        };
        let index_path = match &config.index_path {
            Some(p) => resolve(base, p),
            None => work_dir.join("index.bin"),
        };
        Ok(Self {
            config,
            config_id: config_id(&bytes),
            work_dir,
            index_path,
        })
    }

    pub fn split_spec(&self) -> Result<SplitSpec, CliError> {
        let s = &self.config.split;
        Ok(SplitSpec::new(
            s.train_fraction,
            s.seed.unwrap_or(self.config.seed),
        )?)
    }

    pub fn corpus_domains(&self) -> Result<IndexMap<String, DomainLabel>, CliError> {
        self.config
            .sources
            .iter()
            .map(|s| {
                s.domain
                    .clone()
                    .map(|d| (s.name.clone(), d))
                    .ok_or_else(|| CliError::new("config", format!("source `{}` has no domain", s.name)))
            })
            .collect()
    }

    pub fn artifact(&self, name: &str) -> PathBuf {
        self.work_dir.join(name)
    }
}

fn apply_env(config: &mut PipelineConfig) -> Result<(), CliError> {
    if let Some(url) = env_var(ENV_EMBED_URL) {
        config.embedder = EmbedderSpec::Remote {
            url,
            timeout_ms: 30_000,
        };
    }
    if let Some(url) = env_var(ENV_CLASSIFY_URL) {
        config.labeler.classifier = Some(ClassifierSpec::Remote {
            url,
            timeout_ms: 30_000,
        });
    }
    if let Some(port) = env_var(ENV_PORT) {
        config.gateway.port = port
            .parse()
            .map_err(|_| CliError::new("config", format!("{ENV_PORT}={port:?} is not a port number")))?;
    }
    Ok(())
}

fn env_var(name: &str) -> Option<String> {
    std::env::var(name).ok().filter(|v| !v.trim().is_empty())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn minimal_config_gets_defaults() {
        let c: PipelineConfig = serde_json::from_str("{}").unwrap();
        assert_eq!(c.seed, 42);
        assert_eq!(c.labeler.regime, RegimeChoice::B);
        assert_eq!(c.labeler.threshold, 0.45);
        let t = c.labeler.threshold_config();
        assert_eq!(
            t.candidate_domains,
            semiroute_core::domain::domains(["legal", "medical", "wiki_news"])
        );
        t.validate().unwrap();
    }

    #[test]
    fn unknown_fields_are_rejected() {
        assert!(serde_json::from_str::<PipelineConfig>(r#"{"sede": 1}"#).is_err());
        assert!(serde_json::from_str::<PipelineConfig>(r#"{"labeler": {"treshold": 0.5}}"#).is_err());
    }

    #[test]
    fn config_id_is_stable() {
        assert_eq!(config_id(b"{}"), config_id(b"{}"));
        assert_ne!(config_id(b"{}"), config_id(b"{ }"));
        assert_eq!(config_id(b"{}").len(), 16);
    }

    #[test]
    fn regime_names() {
        let r: RegimeChoice = serde_json::from_str("\"by-corpus\"").unwrap();
        assert_eq!(r, RegimeChoice::ByCorpus);
    }
}
