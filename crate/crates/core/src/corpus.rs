//! Parallel corpus ingestion and preparation.
//!
//! Everything here is a pure function over owned or borrowed data. Texts are
//! normalized on the way in (NFC plus whitespace collapsing), so downstream
//! stages can compare strings byte-for-byte.

use std::collections::HashSet;
use std::fs;
use std::path::Path;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use unicode_normalization::UnicodeNormalization;

use crate::error::{Error, Result};

/// Name of the normalization applied by [`normalize`], recorded in artifact metadata.
pub const NORMALIZATION: &str = "nfc+collapse-whitespace";

/// Canonical composition followed by whitespace collapsing and trimming.
pub fn normalize(text: &str) -> String {
    let composed: String = text.nfc().collect();
    let mut out = String::with_capacity(composed.len());
    for word in composed.split_whitespace() {
        if !out.is_empty() {
            out.push(' ');
        }
        out.push_str(word);
    }
    out
}

/// One aligned sentence pair. Serialized as `{source, target, origin, line_no}`.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct SentencePair {
    #[serde(rename = "source")]
    pub source_text: String,
    #[serde(rename = "target")]
    pub target_text: String,
    pub origin: String,
    pub line_no: usize,
}

impl SentencePair {
    /// Builds a pair from raw text, normalizing both sides.
    ///
    /// Returns `None` when either side is empty after normalization.
    pub fn new(source: &str, target: &str, origin: &str, line_no: usize) -> Option<Self> {
        let source_text = normalize(source);
        let target_text = normalize(target);
        if source_text.is_empty() || target_text.is_empty() || origin.is_empty() {
            return None;
        }
        Some(Self {
            source_text,
            target_text,
            origin: origin.to_string(),
            line_no,
        })
    }
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct Corpus {
    pub name: String,
    pub pairs: Vec<SentencePair>,
}

impl Corpus {
    pub fn new(name: impl Into<String>, pairs: Vec<SentencePair>) -> Self {
        Self {
            name: name.into(),
            pairs,
        }
    }

    pub fn len(&self) -> usize {
        self.pairs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.pairs.is_empty()
    }
}

/// Result of reading a corpus file: the corpus plus how many records were dropped.
#[derive(Debug, Clone, PartialEq)]
pub struct Ingested {
    pub corpus: Corpus,
    /// Blank records, or records with an empty side after normalization.
    pub skipped: usize,
}

fn read_text(path: &Path) -> Result<String> {
    fs::read_to_string(path).map_err(|e| Error::io(path, e))
}

/// Reads a Moses-style pair of line-aligned files.
pub fn ingest_moses(source_path: &Path, target_path: &Path, origin: &str) -> Result<Ingested> {
    let source = read_text(source_path)?;
    let target = read_text(target_path)?;
    parse_moses(&source, &target, origin)
}

/// In-memory variant of [`ingest_moses`].
pub fn parse_moses(source: &str, target: &str, origin: &str) -> Result<Ingested> {
    if origin.is_empty() {
        return Err(Error::Config("corpus origin must not be empty".into()));
    }
    let src_lines: Vec<&str> = source.lines().collect();
    let tgt_lines: Vec<&str> = target.lines().collect();
    if src_lines.len() != tgt_lines.len() {
        return Err(Error::Alignment {
            source_lines: src_lines.len(),
            target_lines: tgt_lines.len(),
        });
    }
    let mut pairs = Vec::with_capacity(src_lines.len());
    let mut skipped = 0;
    for (i, (s, t)) in src_lines.iter().zip(&tgt_lines).enumerate() {
        match SentencePair::new(s, t, origin, i + 1) {
            Some(pair) => pairs.push(pair),
            None => skipped += 1,
        }
    }
    Ok(Ingested {
        corpus: Corpus::new(origin, pairs),
        skipped,
    })
}

/// Reads a tab-separated file; the first two fields are source and target.
pub fn ingest_tsv(path: &Path, origin: &str) -> Result<Ingested> {
    parse_tsv(&read_text(path)?, origin)
}

/// In-memory variant of [`ingest_tsv`].
pub fn parse_tsv(text: &str, origin: &str) -> Result<Ingested> {
    if origin.is_empty() {
        return Err(Error::Config("corpus origin must not be empty".into()));
    }
    let mut pairs = Vec::new();
    let mut skipped = 0;
    for (i, line) in text.lines().enumerate() {
        let line_no = i + 1;
        if line.trim().is_empty() {
            skipped += 1;
            continue;
        }
        let mut fields = line.split('\t');
        let (Some(source), Some(target)) = (fields.next(), fields.next()) else {
            return Err(Error::Parse {
                line: line_no,
                message: "expected at least two tab-separated fields".into(),
            });
        };
        match SentencePair::new(source, target, origin, line_no) {
            Some(pair) => pairs.push(pair),
            None => skipped += 1,
        }
    }
    Ok(Ingested {
        corpus: Corpus::new(origin, pairs),
        skipped,
    })
}

/// Drops repeated (source, target) pairs, keeping the first occurrence.
pub fn deduplicate(corpus: &Corpus) -> Corpus {
    let mut seen: HashSet<(String, String)> = HashSet::with_capacity(corpus.len());
    let pairs = corpus
        .pairs
        .iter()
        .filter(|p| seen.insert((normalize(&p.source_text), normalize(&p.target_text))))
        .cloned()
        .collect();
    Corpus::new(corpus.name.clone(), pairs)
}

fn is_opening_quote(c: char) -> bool {
    matches!(c, '"' | '\'' | '“' | '‘' | '«' | '„' | '‚' | '‹')
}

/// Splits normalized text at `.`, `!` or `?` followed by whitespace and then an
/// uppercase letter or an opening quote.
pub fn segment_sentences(text: &str) -> Vec<&str> {
    let mut segments = Vec::new();
    let mut start = 0;
    let mut chars = text.char_indices().peekable();
    while let Some((i, c)) = chars.next() {
        if !matches!(c, '.' | '!' | '?') {
            continue;
        }
        let end = i + c.len_utf8();
        let rest = &text[end..];
        let trimmed = rest.trim_start();
        if trimmed.len() == rest.len() {
            continue;
        }
        let Some(next) = trimmed.chars().next() else {
            continue;
        };
        if next.is_uppercase() || is_opening_quote(next) {
            let segment = text[start..end].trim();
            if !segment.is_empty() {
                segments.push(segment);
            }
            start = text.len() - trimmed.len();
            while chars.peek().is_some_and(|&(j, _)| j < start) {
                chars.next();
            }
        }
    }
    let tail = text[start..].trim();
    if !tail.is_empty() {
        segments.push(tail);
    }
    segments
}

/// Splits a row holding several sentences into one pair per sentence when both
/// sides segment into the same number of sentences; otherwise keeps it whole.
pub fn split_multi_sentence(pair: &SentencePair) -> Vec<SentencePair> {
    let src = segment_sentences(&pair.source_text);
    let tgt = segment_sentences(&pair.target_text);
    if src.len() != tgt.len() || src.len() <= 1 {
        return vec![pair.clone()];
    }
    src.into_iter()
        .zip(tgt)
        .map(|(s, t)| SentencePair {
            source_text: s.to_string(),
            target_text: t.to_string(),
            origin: pair.origin.clone(),
            line_no: pair.line_no,
        })
        .collect()
}

/// Applies [`split_multi_sentence`] to every pair, preserving order.
pub fn split_lines(corpus: &Corpus) -> Corpus {
    Corpus::new(
        corpus.name.clone(),
        corpus.pairs.iter().flat_map(split_multi_sentence).collect(),
    )
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CorpusStats {
    pub pair_count: usize,
    pub en_tokens: usize,
    pub ga_tokens: usize,
    /// Absent for an empty corpus.
    pub mean_en_tokens_per_sentence: Option<f64>,
    pub mean_ga_tokens_per_sentence: Option<f64>,
    /// `ga_tokens / en_tokens`, absent when there are no English tokens.
    pub length_ratio: Option<f64>,
}

pub fn corpus_stats(corpus: &Corpus) -> CorpusStats {
    let count = |s: &str| normalize(s).split_whitespace().count();
    let (en_tokens, ga_tokens) = corpus.pairs.iter().fold((0, 0), |(en, ga), p| {
        (en + count(&p.source_text), ga + count(&p.target_text))
    });
    let n = corpus.len();
    let mean = |total: usize| (n > 0).then(|| total as f64 / n as f64);
    CorpusStats {
        pair_count: n,
        en_tokens,
        ga_tokens,
        mean_en_tokens_per_sentence: mean(en_tokens),
        mean_ga_tokens_per_sentence: mean(ga_tokens),
        length_ratio: (en_tokens > 0).then(|| ga_tokens as f64 / en_tokens as f64),
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SplitSpec {
    pub train_fraction: f64,
    pub seed: u64,
}

impl SplitSpec {
    pub const DEFAULT_SEED: u64 = 42;

    pub fn new(train_fraction: f64, seed: u64) -> Result<Self> {
        let spec = Self { train_fraction, seed };
        spec.validate()?;
        Ok(spec)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.train_fraction > 0.0 && self.train_fraction < 1.0) {
            return Err(Error::Config(format!(
                "train fraction must lie strictly between 0 and 1, got {}",
                self.train_fraction
            )));
        }
        Ok(())
    }

    /// Number of training items for a corpus of `n` pairs.
    pub fn train_len(&self, n: usize) -> usize {
        ((self.train_fraction * n as f64).round() as usize).min(n)
    }
}

impl Default for SplitSpec {
    fn default() -> Self {
        Self {
            train_fraction: 0.9,
            seed: Self::DEFAULT_SEED,
        }
    }
}

/// Seeded permutation of `0..n`.
pub fn seeded_permutation(n: usize, seed: u64) -> Vec<usize> {
    let mut order: Vec<usize> = (0..n).collect();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    order.shuffle(&mut rng);
    order
}

/// Shuffles with the spec's seed, then cuts at `round(train_fraction * n)`.
pub fn train_eval_split(corpus: &Corpus, spec: &SplitSpec) -> Result<(Corpus, Corpus)> {
    spec.validate()?;
    if corpus.is_empty() {
        return Err(Error::Validation("cannot split an empty corpus".into()));
    }
    let order = seeded_permutation(corpus.len(), spec.seed);
    let cut = spec.train_len(corpus.len());
    if cut == corpus.len() || cut == 0 {
        log::warn!(
            "split of `{}` ({} pairs at fraction {}) leaves one side empty",
            corpus.name,
            corpus.len(),
            spec.train_fraction
        );
    }
    let pick = |idx: &[usize]| idx.iter().map(|&i| corpus.pairs[i].clone()).collect();
    Ok((
        Corpus::new(format!("{}.train", corpus.name), pick(&order[..cut])),
        Corpus::new(format!("{}.eval", corpus.name), pick(&order[cut..])),
    ))
}
