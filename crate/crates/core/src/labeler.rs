//! Training-time domain labeling.
//!
//! Two sentence-level regimes are supported, both driven by a zero-shot
//! [`ClassifierClient`] reading the English side only:
//!
//! * **four-domain**: every domain is a candidate and the argmax wins.
//! * **threshold fallback**: the fallback domain is withheld from the
//!   classifier; a pair is assigned the best candidate only when that score
//!   strictly exceeds the threshold, otherwise it falls back.
//!
//! A third, corpus-level regime maps each corpus origin to a fixed domain.

use indexmap::IndexMap;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::corpus::{Corpus, SentencePair};
use crate::domain::{DomainLabel, GENERAL};
use crate::error::{Error, Result};

/// Per-label confidences, keyed in candidate order.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Classification {
    pub scores: IndexMap<DomainLabel, f64>,
}

impl Classification {
    /// Pairs `labels` with `scores`, checking arity and the `[0, 1]` range.
    pub fn from_scores(labels: &[DomainLabel], scores: &[f64]) -> Result<Self> {
        if labels.len() != scores.len() {
            return Err(Error::Classifier(format!(
                "expected {} scores, got {}",
                labels.len(),
                scores.len()
            )));
        }
        if let Some(bad) = scores.iter().find(|s| !(0.0..=1.0).contains(*s)) {
            return Err(Error::Classifier(format!("score {bad} outside [0, 1]")));
        }
        Ok(Self {
            scores: labels.iter().cloned().zip(scores.iter().copied()).collect(),
        })
    }

    /// Highest-scoring label; ties go to the earliest key.
    pub fn argmax(&self) -> Option<(&DomainLabel, f64)> {
        let mut best: Option<(&DomainLabel, f64)> = None;
        for (label, &score) in &self.scores {
            if best.is_none_or(|(_, b)| score > b) {
                best = Some((label, score));
            }
        }
        best
    }

    pub fn score(&self, label: &DomainLabel) -> Option<f64> {
        self.scores.get(label).copied()
    }
}

/// A zero-shot text classifier. Implementations must tolerate concurrent calls.
pub trait ClassifierClient: Send + Sync {
    /// Scores each text against every label; one [`Classification`] per text.
    fn classify_batch(
        &self,
        texts: &[&str],
        labels: &[DomainLabel],
        multi_label: bool,
    ) -> Result<Vec<Classification>>;

    fn classify(&self, text: &str, labels: &[DomainLabel], multi_label: bool) -> Result<Classification> {
        let mut out = self.classify_batch(&[text], labels, multi_label)?;
        out.pop()
            .ok_or_else(|| Error::Classifier("classifier returned no rows".into()))
    }
}

/// Keyword-count classifier: a label scores the fraction of its keywords found
/// in the lowercased text. Labels without keywords score zero.
#[derive(Debug, Clone, Default, Serialize, Deserialize)]
pub struct MockClassifier {
    pub keywords: IndexMap<DomainLabel, Vec<String>>,
}

impl MockClassifier {
    pub fn new(keywords: IndexMap<DomainLabel, Vec<String>>) -> Self {
        Self { keywords }
    }

    fn score(&self, padded: &str, label: &DomainLabel) -> f64 {
        let Some(words) = self.keywords.get(label).filter(|w| !w.is_empty()) else {
            return 0.0;
        };
        let hits = words
            .iter()
            .filter(|w| padded.contains(&format!(" {} ", w.to_lowercase())))
            .count();
        hits as f64 / words.len() as f64
    }
}

impl ClassifierClient for MockClassifier {
    fn classify_batch(
        &self,
        texts: &[&str],
        labels: &[DomainLabel],
        _multi_label: bool,
    ) -> Result<Vec<Classification>> {
        if labels.is_empty() {
            return Err(Error::Classifier("empty label set".into()));
        }
        Ok(texts
            .iter()
            .map(|text| {
                let tokens: Vec<String> = text
                    .split_whitespace()
                    .map(|t| t.trim_matches(|c: char| !c.is_alphanumeric()).to_lowercase())
                    .filter(|t| !t.is_empty())
                    .collect();
                let padded = format!(" {} ", tokens.join(" "));
                Classification {
                    scores: labels
                        .iter()
                        .map(|l| (l.clone(), self.score(&padded, l)))
                        .collect(),
                }
            })
            .collect())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Regime {
    FourDomain,
    ThresholdFallback,
    ByCorpus,
}

impl Regime {
    pub fn as_str(self) -> &'static str {
        match self {
            Regime::FourDomain => "four_domain",
            Regime::ThresholdFallback => "threshold_fallback",
            Regime::ByCorpus => "by_corpus",
        }
    }
}

/// Line-delimited record form: `{source, target, origin, line_no, domain, confidence, regime}`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LabeledPair {
    #[serde(flatten)]
    pub pair: SentencePair,
    pub domain: DomainLabel,
    pub confidence: f64,
    pub regime: Regime,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LabelerConfig {
    pub threshold: f64,
    pub fallback_domain: DomainLabel,
    pub candidate_domains: Vec<DomainLabel>,
    /// Texts per classifier call.
    pub batch_size: usize,
    /// Classifier calls allowed in flight at once.
    pub max_in_flight: usize,
}

impl Default for LabelerConfig {
    fn default() -> Self {
        Self {
            threshold: 0.45,
            fallback_domain: DomainLabel::from(GENERAL),
            candidate_domains: crate::domain::domains(["legal", "medical", "wiki_news"]),
            batch_size: 32,
            max_in_flight: 4,
        }
    }
}

impl LabelerConfig {
    pub fn validate(&self) -> Result<()> {
        if !(0.0..=1.0).contains(&self.threshold) {
            return Err(Error::Config(format!(
                "threshold must lie in [0, 1], got {}",
                self.threshold
            )));
        }
        if self.candidate_domains.is_empty() {
            return Err(Error::Config("candidate domain list is empty".into()));
        }
        if self.candidate_domains.contains(&self.fallback_domain) {
            return Err(Error::Config(format!(
                "fallback domain `{}` must not be a classifier candidate",
                self.fallback_domain
            )));
        }
        if self.batch_size == 0 || self.max_in_flight == 0 {
            return Err(Error::Config(
                "batch size and in-flight limit must be positive".into(),
            ));
        }
        Ok(())
    }
}

/// A pair the classifier could not label.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LabelFailure {
    /// Position in the input slice.
    pub index: usize,
    pub origin: String,
    pub line_no: usize,
    pub message: String,
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct LabelOutcome {
    pub labeled: Vec<LabeledPair>,
    pub failures: Vec<LabelFailure>,
}

/// Classifies source texts in batches with bounded parallelism, keeping input order.
fn classify_all(
    pairs: &[SentencePair],
    labels: &[DomainLabel],
    multi_label: bool,
    classifier: &dyn ClassifierClient,
    batch_size: usize,
    max_in_flight: usize,
) -> Vec<Result<Classification>> {
    let run = || {
        pairs
            .par_chunks(batch_size.max(1))
            .flat_map_iter(|chunk| {
                let texts: Vec<&str> = chunk.iter().map(|p| p.source_text.as_str()).collect();
                match classifier.classify_batch(&texts, labels, multi_label) {
                    Ok(rows) if rows.len() == chunk.len() => rows.into_iter().map(Ok).collect::<Vec<_>>(),
                    Ok(rows) => {
                        let msg = format!("expected {} rows, got {}", chunk.len(), rows.len());
                        chunk
                            .iter()
                            .map(|_| Err(Error::Classifier(msg.clone())))
                            .collect()
                    }
                    Err(e) => {
                        let msg = e.to_string();
                        chunk
                            .iter()
                            .map(|_| Err(Error::Classifier(msg.clone())))
                            .collect()
                    }
                }
            })
            .collect::<Vec<_>>()
    };
    match rayon::ThreadPoolBuilder::new()
        .num_threads(max_in_flight.max(1))
        .build()
    {
        Ok(pool) => pool.install(run),
        Err(e) => {
            log::warn!("falling back to the global thread pool: {e}");
            run()
        }
    }
}

fn collect_outcome(
    pairs: &[SentencePair],
    results: Vec<Result<Classification>>,
    mut decide: impl FnMut(&Classification) -> Result<(DomainLabel, f64)>,
    regime: Regime,
) -> LabelOutcome {
    let mut out = LabelOutcome::default();
    for (index, (pair, result)) in pairs.iter().zip(results).enumerate() {
        match result.and_then(|c| decide(&c)) {
            Ok((domain, confidence)) => out.labeled.push(LabeledPair {
                pair: pair.clone(),
                domain,
                confidence,
                regime,
            }),
            Err(e) => out.failures.push(LabelFailure {
                index,
                origin: pair.origin.clone(),
                line_no: pair.line_no,
                message: e.to_string(),
            }),
        }
    }
    if !out.failures.is_empty() {
        log::warn!(
            "{} of {} pairs could not be labeled",
            out.failures.len(),
            pairs.len()
        );
    }
    out
}

/// Four-domain regime: argmax over all `domains`, ties to the earlier domain.
pub fn label_regime_a(
    pairs: &[SentencePair],
    domains: &[DomainLabel],
    classifier: &dyn ClassifierClient,
    batch_size: usize,
    max_in_flight: usize,
) -> Result<LabelOutcome> {
    if domains.is_empty() {
        return Err(Error::Config("domain list is empty".into()));
    }
    let results = classify_all(pairs, domains, false, classifier, batch_size, max_in_flight);
    Ok(collect_outcome(
        pairs,
        results,
        |c| argmax_in_order(c, domains),
        Regime::FourDomain,
    ))
}

fn argmax_in_order(c: &Classification, order: &[DomainLabel]) -> Result<(DomainLabel, f64)> {
    let mut best: Option<(&DomainLabel, f64)> = None;
    for label in order {
        let score = c
            .score(label)
            .ok_or_else(|| Error::Classifier(format!("no score for `{label}`")))?;
        if best.is_none_or(|(_, b)| score > b) {
            best = Some((label, score));
        }
    }
    best.map(|(l, s)| (l.clone(), s))
        .ok_or_else(|| Error::Classifier("empty classification".into()))
}

/// Threshold rule: the best candidate wins only if its score strictly exceeds
/// the threshold; otherwise the fallback domain is returned with confidence
/// `1 - max score`.
pub fn threshold_decision(c: &Classification, config: &LabelerConfig) -> Result<(DomainLabel, f64)> {
    let (label, score) = argmax_in_order(c, &config.candidate_domains)?;
    if score > config.threshold {
        Ok((label, score))
    } else {
        Ok((config.fallback_domain.clone(), 1.0 - score))
    }
}

/// Threshold-fallback regime, classifying in multi-label mode.
pub fn label_regime_b(
    pairs: &[SentencePair],
    config: &LabelerConfig,
    classifier: &dyn ClassifierClient,
) -> Result<LabelOutcome> {
    config.validate()?;
    let results = classify_all(
        pairs,
        &config.candidate_domains,
        true,
        classifier,
        config.batch_size,
        config.max_in_flight,
    );
    Ok(collect_outcome(
        pairs,
        results,
        |c| threshold_decision(c, config),
        Regime::ThresholdFallback,
    ))
}

/// Labels every pair with the domain of its corpus.
pub fn label_by_corpus(
    pairs: &[SentencePair],
    corpus_domains: &IndexMap<String, DomainLabel>,
) -> Result<Vec<LabeledPair>> {
    pairs
        .iter()
        .map(|p| {
            let domain = corpus_domains
                .get(&p.origin)
                .ok_or_else(|| Error::Config(format!("corpus `{}` has no domain mapping", p.origin)))?;
            Ok(LabeledPair {
                pair: p.clone(),
                domain: domain.clone(),
                confidence: 1.0,
                regime: Regime::ByCorpus,
            })
        })
        .collect()
}

/// Groups pairs by label, buckets in order of first appearance.
pub fn partition_by_domain(labeled: &[LabeledPair]) -> IndexMap<DomainLabel, Corpus> {
    let mut buckets: IndexMap<DomainLabel, Corpus> = IndexMap::new();
    for lp in labeled {
        buckets
            .entry(lp.domain.clone())
            .or_insert_with(|| Corpus::new(lp.domain.as_str(), Vec::new()))
            .pairs
            .push(lp.pair.clone());
    }
    buckets
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::domain::{default_domains, domains};
    use std::collections::HashMap;

    /// Returns fixed score rows keyed by source text.
    struct Scripted(HashMap<String, Vec<f64>>);

    impl ClassifierClient for Scripted {
        fn classify_batch(
            &self,
            texts: &[&str],
            labels: &[DomainLabel],
            _multi_label: bool,
        ) -> Result<Vec<Classification>> {
            texts
                .iter()
                .map(|t| match self.0.get(*t) {
                    Some(row) => Classification::from_scores(labels, row),
                    None => Err(Error::Classifier(format!("no script for {t}"))),
                })
                .collect()
        }
    }

    fn pair(text: &str) -> SentencePair {
        SentencePair::new(text, "aistriúchán", "o", 1).unwrap()
    }

    fn scripted(rows: &[(&str, &[f64])]) -> Scripted {
        Scripted(rows.iter().map(|(t, r)| (t.to_string(), r.to_vec())).collect())
    }

    #[test]
    fn regime_a_argmax_and_ties() {
        let clf = scripted(&[("one", &[0.7, 0.2, 0.05, 0.05]), ("two", &[0.0, 0.5, 0.5, 0.0])]);
        let out = label_regime_a(&[pair("one"), pair("two")], &default_domains(), &clf, 8, 2).unwrap();
        assert_eq!(out.labeled[0].domain.as_str(), "general");
        assert_eq!(out.labeled[0].confidence, 0.7);
        assert_eq!(out.labeled[1].domain.as_str(), "legal");
        assert!(out.labeled.iter().all(|l| l.regime == Regime::FourDomain));
    }

    #[test]
    fn regime_a_mock_keywords() {
        let clf = MockClassifier::new([(DomainLabel::from("legal"), vec!["court".to_string()])].into());
        let out = label_regime_a(&[pair("the court ruled")], &default_domains(), &clf, 8, 1).unwrap();
        assert_eq!(out.labeled[0].domain.as_str(), "legal");
        assert_eq!(out.labeled[0].confidence, 1.0);
    }

    #[test]
    fn regime_a_failures_do_not_stop_the_run() {
        let clf = scripted(&[("ok", &[0.1, 0.9, 0.0, 0.0])]);
        let pairs = [pair("ok"), pair("missing"), pair("ok")];
        let out = label_regime_a(&pairs, &default_domains(), &clf, 1, 2).unwrap();
        assert_eq!(out.labeled.len(), 2);
        assert_eq!(out.failures.len(), 1);
        assert_eq!(out.failures[0].index, 1);
    }

    #[test]
    fn regime_b_threshold() {
        let cfg = LabelerConfig::default();
        let clf = scripted(&[
            ("clear", &[0.50, 0.30, 0.10]),
            ("weak", &[0.44, 0.44, 0.44]),
            ("edge", &[0.45, 0.0, 0.0]),
        ]);
        let out = label_regime_b(&[pair("clear"), pair("weak"), pair("edge")], &cfg, &clf).unwrap();
        assert_eq!(out.labeled[0].domain.as_str(), "legal");
        assert_eq!(out.labeled[0].confidence, 0.50);
        assert_eq!(out.labeled[1].domain.as_str(), "general");
        assert!((out.labeled[1].confidence - 0.56).abs() < 1e-12);
        assert_eq!(
            out.labeled[2].domain.as_str(),
            "general",
            "0.45 does not exceed 0.45"
        );
    }

    #[test]
    fn regime_b_rejects_fallback_candidate() {
        let cfg = LabelerConfig {
            candidate_domains: default_domains(),
            ..LabelerConfig::default()
        };
        let err = label_regime_b(&[pair("x")], &cfg, &MockClassifier::default()).unwrap_err();
        assert_eq!(err.category(), "config");
    }

    #[test]
    fn by_corpus_mapping() {
        let map: IndexMap<String, DomainLabel> = [
            ("LoResMT".to_string(), DomainLabel::from("medical")),
            ("Foclóir".to_string(), DomainLabel::from("general")),
        ]
        .into();
        let pairs = vec![
            SentencePair::new(
                "What is added by this report?",
                "Cad a chuireann an tuarascáil seo leis?",
                "LoResMT",
                1,
            )
            .unwrap(),
            SentencePair::new("dog", "madra", "Foclóir", 1).unwrap(),
        ];
        let out = label_by_corpus(&pairs, &map).unwrap();
        assert_eq!(out[0].domain.as_str(), "medical");
        assert_eq!(out[1].domain.as_str(), "general");
        assert!(out
            .iter()
            .all(|l| l.confidence == 1.0 && l.regime == Regime::ByCorpus));

        let stray = SentencePair::new("a", "b", "X", 1).unwrap();
        let err = label_by_corpus(&[stray], &map).unwrap_err();
        assert!(err.to_string().contains("`X`"));
    }

    fn labeled(domain: &str) -> LabeledPair {
        LabeledPair {
            pair: pair("x"),
            domain: domain.into(),
            confidence: 1.0,
            regime: Regime::ByCorpus,
        }
    }

    #[test]
    fn partition_counts() {
        let parts = partition_by_domain(&[labeled("general"), labeled("general"), labeled("legal")]);
        assert_eq!(parts["general"].len(), 2);
        assert_eq!(parts["legal"].len(), 1);
        assert!(partition_by_domain(&[]).is_empty());
    }

    #[test]
    fn partition_matches_histogram() {
        let names = domains(["general", "legal", "medical", "wiki_news"]);
        let input: Vec<LabeledPair> = (0..1000u64)
            .map(|i| labeled(names[((i * 7919) % 13 % 4) as usize].as_str()))
            .collect();
        let mut histogram: HashMap<&str, usize> = HashMap::new();
        for lp in &input {
            *histogram.entry(lp.domain.as_str()).or_default() += 1;
        }
        let parts = partition_by_domain(&input);
        assert_eq!(parts.len(), histogram.len());
        for (domain, corpus) in &parts {
            assert_eq!(corpus.len(), histogram[domain.as_str()]);
        }
    }

    #[test]
    fn labeled_record_shape() {
        let json = serde_json::to_value(labeled("legal")).unwrap();
        for key in [
            "source",
            "target",
            "origin",
            "line_no",
            "domain",
            "confidence",
            "regime",
        ] {
            assert!(json.get(key).is_some(), "missing {key}");
        }
        assert_eq!(json["regime"], "by_corpus");
    }

    #[test]
    fn classification_validates_range() {
        let labels = domains(["a", "b"]);
        assert!(Classification::from_scores(&labels, &[0.1]).is_err());
        assert!(Classification::from_scores(&labels, &[0.1, 1.5]).is_err());
        assert!(Classification::from_scores(&labels, &[0.0, 1.0]).is_ok());
    }
}
