//! Corpus BLEU and per-domain evaluation reports.

use std::collections::HashMap;

use indexmap::IndexMap;
use serde::{Deserialize, Serialize};

use crate::centroids::{route_batch, CentroidIndex, EmbedderClient};
use crate::domain::DomainLabel;
use crate::error::{Error, Result};
use crate::labeler::LabeledPair;

pub const MAX_ORDER: usize = 4;

fn is_punctuation(c: char) -> bool {
    c.is_ascii_punctuation()
        || matches!(c,
            '\u{2010}'..='\u{2027}' | '\u{2030}'..='\u{205e}'
            | '«' | '»' | '¡' | '¿' | '·' | '§' | '¶')
}

/// Case-preserving tokenizer: punctuation becomes its own token unless a
/// digit sits on both sides (`3.14`, `1,000`), then whitespace splitting.
pub fn tokenize_eval(text: &str) -> Vec<String> {
    let chars: Vec<char> = text.chars().collect();
    let mut spaced = String::with_capacity(text.len() + 8);
    for (i, &c) in chars.iter().enumerate() {
        let digit_flanked =
            i > 0 && chars[i - 1].is_ascii_digit() && chars.get(i + 1).is_some_and(|n| n.is_ascii_digit());
        if is_punctuation(c) && !digit_flanked {
            spaced.push(' ');
            spaced.push(c);
            spaced.push(' ');
        } else {
            spaced.push(c);
        }
    }
    spaced.split_whitespace().map(str::to_string).collect()
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Smoothing {
    #[default]
    None,
    /// Adds one to the numerator and denominator of every order.
    AddOne,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BleuScore {
    /// 0 to 100.
    pub score: f64,
    /// Modified n-gram precisions for n = 1..4 (0 where no n-grams exist).
    pub precisions: [f64; MAX_ORDER],
    pub matches: [u64; MAX_ORDER],
    pub totals: [u64; MAX_ORDER],
    /// 1 when the hypotheses are at least as long as the references; 0 only
    /// when every hypothesis is empty.
    pub brevity_penalty: f64,
    pub hyp_len: usize,
    pub ref_len: usize,
    pub smoothing: Smoothing,
}

fn ngram_counts(tokens: &[String], n: usize) -> HashMap<&[String], u64> {
    let mut counts = HashMap::new();
    if tokens.len() >= n {
        for gram in tokens.windows(n) {
            *counts.entry(gram).or_insert(0) += 1;
        }
    }
    counts
}

/// BLEU over pre-tokenized sentences, one reference each.
///
/// Orders with no hypothesis n-grams anywhere in the corpus are left out of
/// the geometric mean, so very short corpora are scored on the orders they
/// can support. Without smoothing any zero precision gives a score of 0.
pub fn corpus_bleu_tokens(
    hypotheses: &[Vec<String>],
    references: &[Vec<String>],
    smoothing: Smoothing,
) -> Result<BleuScore> {
    if hypotheses.len() != references.len() {
        return Err(Error::Validation(format!(
            "{} hypotheses for {} references",
            hypotheses.len(),
            references.len()
        )));
    }
    if hypotheses.is_empty() {
        return Err(Error::Validation("cannot score an empty corpus".into()));
    }
    let mut matches = [0u64; MAX_ORDER];
    let mut totals = [0u64; MAX_ORDER];
    let (mut hyp_len, mut ref_len) = (0usize, 0usize);
    for (hyp, reference) in hypotheses.iter().zip(references) {
        hyp_len += hyp.len();
        ref_len += reference.len();
        for n in 1..=MAX_ORDER {
            let ref_counts = ngram_counts(reference, n);
            for (gram, count) in ngram_counts(hyp, n) {
                matches[n - 1] += count.min(ref_counts.get(gram).copied().unwrap_or(0));
                totals[n - 1] += count;
            }
        }
    }

    let mut precisions = [0f64; MAX_ORDER];
    let mut log_sum = 0f64;
    let mut orders = 0usize;
    let mut zero = false;
    for n in 0..MAX_ORDER {
        let (m, t) = match smoothing {
            Smoothing::None => (matches[n] as f64, totals[n] as f64),
            Smoothing::AddOne => (matches[n] as f64 + 1.0, totals[n] as f64 + 1.0),
        };
        if t == 0.0 {
            continue;
        }
        precisions[n] = m / t;
        orders += 1;
        if m == 0.0 {
            zero = true;
        } else {
            log_sum += precisions[n].ln();
        }
    }

    let brevity_penalty = if hyp_len >= ref_len {
        1.0
    } else if hyp_len == 0 {
        0.0
    } else {
        (1.0 - ref_len as f64 / hyp_len as f64).exp()
    };
    let score = if zero || orders == 0 {
        0.0
    } else {
        100.0 * brevity_penalty * (log_sum / orders as f64).exp()
    };
    Ok(BleuScore {
        score: score.clamp(0.0, 100.0),
        precisions,
        matches,
        totals,
        brevity_penalty,
        hyp_len,
        ref_len,
        smoothing,
    })
}

/// [`corpus_bleu_tokens`] after [`tokenize_eval`].
pub fn corpus_bleu<S: AsRef<str>>(
    hypotheses: &[S],
    references: &[S],
    smoothing: Smoothing,
) -> Result<BleuScore> {
    let tok = |xs: &[S]| xs.iter().map(|s| tokenize_eval(s.as_ref())).collect::<Vec<_>>();
    corpus_bleu_tokens(&tok(hypotheses), &tok(references), smoothing)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RoutingMode {
    ClassifierLabeled,
    CentroidRouted,
    ByCorpus,
}

/// How evaluation pairs are assigned to domains.
pub enum Grouping<'a> {
    /// Use the label stored on each pair.
    ClassifierLabels,
    CentroidRouted {
        index: &'a CentroidIndex,
        embedder: &'a dyn EmbedderClient,
    },
    ByCorpus(&'a IndexMap<String, DomainLabel>),
}

impl Grouping<'_> {
    pub fn mode(&self) -> RoutingMode {
        match self {
            Grouping::ClassifierLabels => RoutingMode::ClassifierLabeled,
            Grouping::CentroidRouted { .. } => RoutingMode::CentroidRouted,
            Grouping::ByCorpus(_) => RoutingMode::ByCorpus,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DomainResult {
    pub domain: DomainLabel,
    /// Evaluation pairs assigned to this domain.
    pub pair_count: usize,
    /// Pairs that also had a hypothesis.
    pub scored_count: usize,
    pub bleu: Option<BleuScore>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalReport {
    pub config_id: String,
    /// Row name in rendered tables; the config id is used when absent.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub label: Option<String>,
    pub routing_mode: RoutingMode,
    pub smoothing: Smoothing,
    pub per_domain: Vec<DomainResult>,
    pub missing_hypotheses: usize,
}

impl EvalReport {
    pub fn total_pairs(&self) -> usize {
        self.per_domain.iter().map(|d| d.pair_count).sum()
    }

    pub fn score(&self, domain: &str) -> Option<f64> {
        self.per_domain
            .iter()
            .find(|d| d.domain.as_str() == domain)
            .and_then(|d| d.bleu.as_ref())
            .map(|b| b.score)
    }
}

const ROUTE_BATCH: usize = 64;

/// Scores each domain group separately. `hypotheses[i]` belongs to
/// `pairs[i]`; `None` marks a missing translation, which is counted and
/// excluded. Domains listed in `domain_order` always get an entry.
pub fn stratified_eval(
    pairs: &[LabeledPair],
    hypotheses: &[Option<String>],
    grouping: &Grouping<'_>,
    domain_order: &[DomainLabel],
    config_id: &str,
    smoothing: Smoothing,
) -> Result<EvalReport> {
    if pairs.len() != hypotheses.len() {
        return Err(Error::Validation(format!(
            "{} hypotheses for {} evaluation pairs",
            hypotheses.len(),
            pairs.len()
        )));
    }
    let assigned: Vec<DomainLabel> = match grouping {
        Grouping::ClassifierLabels => pairs.iter().map(|p| p.domain.clone()).collect(),
        Grouping::ByCorpus(map) => pairs
            .iter()
            .map(|p| {
                map.get(&p.pair.origin)
                    .cloned()
                    .ok_or_else(|| Error::Config(format!("corpus `{}` has no domain mapping", p.pair.origin)))
            })
            .collect::<Result<_>>()?,
        Grouping::CentroidRouted { index, embedder } => {
            let mut out = Vec::with_capacity(pairs.len());
            for chunk in pairs.chunks(ROUTE_BATCH) {
                let texts: Vec<&str> = chunk.iter().map(|p| p.pair.source_text.as_str()).collect();
                out.extend(
                    route_batch(&texts, index, *embedder)?
                        .into_iter()
                        .map(|d| d.chosen),
                );
            }
            out
        }
    };

    let mut groups: IndexMap<DomainLabel, Vec<usize>> =
        domain_order.iter().map(|d| (d.clone(), Vec::new())).collect();
    for (i, d) in assigned.into_iter().enumerate() {
        groups.entry(d).or_default().push(i);
    }

    let mut missing = 0;
    let mut per_domain = Vec::with_capacity(groups.len());
    for (domain, members) in groups {
        let (mut hyps, mut refs) = (Vec::new(), Vec::new());
        for &i in &members {
            match &hypotheses[i] {
                Some(h) => {
                    hyps.push(h.as_str());
                    refs.push(pairs[i].pair.target_text.as_str());
                }
                None => missing += 1,
            }
        }
        let bleu = if hyps.is_empty() {
            None
        } else {
            Some(corpus_bleu(&hyps, &refs, smoothing)?)
        };
        per_domain.push(DomainResult {
            domain,
            pair_count: members.len(),
            scored_count: hyps.len(),
            bleu,
        });
    }
    if missing > 0 {
        log::warn!("{missing} evaluation pairs have no hypothesis and were excluded");
    }
    Ok(EvalReport {
        config_id: config_id.to_string(),
        label: None,
        routing_mode: grouping.mode(),
        smoothing,
        per_domain,
        missing_hypotheses: missing,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ReportFormat {
    Json,
    MarkdownTable,
}

/// Renders one row per report and one column per domain. In markdown the best
/// score of each column is bolded; JSON is an array of the reports.
pub fn render_report(reports: &[EvalReport], format: ReportFormat) -> String {
    match format {
        ReportFormat::Json => {
            let mut s = serde_json::to_string_pretty(reports).expect("reports serialize");
            s.push('\n');
            s
        }
        ReportFormat::MarkdownTable => markdown_table(reports),
    }
}

fn markdown_table(reports: &[EvalReport]) -> String {
    let mut columns: Vec<&DomainLabel> = Vec::new();
    for r in reports {
        for d in &r.per_domain {
            if !columns.contains(&&d.domain) {
                columns.push(&d.domain);
            }
        }
    }
    let best: Vec<Option<f64>> = columns
        .iter()
        .map(|c| {
            reports
                .iter()
                .filter_map(|r| r.score(c.as_str()))
                .fold(None, |acc: Option<f64>, s| Some(acc.map_or(s, |a| a.max(s))))
        })
        .collect();

    let mut out = String::from("| Model |");
    for c in &columns {
        out.push_str(&format!(" {c} |"));
    }
    out.push_str("\n|---|");
    out.push_str(&"---:|".repeat(columns.len()));
    out.push('\n');
    for r in reports {
        out.push_str(&format!("| {} |", r.label.as_deref().unwrap_or(&r.config_id)));
        for (c, b) in columns.iter().zip(&best) {
            let cell = match r.score(c.as_str()) {
                Some(s) if Some(s) == *b => format!("**{s:.2}**"),
                Some(s) => format!("{s:.2}"),
                None => "-".to_string(),
            };
            out.push_str(&format!(" {cell} |"));
        }
        out.push('\n');
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus::SentencePair;
    use crate::labeler::Regime;

    fn toks(s: &str) -> Vec<String> {
        s.split_whitespace().map(str::to_string).collect()
    }

    #[test]
    fn tokenizer_examples() {
        assert_eq!(tokenize_eval("Hello, world!"), ["Hello", ",", "world", "!"]);
        assert_eq!(tokenize_eval("3.14"), ["3.14"]);
        assert_eq!(tokenize_eval("a(b)c"), ["a", "(", "b", ")", "c"]);
        assert_eq!(tokenize_eval("1,000 euro."), ["1,000", "euro", "."]);
        assert_eq!(tokenize_eval("“Sláinte”"), ["“", "Sláinte", "”"]);
    }

    #[test]
    fn identical_corpus_scores_100() {
        let refs = ["the cat sat on the mat", "a dog barked loudly"];
        let b = corpus_bleu(&refs, &refs, Smoothing::None).unwrap();
        assert_eq!(b.score, 100.0);
        assert_eq!(b.brevity_penalty, 1.0);
    }

    #[test]
    fn disjoint_corpus_scores_zero() {
        let b = corpus_bleu(&["xyz qqq"], &["the cat"], Smoothing::None).unwrap();
        assert_eq!(b.score, 0.0);
    }

    #[test]
    fn repeated_the_against_cat_on_mat() {
        // Unigrams clip "the" at 2 of 7; "the the" never occurs in the reference.
        let b = corpus_bleu(
            &["the the the the the the the"],
            &["the cat is on the mat"],
            Smoothing::None,
        )
        .unwrap();
        assert_eq!(b.matches[0], 2);
        assert_eq!(b.totals[0], 7);
        assert!((b.precisions[0] - 2.0 / 7.0).abs() < 1e-15);
        assert_eq!(b.matches[1], 0);
        assert_eq!(b.score, 0.0);

        // With add-one smoothing every order contributes; hyp is longer so BP = 1.
        let s = corpus_bleu(
            &["the the the the the the the"],
            &["the cat is on the mat"],
            Smoothing::AddOne,
        )
        .unwrap();
        let expected = 100.0 * ((3.0f64 / 8.0) * (1.0 / 7.0) * (1.0 / 6.0) * (1.0 / 5.0)).powf(0.25);
        assert!((s.score - expected).abs() < 1e-9);
        assert_eq!(s.brevity_penalty, 1.0);
    }

    #[test]
    fn brevity_penalty_applies_to_short_output() {
        let b = corpus_bleu_tokens(&[toks("a b c d")], &[toks("a b c d e f")], Smoothing::None).unwrap();
        let bp = (1.0f64 - 6.0 / 4.0).exp();
        assert!((b.brevity_penalty - bp).abs() < 1e-15);
        assert!((b.score - 100.0 * bp).abs() < 1e-9);
    }

    #[test]
    fn short_corpus_uses_available_orders() {
        let b = corpus_bleu_tokens(&[toks("a b")], &[toks("a b")], Smoothing::None).unwrap();
        assert_eq!(b.totals, [2, 1, 0, 0]);
        assert_eq!(b.score, 100.0);
    }

    #[test]
    fn bleu_errors() {
        assert!(corpus_bleu(&["a"], &["a", "b"], Smoothing::None).is_err());
        let empty: [&str; 0] = [];
        assert!(corpus_bleu(&empty, &empty, Smoothing::None).is_err());
    }

    fn eval_pair(src: &str, tgt: &str, domain: &str) -> LabeledPair {
        LabeledPair {
            pair: SentencePair::new(src, tgt, "o", 1).unwrap(),
            domain: domain.into(),
            confidence: 1.0,
            regime: Regime::FourDomain,
        }
    }

    #[test]
    fn stratified_single_domain() {
        let pairs = vec![
            eval_pair("a", "x y z w", "legal"),
            eval_pair("b", "p q r s", "legal"),
        ];
        let hyps = vec![Some("x y z w".to_string()), None];
        let r = stratified_eval(
            &pairs,
            &hyps,
            &Grouping::ClassifierLabels,
            &[],
            "cfg",
            Smoothing::None,
        )
        .unwrap();
        assert_eq!(r.per_domain.len(), 1);
        assert_eq!(r.per_domain[0].pair_count, 2);
        assert_eq!(r.per_domain[0].scored_count, 1);
        assert_eq!(r.missing_hypotheses, 1);
        assert_eq!(r.score("legal"), Some(100.0));
        assert_eq!(r.routing_mode, RoutingMode::ClassifierLabeled);
    }

    #[test]
    fn stratified_reports_empty_groups() {
        let pairs = vec![eval_pair("a", "x y z w", "legal")];
        let order = crate::domain::default_domains();
        let r = stratified_eval(
            &pairs,
            &[Some("x y z w".into())],
            &Grouping::ClassifierLabels,
            &order,
            "c",
            Smoothing::None,
        )
        .unwrap();
        assert_eq!(r.per_domain.len(), 4);
        let general = &r.per_domain[0];
        assert_eq!((general.pair_count, general.bleu.is_none()), (0, true));
        assert_eq!(r.total_pairs(), 1);
    }

    #[test]
    fn stratified_by_corpus_needs_mapping() {
        let pairs = vec![eval_pair("a", "b", "legal")];
        let map = IndexMap::new();
        let err = stratified_eval(
            &pairs,
            &[Some("b".into())],
            &Grouping::ByCorpus(&map),
            &[],
            "c",
            Smoothing::None,
        )
        .unwrap_err();
        assert_eq!(err.category(), "config");
    }

    fn report(config: &str, scores: &[(&str, f64)]) -> EvalReport {
        EvalReport {
            config_id: "cfg".into(),
            label: Some(config.into()),
            routing_mode: RoutingMode::CentroidRouted,
            smoothing: Smoothing::None,
            missing_hypotheses: 0,
            per_domain: scores
                .iter()
                .map(|(d, s)| DomainResult {
                    domain: (*d).into(),
                    pair_count: 1,
                    scored_count: 1,
                    bleu: Some(BleuScore {
                        score: *s,
                        precisions: [0.5; 4],
                        matches: [1; 4],
                        totals: [2; 4],
                        brevity_penalty: 1.0,
                        hyp_len: 1,
                        ref_len: 1,
                        smoothing: Smoothing::None,
                    }),
                })
                .collect(),
        }
    }

    #[test]
    fn markdown_marks_column_best() {
        // Four-domain block of the published results table.
        let rows = [
            report(
                "LoRA",
                &[
                    ("general", 38.94),
                    ("medical", 43.77),
                    ("wiki_news", 44.54),
                    ("legal", 47.35),
                ],
            ),
            report(
                "Full-model domain FT",
                &[
                    ("general", 38.94),
                    ("medical", 44.37),
                    ("wiki_news", 46.64),
                    ("legal", 52.81),
                ],
            ),
            report(
                "SemiLoRA",
                &[
                    ("general", 32.96),
                    ("medical", 51.29),
                    ("wiki_news", 46.18),
                    ("legal", 50.85),
                ],
            ),
            report(
                "SemiAdapt",
                &[
                    ("general", 32.96),
                    ("medical", 50.61),
                    ("wiki_news", 48.59),
                    ("legal", 55.21),
                ],
            ),
        ];
        let md = render_report(&rows, ReportFormat::MarkdownTable);
        let semiadapt = md.lines().find(|l| l.starts_with("| SemiAdapt")).unwrap();
        assert!(semiadapt.contains("**55.21**"));
        assert!(semiadapt.contains("**48.59**"));
        assert_eq!(
            md.matches("**").count() / 2,
            5,
            "ties in the general column both bold"
        );
        assert!(md
            .lines()
            .find(|l| l.starts_with("| SemiLoRA"))
            .unwrap()
            .contains("**51.29**"));
    }

    #[test]
    fn markdown_empty_has_header() {
        assert_eq!(
            render_report(&[], ReportFormat::MarkdownTable),
            "| Model |\n|---|\n"
        );
    }

    #[test]
    fn json_round_trip() {
        let rows = vec![
            report("a", &[("legal", 12.345678901234)]),
            report("b", &[("medical", 0.1 + 0.2)]),
        ];
        let json = render_report(&rows, ReportFormat::Json);
        let back: Vec<EvalReport> = serde_json::from_str(&json).unwrap();
        assert_eq!(back, rows);
    }
}
