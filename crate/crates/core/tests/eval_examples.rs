use semiroute_core::eval::{corpus_bleu, render_report, stratified_eval, Grouping, ReportFormat};
use semiroute_core::{DomainLabel, LabeledPair, Regime, SentencePair, Smoothing};

#[test]
fn repeated_the_with_add_one() {
    let hyp = ["the the the the the the the"];
    let reference = ["the cat is on the mat"];
    let plain = corpus_bleu(&hyp, &reference, Smoothing::None).unwrap();
    assert_eq!((plain.matches[0], plain.totals[0]), (2, 7));
    assert_eq!(plain.score, 0.0);

    // Orders 1..4: matches 2,0,0,0 over totals 7,6,5,4; hyp is longer, so no penalty.
    let expected = 100.0 * ((3.0 / 8.0) * (1.0 / 7.0) * (1.0 / 6.0) * (1.0 / 5.0f64)).powf(0.25);
    let smoothed = corpus_bleu(&hyp, &reference, Smoothing::AddOne).unwrap();
    assert!(
        (smoothed.score - expected).abs() < 1e-12,
        "{} vs {expected}",
        smoothed.score
    );
    assert_eq!(smoothed.brevity_penalty, 1.0);
}

#[test]
fn brevity_penalty_by_hand() {
    // 4 of 6 reference tokens reproduced in order: all precisions 1, BP = e^(1 - 6/4).
    let s = corpus_bleu(&["a b c d"], &["a b c d e f"], Smoothing::None).unwrap();
    assert!((s.score - 100.0 * (-0.5f64).exp()).abs() < 1e-12);
}

fn pair(i: usize, domain: &str) -> LabeledPair {
    let words = [
        "alpha", "bravo", "charlie", "delta", "echo", "foxtrot", "golf", "hotel",
    ];
    let target: Vec<&str> = (0..6).map(|j| words[(i * 3 + j) % words.len()]).collect();
    LabeledPair {
        pair: SentencePair::new(&format!("src {domain} {i}"), &target.join(" "), "o", i + 1).unwrap(),
        domain: domain.into(),
        confidence: 1.0,
        regime: Regime::ThresholdFallback,
    }
}

#[test]
fn shuffled_medical_scores_below_the_rest() {
    let domains = ["general", "legal", "medical", "wiki_news"];
    let pairs: Vec<LabeledPair> = domains
        .iter()
        .flat_map(|d| (0..5).map(move |i| pair(i, d)))
        .collect();
    let order: Vec<DomainLabel> = domains.iter().map(|&d| d.into()).collect();

    let exact: Vec<Option<String>> = pairs.iter().map(|p| Some(p.pair.target_text.clone())).collect();
    let r = stratified_eval(
        &pairs,
        &exact,
        &Grouping::ClassifierLabels,
        &order,
        "cfg",
        Smoothing::None,
    )
    .unwrap();
    assert!(domains.iter().all(|d| r.score(d) == Some(100.0)));

    let medical: Vec<usize> = (0..pairs.len())
        .filter(|&i| pairs[i].domain.as_str() == "medical")
        .collect();
    let mut shuffled = exact.clone();
    for (k, &i) in medical.iter().enumerate() {
        shuffled[i] = exact[medical[(k + 1) % medical.len()]].clone();
    }
    let r = stratified_eval(
        &pairs,
        &shuffled,
        &Grouping::ClassifierLabels,
        &order,
        "cfg",
        Smoothing::None,
    )
    .unwrap();
    let med = r.score("medical").unwrap();
    for d in ["general", "legal", "wiki_news"] {
        assert!(med < r.score(d).unwrap(), "medical {med} vs {d}");
    }
}

#[test]
fn unnamed_report_row_uses_config_id() {
    let pairs = vec![pair(0, "legal")];
    let hyps = vec![Some(pairs[0].pair.target_text.clone())];
    let mut r = stratified_eval(
        &pairs,
        &hyps,
        &Grouping::ClassifierLabels,
        &[],
        "3f9a0c1d",
        Smoothing::None,
    )
    .unwrap();
    assert!(render_report(&[r.clone()], ReportFormat::MarkdownTable).contains("| 3f9a0c1d |"));
    r.label = Some("adapted".into());
    let md = render_report(&[r], ReportFormat::MarkdownTable);
    assert!(md.contains("| adapted |") && !md.contains("3f9a0c1d"));
}
