//! Seeded synthetic inputs shared by the benchmarks.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use semiroute_core::blockalign::{normalize_blocks, BBox, BlockDocument, Page, TextBlock};
use semiroute_core::{
    build_index, BuildMetadata, CentroidIndex, Corpus, DomainLabel, LabeledPair, MockEmbedder, Regime,
    SentencePair,
};

pub const DOMAINS: [&str; 4] = ["general", "legal", "medical", "wiki_news"];

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// A sentence of 8 to 15 words drawn from `{prefix}0..{prefix}49`.
pub fn sentence(rng: &mut ChaCha8Rng, prefix: &str) -> String {
    let len = rng.random_range(8..=15);
    (0..len)
        .map(|_| format!("{prefix}{}", rng.random_range(0..50)))
        .collect::<Vec<_>>()
        .join(" ")
}

pub fn labeled_set(rng: &mut ChaCha8Rng, per_domain: usize) -> Vec<LabeledPair> {
    DOMAINS
        .iter()
        .flat_map(|d| (0..per_domain).map(move |i| (*d, i)))
        .map(|(d, i)| LabeledPair {
            pair: SentencePair::new(&sentence(rng, d), "x", "bench", i + 1).unwrap(),
            domain: d.into(),
            confidence: 1.0,
            regime: Regime::ByCorpus,
        })
        .collect()
}

pub fn index(embedder: &MockEmbedder, per_domain: usize) -> CentroidIndex {
    let order: Vec<DomainLabel> = DOMAINS.iter().map(|&d| d.into()).collect();
    build_index(
        &labeled_set(&mut rng(1), per_domain),
        &order,
        embedder,
        64,
        BuildMetadata::default(),
    )
    .unwrap()
}

/// `n` pairs, roughly a fifth of them repeats.
pub fn corpus_with_repeats(n: usize) -> Corpus {
    let mut r = rng(2);
    let pairs = (0..n)
        .map(|i| {
            let k = if r.random_bool(0.2) {
                r.random_range(0..=i)
            } else {
                i
            };
            SentencePair::new(
                &format!("source sentence {k}"),
                &format!("abairt {k}"),
                "bench",
                i + 1,
            )
            .unwrap()
        })
        .collect();
    Corpus::new("bench", pairs)
}

/// Normalized pages of `blocks` stacked boxes each.
pub fn block_document(pages: usize, blocks: usize) -> BlockDocument {
    let h = 1.0 / blocks as f64;
    let doc = BlockDocument {
        lang: "en".into(),
        pages: (1..=pages)
            .map(|p| Page {
                width: 1.0,
                height: 1.0,
                blocks: (0..blocks)
                    .map(|k| TextBlock {
                        page: p,
                        bbox: BBox {
                            x0: 0.1,
                            y0: k as f64 * h,
                            x1: 0.9,
                            y1: (k as f64 + 0.8) * h,
                        },
                        text: format!("Block {k}."),
                    })
                    .collect(),
            })
            .collect(),
        normalized: false,
    };
    normalize_blocks(&doc).unwrap()
}
