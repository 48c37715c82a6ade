//! Bilingual document mining from pre-extracted text blocks.
//!
//! Two language versions of the same document share a layout. After each
//! bounding box is divided by its page size, blocks on the same page index are
//! paired greedily by ascending distance between box centers, and pairs
//! farther apart than `tau` are dropped.
//!
//! Input is line-delimited JSON, one block per line:
//! `{page, page_width, page_height, x0, y0, x1, y1, text}` with 1-based pages.

use std::fs;
use std::path::Path;

use regex::Regex;
use serde::{Deserialize, Serialize};

use crate::corpus::{normalize, split_multi_sentence, SentencePair};
use crate::error::{Error, Result};

/// Default match threshold, in unit-square distance.
pub const DEFAULT_TAU: f64 = 0.15;

const BOUNDS_SLACK: f64 = 1e-6;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BBox {
    pub x0: f64,
    pub y0: f64,
    pub x1: f64,
    pub y1: f64,
}

impl BBox {
    pub fn center(&self) -> (f64, f64) {
        ((self.x0 + self.x1) / 2.0, (self.y0 + self.y1) / 2.0)
    }

    fn is_proper(&self) -> bool {
        self.x0 < self.x1 && self.y0 < self.y1
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TextBlock {
    pub page: usize,
    pub bbox: BBox,
    pub text: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Page {
    pub width: f64,
    pub height: f64,
    pub blocks: Vec<TextBlock>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BlockDocument {
    pub lang: String,
    pub pages: Vec<Page>,
    /// Set by [`normalize_blocks`]; coordinates are then in the unit square.
    #[serde(default)]
    pub normalized: bool,
}

impl BlockDocument {
    pub fn block_count(&self) -> usize {
        self.pages.iter().map(|p| p.blocks.len()).sum()
    }
}

/// One line of the block-record input format.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BlockRecord {
    pub page: usize,
    pub page_width: f64,
    pub page_height: f64,
    pub x0: f64,
    pub y0: f64,
    pub x1: f64,
    pub y1: f64,
    pub text: String,
}

/// Parses block records into a document. Blocks whose text is empty after
/// normalization are dropped; the second value counts them.
pub fn parse_block_records(text: &str, lang: &str) -> Result<(BlockDocument, usize)> {
    let mut pages: Vec<Page> = Vec::new();
    let mut dropped = 0;
    for (i, line) in text.lines().enumerate() {
        let line_no = i + 1;
        if line.trim().is_empty() {
            continue;
        }
        let rec: BlockRecord = serde_json::from_str(line).map_err(|e| Error::Parse {
            line: line_no,
            message: e.to_string(),
        })?;
        if rec.page == 0 {
            return Err(Error::Parse {
                line: line_no,
                message: "pages are numbered from 1".into(),
            });
        }
        let bbox = BBox {
            x0: rec.x0,
            y0: rec.y0,
            x1: rec.x1,
            y1: rec.y1,
        };
        if !bbox.is_proper() {
            return Err(Error::Parse {
                line: line_no,
                message: "bounding box needs x0 < x1 and y0 < y1".into(),
            });
        }
        if pages.len() < rec.page {
            pages.resize_with(rec.page, || Page {
                width: f64::NAN,
                height: f64::NAN,
                blocks: Vec::new(),
            });
        }
        let page = &mut pages[rec.page - 1];
        if page.width.is_nan() {
            page.width = rec.page_width;
            page.height = rec.page_height;
        } else if page.width != rec.page_width || page.height != rec.page_height {
            return Err(Error::Parse {
                line: line_no,
                message: format!("page {} has inconsistent dimensions", rec.page),
            });
        }
        let text = normalize(&rec.text);
        if text.is_empty() {
            dropped += 1;
            continue;
        }
        page.blocks.push(TextBlock {
            page: rec.page,
            bbox,
            text,
        });
    }
    for page in &mut pages {
        // pages with no records at all
        if page.width.is_nan() {
            page.width = 1.0;
            page.height = 1.0;
        }
    }
    Ok((
        BlockDocument {
            lang: lang.to_string(),
            pages,
            normalized: false,
        },
        dropped,
    ))
}

pub fn load_block_records(path: &Path, lang: &str) -> Result<(BlockDocument, usize)> {
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    parse_block_records(&text, lang)
}

/// Divides every box by its page size and normalizes block text.
pub fn normalize_blocks(doc: &BlockDocument) -> Result<BlockDocument> {
    if doc.normalized {
        return Ok(doc.clone());
    }
    let mut pages = Vec::with_capacity(doc.pages.len());
    for (p, page) in doc.pages.iter().enumerate() {
        if !(page.width > 0.0 && page.height > 0.0) {
            return Err(Error::Format(format!(
                "page {} has non-positive dimensions {}x{}",
                p + 1,
                page.width,
                page.height
            )));
        }
        let mut blocks = Vec::with_capacity(page.blocks.len());
        for block in &page.blocks {
            let b = BBox {
                x0: block.bbox.x0 / page.width,
                y0: block.bbox.y0 / page.height,
                x1: block.bbox.x1 / page.width,
                y1: block.bbox.y1 / page.height,
            };
            let inside = |v: f64| (-BOUNDS_SLACK..=1.0 + BOUNDS_SLACK).contains(&v);
            if ![b.x0, b.y0, b.x1, b.y1].into_iter().all(inside) {
                return Err(Error::Format(format!(
                    "block {:?} on page {} lies outside the page",
                    block.text,
                    p + 1
                )));
            }
            blocks.push(TextBlock {
                page: block.page,
                bbox: b,
                text: normalize(&block.text),
            });
        }
        pages.push(Page {
            width: 1.0,
            height: 1.0,
            blocks,
        });
    }
    Ok(BlockDocument {
        lang: doc.lang.clone(),
        pages,
        normalized: true,
    })
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct FilterReport {
    pub removed: usize,
    /// Removals credited to each pattern (first matching pattern wins).
    pub per_pattern: Vec<usize>,
}

/// Removes blocks whose entire text matches any of `patterns`.
pub fn filter_blocks(doc: &BlockDocument, patterns: &[String]) -> Result<(BlockDocument, FilterReport)> {
    let compiled = patterns
        .iter()
        .map(|p| {
            Regex::new(&format!("^(?:{p})$"))
                .map_err(|e| Error::Config(format!("invalid ignore pattern {p:?}: {e}")))
        })
        .collect::<Result<Vec<_>>>()?;
    let mut report = FilterReport {
        removed: 0,
        per_pattern: vec![0; compiled.len()],
    };
    let mut out = doc.clone();
    for page in &mut out.pages {
        page.blocks
            .retain(|b| match compiled.iter().position(|re| re.is_match(&b.text)) {
                Some(i) => {
                    report.per_pattern[i] += 1;
                    report.removed += 1;
                    false
                }
                None => true,
            });
    }
    Ok((out, report))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BlockMatch {
    pub page: usize,
    pub source_block: TextBlock,
    pub target_block: TextBlock,
    pub distance: f64,
}

/// Block position as (1-based page, index within the page).
pub type BlockRef = (usize, usize);

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct MatchReport {
    pub matches: Vec<BlockMatch>,
    pub unmatched_source: Vec<BlockRef>,
    pub unmatched_target: Vec<BlockRef>,
    /// Pages beyond the shorter document, per side.
    pub excess_source_pages: usize,
    pub excess_target_pages: usize,
}

fn center_distance(a: &BBox, b: &BBox) -> f64 {
    let (ax, ay) = a.center();
    let (bx, by) = b.center();
    (ax - bx).hypot(ay - by)
}

/// Greedy one-to-one matching by ascending center distance, page by page.
///
/// Matches are returned in page order, then source-block order.
pub fn match_blocks(src: &BlockDocument, tgt: &BlockDocument, tau: f64) -> Result<MatchReport> {
    if !src.normalized || !tgt.normalized {
        return Err(Error::Validation(
            "match_blocks expects normalized documents".into(),
        ));
    }
    if tau.is_nan() || tau < 0.0 {
        return Err(Error::Config(format!("tau must be non-negative, got {tau}")));
    }
    let shared = src.pages.len().min(tgt.pages.len());
    let mut report = MatchReport {
        excess_source_pages: src.pages.len() - shared,
        excess_target_pages: tgt.pages.len() - shared,
        ..MatchReport::default()
    };
    if report.excess_source_pages + report.excess_target_pages > 0 {
        log::warn!(
            "page counts differ ({} vs {}); extra pages are ignored",
            src.pages.len(),
            tgt.pages.len()
        );
    }
    for p in 0..shared {
        let (sb, tb) = (&src.pages[p].blocks, &tgt.pages[p].blocks);
        let mut candidates: Vec<(f64, usize, usize)> = Vec::with_capacity(sb.len() * tb.len());
        for (i, s) in sb.iter().enumerate() {
            for (j, t) in tb.iter().enumerate() {
                let d = center_distance(&s.bbox, &t.bbox);
                if d <= tau {
                    candidates.push((d, i, j));
                }
            }
        }
        candidates.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)).then(a.2.cmp(&b.2)));
        let mut src_used = vec![false; sb.len()];
        let mut tgt_used = vec![false; tb.len()];
        let mut page_matches = Vec::new();
        for (d, i, j) in candidates {
            if src_used[i] || tgt_used[j] {
                continue;
            }
            src_used[i] = true;
            tgt_used[j] = true;
            page_matches.push((i, j, d));
        }
        page_matches.sort_by_key(|&(i, _, _)| i);
        report
            .matches
            .extend(page_matches.into_iter().map(|(i, j, d)| BlockMatch {
                page: p + 1,
                source_block: sb[i].clone(),
                target_block: tb[j].clone(),
                distance: d,
            }));
        report.unmatched_source.extend(
            src_used
                .iter()
                .enumerate()
                .filter(|(_, u)| !**u)
                .map(|(i, _)| (p + 1, i)),
        );
        report.unmatched_target.extend(
            tgt_used
                .iter()
                .enumerate()
                .filter(|(_, u)| !**u)
                .map(|(j, _)| (p + 1, j)),
        );
    }
    Ok(report)
}

/// Turns matched blocks into sentence pairs, splitting a block into sentences
/// when both sides have the same number of them. `line_no` is the 1-based
/// match ordinal.
pub fn matches_to_pairs(matches: &[BlockMatch], origin: &str) -> Vec<SentencePair> {
    matches
        .iter()
        .enumerate()
        .filter_map(|(k, m)| SentencePair::new(&m.source_block.text, &m.target_block.text, origin, k + 1))
        .flat_map(|pair| split_multi_sentence(&pair))
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn block(page: usize, x0: f64, y0: f64, x1: f64, y1: f64, text: &str) -> TextBlock {
        TextBlock {
            page,
            bbox: BBox { x0, y0, x1, y1 },
            text: text.into(),
        }
    }

    fn doc(w: f64, h: f64, blocks: Vec<TextBlock>) -> BlockDocument {
        BlockDocument {
            lang: "en".into(),
            pages: vec![Page {
                width: w,
                height: h,
                blocks,
            }],
            normalized: false,
        }
    }

    #[test]
    fn normalize_full_and_quarter_boxes() {
        let d = doc(
            600.0,
            800.0,
            vec![
                block(1, 0.0, 0.0, 600.0, 800.0, "all"),
                block(1, 300.0, 0.0, 600.0, 400.0, "quarter"),
            ],
        );
        let n = normalize_blocks(&d).unwrap();
        assert_eq!(
            n.pages[0].blocks[0].bbox,
            BBox {
                x0: 0.0,
                y0: 0.0,
                x1: 1.0,
                y1: 1.0
            }
        );
        assert_eq!(
            n.pages[0].blocks[1].bbox,
            BBox {
                x0: 0.5,
                y0: 0.0,
                x1: 1.0,
                y1: 0.5
            }
        );
        assert!(n.normalized);
    }

    #[test]
    fn normalize_three_block_fixture() {
        let d = doc(
            612.0,
            792.0,
            vec![
                block(1, 72.0, 72.0, 540.0, 108.0, "Question 1"),
                block(1, 72.0, 144.0, 306.0, 396.0, "left column"),
                block(1, 306.0, 144.0, 540.0, 396.0, "right column"),
            ],
        );
        let n = normalize_blocks(&d).unwrap();
        let expect = [
            (72.0 / 612.0, 72.0 / 792.0, 540.0 / 612.0, 108.0 / 792.0),
            (72.0 / 612.0, 144.0 / 792.0, 0.5, 0.5),
            (0.5, 144.0 / 792.0, 540.0 / 612.0, 0.5),
        ];
        for (b, e) in n.pages[0].blocks.iter().zip(expect) {
            assert_eq!((b.bbox.x0, b.bbox.y0, b.bbox.x1, b.bbox.y1), e);
        }
    }

    #[test]
    fn normalize_rejects_zero_page() {
        let d = doc(0.0, 800.0, vec![]);
        assert_eq!(normalize_blocks(&d).unwrap_err().category(), "format");
    }

    #[test]
    fn filter_examples() {
        let d = doc(
            1.0,
            1.0,
            vec![
                block(1, 0.0, 0.0, 1.0, 0.1, "Leaving Certificate Examination 2019"),
                block(1, 0.0, 0.1, 1.0, 0.2, "Page header"),
                block(1, 0.0, 0.2, 1.0, 0.8, "Answer all questions. Write clearly."),
                block(1, 0.0, 0.9, 1.0, 1.0, "12"),
            ],
        );
        let (out, report) = filter_blocks(&d, &[r"\d+".into()]).unwrap();
        assert_eq!(report.removed, 1);
        assert_eq!(out.block_count(), 3);

        let (out, _) = filter_blocks(&d, &[]).unwrap();
        assert_eq!(out, d);

        let headers = vec!["Leaving Certificate.*".to_string(), "Page header".to_string()];
        let (out, report) = filter_blocks(&d, &headers).unwrap();
        assert_eq!(report.per_pattern, vec![1, 1]);
        assert_eq!(
            out.pages[0]
                .blocks
                .iter()
                .map(|b| b.text.as_str())
                .collect::<Vec<_>>(),
            vec!["Answer all questions. Write clearly.", "12"]
        );

        assert_eq!(filter_blocks(&d, &["(".into()]).unwrap_err().category(), "config");
    }

    #[test]
    fn identical_layouts_match_at_zero() {
        let d = normalize_blocks(&doc(
            10.0,
            10.0,
            vec![
                block(1, 0.0, 0.0, 5.0, 2.0, "a"),
                block(1, 5.0, 0.0, 10.0, 2.0, "b"),
                block(1, 0.0, 5.0, 10.0, 9.0, "c"),
            ],
        ))
        .unwrap();
        let r = match_blocks(&d, &d, DEFAULT_TAU).unwrap();
        assert_eq!(r.matches.len(), 3);
        for m in &r.matches {
            assert_eq!(m.distance, 0.0);
            assert_eq!(m.source_block, m.target_block);
        }
    }

    #[test]
    fn threshold_rejects_distant_pair() {
        let s = normalize_blocks(&doc(1.0, 1.0, vec![block(1, 0.0, 0.0, 0.2, 0.2, "a")])).unwrap();
        let t = normalize_blocks(&doc(1.0, 1.0, vec![block(1, 0.2, 0.0, 0.4, 0.2, "b")])).unwrap();
        let r = match_blocks(&s, &t, 0.15).unwrap();
        assert!(r.matches.is_empty());
        assert_eq!(r.unmatched_source, vec![(1, 0)]);
        assert_eq!(r.unmatched_target, vec![(1, 0)]);
    }

    #[test]
    fn excess_pages_reported() {
        let s = normalize_blocks(&doc(1.0, 1.0, vec![block(1, 0.0, 0.0, 0.5, 0.5, "a")])).unwrap();
        let mut t = s.clone();
        t.pages.push(Page {
            width: 1.0,
            height: 1.0,
            blocks: vec![],
        });
        let r = match_blocks(&s, &t, 0.15).unwrap();
        assert_eq!((r.excess_source_pages, r.excess_target_pages), (0, 1));
        assert_eq!(r.matches.len(), 1);
    }

    #[test]
    fn unnormalized_input_is_refused() {
        let d = doc(1.0, 1.0, vec![]);
        assert!(match_blocks(&d, &d, 0.15).is_err());
    }

    fn bm(s: &str, t: &str) -> BlockMatch {
        BlockMatch {
            page: 1,
            source_block: block(1, 0.0, 0.0, 1.0, 1.0, s),
            target_block: block(1, 0.0, 0.0, 1.0, 1.0, t),
            distance: 0.0,
        }
    }

    #[test]
    fn pairs_from_matches() {
        let pairs = matches_to_pairs(&[bm("A. B.", "X. Y.")], "SEC");
        assert_eq!(pairs.len(), 2);
        assert_eq!(
            (pairs[0].source_text.as_str(), pairs[0].target_text.as_str()),
            ("A.", "X.")
        );
        assert_eq!(
            (pairs[1].source_text.as_str(), pairs[1].target_text.as_str()),
            ("B.", "Y.")
        );

        let pairs = matches_to_pairs(&[bm("One. Two.", "Aon. Dó. Trí.")], "SEC");
        assert_eq!(pairs.len(), 1);
        assert_eq!(pairs[0].target_text, "Aon. Dó. Trí.");

        assert!(matches_to_pairs(&[], "SEC").is_empty());
    }

    #[test]
    fn records_parse_and_group() {
        let text = concat!(
            r#"{"page":2,"page_width":100,"page_height":200,"x0":0,"y0":0,"x1":50,"y1":20,"text":"Ceist  2"}"#,
            "\n",
            r#"{"page":1,"page_width":100,"page_height":200,"x0":0,"y0":0,"x1":50,"y1":20,"text":"Ceist 1"}"#,
            "\n",
            r#"{"page":1,"page_width":100,"page_height":200,"x0":0,"y0":30,"x1":50,"y1":40,"text":"   "}"#,
            "\n",
        );
        let (d, dropped) = parse_block_records(text, "ga").unwrap();
        assert_eq!(d.pages.len(), 2);
        assert_eq!(d.pages[1].blocks[0].text, "Ceist 2");
        assert_eq!(dropped, 1);

        let bad = r#"{"page":1,"page_width":1,"page_height":1,"x0":0.5,"y0":0,"x1":0.2,"y1":1,"text":"x"}"#;
        assert!(matches!(
            parse_block_records(bad, "ga"),
            Err(Error::Parse { line: 1, .. })
        ));
    }
}
