//! Domain centroids and cosine routing.
//!
//! A [`CentroidIndex`] holds, per domain, the mean of the unit-normalized
//! source-side embeddings of that domain's training pairs. At inference an
//! input is embedded with the same embedder and sent to the domain whose
//! centroid has the highest cosine similarity. No classifier runs at
//! inference time.
//!
//! # Index file layout
//!
//! ```text
//! 0   8 bytes   magic "SRCIDX\r\n"
//! 8   u32 LE    format version (currently 1)
//! 12  u32 LE    header length H
//! 16  H bytes   UTF-8 JSON header:
//!               {embedder_id, dim, build_metadata, domains: [{name, count}]}
//! ..  per domain, in header order: dim x f32 LE (IEEE-754 bits, lossless)
//! ```

use std::fs;
use std::path::Path;

use indexmap::IndexMap;
use serde::{Deserialize, Serialize};

use crate::domain::DomainLabel;
use crate::error::{Error, Result};
use crate::labeler::LabeledPair;

/// A finite, non-empty `f32` vector.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "Vec<f32>", into = "Vec<f32>")]
pub struct EmbeddingVector(Vec<f32>);

impl EmbeddingVector {
    pub fn new(values: Vec<f32>) -> Result<Self> {
        if values.is_empty() {
            return Err(Error::Validation("embedding has no components".into()));
        }
        if values.iter().any(|v| !v.is_finite()) {
            return Err(Error::Validation("embedding has non-finite components".into()));
        }
        Ok(Self(values))
    }

    pub fn dim(&self) -> usize {
        self.0.len()
    }

    pub fn values(&self) -> &[f32] {
        &self.0
    }

    pub fn norm(&self) -> f64 {
        self.0
            .iter()
            .map(|&v| f64::from(v) * f64::from(v))
            .sum::<f64>()
            .sqrt()
    }

    /// Component-wise multiple; `None` if the result would overflow.
    pub fn scaled(&self, k: f32) -> Option<Self> {
        Self::new(self.0.iter().map(|v| v * k).collect()).ok()
    }
}

impl TryFrom<Vec<f32>> for EmbeddingVector {
    type Error = Error;

    fn try_from(values: Vec<f32>) -> Result<Self> {
        Self::new(values)
    }
}

impl From<EmbeddingVector> for Vec<f32> {
    fn from(v: EmbeddingVector) -> Self {
        v.0
    }
}

/// Sentence embedder. The id must change whenever the vector space does.
pub trait EmbedderClient: Send + Sync {
    fn id(&self) -> String;

    fn embed(&self, texts: &[&str]) -> Result<Vec<EmbeddingVector>>;
}

impl<T: EmbedderClient + ?Sized> EmbedderClient for std::sync::Arc<T> {
    fn id(&self) -> String {
        (**self).id()
    }

    fn embed(&self, texts: &[&str]) -> Result<Vec<EmbeddingVector>> {
        (**self).embed(texts)
    }
}

const FNV_OFFSET: u64 = 0xcbf2_9ce4_8422_2325;
const FNV_PRIME: u64 = 0x0000_0100_0000_01b3;

fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// Hash of `(seed, token, component)` mapped onto `[-1, 1)`.
///
/// FNV-1a over `seed (LE) || token bytes || 0xFF || component (LE)`, finished
/// with the splitmix64 mixer; the top 53 bits become a unit fraction.
fn pseudo_component(seed: u64, token: &str, component: u64) -> f64 {
    let mut h = FNV_OFFSET;
    let bytes = seed
        .to_le_bytes()
        .into_iter()
        .chain(token.bytes())
        .chain(std::iter::once(0xff))
        .chain(component.to_le_bytes());
    for b in bytes {
        h ^= u64::from(b);
        h = h.wrapping_mul(FNV_PRIME);
    }
    let unit = (splitmix64(h) >> 11) as f64 / (1u64 << 53) as f64;
    unit * 2.0 - 1.0
}

/// Deterministic bag-of-tokens embedding for tests and offline runs.
///
/// Each whitespace token gets a pseudo-random vector; the output is the
/// L2-normalized mean of those vectors.
pub fn embed_mock(text: &str, dim: usize, seed: u64) -> Result<EmbeddingVector> {
    if dim < 2 {
        return Err(Error::Validation(format!(
            "mock embedding dim must be >= 2, got {dim}"
        )));
    }
    let tokens: Vec<&str> = text.split_whitespace().collect();
    if tokens.is_empty() {
        return Err(Error::Degenerate("cannot embed empty text".into()));
    }
    let mut acc = vec![0f64; dim];
    for token in &tokens {
        for (i, slot) in acc.iter_mut().enumerate() {
            *slot += pseudo_component(seed, token, i as u64);
        }
    }
    let n = tokens.len() as f64;
    acc.iter_mut().for_each(|v| *v /= n);
    let norm = acc.iter().map(|v| v * v).sum::<f64>().sqrt();
    if norm == 0.0 {
        return Err(Error::Degenerate(format!("token vectors of {text:?} cancel out")));
    }
    EmbeddingVector::new(acc.iter().map(|v| (v / norm) as f32).collect())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct MockEmbedder {
    pub dim: usize,
    pub seed: u64,
}

impl MockEmbedder {
    pub fn new(dim: usize, seed: u64) -> Self {
        Self { dim, seed }
    }
}

impl EmbedderClient for MockEmbedder {
    fn id(&self) -> String {
        format!("mock:dim={}:seed={}", self.dim, self.seed)
    }

    fn embed(&self, texts: &[&str]) -> Result<Vec<EmbeddingVector>> {
        texts.iter().map(|t| embed_mock(t, self.dim, self.seed)).collect()
    }
}

/// Cosine similarity, clamped to `[-1, 1]`.
pub fn cosine(a: &EmbeddingVector, b: &EmbeddingVector) -> Result<f64> {
    if a.dim() != b.dim() {
        return Err(Error::DimensionMismatch {
            expected: a.dim(),
            found: b.dim(),
        });
    }
    let (na, nb) = (a.norm(), b.norm());
    if na == 0.0 || nb == 0.0 {
        return Err(Error::Degenerate("cosine of a zero-norm vector".into()));
    }
    let dot: f64 = a
        .values()
        .iter()
        .zip(b.values())
        .map(|(&x, &y)| f64::from(x) * f64::from(y))
        .sum();
    Ok((dot / (na * nb)).clamp(-1.0, 1.0))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CentroidEntry {
    pub domain: DomainLabel,
    pub centroid: EmbeddingVector,
    pub count: usize,
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct BuildMetadata {
    pub regime: Option<String>,
    pub seed: Option<u64>,
    pub timestamp: Option<String>,
    pub config_id: Option<String>,
}

/// Per-domain centroids. Entry order is the tie-breaking order for routing.
#[derive(Debug, Clone, PartialEq)]
pub struct CentroidIndex {
    embedder_id: String,
    dim: usize,
    entries: Vec<CentroidEntry>,
    pub build_metadata: BuildMetadata,
}

impl CentroidIndex {
    /// Checks the index invariants: at least one entry, shared dim, positive
    /// counts, non-zero centroids, unique domains.
    pub fn new(
        embedder_id: impl Into<String>,
        entries: Vec<CentroidEntry>,
        build_metadata: BuildMetadata,
    ) -> Result<Self> {
        let first = entries
            .first()
            .ok_or_else(|| Error::Validation("centroid index needs at least one domain".into()))?;
        let dim = first.centroid.dim();
        for (i, e) in entries.iter().enumerate() {
            if e.centroid.dim() != dim {
                return Err(Error::DimensionMismatch {
                    expected: dim,
                    found: e.centroid.dim(),
                });
            }
            if e.count == 0 {
                return Err(Error::Validation(format!("domain `{}` has zero count", e.domain)));
            }
            if e.centroid.norm() == 0.0 {
                return Err(Error::DegenerateCentroid(e.domain.to_string()));
            }
            if entries[..i].iter().any(|o| o.domain == e.domain) {
                return Err(Error::Validation(format!("domain `{}` appears twice", e.domain)));
            }
        }
        Ok(Self {
            embedder_id: embedder_id.into(),
            dim,
            entries,
            build_metadata,
        })
    }

    pub fn embedder_id(&self) -> &str {
        &self.embedder_id
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn entries(&self) -> &[CentroidEntry] {
        &self.entries
    }

    pub fn domains(&self) -> impl Iterator<Item = &DomainLabel> {
        self.entries.iter().map(|e| &e.domain)
    }

    pub fn get(&self, domain: &DomainLabel) -> Option<&CentroidEntry> {
        self.entries.iter().find(|e| &e.domain == domain)
    }
}

/// Builds centroids from the source side of `labeled`.
///
/// Domains follow `domain_order`; labels not listed there are appended in
/// order of first appearance. Listed domains without pairs are skipped.
pub fn build_index(
    labeled: &[LabeledPair],
    domain_order: &[DomainLabel],
    embedder: &dyn EmbedderClient,
    batch_size: usize,
    build_metadata: BuildMetadata,
) -> Result<CentroidIndex> {
    let mut order: Vec<DomainLabel> = domain_order.to_vec();
    for lp in labeled {
        if !order.contains(&lp.domain) {
            order.push(lp.domain.clone());
        }
    }
    let mut sums: IndexMap<DomainLabel, (Vec<f64>, usize)> =
        order.iter().map(|d| (d.clone(), (Vec::new(), 0))).collect();
    let mut dim: Option<usize> = None;

    for chunk in labeled.chunks(batch_size.max(1)) {
        let texts: Vec<&str> = chunk.iter().map(|lp| lp.pair.source_text.as_str()).collect();
        let vectors = embedder.embed(&texts)?;
        if vectors.len() != chunk.len() {
            return Err(Error::Embedder(format!(
                "expected {} vectors, got {}",
                chunk.len(),
                vectors.len()
            )));
        }
        for (lp, v) in chunk.iter().zip(vectors) {
            let d = *dim.get_or_insert(v.dim());
            if v.dim() != d {
                return Err(Error::DimensionMismatch {
                    expected: d,
                    found: v.dim(),
                });
            }
            let norm = v.norm();
            if norm == 0.0 {
                return Err(Error::Degenerate(format!(
                    "zero embedding for {:?}",
                    lp.pair.source_text
                )));
            }
            let (sum, count) = &mut sums[&lp.domain];
            if sum.is_empty() {
                sum.resize(d, 0.0);
            }
            for (s, &x) in sum.iter_mut().zip(v.values()) {
                *s += f64::from(x) / norm;
            }
            *count += 1;
        }
    }

    let mut entries = Vec::new();
    for (domain, (sum, count)) in sums {
        if count == 0 {
            log::warn!("domain `{domain}` has no training pairs; omitted from the index");
            continue;
        }
        let mean: Vec<f32> = sum.iter().map(|s| (s / count as f64) as f32).collect();
        let centroid = EmbeddingVector::new(mean)?;
        if centroid.norm() == 0.0 {
            return Err(Error::DegenerateCentroid(domain.to_string()));
        }
        entries.push(CentroidEntry {
            domain,
            centroid,
            count,
        });
    }
    CentroidIndex::new(embedder.id(), entries, build_metadata)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RoutingDecision {
    pub chosen: DomainLabel,
    pub similarities: IndexMap<DomainLabel, f64>,
    /// Best minus second-best similarity; 0 for a single-domain index.
    pub margin: f64,
}

/// Routes an already-embedded input. Ties go to the earlier index entry.
pub fn route_embedding(query: &EmbeddingVector, index: &CentroidIndex) -> Result<RoutingDecision> {
    if query.dim() != index.dim() {
        return Err(Error::DimensionMismatch {
            expected: index.dim(),
            found: query.dim(),
        });
    }
    let sims = index
        .entries
        .iter()
        .map(|e| cosine(query, &e.centroid))
        .collect::<Result<Vec<f64>>>()?;
    let mut best = 0;
    for (i, &s) in sims.iter().enumerate().skip(1) {
        if s > sims[best] {
            best = i;
        }
    }
    let runner_up = sims
        .iter()
        .enumerate()
        .filter(|&(i, _)| i != best)
        .map(|(_, &s)| s)
        .fold(None, |acc: Option<f64>, s| Some(acc.map_or(s, |a| a.max(s))));
    Ok(RoutingDecision {
        chosen: index.entries[best].domain.clone(),
        margin: runner_up.map_or(0.0, |r| sims[best] - r),
        similarities: index
            .entries
            .iter()
            .map(|e| e.domain.clone())
            .zip(sims.iter().copied())
            .collect(),
    })
}

fn check_embedder(index: &CentroidIndex, embedder: &dyn EmbedderClient) -> Result<()> {
    let id = embedder.id();
    if id != index.embedder_id {
        return Err(Error::EmbedderMismatch {
            index: index.embedder_id.clone(),
            embedder: id,
        });
    }
    Ok(())
}

pub fn route(text: &str, index: &CentroidIndex, embedder: &dyn EmbedderClient) -> Result<RoutingDecision> {
    route_batch(&[text], index, embedder)?
        .pop()
        .ok_or_else(|| Error::Embedder("embedder returned no vectors".into()))
}

/// Embeds `texts` in one call and routes each.
pub fn route_batch(
    texts: &[&str],
    index: &CentroidIndex,
    embedder: &dyn EmbedderClient,
) -> Result<Vec<RoutingDecision>> {
    check_embedder(index, embedder)?;
    if let Some(i) = texts.iter().position(|t| t.trim().is_empty()) {
        return Err(Error::Validation(format!("text {i} is empty")));
    }
    let vectors = embedder.embed(texts)?;
    if vectors.len() != texts.len() {
        return Err(Error::Embedder(format!(
            "expected {} vectors, got {}",
            texts.len(),
            vectors.len()
        )));
    }
    vectors.iter().map(|v| route_embedding(v, index)).collect()
}

const MAGIC: &[u8; 8] = b"SRCIDX\r\n";
pub const FORMAT_VERSION: u32 = 1;

#[derive(Serialize, Deserialize)]
struct HeaderDomain {
    name: DomainLabel,
    count: usize,
}

#[derive(Serialize, Deserialize)]
struct Header {
    embedder_id: String,
    dim: usize,
    build_metadata: BuildMetadata,
    domains: Vec<HeaderDomain>,
}

impl CentroidIndex {
    pub fn to_bytes(&self) -> Vec<u8> {
        let header = Header {
            embedder_id: self.embedder_id.clone(),
            dim: self.dim,
            build_metadata: self.build_metadata.clone(),
            domains: self
                .entries
                .iter()
                .map(|e| HeaderDomain {
                    name: e.domain.clone(),
                    count: e.count,
                })
                .collect(),
        };
        let header = serde_json::to_vec(&header).expect("header serializes");
        let mut out = Vec::with_capacity(16 + header.len() + 4 * self.dim * self.entries.len());
        out.extend_from_slice(MAGIC);
        out.extend_from_slice(&FORMAT_VERSION.to_le_bytes());
        out.extend_from_slice(&(header.len() as u32).to_le_bytes());
        out.extend_from_slice(&header);
        for e in &self.entries {
            for v in e.centroid.values() {
                out.extend_from_slice(&v.to_le_bytes());
            }
        }
        out
    }

    pub fn from_bytes(bytes: &[u8]) -> Result<Self> {
        let fail = |m: &str| Error::Format(m.to_string());
        if bytes.len() < 16 || &bytes[..8] != MAGIC {
            return Err(fail("bad magic bytes"));
        }
        let word = |at: usize| u32::from_le_bytes(bytes[at..at + 4].try_into().unwrap());
        let version = word(8);
        if version != FORMAT_VERSION {
            return Err(Error::Format(format!(
                "unsupported format version {version} (expected {FORMAT_VERSION})"
            )));
        }
        let header_len = word(12) as usize;
        let body_start = 16usize
            .checked_add(header_len)
            .filter(|&e| e <= bytes.len())
            .ok_or_else(|| fail("truncated header"))?;
        let header: Header = serde_json::from_slice(&bytes[16..body_start])
            .map_err(|e| Error::Format(format!("header: {e}")))?;
        let body = &bytes[body_start..];
        let expected = header.dim * header.domains.len() * 4;
        if header.dim == 0 || body.len() != expected {
            return Err(Error::Format(format!(
                "dim mismatch: header declares {} x {} values, body holds {} bytes",
                header.domains.len(),
                header.dim,
                body.len()
            )));
        }
        let entries = header
            .domains
            .into_iter()
            .zip(body.chunks_exact(header.dim * 4))
            .map(|(d, raw)| {
                let values = raw
                    .chunks_exact(4)
                    .map(|b| f32::from_le_bytes(b.try_into().unwrap()))
                    .collect();
                Ok(CentroidEntry {
                    domain: d.name,
                    centroid: EmbeddingVector::new(values).map_err(|e| Error::Format(e.to_string()))?,
                    count: d.count,
                })
            })
            .collect::<Result<Vec<_>>>()?;
        Self::new(header.embedder_id, entries, header.build_metadata)
            .map_err(|e| Error::Format(e.to_string()))
    }
}

pub fn save_index(index: &CentroidIndex, path: &Path) -> Result<()> {
    fs::write(path, index.to_bytes()).map_err(|e| Error::io(path, e))
}

pub fn load_index(path: &Path) -> Result<CentroidIndex> {
    let bytes = fs::read(path).map_err(|e| Error::io(path, e))?;
    CentroidIndex::from_bytes(&bytes)
}
