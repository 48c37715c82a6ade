//! Semi-supervised domain routing for machine translation.
//!
//! Training data is labeled by a zero-shot classifier ([`labeler`]), each
//! domain's source sentences are averaged into an embedding centroid
//! ([`centroids`]), and at inference every input goes to the domain whose
//! centroid is closest by cosine similarity. Around that core sit corpus
//! preparation ([`corpus`]), bilingual block mining ([`blockalign`]) and
//! domain-stratified BLEU ([`eval`]).

pub mod blockalign;
pub mod centroids;
pub mod corpus;
pub mod domain;
pub mod error;
pub mod eval;
pub mod labeler;
pub mod records;

pub use centroids::{
    build_index, cosine, embed_mock, load_index, route, route_batch, route_embedding, save_index,
    BuildMetadata, CentroidEntry, CentroidIndex, EmbedderClient, EmbeddingVector, MockEmbedder,
    RoutingDecision,
};
pub use corpus::{Corpus, CorpusStats, SentencePair, SplitSpec};
pub use domain::{default_domains, DomainLabel};
pub use error::{Error, Result};
pub use eval::{BleuScore, EvalReport, RoutingMode, Smoothing};
pub use labeler::{Classification, ClassifierClient, LabeledPair, LabelerConfig, MockClassifier, Regime};
