use std::fmt;

use serde::{Deserialize, Serialize};

/// A domain name such as `legal`. Ordering of domains is carried by the
/// surrounding configuration, never by the label itself.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(transparent)]
pub struct DomainLabel(String);

impl DomainLabel {
    pub fn new(name: impl Into<String>) -> Self {
        Self(name.into())
    }

    pub fn as_str(&self) -> &str {
        &self.0
    }
}

impl fmt::Display for DomainLabel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

impl From<&str> for DomainLabel {
    fn from(s: &str) -> Self {
        Self::new(s)
    }
}

impl From<String> for DomainLabel {
    fn from(s: String) -> Self {
        Self(s)
    }
}

pub const GENERAL: &str = "general";
pub const LEGAL: &str = "legal";
pub const MEDICAL: &str = "medical";
pub const WIKI_NEWS: &str = "wiki_news";

/// The four domains used by default, in tie-breaking order.
pub fn default_domains() -> Vec<DomainLabel> {
    [GENERAL, LEGAL, MEDICAL, WIKI_NEWS]
        .into_iter()
        .map(DomainLabel::from)
        .collect()
}

/// `labels` as domains, preserving order.
pub fn domains<I, S>(labels: I) -> Vec<DomainLabel>
where
    I: IntoIterator<Item = S>,
    S: Into<String>,
{
    labels.into_iter().map(|s| DomainLabel::new(s)).collect()
}

impl std::borrow::Borrow<str> for DomainLabel {
    fn borrow(&self) -> &str {
        &self.0
    }
}
