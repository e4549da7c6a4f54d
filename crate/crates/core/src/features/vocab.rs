use std::collections::{BTreeMap, HashMap};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use super::tokenize::TokenSequence;
use crate::error::{Error, Result};

/// Unigram and bigram universe. Unigrams are indexed `0..U` and bigrams
/// `0..B`, each block in lexicographic order. Frozen once built.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(from = "VocabularyData", into = "VocabularyData")]
pub struct Vocabulary {
    unigrams: Vec<String>,
    bigrams: Vec<(String, String)>,
    unigram_index: HashMap<String, usize>,
}

#[derive(Serialize, Deserialize)]
struct VocabularyData {
    unigrams: Vec<String>,
    bigrams: Vec<(String, String)>,
}

impl From<VocabularyData> for Vocabulary {
    fn from(d: VocabularyData) -> Self {
        Vocabulary::from_terms(d.unigrams, d.bigrams)
    }
}

impl From<Vocabulary> for VocabularyData {
    fn from(v: Vocabulary) -> Self {
        VocabularyData {
            unigrams: v.unigrams,
            bigrams: v.bigrams,
        }
    }
}

impl Vocabulary {
    fn from_terms(unigrams: Vec<String>, bigrams: Vec<(String, String)>) -> Self {
        let unigram_index = unigrams.iter().enumerate().map(|(i, t)| (t.clone(), i)).collect();
        Vocabulary {
            unigrams,
            bigrams,
            unigram_index,
        }
    }

    pub fn unigram_count(&self) -> usize {
        self.unigrams.len()
    }

    pub fn bigram_count(&self) -> usize {
        self.bigrams.len()
    }

    pub fn unigrams(&self) -> &[String] {
        &self.unigrams
    }

    pub fn bigrams(&self) -> &[(String, String)] {
        &self.bigrams
    }

    pub fn unigram(&self, term: &str) -> Option<usize> {
        self.unigram_index.get(term).copied()
    }

    pub fn bigram(&self, first: &str, second: &str) -> Option<usize> {
        // sorted, so no second map is needed
        self.bigrams
            .binary_search_by(|(a, b)| (a.as_str(), b.as_str()).cmp(&(first, second)))
            .ok()
    }

    /// Hex SHA-256 over the ordered term lists.
    pub fn fingerprint(&self) -> String {
        let mut h = Sha256::new();
        for u in &self.unigrams {
            h.update(b"u\0");
            h.update(u.as_bytes());
            h.update(b"\0");
        }
        for (a, b) in &self.bigrams {
            h.update(b"b\0");
            h.update(a.as_bytes());
            h.update(b"\0");
            h.update(b.as_bytes());
            h.update(b"\0");
        }
        hex::encode(h.finalize())
    }
}

/// Collects every unigram and bigram seen at least `min_count` times.
pub fn fit_vocabulary(corpus: &[TokenSequence], min_count: usize) -> Result<Vocabulary> {
    if corpus.is_empty() {
        return Err(Error::EmptyCorpus);
    }
    let min_count = min_count.max(1);
    let mut uni: BTreeMap<&str, usize> = BTreeMap::new();
    let mut bi: BTreeMap<(&str, &str), usize> = BTreeMap::new();
    for doc in corpus {
        for t in doc {
            *uni.entry(t.as_str()).or_default() += 1;
        }
        for pair in doc.bigrams() {
            *bi.entry(pair).or_default() += 1;
        }
    }
    let unigrams = uni
        .into_iter()
        .filter(|&(_, c)| c >= min_count)
        .map(|(t, _)| t.to_owned())
        .collect();
    let bigrams = bi
        .into_iter()
        .filter(|&(_, c)| c >= min_count)
        .map(|((a, b), _)| (a.to_owned(), b.to_owned()))
        .collect();
    Ok(Vocabulary::from_terms(unigrams, bigrams))
}
