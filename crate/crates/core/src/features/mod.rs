//! Lexical feature families and feature-vector assembly.
//!
//! Feature sets:
//!
//! | set | blocks |
//! |-----|--------|
//! | f1  | unigram counts |
//! | f2  | bigram counts |
//! | f3  | unigram + bigram counts |
//! | f4  | f3 + MISC (punctuation, POS frequencies, polarity triple, twitter counts) |
//! | f5  | document embedding |
//! | f6  | document embedding + topic proportions |
//!
//! f5 and f6 need fitted embedding/topic models and are assembled by
//! [`crate::pipeline::Featurizer`].

mod lexicon;
mod pos;
mod tokenize;
mod vocab;

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

pub use lexicon::{dal_features, DalFeatures, PolarityLexicon, NEGATIVE_THRESHOLD, POSITIVE_THRESHOLD};
pub use pos::{tag_pos, PosTag, PosTagger, RuleTagger};
pub use tokenize::{is_hashtag, is_punctuation, tokenize, TokenSequence};
pub use vocab::{fit_vocabulary, Vocabulary};

use crate::error::{Error, Result};
use crate::sparse::SparseVector;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum FeatureSet {
    F1,
    F2,
    F3,
    F4,
    F5,
    F6,
}

impl FeatureSet {
    pub fn uses_unigrams(self) -> bool {
        matches!(self, FeatureSet::F1 | FeatureSet::F3 | FeatureSet::F4)
    }

    pub fn uses_bigrams(self) -> bool {
        matches!(self, FeatureSet::F2 | FeatureSet::F3 | FeatureSet::F4)
    }

    pub fn uses_misc(self) -> bool {
        self == FeatureSet::F4
    }

    pub fn uses_embeddings(self) -> bool {
        matches!(self, FeatureSet::F5 | FeatureSet::F6)
    }

    pub fn uses_topics(self) -> bool {
        self == FeatureSet::F6
    }

    pub fn is_lexical(self) -> bool {
        !self.uses_embeddings()
    }
}

impl fmt::Display for FeatureSet {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            FeatureSet::F1 => "f1",
            FeatureSet::F2 => "f2",
            FeatureSet::F3 => "f3",
            FeatureSet::F4 => "f4",
            FeatureSet::F5 => "f5",
            FeatureSet::F6 => "f6",
        };
        f.write_str(s)
    }
}

impl FromStr for FeatureSet {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "f1" => Ok(FeatureSet::F1),
            "f2" => Ok(FeatureSet::F2),
            "f3" => Ok(FeatureSet::F3),
            "f4" => Ok(FeatureSet::F4),
            "f5" => Ok(FeatureSet::F5),
            "f6" => Ok(FeatureSet::F6),
            _ => Err(Error::UnknownFeatureSet(s.to_string())),
        }
    }
}

/// Punctuation symbol classes counted in the MISC block.
pub const PUNCT_CLASSES: [&str; 8] = [
    "exclamation",
    "question",
    "period",
    "comma",
    "colon",
    "quote",
    "dash",
    "other",
];

fn punct_class(c: char) -> usize {
    match c {
        '!' => 0,
        '?' => 1,
        '.' | '…' => 2,
        ',' => 3,
        ':' | ';' => 4,
        '"' | '\'' | '“' | '”' | '‘' | '’' | '`' => 5,
        '-' | '\u{2013}' | '\u{2014}' => 6,
        _ => 7,
    }
}

pub const DAL_DIM: usize = 3;
pub const TWITTER_DIM: usize = 3;

/// A named slice of the feature space.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct FeatureBlock {
    pub name: String,
    pub offset: usize,
    pub dim: usize,
}

/// Ordered, non-overlapping blocks that make up one feature set's space.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct FeatureRegistry {
    pub feature_set: FeatureSet,
    pub blocks: Vec<FeatureBlock>,
    pub dimension: usize,
    pub vocabulary_hash: String,
}

impl FeatureRegistry {
    /// `doc_dim` / `topic_dim` are only read for f5 and f6.
    pub fn new(set: FeatureSet, vocab: &Vocabulary, doc_dim: usize, topic_dim: usize) -> Self {
        let (blocks, dimension) = Self::layout(set, vocab, doc_dim, topic_dim);
        FeatureRegistry {
            feature_set: set,
            blocks,
            dimension,
            vocabulary_hash: vocab.fingerprint(),
        }
    }

    /// Block layout without the vocabulary hash, which is costly to compute.
    fn layout(set: FeatureSet, vocab: &Vocabulary, doc_dim: usize, topic_dim: usize) -> (Vec<FeatureBlock>, usize) {
        let mut blocks = Vec::new();
        let mut offset = 0;
        let mut push = |name: &str, dim: usize| {
            blocks.push(FeatureBlock {
                name: name.to_string(),
                offset,
                dim,
            });
            offset += dim;
        };
        if set.uses_unigrams() {
            push("unigram", vocab.unigram_count());
        }
        if set.uses_bigrams() {
            push("bigram", vocab.bigram_count());
        }
        if set.uses_misc() {
            push("punctuation", PUNCT_CLASSES.len());
            push("pos", PosTag::ALL.len());
            push("dal", DAL_DIM);
            push("twitter", TWITTER_DIM);
        }
        if set.uses_embeddings() {
            push("doc", doc_dim);
        }
        if set.uses_topics() {
            push("topic", topic_dim);
        }
        (blocks, offset)
    }

    pub fn block(&self, name: &str) -> Option<&FeatureBlock> {
        find_block(&self.blocks, name)
    }
}

fn find_block<'a>(blocks: &'a [FeatureBlock], name: &str) -> Option<&'a FeatureBlock> {
    blocks.iter().find(|b| b.name == name)
}

/// Dimension of the lexical part (f1–f4) of a feature set.
pub fn lexical_dimension(set: FeatureSet, vocab: &Vocabulary) -> usize {
    FeatureRegistry::layout(set, vocab, 0, 0)
        .0
        .iter()
        .filter(|b| b.name != "doc" && b.name != "topic")
        .map(|b| b.dim)
        .sum()
}

/// Builds the f1–f4 vector of a token sequence. Out-of-vocabulary n-grams
/// are ignored; the dimension depends only on `(vocab, set)`.
pub fn assemble_vector(
    tokens: &TokenSequence,
    vocab: &Vocabulary,
    set: FeatureSet,
    lexicon: &PolarityLexicon,
) -> Result<SparseVector> {
    assemble_with_tagger(tokens, vocab, set, lexicon, &RuleTagger)
}

pub fn assemble_with_tagger(
    tokens: &TokenSequence,
    vocab: &Vocabulary,
    set: FeatureSet,
    lexicon: &PolarityLexicon,
    tagger: &dyn PosTagger,
) -> Result<SparseVector> {
    if !set.is_lexical() {
        return Err(Error::FeatureSetUnavailable(set.to_string()));
    }
    let ngram_dim = usize::from(set.uses_unigrams()) * vocab.unigram_count()
        + usize::from(set.uses_bigrams()) * vocab.bigram_count();
    if ngram_dim == 0 {
        return Err(Error::EmptyVocabulary(set.to_string()));
    }

    let (blocks, dimension) = FeatureRegistry::layout(set, vocab, 0, 0);
    let block = |name: &str| find_block(&blocks, name);
    let mut entries: Vec<(usize, f64)> = Vec::new();

    if let Some(b) = block("unigram") {
        for t in tokens {
            if let Some(i) = vocab.unigram(t) {
                entries.push((b.offset + i, 1.0));
            }
        }
    }
    if let Some(b) = block("bigram") {
        for (x, y) in tokens.bigrams() {
            if let Some(i) = vocab.bigram(x, y) {
                entries.push((b.offset + i, 1.0));
            }
        }
    }
    if set.uses_misc() {
        let toks = tokens.as_slice();
        let punct = block("punctuation").unwrap().offset;
        for t in toks.iter().filter(|t| is_punctuation(t)) {
            for c in t.chars() {
                entries.push((punct + punct_class(c), 1.0));
            }
        }
        let pos = block("pos").unwrap().offset;
        for tag in tagger.tag(toks) {
            entries.push((pos + tag.index(), 1.0));
        }
        let dal = dal_features(toks, lexicon);
        let d = block("dal").unwrap().offset;
        entries.push((d, dal.pos_count as f64));
        entries.push((d + 1, dal.neg_count as f64));
        entries.push((d + 2, dal.score_sum));
        let tw = block("twitter").unwrap().offset;
        let hashtags = toks.iter().filter(|t| is_hashtag(t)).count();
        let mentions = toks.iter().filter(|t| *t == "user").count();
        let links = toks.iter().filter(|t| *t == "url").count();
        entries.push((tw, hashtags as f64));
        entries.push((tw + 1, mentions as f64));
        entries.push((tw + 2, links as f64));
    }
    SparseVector::from_entries(dimension, entries)
}
