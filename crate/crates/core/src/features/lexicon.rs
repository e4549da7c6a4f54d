//! Prior-polarity lexicon (pleasantness scores on a 1–3 scale).

use std::collections::BTreeMap;
use std::fs::File;
use std::io::{BufRead, BufReader, Read};
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Normalized score above which a word counts as positive.
pub const POSITIVE_THRESHOLD: f64 = 0.8;
/// Normalized score below which a word counts as negative.
pub const NEGATIVE_THRESHOLD: f64 = 0.5;

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct PolarityLexicon {
    scores: BTreeMap<String, f64>,
    synonyms: BTreeMap<String, Vec<String>>,
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct DalFeatures {
    pub pos_count: usize,
    pub neg_count: usize,
    pub score_sum: f64,
}

impl PolarityLexicon {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn insert(&mut self, word: &str, raw_score: f64) -> Result<()> {
        if !(1.0..=3.0).contains(&raw_score) {
            return Err(Error::Lexicon {
                line: 0,
                message: format!("score {raw_score} for {word:?} outside [1, 3]"),
            });
        }
        self.scores.insert(word.to_lowercase(), raw_score);
        Ok(())
    }

    pub fn add_synonyms(&mut self, word: &str, synonyms: Vec<String>) {
        self.synonyms
            .insert(word.to_lowercase(), synonyms.into_iter().map(|s| s.to_lowercase()).collect());
    }

    pub fn len(&self) -> usize {
        self.scores.len()
    }

    pub fn is_empty(&self) -> bool {
        self.scores.is_empty()
    }

    /// `word<TAB>score` lines; blank lines and `#` comments are skipped.
    pub fn read_scores<R: Read>(&mut self, reader: R) -> Result<()> {
        for (i, line) in BufReader::new(reader).lines().enumerate() {
            let line_no = i + 1;
            let line = line.map_err(|e| Error::Lexicon {
                line: line_no,
                message: e.to_string(),
            })?;
            let line = line.trim_end_matches('\r');
            if line.trim().is_empty() || line.starts_with('#') {
                continue;
            }
            let (word, score) = line.split_once('\t').ok_or_else(|| Error::Lexicon {
                line: line_no,
                message: "expected word<TAB>score".into(),
            })?;
            let score: f64 = score.trim().parse().map_err(|_| Error::Lexicon {
                line: line_no,
                message: format!("bad score {score:?}"),
            })?;
            self.insert(word.trim(), score).map_err(|e| match e {
                Error::Lexicon { message, .. } => Error::Lexicon { line: line_no, message },
                other => other,
            })?;
        }
        Ok(())
    }

    /// `word<TAB>syn1,syn2,...` lines.
    pub fn read_synonyms<R: Read>(&mut self, reader: R) -> Result<()> {
        for (i, line) in BufReader::new(reader).lines().enumerate() {
            let line = line.map_err(|e| Error::Lexicon {
                line: i + 1,
                message: e.to_string(),
            })?;
            let line = line.trim_end_matches('\r');
            if line.trim().is_empty() || line.starts_with('#') {
                continue;
            }
            let (word, syns) = line.split_once('\t').ok_or_else(|| Error::Lexicon {
                line: i + 1,
                message: "expected word<TAB>synonyms".into(),
            })?;
            let syns = syns
                .split(',')
                .map(str::trim)
                .filter(|s| !s.is_empty())
                .map(String::from)
                .collect();
            self.add_synonyms(word.trim(), syns);
        }
        Ok(())
    }

    pub fn load(scores: impl AsRef<Path>, synonyms: Option<&Path>) -> Result<Self> {
        let mut lex = PolarityLexicon::new();
        let p = scores.as_ref();
        lex.read_scores(File::open(p).map_err(|e| Error::io(p, e))?)?;
        if let Some(p) = synonyms {
            lex.read_synonyms(File::open(p).map_err(|e| Error::io(p, e))?)?;
        }
        Ok(lex)
    }

    /// Raw score of `word`, falling back to its first synonym present in the
    /// lexicon.
    pub fn resolve(&self, word: &str) -> Option<f64> {
        if let Some(&s) = self.scores.get(word) {
            return Some(s);
        }
        self.synonyms
            .get(word)?
            .iter()
            .find_map(|syn| self.scores.get(syn).copied())
    }

    /// Raw 1 to 3 score mapped onto [0, 1].
    pub fn normalize(raw: f64) -> f64 {
        (raw - 1.0) / 2.0
    }
}

pub fn dal_features(tokens: &[String], lexicon: &PolarityLexicon) -> DalFeatures {
    let mut out = DalFeatures::default();
    for tok in tokens {
        let Some(raw) = lexicon.resolve(tok) else { continue };
        let s = PolarityLexicon::normalize(raw);
        if s > POSITIVE_THRESHOLD {
            out.pos_count += 1;
        } else if s < NEGATIVE_THRESHOLD {
            out.neg_count += 1;
        }
        out.score_sum += s;
    }
    out
}
