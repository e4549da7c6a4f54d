use std::collections::HashMap;

use serde::{Deserialize, Serialize};

/// Ordered word list with a reverse lookup that is rebuilt on load.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(from = "Vec<String>", into = "Vec<String>")]
pub struct TermIndex {
    terms: Vec<String>,
    lookup: HashMap<String, usize>,
}

impl From<Vec<String>> for TermIndex {
    fn from(terms: Vec<String>) -> Self {
        let lookup = terms.iter().enumerate().map(|(i, t)| (t.clone(), i)).collect();
        TermIndex { terms, lookup }
    }
}

impl From<TermIndex> for Vec<String> {
    fn from(t: TermIndex) -> Self {
        t.terms
    }
}

impl TermIndex {
    /// Distinct terms in lexicographic order.
    pub fn from_documents<'a, I, D>(docs: I) -> Self
    where
        I: IntoIterator<Item = D>,
        D: IntoIterator<Item = &'a String>,
    {
        let mut set = std::collections::BTreeSet::new();
        for d in docs {
            for t in d {
                set.insert(t.clone());
            }
        }
        TermIndex::from(set.into_iter().collect::<Vec<_>>())
    }

    pub fn len(&self) -> usize {
        self.terms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn get(&self, term: &str) -> Option<usize> {
        self.lookup.get(term).copied()
    }

    pub fn term(&self, i: usize) -> &str {
        &self.terms[i]
    }

    pub fn terms(&self) -> &[String] {
        &self.terms
    }

    /// Ids of the known tokens, unknown ones skipped.
    pub fn encode<'a>(&self, tokens: impl IntoIterator<Item = &'a String>) -> Vec<usize> {
        tokens.into_iter().filter_map(|t| self.get(t)).collect()
    }
}
