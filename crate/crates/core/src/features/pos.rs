//! Part-of-speech tagging over the 12-tag universal tagset.

use std::fmt;

use serde::{Deserialize, Serialize};

use super::tokenize::{is_hashtag, is_punctuation};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum PosTag {
    Noun,
    Verb,
    Adj,
    Adv,
    Pron,
    Det,
    Adp,
    Num,
    Conj,
    Prt,
    Punct,
    X,
}

impl PosTag {
    pub const ALL: [PosTag; 12] = [
        PosTag::Noun,
        PosTag::Verb,
        PosTag::Adj,
        PosTag::Adv,
        PosTag::Pron,
        PosTag::Det,
        PosTag::Adp,
        PosTag::Num,
        PosTag::Conj,
        PosTag::Prt,
        PosTag::Punct,
        PosTag::X,
    ];

    pub fn index(self) -> usize {
        self as usize
    }

    pub fn as_str(self) -> &'static str {
        match self {
            PosTag::Noun => "NOUN",
            PosTag::Verb => "VERB",
            PosTag::Adj => "ADJ",
            PosTag::Adv => "ADV",
            PosTag::Pron => "PRON",
            PosTag::Det => "DET",
            PosTag::Adp => "ADP",
            PosTag::Num => "NUM",
            PosTag::Conj => "CONJ",
            PosTag::Prt => "PRT",
            PosTag::Punct => "PUNCT",
            PosTag::X => "X",
        }
    }
}

impl fmt::Display for PosTag {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// Anything that assigns one tag per token.
pub trait PosTagger: Send + Sync {
    fn tag(&self, tokens: &[String]) -> Vec<PosTag>;
}

/// Closed-class word lists plus suffix rules; open-class fallback is NOUN.
#[derive(Debug, Clone, Copy, Default)]
pub struct RuleTagger;

const DET: &[&str] = &[
    "the", "a", "an", "this", "that", "these", "those", "every", "each", "some", "any", "no", "all",
    "both", "another", "either", "neither",
];
const PRON: &[&str] = &[
    "i", "me", "my", "mine", "you", "your", "yours", "he", "him", "his", "she", "her", "hers", "it",
    "its", "we", "us", "our", "ours", "they", "them", "their", "theirs", "who", "whom", "whose",
    "what", "which", "myself", "yourself", "himself", "herself", "itself", "ourselves",
    "themselves", "someone", "everyone", "anyone", "nobody", "something", "everything", "nothing",
    "i'm", "you're", "he's", "she's", "it's", "we're", "they're",
];
const ADP: &[&str] = &[
    "in", "on", "at", "by", "for", "with", "about", "against", "between", "into", "through",
    "during", "before", "after", "above", "below", "to", "from", "of", "off", "over", "under",
    "since", "without", "within", "along", "across", "behind", "beyond", "like", "near", "per",
    "via", "vs",
];
const CONJ: &[&str] = &[
    "and", "or", "but", "nor", "yet", "because", "although", "though", "while", "if", "unless",
    "whether", "than", "&",
];
const PRT: &[&str] = &["not", "'s", "up", "out"];
const ADV: &[&str] = &[
    "very", "really", "so", "too", "also", "just", "now", "then", "here", "there", "always",
    "never", "often", "still", "already", "soon", "again", "ever", "quite", "rather", "almost",
    "how", "when", "where", "why", "well", "only", "even", "tonight", "today", "tomorrow",
];
const VERB: &[&str] = &[
    "is", "am", "are", "was", "were", "be", "been", "have", "has", "had", "do", "does", "did",
    "will", "would", "shall", "should", "can", "could", "may", "might", "must", "don't", "doesn't",
    "didn't", "isn't", "aren't", "wasn't", "won't", "can't", "get", "got", "say", "said", "go",
    "went", "make", "made", "know", "think", "take", "see", "come", "want", "look", "use", "find",
    "give", "tell", "vote", "win", "won", "lose", "lost", "love", "hate", "need", "let", "keep",
];
const NUM_WORDS: &[&str] = &[
    "zero", "one", "two", "three", "four", "five", "six", "seven", "eight", "nine", "ten",
    "hundred", "thousand", "million", "billion",
];
const ADJ_SUFFIXES: &[&str] = &["ous", "ful", "ive", "able", "ible", "less", "ish", "ical"];

fn tag_one(token: &str) -> PosTag {
    if is_punctuation(token) {
        return PosTag::Punct;
    }
    if is_hashtag(token) || token == "user" || token == "url" {
        return PosTag::X;
    }
    if token.chars().all(|c| c.is_ascii_digit() || c == '.' || c == ',')
        || NUM_WORDS.contains(&token)
    {
        return PosTag::Num;
    }
    let lists: [(&[&str], PosTag); 7] = [
        (DET, PosTag::Det),
        (PRON, PosTag::Pron),
        (ADP, PosTag::Adp),
        (CONJ, PosTag::Conj),
        (PRT, PosTag::Prt),
        (ADV, PosTag::Adv),
        (VERB, PosTag::Verb),
    ];
    for (list, tag) in lists {
        if list.contains(&token) {
            return tag;
        }
    }
    let n = token.chars().count();
    let has = |suffix: &str| n > suffix.len() + 2 && token.ends_with(suffix);
    if has("ing") || has("ed") {
        return PosTag::Verb;
    }
    if has("ly") {
        return PosTag::Adv;
    }
    if ADJ_SUFFIXES.iter().any(|s| has(s)) {
        return PosTag::Adj;
    }
    PosTag::Noun
}

impl PosTagger for RuleTagger {
    fn tag(&self, tokens: &[String]) -> Vec<PosTag> {
        tokens.iter().map(|t| tag_one(t)).collect()
    }
}

pub fn tag_pos(tokens: &[String]) -> Vec<PosTag> {
    RuleTagger.tag(tokens)
}
