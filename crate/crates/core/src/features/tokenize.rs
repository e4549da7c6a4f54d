use serde::{Deserialize, Serialize};

/// Lowercased tokens of a cleaned tweet. Never contains an empty token.
#[derive(Debug, Clone, Default, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct TokenSequence(Vec<String>);

impl TokenSequence {
    /// Empty strings are dropped.
    pub fn new<I, S>(tokens: I) -> Self
    where
        I: IntoIterator<Item = S>,
        S: Into<String>,
    {
        TokenSequence(
            tokens
                .into_iter()
                .map(Into::into)
                .filter(|t: &String| !t.is_empty())
                .collect(),
        )
    }

    pub fn as_slice(&self) -> &[String] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn iter(&self) -> std::slice::Iter<'_, String> {
        self.0.iter()
    }

    pub fn bigrams(&self) -> impl Iterator<Item = (&str, &str)> {
        self.0.windows(2).map(|w| (w[0].as_str(), w[1].as_str()))
    }
}

impl<'a> IntoIterator for &'a TokenSequence {
    type Item = &'a String;
    type IntoIter = std::slice::Iter<'a, String>;

    fn into_iter(self) -> Self::IntoIter {
        self.0.iter()
    }
}

fn is_word_char(c: char) -> bool {
    c.is_alphanumeric() || c == '_'
}

/// Splits cleaned text into words, `#hashtags`, and punctuation runs.
///
/// An apostrophe between two word characters stays inside the word
/// (`don't`). Everything is lowercased, so `USER`/`URL` become `user`/`url`.
pub fn tokenize(text: &str) -> TokenSequence {
    let chars: Vec<char> = text.chars().collect();
    let mut tokens = Vec::new();
    let mut i = 0;
    while i < chars.len() {
        let c = chars[i];
        if c.is_whitespace() {
            i += 1;
            continue;
        }
        let start = i;
        if c == '#' && i + 1 < chars.len() && is_word_char(chars[i + 1]) {
            i += 1;
            while i < chars.len() && is_word_char(chars[i]) {
                i += 1;
            }
        } else if is_word_char(c) {
            while i < chars.len() {
                if is_word_char(chars[i]) {
                    i += 1;
                } else if chars[i] == '\''
                    && i + 1 < chars.len()
                    && is_word_char(chars[i + 1])
                    && i > start
                {
                    i += 1;
                } else {
                    break;
                }
            }
        } else {
            while i < chars.len() {
                let d = chars[i];
                if d.is_whitespace() || is_word_char(d) {
                    break;
                }
                if d == '#' && i > start && i + 1 < chars.len() && is_word_char(chars[i + 1]) {
                    break;
                }
                i += 1;
            }
        }
        let tok: String = chars[start..i].iter().collect::<String>().to_lowercase();
        tokens.push(tok);
    }
    TokenSequence(tokens)
}

pub fn is_hashtag(token: &str) -> bool {
    token.len() > 1 && token.starts_with('#')
}

pub fn is_punctuation(token: &str) -> bool {
    !token.is_empty() && !token.chars().any(is_word_char)
}
