//! The shared token space used by every overlap computation (keyword,
//! joinable and unionable search, orientation detection, nugget matching).

use std::fmt;

use serde::{Deserialize, Serialize};

/// A normalized, lowercase, whitespace-free token.
///
/// Only [`normalize_token`] constructs tokens, so every token in the system
/// obeys the same folding rules.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct Token(String);

impl Token {
    pub fn as_str(&self) -> &str {
        &self.0
    }

    pub fn into_string(self) -> String {
        self.0
    }
}

impl fmt::Display for Token {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

impl AsRef<str> for Token {
    fn as_ref(&self) -> &str {
        &self.0
    }
}

/// Lowercases `raw` and splits it on every non-alphanumeric character,
/// dropping empty fragments.
///
/// Folding happens before splitting: a few characters lowercase into
/// sequences that contain combining marks, and those must act as separators
/// for the result to be stable under re-normalization.
pub fn normalize_token(raw: &str) -> Vec<Token> {
    raw.to_lowercase()
        .split(|c: char| !c.is_alphanumeric())
        .filter(|s| !s.is_empty())
        .map(|s| Token(s.to_owned()))
        .collect()
}

/// Normalized tokens as plain strings.
pub fn token_strings(raw: &str) -> Vec<String> {
    normalize_token(raw)
        .into_iter()
        .map(Token::into_string)
        .collect()
}

/// The canonical comparison key of a value: its tokens joined by one space.
/// Empty when the value has no tokens.
pub fn normalized_key(raw: &str) -> String {
    token_strings(raw).join(" ")
}
