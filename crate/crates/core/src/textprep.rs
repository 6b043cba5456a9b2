//! Text normalization: lowercase, split, trim, stopword filtering.
//!
//! Tokens are maximal runs of letters, digits, apostrophes and hyphens.
//! Leading and trailing apostrophes/hyphens are stripped, then tokens found
//! in the bundled English stopword list are dropped. No stemming is applied.

use std::collections::HashSet;
use std::sync::OnceLock;

/// The bundled stopword file, one lowercase word per line.
pub const STOPWORDS_EN: &str = include_str!("../data/stopwords_en.txt");

pub type TokenList = Vec<String>;

fn stopwords() -> &'static HashSet<&'static str> {
    static SET: OnceLock<HashSet<&'static str>> = OnceLock::new();
    SET.get_or_init(|| STOPWORDS_EN.lines().filter(|l| !l.is_empty()).collect())
}

pub fn is_stopword(token: &str) -> bool {
    stopwords().contains(token)
}

fn is_token_char(c: char) -> bool {
    c.is_alphanumeric() || c == '\'' || c == '-'
}

pub fn preprocess(text: &str) -> TokenList {
    let lowered = text.to_lowercase();
    lowered
        .split(|c: char| !is_token_char(c))
        .map(|raw| raw.trim_matches(|c| c == '\'' || c == '-'))
        .filter(|token| !token.is_empty() && !is_stopword(token))
        .map(str::to_string)
        .collect()
}
