//! Tokenization, n-gram counting and sequence distances.
//!
//! Captions are handled as [`TokenSeq`] values. English-like text is split on
//! whitespace with edge punctuation detached ([`LanguageMode::WordLevel`]);
//! Chinese-like text is split into characters ([`LanguageMode::CharLevel`]).
//! Tokens keep their original case; the metric layer compares
//! [`TokenSeq::normalized`] tokens instead.

use std::collections::HashMap;
use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Characters split off the edges of a whitespace chunk in word mode.
pub const DETACHED_PUNCTUATION: &[char] = &['.', ',', '!', '?', ';', ':', '"', '(', ')', '\''];

/// Highest n-gram order used by the metrics.
pub const MAX_NGRAM_ORDER: usize = 4;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum TextError {
    #[error("language mode mismatch: {left} vs {right}")]
    ModeMismatch { left: LanguageMode, right: LanguageMode },
    #[error("n-gram order {0} outside 1..=4")]
    NgramOrder(usize),
    #[error("invalid token {0:?}: tokens must be non-empty and contain no whitespace")]
    InvalidToken(String),
}

/// How a caption is split into tokens.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum LanguageMode {
    /// Whitespace words with edge punctuation detached.
    #[serde(rename = "en-word")]
    WordLevel,
    /// One token per non-whitespace character.
    #[serde(rename = "zh-char")]
    CharLevel,
}

impl LanguageMode {
    pub fn as_str(self) -> &'static str {
        match self {
            LanguageMode::WordLevel => "en-word",
            LanguageMode::CharLevel => "zh-char",
        }
    }

    /// Lowercases in word mode; characters are compared verbatim.
    pub fn normalize(self, token: &str) -> String {
        match self {
            LanguageMode::WordLevel => token.to_lowercase(),
            LanguageMode::CharLevel => token.to_string(),
        }
    }
}

impl fmt::Display for LanguageMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl std::str::FromStr for LanguageMode {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "en-word" | "word" | "en" => Ok(LanguageMode::WordLevel),
            "zh-char" | "char" | "zh" => Ok(LanguageMode::CharLevel),
            other => Err(format!("unknown language mode {other:?} (expected en-word or zh-char)")),
        }
    }
}

/// An ordered list of tokens tagged with the mode that produced them.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct TokenSeq {
    tokens: Vec<String>,
    mode: LanguageMode,
}

impl TokenSeq {
    /// Builds a sequence from pre-split tokens, rejecting empty tokens and
    /// tokens containing whitespace.
    pub fn from_tokens<I, S>(tokens: I, mode: LanguageMode) -> Result<Self, TextError>
    where
        I: IntoIterator<Item = S>,
        S: Into<String>,
    {
        let tokens: Vec<String> = tokens.into_iter().map(Into::into).collect();
        if let Some(bad) = tokens.iter().find(|t| !is_valid_token(t)) {
            return Err(TextError::InvalidToken(bad.clone()));
        }
        Ok(TokenSeq { tokens, mode })
    }

    pub(crate) fn from_tokens_unchecked(tokens: Vec<String>, mode: LanguageMode) -> Self {
        debug_assert!(tokens.iter().all(|t| is_valid_token(t)));
        TokenSeq { tokens, mode }
    }

    pub fn empty(mode: LanguageMode) -> Self {
        TokenSeq { tokens: Vec::new(), mode }
    }

    pub fn tokens(&self) -> &[String] {
        &self.tokens
    }

    pub fn into_tokens(self) -> Vec<String> {
        self.tokens
    }

    pub fn mode(&self) -> LanguageMode {
        self.mode
    }

    pub fn len(&self) -> usize {
        self.tokens.len()
    }

    pub fn is_empty(&self) -> bool {
        self.tokens.is_empty()
    }

    /// Tokens in the form the metrics compare them.
    pub fn normalized(&self) -> Vec<String> {
        self.tokens.iter().map(|t| self.mode.normalize(t)).collect()
    }

    /// Renders the sequence back to text: space-joined in word mode,
    /// concatenated in character mode.
    pub fn detokenize(&self) -> String {
        match self.mode {
            LanguageMode::WordLevel => self.tokens.join(" "),
            LanguageMode::CharLevel => self.tokens.concat(),
        }
    }

    pub(crate) fn ensure_same_mode(&self, other: &TokenSeq) -> Result<(), TextError> {
        if self.mode == other.mode {
            Ok(())
        } else {
            Err(TextError::ModeMismatch { left: self.mode, right: other.mode })
        }
    }
}

impl fmt::Display for TokenSeq {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.detokenize())
    }
}

fn is_valid_token(t: &str) -> bool {
    !t.is_empty() && !t.chars().any(char::is_whitespace)
}

/// Splits `text` into tokens according to `mode`.
///
/// ```
/// use vdedit::text::{tokenize, LanguageMode};
///
/// let seq = tokenize("A group of girls is playing a game.", LanguageMode::WordLevel);
/// assert_eq!(seq.len(), 9);
/// assert_eq!(seq.tokens()[8], ".");
/// ```
pub fn tokenize(text: &str, mode: LanguageMode) -> TokenSeq {
    let tokens = match mode {
        LanguageMode::WordLevel => {
            let mut out = Vec::new();
            for chunk in text.split_whitespace() {
                split_edge_punctuation(chunk, &mut out);
            }
            out
        }
        LanguageMode::CharLevel => text
            .chars()
            .filter(|c| !c.is_whitespace())
            .map(String::from)
            .collect(),
    };
    TokenSeq { tokens, mode }
}

fn split_edge_punctuation(chunk: &str, out: &mut Vec<String>) {
    let mut core = chunk;
    let mut leading = Vec::new();
    while let Some(c) = core.chars().next() {
        if !DETACHED_PUNCTUATION.contains(&c) {
            break;
        }
        leading.push(c.to_string());
        core = &core[c.len_utf8()..];
    }
    let mut trailing = Vec::new();
    while let Some(c) = core.chars().next_back() {
        if !DETACHED_PUNCTUATION.contains(&c) {
            break;
        }
        trailing.push(c.to_string());
        core = &core[..core.len() - c.len_utf8()];
    }
    out.extend(leading);
    if !core.is_empty() {
        out.push(core.to_string());
    }
    out.extend(trailing.into_iter().rev());
}

/// True for a token made only of detachable punctuation.
pub fn is_punctuation(token: &str) -> bool {
    !token.is_empty() && token.chars().all(|c| DETACHED_PUNCTUATION.contains(&c) || is_cjk_punctuation(c))
}

fn is_cjk_punctuation(c: char) -> bool {
    matches!(c, '。' | '，' | '！' | '？' | '；' | '：' | '、' | '“' | '”' | '（' | '）')
}

/// Multiset of n-grams keyed by the token tuple.
pub type NgramCounts = HashMap<Vec<String>, usize>;

/// Counts the n-grams of `seq` (as written, not normalized).
pub fn ngrams(seq: &TokenSeq, n: usize) -> Result<NgramCounts, TextError> {
    check_order(n)?;
    let mut counts = NgramCounts::new();
    for (gram, c) in count_ngrams(&seq.tokens, n) {
        counts.insert(gram.to_vec(), c);
    }
    Ok(counts)
}

pub(crate) fn check_order(n: usize) -> Result<(), TextError> {
    if (1..=MAX_NGRAM_ORDER).contains(&n) {
        Ok(())
    } else {
        Err(TextError::NgramOrder(n))
    }
}

/// Borrowing n-gram counter used on the metric hot path.
pub(crate) fn count_ngrams<T: std::hash::Hash + Eq>(tokens: &[T], n: usize) -> HashMap<&[T], usize> {
    let mut counts = HashMap::new();
    if n == 0 || tokens.len() < n {
        return counts;
    }
    for w in tokens.windows(n) {
        *counts.entry(w).or_insert(0) += 1;
    }
    counts
}

/// Token-level Levenshtein distance with unit costs.
pub fn edit_distance(a: &TokenSeq, b: &TokenSeq) -> Result<usize, TextError> {
    a.ensure_same_mode(b)?;
    Ok(levenshtein(&a.tokens, &b.tokens))
}

/// Length of the longest common subsequence.
pub fn lcs_length(a: &TokenSeq, b: &TokenSeq) -> Result<usize, TextError> {
    a.ensure_same_mode(b)?;
    Ok(lcs_len(&a.tokens, &b.tokens))
}

pub fn levenshtein<T: PartialEq>(a: &[T], b: &[T]) -> usize {
    if a.is_empty() {
        return b.len();
    }
    let mut prev: Vec<usize> = (0..=b.len()).collect();
    let mut cur = vec![0; b.len() + 1];
    for (i, x) in a.iter().enumerate() {
        cur[0] = i + 1;
        for (j, y) in b.iter().enumerate() {
            let sub = prev[j] + usize::from(x != y);
            cur[j + 1] = sub.min(prev[j + 1] + 1).min(cur[j] + 1);
        }
        std::mem::swap(&mut prev, &mut cur);
    }
    prev[b.len()]
}

pub fn lcs_len<T: PartialEq>(a: &[T], b: &[T]) -> usize {
    let mut prev = vec![0usize; b.len() + 1];
    let mut cur = vec![0usize; b.len() + 1];
    for x in a {
        for (j, y) in b.iter().enumerate() {
            cur[j + 1] = if x == y { prev[j] + 1 } else { prev[j + 1].max(cur[j]) };
        }
        std::mem::swap(&mut prev, &mut cur);
    }
    prev[b.len()]
}

/// Start indices of every occurrence of `needle` as a contiguous run of `haystack`.
pub(crate) fn find_all<T: PartialEq>(haystack: &[T], needle: &[T]) -> Vec<usize> {
    if needle.is_empty() || needle.len() > haystack.len() {
        return Vec::new();
    }
    haystack
        .windows(needle.len())
        .enumerate()
        .filter(|(_, w)| *w == needle)
        .map(|(i, _)| i)
        .collect()
}

pub(crate) fn contains_run<T: PartialEq>(haystack: &[T], needle: &[T]) -> bool {
    !needle.is_empty() && haystack.windows(needle.len()).any(|w| w == needle)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn w(s: &str) -> TokenSeq {
        tokenize(s, LanguageMode::WordLevel)
    }

    #[test]
    fn word_tokenization_detaches_final_period() {
        let seq = w("A group of girls is playing a game.");
        assert_eq!(
            seq.tokens(),
            ["A", "group", "of", "girls", "is", "playing", "a", "game", "."]
        );
    }

    #[test]
    fn empty_text() {
        assert!(w("").is_empty());
        assert!(w("   \t\n").is_empty());
        assert!(tokenize("", LanguageMode::CharLevel).is_empty());
    }

    #[test]
    fn char_mode_splits_characters() {
        let seq = tokenize("一群女孩", LanguageMode::CharLevel);
        assert_eq!(seq.tokens(), ["一", "群", "女", "孩"]);
        let spaced = tokenize("一 群\t女孩", LanguageMode::CharLevel);
        assert_eq!(spaced, seq);
    }

    #[test]
    fn internal_hyphens_and_apostrophes_stay() {
        let seq = w("(the girl's well-known \"hockey\" game!)");
        assert_eq!(
            seq.tokens(),
            ["(", "the", "girl's", "well-known", "\"", "hockey", "\"", "game", "!", ")"]
        );
    }

    #[test]
    fn normalization_lowercases_words_only() {
        assert_eq!(w("A Man").normalized(), ["a", "man"]);
        let c = TokenSeq::from_tokens(["A"], LanguageMode::CharLevel).unwrap();
        assert_eq!(c.normalized(), ["A"]);
    }

    #[test]
    fn from_tokens_rejects_bad_tokens() {
        assert!(TokenSeq::from_tokens(["a", ""], LanguageMode::WordLevel).is_err());
        assert!(TokenSeq::from_tokens(["a b"], LanguageMode::WordLevel).is_err());
    }

    #[test]
    fn ngram_examples() {
        let seq = w("a b c");
        let bi = ngrams(&seq, 2).unwrap();
        assert_eq!(bi.len(), 2);
        assert_eq!(bi[&vec!["a".to_string(), "b".to_string()]], 1);
        assert_eq!(bi[&vec!["b".to_string(), "c".to_string()]], 1);

        let uni = ngrams(&w("a a a"), 1).unwrap();
        assert_eq!(uni.len(), 1);
        assert_eq!(uni[&vec!["a".to_string()]], 3);

        assert!(ngrams(&w("a b"), 3).unwrap().is_empty());
        assert_eq!(ngrams(&seq, 0), Err(TextError::NgramOrder(0)));
        assert_eq!(ngrams(&seq, 5), Err(TextError::NgramOrder(5)));
    }

    #[test]
    fn distance_examples() {
        assert_eq!(edit_distance(&w("a b c"), &w("a b c")).unwrap(), 0);
        assert_eq!(edit_distance(&w("a b c"), &w("a c")).unwrap(), 1);
        assert_eq!(lcs_length(&w("a b c"), &w("a c")).unwrap(), 2);
        let x = w("x y z y");
        assert_eq!(lcs_length(&x, &x).unwrap(), 4);
        let c = tokenize("ab", LanguageMode::CharLevel);
        assert!(matches!(edit_distance(&w("a b"), &c), Err(TextError::ModeMismatch { .. })));
        assert!(lcs_length(&w("a b"), &c).is_err());
    }

    // Recursive definitions, no memoization.
    fn naive_edit(a: &[u8], b: &[u8]) -> usize {
        match (a.split_first(), b.split_first()) {
            (None, _) => b.len(),
            (_, None) => a.len(),
            (Some((x, ra)), Some((y, rb))) => {
                let sub = naive_edit(ra, rb) + usize::from(x != y);
                sub.min(naive_edit(ra, b) + 1).min(naive_edit(a, rb) + 1)
            }
        }
    }

    fn naive_lcs(a: &[u8], b: &[u8]) -> usize {
        // Enumerate subsequences of the shorter side and keep those that embed in the longer.
        let (short, long) = if a.len() <= b.len() { (a, b) } else { (b, a) };
        let mut best = 0;
        for mask in 0u32..(1 << short.len()) {
            let sub: Vec<u8> = (0..short.len()).filter(|i| mask & (1 << i) != 0).map(|i| short[i]).collect();
            let mut it = long.iter();
            if sub.iter().all(|c| it.any(|d| d == c)) {
                best = best.max(sub.len());
            }
        }
        best
    }

    fn seq_of(bytes: &[u8]) -> TokenSeq {
        TokenSeq::from_tokens(bytes.iter().map(|b| ((b'a' + b) as char).to_string()), LanguageMode::WordLevel).unwrap()
    }

    proptest! {
        #[test]
        fn edit_distance_matches_recursive_definition(
            a in prop::collection::vec(0u8..3, 0..=8),
            b in prop::collection::vec(0u8..3, 0..=8),
        ) {
            prop_assert_eq!(edit_distance(&seq_of(&a), &seq_of(&b)).unwrap(), naive_edit(&a, &b));
        }

        #[test]
        fn lcs_matches_subsequence_enumeration(
            a in prop::collection::vec(0u8..3, 0..=8),
            b in prop::collection::vec(0u8..3, 0..=8),
        ) {
            let l = lcs_length(&seq_of(&a), &seq_of(&b)).unwrap();
            prop_assert_eq!(l, naive_lcs(&a, &b));
            prop_assert!(l <= a.len().min(b.len()));
        }

        #[test]
        fn edit_distance_is_a_metric(
            a in prop::collection::vec(0u8..4, 0..=12),
            b in prop::collection::vec(0u8..4, 0..=12),
            c in prop::collection::vec(0u8..4, 0..=12),
        ) {
            let (a, b, c) = (seq_of(&a), seq_of(&b), seq_of(&c));
            let ab = edit_distance(&a, &b).unwrap();
            prop_assert_eq!(ab, edit_distance(&b, &a).unwrap());
            prop_assert_eq!(ab == 0, a == b);
            let ac = edit_distance(&a, &c).unwrap();
            let cb = edit_distance(&c, &b).unwrap();
            prop_assert!(ab <= ac + cb);
        }

        #[test]
        fn tokenization_is_a_fixed_point(text in "[a-zA-Z .,!?;:'\"()-]{0,40}") {
            let once = w(&text);
            prop_assert_eq!(w(&text), once.clone());
            let again = w(&once.detokenize());
            prop_assert_eq!(&again, &once);
            prop_assert!(once.tokens().iter().all(|t| is_valid_token(t)));
        }

        #[test]
        fn char_tokenization_is_a_fixed_point(text in "[一二三四五 ab]{0,20}") {
            let once = tokenize(&text, LanguageMode::CharLevel);
            prop_assert_eq!(tokenize(&once.detokenize(), LanguageMode::CharLevel), once);
        }

        #[test]
        fn ngram_totals(a in prop::collection::vec(0u8..3, 0..=10)) {
            let seq = seq_of(&a);
            let total: usize = (1..=4).map(|n| ngrams(&seq, n).unwrap().values().sum::<usize>()).sum();
            let expected: usize = (1..=4).map(|n| (a.len() + 1).saturating_sub(n)).sum();
            prop_assert_eq!(total, expected);
        }
    }

    #[test]
    fn metric_property_over_thousand_triples() {
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(7);
        for _ in 0..1000 {
            let mut gen = || {
                let n = rng.gen_range(0..=12);
                seq_of(&(0..n).map(|_| rng.gen_range(0..3u8)).collect::<Vec<_>>())
            };
            let (a, b, c) = (gen(), gen(), gen());
            let ab = edit_distance(&a, &b).unwrap();
            assert_eq!(ab, edit_distance(&b, &a).unwrap());
            assert!(ab <= edit_distance(&a, &c).unwrap() + edit_distance(&c, &b).unwrap());
        }
    }
}
