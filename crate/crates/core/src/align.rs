//! Dynamic sequence aligning between a positioned reference and an edited caption.
//!
//! The aligner is a Levenshtein-style dynamic program in which every `[MASK]`
//! acts as a zero-cost wildcard that may absorb any contiguous run of
//! hypothesis tokens. Word items can be matched (cost 0), substituted (1) or
//! deleted (1); hypothesis tokens not covered by any item are insertions (1).
//!
//! Equivalently, an alignment assigns every reference item a hypothesis
//! interval `[a, b)`, monotone in both sequences: a word takes at most one
//! token, a mask takes any number. Among all assignments the aligner returns
//! the one that, in order:
//!
//! 1. has minimum cost;
//! 2. absorbs the most hypothesis tokens into masks;
//! 3. leaves the fewest masks empty;
//! 4. has the lexicographically smallest list of intervals, with empty
//!    intervals pinned to the end of the previous item's interval.
//!
//! The last rule makes the result total and leftmost: matches happen as early
//! as possible and masks close as soon as they can.

use std::ops::Range;

use serde::Serialize;

use crate::command::{PositionedReference, RefItem};
use crate::text::{TextError, TokenSeq};

/// Outcome of aligning one positioned reference with one hypothesis.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct AlignmentResult {
    /// `(reference item index, hypothesis index)` for equal tokens.
    pub pairs: Vec<(usize, usize)>,
    /// Reference items aligned to a different hypothesis token.
    pub substitutions: Vec<(usize, usize)>,
    /// Reference items with no hypothesis counterpart.
    pub deleted: Vec<usize>,
    /// Hypothesis tokens covered by no reference item.
    pub inserted: Vec<usize>,
    /// Hypothesis interval absorbed by each mask, in mask order.
    pub mask_spans: Vec<Range<usize>>,
    pub cost: usize,
}

impl AlignmentResult {
    pub fn mask_span_lengths(&self) -> Vec<usize> {
        mask_span_lengths(self)
    }
}

/// Lengths of the absorbed spans, one per mask.
pub fn mask_span_lengths(result: &AlignmentResult) -> Vec<usize> {
    result.mask_spans.iter().map(|r| r.len()).collect()
}

// (cost, -absorbed, -non-empty masks), compared lexicographically.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
struct Score(u32, i32, i32);

impl Score {
    const ZERO: Score = Score(0, 0, 0);
    const UNIT: Score = Score(1, 0, 0);
    const OPEN: Score = Score(0, -1, -1);
    const ABSORB: Score = Score(0, -1, 0);

    fn plus(self, o: Score) -> Score {
        Score(self.0 + o.0, self.1 + o.1, self.2 + o.2)
    }
}

/// Aligns `posref` with `hyp`; tokens are compared after the metric
/// normalization of their language mode.
///
/// ```
/// use vdedit::align::dsa_align;
/// use vdedit::command::PositionedReference;
/// use vdedit::text::{tokenize, LanguageMode};
///
/// let mode = LanguageMode::WordLevel;
/// let posref = PositionedReference::parse_text("A group of girls is [MASK] playing a game.", mode);
/// let hyp = tokenize("A group of girls is on the field playing a game.", mode);
/// let result = dsa_align(&posref, &hyp).unwrap();
/// assert_eq!(result.cost, 0);
/// assert_eq!(result.mask_spans, vec![5..8]);
/// ```
pub fn dsa_align(posref: &PositionedReference, hyp: &TokenSeq) -> Result<AlignmentResult, TextError> {
    if posref.mode() != hyp.mode() {
        return Err(TextError::ModeMismatch { left: posref.mode(), right: hyp.mode() });
    }
    let mode = hyp.mode();
    let items: Vec<Option<String>> = posref
        .items()
        .iter()
        .map(|it| match it {
            RefItem::Token(t) => Some(mode.normalize(t)),
            RefItem::Mask => None,
        })
        .collect();
    let hyp_norm = hyp.normalized();
    Ok(align_normalized(&items, &hyp_norm))
}

/// Core aligner over normalized tokens; `None` marks a mask.
pub(crate) fn align_normalized(items: &[Option<String>], hyp: &[String]) -> AlignmentResult {
    let n = items.len();
    let m = hyp.len();
    let w = m + 1;
    // best[i][j]: items i.. against hyp j..; open[i][j]: item i is a mask that
    // has already absorbed at least one token and may continue at j.
    let mut best = vec![Score::ZERO; (n + 1) * w];
    let mut open = vec![Score::ZERO; n.max(1) * w];
    for j in 0..=m {
        best[n * w + j] = Score((m - j) as u32, 0, 0);
    }
    for i in (0..n).rev() {
        for j in (0..=m).rev() {
            match &items[i] {
                Some(tok) => {
                    let mut v = Score::UNIT.plus(best[(i + 1) * w + j]);
                    if j < m {
                        let sub = Score(u32::from(*tok != hyp[j]), 0, 0);
                        v = v.min(sub.plus(best[(i + 1) * w + j + 1]));
                        v = v.min(Score::UNIT.plus(best[i * w + j + 1]));
                    }
                    best[i * w + j] = v;
                }
                None => {
                    let mut o = best[(i + 1) * w + j];
                    if j < m {
                        o = o.min(Score::ABSORB.plus(open[i * w + j + 1]));
                    }
                    open[i * w + j] = o;
                    let mut v = best[(i + 1) * w + j];
                    if j < m {
                        v = v.min(Score::OPEN.plus(open[i * w + j + 1]));
                        v = v.min(Score::UNIT.plus(best[i * w + j + 1]));
                    }
                    best[i * w + j] = v;
                }
            }
        }
    }

    let mut result = AlignmentResult {
        pairs: Vec::new(),
        substitutions: Vec::new(),
        deleted: Vec::new(),
        inserted: Vec::new(),
        mask_spans: Vec::new(),
        cost: best[0].0 as usize,
    };
    let (mut i, mut j) = (0, 0);
    while i < n {
        let target = best[i * w + j];
        match &items[i] {
            Some(tok) => {
                if Score::UNIT.plus(best[(i + 1) * w + j]) == target {
                    result.deleted.push(i);
                    i += 1;
                } else if j < m && Score(u32::from(*tok != hyp[j]), 0, 0).plus(best[(i + 1) * w + j + 1]) == target {
                    if *tok == hyp[j] {
                        result.pairs.push((i, j));
                    } else {
                        result.substitutions.push((i, j));
                    }
                    i += 1;
                    j += 1;
                } else {
                    result.inserted.push(j);
                    j += 1;
                }
            }
            None => {
                if best[(i + 1) * w + j] == target {
                    result.mask_spans.push(j..j);
                    i += 1;
                } else if j < m && Score::OPEN.plus(open[i * w + j + 1]) == target {
                    let start = j;
                    j += 1;
                    while open[i * w + j] != best[(i + 1) * w + j] {
                        j += 1;
                    }
                    result.mask_spans.push(start..j);
                    i += 1;
                } else {
                    result.inserted.push(j);
                    j += 1;
                }
            }
        }
    }
    result.inserted.extend(j..m);
    result
}
