//! Rule-based oracle editor and multi-round editing sessions.
//!
//! The oracle satisfies each command literally. It is a controllability
//! witness for the metrics and makes no claim about fluency.

use serde::Serialize;
use thiserror::Error;

use crate::align::dsa_align;
use crate::command::{make_positioned_reference, Command, CommandError, CommandKind};
use crate::text::{find_all, is_punctuation, LanguageMode, TokenSeq};

/// Content for positional or length commands: one span per position
/// (insertions for add, expected removed tokens for del), or a single span
/// for the position-free kinds.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct Payload {
    pub spans: Vec<Vec<String>>,
}

impl Payload {
    pub fn new(spans: Vec<Vec<String>>) -> Self {
        Payload { spans }
    }

    /// Tokenizes each string with `mode`.
    pub fn from_strings<S: AsRef<str>>(spans: &[S], mode: LanguageMode) -> Self {
        Payload {
            spans: spans.iter().map(|s| crate::text::tokenize(s.as_ref(), mode).into_tokens()).collect(),
        }
    }

    pub fn render(&self, mode: LanguageMode) -> Vec<String> {
        self.spans
            .iter()
            .map(|s| TokenSeq::from_tokens_unchecked(s.clone(), mode).detokenize())
            .collect()
    }

    fn concat(&self) -> Vec<String> {
        self.spans.concat()
    }
}

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum EditError {
    #[error(transparent)]
    Command(#[from] CommandError),
    #[error("{0} requires a payload")]
    MissingPayload(CommandKind),
    #[error("payload has {got} spans, expected {expected}")]
    PayloadArity { expected: usize, got: usize },
    #[error("payload span {0} is empty")]
    EmptyPayloadSpan(usize),
    #[error("payload span {index} does not match the tokens at the deleted position")]
    PayloadMismatch { index: usize },
    #[error("{attributes} attributes cannot fill {gaps} positions")]
    TooFewAttributes { gaps: usize, attributes: usize },
    #[error("hypothesis mode {got} differs from session mode {expected}")]
    ModeMismatch { expected: LanguageMode, got: LanguageMode },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct OracleConfig {
    /// Minimum length change demanded by length checks.
    pub delta: usize,
}

impl Default for OracleConfig {
    fn default() -> Self {
        OracleConfig { delta: 1 }
    }
}

/// Applies `cmd` to `reference` deterministically.
///
/// * add at positions: inserts one payload span at each gap (attributes are
///   the default payload for `<add, pos, attr>`);
/// * add attributes: appends them before trailing punctuation;
/// * add length: appends the payload at the end;
/// * delete at positions: removes the spans;
/// * delete attributes: removes every occurrence of each phrase, then trims
///   trailing tokens if fewer than `delta` tokens went away;
/// * delete length: trims trailing tokens, keeping final punctuation, until
///   the caption is shorter than `len - delta`.
pub fn oracle_apply(
    cmd: &Command,
    reference: &TokenSeq,
    payload: Option<&Payload>,
    config: &OracleConfig,
) -> Result<TokenSeq, EditError> {
    cmd.validate_for(reference)?;
    let mode = reference.mode();
    let tokens = reference.tokens();
    let out: Vec<String> = match cmd.kind() {
        CommandKind::AddLen => {
            let p = payload.ok_or(EditError::MissingPayload(CommandKind::AddLen))?;
            let extra = p.concat();
            if extra.is_empty() {
                return Err(EditError::EmptyPayloadSpan(0));
            }
            let mut out = tokens.to_vec();
            out.extend(extra);
            out
        }
        CommandKind::AddAttr => {
            let extra = match payload {
                Some(p) => p.concat(),
                None => cmd.attributes().unwrap_or_default().iter().flat_map(|a| a.tokens().iter().cloned()).collect(),
            };
            if extra.is_empty() {
                return Err(EditError::EmptyPayloadSpan(0));
            }
            let cut = tokens.len() - trailing_punctuation(tokens);
            let mut out = tokens[..cut].to_vec();
            out.extend(extra);
            out.extend_from_slice(&tokens[cut..]);
            out
        }
        kind @ (CommandKind::AddPos | CommandKind::AddPosAttr) => {
            let gaps = cmd.gaps();
            let spans = match payload {
                Some(p) => p.spans.clone(),
                None if kind == CommandKind::AddPosAttr => {
                    distribute_attributes(cmd.attributes().unwrap_or_default(), gaps.len())?
                }
                None => return Err(EditError::MissingPayload(kind)),
            };
            if spans.len() != gaps.len() {
                return Err(EditError::PayloadArity { expected: gaps.len(), got: spans.len() });
            }
            if let Some(i) = spans.iter().position(Vec::is_empty) {
                return Err(EditError::EmptyPayloadSpan(i));
            }
            let mut out = Vec::with_capacity(tokens.len() + spans.iter().map(Vec::len).sum::<usize>());
            let mut prev = 0;
            for (g, span) in gaps.iter().zip(spans) {
                out.extend_from_slice(&tokens[prev..*g]);
                out.extend(span);
                prev = *g;
            }
            out.extend_from_slice(&tokens[prev..]);
            out
        }
        CommandKind::DelPos => {
            let spans = cmd.spans();
            if let Some(p) = payload {
                if p.spans.len() != spans.len() {
                    return Err(EditError::PayloadArity { expected: spans.len(), got: p.spans.len() });
                }
                for (index, (s, expected)) in spans.iter().zip(&p.spans).enumerate() {
                    let found = &tokens[s.start..s.end];
                    let same = found.len() == expected.len()
                        && found.iter().zip(expected).all(|(a, b)| mode.normalize(a) == mode.normalize(b));
                    if !same {
                        return Err(EditError::PayloadMismatch { index });
                    }
                }
            }
            let mut out = Vec::with_capacity(tokens.len());
            let mut prev = 0;
            for s in spans {
                out.extend_from_slice(&tokens[prev..s.start]);
                prev = s.end;
            }
            out.extend_from_slice(&tokens[prev..]);
            out
        }
        CommandKind::DelAttr => {
            let mut out = tokens.to_vec();
            let phrases: Vec<Vec<String>> =
                cmd.attributes().unwrap_or_default().iter().map(|a| a.normalized(mode)).collect();
            loop {
                let norm: Vec<String> = out.iter().map(|t| mode.normalize(t)).collect();
                let hit = phrases.iter().find_map(|p| find_all(&norm, p).first().map(|&at| (at, p.len())));
                match hit {
                    Some((at, len)) => {
                        out.drain(at..at + len);
                    }
                    None => break,
                }
            }
            if tokens.len() - out.len() < config.delta {
                let target = tokens.len().saturating_sub(config.delta + 1).min(out.len());
                out = truncate_keeping_punctuation(&out, target);
            }
            out
        }
        CommandKind::DelLen => {
            let target = tokens.len().saturating_sub(config.delta + 1);
            truncate_keeping_punctuation(tokens, target)
        }
    };
    Ok(TokenSeq::from_tokens_unchecked(out, mode))
}

fn trailing_punctuation(tokens: &[String]) -> usize {
    tokens.iter().rev().take_while(|t| is_punctuation(t)).count()
}

fn truncate_keeping_punctuation(tokens: &[String], target: usize) -> Vec<String> {
    if target >= tokens.len() {
        return tokens.to_vec();
    }
    let punct = trailing_punctuation(tokens);
    if target >= punct {
        let body = tokens.len() - punct;
        let mut out = tokens[..target - punct].to_vec();
        out.extend_from_slice(&tokens[body..]);
        out
    } else {
        tokens[tokens.len() - punct..tokens.len() - punct + target].to_vec()
    }
}

fn distribute_attributes(attrs: &[crate::command::Attribute], gaps: usize) -> Result<Vec<Vec<String>>, EditError> {
    let m = attrs.len();
    if m < gaps {
        return Err(EditError::TooFewAttributes { gaps, attributes: m });
    }
    Ok((0..gaps)
        .map(|i| {
            attrs[i * m / gaps..(i + 1) * m / gaps]
                .iter()
                .flat_map(|a| a.tokens().iter().cloned())
                .collect()
        })
        .collect())
}

/// Recovers insertion content from a ground truth for samples that carry no
/// payload: the mask spans of the ground truth for positional adds, and the
/// tokens outside a longest common subsequence for length-only adds.
pub fn payload_from_ground_truth(cmd: &Command, reference: &TokenSeq, ground_truth: &TokenSeq) -> Option<Payload> {
    match cmd.kind() {
        CommandKind::AddPos | CommandKind::AddPosAttr => {
            let posref = make_positioned_reference(reference, cmd).ok()?;
            let aligned = dsa_align(&posref, ground_truth).ok()?;
            let spans: Vec<Vec<String>> =
                aligned.mask_spans.iter().map(|r| ground_truth.tokens()[r.clone()].to_vec()).collect();
            spans.iter().all(|s| !s.is_empty()).then_some(Payload::new(spans))
        }
        CommandKind::AddLen | CommandKind::AddAttr => {
            let added = unmatched_tokens(&reference.normalized(), &ground_truth.normalized());
            let extra: Vec<String> = if added.is_empty() {
                ground_truth.tokens().to_vec()
            } else {
                added.into_iter().map(|j| ground_truth.tokens()[j].clone()).collect()
            };
            (!extra.is_empty()).then_some(Payload::new(vec![extra]))
        }
        _ => None,
    }
}

// Indices of `b` outside one longest common subsequence with `a`.
fn unmatched_tokens(a: &[String], b: &[String]) -> Vec<usize> {
    let (n, m) = (a.len(), b.len());
    let mut dp = vec![0usize; (n + 1) * (m + 1)];
    for i in (0..n).rev() {
        for j in (0..m).rev() {
            dp[i * (m + 1) + j] = if a[i] == b[j] {
                dp[(i + 1) * (m + 1) + j + 1] + 1
            } else {
                dp[(i + 1) * (m + 1) + j].max(dp[i * (m + 1) + j + 1])
            };
        }
    }
    let (mut i, mut j) = (0, 0);
    let mut out = Vec::new();
    while j < m {
        if i < n && a[i] == b[j] {
            i += 1;
            j += 1;
        } else if i < n && dp[(i + 1) * (m + 1) + j] >= dp[i * (m + 1) + j + 1] {
            i += 1;
        } else {
            out.push(j);
            j += 1;
        }
    }
    out
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum RoundSource {
    Oracle,
    External,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Round {
    pub command: Command,
    pub reference: TokenSeq,
    pub edited: TokenSeq,
    pub source: RoundSource,
}

/// A chain of editing rounds over one caption. Each round edits the previous
/// round's output.
#[derive(Debug, Clone, PartialEq)]
pub struct Session {
    pub video_id: String,
    initial: TokenSeq,
    rounds: Vec<Round>,
}

impl Session {
    pub fn new(video_id: impl Into<String>, initial: TokenSeq) -> Self {
        Session { video_id: video_id.into(), initial, rounds: Vec::new() }
    }

    pub fn initial(&self) -> &TokenSeq {
        &self.initial
    }

    pub fn rounds(&self) -> &[Round] {
        &self.rounds
    }

    /// The caption the next round will edit.
    pub fn current(&self) -> &TokenSeq {
        self.rounds.last().map_or(&self.initial, |r| &r.edited)
    }
}

/// Returns `session` extended by one round. The edited caption is
/// `hypothesis` when given, otherwise the oracle's output.
pub fn session_step(
    session: &Session,
    cmd: Command,
    hypothesis: Option<TokenSeq>,
    payload: Option<&Payload>,
    config: &OracleConfig,
) -> Result<Session, EditError> {
    let reference = session.current().clone();
    cmd.validate_for(&reference)?;
    let (edited, source) = match hypothesis {
        Some(h) => {
            if h.mode() != reference.mode() {
                return Err(EditError::ModeMismatch { expected: reference.mode(), got: h.mode() });
            }
            (h, RoundSource::External)
        }
        None => (oracle_apply(&cmd, &reference, payload, config)?, RoundSource::Oracle),
    };
    let mut next = session.clone();
    next.rounds.push(Round { command: cmd, reference, edited, source });
    Ok(next)
}
