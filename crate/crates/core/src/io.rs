//! Line-delimited record formats and the CoNLL-U reader.
//!
//! Every JSONL record is one object per line; blank lines are skipped.
//! Errors carry the 1-based line number or the sample id that caused them.
//! Writing records read from a file reproduces the file byte for byte as
//! long as it was written by this module.

use std::collections::{BTreeMap, HashMap, HashSet};
use std::io::{BufRead, Write};

use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::command::{Attribute, Command, Operation, Position, Span};
use crate::construct::{CaptionGroup, Corpus, ParseAnnotation, ParseToken, SrlArgument, SrlFrame};
use crate::edit::Payload;
use crate::metrics::EvalUnit;
use crate::sample::{AuxScores, EditSample, Provenance};
use crate::text::{tokenize, LanguageMode};

#[derive(Debug, Error)]
pub enum IoError {
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error("line {line}: {message}")]
    Line { line: usize, message: String },
    #[error("record {id:?}: {message}")]
    Record { id: String, message: String },
}

fn line_err(line: usize, message: impl ToString) -> IoError {
    IoError::Line { line, message: message.to_string() }
}

fn record_err(id: &str, message: impl ToString) -> IoError {
    IoError::Record { id: id.to_string(), message: message.to_string() }
}

/// Parses each non-blank line as `T`, paired with its line number.
pub fn read_jsonl<T: DeserializeOwned>(reader: impl BufRead) -> Result<Vec<(usize, T)>, IoError> {
    let mut out = Vec::new();
    for (i, line) in reader.lines().enumerate() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        let value = serde_json::from_str(&line).map_err(|e| line_err(i + 1, e))?;
        out.push((i + 1, value));
    }
    Ok(out)
}

pub fn write_jsonl<T: Serialize>(mut writer: impl Write, items: impl IntoIterator<Item = T>) -> Result<(), IoError> {
    for item in items {
        serde_json::to_writer(&mut writer, &item).map_err(std::io::Error::from)?;
        writer.write_all(b"\n")?;
    }
    Ok(())
}

/// A gap (`3`) or a token span (`[5, 8]`).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum PositionRecord {
    Gap(usize),
    Span([usize; 2]),
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CommandRecord {
    pub op: Operation,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub positions: Option<Vec<PositionRecord>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub attributes: Option<Vec<String>>,
}

impl CommandRecord {
    pub fn from_command(cmd: &Command, mode: LanguageMode) -> Self {
        CommandRecord {
            op: cmd.op(),
            positions: cmd.positions().map(|ps| {
                ps.iter()
                    .map(|p| match p {
                        Position::Gap(g) => PositionRecord::Gap(*g),
                        Position::Span(s) => PositionRecord::Span([s.start, s.end]),
                    })
                    .collect()
            }),
            attributes: cmd.attributes().map(|a| a.iter().map(|a| a.render(mode)).collect()),
        }
    }

    pub fn to_command(&self, mode: LanguageMode) -> Result<Command, String> {
        let positions = self.positions.as_ref().map(|ps| {
            ps.iter()
                .map(|p| match p {
                    PositionRecord::Gap(g) => Position::Gap(*g),
                    PositionRecord::Span([a, b]) => Position::Span(Span::new(*a, *b)),
                })
                .collect()
        });
        let attributes = match &self.attributes {
            Some(list) => Some(
                list.iter()
                    .map(|a| Attribute::parse(a, mode))
                    .collect::<Result<Vec<_>, _>>()
                    .map_err(|e| e.to_string())?,
            ),
            None => None,
        };
        Command::new(self.op, positions, attributes).map_err(|e| e.to_string())
    }
}

/// One dataset sample as stored on disk.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DatasetRecord {
    pub id: String,
    pub video_id: String,
    pub lang: LanguageMode,
    pub command: CommandRecord,
    pub reference: String,
    pub ground_truth: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub payload: Option<Vec<String>>,
    #[serde(default, skip_serializing_if = "AuxScores::is_empty")]
    pub aux: AuxScores,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub provenance: Option<Provenance>,
}

impl DatasetRecord {
    pub fn from_sample(s: &EditSample) -> Self {
        let mode = s.mode();
        DatasetRecord {
            id: s.id.clone(),
            video_id: s.video_id.clone(),
            lang: mode,
            command: CommandRecord::from_command(&s.command, mode),
            reference: s.reference.detokenize(),
            ground_truth: s.ground_truth.detokenize(),
            payload: s.payload.as_ref().map(|p| p.render(mode)),
            aux: s.aux,
            provenance: s.provenance,
        }
    }

    pub fn to_sample(&self) -> Result<EditSample, IoError> {
        let mode = self.lang;
        let err = |m: String| record_err(&self.id, m);
        let cmd = self.command.to_command(mode).map_err(err)?;
        let sample = EditSample::new(
            &self.id,
            &self.video_id,
            cmd,
            tokenize(&self.reference, mode),
            tokenize(&self.ground_truth, mode),
        )
        .map_err(|e| err(e.to_string()))?;
        let mut sample = sample.with_aux(self.aux);
        if let Some(p) = self.provenance {
            sample = sample.with_provenance(p);
        }
        if let Some(spans) = &self.payload {
            sample = sample.with_payload(Payload::from_strings(spans, mode)).map_err(|e| err(e.to_string()))?;
        }
        Ok(sample)
    }
}

/// Reads a dataset file; ids must be unique.
pub fn read_dataset(reader: impl BufRead) -> Result<Vec<EditSample>, IoError> {
    let mut seen = HashSet::new();
    let mut out = Vec::new();
    for (line, rec) in read_jsonl::<DatasetRecord>(reader)? {
        if !seen.insert(rec.id.clone()) {
            return Err(line_err(line, format!("duplicate sample id {:?}", rec.id)));
        }
        out.push(rec.to_sample()?);
    }
    Ok(out)
}

pub fn write_dataset(writer: impl Write, samples: &[EditSample]) -> Result<(), IoError> {
    write_jsonl(writer, samples.iter().map(DatasetRecord::from_sample))
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PredictionRecord {
    pub id: String,
    pub hypothesis: String,
}

/// Pairs every sample with its prediction.
///
/// Missing, duplicate and unknown prediction ids are errors.
pub fn join_predictions(
    samples: Vec<EditSample>,
    predictions: Vec<(usize, PredictionRecord)>,
) -> Result<Vec<EvalUnit>, IoError> {
    let known: HashSet<&str> = samples.iter().map(|s| s.id.as_str()).collect();
    let mut by_id: HashMap<String, String> = HashMap::new();
    for (line, p) in predictions {
        if !known.contains(p.id.as_str()) {
            return Err(line_err(line, format!("prediction for unknown sample {:?}", p.id)));
        }
        if by_id.insert(p.id.clone(), p.hypothesis).is_some() {
            return Err(line_err(line, format!("duplicate prediction for {:?}", p.id)));
        }
    }
    samples
        .into_iter()
        .map(|s| {
            let h = by_id.remove(&s.id).ok_or_else(|| record_err(&s.id, "no prediction"))?;
            let hyp = tokenize(&h, s.mode());
            let id = s.id.clone();
            EvalUnit::new(s, hyp).map_err(|e| record_err(&id, e))
        })
        .collect()
}

/// One sentence of a CoNLL-U file.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ConlluSentence {
    pub sent_id: Option<String>,
    /// Line number of the first token.
    pub line: usize,
    pub tokens: Vec<ParseToken>,
}

/// Reads CoNLL-U, skipping multiword-token and empty-node lines.
pub fn read_conllu(reader: impl BufRead) -> Result<Vec<ConlluSentence>, IoError> {
    let mut out = Vec::new();
    let mut current = ConlluSentence { sent_id: None, line: 0, tokens: Vec::new() };
    let flush = |cur: &mut ConlluSentence, out: &mut Vec<ConlluSentence>| {
        if !cur.tokens.is_empty() {
            out.push(std::mem::replace(cur, ConlluSentence { sent_id: None, line: 0, tokens: Vec::new() }));
        } else {
            cur.sent_id = None;
        }
    };
    for (i, line) in reader.lines().enumerate() {
        let line = line?;
        let n = i + 1;
        let line = line.trim_end_matches('\r');
        if line.trim().is_empty() {
            flush(&mut current, &mut out);
            continue;
        }
        if let Some(comment) = line.strip_prefix('#') {
            if let Some((key, value)) = comment.split_once('=') {
                if key.trim() == "sent_id" {
                    current.sent_id = Some(value.trim().to_string());
                }
            }
            continue;
        }
        let cols: Vec<&str> = line.split('\t').collect();
        if cols.len() != 10 {
            return Err(line_err(n, format!("expected 10 tab-separated columns, found {}", cols.len())));
        }
        if cols[0].contains('-') || cols[0].contains('.') {
            continue;
        }
        let id: usize = cols[0].parse().map_err(|_| line_err(n, format!("bad token id {:?}", cols[0])))?;
        if id != current.tokens.len() + 1 {
            return Err(line_err(n, format!("token id {id} out of sequence")));
        }
        let head: usize = cols[6].parse().map_err(|_| line_err(n, format!("bad head {:?}", cols[6])))?;
        if current.tokens.is_empty() {
            current.line = n;
        }
        current.tokens.push(ParseToken {
            form: cols[1].to_string(),
            upos: cols[3].to_string(),
            head: head.checked_sub(1),
            deprel: cols[7].to_string(),
        });
    }
    flush(&mut current, &mut out);
    Ok(out)
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SrlArgumentRecord {
    pub label: String,
    pub start: usize,
    pub end: usize,
}

/// One predicate frame; `caption_id` is `video#index`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SrlRecord {
    pub caption_id: String,
    pub predicate: usize,
    #[serde(default)]
    pub arguments: Vec<SrlArgumentRecord>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CaptionRecord {
    pub video_id: String,
    pub captions: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct NeighborRecord {
    pub video_id: String,
    pub neighbors: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PplRecord {
    pub text: String,
    pub ppl: f64,
}

/// Splits `video#index`.
pub fn parse_caption_id(id: &str) -> Option<(String, usize)> {
    let (video, idx) = id.rsplit_once('#')?;
    Some((video.to_string(), idx.parse().ok()?))
}

pub fn read_captions(reader: impl BufRead, mode: LanguageMode) -> Result<Vec<CaptionGroup>, IoError> {
    let mut seen = HashSet::new();
    let mut out = Vec::new();
    for (line, rec) in read_jsonl::<CaptionRecord>(reader)? {
        if !seen.insert(rec.video_id.clone()) {
            return Err(line_err(line, format!("duplicate video id {:?}", rec.video_id)));
        }
        out.push(CaptionGroup {
            video_id: rec.video_id,
            captions: rec.captions.iter().map(|c| tokenize(c, mode)).collect(),
        });
    }
    Ok(out)
}

/// Attaches parses to caption groups. Sentences need a `sent_id` of the
/// form `video#index` naming an existing caption.
pub fn assemble_corpus(groups: Vec<CaptionGroup>, sentences: Vec<ConlluSentence>) -> Result<Corpus, IoError> {
    let sizes: HashMap<&str, usize> = groups.iter().map(|g| (g.video_id.as_str(), g.captions.len())).collect();
    let mut parses: BTreeMap<(String, usize), ParseAnnotation> = BTreeMap::new();
    for s in sentences {
        let key = s
            .sent_id
            .as_deref()
            .and_then(parse_caption_id)
            .ok_or_else(|| line_err(s.line, "sentence lacks a sent_id of the form video#index"))?;
        if sizes.get(key.0.as_str()).is_none_or(|&n| key.1 >= n) {
            return Err(line_err(s.line, format!("sentence names unknown caption {}#{}", key.0, key.1)));
        }
        let annotation = ParseAnnotation { caption_index: key.1, tokens: s.tokens, frames: Vec::new() };
        if parses.insert(key.clone(), annotation).is_some() {
            return Err(line_err(s.line, format!("caption {}#{} parsed twice", key.0, key.1)));
        }
    }
    Ok(Corpus { groups, parses: parses.into_iter().collect(), ppl: HashMap::new(), neighbors: None })
}

/// Adds semantic-role frames to parsed captions.
pub fn attach_frames(corpus: &mut Corpus, frames: Vec<(usize, SrlRecord)>) -> Result<(), IoError> {
    for (line, f) in frames {
        let key = parse_caption_id(&f.caption_id).ok_or_else(|| line_err(line, "caption_id must be video#index"))?;
        let parse = corpus.parses.get_mut(&key).ok_or_else(|| line_err(line, format!("no parse for {}", f.caption_id)))?;
        parse.frames.push(SrlFrame {
            predicate: f.predicate,
            arguments: f
                .arguments
                .iter()
                .map(|a| SrlArgument { label: a.label.clone(), span: Span::new(a.start, a.end) })
                .collect(),
        });
    }
    Ok(())
}

/// First line of a session script.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SessionHeader {
    pub video_id: String,
    pub lang: LanguageMode,
    pub initial: String,
}

/// One round of a session script. Without `hypothesis` the oracle edits.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SessionStep {
    pub command: CommandRecord,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub hypothesis: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub payload: Option<Vec<String>>,
}

pub fn read_session_script(reader: impl BufRead) -> Result<(SessionHeader, Vec<(usize, SessionStep)>), IoError> {
    let mut lines = read_jsonl::<serde_json::Value>(reader)?.into_iter();
    let (hline, header) = lines.next().ok_or_else(|| line_err(1, "empty session script"))?;
    let header: SessionHeader = serde_json::from_value(header).map_err(|e| line_err(hline, e))?;
    let steps = lines
        .map(|(n, v)| serde_json::from_value(v).map(|s| (n, s)).map_err(|e| line_err(n, e)))
        .collect::<Result<_, _>>()?;
    Ok((header, steps))
}

/// Reads `id<TAB>control` lines.
pub fn read_controls(reader: impl BufRead) -> Result<Vec<(usize, String, String)>, IoError> {
    let mut out = Vec::new();
    for (i, line) in reader.lines().enumerate() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        let (id, control) = line.split_once('\t').ok_or_else(|| line_err(i + 1, "expected id<TAB>control"))?;
        out.push((i + 1, id.to_string(), control.to_string()));
    }
    Ok(out)
}

pub fn write_controls<'a>(
    mut writer: impl Write,
    rows: impl IntoIterator<Item = (&'a str, &'a str)>,
) -> Result<(), IoError> {
    for (id, control) in rows {
        writeln!(writer, "{id}\t{control}")?;
    }
    Ok(())
}
