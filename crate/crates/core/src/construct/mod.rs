//! Dataset construction from caption groups, dependency parses and
//! semantic-role frames.
//!
//! * [`build_add_length`] and [`build_del_length`] pair captions by length,
//!   the latter borrowing longer captions from similar videos;
//! * [`degrade`] removes modifier branches and [`make_attribute_samples`]
//!   turns each removal into positional and attribute samples;
//! * [`filter_and_balance`], [`split_by_video`] and [`corpus_stats`] finish
//!   the dataset.
//!
//! [`construct_dataset`] runs the whole pipeline.

mod balance;
mod degrade;
mod pairing;
mod samples;

use std::collections::HashMap;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::command::{CommandError, Span};
use crate::sample::{EditSample, SampleError};
use crate::text::TokenSeq;

pub use balance::{
    corpus_stats, filter_and_balance, split_by_video, DatasetSplit, FilterConfig, Partition, SplitConfig, StatRecord,
};
pub use degrade::{degrade, DegradeConfig, Degradation};
pub use pairing::{build_add_length, build_del_length, content_jaccard, LengthConfig};
pub use samples::make_attribute_samples;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ConstructError {
    #[error("caption {caption}: {message}")]
    InvalidParse { caption: usize, message: String },
    #[error(transparent)]
    Sample(#[from] SampleError),
    #[error("no samples to summarize")]
    EmptyCorpus,
    #[error("video {0:?} has no split assignment")]
    UnknownVideo(String),
    #[error("invalid configuration: {0}")]
    InvalidConfig(String),
}

impl From<CommandError> for ConstructError {
    fn from(e: CommandError) -> Self {
        ConstructError::Sample(e.into())
    }
}

/// All human captions of one video.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CaptionGroup {
    pub video_id: String,
    pub captions: Vec<TokenSeq>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ParseToken {
    pub form: String,
    /// Coarse part-of-speech tag (`NOUN`, `ADJ`, ...).
    pub upos: String,
    /// 0-based index of the head token, `None` for the root.
    pub head: Option<usize>,
    pub deprel: String,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SrlArgument {
    pub label: String,
    pub span: Span,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SrlFrame {
    /// 0-based index of the predicate token.
    pub predicate: usize,
    pub arguments: Vec<SrlArgument>,
}

/// Dependency parse and semantic-role frames of one caption.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ParseAnnotation {
    pub caption_index: usize,
    pub tokens: Vec<ParseToken>,
    pub frames: Vec<SrlFrame>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, Default)]
#[serde(default)]
pub struct ConstructionConfig {
    pub degrade: DegradeConfig,
    pub length: LengthConfig,
    /// Re-target position-free attribute samples to other captions.
    pub relaxation: bool,
    pub filter: FilterConfig,
    pub split: SplitConfig,
}

/// Everything the pipeline reads.
#[derive(Debug, Clone, Default)]
pub struct Corpus {
    pub groups: Vec<CaptionGroup>,
    /// Keyed by video id and caption index.
    pub parses: HashMap<(String, usize), ParseAnnotation>,
    /// Fluency scores keyed by detokenized caption text.
    pub ppl: HashMap<String, f64>,
    /// Neighbor lists that replace similarity retrieval.
    pub neighbors: Option<HashMap<String, Vec<String>>>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ConstructedDataset {
    pub samples: Vec<EditSample>,
    pub split: DatasetSplit,
    pub stats: StatRecord,
}

/// Runs pairing, degradation, filtering, balancing and splitting.
///
/// The output depends only on the inputs and `seed`.
pub fn construct_dataset(
    corpus: &Corpus,
    config: &ConstructionConfig,
    seed: u64,
) -> Result<ConstructedDataset, ConstructError> {
    let mut samples = Vec::new();
    for group in &corpus.groups {
        samples.extend(build_add_length(group, &config.length)?);
        for (i, caption) in group.captions.iter().enumerate() {
            let Some(parse) = corpus.parses.get(&(group.video_id.clone(), i)) else { continue };
            let degradations = degrade(caption, parse, &config.degrade).map_err(|e| match e {
                ConstructError::InvalidParse { caption, message } => ConstructError::InvalidParse {
                    caption,
                    message: format!("video {}: {message}", group.video_id),
                },
                other => other,
            })?;
            samples.extend(make_attribute_samples(group, i, &degradations, config.relaxation)?);
        }
    }
    samples.extend(build_del_length(&corpus.groups, &config.length, corpus.neighbors.as_ref())?);
    for s in &mut samples {
        if s.aux.ppl.is_none() {
            s.aux.ppl = corpus.ppl.get(&s.ground_truth.detokenize()).copied();
        }
    }
    let samples = filter_and_balance(samples, &config.filter, seed);
    let split = split_by_video(&samples, &config.split, seed)?;
    let stats = corpus_stats(&samples)?;
    Ok(ConstructedDataset { samples, split, stats })
}
