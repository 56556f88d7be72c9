//! The editing quadruple: video id, command, reference and ground truth.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::command::{Command, CommandError, CommandKind};
use crate::edit::Payload;
use crate::text::{LanguageMode, TokenSeq};

/// How a sample was produced.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Provenance {
    /// Two captions of one video with a large length gap.
    LengthPair,
    /// A longer caption borrowed from a similar video.
    NegativeRetrieval,
    /// Attribute branches removed from a parsed caption.
    Degradation,
    /// A degradation sample with reference and ground truth swapped.
    Reversal,
    /// Ground truth re-targeted to another caption of the same video.
    Relaxation,
}

/// Optional precomputed fluency and grounding scores.
#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct AuxScores {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub ppl: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub emscore: Option<f64>,
}

impl AuxScores {
    pub fn is_empty(&self) -> bool {
        self.ppl.is_none() && self.emscore.is_none()
    }
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum SampleError {
    #[error(transparent)]
    Command(#[from] CommandError),
    #[error("reference and ground truth use different language modes")]
    ModeMismatch,
}

#[derive(Debug, Clone, PartialEq)]
pub struct EditSample {
    pub id: String,
    pub video_id: String,
    pub command: Command,
    pub reference: TokenSeq,
    pub ground_truth: TokenSeq,
    pub provenance: Option<Provenance>,
    pub aux: AuxScores,
    pub payload: Option<Payload>,
}

impl EditSample {
    /// Validates the command against the reference and the payload arity.
    pub fn new(
        id: impl Into<String>,
        video_id: impl Into<String>,
        command: Command,
        reference: TokenSeq,
        ground_truth: TokenSeq,
    ) -> Result<Self, SampleError> {
        if reference.mode() != ground_truth.mode() {
            return Err(SampleError::ModeMismatch);
        }
        command.validate_for(&reference)?;
        Ok(EditSample {
            id: id.into(),
            video_id: video_id.into(),
            command,
            reference,
            ground_truth,
            provenance: None,
            aux: AuxScores::default(),
            payload: None,
        })
    }

    pub fn with_provenance(mut self, provenance: Provenance) -> Self {
        self.provenance = Some(provenance);
        self
    }

    pub fn with_aux(mut self, aux: AuxScores) -> Self {
        self.aux = aux;
        self
    }

    pub fn with_payload(mut self, payload: Payload) -> Result<Self, SampleError> {
        let expected = self.command.position_count();
        if self.command.kind().has_positions() && payload.spans.len() != expected {
            return Err(CommandError::PayloadArity { expected, got: payload.spans.len() }.into());
        }
        self.payload = Some(payload);
        Ok(self)
    }

    pub fn mode(&self) -> LanguageMode {
        self.reference.mode()
    }

    pub fn kind(&self) -> CommandKind {
        self.command.kind()
    }
}
