//! Toolkit for command-driven caption editing.
//!
//! The crate models multi-grained edit commands over a reference caption,
//! renders them as flat control sequences, builds editing datasets from
//! annotated caption corpora, applies commands with a deterministic oracle,
//! and scores edited captions for controllability and fluency.
//!
//! | module | contents |
//! |---|---|
//! | [`text`] | tokenization, n-grams, edit distance, LCS |
//! | [`command`] | commands, positioned references, control-sequence codec |
//! | [`align`] | mask-aware sequence alignment |
//! | [`metrics`] | Len/Attr/Pos accuracy, SARI, BLEU-4, ROUGE-L, reports |
//! | [`construct`] | dataset construction from captions and parses |
//! | [`edit`] | oracle editor and multi-round sessions |
//! | [`io`] | line-delimited record formats, CoNLL-U and config readers |
//! | [`cli`] | the `vdedit` command-line front end |
//!
//! A guide with worked examples lives in the `book/` directory of the
//! repository.

pub mod align;
pub mod cli;
pub mod command;
pub mod construct;
pub mod edit;
#[cfg(doctest)]
mod guide;
pub mod io;
pub mod metrics;
pub mod sample;
pub mod text;

pub use align::{dsa_align, AlignmentResult};
pub use command::{Attribute, Command, CommandKind, ControlSequence, Operation, PositionedReference, Span};
pub use edit::{oracle_apply, Payload, Session};
pub use metrics::{evaluate_corpus, EvalUnit, MetricConfig, MetricReport};
pub use sample::{EditSample, Provenance};
pub use text::{tokenize, LanguageMode, TokenSeq};
