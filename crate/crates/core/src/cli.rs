//! The `vdedit` command-line front end.
//!
//! Exit status is 0 on success, 2 for bad input (the message names the
//! offending line or sample id) and 1 for internal failures.

use std::fs::File;
use std::io::{self, BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};

use clap::{Parser, Subcommand};
use serde::Serialize;
use serde_json::json;

use crate::align::dsa_align;
use crate::command::{self, ControlSequence, PositionedReference};
use crate::construct::{construct_dataset, ConstructionConfig, Partition};
use crate::edit::{oracle_apply, payload_from_ground_truth, session_step, OracleConfig, Payload, RoundSource, Session};
use crate::io::{
    assemble_corpus, attach_frames, join_predictions, read_captions, read_conllu, read_controls, read_dataset, read_jsonl,
    read_session_script, write_controls, write_dataset, write_jsonl, CommandRecord, IoError, NeighborRecord,
    PplRecord, PredictionRecord, SrlRecord,
};
use crate::metrics::{evaluate_corpus, LengthRule, MetricConfig};
use crate::text::{tokenize, LanguageMode};

const ORACLE_NOTE: &str = "Oracle outputs satisfy each command literally; they are a controllability \
witness, not fluent captions.";

#[derive(Debug, Parser)]
#[command(name = "vdedit", version, about = "Command-driven caption editing toolkit")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Cmd,
}

#[derive(Debug, Subcommand)]
pub enum Cmd {
    /// Score predictions against a dataset.
    Evaluate {
        #[arg(long)]
        dataset: PathBuf,
        #[arg(long)]
        predictions: PathBuf,
        /// Minimum length change for Len-Acc.
        #[arg(long, default_value_t = 1)]
        delta: usize,
        /// Break the table down by command kind.
        #[arg(long)]
        per_kind: bool,
        /// Print the structured report instead of the table.
        #[arg(long)]
        json: bool,
        /// Also write the structured report to this file.
        #[arg(long)]
        report: Option<PathBuf>,
    },
    /// Build a dataset from captions, parses and semantic-role frames.
    Construct {
        #[arg(long)]
        captions: PathBuf,
        /// CoNLL-U with `sent_id = video#index` comments.
        #[arg(long)]
        parses: PathBuf,
        #[arg(long)]
        srl: PathBuf,
        /// JSON construction settings; missing fields take defaults.
        #[arg(long)]
        config: Option<PathBuf>,
        #[arg(long)]
        seed: u64,
        #[arg(long)]
        out: PathBuf,
        #[arg(long, default_value = "en-word")]
        lang: LanguageMode,
        #[arg(long)]
        neighbors: Option<PathBuf>,
        #[arg(long)]
        ppl: Option<PathBuf>,
        /// Where to write corpus statistics (default: `<out>.stats.json`).
        #[arg(long)]
        stats: Option<PathBuf>,
        /// Directory for train/val/test files.
        #[arg(long)]
        split_dir: Option<PathBuf>,
    },
    /// Render each sample as `id<TAB>control sequence`.
    Serialize {
        #[arg(long)]
        dataset: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
    /// Parse `id<TAB>control` lines and print one JSON record per line.
    ParseControl {
        #[arg(long = "in")]
        input: PathBuf,
        #[arg(long, default_value = "en-word")]
        mode: LanguageMode,
        /// Dataset whose references let delete spans be recovered.
        #[arg(long)]
        dataset: Option<PathBuf>,
    },
    /// Align a reference containing `[MASK]` sentinels with a hypothesis.
    Align {
        #[arg(long = "ref")]
        reference: String,
        #[arg(long)]
        hyp: String,
        #[arg(long, default_value = "en-word")]
        mode: LanguageMode,
    },
    /// Apply every command with the rule-based oracle and write predictions.
    #[command(after_help = ORACLE_NOTE)]
    OracleEdit {
        #[arg(long)]
        dataset: PathBuf,
        #[arg(long)]
        out: PathBuf,
        #[arg(long, default_value_t = 1)]
        delta: usize,
    },
    /// Replay a multi-round editing script.
    #[command(after_help = ORACLE_NOTE)]
    Session {
        #[arg(long)]
        script: PathBuf,
        #[arg(long, default_value_t = 1)]
        delta: usize,
    },
    /// Print corpus statistics.
    Stats {
        #[arg(long)]
        dataset: PathBuf,
    },
}

/// A failure with its exit status.
#[derive(Debug)]
pub enum CliError {
    Input(String),
    Internal(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Input(_) => 2,
            CliError::Internal(_) => 1,
        }
    }
}

impl std::fmt::Display for CliError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            CliError::Input(m) | CliError::Internal(m) => f.write_str(m),
        }
    }
}

impl From<IoError> for CliError {
    fn from(e: IoError) -> Self {
        CliError::Input(e.to_string())
    }
}

type CliResult = Result<(), CliError>;

fn open(path: &Path) -> Result<BufReader<File>, CliError> {
    File::open(path)
        .map(BufReader::new)
        .map_err(|e| CliError::Input(format!("{}: {e}", path.display())))
}

fn create(path: &Path) -> Result<BufWriter<File>, CliError> {
    File::create(path)
        .map(BufWriter::new)
        .map_err(|e| CliError::Internal(format!("{}: {e}", path.display())))
}

fn in_file<T>(path: &Path, r: Result<T, IoError>) -> Result<T, CliError> {
    r.map_err(|e| match e {
        IoError::Io(e) => CliError::Internal(format!("{}: {e}", path.display())),
        other => CliError::Input(format!("{}: {other}", path.display())),
    })
}

fn flush(mut w: impl Write) -> CliResult {
    w.flush().map_err(|e| CliError::Internal(e.to_string()))
}

fn to_json<T: Serialize>(value: &T) -> Result<String, CliError> {
    serde_json::to_string_pretty(value).map_err(|e| CliError::Internal(e.to_string()))
}

/// Runs a parsed command line, writing results to `out`.
pub fn run(cli: Cli, out: &mut dyn Write) -> CliResult {
    let w = |out: &mut dyn Write, s: &str| writeln!(out, "{s}").map_err(|e| CliError::Internal(e.to_string()));
    match cli.command {
        Cmd::Evaluate { dataset, predictions, delta, per_kind, json, report } => {
            let samples = in_file(&dataset, read_dataset(open(&dataset)?))?;
            let preds = in_file(&predictions, read_jsonl::<PredictionRecord>(open(&predictions)?))?;
            let units = in_file(&predictions, join_predictions(samples, preds))?;
            let config = MetricConfig { length: LengthRule::Delta(delta) };
            let rep = evaluate_corpus(&units, &config).map_err(|e| CliError::Input(e.to_string()))?;
            let structured = to_json(&rep)?;
            if let Some(path) = report {
                let mut f = create(&path)?;
                writeln!(f, "{structured}").map_err(|e| CliError::Internal(e.to_string()))?;
                flush(f)?;
            }
            if json {
                w(out, &structured)
            } else {
                write!(out, "{}", rep.to_table(per_kind)).map_err(|e| CliError::Internal(e.to_string()))
            }
        }
        Cmd::Construct { captions, parses, srl, config, seed, out: out_path, lang, neighbors, ppl, stats, split_dir } => {
            let config: ConstructionConfig = match config {
                Some(p) => serde_json::from_reader(open(&p)?)
                    .map_err(|e| CliError::Input(format!("{}: {e}", p.display())))?,
                None => ConstructionConfig::default(),
            };
            let groups = in_file(&captions, read_captions(open(&captions)?, lang))?;
            let sentences = in_file(&parses, read_conllu(open(&parses)?))?;
            let frames = in_file(&srl, read_jsonl::<SrlRecord>(open(&srl)?))?;
            let mut corpus = in_file(&parses, assemble_corpus(groups, sentences))?;
            in_file(&srl, attach_frames(&mut corpus, frames))?;
            if let Some(p) = &neighbors {
                let recs = in_file(p, read_jsonl::<NeighborRecord>(open(p)?))?;
                corpus.neighbors = Some(recs.into_iter().map(|(_, r)| (r.video_id, r.neighbors)).collect());
            }
            if let Some(p) = &ppl {
                let recs = in_file(p, read_jsonl::<PplRecord>(open(p)?))?;
                corpus.ppl = recs.into_iter().map(|(_, r)| (r.text, r.ppl)).collect();
            }
            let built = construct_dataset(&corpus, &config, seed).map_err(|e| CliError::Input(e.to_string()))?;
            let mut f = create(&out_path)?;
            in_file(&out_path, write_dataset(&mut f, &built.samples))?;
            flush(f)?;
            let stats_path = stats.unwrap_or_else(|| {
                let mut s = out_path.clone().into_os_string();
                s.push(".stats.json");
                PathBuf::from(s)
            });
            let mut f = create(&stats_path)?;
            writeln!(f, "{}", to_json(&built.stats)?).map_err(|e| CliError::Internal(e.to_string()))?;
            flush(f)?;
            if let Some(dir) = split_dir {
                std::fs::create_dir_all(&dir).map_err(|e| CliError::Internal(format!("{}: {e}", dir.display())))?;
                for (name, part) in [("train", Partition::Train), ("val", Partition::Val), ("test", Partition::Test)] {
                    let path = dir.join(format!("{name}.jsonl"));
                    let mut f = create(&path)?;
                    in_file(&path, write_dataset(&mut f, built.split.part(part)))?;
                    flush(f)?;
                }
            }
            w(out, &format!("wrote {} samples to {}", built.samples.len(), out_path.display()))
        }
        Cmd::Serialize { dataset, out: out_path } => {
            let samples = in_file(&dataset, read_dataset(open(&dataset)?))?;
            let mut rows = Vec::with_capacity(samples.len());
            for s in &samples {
                let ctrl = command::serialize(&s.command, &s.reference)
                    .map_err(|e| CliError::Input(format!("record {:?}: {e}", s.id)))?;
                rows.push((s.id.as_str(), ctrl.into_string()));
            }
            let mut f = create(&out_path)?;
            in_file(&out_path, write_controls(&mut f, rows.iter().map(|(i, c)| (*i, c.as_str()))))?;
            flush(f)
        }
        Cmd::ParseControl { input, mode, dataset } => {
            let originals = match &dataset {
                Some(p) => in_file(p, read_dataset(open(p)?))?
                    .into_iter()
                    .map(|s| (s.id.clone(), s.reference))
                    .collect(),
                None => std::collections::HashMap::new(),
            };
            let rows = in_file(&input, read_controls(open(&input)?))?;
            let mut records = Vec::with_capacity(rows.len());
            for (line, id, ctrl) in rows {
                let original = originals.get(&id);
                let mode = original.map_or(mode, |o| o.mode());
                let parsed = command::parse(&ControlSequence::new(ctrl), mode, original)
                    .map_err(|e| CliError::Input(format!("{}: line {line}: {e}", input.display())))?;
                records.push(json!({
                    "id": id,
                    "kind": parsed.kind.id(),
                    "op": parsed.op,
                    "attributes": parsed.attributes.as_ref().map(|a| a.iter().map(|a| a.render(mode)).collect::<Vec<_>>()),
                    "reference": parsed.positioned.render(),
                    "mask_indices": parsed.positioned.mask_indices(),
                    "command": parsed.command.as_ref().map(|c| CommandRecord::from_command(c, mode)),
                }));
            }
            write_jsonl(&mut *out, records).map_err(|e| CliError::Internal(e.to_string()))
        }
        Cmd::Align { reference, hyp, mode } => {
            let posref = PositionedReference::parse_text(&reference, mode);
            let result = dsa_align(&posref, &tokenize(&hyp, mode)).map_err(|e| CliError::Input(e.to_string()))?;
            let record = json!({
                "reference": posref.items().iter().map(|i| i.as_str()).collect::<Vec<_>>(),
                "hypothesis": tokenize(&hyp, mode).tokens(),
                "alignment": result,
                "mask_span_lengths": result.mask_span_lengths(),
            });
            w(out, &to_json(&record)?)
        }
        Cmd::OracleEdit { dataset, out: out_path, delta } => {
            let samples = in_file(&dataset, read_dataset(open(&dataset)?))?;
            let config = OracleConfig { delta };
            let mut preds = Vec::with_capacity(samples.len());
            for s in &samples {
                let payload =
                    s.payload.clone().or_else(|| payload_from_ground_truth(&s.command, &s.reference, &s.ground_truth));
                let edited = oracle_apply(&s.command, &s.reference, payload.as_ref(), &config)
                    .map_err(|e| CliError::Input(format!("record {:?}: {e}", s.id)))?;
                preds.push(PredictionRecord { id: s.id.clone(), hypothesis: edited.detokenize() });
            }
            let mut f = create(&out_path)?;
            in_file(&out_path, write_jsonl(&mut f, preds))?;
            flush(f)?;
            eprintln!("{ORACLE_NOTE}");
            Ok(())
        }
        Cmd::Session { script, delta } => {
            let (header, steps) = in_file(&script, read_session_script(open(&script)?))?;
            let mode = header.lang;
            let mut session = Session::new(&header.video_id, tokenize(&header.initial, mode));
            let config = OracleConfig { delta };
            let mut records = Vec::with_capacity(steps.len());
            for (line, step) in steps {
                let at = |e: String| CliError::Input(format!("{}: line {line}: {e}", script.display()));
                let cmd = step.command.to_command(mode).map_err(at)?;
                let payload = step.payload.as_ref().map(|p| Payload::from_strings(p, mode));
                let hyp = step.hypothesis.as_ref().map(|h| tokenize(h, mode));
                session = session_step(&session, cmd, hyp, payload.as_ref(), &config).map_err(|e| at(e.to_string()))?;
                let round = session.rounds().last().expect("a round was just added");
                let ctrl = command::serialize(&round.command, &round.reference).map_err(|e| at(e.to_string()))?;
                records.push(json!({
                    "round": session.rounds().len(),
                    "source": round.source,
                    "control": ctrl.as_str(),
                    "reference": round.reference.detokenize(),
                    "edited": round.edited.detokenize(),
                }));
            }
            write_jsonl(&mut *out, records).map_err(|e| CliError::Internal(e.to_string()))?;
            if session.rounds().iter().any(|r| r.source == RoundSource::Oracle) {
                eprintln!("{ORACLE_NOTE}");
            }
            Ok(())
        }
        Cmd::Stats { dataset } => {
            let samples = in_file(&dataset, read_dataset(open(&dataset)?))?;
            let stats = crate::construct::corpus_stats(&samples).map_err(|e| CliError::Input(e.to_string()))?;
            w(out, &to_json(&stats)?)
        }
    }
}

/// Parses `args`, runs the command against stdout and returns the exit status.
pub fn main_with_args<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 2 } else { 0 };
            let _ = e.print();
            return code;
        }
    };
    let stdout = io::stdout();
    let mut lock = stdout.lock();
    match run(cli, &mut lock).and_then(|_| flush(&mut lock)) {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    }
}
