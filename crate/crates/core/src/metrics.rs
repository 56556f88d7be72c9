//! Controllability and fluency metrics for edited captions.
//!
//! Per-sample checks:
//!
//! * **Len-Acc**: the caption grew (add) or shrank (delete) by at least the
//!   configured amount;
//! * **Attr-Acc**: every commanded attribute phrase is present (add) or none
//!   is (delete);
//! * **Pos-Acc**: after [`dsa_align`], every `[MASK]` of an add-positional
//!   command absorbed at least one token;
//! * **SARI**: add-F1, keep-F1 and delete-precision over 1..4-grams of
//!   source, hypothesis and ground truth.
//!
//! Corpus metrics are corpus-level BLEU-4 and mean ROUGE-L against the ground
//! truth. Perplexity and EMScore are never computed here; precomputed values
//! attached to samples are averaged when present.
//!
//! All comparisons use normalized tokens (lowercased words in word mode).

use std::collections::{BTreeMap, HashMap, HashSet};
use std::fmt::Write as _;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::align::dsa_align;
use crate::command::{make_positioned_reference, CommandKind};
use crate::sample::EditSample;
use crate::text::{count_ngrams, contains_run, lcs_len, LanguageMode, TokenSeq, MAX_NGRAM_ORDER};

/// ROUGE-L recall weight.
pub const ROUGE_BETA: f64 = 1.2;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum MetricError {
    #[error("cannot evaluate an empty corpus")]
    EmptyCorpus,
    #[error("corpus mixes language modes ({0} and {1})")]
    MixedModes(LanguageMode, LanguageMode),
    #[error("hypothesis for {id} is {got} but the sample is {expected}")]
    ModeMismatch { id: String, expected: LanguageMode, got: LanguageMode },
}

/// A sample paired with the caption a system produced for it.
#[derive(Debug, Clone, PartialEq)]
pub struct EvalUnit {
    pub sample: EditSample,
    pub hypothesis: TokenSeq,
}

impl EvalUnit {
    pub fn new(sample: EditSample, hypothesis: TokenSeq) -> Result<Self, MetricError> {
        if sample.mode() != hypothesis.mode() {
            return Err(MetricError::ModeMismatch {
                id: sample.id.clone(),
                expected: sample.mode(),
                got: hypothesis.mode(),
            });
        }
        Ok(EvalUnit { sample, hypothesis })
    }
}

/// What counts as meeting a length requirement.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LengthRule {
    /// Change by at least this many tokens.
    Delta(usize),
    /// Change by at least this fraction of the reference length.
    Relative(f64),
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MetricConfig {
    pub length: LengthRule,
}

impl Default for MetricConfig {
    fn default() -> Self {
        MetricConfig { length: LengthRule::Delta(1) }
    }
}

pub fn len_acc(unit: &EvalUnit, config: &MetricConfig) -> bool {
    let r = unit.sample.reference.len();
    let h = unit.hypothesis.len();
    let add = unit.sample.kind().operation() == crate::command::Operation::Add;
    match (config.length, add) {
        (LengthRule::Delta(d), true) => h >= r + d,
        (LengthRule::Delta(d), false) => h + d <= r,
        (LengthRule::Relative(f), true) => h as f64 >= r as f64 * (1.0 + f),
        (LengthRule::Relative(f), false) => h as f64 <= r as f64 * (1.0 - f),
    }
}

/// `None` for kinds without attributes.
pub fn attr_acc(unit: &EvalUnit) -> Option<bool> {
    let attrs = unit.sample.command.attributes()?;
    let mode = unit.hypothesis.mode();
    let hyp = comparable(&unit.hypothesis);
    let present = |phrase: &[String]| contains_run(&hyp, phrase);
    let all_present = attrs.iter().all(|a| present(&a.normalized(mode)));
    let none_present = attrs.iter().all(|a| !present(&a.normalized(mode)));
    Some(match unit.sample.kind().operation() {
        crate::command::Operation::Add => all_present,
        crate::command::Operation::Del => none_present,
    })
}

// Word mode: normalized tokens. Char mode: the character stream.
fn comparable(seq: &TokenSeq) -> Vec<String> {
    match seq.mode() {
        LanguageMode::WordLevel => seq.normalized(),
        LanguageMode::CharLevel => seq.tokens().iter().flat_map(|t| t.chars()).map(String::from).collect(),
    }
}

/// `None` unless the command adds at positions.
pub fn pos_acc(unit: &EvalUnit) -> Option<bool> {
    if !matches!(unit.sample.kind(), CommandKind::AddPos | CommandKind::AddPosAttr) {
        return None;
    }
    let posref = make_positioned_reference(&unit.sample.reference, &unit.sample.command)
        .expect("sample commands are validated against their reference");
    let aligned = dsa_align(&posref, &unit.hypothesis).expect("unit modes are validated");
    Some(aligned.mask_spans.iter().all(|s| !s.is_empty()))
}

/// Single-reference SARI in `[0, 1]`, source = reference caption.
pub fn sari(unit: &EvalUnit) -> f64 {
    sari_tokens(&unit.sample.reference.normalized(), &unit.hypothesis.normalized(), &unit.sample.ground_truth.normalized())
}

/// SARI over pre-normalized token lists. A component with nothing expected
/// and nothing produced scores 1.
pub fn sari_tokens(source: &[String], hypothesis: &[String], target: &[String]) -> f64 {
    let mut keep = 0.0;
    let mut del = 0.0;
    let mut add = 0.0;
    for n in 1..=MAX_NGRAM_ORDER {
        let (k, d, a) = sari_ngram(source, hypothesis, target, n);
        keep += k;
        del += d;
        add += a;
    }
    let orders = MAX_NGRAM_ORDER as f64;
    (keep / orders + del / orders + add / orders) / 3.0
}

fn f1(p: f64, r: f64) -> f64 {
    if p + r > 0.0 {
        2.0 * p * r / (p + r)
    } else {
        0.0
    }
}

fn sari_ngram(source: &[String], hypothesis: &[String], target: &[String], n: usize) -> (f64, f64, f64) {
    let s = count_ngrams(source, n);
    let c = count_ngrams(hypothesis, n);
    let r = count_ngrams(target, n);
    let get = |m: &HashMap<&[String], usize>, g: &[String]| m.get(g).copied().unwrap_or(0);

    // keep: n-grams of the source retained in the hypothesis
    let mut kept = 0usize;
    let mut kept_precision = 0.0;
    let mut kept_good = 0usize;
    for (g, &sc) in &s {
        let k = sc.min(get(&c, g));
        if k == 0 {
            continue;
        }
        kept += 1;
        let good = k.min(get(&r, g));
        kept_precision += good as f64 / k as f64;
        kept_good += good;
    }
    let keep_expected: usize = s.iter().map(|(g, &sc)| sc.min(get(&r, g))).sum();
    let keep = if kept == 0 && keep_expected == 0 {
        1.0
    } else {
        let p = if kept > 0 { kept_precision / kept as f64 } else { 0.0 };
        let rc = if keep_expected > 0 { kept_good as f64 / keep_expected as f64 } else { 0.0 };
        f1(p, rc)
    };

    // delete: n-grams of the source dropped by the hypothesis
    let mut deleted = 0usize;
    let mut del_precision = 0.0;
    let mut del_expected = 0usize;
    for (g, &sc) in &s {
        if sc > get(&r, g) {
            del_expected += 1;
        }
        let d = sc.saturating_sub(get(&c, g));
        if d == 0 {
            continue;
        }
        deleted += 1;
        // deletions beyond what the ground truth dropped are not credited
        del_precision += d.min(sc.saturating_sub(get(&r, g))) as f64 / d as f64;
    }
    let del = if deleted == 0 && del_expected == 0 {
        1.0
    } else if deleted > 0 {
        del_precision / deleted as f64
    } else {
        0.0
    };

    // add: n-gram types new to the hypothesis
    let added: HashSet<&[String]> = c.keys().filter(|g| !s.contains_key(*g)).copied().collect();
    let add_expected: HashSet<&[String]> = r.keys().filter(|g| !s.contains_key(*g)).copied().collect();
    let add = if added.is_empty() && add_expected.is_empty() {
        1.0
    } else {
        let good = added.intersection(&add_expected).count() as f64;
        let p = if added.is_empty() { 0.0 } else { good / added.len() as f64 };
        let rc = if add_expected.is_empty() { 0.0 } else { good / add_expected.len() as f64 };
        f1(p, rc)
    };
    (keep, del, add)
}

/// LCS F-score against the ground truth with recall weight [`ROUGE_BETA`].
pub fn rouge_l(unit: &EvalUnit) -> f64 {
    rouge_l_tokens(&unit.hypothesis.normalized(), &unit.sample.ground_truth.normalized())
}

pub fn rouge_l_tokens(hypothesis: &[String], target: &[String]) -> f64 {
    if hypothesis.is_empty() || target.is_empty() {
        return 0.0;
    }
    let lcs = lcs_len(hypothesis, target) as f64;
    if lcs == 0.0 {
        return 0.0;
    }
    let p = lcs / hypothesis.len() as f64;
    let r = lcs / target.len() as f64;
    let b2 = ROUGE_BETA * ROUGE_BETA;
    (1.0 + b2) * p * r / (r + b2 * p)
}

/// Sufficient statistics for corpus BLEU; they add across sentences.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct BleuStats {
    pub matches: [u64; MAX_NGRAM_ORDER],
    pub totals: [u64; MAX_NGRAM_ORDER],
    pub hyp_len: u64,
    pub ref_len: u64,
}

impl BleuStats {
    pub fn of(hypothesis: &[String], target: &[String]) -> Self {
        let mut stats = BleuStats { hyp_len: hypothesis.len() as u64, ref_len: target.len() as u64, ..Default::default() };
        for n in 1..=MAX_NGRAM_ORDER {
            let c = count_ngrams(hypothesis, n);
            let r = count_ngrams(target, n);
            stats.matches[n - 1] = c.iter().map(|(g, &k)| k.min(r.get(g).copied().unwrap_or(0)) as u64).sum();
            stats.totals[n - 1] = hypothesis.len().saturating_sub(n - 1) as u64;
        }
        stats
    }

    pub fn merge(&mut self, o: &BleuStats) {
        for n in 0..MAX_NGRAM_ORDER {
            self.matches[n] += o.matches[n];
            self.totals[n] += o.totals[n];
        }
        self.hyp_len += o.hyp_len;
        self.ref_len += o.ref_len;
    }

    /// Unsmoothed BLEU-4 with brevity penalty; 0 if any order has no match.
    pub fn score(&self) -> f64 {
        if self.hyp_len == 0 {
            return 0.0;
        }
        let mut log_sum = 0.0;
        for n in 0..MAX_NGRAM_ORDER {
            if self.matches[n] == 0 || self.totals[n] == 0 {
                return 0.0;
            }
            log_sum += (self.matches[n] as f64 / self.totals[n] as f64).ln();
        }
        let bp = if self.hyp_len > self.ref_len {
            1.0
        } else {
            (1.0 - self.ref_len as f64 / self.hyp_len as f64).exp()
        };
        bp * (log_sum / MAX_NGRAM_ORDER as f64).exp()
    }
}

/// Corpus-level BLEU-4 against the ground truths.
pub fn bleu4(units: &[EvalUnit]) -> Result<f64, MetricError> {
    if units.is_empty() {
        return Err(MetricError::EmptyCorpus);
    }
    let mut stats = BleuStats::default();
    for u in units {
        stats.merge(&BleuStats::of(&u.hypothesis.normalized(), &u.sample.ground_truth.normalized()));
    }
    Ok(stats.score())
}

/// Every metric for one unit.
#[derive(Debug, Clone, PartialEq)]
pub struct UnitScores {
    pub kind: CommandKind,
    pub len_acc: bool,
    pub attr_acc: Option<bool>,
    pub pos_acc: Option<bool>,
    pub sari: f64,
    pub rouge_l: f64,
    pub bleu: BleuStats,
    pub ppl: Option<f64>,
    pub emscore: Option<f64>,
}

pub fn score_unit(unit: &EvalUnit, config: &MetricConfig) -> UnitScores {
    let src = unit.sample.reference.normalized();
    let hyp = unit.hypothesis.normalized();
    let gt = unit.sample.ground_truth.normalized();
    UnitScores {
        kind: unit.sample.kind(),
        len_acc: len_acc(unit, config),
        attr_acc: attr_acc(unit),
        pos_acc: pos_acc(unit),
        sari: sari_tokens(&src, &hyp, &gt),
        rouge_l: rouge_l_tokens(&hyp, &gt),
        bleu: BleuStats::of(&hyp, &gt),
        ppl: unit.sample.aux.ppl,
        emscore: unit.sample.aux.emscore,
    }
}

/// One line of a report. Accuracies are percentages; SARI, BLEU-4 and
/// ROUGE-L are fractions in `[0, 1]`. `None` means not applicable.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricRow {
    /// Command kind id, or `overall`.
    pub kind: String,
    pub count: usize,
    pub len_acc: f64,
    pub attr_acc: Option<f64>,
    pub pos_acc: Option<f64>,
    pub sari: f64,
    pub bleu4: f64,
    pub rouge_l: f64,
    pub ppl: Option<f64>,
    pub emscore: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricReport {
    pub rows: Vec<MetricRow>,
    pub overall: MetricRow,
}

#[derive(Default)]
struct RowAcc {
    count: usize,
    len_true: usize,
    attr: (usize, usize),
    pos: (usize, usize),
    sari: Vec<f64>,
    rouge: Vec<f64>,
    bleu: BleuStats,
    ppl: Vec<f64>,
    emscore: Vec<f64>,
}

impl RowAcc {
    fn add(&mut self, s: &UnitScores) {
        self.count += 1;
        self.len_true += usize::from(s.len_acc);
        if let Some(a) = s.attr_acc {
            self.attr.0 += usize::from(a);
            self.attr.1 += 1;
        }
        if let Some(p) = s.pos_acc {
            self.pos.0 += usize::from(p);
            self.pos.1 += 1;
        }
        self.sari.push(s.sari);
        self.rouge.push(s.rouge_l);
        self.bleu.merge(&s.bleu);
        self.ppl.extend(s.ppl);
        self.emscore.extend(s.emscore);
    }

    fn finish(mut self, kind: String) -> MetricRow {
        let pct = |(t, n): (usize, usize)| (n > 0).then(|| 100.0 * t as f64 / n as f64);
        MetricRow {
            kind,
            count: self.count,
            len_acc: 100.0 * self.len_true as f64 / self.count as f64,
            attr_acc: pct(self.attr),
            pos_acc: pct(self.pos),
            sari: order_free_mean(&mut self.sari).unwrap_or(0.0),
            bleu4: self.bleu.score(),
            rouge_l: order_free_mean(&mut self.rouge).unwrap_or(0.0),
            ppl: order_free_mean(&mut self.ppl),
            emscore: order_free_mean(&mut self.emscore),
        }
    }
}

// Sorting first makes the floating-point sum independent of input order.
fn order_free_mean(values: &mut [f64]) -> Option<f64> {
    if values.is_empty() {
        return None;
    }
    values.sort_by(f64::total_cmp);
    Some(values.iter().sum::<f64>() / values.len() as f64)
}

/// Per-kind rows (in [`CommandKind::ALL`] order, present kinds only) plus an
/// overall row.
pub fn evaluate_corpus(units: &[EvalUnit], config: &MetricConfig) -> Result<MetricReport, MetricError> {
    let first = units.first().ok_or(MetricError::EmptyCorpus)?;
    let mode = first.sample.mode();
    if let Some(u) = units.iter().find(|u| u.sample.mode() != mode) {
        return Err(MetricError::MixedModes(mode, u.sample.mode()));
    }
    let scores: Vec<UnitScores> = units.iter().map(|u| score_unit(u, config)).collect();
    Ok(aggregate(&scores))
}

/// Folds per-unit scores into a report.
pub fn aggregate(scores: &[UnitScores]) -> MetricReport {
    let mut per_kind: BTreeMap<CommandKind, RowAcc> = BTreeMap::new();
    let mut overall = RowAcc::default();
    for s in scores {
        per_kind.entry(s.kind).or_default().add(s);
        overall.add(s);
    }
    MetricReport {
        rows: per_kind.into_iter().map(|(k, acc)| acc.finish(k.id().to_string())).collect(),
        overall: overall.finish("overall".to_string()),
    }
}

impl MetricReport {
    /// Plain-text table; SARI, BLEU-4 and ROUGE-L are shown ×100.
    pub fn to_table(&self, per_kind: bool) -> String {
        let header = ["Command", "N", "Len-Acc", "Attr-Acc", "Pos-Acc", "SARI", "BLEU4", "ROUGE-L", "PPL", "EMScore"];
        let mut lines: Vec<[String; 10]> = Vec::new();
        let opt = |v: Option<f64>| v.map_or_else(|| "-".to_string(), |x| format!("{x:.1}"));
        let mut push = |label: &str, r: &MetricRow| {
            lines.push([
                label.to_string(),
                r.count.to_string(),
                format!("{:.1}", r.len_acc),
                opt(r.attr_acc),
                opt(r.pos_acc),
                format!("{:.1}", 100.0 * r.sari),
                format!("{:.1}", 100.0 * r.bleu4),
                format!("{:.1}", 100.0 * r.rouge_l),
                opt(r.ppl),
                r.emscore.map_or_else(|| "-".to_string(), |x| format!("{x:.3}")),
            ]);
        };
        if per_kind {
            for r in &self.rows {
                let label = r.kind.parse::<CommandKind>().map(CommandKind::label).unwrap_or(&r.kind);
                push(label, r);
            }
        }
        push("Overall", &self.overall);
        let mut widths: Vec<usize> = header.iter().map(|h| h.len()).collect();
        for l in &lines {
            for (w, c) in widths.iter_mut().zip(l) {
                *w = (*w).max(c.chars().count());
            }
        }
        let mut out = String::new();
        let fmt_line = |cells: &[String], out: &mut String| {
            for (i, (c, w)) in cells.iter().zip(&widths).enumerate() {
                if i == 0 {
                    let _ = write!(out, "{c:<w$}");
                } else {
                    let _ = write!(out, "  {c:>w$}");
                }
            }
            out.push('\n');
        };
        fmt_line(&header.map(String::from), &mut out);
        let rule: usize = widths.iter().sum::<usize>() + 2 * (widths.len() - 1);
        out.push_str(&"-".repeat(rule));
        out.push('\n');
        for l in &lines {
            fmt_line(l, &mut out);
        }
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::command::{Attribute, Command, Span};
    use crate::sample::AuxScores;
    use crate::text::tokenize;

    const MODE: LanguageMode = LanguageMode::WordLevel;

    fn w(s: &str) -> TokenSeq {
        tokenize(s, MODE)
    }

    fn unit(cmd: Command, reference: &str, gt: &str, hyp: &str) -> EvalUnit {
        let s = EditSample::new("s", "v", cmd, w(reference), w(gt)).unwrap();
        EvalUnit::new(s, w(hyp)).unwrap()
    }

    fn toks(s: &str) -> Vec<String> {
        s.split_whitespace().map(String::from).collect()
    }

    fn attrs(list: &[&str]) -> Vec<Attribute> {
        list.iter().map(|a| Attribute::parse(a, MODE).unwrap()).collect()
    }

    #[test]
    fn len_acc_examples() {
        let cfg = MetricConfig::default();
        let r10 = "a b c d e f g h i j";
        assert!(len_acc(&unit(Command::add_len(), r10, r10, "a b c d e f g h i j k l"), &cfg));
        assert!(!len_acc(&unit(Command::del_len(), r10, r10, r10), &cfg));
        let five = MetricConfig { length: LengthRule::Delta(5) };
        assert!(len_acc(&unit(Command::add_len(), r10, r10, "a b c d e f g h i j k l m n o p"), &five));
        assert!(!len_acc(&unit(Command::add_len(), r10, r10, "a b c d e f g h i j k l m n"), &five));
        let rel = MetricConfig { length: LengthRule::Relative(0.2) };
        assert!(len_acc(&unit(Command::del_len(), r10, r10, "a b c d e f g h"), &rel));
        assert!(!len_acc(&unit(Command::del_len(), r10, r10, "a b c d e f g h i"), &rel));
    }

    #[test]
    fn attr_acc_examples() {
        let u = unit(
            Command::add_attr(attrs(&["field", "hockey"])).unwrap(),
            "girls play",
            "girls play hockey on the field",
            "girls play hockey on a Field",
        );
        assert_eq!(attr_acc(&u), Some(true));
        let u = unit(Command::del_attr(attrs(&["field"])).unwrap(), "x on the field", "x", "x on the field");
        assert_eq!(attr_acc(&u), Some(false));
        let u = unit(Command::add_len(), "a", "a b", "a b");
        assert_eq!(attr_acc(&u), None);
        let u = unit(Command::add_attr(attrs(&["ice hockey"])).unwrap(), "a", "a", "ice a hockey");
        assert_eq!(attr_acc(&u), Some(false));
    }

    #[test]
    fn attr_acc_char_mode_uses_substrings() {
        let mode = LanguageMode::CharLevel;
        let cmd = Command::add_attr(vec![Attribute::new(["曲棍球"]).unwrap()]).unwrap();
        let s = EditSample::new("s", "v", cmd, tokenize("女孩玩", mode), tokenize("女孩玩曲棍球", mode)).unwrap();
        let u = EvalUnit::new(s, tokenize("女孩在玩曲棍球", mode)).unwrap();
        assert_eq!(attr_acc(&u), Some(true));
    }

    #[test]
    fn pos_acc_examples() {
        let r = "A group of girls is playing a game .";
        let gt = "A group of girls is on the field playing a game .";
        let cmd = Command::add_pos(vec![5]).unwrap();
        assert_eq!(pos_acc(&unit(cmd.clone(), r, gt, gt)), Some(true));
        assert_eq!(pos_acc(&unit(cmd, r, gt, r)), Some(false));
        let del = Command::del_pos(vec![Span::new(5, 6)]).unwrap();
        assert_eq!(pos_acc(&unit(del, r, gt, r)), None);
    }

    #[test]
    fn sari_identity_and_worked_cases() {
        let x = toks("a b c d");
        assert_eq!(sari_tokens(&x, &x, &x), 1.0);
        let gt = toks("a b e d");
        assert_eq!(sari_tokens(&x, &gt, &gt), 1.0);
        // 19/168 from an independent n-gram set computation.
        assert!((sari_tokens(&x, &x, &gt) - 19.0 / 168.0).abs() < 1e-12);
        assert_eq!(sari_tokens(&[], &[], &[]), 1.0);
        // a repeated source token deleted once
        let (src, gt) = (toks("a a b"), toks("a b"));
        assert_eq!(sari_tokens(&src, &gt, &gt), 1.0);
    }

    #[test]
    fn rouge_examples() {
        assert_eq!(rouge_l_tokens(&toks("a b c"), &toks("a b c")), 1.0);
        let f = rouge_l_tokens(&toks("a b c"), &toks("a c"));
        assert!((f - 0.8299).abs() < 1e-4, "{f}");
        assert_eq!(rouge_l_tokens(&toks("a b"), &toks("c d")), 0.0);
        assert_eq!(rouge_l_tokens(&[], &toks("c d")), 0.0);
    }

    #[test]
    fn bleu_examples() {
        let same = unit(Command::add_len(), "a", "a b c d e", "a b c d e");
        assert!((bleu4(std::slice::from_ref(&same)).unwrap() - 1.0).abs() < 1e-12);
        let disjoint = unit(Command::add_len(), "a", "a b c d e", "v w x y z");
        assert_eq!(bleu4(&[disjoint]).unwrap(), 0.0);
        // All 1..4-grams of the hypothesis match: BLEU = BP.
        let short = unit(Command::add_len(), "a", "a b c d e f", "a b c d e");
        let expected = (1.0f64 - 6.0 / 5.0).exp();
        assert!((bleu4(&[short]).unwrap() - expected).abs() < 1e-12);
        assert_eq!(bleu4(&[]), Err(MetricError::EmptyCorpus));
    }

    #[test]
    fn report_shape_and_applicability() {
        let r = "A group of girls is playing a game .";
        let gt = "A group of girls is on the field playing a game .";
        let units = vec![
            unit(Command::add_pos(vec![5]).unwrap(), r, gt, gt),
            unit(Command::add_attr(attrs(&["field"])).unwrap(), r, gt, gt),
            unit(Command::del_len(), gt, r, r),
        ];
        let report = evaluate_corpus(&units, &MetricConfig::default()).unwrap();
        let kinds: Vec<&str> = report.rows.iter().map(|r| r.kind.as_str()).collect();
        assert_eq!(kinds, ["add_pos", "add_attr", "del_len"]);
        assert_eq!(report.rows[0].attr_acc, None);
        assert_eq!(report.rows[0].pos_acc, Some(100.0));
        assert_eq!(report.rows[1].attr_acc, Some(100.0));
        assert_eq!(report.rows[1].pos_acc, None);
        assert_eq!(report.rows[2].attr_acc, None);
        assert_eq!(report.overall.count, 3);
        assert_eq!(report.overall.len_acc, 100.0);
        assert_eq!(report.overall.ppl, None);
        let table = report.to_table(true);
        assert!(table.contains("<add, pos, ->"));
        assert!(table.lines().last().unwrap().starts_with("Overall"));
    }

    #[test]
    fn single_sample_overall_equals_row() {
        let mut s = EditSample::new("s", "v", Command::del_len(), w("a b c d e ."), w("a b c .")).unwrap();
        s.aux = AuxScores { ppl: Some(42.0), emscore: Some(0.3) };
        let u = EvalUnit::new(s, w("a b .")).unwrap();
        let report = evaluate_corpus(&[u], &MetricConfig::default()).unwrap();
        let mut row = report.rows[0].clone();
        row.kind = "overall".into();
        assert_eq!(row, report.overall);
        assert_eq!(report.overall.ppl, Some(42.0));
    }

    #[test]
    fn corpus_errors() {
        assert_eq!(evaluate_corpus(&[], &MetricConfig::default()), Err(MetricError::EmptyCorpus));
        let a = unit(Command::add_len(), "a", "a b", "a b");
        let cm = LanguageMode::CharLevel;
        let s = EditSample::new("c", "v", Command::add_len(), tokenize("ab", cm), tokenize("abc", cm)).unwrap();
        let b = EvalUnit::new(s.clone(), tokenize("abc", cm)).unwrap();
        assert!(matches!(evaluate_corpus(&[a, b], &MetricConfig::default()), Err(MetricError::MixedModes(..))));
        assert!(matches!(EvalUnit::new(s, w("a")), Err(MetricError::ModeMismatch { .. })));
    }
}
