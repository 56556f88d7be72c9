//! Independent reference implementations and generators shared by the
//! integration tests.

#![allow(dead_code)]

use std::collections::HashMap;
use std::ops::Range;

use rand::seq::SliceRandom;
use rand::Rng;
use rand_chacha::ChaCha8Rng;

use vdedit::command::{Attribute, Command, CommandKind, Span};
use vdedit::edit::Payload;
use vdedit::sample::EditSample;
use vdedit::text::{LanguageMode, TokenSeq};

/// Every monotone assignment of hypothesis intervals to reference items,
/// reduced to the preferred one: minimum cost, then most tokens absorbed by
/// masks, then most non-empty masks, then the smallest interval list with
/// empty intervals placed at the end of the previous interval.
///
/// `None` items are masks. Returns the cost and one span per mask.
pub fn brute_force_align(items: &[Option<&str>], hyp: &[&str]) -> (usize, Vec<Range<usize>>) {
    let mut best: Option<((usize, isize, isize), Vec<usize>)> = None;
    let mut intervals = Vec::with_capacity(items.len() * 2);
    enumerate(items, hyp, 0, 0, &mut intervals, &mut best);
    let (score, flat) = best.expect("at least one assignment exists");
    let spans = items
        .iter()
        .enumerate()
        .filter(|(_, it)| it.is_none())
        .map(|(i, _)| flat[2 * i]..flat[2 * i + 1])
        .collect();
    (score.0, spans)
}

fn enumerate(
    items: &[Option<&str>],
    hyp: &[&str],
    i: usize,
    prev_end: usize,
    intervals: &mut Vec<usize>,
    best: &mut Option<((usize, isize, isize), Vec<usize>)>,
) {
    if i == items.len() {
        let score = evaluate(items, hyp, intervals);
        let better = match best {
            None => true,
            Some((s, flat)) => (score, &intervals[..]) < (*s, &flat[..]),
        };
        if better {
            *best = Some((score, intervals.clone()));
        }
        return;
    }
    let m = hyp.len();
    // empty interval, pinned
    intervals.extend([prev_end, prev_end]);
    enumerate(items, hyp, i + 1, prev_end, intervals, best);
    intervals.truncate(intervals.len() - 2);
    for a in prev_end..m {
        let max_b = if items[i].is_some() { a + 1 } else { m };
        for b in a + 1..=max_b {
            intervals.extend([a, b]);
            enumerate(items, hyp, i + 1, b, intervals, best);
            intervals.truncate(intervals.len() - 2);
        }
    }
}

fn evaluate(items: &[Option<&str>], hyp: &[&str], intervals: &[usize]) -> (usize, isize, isize) {
    let mut cost = 0;
    let mut covered = 0;
    let mut absorbed = 0isize;
    let mut nonempty = 0isize;
    for (i, item) in items.iter().enumerate() {
        let (a, b) = (intervals[2 * i], intervals[2 * i + 1]);
        covered += b - a;
        match item {
            Some(tok) => {
                if a == b {
                    cost += 1;
                } else if *tok != hyp[a] {
                    cost += 1;
                }
            }
            None => {
                absorbed += (b - a) as isize;
                nonempty += isize::from(b > a);
            }
        }
    }
    cost += hyp.len() - covered;
    (cost, -absorbed, -nonempty)
}

fn grams(tokens: &[String], n: usize) -> Vec<Vec<String>> {
    if tokens.len() < n {
        return Vec::new();
    }
    (0..=tokens.len() - n).map(|i| tokens[i..i + n].to_vec()).collect()
}

fn tally(list: &[Vec<String>]) -> HashMap<Vec<String>, usize> {
    let mut m = HashMap::new();
    for g in list {
        *m.entry(g.clone()).or_insert(0) += 1;
    }
    m
}

/// Single-reference SARI written directly from its definition: for each
/// n-gram order, keep F1 and delete precision over n-gram multisets (a
/// deletion is credited up to the count the target also dropped) and add
/// F1 over n-gram sets, each component taken as 1 when nothing is expected
/// and nothing is produced; the three component averages are averaged.
pub fn sari_reference(source: &[String], hypothesis: &[String], target: &[String]) -> f64 {
    let mut totals = [0.0f64; 3];
    for n in 1..=4 {
        let s = tally(&grams(source, n));
        let c = tally(&grams(hypothesis, n));
        let r = tally(&grams(target, n));
        let count = |m: &HashMap<Vec<String>, usize>, g: &Vec<String>| *m.get(g).unwrap_or(&0);

        let mut kept_types = 0usize;
        let mut precision_sum = 0.0;
        let mut good_total = 0usize;
        let mut expected_total = 0usize;
        let mut deleted_types = 0usize;
        let mut del_precision_sum = 0.0;
        let mut del_expected_types = 0usize;
        for (g, &sc) in &s {
            let kept = std::cmp::min(sc, count(&c, g));
            let good = std::cmp::min(kept, count(&r, g));
            expected_total += std::cmp::min(sc, count(&r, g));
            if kept > 0 {
                kept_types += 1;
                precision_sum += good as f64 / kept as f64;
                good_total += good;
            }
            let removed = sc.saturating_sub(count(&c, g));
            if removed > 0 {
                deleted_types += 1;
                del_precision_sum += removed.min(sc.saturating_sub(count(&r, g))) as f64 / removed as f64;
            }
            if sc > count(&r, g) {
                del_expected_types += 1;
            }
        }
        let keep = if kept_types == 0 && expected_total == 0 {
            1.0
        } else {
            let p = if kept_types == 0 { 0.0 } else { precision_sum / kept_types as f64 };
            let rc = if expected_total == 0 { 0.0 } else { good_total as f64 / expected_total as f64 };
            harmonic(p, rc)
        };
        let del = if deleted_types == 0 && del_expected_types == 0 {
            1.0
        } else if deleted_types == 0 {
            0.0
        } else {
            del_precision_sum / deleted_types as f64
        };
        let produced: Vec<&Vec<String>> = c.keys().filter(|g| !s.contains_key(*g)).collect();
        let wanted: Vec<&Vec<String>> = r.keys().filter(|g| !s.contains_key(*g)).collect();
        let add = if produced.is_empty() && wanted.is_empty() {
            1.0
        } else {
            let hit = produced.iter().filter(|g| wanted.contains(g)).count() as f64;
            let p = if produced.is_empty() { 0.0 } else { hit / produced.len() as f64 };
            let rc = if wanted.is_empty() { 0.0 } else { hit / wanted.len() as f64 };
            harmonic(p, rc)
        };
        totals[0] += keep;
        totals[1] += del;
        totals[2] += add;
    }
    totals.iter().map(|t| t / 4.0).sum::<f64>() / 3.0
}

fn harmonic(p: f64, r: f64) -> f64 {
    if p + r == 0.0 {
        0.0
    } else {
        2.0 * p * r / (p + r)
    }
}

pub fn words(s: &str) -> Vec<String> {
    s.split_whitespace().map(String::from).collect()
}

const VOCAB: &[&str] = &[
    "man", "woman", "girls", "boy", "dog", "ball", "field", "hockey", "kitchen", "guitar", "plays", "runs", "holds",
    "throws", "the", "a", "on", "in", "with", "green", "small", "red", "while", "team", "game", "stage", "water",
];

/// Seeded generator of valid samples for every command kind.
pub struct SampleGen {
    pub rng: ChaCha8Rng,
    pub mode: LanguageMode,
}

impl SampleGen {
    pub fn new(seed: u64) -> Self {
        use rand::SeedableRng;
        SampleGen { rng: ChaCha8Rng::seed_from_u64(seed), mode: LanguageMode::WordLevel }
    }

    pub fn word(&mut self) -> String {
        VOCAB.choose(&mut self.rng).unwrap().to_string()
    }

    pub fn phrase(&mut self, lo: usize, hi: usize) -> Vec<String> {
        let n = self.rng.gen_range(lo..=hi);
        (0..n).map(|_| self.word()).collect()
    }

    /// A caption of `lo..=hi` words, sometimes ending in a full stop.
    pub fn caption(&mut self, lo: usize, hi: usize) -> TokenSeq {
        let mut t = self.phrase(lo, hi);
        if self.rng.gen_bool(0.5) {
            t.push(".".into());
        }
        TokenSeq::from_tokens(t, self.mode).unwrap()
    }

    pub fn attributes(&mut self) -> Vec<Attribute> {
        let k = self.rng.gen_range(1..=3);
        (0..k).map(|_| Attribute::new(self.phrase(1, 2)).unwrap()).collect()
    }

    fn gaps(&mut self, len: usize) -> Vec<usize> {
        let k = self.rng.gen_range(1..=3.min(len + 1));
        let mut all: Vec<usize> = (0..=len).collect();
        all.shuffle(&mut self.rng);
        let mut g = all[..k].to_vec();
        g.sort_unstable();
        g
    }

    fn spans(&mut self, len: usize) -> Vec<Span> {
        let mut out = Vec::new();
        let mut at = 0;
        while at < len && out.len() < 3 {
            let start = self.rng.gen_range(at..len);
            let end = self.rng.gen_range(start + 1..=len.min(start + 3));
            out.push(Span::new(start, end));
            at = end + 1;
            if self.rng.gen_bool(0.4) {
                break;
            }
        }
        out
    }

    pub fn command(&mut self, kind: CommandKind, reference: &TokenSeq) -> Command {
        let len = reference.len();
        match kind {
            CommandKind::AddLen => Command::add_len(),
            CommandKind::DelLen => Command::del_len(),
            CommandKind::AddPos => Command::add_pos(self.gaps(len)).unwrap(),
            CommandKind::AddAttr => Command::add_attr(self.attributes()).unwrap(),
            CommandKind::AddPosAttr => {
                let attrs = self.attributes();
                let mut gaps = self.gaps(len);
                gaps.truncate(attrs.len());
                Command::add_pos_attr(gaps, attrs).unwrap()
            }
            CommandKind::DelPos => Command::del_pos(self.spans(len)).unwrap(),
            CommandKind::DelAttr => Command::del_attr(self.attributes()).unwrap(),
        }
    }

    /// A sample whose payload, when the kind needs one, is random content.
    /// The ground truth is a random caption.
    pub fn sample(&mut self, id: usize, kind: CommandKind) -> EditSample {
        let reference = self.caption(5, 14);
        let cmd = self.command(kind, &reference);
        let payload = match kind {
            CommandKind::AddLen => Some(Payload::new(vec![self.phrase(1, 4)])),
            CommandKind::AddPos => Some(Payload::new((0..cmd.position_count()).map(|_| self.phrase(1, 3)).collect())),
            _ => None,
        };
        let gt = self.caption(5, 16);
        let s = EditSample::new(format!("g{id}"), format!("v{}", id % 97), cmd, reference, gt).unwrap();
        match payload {
            Some(p) => s.with_payload(p).unwrap(),
            None => s,
        }
    }
}
