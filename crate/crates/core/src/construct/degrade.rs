//! Attribute degradation: remove modifier branches of a dependency tree.

use std::collections::{BTreeMap, HashSet};

use serde::{Deserialize, Serialize};

use super::{ConstructError, ParseAnnotation};
use crate::command::{Attribute, Span};
use crate::edit::Payload;
use crate::text::{contains_run, is_punctuation, TokenSeq};

/// Which branches may be removed and how they are merged.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct DegradeConfig {
    /// Dependency relations (before any `:` subtype) whose subtree is removable.
    pub removable_relations: Vec<String>,
    /// Relations removable only when the branch ends the caption.
    pub trailing_only_relations: Vec<String>,
    /// Semantic-role labels of the main predicate that must survive.
    pub core_argument_labels: Vec<String>,
    /// Coarse part-of-speech tags that can name an attribute.
    pub attribute_tags: Vec<String>,
    /// Branches of at most this many tokens are merged with a sibling.
    pub merge_max_tokens: usize,
}

impl Default for DegradeConfig {
    fn default() -> Self {
        let s = |v: &[&str]| v.iter().map(|x| x.to_string()).collect();
        DegradeConfig {
            removable_relations: s(&["prep", "obl", "nmod", "amod", "advmod", "appos", "acl", "relcl", "npadvmod", "conj"]),
            trailing_only_relations: s(&["conj"]),
            core_argument_labels: s(&["ARG0", "ARG1", "ARG2", "A0", "A1", "A2"]),
            attribute_tags: s(&["NOUN", "PROPN", "VERB", "ADJ", "ADV", "NUM"]),
            merge_max_tokens: 2,
        }
    }
}

/// One way of shortening a caption.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Degradation {
    pub attributes: Vec<Attribute>,
    /// Removed token ranges of the original caption: sorted, disjoint and
    /// never adjacent.
    pub removed: Vec<Span>,
    pub edited: TokenSeq,
}

impl Degradation {
    /// Where each removed span sits in the edited caption.
    pub fn gaps(&self) -> Vec<usize> {
        let mut shift = 0;
        self.removed
            .iter()
            .map(|s| {
                let g = s.start - shift;
                shift += s.len();
                g
            })
            .collect()
    }

    /// The removed tokens, one span per position.
    pub fn payload(&self, original: &TokenSeq) -> Payload {
        Payload::new(self.removed.iter().map(|s| original.tokens()[s.start..s.end].to_vec()).collect())
    }
}

#[derive(Debug, Clone)]
struct Branch {
    head: usize,
    span: Span,
    attribute: Vec<String>,
}

struct Tree<'a> {
    parse: &'a ParseAnnotation,
    children: Vec<Vec<usize>>,
    depth: Vec<usize>,
    root: usize,
}

impl<'a> Tree<'a> {
    fn build(parse: &'a ParseAnnotation, caption: &TokenSeq) -> Result<Self, ConstructError> {
        let n = parse.tokens.len();
        let bad = |msg: String| ConstructError::InvalidParse { caption: parse.caption_index, message: msg };
        if n != caption.len() {
            return Err(bad(format!("parse has {n} tokens, caption has {}", caption.len())));
        }
        for (i, (t, c)) in parse.tokens.iter().zip(caption.tokens()).enumerate() {
            if t.form != *c {
                return Err(bad(format!("token {} is {:?} in the parse but {:?} in the caption", i + 1, t.form, c)));
            }
        }
        let mut children = vec![Vec::new(); n];
        let mut roots = Vec::new();
        for (i, t) in parse.tokens.iter().enumerate() {
            match t.head {
                None => roots.push(i),
                Some(h) if h < n && h != i => children[h].push(i),
                Some(h) => return Err(bad(format!("token {} has invalid head {}", i + 1, h + 1))),
            }
        }
        if n > 0 && roots.len() != 1 {
            return Err(bad(format!("expected exactly one root, found {}", roots.len())));
        }
        let mut depth = vec![usize::MAX; n];
        let mut stack: Vec<(usize, usize)> = roots.iter().map(|&r| (r, 0)).collect();
        while let Some((t, d)) = stack.pop() {
            depth[t] = d;
            stack.extend(children[t].iter().map(|&c| (c, d + 1)));
        }
        if depth.contains(&usize::MAX) {
            return Err(bad("dependency arcs contain a cycle".into()));
        }
        for f in &parse.frames {
            if f.predicate >= n || f.arguments.iter().any(|a| a.span.is_empty() || a.span.end > n) {
                return Err(bad("semantic-role frame indices out of range".into()));
            }
        }
        Ok(Tree { parse, children, depth, root: roots.first().copied().unwrap_or(0) })
    }

    fn subtree(&self, t: usize) -> Vec<usize> {
        let mut out = vec![t];
        let mut i = 0;
        while i < out.len() {
            out.extend(self.children[out[i]].iter().copied());
            i += 1;
        }
        out.sort_unstable();
        out
    }

    fn relation(&self, t: usize) -> &str {
        let rel = &self.parse.tokens[t].deprel;
        rel.split(':').next().unwrap_or(rel)
    }
}

/// Lists every way to shorten `caption` by removing modifier branches.
pub fn degrade(
    caption: &TokenSeq,
    parse: &ParseAnnotation,
    config: &DegradeConfig,
) -> Result<Vec<Degradation>, ConstructError> {
    let tree = Tree::build(parse, caption)?;
    let n = caption.len();
    if n == 0 {
        return Ok(Vec::new());
    }
    let tokens = caption.tokens();
    let content_end = n - tokens.iter().rev().take_while(|t| is_punctuation(t)).count();
    let core_args: Vec<Span> = parse
        .frames
        .iter()
        .filter(|f| f.predicate == tree.root)
        .flat_map(|f| f.arguments.iter())
        .filter(|a| config.core_argument_labels.iter().any(|l| *l == a.label))
        .map(|a| a.span)
        .collect();
    let vetoed = |spans: &[Span]| core_args.iter().any(|arg| covered(arg, spans));

    let mut branches: Vec<Branch> = Vec::new();
    let mut seen = HashSet::new();
    for t in 0..n {
        let Some(head) = parse.tokens[t].head else { continue };
        let rel = tree.relation(t);
        if !config.removable_relations.iter().any(|r| r == rel) {
            continue;
        }
        let sub = tree.subtree(t);
        let (lo, hi) = (sub[0], sub[sub.len() - 1] + 1);
        if sub.len() != hi - lo || sub.contains(&tree.root) {
            continue;
        }
        let mut span = Span::new(lo, hi);
        if config.trailing_only_relations.iter().any(|r| r == rel) {
            if span.end != content_end {
                continue;
            }
            while span.start > 0 && (tree.relation(span.start - 1) == "cc" || tokens[span.start - 1] == ",") {
                span.start -= 1;
            }
        }
        if rel == "appos" && span.start > 0 && tokens[span.start - 1] == "," {
            span.start -= 1;
            if span.end < content_end && tokens[span.end] == "," {
                span.end += 1;
            }
        }
        if span.start == 0 && span.end >= content_end {
            continue;
        }
        let Some(attribute) = attribute_of(&tree, &sub, config) else { continue };
        if vetoed(&[span]) || !seen.insert(span) {
            continue;
        }
        branches.push(Branch { head, span, attribute });
    }

    let mut groups: BTreeMap<usize, Vec<Branch>> = BTreeMap::new();
    for b in branches {
        groups.entry(b.head).or_default().push(b);
    }
    let mut proposals: Vec<Vec<Branch>> = Vec::new();
    for (_, mut group) in groups {
        group.sort_by_key(|b| b.span);
        let (small, large): (Vec<Branch>, Vec<Branch>) =
            group.into_iter().partition(|b| b.span.len() <= config.merge_max_tokens);
        match small.len() {
            0 => proposals.extend(large.into_iter().map(|b| vec![b])),
            1 if !large.is_empty() => {
                let s = small.into_iter().next().unwrap();
                let nearest = (0..large.len())
                    .min_by_key(|&i| distance(&large[i].span, &s.span))
                    .expect("non-empty");
                for (i, b) in large.into_iter().enumerate() {
                    if i == nearest {
                        proposals.push(vec![s.clone(), b]);
                    } else {
                        proposals.push(vec![b]);
                    }
                }
            }
            1 => proposals.push(small),
            _ => {
                proposals.push(small);
                proposals.extend(large.into_iter().map(|b| vec![b]));
            }
        }
    }

    let mut out = Vec::new();
    let mut emitted = HashSet::new();
    for mut proposal in proposals {
        proposal.sort_by_key(|b| b.span);
        if proposal.windows(2).any(|w| w[0].span.end > w[1].span.start) {
            continue;
        }
        let removed = coalesce(proposal.iter().map(|b| b.span));
        if vetoed(&removed) {
            continue;
        }
        let mut keep = Vec::with_capacity(n);
        let mut prev = 0;
        for s in &removed {
            keep.extend_from_slice(&tokens[prev..s.start]);
            prev = s.end;
        }
        keep.extend_from_slice(&tokens[prev..]);
        if keep.iter().all(|t| is_punctuation(t)) {
            continue;
        }
        let edited = TokenSeq::from_tokens_unchecked(keep, caption.mode());
        let mut attributes: Vec<Attribute> = Vec::new();
        for b in &proposal {
            let a = Attribute::new(b.attribute.clone()).expect("attribute words are plain tokens");
            if !attributes.contains(&a) {
                attributes.push(a);
            }
        }
        let mode = caption.mode();
        let survives = |a: &Attribute| contains_run(&edited.normalized(), &a.normalized(mode));
        if attributes.iter().any(survives) {
            continue;
        }
        if emitted.insert(removed.clone()) {
            out.push(Degradation { attributes, removed, edited });
        }
    }
    out.sort_by(|a, b| a.removed.cmp(&b.removed));
    Ok(out)
}

fn covered(arg: &Span, spans: &[Span]) -> bool {
    (arg.start..arg.end).all(|i| spans.iter().any(|s| s.start <= i && i < s.end))
}

fn distance(a: &Span, b: &Span) -> usize {
    if a.end <= b.start {
        b.start - a.end
    } else {
        a.start.saturating_sub(b.end)
    }
}

fn coalesce(spans: impl Iterator<Item = Span>) -> Vec<Span> {
    let mut out: Vec<Span> = Vec::new();
    for s in spans {
        match out.last_mut() {
            Some(last) if last.end >= s.start => last.end = last.end.max(s.end),
            _ => out.push(s),
        }
    }
    out
}

// The shallowest content word of the branch, with adjacent compound modifiers.
fn attribute_of(tree: &Tree<'_>, sub: &[usize], config: &DegradeConfig) -> Option<Vec<String>> {
    let tokens = &tree.parse.tokens;
    let head = sub
        .iter()
        .copied()
        .filter(|&i| config.attribute_tags.iter().any(|t| *t == tokens[i].upos) && !is_punctuation(&tokens[i].form))
        .min_by_key(|&i| (tree.depth[i], i))?;
    let mut start = head;
    while start > 0 && tokens[start - 1].head == Some(head) && tree.relation(start - 1) == "compound" {
        start -= 1;
    }
    Some(tokens[start..=head].iter().map(|t| t.form.clone()).collect())
}
