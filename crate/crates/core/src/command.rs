//! Edit commands and the flat control-sequence format.
//!
//! A [`Command`] is an `{operation, positions, attributes}` triplet where the
//! last two elements are optional. Six of the eight combinations are valid
//! kinds; `<del, pos, attr>` is rejected at construction time, which leaves
//! the seven [`CommandKind`]s.
//!
//! A command and its reference caption are rendered as a single line:
//!
//! ```text
//! [o] [ADD] [/o] [a] field , hockey [/a] [r] A group of girls is [MASK] playing a game . [/r]
//! ```
//!
//! Positions become `[MASK]` sentinels inside the `[r]` block. For `add` a
//! position is a gap between tokens and the mask is inserted there; for `del`
//! a position is a token span that the mask replaces.

use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::text::{tokenize, LanguageMode, TokenSeq};

pub const MASK: &str = "[MASK]";
pub const ADD_TOKEN: &str = "[ADD]";
pub const DEL_TOKEN: &str = "[DEL]";
pub const ATTRIBUTE_SEPARATOR: &str = ",";

const OPEN_OP: &str = "[o]";
const CLOSE_OP: &str = "[/o]";
const OPEN_ATTR: &str = "[a]";
const CLOSE_ATTR: &str = "[/a]";
const OPEN_REF: &str = "[r]";
const CLOSE_REF: &str = "[/r]";

/// Tokens with a structural meaning in a control sequence.
pub const RESERVED_TOKENS: &[&str] = &[
    OPEN_OP, CLOSE_OP, OPEN_ATTR, CLOSE_ATTR, OPEN_REF, CLOSE_REF, ADD_TOKEN, DEL_TOKEN, MASK,
];

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum CommandError {
    #[error("<del, pos, attr> is not a supported command")]
    DeleteWithPositionsAndAttributes,
    #[error("positions list must not be empty when present")]
    EmptyPositions,
    #[error("attribute list must not be empty when present")]
    EmptyAttributes,
    #[error("attribute phrase must contain at least one token")]
    EmptyAttribute,
    #[error("{op} commands take {expected} positions")]
    PositionKind { op: Operation, expected: &'static str },
    #[error("delete span [{start}, {end}) is empty or reversed")]
    EmptySpan { start: usize, end: usize },
    #[error("positions must be sorted and non-overlapping")]
    UnsortedPositions,
    #[error("position {position} out of range for a reference of {len} tokens")]
    OutOfRange { position: String, len: usize },
    #[error("reserved token {0:?} cannot appear in captions or attributes")]
    ReservedToken(String),
    #[error("malformed control sequence: {0}")]
    Malformed(String),
    #[error("unknown operation token {0:?}")]
    UnknownOperation(String),
    #[error("[MASK] outside the [r] ... [/r] block")]
    StrayMask,
    #[error("masked reference does not fit the supplied original reference")]
    OriginalMismatch,
    #[error("payload has {got} spans but the command has {expected} positions")]
    PayloadArity { expected: usize, got: usize },
    #[error("language mode mismatch: {0} vs {1}")]
    ModeMismatch(LanguageMode, LanguageMode),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Operation {
    Add,
    Del,
}

impl Operation {
    pub fn token(self) -> &'static str {
        match self {
            Operation::Add => ADD_TOKEN,
            Operation::Del => DEL_TOKEN,
        }
    }

    pub fn from_token(token: &str) -> Result<Self, CommandError> {
        match token {
            ADD_TOKEN => Ok(Operation::Add),
            DEL_TOKEN => Ok(Operation::Del),
            other => Err(CommandError::UnknownOperation(other.to_string())),
        }
    }
}

impl fmt::Display for Operation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Operation::Add => "add",
            Operation::Del => "del",
        })
    }
}

/// The seven supported combinations of operation, positions and attributes.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CommandKind {
    AddLen,
    AddPos,
    AddAttr,
    AddPosAttr,
    DelLen,
    DelPos,
    DelAttr,
}

impl CommandKind {
    pub const ALL: [CommandKind; 7] = [
        CommandKind::AddLen,
        CommandKind::AddPos,
        CommandKind::AddAttr,
        CommandKind::AddPosAttr,
        CommandKind::DelLen,
        CommandKind::DelPos,
        CommandKind::DelAttr,
    ];

    pub fn operation(self) -> Operation {
        match self {
            CommandKind::AddLen | CommandKind::AddPos | CommandKind::AddAttr | CommandKind::AddPosAttr => {
                Operation::Add
            }
            CommandKind::DelLen | CommandKind::DelPos | CommandKind::DelAttr => Operation::Del,
        }
    }

    pub fn has_positions(self) -> bool {
        matches!(self, CommandKind::AddPos | CommandKind::AddPosAttr | CommandKind::DelPos)
    }

    pub fn has_attributes(self) -> bool {
        matches!(self, CommandKind::AddAttr | CommandKind::AddPosAttr | CommandKind::DelAttr)
    }

    /// Number of triplet elements the kind constrains (1 = length only).
    pub fn granularity(self) -> usize {
        1 + usize::from(self.has_positions()) + usize::from(self.has_attributes())
    }

    fn from_parts(op: Operation, positions: bool, attributes: bool) -> Result<Self, CommandError> {
        Ok(match (op, positions, attributes) {
            (Operation::Add, false, false) => CommandKind::AddLen,
            (Operation::Add, true, false) => CommandKind::AddPos,
            (Operation::Add, false, true) => CommandKind::AddAttr,
            (Operation::Add, true, true) => CommandKind::AddPosAttr,
            (Operation::Del, false, false) => CommandKind::DelLen,
            (Operation::Del, true, false) => CommandKind::DelPos,
            (Operation::Del, false, true) => CommandKind::DelAttr,
            (Operation::Del, true, true) => return Err(CommandError::DeleteWithPositionsAndAttributes),
        })
    }

    /// Stable machine name, e.g. `add_pos_attr`.
    pub fn id(self) -> &'static str {
        match self {
            CommandKind::AddLen => "add_len",
            CommandKind::AddPos => "add_pos",
            CommandKind::AddAttr => "add_attr",
            CommandKind::AddPosAttr => "add_pos_attr",
            CommandKind::DelLen => "del_len",
            CommandKind::DelPos => "del_pos",
            CommandKind::DelAttr => "del_attr",
        }
    }

    /// Triplet label, e.g. `<add, pos, attr>`.
    pub fn label(self) -> &'static str {
        match self {
            CommandKind::AddLen => "<add, -, ->",
            CommandKind::AddPos => "<add, pos, ->",
            CommandKind::AddAttr => "<add, -, attr>",
            CommandKind::AddPosAttr => "<add, pos, attr>",
            CommandKind::DelLen => "<del, -, ->",
            CommandKind::DelPos => "<del, pos, ->",
            CommandKind::DelAttr => "<del, -, attr>",
        }
    }
}

impl fmt::Display for CommandKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.id())
    }
}

impl std::str::FromStr for CommandKind {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        CommandKind::ALL
            .into_iter()
            .find(|k| k.id() == s)
            .ok_or_else(|| format!("unknown command kind {s:?}"))
    }
}

/// Half-open token range `[start, end)` into a reference caption.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Span {
    pub start: usize,
    pub end: usize,
}

impl Span {
    pub fn new(start: usize, end: usize) -> Self {
        Span { start, end }
    }

    pub fn len(&self) -> usize {
        self.end - self.start
    }

    pub fn is_empty(&self) -> bool {
        self.end <= self.start
    }
}

/// Where an edit applies.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Position {
    /// Insertion point before token `g` (`g == len` appends).
    Gap(usize),
    /// Tokens to remove.
    Span(Span),
}

impl fmt::Display for Position {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Position::Gap(g) => write!(f, "gap {g}"),
            Position::Span(s) => write!(f, "span [{}, {})", s.start, s.end),
        }
    }
}

/// A non-empty attribute phrase such as `field` or `ice hockey`.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Attribute(Vec<String>);

impl Attribute {
    pub fn new<I, S>(tokens: I) -> Result<Self, CommandError>
    where
        I: IntoIterator<Item = S>,
        S: Into<String>,
    {
        let tokens: Vec<String> = tokens.into_iter().map(Into::into).collect();
        if tokens.is_empty() {
            return Err(CommandError::EmptyAttribute);
        }
        for t in &tokens {
            if t.is_empty() || t.chars().any(char::is_whitespace) {
                return Err(CommandError::EmptyAttribute);
            }
            if t == ATTRIBUTE_SEPARATOR || RESERVED_TOKENS.contains(&t.as_str()) {
                return Err(CommandError::ReservedToken(t.clone()));
            }
        }
        Ok(Attribute(tokens))
    }

    /// Tokenizes a phrase with `mode`.
    pub fn parse(text: &str, mode: LanguageMode) -> Result<Self, CommandError> {
        Attribute::new(tokenize(text, mode).into_tokens())
    }

    pub fn tokens(&self) -> &[String] {
        &self.0
    }

    /// Comparison form: lowercased words, or single characters in char mode.
    pub fn normalized(&self, mode: LanguageMode) -> Vec<String> {
        match mode {
            LanguageMode::WordLevel => self.0.iter().map(|t| mode.normalize(t)).collect(),
            LanguageMode::CharLevel => self.0.iter().flat_map(|t| t.chars()).map(String::from).collect(),
        }
    }

    pub fn render(&self, mode: LanguageMode) -> String {
        match mode {
            LanguageMode::WordLevel => self.0.join(" "),
            LanguageMode::CharLevel => self.0.concat(),
        }
    }
}

/// A validated `{operation, positions, attributes}` triplet.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Command {
    op: Operation,
    positions: Option<Vec<Position>>,
    attributes: Option<Vec<Attribute>>,
}

impl Command {
    /// Checks the structural rules: gaps for add, non-empty spans for del,
    /// strictly increasing non-overlapping positions, non-empty lists, and no
    /// `<del, pos, attr>`.
    pub fn new(
        op: Operation,
        positions: Option<Vec<Position>>,
        attributes: Option<Vec<Attribute>>,
    ) -> Result<Self, CommandError> {
        CommandKind::from_parts(op, positions.is_some(), attributes.is_some())?;
        if let Some(attrs) = &attributes {
            if attrs.is_empty() {
                return Err(CommandError::EmptyAttributes);
            }
        }
        if let Some(positions) = &positions {
            if positions.is_empty() {
                return Err(CommandError::EmptyPositions);
            }
            match op {
                Operation::Add => {
                    let mut last: Option<usize> = None;
                    for p in positions {
                        let Position::Gap(g) = *p else {
                            return Err(CommandError::PositionKind { op, expected: "gap" });
                        };
                        if last.is_some_and(|l| g <= l) {
                            return Err(CommandError::UnsortedPositions);
                        }
                        last = Some(g);
                    }
                }
                Operation::Del => {
                    let mut last_end: Option<usize> = None;
                    for p in positions {
                        let Position::Span(s) = *p else {
                            return Err(CommandError::PositionKind { op, expected: "span" });
                        };
                        if s.is_empty() {
                            return Err(CommandError::EmptySpan { start: s.start, end: s.end });
                        }
                        if last_end.is_some_and(|e| s.start < e) {
                            return Err(CommandError::UnsortedPositions);
                        }
                        last_end = Some(s.end);
                    }
                }
            }
        }
        Ok(Command { op, positions, attributes })
    }

    pub fn add_len() -> Self {
        Command { op: Operation::Add, positions: None, attributes: None }
    }

    pub fn del_len() -> Self {
        Command { op: Operation::Del, positions: None, attributes: None }
    }

    pub fn add_pos(gaps: Vec<usize>) -> Result<Self, CommandError> {
        Command::new(Operation::Add, Some(gaps.into_iter().map(Position::Gap).collect()), None)
    }

    pub fn add_attr(attributes: Vec<Attribute>) -> Result<Self, CommandError> {
        Command::new(Operation::Add, None, Some(attributes))
    }

    pub fn add_pos_attr(gaps: Vec<usize>, attributes: Vec<Attribute>) -> Result<Self, CommandError> {
        Command::new(Operation::Add, Some(gaps.into_iter().map(Position::Gap).collect()), Some(attributes))
    }

    pub fn del_pos(spans: Vec<Span>) -> Result<Self, CommandError> {
        Command::new(Operation::Del, Some(spans.into_iter().map(Position::Span).collect()), None)
    }

    pub fn del_attr(attributes: Vec<Attribute>) -> Result<Self, CommandError> {
        Command::new(Operation::Del, None, Some(attributes))
    }

    pub fn op(&self) -> Operation {
        self.op
    }

    pub fn positions(&self) -> Option<&[Position]> {
        self.positions.as_deref()
    }

    pub fn attributes(&self) -> Option<&[Attribute]> {
        self.attributes.as_deref()
    }

    pub fn kind(&self) -> CommandKind {
        CommandKind::from_parts(self.op, self.positions.is_some(), self.attributes.is_some())
            .expect("validated at construction")
    }

    pub fn position_count(&self) -> usize {
        self.positions.as_ref().map_or(0, Vec::len)
    }

    /// Insertion gaps of an add command (empty otherwise).
    pub fn gaps(&self) -> Vec<usize> {
        self.positions
            .iter()
            .flatten()
            .filter_map(|p| match p {
                Position::Gap(g) => Some(*g),
                Position::Span(_) => None,
            })
            .collect()
    }

    /// Spans of a delete command (empty otherwise).
    pub fn spans(&self) -> Vec<Span> {
        self.positions
            .iter()
            .flatten()
            .filter_map(|p| match p {
                Position::Span(s) => Some(*s),
                Position::Gap(_) => None,
            })
            .collect()
    }

    /// Checks positions against a reference of `reference.len()` tokens and
    /// rejects references containing reserved tokens.
    pub fn validate_for(&self, reference: &TokenSeq) -> Result<(), CommandError> {
        if let Some(bad) = reference.tokens().iter().find(|t| RESERVED_TOKENS.contains(&t.as_str())) {
            return Err(CommandError::ReservedToken(bad.clone()));
        }
        let len = reference.len();
        for p in self.positions.iter().flatten() {
            let ok = match p {
                Position::Gap(g) => *g <= len,
                Position::Span(s) => s.end <= len,
            };
            if !ok {
                return Err(CommandError::OutOfRange { position: p.to_string(), len });
            }
        }
        Ok(())
    }
}

/// Shorthand for [`Command::kind`].
pub fn kind(cmd: &Command) -> CommandKind {
    cmd.kind()
}

/// One element of a positioned reference.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub enum RefItem {
    Token(String),
    Mask,
}

impl RefItem {
    pub fn as_str(&self) -> &str {
        match self {
            RefItem::Token(t) => t,
            RefItem::Mask => MASK,
        }
    }

    pub fn is_mask(&self) -> bool {
        matches!(self, RefItem::Mask)
    }
}

/// A reference caption with `[MASK]` sentinels at the commanded positions.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PositionedReference {
    items: Vec<RefItem>,
    mode: LanguageMode,
    original: Option<TokenSeq>,
}

impl PositionedReference {
    pub fn from_items(items: Vec<RefItem>, mode: LanguageMode) -> Self {
        PositionedReference { items, mode, original: None }
    }

    /// Reads a caption written with literal `[MASK]` markers, tokenizing the
    /// text between them with `mode`.
    ///
    /// ```
    /// use vdedit::command::PositionedReference;
    /// use vdedit::text::LanguageMode;
    ///
    /// let p = PositionedReference::parse_text("a [MASK] b.", LanguageMode::WordLevel);
    /// assert_eq!(p.render(), "a [MASK] b .");
    /// assert_eq!(p.mask_count(), 1);
    /// ```
    pub fn parse_text(text: &str, mode: LanguageMode) -> Self {
        let mut items = Vec::new();
        for (i, piece) in text.split(MASK).enumerate() {
            if i > 0 {
                items.push(RefItem::Mask);
            }
            items.extend(tokenize(piece, mode).into_tokens().into_iter().map(RefItem::Token));
        }
        PositionedReference { items, mode, original: None }
    }

    pub fn items(&self) -> &[RefItem] {
        &self.items
    }

    pub fn mode(&self) -> LanguageMode {
        self.mode
    }

    pub fn len(&self) -> usize {
        self.items.len()
    }

    pub fn is_empty(&self) -> bool {
        self.items.is_empty()
    }

    /// The unmasked reference this was built from, when known.
    pub fn original(&self) -> Option<&TokenSeq> {
        self.original.as_ref()
    }

    pub fn mask_count(&self) -> usize {
        self.items.iter().filter(|i| i.is_mask()).count()
    }

    /// Indices of the masks within [`items`](Self::items).
    pub fn mask_indices(&self) -> Vec<usize> {
        self.items.iter().enumerate().filter(|(_, i)| i.is_mask()).map(|(k, _)| k).collect()
    }

    /// The caption tokens with all masks dropped.
    pub fn unmasked(&self) -> TokenSeq {
        let tokens = self
            .items
            .iter()
            .filter_map(|i| match i {
                RefItem::Token(t) => Some(t.clone()),
                RefItem::Mask => None,
            })
            .collect();
        TokenSeq::from_tokens_unchecked(tokens, self.mode)
    }

    pub fn render(&self) -> String {
        self.items.iter().map(RefItem::as_str).collect::<Vec<_>>().join(" ")
    }
}

impl fmt::Display for PositionedReference {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.render())
    }
}

/// Inserts a mask at each add gap, or replaces each delete span with one mask.
/// Commands without positions leave the reference unchanged.
pub fn make_positioned_reference(
    reference: &TokenSeq,
    cmd: &Command,
) -> Result<PositionedReference, CommandError> {
    cmd.validate_for(reference)?;
    let tokens = reference.tokens();
    let mut items = Vec::with_capacity(tokens.len() + cmd.position_count());
    match cmd.op() {
        Operation::Add => {
            let gaps = cmd.gaps();
            let mut next_gap = gaps.iter().peekable();
            for (i, t) in tokens.iter().enumerate() {
                if next_gap.next_if(|g| **g == i).is_some() {
                    items.push(RefItem::Mask);
                }
                items.push(RefItem::Token(t.clone()));
            }
            if next_gap.next_if(|g| **g == tokens.len()).is_some() {
                items.push(RefItem::Mask);
            }
        }
        Operation::Del => {
            let spans = cmd.spans();
            let mut i = 0;
            for s in spans {
                items.extend(tokens[i..s.start].iter().cloned().map(RefItem::Token));
                items.push(RefItem::Mask);
                i = s.end;
            }
            items.extend(tokens[i..].iter().cloned().map(RefItem::Token));
        }
    }
    Ok(PositionedReference { items, mode: reference.mode(), original: Some(reference.clone()) })
}

/// A flat, space-joined control string.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct ControlSequence(String);

impl ControlSequence {
    pub fn new(text: impl Into<String>) -> Self {
        ControlSequence(text.into())
    }

    pub fn as_str(&self) -> &str {
        &self.0
    }

    pub fn into_string(self) -> String {
        self.0
    }
}

impl fmt::Display for ControlSequence {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

/// Renders `cmd` applied to `reference` as a control sequence.
///
/// ```
/// use vdedit::command::{serialize, Attribute, Command};
/// use vdedit::text::{tokenize, LanguageMode};
///
/// let mode = LanguageMode::WordLevel;
/// let reference = tokenize("A group of girls is playing a game.", mode);
/// let attrs = vec![Attribute::parse("field", mode).unwrap(), Attribute::parse("hockey", mode).unwrap()];
/// let cmd = Command::add_pos_attr(vec![5], attrs).unwrap();
/// assert_eq!(
///     serialize(&cmd, &reference).unwrap().as_str(),
///     "[o] [ADD] [/o] [a] field , hockey [/a] [r] A group of girls is [MASK] playing a game . [/r]"
/// );
/// ```
pub fn serialize(cmd: &Command, reference: &TokenSeq) -> Result<ControlSequence, CommandError> {
    let posref = make_positioned_reference(reference, cmd)?;
    let mut out: Vec<&str> = vec![OPEN_OP, cmd.op().token(), CLOSE_OP, OPEN_ATTR];
    for (i, attr) in cmd.attributes().unwrap_or_default().iter().enumerate() {
        if i > 0 {
            out.push(ATTRIBUTE_SEPARATOR);
        }
        out.extend(attr.tokens().iter().map(String::as_str));
    }
    out.push(CLOSE_ATTR);
    out.push(OPEN_REF);
    out.extend(posref.items().iter().map(RefItem::as_str));
    out.push(CLOSE_REF);
    Ok(ControlSequence(out.join(" ")))
}

/// Result of reading a control sequence back.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ParsedControl {
    pub op: Operation,
    pub kind: CommandKind,
    pub attributes: Option<Vec<Attribute>>,
    pub positioned: PositionedReference,
    /// The full command. `None` only for a delete with masks when no original
    /// reference was supplied, since the removed spans are not in the string.
    pub command: Option<Command>,
}

/// Parses a control sequence. Delete spans are recovered only when
/// `original` is supplied; where a split is ambiguous the leftmost, shortest
/// span assignment is taken.
pub fn parse(
    ctrl: &ControlSequence,
    mode: LanguageMode,
    original: Option<&TokenSeq>,
) -> Result<ParsedControl, CommandError> {
    let toks: Vec<&str> = ctrl.as_str().split_whitespace().collect();
    let mut cursor = Cursor { toks: &toks, at: 0 };

    cursor.expect(OPEN_OP)?;
    let op_tok = cursor.next("operation token")?;
    if op_tok == MASK {
        return Err(CommandError::StrayMask);
    }
    let op = Operation::from_token(op_tok)?;
    cursor.expect(CLOSE_OP)?;

    cursor.expect(OPEN_ATTR)?;
    let attr_toks = cursor.until(CLOSE_ATTR)?;
    let attributes = parse_attributes(attr_toks)?;

    cursor.expect(OPEN_REF)?;
    let ref_toks = cursor.until(CLOSE_REF)?;
    if cursor.at != toks.len() {
        return Err(CommandError::Malformed(format!("trailing token {:?} after [/r]", toks[cursor.at])));
    }
    let mut items = Vec::with_capacity(ref_toks.len());
    for t in ref_toks {
        if *t == MASK {
            items.push(RefItem::Mask);
        } else if RESERVED_TOKENS.contains(t) {
            return Err(CommandError::Malformed(format!("unexpected {t:?} inside [r] block")));
        } else {
            items.push(RefItem::Token((*t).to_string()));
        }
    }
    let mut positioned = PositionedReference { items, mode, original: None };
    let has_masks = positioned.mask_count() > 0;
    let kind = CommandKind::from_parts(op, has_masks, attributes.is_some())?;

    let positions = if !has_masks {
        if let Some(orig) = original {
            if orig.tokens() != positioned.unmasked().tokens() {
                return Err(CommandError::OriginalMismatch);
            }
        }
        positioned.original = Some(original.cloned().unwrap_or_else(|| positioned.unmasked()));
        Some(None)
    } else {
        match op {
            Operation::Add => {
                let gaps: Vec<Position> = positioned
                    .mask_indices()
                    .iter()
                    .enumerate()
                    .map(|(k, idx)| Position::Gap(idx - k))
                    .collect();
                let unmasked = positioned.unmasked();
                if let Some(orig) = original {
                    if orig.tokens() != unmasked.tokens() {
                        return Err(CommandError::OriginalMismatch);
                    }
                }
                positioned.original = Some(original.cloned().unwrap_or(unmasked));
                Some(Some(gaps))
            }
            Operation::Del => match original {
                Some(orig) => {
                    if orig.mode() != mode {
                        return Err(CommandError::ModeMismatch(orig.mode(), mode));
                    }
                    let spans = recover_spans(positioned.items(), orig.tokens())
                        .ok_or(CommandError::OriginalMismatch)?;
                    positioned.original = Some(orig.clone());
                    Some(Some(spans.into_iter().map(Position::Span).collect()))
                }
                None => None,
            },
        }
    };
    let command = match positions {
        Some(p) => Some(Command::new(op, p, attributes.clone())?),
        None => None,
    };
    Ok(ParsedControl { op, kind, attributes, positioned, command })
}

struct Cursor<'a> {
    toks: &'a [&'a str],
    at: usize,
}

impl<'a> Cursor<'a> {
    fn next(&mut self, what: &str) -> Result<&'a str, CommandError> {
        let t = self
            .toks
            .get(self.at)
            .ok_or_else(|| CommandError::Malformed(format!("expected {what}, found end of input")))?;
        self.at += 1;
        Ok(t)
    }

    fn expect(&mut self, token: &str) -> Result<(), CommandError> {
        let found = self.next(token)?;
        if found == token {
            Ok(())
        } else if found == MASK {
            Err(CommandError::StrayMask)
        } else {
            Err(CommandError::Malformed(format!("expected {token:?}, found {found:?}")))
        }
    }

    fn until(&mut self, close: &str) -> Result<&'a [&'a str], CommandError> {
        let start = self.at;
        let end = self.toks[start..]
            .iter()
            .position(|t| *t == close)
            .map(|p| start + p)
            .ok_or_else(|| CommandError::Malformed(format!("missing {close:?}")))?;
        self.at = end + 1;
        Ok(&self.toks[start..end])
    }
}

fn parse_attributes(toks: &[&str]) -> Result<Option<Vec<Attribute>>, CommandError> {
    if toks.is_empty() {
        return Ok(None);
    }
    if toks.contains(&MASK) {
        return Err(CommandError::StrayMask);
    }
    let attrs = toks
        .split(|t| *t == ATTRIBUTE_SEPARATOR)
        .map(|phrase| Attribute::new(phrase.iter().copied()))
        .collect::<Result<Vec<_>, _>>()?;
    Ok(Some(attrs))
}

/// Finds non-empty spans of `original` so that replacing each with the
/// corresponding mask yields `items`. Prefers the leftmost, shortest spans.
fn recover_spans(items: &[RefItem], original: &[String]) -> Option<Vec<Span>> {
    fn walk(
        items: &[RefItem],
        original: &[String],
        k: usize,
        pos: usize,
        out: &mut Vec<Span>,
        dead: &mut std::collections::HashSet<(usize, usize)>,
    ) -> bool {
        if k == items.len() {
            return pos == original.len();
        }
        if dead.contains(&(k, pos)) {
            return false;
        }
        let ok = match &items[k] {
            RefItem::Token(t) => {
                original.get(pos).is_some_and(|o| o == t) && walk(items, original, k + 1, pos + 1, out, dead)
            }
            RefItem::Mask => {
                let mut found = false;
                for end in pos + 1..=original.len() {
                    out.push(Span::new(pos, end));
                    if walk(items, original, k + 1, end, out, dead) {
                        found = true;
                        break;
                    }
                    out.pop();
                }
                found
            }
        };
        if !ok {
            dead.insert((k, pos));
        }
        ok
    }
    let mut out = Vec::new();
    let mut dead = std::collections::HashSet::new();
    walk(items, original, 0, 0, &mut out, &mut dead).then_some(out)
}
