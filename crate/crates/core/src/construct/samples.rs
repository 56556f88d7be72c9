//! Attribute and position samples from degradations.

use super::{CaptionGroup, ConstructError, Degradation};
use crate::command::{Attribute, Command};
use crate::sample::{EditSample, Provenance};
use crate::text::{contains_run, TokenSeq};

/// Five samples per degradation of caption `index`.
///
/// Delete samples go from the caption to its degraded form; add samples
/// reverse the pair. With `relax`, `<del, attr>` and `<add, attr>` take the
/// closest-length other caption of the video that satisfies the attribute
/// condition as ground truth, and fall back to the degraded pair otherwise.
pub fn make_attribute_samples(
    group: &CaptionGroup,
    index: usize,
    degradations: &[Degradation],
    relax: bool,
) -> Result<Vec<EditSample>, ConstructError> {
    let original = &group.captions[index];
    let vid = &group.video_id;
    let mut out = Vec::new();
    for (k, d) in degradations.iter().enumerate() {
        let id = |kind: &str| format!("{vid}/{kind}/{index}.{k}");
        let edited = &d.edited;
        let attrs = d.attributes.clone();
        let payload = d.payload(original);

        let del_pos = EditSample::new(id("del_pos"), vid, Command::del_pos(d.removed.clone())?, original.clone(), edited.clone())?;
        out.push(del_pos.with_provenance(Provenance::Degradation).with_payload(payload.clone())?);

        let relaxed = relax.then(|| relaxation_target(group, index, &attrs, false, original.len(), edited.len())).flatten();
        let (gt, prov) = match relaxed {
            Some(c) => (group.captions[c].clone(), Provenance::Relaxation),
            None => (edited.clone(), Provenance::Degradation),
        };
        let del_attr = EditSample::new(id("del_attr"), vid, Command::del_attr(attrs.clone())?, original.clone(), gt)?;
        out.push(del_attr.with_provenance(prov));

        let gaps = d.gaps();
        let add_pos = EditSample::new(id("add_pos"), vid, Command::add_pos(gaps.clone())?, edited.clone(), original.clone())?;
        out.push(add_pos.with_provenance(Provenance::Reversal).with_payload(payload.clone())?);

        let cmd = Command::add_pos_attr(gaps, attrs.clone())?;
        let add_pos_attr = EditSample::new(id("add_pos_attr"), vid, cmd, edited.clone(), original.clone())?;
        out.push(add_pos_attr.with_provenance(Provenance::Reversal).with_payload(payload)?);

        let relaxed = relax.then(|| relaxation_target(group, index, &attrs, true, edited.len(), original.len())).flatten();
        let (gt, prov) = match relaxed {
            Some(c) => (group.captions[c].clone(), Provenance::Relaxation),
            None => (original.clone(), Provenance::Reversal),
        };
        let add_attr = EditSample::new(id("add_attr"), vid, Command::add_attr(attrs)?, edited.clone(), gt)?;
        out.push(add_attr.with_provenance(prov));
    }
    Ok(out)
}

// For add: a caption longer than the reference containing every attribute.
// For del: a caption shorter than the reference containing none of them.
// Ties on distance to `target_len` go to the lower caption index.
fn relaxation_target(
    group: &CaptionGroup,
    index: usize,
    attrs: &[Attribute],
    add: bool,
    reference_len: usize,
    target_len: usize,
) -> Option<usize> {
    let holds = |c: &TokenSeq| {
        let words = c.normalized();
        let mut present = attrs.iter().map(|a| contains_run(&words, &a.normalized(c.mode())));
        if add {
            present.all(|p| p)
        } else {
            !present.any(|p| p)
        }
    };
    group
        .captions
        .iter()
        .enumerate()
        .filter(|&(i, c)| i != index && c != &group.captions[index])
        .filter(|(_, c)| if add { c.len() > reference_len } else { c.len() < reference_len })
        .filter(|(_, c)| holds(c))
        .min_by_key(|(i, c)| (c.len().abs_diff(target_len), *i))
        .map(|(i, _)| i)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::command::{CommandKind, Span};
    use crate::text::{tokenize, LanguageMode};

    fn setup(extra: &[&str]) -> (CaptionGroup, Vec<Degradation>) {
        let mode = LanguageMode::WordLevel;
        let mut captions = vec![tokenize("a girl plays on the field .", mode)];
        captions.extend(extra.iter().map(|c| tokenize(c, mode)));
        let d = Degradation {
            attributes: vec![Attribute::new(["field"]).unwrap()],
            removed: vec![Span::new(3, 6)],
            edited: tokenize("a girl plays .", mode),
        };
        (CaptionGroup { video_id: "v".into(), captions }, vec![d])
    }

    #[test]
    fn five_kinds_per_degradation() {
        let (g, d) = setup(&[]);
        let out = make_attribute_samples(&g, 0, &d, true).unwrap();
        let kinds: Vec<CommandKind> = out.iter().map(|s| s.kind()).collect();
        assert_eq!(
            kinds,
            [CommandKind::DelPos, CommandKind::DelAttr, CommandKind::AddPos, CommandKind::AddPosAttr, CommandKind::AddAttr]
        );
        assert_eq!(out[2].command.gaps(), vec![3]);
        assert_eq!(out[2].reference.detokenize(), "a girl plays .");
        assert_eq!(out[2].ground_truth, g.captions[0]);
        assert_eq!(out[1].provenance, Some(Provenance::Degradation));
        assert_eq!(out[4].provenance, Some(Provenance::Reversal));
    }

    #[test]
    fn relaxation_picks_other_captions() {
        let (g, d) = setup(&["a girl runs", "a girl kicks a ball on a green field today", "a girl on the field ."]);
        let out = make_attribute_samples(&g, 0, &d, true).unwrap();
        assert_eq!(out[1].ground_truth.detokenize(), "a girl runs");
        assert_eq!(out[1].provenance, Some(Provenance::Relaxation));
        // both candidates are longer than the reference; "a girl on the field ." is closer to the original length
        assert_eq!(out[4].ground_truth.detokenize(), "a girl on the field .");
        let strict = make_attribute_samples(&g, 0, &d, false).unwrap();
        assert_eq!(strict[1].ground_truth.detokenize(), "a girl plays .");
    }
}
