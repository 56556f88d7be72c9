//! Length samples: same-video pairs and retrieved negatives.

use std::collections::{HashMap, HashSet};

use serde::{Deserialize, Serialize};

use super::{CaptionGroup, ConstructError};
use crate::command::Command;
use crate::sample::{EditSample, Provenance};
use crate::text::{is_punctuation, TokenSeq};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct LengthConfig {
    /// Pairs need a length gap strictly greater than this.
    pub min_diff: usize,
    /// Minimum content-word Jaccard similarity between neighbor videos.
    pub similarity_threshold: f64,
    /// Neighbor videos kept per video.
    pub top_k: usize,
    /// Borrowed references per ground-truth caption.
    pub negatives_per_caption: usize,
    /// Words ignored by the similarity measures.
    pub stopwords: Vec<String>,
}

impl Default for LengthConfig {
    fn default() -> Self {
        let stopwords = [
            "a", "an", "the", "is", "are", "was", "were", "be", "of", "in", "on", "at", "to", "and", "or", "with",
            "for", "by", "from", "it", "its", "this", "that", "there", "some", "his", "her", "their", "while", "as",
        ];
        LengthConfig {
            min_diff: 5,
            similarity_threshold: 0.3,
            top_k: 5,
            negatives_per_caption: 1,
            stopwords: stopwords.iter().map(|s| s.to_string()).collect(),
        }
    }
}

impl LengthConfig {
    fn content<'a>(&self, captions: impl IntoIterator<Item = &'a TokenSeq>) -> HashSet<String> {
        captions
            .into_iter()
            .flat_map(|c| c.normalized())
            .filter(|t| !is_punctuation(t) && !self.stopwords.iter().any(|s| s == t))
            .collect()
    }
}

/// Jaccard similarity of two word sets; 0 when both are empty.
pub fn content_jaccard(a: &HashSet<String>, b: &HashSet<String>) -> f64 {
    let union = a.union(b).count();
    if union == 0 {
        return 0.0;
    }
    a.intersection(b).count() as f64 / union as f64
}

/// `<add, len>` samples from ordered caption pairs of one video.
pub fn build_add_length(group: &CaptionGroup, config: &LengthConfig) -> Result<Vec<EditSample>, ConstructError> {
    let mut out = Vec::new();
    for (i, r) in group.captions.iter().enumerate() {
        for (j, g) in group.captions.iter().enumerate() {
            if i == j || g.len() <= r.len() + config.min_diff {
                continue;
            }
            let id = format!("{}/add_len/{i}-{j}", group.video_id);
            let s = EditSample::new(id, &group.video_id, Command::add_len(), r.clone(), g.clone())?;
            out.push(s.with_provenance(Provenance::LengthPair));
        }
    }
    Ok(out)
}

/// `<del, len>` samples whose reference is a longer caption of a similar
/// video and whose ground truth is a caption of the current video.
///
/// Neighbors come from `neighbors` when it has an entry for the video,
/// otherwise from content-word similarity of whole caption groups.
pub fn build_del_length(
    groups: &[CaptionGroup],
    config: &LengthConfig,
    neighbors: Option<&HashMap<String, Vec<String>>>,
) -> Result<Vec<EditSample>, ConstructError> {
    let pools: Vec<HashSet<String>> = groups.iter().map(|g| config.content(&g.captions)).collect();
    let by_id: HashMap<&str, usize> = groups.iter().enumerate().map(|(i, g)| (g.video_id.as_str(), i)).collect();
    let mut out = Vec::new();
    for (gi, group) in groups.iter().enumerate() {
        let ranked: Vec<usize> = match neighbors.and_then(|n| n.get(&group.video_id)) {
            Some(list) => list
                .iter()
                .filter_map(|v| by_id.get(v.as_str()).copied())
                .filter(|&n| n != gi)
                .collect(),
            None => {
                let mut scored: Vec<(f64, usize)> = (0..groups.len())
                    .filter(|&n| n != gi)
                    .map(|n| (content_jaccard(&pools[gi], &pools[n]), n))
                    .filter(|(s, _)| *s >= config.similarity_threshold)
                    .collect();
                scored.sort_by(|a, b| {
                    b.0.total_cmp(&a.0).then_with(|| groups[a.1].video_id.cmp(&groups[b.1].video_id))
                });
                scored.into_iter().take(config.top_k).map(|(_, n)| n).collect()
            }
        };
        for (ci, gt) in group.captions.iter().enumerate() {
            let gt_pool = config.content([gt]);
            let mut candidates: Vec<(f64, usize, usize, usize)> = Vec::new();
            for (rank, &n) in ranked.iter().enumerate() {
                for (ri, r) in groups[n].captions.iter().enumerate() {
                    if r.len() > gt.len() + config.min_diff {
                        candidates.push((content_jaccard(&config.content([r]), &gt_pool), rank, n, ri));
                    }
                }
            }
            candidates.sort_by(|a, b| b.0.total_cmp(&a.0).then((a.1, a.3).cmp(&(b.1, b.3))));
            for &(_, _, n, ri) in candidates.iter().take(config.negatives_per_caption) {
                let source = &groups[n];
                let id = format!("{}/del_len/{ci}/{}-{ri}", group.video_id, source.video_id);
                let s = EditSample::new(id, &group.video_id, Command::del_len(), source.captions[ri].clone(), gt.clone())?;
                out.push(s.with_provenance(Provenance::NegativeRetrieval));
            }
        }
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::command::CommandKind;
    use crate::text::{tokenize, LanguageMode};

    fn group(id: &str, captions: &[&str]) -> CaptionGroup {
        CaptionGroup {
            video_id: id.into(),
            captions: captions.iter().map(|c| tokenize(c, LanguageMode::WordLevel)).collect(),
        }
    }

    #[test]
    fn add_length_needs_a_large_gap() {
        let g = group("v", &["a dog runs", "a brown dog runs quickly across the big green park", "a dog runs fast"]);
        let out = build_add_length(&g, &LengthConfig::default()).unwrap();
        // lengths 3, 10, 4: only 0->1 (gap 7) and 2->1 (gap 6) exceed 5
        let ids: Vec<&str> = out.iter().map(|s| s.id.as_str()).collect();
        assert_eq!(ids, ["v/add_len/0-1", "v/add_len/2-1"]);
        assert!(out.iter().all(|s| s.kind() == CommandKind::AddLen));
    }

    #[test]
    fn jaccard_values() {
        let set = |w: &[&str]| w.iter().map(|s| s.to_string()).collect::<HashSet<_>>();
        assert_eq!(content_jaccard(&set(&[]), &set(&[])), 0.0);
        assert_eq!(content_jaccard(&set(&["a", "b", "c"]), &set(&["b", "c", "d"])), 0.5);
    }

    #[test]
    fn del_length_retrieves_from_similar_video() {
        let groups = [
            group("v1", &["girls play hockey", "girls play field hockey on grass"]),
            group("v2", &["girls play hockey on a big green field with sticks and balls today"]),
            group("v3", &["a man cooks pasta in a kitchen with lots of fresh garlic and oil"]),
        ];
        let out = build_del_length(&groups, &LengthConfig::default(), None).unwrap();
        let v1: Vec<&EditSample> = out.iter().filter(|s| s.video_id == "v1").collect();
        assert_eq!(v1.len(), 2);
        for s in &v1 {
            assert_eq!(s.reference, groups[1].captions[0]);
            assert_eq!(s.provenance, Some(Provenance::NegativeRetrieval));
        }
        assert!(out.iter().all(|s| !s.id.contains("v3")));
    }

    #[test]
    fn neighbor_override() {
        let groups = [
            group("v1", &["girls play hockey"]),
            group("v3", &["a man cooks pasta in a kitchen with lots of fresh garlic and oil"]),
        ];
        assert!(build_del_length(&groups, &LengthConfig::default(), None).unwrap().is_empty());
        let map = HashMap::from([("v1".to_string(), vec!["v3".to_string(), "missing".to_string()])]);
        let out = build_del_length(&groups, &LengthConfig::default(), Some(&map)).unwrap();
        assert_eq!(out.len(), 1);
        assert_eq!(out[0].id, "v1/del_len/0/v3-0");
    }
}
