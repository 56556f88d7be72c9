//! Filtering, kind balancing, video-level splits and corpus statistics.

use std::collections::{BTreeMap, BTreeSet, HashMap, HashSet};

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::ConstructError;
use crate::command::CommandKind;
use crate::sample::EditSample;
use crate::text::{is_punctuation, levenshtein, TokenSeq};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct FilterConfig {
    /// Keep one sample per `(video, reference, ground truth)` triple.
    pub balance: bool,
    /// Drop samples whose ground truth has a higher perplexity.
    pub max_ppl: Option<f64>,
    pub min_edit_distance: Option<usize>,
    pub max_edit_distance: Option<usize>,
    /// Token-length bounds applied to both reference and ground truth.
    pub min_length: Option<usize>,
    pub max_length: Option<usize>,
    pub max_per_kind: Option<usize>,
}

impl Default for FilterConfig {
    fn default() -> Self {
        FilterConfig {
            balance: true,
            max_ppl: None,
            min_edit_distance: None,
            max_edit_distance: None,
            min_length: None,
            max_length: None,
            max_per_kind: None,
        }
    }
}

impl FilterConfig {
    fn keeps(&self, s: &EditSample) -> bool {
        if let (Some(max), Some(ppl)) = (self.max_ppl, s.aux.ppl) {
            if ppl > max {
                return false;
            }
        }
        let d = levenshtein(&s.reference.normalized(), &s.ground_truth.normalized());
        let in_range = |v: usize, lo: Option<usize>, hi: Option<usize>| lo.is_none_or(|l| v >= l) && hi.is_none_or(|h| v <= h);
        in_range(d, self.min_edit_distance, self.max_edit_distance)
            && in_range(s.reference.len(), self.min_length, self.max_length)
            && in_range(s.ground_truth.len(), self.min_length, self.max_length)
    }
}

/// Filters samples, then keeps one sample per `(video, reference, ground
/// truth)` triple unless balancing is off.
///
/// Triples are visited in a seeded random order. Each goes to the least
/// populated of the kinds it could serve; ties favor finer-grained kinds.
/// Survivors are returned in input order.
pub fn filter_and_balance(samples: Vec<EditSample>, config: &FilterConfig, seed: u64) -> Vec<EditSample> {
    let samples: Vec<EditSample> = samples.into_iter().filter(|s| config.keeps(s)).collect();
    let mut claims: Vec<Vec<usize>> = Vec::new();
    let mut index: HashMap<(&str, &TokenSeq, &TokenSeq), usize> = HashMap::new();
    for (i, s) in samples.iter().enumerate() {
        let key = (s.video_id.as_str(), &s.reference, &s.ground_truth);
        if !config.balance {
            claims.push(vec![i]);
            continue;
        }
        let slot = *index.entry(key).or_insert_with(|| {
            claims.push(Vec::new());
            claims.len() - 1
        });
        claims[slot].push(i);
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    claims.shuffle(&mut rng);

    let mut counts: BTreeMap<CommandKind, usize> = BTreeMap::new();
    let mut kept = Vec::new();
    for claim in claims {
        let pick = claim
            .iter()
            .copied()
            .min_by_key(|&i| {
                let k = samples[i].kind();
                (counts.get(&k).copied().unwrap_or(0), std::cmp::Reverse(k.granularity()), k, i)
            })
            .expect("claims are non-empty");
        let k = samples[pick].kind();
        let n = counts.entry(k).or_insert(0);
        if config.max_per_kind.is_some_and(|m| *n >= m) {
            continue;
        }
        *n += 1;
        kept.push(pick);
    }
    kept.sort_unstable();
    let keep: HashSet<usize> = kept.into_iter().collect();
    samples.into_iter().enumerate().filter(|(i, _)| keep.contains(i)).map(|(_, s)| s).collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Partition {
    Train,
    Val,
    Test,
}

/// Either fixed per-video assignments or seeded random ratios.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SplitConfig {
    /// Train, validation and test shares of the videos.
    pub ratios: [f64; 3],
    /// When present, every video must be listed.
    pub assignments: Option<BTreeMap<String, Partition>>,
}

impl Default for SplitConfig {
    fn default() -> Self {
        SplitConfig { ratios: [0.8, 0.1, 0.1], assignments: None }
    }
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct DatasetSplit {
    pub train: Vec<EditSample>,
    pub val: Vec<EditSample>,
    pub test: Vec<EditSample>,
}

impl DatasetSplit {
    pub fn part(&self, p: Partition) -> &[EditSample] {
        match p {
            Partition::Train => &self.train,
            Partition::Val => &self.val,
            Partition::Test => &self.test,
        }
    }
}

/// Splits so that no video appears in two partitions.
pub fn split_by_video(samples: &[EditSample], config: &SplitConfig, seed: u64) -> Result<DatasetSplit, ConstructError> {
    let assignment: HashMap<String, Partition> = match &config.assignments {
        Some(map) => {
            if let Some(s) = samples.iter().find(|s| !map.contains_key(&s.video_id)) {
                return Err(ConstructError::UnknownVideo(s.video_id.clone()));
            }
            map.iter().map(|(k, v)| (k.clone(), *v)).collect()
        }
        None => {
            let [tr, va, te] = config.ratios;
            if [tr, va, te].iter().any(|r| !r.is_finite() || *r < 0.0) || tr + va + te <= 0.0 {
                return Err(ConstructError::InvalidConfig(format!("bad split ratios {:?}", config.ratios)));
            }
            let total = tr + va + te;
            let mut videos: Vec<&str> =
                samples.iter().map(|s| s.video_id.as_str()).collect::<BTreeSet<_>>().into_iter().collect();
            videos.shuffle(&mut ChaCha8Rng::seed_from_u64(seed));
            let n = videos.len();
            let n_train = ((n as f64 * tr / total).round() as usize).min(n);
            let n_val = ((n as f64 * va / total).round() as usize).min(n - n_train);
            videos
                .iter()
                .enumerate()
                .map(|(i, v)| {
                    let p = if i < n_train {
                        Partition::Train
                    } else if i < n_train + n_val {
                        Partition::Val
                    } else {
                        Partition::Test
                    };
                    (v.to_string(), p)
                })
                .collect()
        }
    };
    let mut split = DatasetSplit::default();
    for s in samples {
        match assignment[&s.video_id] {
            Partition::Train => split.train.push(s.clone()),
            Partition::Val => split.val.push(s.clone()),
            Partition::Test => split.test.push(s.clone()),
        }
    }
    Ok(split)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StatRecord {
    pub samples: usize,
    pub videos: usize,
    pub mean_reference_length: f64,
    pub mean_ground_truth_length: f64,
    pub mean_edit_distance: f64,
    /// Distinct normalized words over references and ground truths.
    pub vocabulary: usize,
    /// Distinct normalized attribute phrases.
    pub attribute_vocabulary: usize,
    pub per_kind: BTreeMap<String, usize>,
}

pub fn corpus_stats(samples: &[EditSample]) -> Result<StatRecord, ConstructError> {
    if samples.is_empty() {
        return Err(ConstructError::EmptyCorpus);
    }
    let n = samples.len() as f64;
    let mut vocab = HashSet::new();
    let mut attrs = HashSet::new();
    let mut videos = HashSet::new();
    let (mut ref_len, mut gt_len, mut dist) = (0usize, 0usize, 0usize);
    let mut per_kind: BTreeMap<String, usize> = CommandKind::ALL.iter().map(|k| (k.id().to_string(), 0)).collect();
    for s in samples {
        let (r, g) = (s.reference.normalized(), s.ground_truth.normalized());
        ref_len += r.len();
        gt_len += g.len();
        dist += levenshtein(&r, &g);
        vocab.extend(r.into_iter().chain(g).filter(|t| !is_punctuation(t)));
        if let Some(list) = s.command.attributes() {
            attrs.extend(list.iter().map(|a| a.normalized(s.mode())));
        }
        videos.insert(s.video_id.as_str());
        *per_kind.get_mut(s.kind().id()).expect("all kinds present") += 1;
    }
    Ok(StatRecord {
        samples: samples.len(),
        videos: videos.len(),
        mean_reference_length: ref_len as f64 / n,
        mean_ground_truth_length: gt_len as f64 / n,
        mean_edit_distance: dist as f64 / n,
        vocabulary: vocab.len(),
        attribute_vocabulary: attrs.len(),
        per_kind,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::command::{Attribute, Command, Span};
    use crate::text::{tokenize, LanguageMode};

    fn sample(id: &str, video: &str, cmd: Command, r: &str, g: &str) -> EditSample {
        let m = LanguageMode::WordLevel;
        EditSample::new(id, video, cmd, tokenize(r, m), tokenize(g, m)).unwrap()
    }

    fn field() -> Vec<Attribute> {
        vec![Attribute::new(["field"]).unwrap()]
    }

    #[test]
    fn shared_pair_goes_to_underpopulated_kind() {
        let mut input = Vec::new();
        for i in 0..3 {
            let r = format!("a girl number {i} plays on the field");
            input.push(sample(&format!("x{i}"), "v", Command::del_attr(field()).unwrap(), &r, "a girl plays"));
        }
        let r = "a girl plays on the field .";
        input.push(sample("both-attr", "w", Command::del_attr(field()).unwrap(), r, "a girl plays ."));
        input.push(sample("both-pos", "w", Command::del_pos(vec![Span::new(3, 6)]).unwrap(), r, "a girl plays ."));
        for seed in 0..20 {
            let out = filter_and_balance(input.clone(), &FilterConfig::default(), seed);
            let ids: Vec<&str> = out.iter().map(|s| s.id.as_str()).collect();
            assert!(ids.contains(&"both-pos"), "seed {seed}: {ids:?}");
            assert!(!ids.contains(&"both-attr"));
            assert_eq!(out.len(), 4);
        }
    }

    #[test]
    fn filters_and_caps() {
        let mut a = sample("a", "v", Command::add_len(), "a b", "a b c d e f g h");
        a.aux.ppl = Some(300.0);
        let b = sample("b", "v", Command::add_len(), "a b", "a b c d e f g h i");
        let c = sample("c", "v", Command::add_len(), "a", "a b c d e f g h i");
        let cfg = FilterConfig { max_ppl: Some(100.0), ..Default::default() };
        assert_eq!(filter_and_balance(vec![a.clone(), b.clone(), c.clone()], &cfg, 0).len(), 2);
        let cfg = FilterConfig { max_edit_distance: Some(7), ..Default::default() };
        assert_eq!(filter_and_balance(vec![a.clone(), b.clone(), c.clone()], &cfg, 0).len(), 2);
        let cfg = FilterConfig { min_length: Some(2), ..Default::default() };
        assert_eq!(filter_and_balance(vec![a.clone(), b.clone(), c.clone()], &cfg, 0).len(), 2);
        let cfg = FilterConfig { max_per_kind: Some(1), ..Default::default() };
        assert_eq!(filter_and_balance(vec![a.clone(), b.clone(), c.clone()], &cfg, 0).len(), 1);
        let twins = vec![a.clone(), EditSample { id: "a2".into(), ..a }];
        assert_eq!(filter_and_balance(twins.clone(), &FilterConfig::default(), 0).len(), 1);
        let cfg = FilterConfig { balance: false, ..Default::default() };
        assert_eq!(filter_and_balance(twins, &cfg, 0).len(), 2);
    }

    #[test]
    fn splits_are_disjoint_by_video() {
        let input: Vec<EditSample> = (0..40)
            .map(|i| sample(&format!("s{i}"), &format!("v{}", i % 13), Command::add_len(), "a", "a b c d e f g"))
            .collect();
        let split = split_by_video(&input, &SplitConfig::default(), 7).unwrap();
        let vids = |p: &[EditSample]| p.iter().map(|s| s.video_id.clone()).collect::<HashSet<_>>();
        let (tr, va, te) = (vids(&split.train), vids(&split.val), vids(&split.test));
        assert!(tr.is_disjoint(&va) && tr.is_disjoint(&te) && va.is_disjoint(&te));
        assert_eq!(tr.len() + va.len() + te.len(), 13);
        assert_eq!((tr.len(), va.len()), (10, 1));
        assert_eq!(split.train.len() + split.val.len() + split.test.len(), 40);
        assert_eq!(split, split_by_video(&input, &SplitConfig::default(), 7).unwrap());
    }

    #[test]
    fn explicit_split_requires_every_video() {
        let input = vec![sample("a", "v1", Command::add_len(), "a", "a b"), sample("b", "v2", Command::add_len(), "a", "a b")];
        let mut map = BTreeMap::from([("v1".to_string(), Partition::Test)]);
        let cfg = SplitConfig { assignments: Some(map.clone()), ..Default::default() };
        assert_eq!(split_by_video(&input, &cfg, 0), Err(ConstructError::UnknownVideo("v2".into())));
        map.insert("v2".into(), Partition::Train);
        let cfg = SplitConfig { assignments: Some(map), ..Default::default() };
        let split = split_by_video(&input, &cfg, 0).unwrap();
        assert_eq!((split.train.len(), split.test.len()), (1, 1));
    }

    #[test]
    fn stats_over_small_corpus() {
        let input = vec![
            sample("a", "v1", Command::add_len(), "a dog", "a dog runs"),
            sample("b", "v2", Command::del_attr(field()).unwrap(), "girls on the field", "girls"),
        ];
        let st = corpus_stats(&input).unwrap();
        assert_eq!(st.samples, 2);
        assert_eq!(st.videos, 2);
        assert_eq!(st.mean_reference_length, 3.0);
        assert_eq!(st.mean_ground_truth_length, 2.0);
        assert_eq!(st.mean_edit_distance, 2.0);
        assert_eq!(st.vocabulary, 7);
        assert_eq!(st.attribute_vocabulary, 1);
        assert_eq!(st.per_kind["add_len"], 1);
        assert_eq!(st.per_kind["add_pos"], 0);
        assert_eq!(corpus_stats(&[]), Err(ConstructError::EmptyCorpus));
    }
}
