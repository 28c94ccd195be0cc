use std::collections::BTreeMap;

use rand::seq::SliceRandom;
use serde::{Deserialize, Serialize};

use super::ProbeError;
use crate::repr::LabelTable;
use crate::rng::stream_rng;

const TRAIN_FRACTION: f64 = 0.8;
const VAL_FRACTION: f64 = 0.1;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SplitPolicy {
    SpeakerDisjoint,
    Random,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Bucket {
    Train,
    Val,
    Test,
}

/// Utterance-level train/validation/test assignment.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SplitAssignment {
    pub policy: SplitPolicy,
    pub seed: u64,
    assignment: BTreeMap<String, Bucket>,
}

/// Per-row buckets and utterance groups derived from a [`SplitAssignment`].
#[derive(Debug, Clone, PartialEq)]
pub struct RowSplit {
    pub buckets: Vec<Bucket>,
    /// Utterance index of each row; used for per-utterance averaging.
    pub groups: Vec<usize>,
}

impl RowSplit {
    /// Every row in `bucket`, in row order.
    pub fn indices(&self, bucket: Bucket) -> Vec<usize> {
        self.buckets.iter().enumerate().filter(|(_, b)| **b == bucket).map(|(i, _)| i).collect()
    }

    pub fn len(&self) -> usize {
        self.buckets.len()
    }

    pub fn is_empty(&self) -> bool {
        self.buckets.is_empty()
    }
}

impl SplitAssignment {
    pub fn bucket(&self, utterance_id: &str) -> Option<Bucket> {
        self.assignment.get(utterance_id).copied()
    }

    pub fn iter(&self) -> impl Iterator<Item = (&str, Bucket)> {
        self.assignment.iter().map(|(k, v)| (k.as_str(), *v))
    }

    /// Utterance counts per bucket as `[train, val, test]`.
    pub fn counts(&self) -> [usize; 3] {
        let mut c = [0; 3];
        for b in self.assignment.values() {
            c[*b as usize] += 1;
        }
        c
    }

    /// Maps row-level utterance ids onto buckets; groups are indices into the
    /// sorted utterance list.
    pub fn rows<S: AsRef<str>>(&self, utterance_ids: &[S]) -> Result<RowSplit, ProbeError> {
        let index: BTreeMap<&str, usize> =
            self.assignment.keys().enumerate().map(|(i, k)| (k.as_str(), i)).collect();
        let mut buckets = Vec::with_capacity(utterance_ids.len());
        let mut groups = Vec::with_capacity(utterance_ids.len());
        for id in utterance_ids {
            let id = id.as_ref();
            let g =
                index.get(id).ok_or_else(|| ProbeError::Split(format!("utterance `{id}` not assigned")))?;
            buckets.push(self.assignment[id]);
            groups.push(*g);
        }
        Ok(RowSplit { buckets, groups })
    }

    pub fn from_assignment(policy: SplitPolicy, seed: u64, assignment: BTreeMap<String, Bucket>) -> Self {
        Self { policy, seed, assignment }
    }
}

/// Utterance targets `[train, val, test]` for `n` utterances.
fn bucket_sizes(n: usize) -> [usize; 3] {
    let train = ((TRAIN_FRACTION * n as f64).round() as usize).min(n);
    let mut val = ((VAL_FRACTION * n as f64).round() as usize).min(n - train);
    let mut test = n - train - val;
    if n >= 3 {
        val = val.max(1);
        test = test.max(1);
    }
    [n - val - test, val, test]
}

/// Deterministic 80/10/10 assignment of utterances to buckets.
///
/// `Random` shuffles utterances. `SpeakerDisjoint` shuffles speakers and places
/// each one whole into the bucket furthest below its utterance quota.
pub fn make_splits(
    labels: &LabelTable,
    policy: SplitPolicy,
    seed: u64,
) -> Result<SplitAssignment, ProbeError> {
    if labels.is_empty() {
        return Err(ProbeError::Split("label table is empty".into()));
    }
    let mut rng = stream_rng(seed, 0x5eed);
    let mut assignment = BTreeMap::new();
    match policy {
        SplitPolicy::Random => {
            let mut utts: Vec<&str> = labels.utterances();
            utts.shuffle(&mut rng);
            let [train, val, _] = bucket_sizes(utts.len());
            for (i, u) in utts.into_iter().enumerate() {
                let b = if i < train {
                    Bucket::Train
                } else if i < train + val {
                    Bucket::Val
                } else {
                    Bucket::Test
                };
                assignment.insert(u.to_string(), b);
            }
        }
        SplitPolicy::SpeakerDisjoint => {
            let mut speaker_of: BTreeMap<&str, &str> = BTreeMap::new();
            for row in &labels.rows {
                if let Some(s) = row.speaker_id.as_deref() {
                    speaker_of.entry(&row.utterance_id).or_insert(s);
                }
            }
            let mut by_speaker: BTreeMap<&str, Vec<&str>> = BTreeMap::new();
            for u in labels.utterances() {
                let s = speaker_of.get(u).ok_or_else(|| {
                    ProbeError::Policy(format!(
                        "speaker-disjoint split needs speaker_id; utterance `{u}` has none"
                    ))
                })?;
                by_speaker.entry(s).or_default().push(u);
            }
            if by_speaker.len() < 3 {
                return Err(ProbeError::Policy(format!(
                    "speaker-disjoint split needs at least 3 speakers, found {}",
                    by_speaker.len()
                )));
            }
            let total: usize = by_speaker.values().map(Vec::len).sum();
            let quota = bucket_sizes(total).map(|q| q.max(1) as f64);
            let mut speakers: Vec<(&str, Vec<&str>)> = by_speaker.into_iter().collect();
            speakers.shuffle(&mut rng);
            let mut filled = [0usize; 3];
            let order = [Bucket::Train, Bucket::Val, Bucket::Test];
            for (_, utts) in speakers {
                // first bucket (train, val, test order) with the largest relative deficit
                let mut best = 0;
                for k in 1..3 {
                    let deficit = |i: usize| (quota[i] - filled[i] as f64) / quota[i];
                    if deficit(k) > deficit(best) {
                        best = k;
                    }
                }
                filled[best] += utts.len();
                for u in utts {
                    assignment.insert(u.to_string(), order[best]);
                }
            }
        }
    }
    Ok(SplitAssignment { policy, seed, assignment })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::repr::LabelRow;

    fn table(utts: usize, frames: usize, speakers: Option<usize>) -> LabelTable {
        let mut rows = Vec::new();
        for u in 0..utts {
            for f in 0..frames {
                let mut r = LabelRow::new(format!("utt{u:03}"), u * frames + f);
                if let Some(s) = speakers {
                    r.speaker_id = Some(format!("spk{}", u % s));
                }
                rows.push(r);
            }
        }
        LabelTable::new(rows)
    }

    #[test]
    fn ten_utterances_random_is_8_1_1_and_stable() {
        let labels = table(10, 3, None);
        let a = make_splits(&labels, SplitPolicy::Random, 42).unwrap();
        assert_eq!(a.counts(), [8, 1, 1]);
        let b = make_splits(&labels, SplitPolicy::Random, 42).unwrap();
        assert_eq!(a, b);
        let c = make_splits(&labels, SplitPolicy::Random, 43).unwrap();
        assert_eq!(c.counts(), [8, 1, 1]);
    }

    #[test]
    fn three_speakers_are_each_kept_whole() {
        let labels = table(30, 2, Some(3));
        let split = make_splits(&labels, SplitPolicy::SpeakerDisjoint, 9).unwrap();
        let mut per_speaker: BTreeMap<String, Bucket> = BTreeMap::new();
        for row in &labels.rows {
            let b = split.bucket(&row.utterance_id).unwrap();
            let s = row.speaker_id.clone().unwrap();
            assert_eq!(*per_speaker.entry(s).or_insert(b), b);
        }
        assert_eq!(split.counts(), [10, 10, 10]);
    }

    #[test]
    fn speaker_disjoint_without_speakers_is_policy_error() {
        let labels = table(10, 1, None);
        assert!(matches!(make_splits(&labels, SplitPolicy::SpeakerDisjoint, 1), Err(ProbeError::Policy(_))));
    }

    #[test]
    fn many_speakers_approximate_proportions() {
        let labels = table(200, 1, Some(100));
        let split = make_splits(&labels, SplitPolicy::SpeakerDisjoint, 3).unwrap();
        let [train, val, test] = split.counts();
        assert!((train as i64 - 160).abs() <= 2, "{train}");
        assert!((val as i64 - 20).abs() <= 2, "{val}");
        assert!((test as i64 - 20).abs() <= 2, "{test}");
    }

    #[test]
    fn assignment_ignores_row_order() {
        let labels = table(25, 2, Some(7));
        let mut reversed = labels.clone();
        reversed.rows.reverse();
        for policy in [SplitPolicy::Random, SplitPolicy::SpeakerDisjoint] {
            assert_eq!(make_splits(&labels, policy, 5).unwrap(), make_splits(&reversed, policy, 5).unwrap());
        }
    }

    #[test]
    fn bucket_sizes_within_one_of_target() {
        for n in 5..200 {
            let [tr, va, te] = bucket_sizes(n);
            assert_eq!(tr + va + te, n);
            assert!((tr as f64 - 0.8 * n as f64).abs() <= 1.0, "n={n} {tr}");
            assert!((va as f64 - 0.1 * n as f64).abs() <= 1.0, "n={n} {va}");
            assert!((te as f64 - 0.1 * n as f64).abs() <= 1.0, "n={n} {te}");
        }
    }
}
