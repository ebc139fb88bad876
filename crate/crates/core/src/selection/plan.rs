use std::collections::BTreeMap;
use std::path::Path;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::cost::plan_cost;
use crate::datamodel::{CostTable, DatasetSplit};
use crate::error::{bail, Error, Result};

/// Annotation type a selected video receives.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Bucket {
    Box,
    Scribble,
    Tag,
}

/// Whether the box bucket is annotated with boxes or with pixel masks.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Geometry {
    #[default]
    Box,
    Mask,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Policy {
    /// Rank by uncertainty; the most uncertain videos get the richest labels.
    Bucket,
    /// Same bucket sizes, videos drawn uniformly with a seeded generator.
    Random { seed: u64 },
}

impl Policy {
    pub fn name(&self) -> &'static str {
        match self {
            Policy::Bucket => "bucket",
            Policy::Random { .. } => "random",
        }
    }
}

/// Per-round acquisition budget. Percentages are of all videos in the
/// split.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BudgetConfig {
    pub box_pct: f64,
    pub scribble_pct: f64,
    pub tag_pct: f64,
    pub frames_per_video_box: usize,
    pub frames_per_video_scribble: usize,
    pub min_frame_gap: usize,
}

impl Default for BudgetConfig {
    fn default() -> Self {
        BudgetConfig {
            box_pct: 0.0,
            scribble_pct: 0.0,
            tag_pct: 0.0,
            frames_per_video_box: 2,
            frames_per_video_scribble: 2,
            min_frame_gap: 8,
        }
    }
}

impl BudgetConfig {
    pub fn validate(&self) -> Result<()> {
        for (name, v) in [("box", self.box_pct), ("scribble", self.scribble_pct), ("tag", self.tag_pct)] {
            if !(v >= 0.0 && v <= 100.0) {
                bail!(Budget, "{name} percentage {v} outside [0, 100]");
            }
        }
        if self.frames_per_video_box == 0 || self.frames_per_video_scribble == 0 {
            bail!(Config, "frames per video must be positive");
        }
        if self.min_frame_gap == 0 {
            bail!(Config, "minimum frame gap must be at least 1");
        }
        Ok(())
    }

    /// Videos per bucket for a split of `total` videos: cumulative
    /// percentages rounded to whole videos, so the three counts add up to the
    /// rounded total.
    pub fn counts(&self, total: usize) -> [usize; 3] {
        let n = total as f64;
        let c1 = (self.box_pct * n / 100.0).round() as usize;
        let c2 = ((self.box_pct + self.scribble_pct) * n / 100.0).round() as usize;
        let c3 = ((self.box_pct + self.scribble_pct + self.tag_pct) * n / 100.0).round() as usize;
        [c1, c2.saturating_sub(c1), c3.saturating_sub(c2.max(c1))]
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PlanEntry {
    pub video_id: String,
    pub score: f64,
    pub bucket: Bucket,
    pub frames: Vec<u32>,
    /// The frames are uniformly spaced because no set honouring the
    /// minimum gap could be found greedily.
    #[serde(default, skip_serializing_if = "std::ops::Not::not")]
    pub uniform_fallback: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SelectionPlan {
    pub round: u32,
    pub policy: String,
    #[serde(default)]
    pub geometry: Geometry,
    pub entries: Vec<PlanEntry>,
    pub projected_cost_hours: f64,
}

impl SelectionPlan {
    pub fn empty(round: u32, policy: &str) -> Self {
        SelectionPlan { round, policy: policy.to_string(), geometry: Geometry::Box, entries: Vec::new(), projected_cost_hours: 0.0 }
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("plan serializes")
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let plan: SelectionPlan = serde_json::from_str(text).map_err(|e| Error::Format(e.to_string()))?;
        plan.validate(None)?;
        Ok(plan)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_json(&text).map_err(|e| Error::Format(format!("{}: {e}", path.display())))
    }

    /// Structural checks; with `min_gap`, also that every frame list not
    /// flagged as a fallback keeps that gap.
    pub fn validate(&self, min_gap: Option<usize>) -> Result<()> {
        let mut seen = std::collections::HashSet::new();
        for e in &self.entries {
            if !seen.insert(&e.video_id) {
                bail!(Validation, "video {:?} appears twice in the plan", e.video_id);
            }
            if e.bucket == Bucket::Tag && !e.frames.is_empty() {
                bail!(Validation, "tag-only video {:?} lists frames", e.video_id);
            }
            if e.frames.windows(2).any(|w| w[0] >= w[1]) {
                bail!(Validation, "frames of {:?} are not strictly increasing", e.video_id);
            }
            if let Some(g) = min_gap {
                if !e.uniform_fallback && e.frames.windows(2).any(|w| ((w[1] - w[0]) as usize) < g) {
                    bail!(Validation, "frames of {:?} closer than {g}", e.video_id);
                }
            }
        }
        Ok(())
    }

    pub fn videos(&self) -> impl Iterator<Item = &str> {
        self.entries.iter().map(|e| e.video_id.as_str())
    }
}

/// Evenly spread frames: `floor((2i + 1) T / 2n)` for `i < n`.
pub fn uniform_frames(total: usize, n: usize) -> Vec<u32> {
    let n = n.min(total);
    (0..n).map(|i| ((2 * i + 1) * total / (2 * n)) as u32).collect()
}

/// Up to `n` frames by descending score (ties: earlier frame), skipping any
/// frame closer than `gap` to one already taken. Falls back to uniform
/// spacing when fewer than `n` frames can be placed; the flag reports it.
pub fn pick_frames(scores: &[f64], n: usize, gap: usize) -> (Vec<u32>, bool) {
    let n = n.min(scores.len());
    let mut order: Vec<usize> = (0..scores.len()).collect();
    order.sort_by(|&a, &b| scores[b].total_cmp(&scores[a]).then(a.cmp(&b)));
    let mut chosen: Vec<usize> = Vec::with_capacity(n);
    for f in order {
        if chosen.len() == n {
            break;
        }
        if chosen.iter().all(|&c| c.abs_diff(f) >= gap) {
            chosen.push(f);
        }
    }
    if chosen.len() < n {
        return (uniform_frames(scores.len(), n), true);
    }
    chosen.sort_unstable();
    (chosen.into_iter().map(|f| f as u32).collect(), false)
}

/// Choose which unlabeled videos to annotate this round and how.
///
/// `scores` holds the video score of every unlabeled candidate (required by
/// the bucket policy) and `frame_scores` the per-frame scores of every video
/// that may receive spatial labels; its length is the video's frame count.
pub fn select(
    split: &DatasetSplit,
    scores: &BTreeMap<String, f64>,
    frame_scores: &BTreeMap<String, Vec<f64>>,
    bc: &BudgetConfig,
    policy: Policy,
    geometry: Geometry,
    ct: &CostTable,
) -> Result<SelectionPlan> {
    bc.validate()?;
    let requested = bc.box_pct + bc.scribble_pct + bc.tag_pct;
    let headroom = 100.0 - split.labeled_percent();
    if requested > headroom + 1e-9 {
        bail!(
            Budget,
            "box {}% + scribble {}% + tag {}% = {requested}% exceeds the {headroom:.3}% of videos still unlabeled",
            bc.box_pct,
            bc.scribble_pct,
            bc.tag_pct
        );
    }
    let counts = bc.counts(split.total());
    let wanted: usize = counts.iter().sum();
    if wanted > split.unlabeled().len() {
        bail!(Budget, "budget asks for {wanted} videos but only {} are unlabeled", split.unlabeled().len());
    }

    let mut candidates: Vec<(String, f64)> = Vec::with_capacity(split.unlabeled().len());
    for v in split.unlabeled() {
        let s = match (scores.get(v), policy) {
            (Some(&s), _) => s,
            (None, Policy::Random { .. }) => 0.0,
            (None, Policy::Bucket) => bail!(Validation, "no uncertainty score for candidate {v:?}"),
        };
        if !s.is_finite() {
            bail!(Validation, "score of {v:?} is not finite");
        }
        candidates.push((v.clone(), s));
    }
    match policy {
        Policy::Bucket => candidates.sort_by(|a, b| b.1.total_cmp(&a.1).then_with(|| a.0.cmp(&b.0))),
        Policy::Random { seed } => candidates.shuffle(&mut ChaCha8Rng::seed_from_u64(seed)),
    }

    let mut entries = Vec::with_capacity(wanted);
    let mut it = candidates.into_iter();
    for (bucket, count) in [Bucket::Box, Bucket::Scribble, Bucket::Tag].into_iter().zip(counts) {
        for (video_id, score) in it.by_ref().take(count) {
            let (frames, uniform_fallback) = match bucket {
                Bucket::Tag => (Vec::new(), false),
                _ => {
                    let Some(fs) = frame_scores.get(&video_id) else {
                        bail!(Validation, "no frame scores for {video_id:?}");
                    };
                    let n = if bucket == Bucket::Box { bc.frames_per_video_box } else { bc.frames_per_video_scribble };
                    match policy {
                        Policy::Bucket => pick_frames(fs, n, bc.min_frame_gap),
                        Policy::Random { .. } => {
                            let frames = uniform_frames(fs.len(), n);
                            let ok = frames.windows(2).all(|w| (w[1] - w[0]) as usize >= bc.min_frame_gap);
                            (frames, !ok)
                        }
                    }
                }
            };
            entries.push(PlanEntry { video_id, score, bucket, frames, uniform_fallback });
        }
    }

    let mut plan = SelectionPlan {
        round: split.round_index(),
        policy: policy.name().to_string(),
        geometry,
        entries,
        projected_cost_hours: 0.0,
    };
    plan.projected_cost_hours = plan_cost(&plan, ct);
    Ok(plan)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn counts_are_cumulative() {
        let bc = BudgetConfig { box_pct: 20.0, scribble_pct: 30.0, tag_pct: 50.0, ..Default::default() };
        assert_eq!(bc.counts(10), [2, 3, 5]);
        let bc = BudgetConfig { box_pct: 33.3, scribble_pct: 33.3, tag_pct: 33.4, ..Default::default() };
        assert_eq!(bc.counts(10).iter().sum::<usize>(), 10);
    }

    #[test]
    fn greedy_frames_respect_gap() {
        let scores = [0.0, 9.0, 8.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 7.0, 0.0];
        assert_eq!(pick_frames(&scores, 2, 8), (vec![1, 10], false));
        assert_eq!(pick_frames(&scores, 3, 8), (uniform_frames(12, 3), true));
        assert_eq!(uniform_frames(12, 3), vec![2, 6, 10]);
    }
}
