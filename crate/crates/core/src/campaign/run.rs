use std::collections::BTreeMap;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::detector::{noisy_detector, DetectorOutput};
use super::metrics::{frame_map, video_map, FrameTruth, Tube};
use super::scene::SyntheticScene;
use super::scribble::scribble_from_mask;
use crate::datamodel::{
    AnnotationKind, AnnotationRecord, CostTable, DatasetSplit, Entry, Payload, Provenance, PseudoLabelSet,
    SuperpixelLabels,
};
use crate::error::{bail, Result};
use crate::pseudolabel::{build_pseudolabels, PseudoMode, WeightConfig};
use crate::selection::{frame_scores, select, video_uncertainty, Bucket, BudgetConfig, Geometry, PlanEntry, Policy};
use crate::superpixel::{segment, SlicConfig};

/// Superpixel settings matched to the default synthetic scenes.
pub fn scene_slic_config() -> SlicConfig<f64> {
    SlicConfig { temporal_scale: 2.0, min_region: 8, ..SlicConfig::new(5, 20.0) }
}

/// Per-round settings of a campaign.
#[derive(Debug, Clone, PartialEq)]
pub struct CampaignConfig {
    pub rounds: usize,
    pub budget: BudgetConfig,
    pub policy: Policy,
    pub costs: CostTable,
    pub weights: WeightConfig,
    pub mode: PseudoMode,
    pub geometry: Geometry,
}

impl Default for CampaignConfig {
    fn default() -> Self {
        CampaignConfig {
            rounds: 1,
            budget: BudgetConfig::default(),
            policy: Policy::Bucket,
            costs: CostTable::default(),
            weights: WeightConfig::default(),
            mode: PseudoMode::Superpixel,
            geometry: Geometry::Box,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RoundReport {
    pub round: u32,
    pub policy: String,
    pub selected_videos: usize,
    pub labeled_videos: usize,
    pub round_cost_hours: f64,
    pub cumulative_cost_hours: f64,
    /// Mean IoU with the ground truth over every frame of every video, using
    /// the pseudo-label where one exists and the detector's own binarized
    /// map elsewhere.
    pub mean_pseudo_iou: f64,
    /// Mean IoU over pseudo-labelled frames only.
    pub annotated_iou: Option<f64>,
    /// Mean IoU over frames that carry the annotator's own box or mask.
    pub real_iou: Option<f64>,
    /// Mean IoU over pseudo-labelled frames derived from scribbles.
    pub scribble_iou: Option<f64>,
    pub f_map_02: f64,
    pub f_map_05: f64,
    pub v_map_02: f64,
    pub v_map_05: f64,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub warnings: Vec<String>,
}

/// Scenes with their superpixels and detector outputs, which stay fixed
/// over a campaign and can be shared between campaigns.
#[derive(Debug, Clone)]
pub struct World {
    pub scenes: Vec<SyntheticScene>,
    pub superpixels: Vec<SuperpixelLabels<f64>>,
    pub detector: Vec<DetectorOutput>,
}

impl World {
    /// Segment every scene and run the noisy detector on it. Scene `v` of
    /// `N` gets noise `sigma (1 + v / (N - 1))`, so later scenes are harder.
    pub fn new(scenes: Vec<SyntheticScene>, slic: &SlicConfig<f64>, sigma: f64, seed: u64) -> Result<Self> {
        if scenes.is_empty() {
            bail!(Config, "a campaign needs at least one scene");
        }
        let n = scenes.len();
        let superpixels = scenes.par_iter().map(|s| segment(&s.volume::<f64>(), slic)).collect::<Result<Vec<_>>>()?;
        let detector = scenes
            .par_iter()
            .enumerate()
            .map(|(v, s)| {
                let spread = if n > 1 { v as f64 / (n - 1) as f64 } else { 0.0 };
                noisy_detector(s, sigma * (1.0 + spread), seed ^ s.seed)
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(World { scenes, superpixels, detector })
    }

    pub fn run(&self, cfg: &CampaignConfig) -> Result<Vec<RoundReport>> {
        cfg.budget.validate()?;
        cfg.weights.validate()?;
        cfg.costs.validate()?;
        let ids: Vec<String> = self.scenes.iter().map(|s| s.video_id.clone()).collect();
        let index: BTreeMap<&str, usize> = ids.iter().enumerate().map(|(i, v)| (v.as_str(), i)).collect();
        if index.len() != ids.len() {
            bail!(Validation, "scene ids are not unique");
        }

        let uncertainty: Vec<_> = self.detector.iter().map(|d| d.uncertainty()).collect();
        let scores: BTreeMap<String, f64> =
            ids.iter().zip(&uncertainty).map(|(v, u)| Ok((v.clone(), video_uncertainty(u)?))).collect::<Result<_>>()?;
        let frames: BTreeMap<String, Vec<f64>> =
            ids.iter().zip(&uncertainty).map(|(v, u)| Ok((v.clone(), frame_scores(u)?))).collect::<Result<_>>()?;

        let mut split = DatasetSplit::fresh(ids.iter().cloned());
        let mut pseudo: BTreeMap<String, PseudoLabelSet> = BTreeMap::new();
        let mut cumulative = 0.0;
        let mut reports = Vec::with_capacity(cfg.rounds);
        for r in 0..cfg.rounds {
            let (budget, mut warnings) = truncate(&cfg.budget, &split);
            let policy = match cfg.policy {
                Policy::Random { seed } => Policy::Random { seed: seed.wrapping_add(r as u64) },
                p => p,
            };
            let plan = select(&split, &scores, &frames, &budget, policy, cfg.geometry, &cfg.costs)?;
            for w in &warnings {
                log::warn!("round {}: {w}", r + 1);
            }
            let built = plan
                .entries
                .par_iter()
                .map(|e| {
                    let i = index[e.video_id.as_str()];
                    let rec = acquire(&self.scenes[i], e, cfg.geometry)?;
                    let set = build_pseudolabels(&rec, Some(&self.superpixels[i]), self.scenes[i].dims, &cfg.weights, cfg.mode)?;
                    Ok((e.video_id.clone(), set))
                })
                .collect::<Result<Vec<_>>>()?;
            pseudo.extend(built);
            split = split.advance(plan.videos())?;
            cumulative += plan.projected_cost_hours;
            if plan.entries.is_empty() && warnings.is_empty() {
                warnings.push("nothing was selected this round".to_string());
            }

            let q = self.pseudo_quality(&pseudo);
            let labeled: Vec<usize> = split.labeled().iter().map(|v| index[v.as_str()]).collect();
            let (f_map_02, f_map_05, v_map_02, v_map_05) = self.detector_maps(&labeled)?;
            reports.push(RoundReport {
                round: plan.round,
                policy: plan.policy.clone(),
                selected_videos: plan.entries.len(),
                labeled_videos: split.labeled().len(),
                round_cost_hours: plan.projected_cost_hours,
                cumulative_cost_hours: cumulative,
                mean_pseudo_iou: q.mean,
                annotated_iou: q.annotated,
                real_iou: q.real,
                scribble_iou: q.scribble,
                f_map_02,
                f_map_05,
                v_map_02,
                v_map_05,
                warnings,
            });
        }
        Ok(reports)
    }

    fn pseudo_quality(&self, pseudo: &BTreeMap<String, PseudoLabelSet>) -> Quality {
        let per_scene: Vec<[IouSum; 4]> = self
            .scenes
            .par_iter()
            .zip(&self.detector)
            .map(|(s, d)| {
                let [mut all, mut annotated, mut real, mut scribble] = [IouSum::default(); 4];
                let set = pseudo.get(&s.video_id);
                for t in 0..s.dims.depth {
                    let gt = s.gt_mask(t);
                    match set.and_then(|p| p.get(t as u32).map(|f| (p, f))) {
                        Some((p, f)) => {
                            let iou = p.target_mask(f).iou(&gt);
                            all.add(iou);
                            annotated.add(iou);
                            if f.provenance == Provenance::Real {
                                real.add(iou);
                            }
                            if f.source == AnnotationKind::Scribble {
                                scribble.add(iou);
                            }
                        }
                        None => all.add(d.binarized(t).iou(&gt)),
                    }
                }
                [all, annotated, real, scribble]
            })
            .collect();
        let mut total = [IouSum::default(); 4];
        for scene in &per_scene {
            for (acc, s) in total.iter_mut().zip(scene) {
                acc.sum += s.sum;
                acc.n += s.n;
            }
        }
        Quality {
            mean: total[0].mean().unwrap_or(0.0),
            annotated: total[1].mean(),
            real: total[2].mean(),
            scribble: total[3].mean(),
        }
    }

    fn detector_maps(&self, labeled: &[usize]) -> Result<(f64, f64, f64, f64)> {
        let mut dets = Vec::new();
        let mut truths = Vec::new();
        let mut tubes = Vec::new();
        let mut gt_tubes = Vec::new();
        for &i in labeled {
            let s = &self.scenes[i];
            dets.extend(self.detector[i].frame_detections());
            tubes.extend(self.detector[i].tube());
            truths.extend(s.boxes.iter().enumerate().map(|(t, b)| FrameTruth {
                video_id: s.video_id.clone(),
                frame: t as u32,
                bbox: *b,
                class: s.class,
            }));
            gt_tubes.push(Tube {
                video_id: s.video_id.clone(),
                class: s.class,
                boxes: s.boxes.iter().enumerate().map(|(t, b)| (t as u32, *b)).collect(),
            });
        }
        Ok((
            frame_map(&dets, &truths, 0.2)?,
            frame_map(&dets, &truths, 0.5)?,
            video_map(&tubes, &gt_tubes, 0.2)?,
            video_map(&tubes, &gt_tubes, 0.5)?,
        ))
    }
}

#[derive(Debug, Clone, Copy, Default)]
struct IouSum {
    sum: f64,
    n: usize,
}

impl IouSum {
    fn add(&mut self, iou: f64) {
        self.sum += iou;
        self.n += 1;
    }

    fn mean(&self) -> Option<f64> {
        (self.n > 0).then(|| self.sum / self.n as f64)
    }
}

struct Quality {
    mean: f64,
    annotated: Option<f64>,
    real: Option<f64>,
    scribble: Option<f64>,
}

/// Shrink the budget to what the unlabeled pool can still supply, box
/// first, then scribble, then tag.
fn truncate(bc: &BudgetConfig, split: &DatasetSplit) -> (BudgetConfig, Vec<String>) {
    let headroom = (100.0 - split.labeled_percent()).max(0.0);
    let mut out = *bc;
    out.box_pct = bc.box_pct.min(headroom);
    out.scribble_pct = bc.scribble_pct.min(headroom - out.box_pct);
    out.tag_pct = bc.tag_pct.min(headroom - out.box_pct - out.scribble_pct);
    let mut warnings = Vec::new();
    if out != *bc {
        warnings.push(format!(
            "budget truncated to box {:.3}%, scribble {:.3}%, tag {:.3}%: only {} videos remain unlabeled",
            out.box_pct,
            out.scribble_pct,
            out.tag_pct,
            split.unlabeled().len()
        ));
    }
    (out, warnings)
}

/// The annotation a human would return for one plan entry, read off the
/// ground truth.
fn acquire(scene: &SyntheticScene, entry: &PlanEntry, geometry: Geometry) -> Result<AnnotationRecord> {
    let mut rec = AnnotationRecord::tag_only(scene.video_id.clone(), scene.class);
    for &f in &entry.frames {
        let t = f as usize;
        let payload = match (entry.bucket, geometry) {
            (Bucket::Box, Geometry::Box) => Payload::Box(scene.boxes[t]),
            (Bucket::Box, Geometry::Mask) => Payload::Mask(scene.gt_mask(t)),
            (Bucket::Scribble, _) => Payload::Scribble(scribble_from_mask(&scene.gt_mask(t))?),
            (Bucket::Tag, _) => continue,
        };
        rec.entries.push(Entry { frame: f, payload });
    }
    Ok(rec)
}

/// Prepare `scenes` with [`scene_slic_config`] and run one campaign.
pub fn run_campaign(
    scenes: Vec<SyntheticScene>,
    sigma: f64,
    seed: u64,
    cfg: &CampaignConfig,
) -> Result<Vec<RoundReport>> {
    if cfg.rounds == 0 {
        return Ok(Vec::new());
    }
    World::new(scenes, &scene_slic_config(), sigma, seed)?.run(cfg)
}

/// Cost-versus-metric table, one row per round.
pub fn reports_to_csv(reports: &[RoundReport]) -> String {
    let mut out = String::from(
        "round,policy,round_cost_hours,cumulative_cost_hours,mean_pseudo_iou,f_map_0.2,f_map_0.5,v_map_0.2,v_map_0.5\n",
    );
    for r in reports {
        out.push_str(&format!(
            "{},{},{},{},{},{},{},{},{}\n",
            r.round,
            r.policy,
            r.round_cost_hours,
            r.cumulative_cost_hours,
            r.mean_pseudo_iou,
            r.f_map_02,
            r.f_map_05,
            r.v_map_02,
            r.v_map_05
        ));
    }
    out
}
