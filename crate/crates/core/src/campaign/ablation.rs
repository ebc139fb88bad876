use serde::{Deserialize, Serialize};

use super::run::{scene_slic_config, CampaignConfig, World};
use super::scene::{generate_scenes, SceneParams};
use crate::error::Result;
use crate::pseudolabel::PseudoMode;
use crate::selection::{BudgetConfig, Policy};

/// Scribble-bucket sizes, in percent of the videos, at which the two
/// scribble pipelines are compared.
pub const ABLATION_LEVELS: [f64; 6] = [10.0, 20.0, 30.0, 40.0, 60.0, 80.0];

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AblationRow {
    pub level_pct: f64,
    /// Mean scribble-derived pseudo-mask IoU over the seeds, superpixel
    /// expansion.
    pub superpixel_iou: f64,
    /// The same with boxes fitted around the scribbles.
    pub scribble_box_iou: f64,
}

/// For every level, one single-round scribble campaign per seed in each
/// pseudo-label mode, on the same scenes and the same selected videos.
pub fn scribble_ablation(seeds: &[u64], scenes: usize, levels: &[f64], params: &SceneParams) -> Result<Vec<AblationRow>> {
    let mut sums = vec![(0.0, 0.0); levels.len()];
    for &seed in seeds {
        let world = World::new(generate_scenes(scenes, seed, params)?, &scene_slic_config(), 0.1, seed)?;
        for (slot, &level) in sums.iter_mut().zip(levels) {
            let budget = BudgetConfig { scribble_pct: level, ..BudgetConfig::default() };
            let score = |mode| -> Result<f64> {
                let cfg = CampaignConfig { budget, policy: Policy::Bucket, mode, ..CampaignConfig::default() };
                Ok(world.run(&cfg)?[0].scribble_iou.unwrap_or(0.0))
            };
            slot.0 += score(PseudoMode::Superpixel)?;
            slot.1 += score(PseudoMode::ScribbleBox)?;
        }
    }
    let n = seeds.len().max(1) as f64;
    Ok(levels
        .iter()
        .zip(sums)
        .map(|(&level_pct, (sp, sb))| AblationRow { level_pct, superpixel_iou: sp / n, scribble_box_iou: sb / n })
        .collect())
}
