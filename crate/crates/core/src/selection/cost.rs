use crate::datamodel::{CostKind, CostTable};
use crate::error::{bail, Error, Result};

use super::plan::{Bucket, Geometry, SelectionPlan};

/// Man-hours of a plan. Every selected video pays one tag; box and scribble
/// videos additionally pay per annotated frame, at the mask rate when the
/// plan's geometry is mask.
pub fn plan_cost(plan: &SelectionPlan, ct: &CostTable) -> f64 {
    mix_cost(&AnnotationMix::of_plan(plan), ct)
}

/// Counts of annotated items, independent of which videos carry them.
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct AnnotationMix {
    pub tags: f64,
    pub point_frames: f64,
    pub scribble_frames: f64,
    pub box_frames: f64,
    pub mask_frames: f64,
}

impl AnnotationMix {
    pub fn of_plan(plan: &SelectionPlan) -> Self {
        let mut mix = AnnotationMix::default();
        for e in &plan.entries {
            mix.tags += 1.0;
            let n = e.frames.len() as f64;
            match (e.bucket, plan.geometry) {
                (Bucket::Box, Geometry::Box) => mix.box_frames += n,
                (Bucket::Box, Geometry::Mask) => mix.mask_frames += n,
                (Bucket::Scribble, _) => mix.scribble_frames += n,
                (Bucket::Tag, _) => {}
            }
        }
        mix
    }

    pub fn count(&self, kind: CostKind) -> f64 {
        match kind {
            CostKind::Tag => self.tags,
            CostKind::Point => self.point_frames,
            CostKind::Scribble => self.scribble_frames,
            CostKind::Box => self.box_frames,
            CostKind::Mask => self.mask_frames,
        }
    }

    pub fn add(&self, other: &AnnotationMix) -> AnnotationMix {
        AnnotationMix {
            tags: self.tags + other.tags,
            point_frames: self.point_frames + other.point_frames,
            scribble_frames: self.scribble_frames + other.scribble_frames,
            box_frames: self.box_frames + other.box_frames,
            mask_frames: self.mask_frames + other.mask_frames,
        }
    }
}

pub fn mix_cost(mix: &AnnotationMix, ct: &CostTable) -> f64 {
    CostKind::ALL.iter().map(|&k| mix.count(k) * ct.get(k)).sum::<f64>() / 3600.0
}

/// Size of a training set, used to turn the percentages quoted for a
/// dataset into annotation counts.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DatasetProfile {
    pub videos: usize,
    pub mean_frames_per_video: f64,
}

impl DatasetProfile {
    pub fn total_frames(&self) -> f64 {
        self.videos as f64 * self.mean_frames_per_video
    }

    /// Every video tagged and `pct`% of all frames annotated with `kind`.
    pub fn frame_fraction(&self, kind: CostKind, pct: f64) -> AnnotationMix {
        let mut mix = AnnotationMix { tags: self.videos as f64, ..Default::default() };
        let frames = self.total_frames() * pct / 100.0;
        match kind {
            CostKind::Tag => {}
            CostKind::Point => mix.point_frames = frames,
            CostKind::Scribble => mix.scribble_frames = frames,
            CostKind::Box => mix.box_frames = frames,
            CostKind::Mask => mix.mask_frames = frames,
        }
        mix
    }

    /// `pct`% of the videos, each annotated with `kind` on every frame.
    pub fn video_fraction(&self, kind: CostKind, pct: f64) -> AnnotationMix {
        let scale = pct / 100.0;
        let mut mix = self.frame_fraction(kind, pct);
        mix.tags = self.videos as f64 * scale;
        mix
    }
}

/// Result of calibrating unit costs against observed man-hour totals.
#[derive(Debug, Clone, PartialEq)]
pub struct CostFit {
    pub table: CostTable,
    /// Observed minus predicted hours, one per observation.
    pub residuals: Vec<f64>,
}

/// Least-squares fit of the `free` unit costs so that [`mix_cost`] matches
/// each observed `(mix, hours)` pair; every other cost is taken from
/// `prior`. Costs whose columns are linearly dependent on earlier ones (or
/// never exercised) cannot be identified and are reported together.
pub fn fit_cost_table(observations: &[(AnnotationMix, f64)], prior: &CostTable, free: &[CostKind]) -> Result<CostFit> {
    if free.is_empty() {
        bail!(Config, "no unit cost selected for fitting");
    }
    let mut kinds: Vec<CostKind> = free.to_vec();
    kinds.sort();
    kinds.dedup();
    if let Some((_, h)) = observations.iter().find(|(_, h)| !h.is_finite()) {
        bail!(Validation, "observed hours {h} are not finite");
    }

    // Column j holds the item counts of kind j; the right-hand side is the
    // observed seconds minus what the fixed costs already explain.
    let m = observations.len();
    let mut cols: Vec<Vec<f64>> = kinds.iter().map(|&k| observations.iter().map(|(mix, _)| mix.count(k)).collect()).collect();
    let rhs: Vec<f64> = observations
        .iter()
        .map(|(mix, h)| {
            let fixed: f64 =
                CostKind::ALL.iter().filter(|k| !kinds.contains(k)).map(|&k| mix.count(k) * prior.get(k)).sum();
            h * 3600.0 - fixed
        })
        .collect();

    // Modified Gram-Schmidt: A = QR.
    let n = kinds.len();
    let mut r = vec![vec![0.0; n]; n];
    let mut dependent = Vec::new();
    for j in 0..n {
        let original: f64 = cols[j].iter().map(|v| v * v).sum::<f64>().sqrt();
        for i in 0..j {
            if r[i][i] == 0.0 {
                continue;
            }
            let dot: f64 = (0..m).map(|row| cols[i][row] * cols[j][row]).sum();
            r[i][j] = dot;
            for row in 0..m {
                cols[j][row] -= dot * cols[i][row];
            }
        }
        let norm: f64 = cols[j].iter().map(|v| v * v).sum::<f64>().sqrt();
        if original == 0.0 || norm <= 1e-10 * original {
            dependent.push(kinds[j].to_string());
            continue;
        }
        r[j][j] = norm;
        for v in &mut cols[j] {
            *v /= norm;
        }
    }
    if !dependent.is_empty() {
        return Err(Error::Calibration(dependent));
    }

    // Solve R x = Q^T b.
    let qtb: Vec<f64> = (0..n).map(|j| (0..m).map(|row| cols[j][row] * rhs[row]).sum()).collect();
    let mut x = vec![0.0; n];
    for j in (0..n).rev() {
        let tail: f64 = (j + 1..n).map(|k| r[j][k] * x[k]).sum();
        x[j] = (qtb[j] - tail) / r[j][j];
    }

    let mut table = *prior;
    for (&k, &v) in kinds.iter().zip(&x) {
        if !(v > 0.0) || !v.is_finite() {
            bail!(Config, "fitted {k} cost {v} s is not positive");
        }
        table.set(k, v);
    }
    let residuals = observations.iter().map(|(mix, h)| h - mix_cost(mix, &table)).collect();
    Ok(CostFit { table, residuals })
}
