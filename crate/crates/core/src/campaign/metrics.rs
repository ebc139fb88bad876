use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};

use crate::datamodel::BBox;
use crate::error::{bail, Result};

// Boxes travel as `[x_min, y_min, x_max, y_max]`, as in annotation files.
mod box_array {
    use serde::{de::Error, Deserialize, Deserializer, Serialize, Serializer};

    use crate::datamodel::BBox;

    pub fn serialize<S: Serializer>(b: &BBox, s: S) -> Result<S::Ok, S::Error> {
        b.as_array().serialize(s)
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<BBox, D::Error> {
        let [a, b, c, e] = <[i64; 4]>::deserialize(d)?;
        BBox::new(a, b, c, e).map_err(D::Error::custom)
    }
}

mod box_map {
    use std::collections::BTreeMap;

    use serde::{de::Error, Deserialize, Deserializer, Serialize, Serializer};

    use crate::datamodel::BBox;

    pub fn serialize<S: Serializer>(m: &BTreeMap<u32, BBox>, s: S) -> Result<S::Ok, S::Error> {
        m.iter().map(|(f, b)| (*f, b.as_array())).collect::<BTreeMap<_, _>>().serialize(s)
    }

    // Keys are read as strings: under `flatten` serde buffers the map and no
    // longer converts numeric keys.
    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<BTreeMap<u32, BBox>, D::Error> {
        BTreeMap::<String, [i64; 4]>::deserialize(d)?
            .into_iter()
            .map(|(f, [a, b, c, e])| {
                let f: u32 = f.parse().map_err(|_| D::Error::custom(format!("frame key {f:?} is not an index")))?;
                BBox::new(a, b, c, e).map(|b| (f, b)).map_err(D::Error::custom)
            })
            .collect()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FrameDetection {
    pub video_id: String,
    pub frame: u32,
    #[serde(with = "box_array")]
    pub bbox: BBox,
    pub class: u32,
    pub confidence: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FrameTruth {
    pub video_id: String,
    pub frame: u32,
    #[serde(with = "box_array")]
    pub bbox: BBox,
    pub class: u32,
}

/// A spatio-temporal track: one box per frame it spans.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Tube {
    pub video_id: String,
    pub class: u32,
    #[serde(with = "box_map")]
    pub boxes: BTreeMap<u32, BBox>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TubeDetection {
    #[serde(flatten)]
    pub tube: Tube,
    pub confidence: f64,
}

/// Mean per-frame IoU over the union of frames either tube covers; a frame
/// covered by only one of them counts as zero.
pub fn tube_iou(a: &Tube, b: &Tube) -> f64 {
    let frames: BTreeSet<u32> = a.boxes.keys().chain(b.boxes.keys()).copied().collect();
    if frames.is_empty() {
        return 0.0;
    }
    let sum: f64 = frames
        .iter()
        .map(|f| match (a.boxes.get(f), b.boxes.get(f)) {
            (Some(x), Some(y)) => x.iou(y),
            _ => 0.0,
        })
        .sum();
    sum / frames.len() as f64
}

fn check(tau: f64, confidences: impl Iterator<Item = f64>) -> Result<()> {
    if !(tau > 0.0 && tau <= 1.0) {
        bail!(Parameter, "IoU threshold {tau} outside (0, 1]");
    }
    for c in confidences {
        if !(0.0..=1.0).contains(&c) {
            bail!(Validation, "confidence {c} outside [0, 1]");
        }
    }
    Ok(())
}

/// All-points interpolated average precision from TP flags in ranked
/// order and the number of ground truths.
fn average_precision(tp: &[bool], positives: usize) -> f64 {
    if positives == 0 {
        return 0.0;
    }
    let mut precision = Vec::with_capacity(tp.len());
    let mut recall = Vec::with_capacity(tp.len());
    let mut hits = 0usize;
    for (i, &t) in tp.iter().enumerate() {
        hits += t as usize;
        precision.push(hits as f64 / (i + 1) as f64);
        recall.push(hits as f64 / positives as f64);
    }
    for i in (0..precision.len().saturating_sub(1)).rev() {
        precision[i] = precision[i].max(precision[i + 1]);
    }
    let mut ap = 0.0;
    let mut prev = 0.0;
    for (r, p) in recall.iter().zip(&precision) {
        ap += (r - prev) * p;
        prev = *r;
    }
    ap
}

/// Per-class AP averaged over the classes present in the ground truth.
///
/// `iou(d, g)` scores detection `d` against ground truth `g` of the same
/// class, or returns `None` when they can never match (different video or
/// frame). Detections are ranked by confidence, ties keeping input order,
/// and each takes the best-overlapping unmatched ground truth.
fn mean_ap<D, G>(
    dets: &[D],
    gts: &[G],
    tau: f64,
    det_class: impl Fn(&D) -> u32,
    det_conf: impl Fn(&D) -> f64,
    gt_class: impl Fn(&G) -> u32,
    iou: impl Fn(&D, &G) -> Option<f64>,
) -> f64 {
    let classes: BTreeSet<u32> = gts.iter().map(&gt_class).collect();
    if classes.is_empty() {
        return 0.0;
    }
    let mut total = 0.0;
    for &c in &classes {
        let mut ranked: Vec<&D> = dets.iter().filter(|d| det_class(d) == c).collect();
        ranked.sort_by(|a, b| det_conf(b).total_cmp(&det_conf(a)));
        let truths: Vec<&G> = gts.iter().filter(|g| gt_class(g) == c).collect();
        let mut used = vec![false; truths.len()];
        let tp: Vec<bool> = ranked
            .iter()
            .map(|d| {
                let mut best: Option<(f64, usize)> = None;
                for (j, g) in truths.iter().enumerate() {
                    if used[j] {
                        continue;
                    }
                    if let Some(v) = iou(d, g) {
                        if v >= tau && best.is_none_or(|(b, _)| v > b) {
                            best = Some((v, j));
                        }
                    }
                }
                if let Some((_, j)) = best {
                    used[j] = true;
                }
                best.is_some()
            })
            .collect();
        total += average_precision(&tp, truths.len());
    }
    total / classes.len() as f64
}

/// Frame-level mAP at box IoU `tau`. With no ground truth the score is 0.
pub fn frame_map(dets: &[FrameDetection], gts: &[FrameTruth], tau: f64) -> Result<f64> {
    check(tau, dets.iter().map(|d| d.confidence))?;
    Ok(mean_ap(
        dets,
        gts,
        tau,
        |d| d.class,
        |d| d.confidence,
        |g| g.class,
        |d, g| (d.video_id == g.video_id && d.frame == g.frame).then(|| d.bbox.iou(&g.bbox)),
    ))
}

/// Video-level mAP at tube IoU `tau`. With no ground truth the score is 0.
pub fn video_map(dets: &[TubeDetection], gts: &[Tube], tau: f64) -> Result<f64> {
    check(tau, dets.iter().map(|d| d.confidence))?;
    Ok(mean_ap(
        dets,
        gts,
        tau,
        |d| d.tube.class,
        |d| d.confidence,
        |g| g.class,
        |d, g| (d.tube.video_id == g.video_id).then(|| tube_iou(&d.tube, g)),
    ))
}
