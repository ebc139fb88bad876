//! Dense per-frame training targets derived from sparse annotations.

use std::collections::BTreeMap;
use std::io::{BufRead, Write};

use serde::{Deserialize, Serialize};
use serde_json::{json, Value};

use super::annotation::AnnotationKind;
use super::geometry::{BBox, Bitmap};
use super::rle;
use crate::error::{bail, Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Provenance {
    /// The annotator's own geometry on this frame.
    Real,
    /// Union of superpixels touched by a scribble or point.
    Superpixel,
    BoxInterp,
    MaskInterp,
    /// Tight box around a scribble, possibly interpolated.
    ScribbleBox,
}

impl Provenance {
    pub fn as_str(&self) -> &'static str {
        match self {
            Provenance::Real => "real",
            Provenance::Superpixel => "superpixel",
            Provenance::BoxInterp => "box_interp",
            Provenance::MaskInterp => "mask_interp",
            Provenance::ScribbleBox => "scribble_box",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Target {
    Mask(Bitmap),
    Box(BBox),
}

#[derive(Debug, Clone, PartialEq)]
pub struct PseudoFrame {
    pub frame: u32,
    pub target: Target,
    pub weight: f64,
    pub provenance: Provenance,
    /// Annotation kind this target was derived from.
    pub source: AnnotationKind,
}

/// Per-frame pseudo-labels of one video, sorted by frame, at most one per
/// frame. Frames outside `frames` carry no localization target.
#[derive(Debug, Clone, PartialEq)]
pub struct PseudoLabelSet {
    pub video_id: String,
    pub height: usize,
    pub width: usize,
    pub frames: Vec<PseudoFrame>,
}

impl PseudoLabelSet {
    pub fn get(&self, frame: u32) -> Option<&PseudoFrame> {
        self.frames.binary_search_by_key(&frame, |f| f.frame).ok().map(|i| &self.frames[i])
    }

    /// Binary target of a frame; boxes are rasterized.
    pub fn target_mask(&self, frame: &PseudoFrame) -> Bitmap {
        match &frame.target {
            Target::Mask(m) => m.clone(),
            Target::Box(b) => Bitmap::from_box(self.height, self.width, b),
        }
    }

    pub fn validate(&self) -> Result<()> {
        for w in self.frames.windows(2) {
            if w[0].frame >= w[1].frame {
                bail!(Invariant, "pseudo-label frames not strictly increasing at {}", w[1].frame);
            }
        }
        for f in &self.frames {
            if !(0.0..=1.0).contains(&f.weight) {
                bail!(Invariant, "frame {} weight {} outside [0,1]", f.frame, f.weight);
            }
            if f.provenance == Provenance::Real && f.weight != 1.0 {
                bail!(Invariant, "real frame {} has weight {}", f.frame, f.weight);
            }
            if let Target::Mask(m) = &f.target {
                if m.height() != self.height || m.width() != self.width {
                    bail!(Invariant, "frame {} mask has wrong size", f.frame);
                }
            }
        }
        Ok(())
    }

    pub fn to_json_lines(&self) -> Vec<Value> {
        self.frames
            .iter()
            .map(|f| {
                let mut v = json!({
                    "video_id": self.video_id,
                    "frame": f.frame,
                    "size": [self.height, self.width],
                    "source": f.source.as_str(),
                    "provenance": f.provenance.as_str(),
                    "weight": f.weight,
                });
                match &f.target {
                    Target::Box(b) => v["box"] = json!(b.as_array()),
                    Target::Mask(m) => v["mask"] = json!({ "rle": rle::encode(m.bits()) }),
                }
                v
            })
            .collect()
    }
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RawFrame {
    video_id: String,
    frame: u32,
    size: [usize; 2],
    source: AnnotationKind,
    provenance: Provenance,
    weight: f64,
    #[serde(rename = "box")]
    bbox: Option<[i64; 4]>,
    mask: Option<RawMask>,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RawMask {
    rle: String,
}

pub fn write_pseudolabels(sets: &[PseudoLabelSet], mut out: impl Write) -> std::io::Result<()> {
    for s in sets {
        for line in s.to_json_lines() {
            writeln!(out, "{line}")?;
        }
    }
    Ok(())
}

/// Read pseudo-label JSON lines, grouping frames by video in first-seen order.
pub fn read_pseudolabels(reader: impl BufRead) -> Result<Vec<PseudoLabelSet>> {
    let mut order: Vec<String> = Vec::new();
    let mut sets: BTreeMap<String, PseudoLabelSet> = BTreeMap::new();
    for (lineno, line) in reader.lines().enumerate() {
        let line = line.map_err(|e| Error::Format(format!("line {}: {e}", lineno + 1)))?;
        if line.trim().is_empty() {
            continue;
        }
        let raw: RawFrame = serde_json::from_str(&line).map_err(|e| Error::Format(format!("line {}: {e}", lineno + 1)))?;
        let [height, width] = raw.size;
        let target = match (raw.bbox, raw.mask) {
            (Some(b), None) => Target::Box(BBox::new(b[0], b[1], b[2], b[3])?),
            (None, Some(m)) => Target::Mask(Bitmap::from_bits(height, width, rle::decode(&m.rle, height * width)?)?),
            _ => bail!(Format, "line {}: exactly one of box/mask required", lineno + 1),
        };
        let set = sets.entry(raw.video_id.clone()).or_insert_with(|| {
            order.push(raw.video_id.clone());
            PseudoLabelSet { video_id: raw.video_id.clone(), height, width, frames: Vec::new() }
        });
        if set.height != height || set.width != width {
            bail!(Format, "line {}: frame size changes within video {:?}", lineno + 1, raw.video_id);
        }
        set.frames.push(PseudoFrame {
            frame: raw.frame,
            target,
            weight: raw.weight,
            provenance: raw.provenance,
            source: raw.source,
        });
    }
    let mut out = Vec::with_capacity(order.len());
    for id in order {
        let s = sets.remove(&id).expect("video recorded");
        s.validate().map_err(|e| Error::Format(e.to_string()))?;
        out.push(s);
    }
    Ok(out)
}
