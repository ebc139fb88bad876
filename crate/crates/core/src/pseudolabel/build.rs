use std::collections::BTreeMap;

use rayon::prelude::*;

use super::boxes::interpolate_boxes;
use super::masks::interpolate_masks;
use super::sparse::{expand_sparse, scribble_to_box};
use super::weights::WeightConfig;
use crate::datamodel::{
    AnnotationKind, AnnotationRecord, Dims, Payload, Pixel, Provenance, PseudoFrame, PseudoLabelSet, SuperpixelLabels,
    Target,
};
use crate::error::{bail, Result};
use crate::scalar::Scalar;

/// How scribbles and points become localization targets.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum PseudoMode {
    /// Union of the superpixels the annotation touches.
    Superpixel,
    /// Tight box around the annotation, interpolated like a real box.
    ScribbleBox,
}

/// Lower ranks win when several channels label the same frame.
fn rank(f: &PseudoFrame) -> u8 {
    match (f.provenance, &f.target) {
        (Provenance::Real, Target::Mask(_)) => 0,
        (Provenance::Real, Target::Box(_)) => 1,
        (Provenance::MaskInterp, _) => 2,
        (Provenance::BoxInterp, _) => 3,
        _ => 4,
    }
}

/// Scribble and point pixels grouped by frame, with the dominant kind.
fn sparse_frames(rec: &AnnotationRecord) -> BTreeMap<u32, (Vec<Pixel>, AnnotationKind)> {
    let mut out: BTreeMap<u32, (Vec<Pixel>, AnnotationKind)> = BTreeMap::new();
    for e in &rec.entries {
        let (pixels, kind) = match &e.payload {
            Payload::Point(p) => (std::slice::from_ref(p), AnnotationKind::Point),
            Payload::Scribble(s) => (s.as_slice(), AnnotationKind::Scribble),
            _ => continue,
        };
        let slot = out.entry(e.frame).or_insert_with(|| (Vec::new(), kind));
        slot.0.extend_from_slice(pixels);
        if kind == AnnotationKind::Scribble {
            slot.1 = kind;
        }
    }
    out
}

fn superpixel_channel<T: Scalar>(
    sp: &SuperpixelLabels<T>,
    sparse: &BTreeMap<u32, (Vec<Pixel>, AnnotationKind)>,
    wc: &WeightConfig,
) -> Result<Vec<PseudoFrame>> {
    let expansions = sparse
        .par_iter()
        .map(|(&f, (pixels, kind))| {
            let with_frame: Vec<(u32, Pixel)> = pixels.iter().map(|&p| (f, p)).collect();
            expand_sparse(sp, &with_frame).map(|e| (f, *kind, e))
        })
        .collect::<Result<Vec<_>>>()?;

    // for each covered frame, the expansion of the nearest annotated frame
    let mut best: BTreeMap<u32, (u32, usize)> = BTreeMap::new();
    for (i, (f, _, e)) in expansions.iter().enumerate() {
        for t in e.frames() {
            let t = t as u32;
            let d = t.abs_diff(*f);
            let slot = best.entry(t).or_insert((d, i));
            if d < slot.0 {
                *slot = (d, i);
            }
        }
    }
    Ok(best
        .into_iter()
        .map(|(t, (d, i))| {
            let (_, kind, e) = &expansions[i];
            PseudoFrame {
                frame: t,
                target: Target::Mask(e.frame_mask(t as usize)),
                weight: wc.weight(d + 1),
                provenance: Provenance::Superpixel,
                source: *kind,
            }
        })
        .collect())
}

fn scribble_box_channel(
    video_id: &str,
    sparse: &BTreeMap<u32, (Vec<Pixel>, AnnotationKind)>,
    dims: Dims,
    wc: &WeightConfig,
) -> Result<Vec<PseudoFrame>> {
    let boxes = sparse.iter().map(|(&f, (p, _))| Ok((f, scribble_to_box(p)?))).collect::<Result<Vec<_>>>()?;
    let anchors: Vec<u32> = sparse.keys().copied().collect();
    let set = interpolate_boxes(video_id, &boxes, dims, wc)?;
    Ok(set
        .frames
        .into_iter()
        .map(|mut f| {
            let (d, anchor) = super::weights::nearest(&anchors, f.frame);
            f.weight = wc.weight(d + 1);
            f.provenance = Provenance::ScribbleBox;
            f.source = sparse[&anchor].1;
            f
        })
        .collect())
}

/// Dense pseudo-labels for one annotated video.
///
/// Boxes and masks are interpolated over the whole video; scribbles and
/// points are expanded through `sp` or boxed, depending on `mode`. Pseudo
/// frames derived from scribbles or points are never weighted as real
/// annotations: their weight is that of one extra frame of distance. When
/// channels overlap, real geometry wins over interpolated geometry, masks
/// over boxes, and both over scribble-derived labels.
///
/// A tag-only record yields an empty set.
pub fn build_pseudolabels<T: Scalar>(
    rec: &AnnotationRecord,
    sp: Option<&SuperpixelLabels<T>>,
    dims: Dims,
    wc: &WeightConfig,
    mode: PseudoMode,
) -> Result<PseudoLabelSet> {
    wc.validate()?;
    rec.validate(dims)?;
    let mut candidates: Vec<PseudoFrame> = Vec::new();

    let mut boxes: Vec<_> = rec
        .entries
        .iter()
        .filter_map(|e| match &e.payload {
            Payload::Box(b) => Some((e.frame, *b)),
            _ => None,
        })
        .collect();
    boxes.sort_by_key(|b| b.0);
    if !boxes.is_empty() {
        candidates.extend(interpolate_boxes(&rec.video_id, &boxes, dims, wc)?.frames);
    }

    let mut masks: Vec<_> = rec
        .entries
        .iter()
        .filter_map(|e| match &e.payload {
            Payload::Mask(m) => Some((e.frame, m.clone())),
            _ => None,
        })
        .collect();
    masks.sort_by_key(|m| m.0);
    if !masks.is_empty() {
        candidates.extend(interpolate_masks(&rec.video_id, &masks, dims, wc)?.frames);
    }

    let sparse = sparse_frames(rec);
    if !sparse.is_empty() {
        match mode {
            PseudoMode::Superpixel => {
                let Some(sp) = sp else {
                    bail!(Config, "superpixel mode needs a superpixel segmentation of {:?}", rec.video_id);
                };
                if sp.dims != dims {
                    bail!(Dimension, "segmentation is {:?}, video is {:?}", sp.dims, dims);
                }
                candidates.extend(superpixel_channel(sp, &sparse, wc)?);
            }
            PseudoMode::ScribbleBox => candidates.extend(scribble_box_channel(&rec.video_id, &sparse, dims, wc)?),
        }
    }

    let mut merged: BTreeMap<u32, PseudoFrame> = BTreeMap::new();
    for c in candidates {
        match merged.get(&c.frame) {
            Some(prev) if rank(prev) <= rank(&c) => {}
            _ => {
                merged.insert(c.frame, c);
            }
        }
    }
    let set = PseudoLabelSet {
        video_id: rec.video_id.clone(),
        height: dims.height,
        width: dims.width,
        frames: merged.into_values().collect(),
    };
    set.validate()?;
    Ok(set)
}
