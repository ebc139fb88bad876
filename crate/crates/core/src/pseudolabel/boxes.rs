use super::weights::{nearest, WeightConfig};
use crate::datamodel::{AnnotationKind, BBox, Dims, Provenance, PseudoFrame, PseudoLabelSet, Target};
use crate::error::{bail, Result};

pub(crate) fn check_frames<G>(anns: &[(u32, G)], dims: Dims) -> Result<()> {
    if anns.is_empty() {
        bail!(Validation, "interpolation needs at least one annotated frame");
    }
    for w in anns.windows(2) {
        if w[0].0 == w[1].0 {
            bail!(Validation, "frame {} annotated twice", w[0].0);
        }
        if w[0].0 > w[1].0 {
            bail!(Validation, "annotated frames not sorted at {}", w[1].0);
        }
    }
    if let Some((f, _)) = anns.iter().find(|(f, _)| *f as usize >= dims.depth) {
        bail!(Validation, "frame {f} outside [0, {})", dims.depth);
    }
    Ok(())
}

/// `a + (t - lo) / (hi - lo) * (b - a)`, rounded half away from zero.
fn lerp_round(a: i64, b: i64, t: u32, lo: u32, hi: u32) -> i64 {
    let num = (t - lo) as f64 * (b - a) as f64;
    (a as f64 + num / (hi - lo) as f64).round() as i64
}

/// Dense boxes for every frame of a `dims.depth`-frame video from boxes on
/// a strictly increasing set of frames. Frames between two annotations get
/// the coordinate-wise linear blend; frames outside the annotated span copy
/// the nearest annotated box.
pub fn interpolate_boxes(video_id: &str, anns: &[(u32, BBox)], dims: Dims, wc: &WeightConfig) -> Result<PseudoLabelSet> {
    check_frames(anns, dims)?;
    for (f, b) in anns {
        if !b.within(dims.height, dims.width) {
            bail!(Validation, "box {:?} on frame {f} outside {}x{}", b.as_array(), dims.height, dims.width);
        }
    }
    let anchors: Vec<u32> = anns.iter().map(|a| a.0).collect();
    let mut frames = Vec::with_capacity(dims.depth);
    for t in 0..dims.depth as u32 {
        let i = anchors.partition_point(|&a| a < t);
        let bx = if i < anns.len() && anns[i].0 == t {
            anns[i].1
        } else if i == 0 {
            anns[0].1
        } else if i == anns.len() {
            anns[i - 1].1
        } else {
            let ((lo, a), (hi, b)) = (anns[i - 1], anns[i]);
            let (a, b) = (a.as_array(), b.as_array());
            let c: Vec<i64> = (0..4).map(|k| lerp_round(a[k], b[k], t, lo, hi)).collect();
            BBox::new(c[0], c[1], c[2], c[3])?
        };
        let (d, _) = nearest(&anchors, t);
        frames.push(PseudoFrame {
            frame: t,
            target: Target::Box(bx),
            weight: wc.weight(d),
            provenance: if d == 0 { Provenance::Real } else { Provenance::BoxInterp },
            source: AnnotationKind::Box,
        });
    }
    Ok(PseudoLabelSet { video_id: video_id.to_string(), height: dims.height, width: dims.width, frames })
}
