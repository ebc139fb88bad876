use rayon::prelude::*;

use super::boxes::check_frames;
use super::weights::{nearest, WeightConfig};
use crate::datamodel::{AnnotationKind, Bitmap, Dims, Provenance, PseudoFrame, PseudoLabelSet, Target};
use crate::error::{bail, Result};

const FAR: f64 = 1e20;

/// Exact 1-D squared distance transform of a sampled function (lower
/// envelope of parabolas).
fn dt1(f: &[f64], out: &mut [f64]) {
    let n = f.len();
    let mut v = vec![0usize; n];
    let mut z = vec![0.0f64; n + 1];
    let mut k = 0;
    z[0] = f64::NEG_INFINITY;
    z[1] = f64::INFINITY;
    for q in 1..n {
        let fq = f[q] + (q * q) as f64;
        let s = loop {
            let p = v[k];
            let s = (fq - (f[p] + (p * p) as f64)) / (2.0 * (q - p) as f64);
            if s <= z[k] {
                k -= 1;
            } else {
                break s;
            }
        };
        k += 1;
        v[k] = q;
        z[k] = s;
        z[k + 1] = f64::INFINITY;
    }
    k = 0;
    for (q, o) in out.iter_mut().enumerate() {
        while z[k + 1] < q as f64 {
            k += 1;
        }
        let d = q as f64 - v[k] as f64;
        *o = d * d + f[v[k]];
    }
}

/// Squared Euclidean distance from every pixel to the nearest pixel where
/// `m` equals `target`; `FAR` or more when there is none.
pub(crate) fn squared_edt(m: &Bitmap, target: bool) -> Vec<f64> {
    let (h, w) = (m.height(), m.width());
    let mut g: Vec<f64> = m.bits().iter().map(|&b| if b == target { 0.0 } else { FAR }).collect();
    let mut out = vec![0.0; w.max(h)];
    for y in 0..h {
        let row = &mut g[y * w..(y + 1) * w];
        dt1(row, &mut out[..w]);
        row.copy_from_slice(&out[..w]);
    }
    let mut col = vec![0.0; h];
    for x in 0..w {
        for y in 0..h {
            col[y] = g[y * w + x];
        }
        dt1(&col, &mut out[..h]);
        for y in 0..h {
            g[y * w + x] = out[y];
        }
    }
    g
}

/// Signed distance field, negative inside: distance to the nearest inside
/// pixel minus distance to the nearest outside pixel. A mask with no outside
/// pixel gets the frame diagonal plus one as its depth.
pub fn signed_distance(m: &Bitmap) -> Vec<f64> {
    let cap = ((m.height() * m.height() + m.width() * m.width()) as f64).sqrt() + 1.0;
    let to_in = squared_edt(m, true);
    let to_out = squared_edt(m, false);
    to_in
        .iter()
        .zip(&to_out)
        .map(|(&a, &b)| {
            let a = if a >= FAR { cap } else { a.sqrt() };
            let b = if b >= FAR { cap } else { b.sqrt() };
            a - b
        })
        .collect()
}

/// Dense masks for every frame from masks on a strictly increasing set of
/// frames. Between two annotations the signed distance fields are blended
/// linearly and thresholded at zero; outside the annotated span the nearest
/// mask is copied.
pub fn interpolate_masks(video_id: &str, anns: &[(u32, Bitmap)], dims: Dims, wc: &WeightConfig) -> Result<PseudoLabelSet> {
    check_frames(anns, dims)?;
    for (f, m) in anns {
        if m.height() != dims.height || m.width() != dims.width {
            bail!(Validation, "mask on frame {f} is {}x{}, video is {}x{}", m.height(), m.width(), dims.height, dims.width);
        }
        if m.is_blank() {
            bail!(Validation, "mask on frame {f} is empty");
        }
    }
    let sdfs: Vec<Vec<f64>> = anns.par_iter().map(|(_, m)| signed_distance(m)).collect();
    let anchors: Vec<u32> = anns.iter().map(|a| a.0).collect();
    let frames = (0..dims.depth as u32)
        .into_par_iter()
        .map(|t| {
            let i = anchors.partition_point(|&a| a < t);
            let mask = if i < anns.len() && anns[i].0 == t {
                anns[i].1.clone()
            } else if i == 0 {
                anns[0].1.clone()
            } else if i == anns.len() {
                anns[i - 1].1.clone()
            } else {
                let (lo, hi) = (anns[i - 1].0, anns[i].0);
                let alpha = (t - lo) as f64 / (hi - lo) as f64;
                let bits = sdfs[i - 1].iter().zip(&sdfs[i]).map(|(&a, &b)| (1.0 - alpha) * a + alpha * b < 0.0).collect();
                Bitmap::from_bits(dims.height, dims.width, bits).expect("frame size")
            };
            let (d, _) = nearest(&anchors, t);
            PseudoFrame {
                frame: t,
                target: Target::Mask(mask),
                weight: wc.weight(d),
                provenance: if d == 0 { Provenance::Real } else { Provenance::MaskInterp },
                source: AnnotationKind::Mask,
            }
        })
        .collect();
    Ok(PseudoLabelSet { video_id: video_id.to_string(), height: dims.height, width: dims.width, frames })
}
