use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};

use super::metrics::{FrameDetection, Tube, TubeDetection};
use super::scene::SyntheticScene;
use crate::datamodel::{Bitmap, Dims, UncertaintyVolume};
use crate::error::{bail, Result};

/// Foreground map of a simulated detector: the ground-truth mask plus
/// Gaussian noise. Values are left unclipped so that the uncertainty keeps
/// growing with the noise; clipping would pile large errors onto 0 and 1 and
/// make the noisiest videos look confident.
#[derive(Debug, Clone, PartialEq)]
pub struct DetectorOutput {
    pub video_id: String,
    pub class: u32,
    pub dims: Dims,
    pub map: Vec<f64>,
}

pub fn noisy_detector(scene: &SyntheticScene, sigma: f64, seed: u64) -> Result<DetectorOutput> {
    if !(sigma >= 0.0) || !sigma.is_finite() {
        bail!(Parameter, "detector noise {sigma} must be finite and non-negative");
    }
    let normal = Normal::new(0.0, sigma).expect("sigma checked above");
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let map = scene.gt_volume().into_iter().map(|g| if g { 1.0 } else { 0.0 } + normal.sample(&mut rng)).collect();
    Ok(DetectorOutput { video_id: scene.video_id.clone(), class: scene.class, dims: scene.dims, map })
}

impl DetectorOutput {
    fn frame(&self, t: usize) -> &[f64] {
        let n = self.dims.frame_len();
        &self.map[t * n..(t + 1) * n]
    }

    /// Squared distance of every map value to its own rounding.
    pub fn uncertainty(&self) -> UncertaintyVolume<f64> {
        let values = self.map.iter().map(|p| (p - p.round()).powi(2)).collect();
        UncertaintyVolume::new(self.video_id.clone(), self.dims, values).expect("one value per voxel")
    }

    pub fn binarized(&self, t: usize) -> Bitmap {
        let bits = self.frame(t).iter().map(|&p| p >= 0.5).collect();
        Bitmap::from_bits(self.dims.height, self.dims.width, bits).expect("frame size")
    }

    /// Largest 4-connected foreground component of frame `t`, as pixel
    /// indices; the earliest in scan order wins ties.
    fn main_component(&self, t: usize) -> Vec<usize> {
        let (h, w) = (self.dims.height, self.dims.width);
        let fg = self.binarized(t);
        let mut seen = vec![false; h * w];
        let mut best: Vec<usize> = Vec::new();
        for start in 0..h * w {
            if seen[start] || !fg.bits()[start] {
                continue;
            }
            let mut comp = vec![start];
            seen[start] = true;
            let mut i = 0;
            while i < comp.len() {
                let (y, x) = (comp[i] / w, comp[i] % w);
                let mut push = |yy: usize, xx: usize| {
                    let j = yy * w + xx;
                    if !seen[j] && fg.bits()[j] {
                        seen[j] = true;
                        comp.push(j);
                    }
                };
                if x > 0 {
                    push(y, x - 1);
                }
                if x + 1 < w {
                    push(y, x + 1);
                }
                if y > 0 {
                    push(y - 1, x);
                }
                if y + 1 < h {
                    push(y + 1, x);
                }
                i += 1;
            }
            if comp.len() > best.len() {
                best = comp;
            }
        }
        best
    }

    /// One box per frame around the main component, scored by its mean map
    /// value clipped to `[0, 1]`.
    pub fn frame_detections(&self) -> Vec<FrameDetection> {
        let w = self.dims.width;
        (0..self.dims.depth)
            .filter_map(|t| {
                let comp = self.main_component(t);
                if comp.is_empty() {
                    return None;
                }
                let xs = comp.iter().map(|i| (i % w) as i64);
                let ys = comp.iter().map(|i| (i / w) as i64);
                let (x0, x1) = (xs.clone().min()?, xs.max()?);
                let (y0, y1) = (ys.clone().min()?, ys.max()?);
                let p = self.frame(t);
                let confidence = comp.iter().map(|&i| p[i].clamp(0.0, 1.0)).sum::<f64>() / comp.len() as f64;
                Some(FrameDetection {
                    video_id: self.video_id.clone(),
                    frame: t as u32,
                    bbox: crate::datamodel::BBox { x_min: x0, y_min: y0, x_max: x1, y_max: y1 },
                    class: self.class,
                    confidence,
                })
            })
            .collect()
    }

    /// The frame detections linked into one tube scored by their mean
    /// confidence.
    pub fn tube(&self) -> Option<TubeDetection> {
        let dets = self.frame_detections();
        if dets.is_empty() {
            return None;
        }
        let confidence = dets.iter().map(|d| d.confidence).sum::<f64>() / dets.len() as f64;
        Some(TubeDetection {
            tube: Tube {
                video_id: self.video_id.clone(),
                class: self.class,
                boxes: dets.into_iter().map(|d| (d.frame, d.bbox)).collect(),
            },
            confidence,
        })
    }
}
