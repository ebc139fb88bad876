//! Loss family for training a detector on pseudo-labels: per-frame binary
//! cross-entropy, distance-weighted detection losses per annotation kind,
//! classification loss and the gated total.
//!
//! Everything here is a pure function of its inputs; gradients are supplied
//! analytically so an external trainer can use them directly.

use std::collections::BTreeSet;

use crate::datamodel::{AnnotationKind, Bitmap, PseudoLabelSet};
use crate::error::{bail, Result};
use crate::scalar::Scalar;

/// Probability clamp used by every log in this module.
pub const EPS: f64 = 1e-7;

/// Foreground probabilities of one frame.
#[derive(Debug, Clone, PartialEq)]
pub struct ProbMap<T> {
    height: usize,
    width: usize,
    values: Vec<T>,
}

impl<T: Scalar> ProbMap<T> {
    pub fn new(height: usize, width: usize, values: Vec<T>) -> Result<Self> {
        if values.len() != height * width {
            bail!(Validation, "probability map has {} values, expected {}x{}", values.len(), height, width);
        }
        if let Some(v) = values.iter().find(|v| !(**v >= T::zero() && **v <= T::one())) {
            bail!(Validation, "probability {v} outside [0, 1]");
        }
        Ok(ProbMap { height, width, values })
    }

    pub fn constant(height: usize, width: usize, p: T) -> Result<Self> {
        Self::new(height, width, vec![p; height * width])
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn values(&self) -> &[T] {
        &self.values
    }
}

/// Network output for one video: per-frame foreground maps and a class
/// distribution.
#[derive(Debug, Clone, PartialEq)]
pub struct PredictionMap<T> {
    pub frames: Vec<ProbMap<T>>,
    pub class_probs: Vec<T>,
}

impl<T: Scalar> PredictionMap<T> {
    pub fn new(frames: Vec<ProbMap<T>>, class_probs: Vec<T>) -> Result<Self> {
        if class_probs.is_empty() {
            bail!(Validation, "class distribution is empty");
        }
        if let Some(v) = class_probs.iter().find(|v| !(**v >= T::zero() && **v <= T::one())) {
            bail!(Validation, "class probability {v} outside [0, 1]");
        }
        let sum: f64 = class_probs.iter().map(|v| v.to_f64_lossy()).sum();
        if (sum - 1.0).abs() > 1e-6 {
            bail!(Validation, "class probabilities sum to {sum}");
        }
        Ok(PredictionMap { frames, class_probs })
    }
}

fn clamp_prob<T: Scalar>(p: T) -> T {
    let eps = T::lit(EPS);
    p.max(eps).min(T::one() - eps)
}

fn check_shape<T: Scalar>(pred: &ProbMap<T>, target: &Bitmap) -> Result<()> {
    if pred.height != target.height() || pred.width != target.width() {
        bail!(
            Validation,
            "prediction is {}x{}, target is {}x{}",
            pred.height,
            pred.width,
            target.height(),
            target.width()
        );
    }
    Ok(())
}

/// Mean binary cross-entropy between a probability map and a binary target.
pub fn frame_loss<T: Scalar>(pred: &ProbMap<T>, target: &Bitmap) -> Result<T> {
    check_shape(pred, target)?;
    let n = pred.values.len();
    let total: T = pred
        .values
        .iter()
        .zip(target.bits())
        .map(|(&p, &t)| {
            let p = clamp_prob(p);
            if t {
                -p.ln()
            } else {
                -(T::one() - p).ln()
            }
        })
        .sum();
    Ok(total / T::from_usize_lossy(n))
}

/// Derivative of [`frame_loss`] with respect to every prediction,
/// `(p - t) / (p (1 - p) N)`. Predictions outside the clamp interval sit on
/// the flat part of the clamped loss and get zero.
pub fn frame_loss_gradient<T: Scalar>(pred: &ProbMap<T>, target: &Bitmap) -> Result<Vec<T>> {
    check_shape(pred, target)?;
    let n = T::from_usize_lossy(pred.values.len());
    let eps = T::lit(EPS);
    Ok(pred
        .values
        .iter()
        .zip(target.bits())
        .map(|(&p, &t)| {
            if p < eps || p > T::one() - eps {
                return T::zero();
            }
            let t = if t { T::one() } else { T::zero() };
            (p - t) / (p * (T::one() - p) * n)
        })
        .collect())
}

/// `sum_i W_i L_i`.
pub fn weighted_detection_loss<T: Scalar>(losses: &[T], weights: &[T]) -> Result<T> {
    if losses.len() != weights.len() {
        bail!(Validation, "{} losses but {} weights", losses.len(), weights.len());
    }
    if let Some(w) = weights.iter().find(|w| !(**w >= T::zero() && **w <= T::one())) {
        bail!(Validation, "weight {w} outside [0, 1]");
    }
    Ok(losses.iter().zip(weights).map(|(&l, &w)| w * l).sum())
}

/// Negative log-likelihood of the true class.
pub fn classification_loss<T: Scalar>(class_probs: &[T], class: usize) -> Result<T> {
    let Some(&p) = class_probs.get(class) else {
        bail!(Validation, "class {class} outside [0, {})", class_probs.len());
    };
    Ok(-clamp_prob(p).ln())
}

/// Which detection terms a sample contributes.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct Gates {
    pub box_: bool,
    pub pixel: bool,
    pub scribble: bool,
    pub point: bool,
}

impl Gates {
    pub fn from_kinds(kinds: &BTreeSet<AnnotationKind>) -> Self {
        Gates {
            box_: kinds.contains(&AnnotationKind::Box),
            pixel: kinds.contains(&AnnotationKind::Mask),
            scribble: kinds.contains(&AnnotationKind::Scribble),
            point: kinds.contains(&AnnotationKind::Point),
        }
    }

    /// Gates of the kinds that produced at least one pseudo-label frame.
    pub fn from_labels(labels: &PseudoLabelSet) -> Self {
        Self::from_kinds(&labels.frames.iter().map(|f| f.source).collect())
    }
}

/// Detection losses of one sample, absent for kinds it does not carry.
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct KindLosses<T> {
    pub box_: Option<T>,
    pub pixel: Option<T>,
    pub scribble: Option<T>,
    pub point: Option<T>,
}

/// Weighted detection loss of every annotation kind: the sum of `W_i L_i`
/// over the frames whose pseudo-label came from that kind.
pub fn detection_losses<T: Scalar>(pred: &PredictionMap<T>, labels: &PseudoLabelSet) -> Result<KindLosses<T>> {
    let mut out = KindLosses::default();
    for f in &labels.frames {
        let Some(p) = pred.frames.get(f.frame as usize) else {
            bail!(Validation, "prediction has {} frames, pseudo-label on frame {}", pred.frames.len(), f.frame);
        };
        let term = T::lit(f.weight) * frame_loss(p, &labels.target_mask(f))?;
        let slot = match f.source {
            AnnotationKind::Box => &mut out.box_,
            AnnotationKind::Mask => &mut out.pixel,
            AnnotationKind::Scribble => &mut out.scribble,
            AnnotationKind::Point => &mut out.point,
        };
        *slot = Some(slot.unwrap_or_else(T::zero) + term);
    }
    Ok(out)
}

/// Every term of the total loss of one sample.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LossBreakdown<T> {
    pub cls: T,
    pub box_: T,
    pub pixel: T,
    pub scribble: T,
    pub point: T,
    /// Superpixel energy per voxel.
    pub slic: T,
    pub total: T,
    pub gates: Gates,
}

/// Gated sum `cls + box + pixel + scribble + point + slic`, where the
/// superpixel energy is divided by the voxel count. A gate that is set for a
/// term the sample does not have is an error; an ungated term is ignored.
pub fn total_loss<T: Scalar>(
    cls: T,
    detection: &KindLosses<T>,
    gates: Gates,
    slic_energy: T,
    voxels: usize,
) -> Result<LossBreakdown<T>> {
    if voxels == 0 {
        bail!(Validation, "voxel count must be positive");
    }
    let term = |on: bool, v: Option<T>, name: &str| -> Result<T> {
        match (on, v) {
            (false, _) => Ok(T::zero()),
            (true, Some(v)) => Ok(v),
            (true, None) => bail!(Validation, "{name} gate is set but the sample has no {name} loss"),
        }
    };
    let box_ = term(gates.box_, detection.box_, "box")?;
    let pixel = term(gates.pixel, detection.pixel, "pixel")?;
    let scribble = term(gates.scribble, detection.scribble, "scribble")?;
    let point = term(gates.point, detection.point, "point")?;
    let slic = slic_energy / T::from_usize_lossy(voxels);
    let parts = [cls, box_, pixel, scribble, point, slic];
    if let Some(v) = parts.iter().find(|v| !(**v >= T::zero()) || !v.is_finite()) {
        bail!(Validation, "loss term {v} is negative or not finite");
    }
    Ok(LossBreakdown { cls, box_, pixel, scribble, point, slic, total: parts.into_iter().sum(), gates })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn half_prediction_is_ln2() {
        let p = ProbMap::constant(2, 3, 0.5f64).unwrap();
        let mut t = Bitmap::empty(2, 3);
        t.set(1, 1, true);
        assert!((frame_loss(&p, &t).unwrap() - 2f64.ln()).abs() < 1e-12);
    }

    #[test]
    fn perfect_prediction_is_near_zero() {
        let mut t = Bitmap::empty(2, 2);
        t.set(0, 0, true);
        let p = ProbMap::new(2, 2, vec![1.0, 0.0, 0.0, 0.0f64]).unwrap();
        assert!(frame_loss(&p, &t).unwrap() <= -(1.0 - EPS).ln() + 1e-15);
    }

    #[test]
    fn single_pixel_gradient() {
        let p = ProbMap::new(1, 1, vec![0.5f64]).unwrap();
        let t = Bitmap::from_bits(1, 1, vec![true]).unwrap();
        assert_eq!(frame_loss_gradient(&p, &t).unwrap(), vec![-2.0]);
    }

    #[test]
    fn weighted_examples() {
        assert_eq!(weighted_detection_loss(&[2.0, 4.0], &[1.0, 0.5]).unwrap(), 4.0);
        assert_eq!(weighted_detection_loss(&[2.0, 4.0], &[0.0, 0.0]).unwrap(), 0.0);
        assert!(weighted_detection_loss(&[2.0], &[1.0, 0.5]).is_err());
    }

    #[test]
    fn classification_examples() {
        assert!(classification_loss(&[0.0, 1.0, 0.0f64], 1).unwrap() < 1e-6);
        assert!((classification_loss(&[0.25f64; 4], 2).unwrap() - 4f64.ln()).abs() < 1e-12);
        assert!(classification_loss(&[0.25f64; 4], 4).is_err());
    }

    #[test]
    fn total_examples() {
        let none = KindLosses::default();
        let b = total_loss(1.0, &none, Gates::default(), 5.0, 10).unwrap();
        assert_eq!(b.total, 1.5);
        let det = KindLosses { box_: Some(2.0), ..Default::default() };
        let gates = Gates { box_: true, ..Default::default() };
        assert_eq!(total_loss(1.0, &det, gates, 0.5, 1).unwrap().total, 3.5);
        let bad = Gates { scribble: true, ..Default::default() };
        assert!(total_loss(1.0, &det, bad, 0.5, 1).is_err());
    }
}
