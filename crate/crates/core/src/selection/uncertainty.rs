use crate::datamodel::UncertaintyVolume;
use crate::error::{bail, Result};
use crate::scalar::Scalar;

/// Sum of per-pixel uncertainties of one frame.
pub fn frame_uncertainty<T: Scalar>(u: &[T]) -> Result<f64> {
    let mut sum = 0.0;
    for v in u {
        if !(*v >= T::zero()) || !v.is_finite() {
            bail!(Validation, "uncertainty {v} is negative or not finite");
        }
        sum += v.to_f64_lossy();
    }
    Ok(sum)
}

/// Score of every frame of a video.
pub fn frame_scores<T: Scalar>(uv: &UncertaintyVolume<T>) -> Result<Vec<f64>> {
    (0..uv.dims.depth).map(|t| frame_uncertainty(uv.frame(t))).collect()
}

/// Mean frame score.
pub fn video_uncertainty<T: Scalar>(uv: &UncertaintyVolume<T>) -> Result<f64> {
    let s = frame_scores(uv)?;
    Ok(s.iter().sum::<f64>() / s.len() as f64)
}
