//! Sparse-annotation active learning for video action detection.
//!
//! The crate covers the non-neural parts of the pipeline: CIELAB video
//! volumes, spatio-temporal superpixels, pseudo-label generation from sparse
//! annotations, the training objective, uncertainty-driven video and frame
//! selection with annotation cost accounting, and a simulated multi-round
//! annotation campaign.
//!
//! Numeric code is generic over [`Scalar`] (`f32` or `f64`); the aliases at
//! the crate root fix the scalar for common use.

mod error;
pub mod campaign;
pub mod cli;
pub mod datamodel;
pub mod objective;
pub mod pseudolabel;
pub mod scalar;
pub mod selection;
pub mod superpixel;

pub use error::{Error, Result};
pub use scalar::Scalar;

pub type VideoVolumeF32 = datamodel::VideoVolume<f32>;
pub type VideoVolumeF64 = datamodel::VideoVolume<f64>;
pub type SuperpixelLabelsF32 = datamodel::SuperpixelLabels<f32>;
pub type SuperpixelLabelsF64 = datamodel::SuperpixelLabels<f64>;
pub type UncertaintyVolumeF32 = datamodel::UncertaintyVolume<f32>;
pub type UncertaintyVolumeF64 = datamodel::UncertaintyVolume<f64>;
pub type SlicConfigF32 = superpixel::SlicConfig<f32>;
pub type SlicConfigF64 = superpixel::SlicConfig<f64>;
