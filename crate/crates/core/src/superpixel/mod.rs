//! Spatio-temporal superpixels by iterative minimization of a SLIC energy
//! over the video volume.

mod connectivity;
mod features;
mod slic;

pub use connectivity::enforce_connectivity;
pub use features::{extract_features, FeatureGrid, VoxelFeature};
pub use slic::{energy, segment, segment_traced, SlicConfig, SlicTrace};
