//! Dense per-frame pseudo-labels from sparse annotations.

mod boxes;
mod build;
mod masks;
mod sparse;
mod weights;

pub use boxes::interpolate_boxes;
pub use build::{build_pseudolabels, PseudoMode};
pub use masks::{interpolate_masks, signed_distance};
pub use sparse::{expand_sparse, scribble_to_box, Expansion};
pub use weights::WeightConfig;
