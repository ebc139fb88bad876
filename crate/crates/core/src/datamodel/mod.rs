//! Domain types, color conversion and on-disk formats.

pub mod annotation;
pub mod color;
pub mod costs;
pub mod geometry;
pub mod labels;
pub mod pseudo;
pub mod rle;
pub mod split;
pub mod volume;

pub use annotation::{parse_annotations, write_annotations, AnnotationKind, AnnotationRecord, Entry, Payload};
pub use costs::{CostKind, CostTable};
pub use geometry::{BBox, Bitmap, Dims, Pixel};
pub use labels::{
    read_labels, read_uncertainty, write_labels, write_uncertainty, Cluster, SuperpixelLabels, UncertaintyVolume,
    FEATURE_DIM,
};
pub use pseudo::{read_pseudolabels, write_pseudolabels, Provenance, PseudoFrame, PseudoLabelSet, Target};
pub use split::DatasetSplit;
pub use volume::{load_video, save_frames, VideoVolume};
