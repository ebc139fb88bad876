//! Simulated multi-round annotation campaigns on synthetic videos: scene
//! generation, a noisy stand-in detector, scribble synthesis, detection
//! metrics and the round loop tying selection to pseudo-labelling.

mod ablation;
mod detector;
mod metrics;
mod run;
mod scene;
mod scribble;

pub use ablation::{scribble_ablation, AblationRow, ABLATION_LEVELS};
pub use detector::{noisy_detector, DetectorOutput};
pub use metrics::{frame_map, tube_iou, video_map, FrameDetection, FrameTruth, Tube, TubeDetection};
pub use run::{reports_to_csv, run_campaign, scene_slic_config, CampaignConfig, RoundReport, World};
pub use scene::{generate_scene, generate_scenes, SceneParams, SyntheticScene, CLASSES};
pub use scribble::{prune_spurs, scribble_from_mask, thin};
