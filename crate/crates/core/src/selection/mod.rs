//! Uncertainty scoring, bucket-based choice of which videos to annotate and
//! how, and man-hour accounting of the resulting plans.

mod cost;
mod plan;
mod uncertainty;

pub use cost::{fit_cost_table, mix_cost, plan_cost, AnnotationMix, CostFit, DatasetProfile};
pub use plan::{
    pick_frames, select, uniform_frames, Bucket, BudgetConfig, Geometry, PlanEntry, Policy, SelectionPlan,
};
pub use uncertainty::{frame_scores, frame_uncertainty, video_uncertainty};
