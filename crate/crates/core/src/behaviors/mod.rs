//! Reactive controllers: segment-based target tracking and the two obstacle
//! avoidance variants (fixed sonar ring, single rotating sensor).

mod avoidance;
mod stuck;
mod tracking;

pub use avoidance::{
    avoid_step_ring, avoid_step_ring_with_cause, avoid_step_rotating, AvoidAction, AvoidConfig,
    EscapeCause, ScanPhase, SonarRing,
};
pub use stuck::{detect_stuck, MotionSample, PoseHistory};
pub use tracking::{
    estimate_range, select_target, track_step, BBox, Detection, TrackOutput, TrackerConfig, Zone,
};
