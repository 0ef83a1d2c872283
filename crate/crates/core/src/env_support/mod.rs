//! Environment-side math for the in-hand manipulation tasks: reward shaping,
//! action mapping, observation stacking, target trajectories and a kinematic
//! pinch environment driven by the analytic contact provider.

mod control;
mod env;
mod observation;
mod reward;
mod targets;

pub use control::{action_to_targets, lowpass_step, JointState, LowPassFilter};
pub use env::{
    estimate_contact_point, EnvConfig, EpisodeState, PinchEnv, PinchKinematics, StepInfo, StepResult, StepStatus,
    Task, TrajectoryKind,
};
pub use observation::{ObservationFrame, ObservationHistory, ObservationVariant, TargetTracker, HISTORY_DEPTH};
pub use reward::{compute_reward, pen, rew, RewardBreakdown, RewardInputs, RewardWeights};
pub use targets::{read_waypoints_csv, TargetTrajectory};

/// Physics rate, Hz.
pub const F_SYS: f64 = 1000.0;
/// Control rate, Hz.
pub const F_CONT: f64 = 10.0;
