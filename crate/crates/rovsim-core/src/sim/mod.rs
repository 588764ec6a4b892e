//! Closed-loop episode execution: scenario description, disturbance
//! injection, the sense -> plan -> control -> actuate -> integrate loop, and
//! the tracking-error metrics reported per run.

mod disturbance;
mod episode;
mod metrics;
mod scenario;

pub use disturbance::DisturbanceSpec;
pub use episode::{
    compare_controllers, run_episode, AxisWinner, ComparisonReport, EpisodeError, EpisodeResult,
    EpisodeRow,
};
pub use metrics::{mae, MetricsError};
pub use scenario::{
    CameraConfig, ControllerKind, EkfConfig, ImuConfig, Scenario, ScenarioError, TankBox,
};
