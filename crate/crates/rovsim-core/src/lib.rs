//! # rovsim-core
//!
//! Simulation and control library for a 4-DoF inspection ROV:
//!
//! * [`transform`] — rigid-transform algebra and the planar (x, y, z, psi) pose
//! * [`dynamics`] — body-frame vehicle model `M nu_dot + C(nu) nu + D(nu) nu + g + tau_d = tau`,
//!   its world-frame form, and fixed-step RK4 integration
//! * [`control`] — tracking-error formulation, the nominal feedback (exact linearization)
//!   controller with closed-loop eigenvalue verification, and a four-axis PID baseline
//! * [`planner`] — inward-offset inspection paths over a boundary polygon and the
//!   mission state machine producing reference points
//! * [`localization`] — synthetic fiducial-tag observations, the map/tag/camera pose
//!   chain, and an EKF fusing tag poses with inertial data
//! * [`sim`] — scenario description, disturbance injection, closed-loop episode
//!   execution, and tracking metrics
//!
//! The crate is `no_std` (with `alloc`) so the models can run embedded or be driven
//! by any host front end; file formats and the CLI live in the companion `rovsim` crate.
//! All randomness is drawn from caller-provided seeded streams, so every run is
//! bit-reproducible.

#![no_std]

extern crate alloc;

#[cfg(test)]
extern crate std;

pub mod control;
pub mod dynamics;
pub mod localization;
pub mod planner;
pub mod sim;
pub mod transform;

pub use control::{
    nfc_wrench, pid_wrench, tracking_error, verify_stability, ControlTelemetry, Controller,
    NfcGains, PidAxisGains, PidGains, PidMemory, ReferencePoint, TrackingError,
};
pub use dynamics::{
    body_accel, coriolis_matrix, damping_matrix, mass_matrix, step, transform_j,
    world_dynamics_terms, BodyVelocity, ControlWrench, ModelParams, SaturationLimits,
    VehicleState, WrenchFrame,
};
pub use localization::{
    ekf_predict, ekf_update, observe_tags, pose_from_tag, FusedEstimate, MeasurementNoise,
    NoiseParams, ProcessNoise, TagMap, TagObservation,
};
pub use planner::{
    advance, build_plan, BoundaryPolygon, FsmConfig, InspectionPlan, MissionMode, MissionState,
};
pub use sim::{
    compare_controllers, mae, run_episode, ComparisonReport, ControllerKind, DisturbanceSpec,
    EpisodeResult, EpisodeRow, Scenario,
};
pub use transform::{wrap_angle, PlanarPose, RigidTransform};
