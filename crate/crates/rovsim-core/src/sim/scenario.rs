//! Full description of one simulation episode: plant and nominal models,
//! controller selection and gains, mission geometry, sensing configuration,
//! disturbance, and run parameters. A scenario plus its seed determines an
//! episode bit-exactly.

use alloc::vec;
use alloc::vec::Vec;
use core::fmt;

use nalgebra::{Matrix3, Vector2, Vector3};

use crate::control::{NfcGains, PidGains};
use crate::dynamics::{ModelParams, ParamError, SaturationLimits, MAX_STEP_DT};
use crate::localization::{MeasurementNoise, NoiseParams, ProcessNoise, Tag, TagMap};
use crate::planner::{build_plan, BoundaryPolygon, FsmConfig, PlannerError};
use crate::sim::DisturbanceSpec;
use crate::transform::{PlanarPose, RigidTransform};

/// Which controller closes the loop.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ControllerKind {
    Nfc,
    Pid,
}

/// Camera mount and detector gates.
#[derive(Debug, Clone, Copy)]
pub struct CameraConfig {
    /// Pose of the camera in the body frame (optical +z must point where the
    /// camera looks).
    pub camera_in_rig: RigidTransform,
    pub fov_half_angle: f64,
    pub range_limit: f64,
    /// Seconds between detector frames.
    pub tag_period: f64,
}

/// Synthetic IMU model: the true body acceleration plus a constant bias and
/// white noise, sampled every control tick.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ImuConfig {
    pub accel_noise_std: [f64; 4],
    pub accel_bias: [f64; 4],
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EkfConfig {
    pub init_cov_diag: [f64; 8],
    pub process: ProcessNoise,
    pub measurement: MeasurementNoise,
}

/// Axis-aligned safety/geometry box the mission must fit in.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TankBox {
    pub min: [f64; 3],
    pub max: [f64; 3],
}

impl TankBox {
    pub fn contains(&self, x: f64, y: f64, z: f64) -> bool {
        x >= self.min[0]
            && x <= self.max[0]
            && y >= self.min[1]
            && y <= self.max[1]
            && z >= self.min[2]
            && z <= self.max[2]
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum ScenarioError {
    InvalidDt { dt: f64 },
    InvalidDuration { duration: f64 },
    Params(ParamError),
    Planner(PlannerError),
    PlanOutsideTank { x: f64, y: f64 },
    InvalidDisturbance,
    InvalidCamera,
    UnstableNfcGains,
}

impl fmt::Display for ScenarioError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ScenarioError::InvalidDt { dt } => {
                write!(f, "dt {dt} outside (0, {MAX_STEP_DT}]")
            }
            ScenarioError::InvalidDuration { duration } => {
                write!(f, "duration {duration} must be positive")
            }
            ScenarioError::Params(e) => write!(f, "model parameters: {e}"),
            ScenarioError::Planner(e) => write!(f, "planner: {e}"),
            ScenarioError::PlanOutsideTank { x, y } => {
                write!(f, "waypoint ({x}, {y}) leaves the tank box")
            }
            ScenarioError::InvalidDisturbance => write!(f, "invalid disturbance spec"),
            ScenarioError::InvalidCamera => write!(f, "invalid camera configuration"),
            ScenarioError::UnstableNfcGains => write!(f, "NFC gains fail the stability check"),
        }
    }
}

#[derive(Debug, Clone)]
pub struct Scenario {
    /// True plant parameters (its `tau_d` is a constant base disturbance on
    /// top of [`Scenario::disturbance`]).
    pub plant: ModelParams,
    /// Model the controllers believe in; its `tau_d` is the NFC disturbance
    /// feedforward.
    pub nominal: ModelParams,
    pub controller: ControllerKind,
    pub nfc_gains: NfcGains,
    pub pid_gains: PidGains,

    pub boundary: BoundaryPolygon,
    pub margin: f64,
    pub speed: f64,
    pub start: PlanarPose,
    pub fsm: FsmConfig,

    pub tag_map: TagMap,
    pub tag_noise: NoiseParams,
    pub camera: CameraConfig,
    pub imu: ImuConfig,
    pub ekf: EkfConfig,

    pub disturbance: DisturbanceSpec,
    pub saturation: SaturationLimits,
    pub tank: TankBox,

    pub seed: u64,
    pub dt: f64,
    pub duration: f64,
}

impl Scenario {
    pub fn validate(&self) -> Result<(), ScenarioError> {
        if !(self.dt > 0.0 && self.dt <= MAX_STEP_DT) {
            return Err(ScenarioError::InvalidDt { dt: self.dt });
        }
        if !(self.duration > 0.0) {
            return Err(ScenarioError::InvalidDuration {
                duration: self.duration,
            });
        }
        self.plant.validate().map_err(ScenarioError::Params)?;
        self.nominal.validate().map_err(ScenarioError::Params)?;
        if !self.disturbance.is_valid() {
            return Err(ScenarioError::InvalidDisturbance);
        }
        if !(self.camera.fov_half_angle > 0.0
            && self.camera.range_limit > 0.0
            && self.camera.tag_period >= self.dt)
        {
            return Err(ScenarioError::InvalidCamera);
        }

        let plan = build_plan(
            &self.boundary,
            self.margin,
            self.speed,
            Some(Vector2::new(self.start.x, self.start.y)),
        )
        .map_err(ScenarioError::Planner)?;
        for wp in &plan.waypoints {
            if !self.tank.contains(wp.x, wp.y, wp.z) {
                return Err(ScenarioError::PlanOutsideTank { x: wp.x, y: wp.y });
            }
        }
        Ok(())
    }

    /// The standard laboratory tank scenario: a 2.59 m x 1.70 m x 0.61 m tank
    /// inspected at 0.35 m depth with a 0.4 m stand-off margin at 0.1 m/s,
    /// eight wall tags, a forward-looking camera, and a slightly buoyant
    /// plant driven by the nominal controller model.
    pub fn tank(seed: u64) -> Self {
        let boundary = BoundaryPolygon::new(
            vec![
                Vector2::new(0.0, 0.0),
                Vector2::new(2.59, 0.0),
                Vector2::new(2.59, 1.70),
                Vector2::new(0.0, 1.70),
            ],
            0.35,
        )
        .expect("tank rectangle is a valid boundary");

        let mut plant = ModelParams::nominal();
        plant.buoyancy_minus_weight = 0.8;

        Self {
            plant,
            nominal: ModelParams::nominal(),
            controller: ControllerKind::Nfc,
            nfc_gains: NfcGains::default(),
            pid_gains: PidGains::default(),
            boundary,
            margin: 0.4,
            speed: 0.1,
            start: PlanarPose::new(1.0, 0.7, 0.35, -core::f64::consts::FRAC_PI_2),
            fsm: FsmConfig::default(),
            tag_map: tank_wall_tags(),
            tag_noise: NoiseParams {
                sigma_t: 0.01,
                sigma_r: 0.01,
            },
            camera: CameraConfig {
                camera_in_rig: forward_camera_mount(),
                fov_half_angle: core::f64::consts::FRAC_PI_4,
                range_limit: 2.5,
                tag_period: 0.1,
            },
            imu: ImuConfig {
                accel_noise_std: [0.05, 0.05, 0.05, 0.3],
                accel_bias: [0.01, -0.008, 0.005, 0.02],
            },
            ekf: EkfConfig {
                init_cov_diag: [1e-4, 1e-4, 1e-4, 1e-4, 1e-4, 1e-4, 1e-4, 1e-4],
                process: ProcessNoise {
                    pose: [1e-8, 1e-8, 1e-8, 1e-8],
                    velocity: [5e-3, 5e-3, 5e-3, 2e-2],
                },
                measurement: MeasurementNoise {
                    variance: [2e-4, 2e-4, 2e-4, 1e-4],
                },
            },
            disturbance: DisturbanceSpec::none(),
            saturation: SaturationLimits::default(),
            tank: TankBox {
                min: [0.0, 0.0, 0.0],
                max: [2.59, 1.70, 0.61],
            },
            seed,
            dt: 0.01,
            duration: 200.0,
        }
    }

    pub fn with_controller(mut self, controller: ControllerKind) -> Self {
        self.controller = controller;
        self
    }

    pub fn with_seed(mut self, seed: u64) -> Self {
        self.seed = seed;
        self
    }
}

/// Forward-looking camera mount: optical +z along body +x, camera x to
/// starboard, camera y down, 15 cm ahead of the body origin.
pub fn forward_camera_mount() -> RigidTransform {
    RigidTransform::new(
        Matrix3::new(
            0.0, 0.0, 1.0, //
            1.0, 0.0, 0.0, //
            0.0, 1.0, 0.0,
        ),
        Vector3::new(0.15, 0.0, 0.0),
    )
    .expect("axis permutation is orthonormal")
}

/// Eight markers, two per tank wall, at inspection depth, facing inward.
fn tank_wall_tags() -> TagMap {
    let z_up = Vector3::z();
    let mut tags = Vec::new();
    let mut push = |id: u32, pos: (f64, f64), normal: (f64, f64)| {
        tags.push(Tag {
            id,
            pose: RigidTransform::from_z_axis(
                Vector3::new(normal.0, normal.1, 0.0),
                z_up,
                Vector3::new(pos.0, pos.1, 0.35),
            ),
        });
    };
    // y = 0 wall faces +y.
    push(0, (0.65, 0.0), (0.0, 1.0));
    push(1, (1.94, 0.0), (0.0, 1.0));
    // x = 2.59 wall faces -x.
    push(2, (2.59, 0.42), (-1.0, 0.0));
    push(3, (2.59, 1.28), (-1.0, 0.0));
    // y = 1.70 wall faces -y.
    push(4, (1.94, 1.70), (0.0, -1.0));
    push(5, (0.65, 1.70), (0.0, -1.0));
    // x = 0 wall faces +x.
    push(6, (0.0, 1.28), (1.0, 0.0));
    push(7, (0.0, 0.42), (1.0, 0.0));
    TagMap::new(tags).expect("tank tag ids are unique")
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn tank_scenario_validates() {
        let s = Scenario::tank(0);
        assert!(s.validate().is_ok());
        assert_eq!(s.tag_map.len(), 8);
    }

    #[test]
    fn validation_catches_bad_fields() {
        let mut s = Scenario::tank(0);
        s.dt = 0.0;
        assert!(matches!(s.validate(), Err(ScenarioError::InvalidDt { .. })));

        let mut s = Scenario::tank(0);
        s.duration = -1.0;
        assert!(matches!(
            s.validate(),
            Err(ScenarioError::InvalidDuration { .. })
        ));

        let mut s = Scenario::tank(0);
        s.margin = 2.0; // collapses the tank rectangle
        assert!(matches!(s.validate(), Err(ScenarioError::Planner(_))));

        let mut s = Scenario::tank(0);
        s.tank.max = [0.5, 0.5, 0.61];
        assert!(matches!(
            s.validate(),
            Err(ScenarioError::PlanOutsideTank { .. })
        ));

        let mut s = Scenario::tank(0);
        s.camera.tag_period = 0.001; // faster than the control rate
        assert!(matches!(s.validate(), Err(ScenarioError::InvalidCamera)));
    }

    #[test]
    fn wall_tags_face_inward() {
        let map = tank_wall_tags();
        for tag in map.tags() {
            let normal = tag.pose.rotation() * Vector3::z();
            let pos = tag.pose.translation();
            // Walking a small step along the tag normal must move into the tank.
            let probe = pos + normal * 0.05;
            assert!(
                probe.x > -1e-9 && probe.x < 2.59 + 1e-9 && probe.y > -1e-9 && probe.y < 1.70 + 1e-9,
                "tag {} normal points out of the tank",
                tag.id
            );
        }
    }
}
