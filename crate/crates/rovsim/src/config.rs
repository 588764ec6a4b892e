//! Scenario files: versioned TOML with one table per subsystem. Unknown keys
//! are rejected so typos fail loudly. The tag map lives in its own file,
//! referenced relative to the scenario file.

use std::path::Path;

use anyhow::{bail, Context, Result};
use serde::Deserialize;

use rovsim_core::control::{NfcGains, PidAxisGains, PidGains};
use rovsim_core::dynamics::{ModelParams, SaturationLimits};
use rovsim_core::localization::{MeasurementNoise, NoiseParams, ProcessNoise};
use rovsim_core::planner::{BoundaryPolygon, FsmConfig};
use rovsim_core::sim::{
    CameraConfig, ControllerKind, DisturbanceSpec, EkfConfig, ImuConfig, Scenario, TankBox,
};
use rovsim_core::transform::{PlanarPose, RigidTransform};

use crate::tagmap::load_tag_map;

pub const SCHEMA_VERSION: u32 = 1;

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct ScenarioFile {
    schema_version: u32,
    run: RunSection,
    plant: ModelSection,
    nominal: ModelSection,
    nfc: NfcSection,
    pid: PidSection,
    mission: MissionSection,
    tank: TankSection,
    camera: CameraSection,
    tags: TagsSection,
    imu: ImuSection,
    ekf: EkfSection,
    #[serde(default)]
    disturbance: DisturbanceSection,
    #[serde(default)]
    saturation: SaturationSection,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RunSection {
    seed: u64,
    dt: f64,
    duration: f64,
    controller: String,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct ModelSection {
    m: [f64; 4],
    coriolis_mass: [f64; 2],
    d_linear: [f64; 4],
    d_quadratic: [f64; 4],
    buoyancy_minus_weight: f64,
    tau_d: [f64; 4],
    /// Multiplicative inertia perturbation for mismatch studies.
    #[serde(default = "one")]
    mass_scale: f64,
}

fn one() -> f64 {
    1.0
}

impl ModelSection {
    fn build(&self) -> ModelParams {
        let mut p = ModelParams {
            m11: self.m[0],
            m22: self.m[1],
            m33: self.m[2],
            m44: self.m[3],
            c_m11: self.coriolis_mass[0],
            c_m22: self.coriolis_mass[1],
            d_lin: self.d_linear,
            d_quad: self.d_quadratic,
            buoyancy_minus_weight: self.buoyancy_minus_weight,
            tau_d: nalgebra::Vector4::from(self.tau_d),
        };
        p = p.with_mass_scale(self.mass_scale);
        p
    }
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct NfcSection {
    k1: [f64; 4],
    k2: [f64; 4],
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct PidSection {
    lateral: PidAxisSection,
    throttle: PidAxisSection,
    depth: PidAxisSection,
    yaw: PidAxisSection,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct PidAxisSection {
    kp: f64,
    ki: f64,
    kd: f64,
}

impl PidAxisSection {
    fn build(&self) -> PidAxisGains {
        PidAxisGains::new(self.kp, self.ki, self.kd)
    }
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct MissionSection {
    boundary: Vec<[f64; 2]>,
    depth: f64,
    margin: f64,
    speed: f64,
    start: [f64; 4],
    #[serde(default = "default_yaw_rate")]
    yaw_rate: f64,
    #[serde(default = "default_accept_position")]
    accept_position: f64,
    #[serde(default = "default_accept_yaw")]
    accept_yaw: f64,
    #[serde(default)]
    smooth_ramps: bool,
    #[serde(default = "default_ramp_time")]
    ramp_time: f64,
}

fn default_yaw_rate() -> f64 {
    0.2
}
fn default_accept_position() -> f64 {
    0.05
}
fn default_accept_yaw() -> f64 {
    0.05
}
fn default_ramp_time() -> f64 {
    0.5
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct TankSection {
    min: [f64; 3],
    max: [f64; 3],
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct CameraSection {
    /// Camera mount in the body frame: flat rigid-transform encoding
    /// (9 rotation entries row-major + translation).
    mount_flat: [f64; 12],
    fov_half_angle: f64,
    range_limit: f64,
    tag_period: f64,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct TagsSection {
    map_file: String,
    sigma_t: f64,
    sigma_r: f64,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct ImuSection {
    accel_noise_std: [f64; 4],
    accel_bias: [f64; 4],
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct EkfSection {
    init_cov_diag: [f64; 8],
    process_pose: [f64; 4],
    process_velocity: [f64; 4],
    measurement_variance: [f64; 4],
}

#[derive(Debug, Deserialize, Default)]
#[serde(deny_unknown_fields)]
struct DisturbanceSection {
    #[serde(default)]
    constant: [f64; 4],
    #[serde(default)]
    sin_amplitude: [f64; 4],
    #[serde(default)]
    sin_frequency_hz: f64,
    #[serde(default)]
    sin_phase: f64,
    #[serde(default)]
    onset: f64,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct SaturationSection {
    max: [f64; 4],
}

impl Default for SaturationSection {
    fn default() -> Self {
        Self {
            max: SaturationLimits::default().max,
        }
    }
}

/// Parses a scenario file and resolves its tag-map reference relative to the
/// scenario's directory.
pub fn load_scenario(path: &Path) -> Result<Scenario> {
    let text = std::fs::read_to_string(path)
        .with_context(|| format!("reading scenario {}", path.display()))?;
    let file: ScenarioFile =
        toml::from_str(&text).with_context(|| format!("parsing {}", path.display()))?;
    if file.schema_version != SCHEMA_VERSION {
        bail!(
            "scenario schema version {} not supported (expected {SCHEMA_VERSION})",
            file.schema_version
        );
    }

    let controller = match file.run.controller.as_str() {
        "nfc" => ControllerKind::Nfc,
        "pid" => ControllerKind::Pid,
        other => bail!("unknown controller {other:?} (expected \"nfc\" or \"pid\")"),
    };

    let boundary = BoundaryPolygon::new(
        file.mission
            .boundary
            .iter()
            .map(|&[x, y]| nalgebra::Vector2::new(x, y))
            .collect(),
        file.mission.depth,
    )
    .map_err(|e| anyhow::anyhow!("mission boundary: {e}"))?;

    let map_path = path
        .parent()
        .unwrap_or_else(|| Path::new("."))
        .join(&file.tags.map_file);
    let tag_map = load_tag_map(&map_path)?;

    let camera_in_rig = RigidTransform::from_flat(&file.camera.mount_flat)
        .map_err(|e| anyhow::anyhow!("camera mount: {e}"))?;

    let scenario = Scenario {
        plant: file.plant.build(),
        nominal: file.nominal.build(),
        controller,
        nfc_gains: NfcGains {
            k1: nalgebra::Vector4::from(file.nfc.k1),
            k2: nalgebra::Vector4::from(file.nfc.k2),
        },
        pid_gains: PidGains {
            lateral: file.pid.lateral.build(),
            throttle: file.pid.throttle.build(),
            depth: file.pid.depth.build(),
            yaw: file.pid.yaw.build(),
        },
        boundary,
        margin: file.mission.margin,
        speed: file.mission.speed,
        start: PlanarPose::new(
            file.mission.start[0],
            file.mission.start[1],
            file.mission.start[2],
            file.mission.start[3],
        ),
        fsm: FsmConfig {
            yaw_rate: file.mission.yaw_rate,
            accept_position: file.mission.accept_position,
            accept_yaw: file.mission.accept_yaw,
            smooth_ramps: file.mission.smooth_ramps,
            ramp_time: file.mission.ramp_time,
        },
        tag_map,
        tag_noise: NoiseParams {
            sigma_t: file.tags.sigma_t,
            sigma_r: file.tags.sigma_r,
        },
        camera: CameraConfig {
            camera_in_rig,
            fov_half_angle: file.camera.fov_half_angle,
            range_limit: file.camera.range_limit,
            tag_period: file.camera.tag_period,
        },
        imu: ImuConfig {
            accel_noise_std: file.imu.accel_noise_std,
            accel_bias: file.imu.accel_bias,
        },
        ekf: EkfConfig {
            init_cov_diag: file.ekf.init_cov_diag,
            process: ProcessNoise {
                pose: file.ekf.process_pose,
                velocity: file.ekf.process_velocity,
            },
            measurement: MeasurementNoise {
                variance: file.ekf.measurement_variance,
            },
        },
        disturbance: DisturbanceSpec {
            constant: nalgebra::Vector4::from(file.disturbance.constant),
            sin_amplitude: nalgebra::Vector4::from(file.disturbance.sin_amplitude),
            sin_frequency_hz: file.disturbance.sin_frequency_hz,
            sin_phase: file.disturbance.sin_phase,
            onset: file.disturbance.onset,
        },
        saturation: SaturationLimits {
            max: file.saturation.max,
        },
        tank: TankBox {
            min: file.tank.min,
            max: file.tank.max,
        },
        seed: file.run.seed,
        dt: file.run.dt,
        duration: file.run.duration,
    };

    scenario
        .validate()
        .map_err(|e| anyhow::anyhow!("scenario invalid: {e}"))?;
    Ok(scenario)
}

/// Command-line overrides applied after loading.
#[derive(Debug, Default, Clone, Copy)]
pub struct Overrides {
    pub seed: Option<u64>,
    pub dt: Option<f64>,
}

pub fn apply_overrides(mut scenario: Scenario, overrides: &Overrides) -> Result<Scenario> {
    if let Some(seed) = overrides.seed {
        scenario.seed = seed;
    }
    if let Some(dt) = overrides.dt {
        scenario.dt = dt;
    }
    scenario
        .validate()
        .map_err(|e| anyhow::anyhow!("scenario invalid after overrides: {e}"))?;
    Ok(scenario)
}
