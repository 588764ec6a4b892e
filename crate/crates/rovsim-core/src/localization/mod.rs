//! Tag-based localization: a synthetic stand-in for the fiducial-marker
//! detector, the map/tag/camera pose chain, and EKF fusion with inertial data.
//!
//! Frames follow pose semantics (`T_a_b` = pose of `b` in `a`), so the rig
//! pose in the map is the chain `T_map_rig = T_map_tag * T_tag_camera *
//! T_camera_rig`. Tags face the viewing volume along their local +z axis; the
//! camera looks along its own +z.

mod ekf;

pub use ekf::{
    ekf_predict, ekf_update, FusedEstimate, MeasurementNoise, ProcessNoise, MAHALANOBIS_GATE_SQ,
};

use alloc::vec::Vec;
use core::fmt;

use nalgebra::Vector3;
use rand::Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::transform::{chain_rig_pose, RigidTransform};

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum LocalizationError {
    UnknownTag { id: u32 },
    DuplicateTag { id: u32 },
}

impl fmt::Display for LocalizationError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            LocalizationError::UnknownTag { id } => write!(f, "tag {id} is not in the map"),
            LocalizationError::DuplicateTag { id } => write!(f, "tag {id} appears twice"),
        }
    }
}

/// A mapped fiducial marker: id plus its pose in the map frame.
#[derive(Debug, Clone, Copy)]
pub struct Tag {
    pub id: u32,
    /// `T_map_tag`.
    pub pose: RigidTransform,
}

/// The pre-built marker map. Tags are kept sorted by id so observation order
/// is deterministic.
#[derive(Debug, Clone)]
pub struct TagMap {
    tags: Vec<Tag>,
}

impl TagMap {
    pub fn new(mut tags: Vec<Tag>) -> Result<Self, LocalizationError> {
        tags.sort_by_key(|t| t.id);
        for pair in tags.windows(2) {
            if pair[0].id == pair[1].id {
                return Err(LocalizationError::DuplicateTag { id: pair[0].id });
            }
        }
        Ok(Self { tags })
    }

    pub fn tags(&self) -> &[Tag] {
        &self.tags
    }

    pub fn get(&self, id: u32) -> Option<&Tag> {
        self.tags
            .binary_search_by_key(&id, |t| t.id)
            .ok()
            .map(|i| &self.tags[i])
    }

    pub fn len(&self) -> usize {
        self.tags.len()
    }

    pub fn is_empty(&self) -> bool {
        self.tags.is_empty()
    }
}

/// One detected marker: the camera pose relative to the observed tag
/// (`T_tag_camera`, the online-estimated link of the chain).
#[derive(Debug, Clone, Copy)]
pub struct TagObservation {
    pub id: u32,
    pub camera_from_tag: RigidTransform,
    pub timestamp: f64,
}

/// Standard deviations of the synthetic detector noise.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NoiseParams {
    /// Per-component translation noise (meters).
    pub sigma_t: f64,
    /// Rotation noise angle about a random axis (radians).
    pub sigma_r: f64,
}

impl NoiseParams {
    pub fn none() -> Self {
        Self {
            sigma_t: 0.0,
            sigma_r: 0.0,
        }
    }
}

/// Simulates the detector: every mapped tag inside the camera's range and
/// field-of-view cone (and facing it) yields one observation, perturbed by
/// zero-mean Gaussian noise drawn from `rng`.
///
/// `camera_to_rig` is the `T_camera_rig` link of the chain (rig pose in the
/// camera frame). Tags are visited in id order; the returned list may be
/// empty when nothing is visible.
#[allow(clippy::too_many_arguments)]
pub fn observe_tags(
    true_pose: &RigidTransform,
    map: &TagMap,
    camera_to_rig: &RigidTransform,
    noise: &NoiseParams,
    fov_limit: f64,
    range_limit: f64,
    timestamp: f64,
    rng: &mut impl Rng,
) -> Vec<TagObservation> {
    // T_map_camera = T_map_rig * (T_camera_rig)^-1
    let map_to_camera = true_pose.compose(&camera_to_rig.invert());
    let camera_from_map = map_to_camera.invert();

    let mut observations = Vec::new();
    for tag in map.tags() {
        // Tag pose seen from the camera.
        let camera_to_tag = camera_from_map.compose(&tag.pose);
        let t = *camera_to_tag.translation();
        let range = t.norm();
        if range > range_limit || range < 1e-9 {
            continue;
        }
        // In front of the camera and inside the cone about +z.
        if t.z <= 0.0 {
            continue;
        }
        let angle = libm::acos((t.z / range).clamp(-1.0, 1.0));
        if angle > fov_limit {
            continue;
        }
        // The tag face (+z) must point back toward the camera.
        let tag_normal = camera_to_tag.rotation() * Vector3::z();
        if tag_normal.dot(&t) >= 0.0 {
            continue;
        }

        let exact = camera_to_tag.invert();
        let noisy = perturb(&exact, noise, rng);
        observations.push(TagObservation {
            id: tag.id,
            camera_from_tag: noisy,
            timestamp,
        });
    }
    observations
}

/// Applies the detector noise model: additive Gaussian translation error and a
/// small rotation of Gaussian angle about a uniformly random axis.
fn perturb(exact: &RigidTransform, noise: &NoiseParams, rng: &mut impl Rng) -> RigidTransform {
    let normal = StandardNormal;
    // Fixed draw pattern per visible tag keeps runs reproducible across
    // noise settings.
    let dt = Vector3::new(
        normal.sample(rng),
        normal.sample(rng),
        normal.sample(rng),
    ) * noise.sigma_t;
    let mut axis = Vector3::new(
        normal.sample(rng),
        normal.sample(rng),
        normal.sample(rng),
    );
    if axis.norm() < 1e-12 {
        axis = Vector3::x();
    }
    let angle: f64 = { let a: f64 = normal.sample(rng); a * noise.sigma_r };

    let axis = axis.normalize();
    let rot_noise = axis_angle(&axis, angle);
    let rotation = rot_noise * exact.rotation();
    let translation = exact.translation() + dt;
    RigidTransform::new(rotation, translation)
        .expect("noise rotation keeps the matrix orthonormal")
}

fn axis_angle(axis: &Vector3<f64>, angle: f64) -> nalgebra::Matrix3<f64> {
    let (s, c) = (libm::sin(angle), libm::cos(angle));
    let k = nalgebra::Matrix3::new(
        0.0, -axis.z, axis.y, //
        axis.z, 0.0, -axis.x, //
        -axis.y, axis.x, 0.0,
    );
    nalgebra::Matrix3::identity() + k * s + k * k * (1.0 - c)
}

/// Solves the chain for the rig pose: `T_map_rig = T_map_tag * T_tag_camera *
/// T_camera_rig`.
pub fn pose_from_tag(
    obs: &TagObservation,
    map: &TagMap,
    camera_to_rig: &RigidTransform,
) -> Result<RigidTransform, LocalizationError> {
    let tag = map
        .get(obs.id)
        .ok_or(LocalizationError::UnknownTag { id: obs.id })?;
    Ok(chain_rig_pose(&tag.pose, &obs.camera_from_tag, camera_to_rig))
}
