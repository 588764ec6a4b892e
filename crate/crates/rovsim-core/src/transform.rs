//! Rigid transforms and the planar pose used by the 4-DoF controller.
//!
//! Transforms are stored as a 3x3 rotation matrix plus a translation vector and
//! compose with pose semantics: `T_a_b` is the pose of frame `b` expressed in
//! frame `a`, so `T_map_rig = T_map_tag * T_tag_camera * T_camera_rig`.

use core::f64::consts::PI;
use core::fmt;

use nalgebra::{Matrix3, Matrix4, Vector3};

/// Max allowed residual of `R^T R - I` and `det(R) - 1` at construction.
pub const ORTHONORMALITY_TOL: f64 = 1e-9;

/// Compositions between Gram-Schmidt re-orthonormalization passes.
const REORTHONORMALIZE_EVERY: u32 = 1000;

/// Wraps an angle to `(-pi, pi]`.
pub fn wrap_angle(theta: f64) -> f64 {
    let two_pi = 2.0 * PI;
    let mut a = theta % two_pi;
    if a <= -PI {
        a += two_pi;
    } else if a > PI {
        a -= two_pi;
    }
    a
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum TransformError {
    /// `R^T R` deviates from identity by more than the tolerance.
    NotOrthonormal { residual: f64 },
    /// `det(R)` is not +1 (reflection or degenerate matrix).
    NotProperRotation { det: f64 },
    NonFinite,
}

impl fmt::Display for TransformError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            TransformError::NotOrthonormal { residual } => {
                write!(f, "rotation is not orthonormal (residual {residual:.3e})")
            }
            TransformError::NotProperRotation { det } => {
                write!(f, "rotation determinant {det:.9} is not +1")
            }
            TransformError::NonFinite => write!(f, "transform contains non-finite entries"),
        }
    }
}

/// A rotation + translation pair (an SE(3) element).
///
/// Long chains of compositions are periodically re-orthonormalized so the
/// rotation determinant stays at +1 within `1e-9` over millions of composes.
#[derive(Debug, Clone, Copy)]
pub struct RigidTransform {
    rotation: Matrix3<f64>,
    translation: Vector3<f64>,
    /// Compositions since the rotation was last known orthonormal.
    compositions: u32,
}

impl RigidTransform {
    pub fn identity() -> Self {
        Self {
            rotation: Matrix3::identity(),
            translation: Vector3::zeros(),
            compositions: 0,
        }
    }

    /// Validates orthonormality (`R^T R = I` and `det R = +1` within 1e-9).
    pub fn new(rotation: Matrix3<f64>, translation: Vector3<f64>) -> Result<Self, TransformError> {
        if !rotation.iter().all(|v| v.is_finite()) || !translation.iter().all(|v| v.is_finite()) {
            return Err(TransformError::NonFinite);
        }
        let residual = (rotation.transpose() * rotation - Matrix3::identity()).abs().max();
        if residual > ORTHONORMALITY_TOL {
            return Err(TransformError::NotOrthonormal { residual });
        }
        let det = rotation.determinant();
        if (det - 1.0).abs() > ORTHONORMALITY_TOL {
            return Err(TransformError::NotProperRotation { det });
        }
        Ok(Self {
            rotation,
            translation,
            compositions: 0,
        })
    }

    /// Pure translation.
    pub fn from_translation(x: f64, y: f64, z: f64) -> Self {
        Self {
            rotation: Matrix3::identity(),
            translation: Vector3::new(x, y, z),
            compositions: 0,
        }
    }

    /// Rotation of `yaw` radians about the world z axis, at the given position.
    pub fn from_yaw_translation(yaw: f64, translation: Vector3<f64>) -> Self {
        let (s, c) = (libm::sin(yaw), libm::cos(yaw));
        let rotation = Matrix3::new(c, -s, 0.0, s, c, 0.0, 0.0, 0.0, 1.0);
        Self {
            rotation,
            translation,
            compositions: 0,
        }
    }

    pub fn from_yaw(yaw: f64) -> Self {
        Self::from_yaw_translation(yaw, Vector3::zeros())
    }

    /// Rotation whose z axis points along `z_dir` (used for tag facing normals).
    ///
    /// The x axis is picked orthogonal to `z_dir`; `z_dir` must not be parallel
    /// to the provided `up` hint.
    pub fn from_z_axis(z_dir: Vector3<f64>, up: Vector3<f64>, translation: Vector3<f64>) -> Self {
        let z = z_dir.normalize();
        let x = up.cross(&z).normalize();
        let y = z.cross(&x);
        Self {
            rotation: Matrix3::from_columns(&[x, y, z]),
            translation,
            compositions: 0,
        }
    }

    pub fn rotation(&self) -> &Matrix3<f64> {
        &self.rotation
    }

    pub fn translation(&self) -> &Vector3<f64> {
        &self.translation
    }

    /// Applies `self` then `other`-to-`self` chaining: the result maps
    /// coordinates of `b`'s frame through `b` then `a` (matrix product `a * b`).
    pub fn compose(&self, other: &RigidTransform) -> RigidTransform {
        let mut rotation = self.rotation * other.rotation;
        let translation = self.rotation * other.translation + self.translation;
        let mut compositions = self
            .compositions
            .saturating_add(other.compositions)
            .saturating_add(1);
        if compositions >= REORTHONORMALIZE_EVERY {
            rotation = gram_schmidt(&rotation);
            compositions = 0;
        }
        RigidTransform {
            rotation,
            translation,
            compositions,
        }
    }

    pub fn invert(&self) -> RigidTransform {
        let rot_t = self.rotation.transpose();
        RigidTransform {
            rotation: rot_t,
            translation: -(rot_t * self.translation),
            compositions: self.compositions,
        }
    }

    pub fn transform_point(&self, p: &Vector3<f64>) -> Vector3<f64> {
        self.rotation * p + self.translation
    }

    /// Projects onto the 4 controlled degrees of freedom: translation plus the
    /// yaw of the rotation's first column, `atan2(R21, R11)`. Roll and pitch
    /// are discarded.
    pub fn to_planar(&self) -> PlanarPose {
        PlanarPose::new(
            self.translation.x,
            self.translation.y,
            self.translation.z,
            libm::atan2(self.rotation[(1, 0)], self.rotation[(0, 0)]),
        )
    }

    pub fn to_homogeneous(&self) -> Matrix4<f64> {
        let mut m = Matrix4::identity();
        m.fixed_view_mut::<3, 3>(0, 0).copy_from(&self.rotation);
        m.fixed_view_mut::<3, 1>(0, 3).copy_from(&self.translation);
        m
    }

    /// Flat wire encoding: 9 rotation entries row-major, then the translation.
    pub fn to_flat(&self) -> [f64; 12] {
        let r = &self.rotation;
        [
            r[(0, 0)],
            r[(0, 1)],
            r[(0, 2)],
            r[(1, 0)],
            r[(1, 1)],
            r[(1, 2)],
            r[(2, 0)],
            r[(2, 1)],
            r[(2, 2)],
            self.translation.x,
            self.translation.y,
            self.translation.z,
        ]
    }

    pub fn from_flat(flat: &[f64; 12]) -> Result<Self, TransformError> {
        let rotation = Matrix3::new(
            flat[0], flat[1], flat[2], flat[3], flat[4], flat[5], flat[6], flat[7], flat[8],
        );
        let translation = Vector3::new(flat[9], flat[10], flat[11]);
        Self::new(rotation, translation)
    }
}

/// The full tag-to-rig chain: `T_map_rig = T_map_tag * T_tag_camera * T_camera_rig`.
pub fn chain_rig_pose(
    map_to_tag: &RigidTransform,
    tag_to_camera: &RigidTransform,
    camera_to_rig: &RigidTransform,
) -> RigidTransform {
    map_to_tag.compose(tag_to_camera).compose(camera_to_rig)
}

fn gram_schmidt(r: &Matrix3<f64>) -> Matrix3<f64> {
    let c0: Vector3<f64> = r.column(0).normalize();
    let mut c1: Vector3<f64> = r.column(1).into();
    c1 -= c0 * c1.dot(&c0);
    let c1 = c1.normalize();
    let c2 = c0.cross(&c1);
    Matrix3::from_columns(&[c0, c1, c2])
}

/// World-frame position and yaw of the 4-DoF vehicle, `eta = [x, y, z, psi]`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PlanarPose {
    pub x: f64,
    pub y: f64,
    pub z: f64,
    /// Yaw, always wrapped to `(-pi, pi]`.
    pub psi: f64,
}

impl PlanarPose {
    pub fn new(x: f64, y: f64, z: f64, psi: f64) -> Self {
        Self {
            x,
            y,
            z,
            psi: wrap_angle(psi),
        }
    }

    pub fn origin() -> Self {
        Self::new(0.0, 0.0, 0.0, 0.0)
    }

    pub fn to_vector(&self) -> nalgebra::Vector4<f64> {
        nalgebra::Vector4::new(self.x, self.y, self.z, self.psi)
    }

    pub fn from_vector(v: &nalgebra::Vector4<f64>) -> Self {
        Self::new(v[0], v[1], v[2], v[3])
    }

    /// The equivalent rigid transform (yaw rotation at the pose position).
    pub fn to_transform(&self) -> RigidTransform {
        RigidTransform::from_yaw_translation(self.psi, Vector3::new(self.x, self.y, self.z))
    }
}
