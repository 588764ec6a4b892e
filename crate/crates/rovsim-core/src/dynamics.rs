//! 4-DoF vehicle dynamics in the body frame,
//!
//! ```text
//! M nu_dot + C(nu) nu + D(nu) nu + g + tau_d = tau
//! eta_dot = J(psi) nu
//! ```
//!
//! with `nu = [u, v, w, r]` (surge, sway, heave, yaw rate) and
//! `eta = [x, y, z, psi]` in the world frame, plus the equivalent
//! world-frame form obtained by conjugating with `J(psi)`.

use core::fmt;

use nalgebra::{Matrix4, Vector4};

use crate::transform::{wrap_angle, PlanarPose};

/// Body-frame velocity `[u, v, w, r]`: surge, sway, heave (m/s) and yaw rate (rad/s).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BodyVelocity {
    pub u: f64,
    pub v: f64,
    pub w: f64,
    pub r: f64,
}

impl BodyVelocity {
    pub fn new(u: f64, v: f64, w: f64, r: f64) -> Self {
        Self { u, v, w, r }
    }

    pub fn zero() -> Self {
        Self::new(0.0, 0.0, 0.0, 0.0)
    }

    pub fn to_vector(&self) -> Vector4<f64> {
        Vector4::new(self.u, self.v, self.w, self.r)
    }

    pub fn from_vector(v: &Vector4<f64>) -> Self {
        Self::new(v[0], v[1], v[2], v[3])
    }

    pub fn is_finite(&self) -> bool {
        self.u.is_finite() && self.v.is_finite() && self.w.is_finite() && self.r.is_finite()
    }
}

/// World-frame pose plus body-frame velocity.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct VehicleState {
    pub eta: PlanarPose,
    pub nu: BodyVelocity,
}

impl VehicleState {
    pub fn new(eta: PlanarPose, nu: BodyVelocity) -> Self {
        Self { eta, nu }
    }

    pub fn at_rest(eta: PlanarPose) -> Self {
        Self::new(eta, BodyVelocity::zero())
    }

    pub fn is_finite(&self) -> bool {
        self.eta.x.is_finite()
            && self.eta.y.is_finite()
            && self.eta.z.is_finite()
            && self.eta.psi.is_finite()
            && self.nu.is_finite()
    }
}

/// Inertia, Coriolis, damping, hydrostatic, and constant-disturbance parameters.
///
/// The Coriolis coefficients are held separately from the inertia diagonal:
/// the identified model uses rigid-body mass in `C` but rigid-body plus added
/// mass in `M`, so the two are independent inputs.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ModelParams {
    /// Diagonal of the total inertia matrix (kg, kg, kg, kg*m^2).
    pub m11: f64,
    pub m22: f64,
    pub m33: f64,
    pub m44: f64,
    /// Coriolis surge/sway coefficients (kg).
    pub c_m11: f64,
    pub c_m22: f64,
    /// Linear damping per axis (N*s/m; N*m*s/rad for yaw).
    pub d_lin: [f64; 4],
    /// Quadratic damping per axis (N*s^2/m^2); zero for the identified model.
    pub d_quad: [f64; 4],
    /// Hydrostatic resultant `B - W` in Newtons (z axis of `g`).
    pub buoyancy_minus_weight: f64,
    /// Body-frame constant disturbance wrench `tau_d` (N, N, N, N*m).
    pub tau_d: Vector4<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum ParamError {
    NonPositiveInertia,
    NegativeDamping,
    NonFinite,
}

impl fmt::Display for ParamError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ParamError::NonPositiveInertia => write!(f, "inertia diagonal must be positive"),
            ParamError::NegativeDamping => write!(f, "damping coefficients must be nonnegative"),
            ParamError::NonFinite => write!(f, "parameters contain non-finite values"),
        }
    }
}

impl ModelParams {
    /// Nominal BlueROV2-class parameter set used by the feedback controller:
    /// `M = diag(25.2, 25.2, 25.2, 0.402)`, Coriolis masses 12.5 kg,
    /// `D = diag(5.5, 7.0, 8.0, 1.0)`, neutral buoyancy, no disturbance.
    pub fn nominal() -> Self {
        Self {
            m11: 25.2,
            m22: 25.2,
            m33: 25.2,
            m44: 0.402,
            c_m11: 12.5,
            c_m22: 12.5,
            d_lin: [5.5, 7.0, 8.0, 1.0],
            d_quad: [0.0; 4],
            buoyancy_minus_weight: 0.0,
            tau_d: Vector4::zeros(),
        }
    }

    pub fn validate(&self) -> Result<(), ParamError> {
        let all = [
            self.m11,
            self.m22,
            self.m33,
            self.m44,
            self.c_m11,
            self.c_m22,
            self.buoyancy_minus_weight,
        ];
        if !all.iter().all(|v| v.is_finite())
            || !self.d_lin.iter().chain(self.d_quad.iter()).all(|v| v.is_finite())
            || !self.tau_d.iter().all(|v| v.is_finite())
        {
            return Err(ParamError::NonFinite);
        }
        if self.m11 <= 0.0 || self.m22 <= 0.0 || self.m33 <= 0.0 || self.m44 <= 0.0 {
            return Err(ParamError::NonPositiveInertia);
        }
        if self.d_lin.iter().chain(self.d_quad.iter()).any(|&d| d < 0.0) {
            return Err(ParamError::NegativeDamping);
        }
        Ok(())
    }

    /// Scales the inertia diagonal; used for plant-vs-nominal mismatch studies.
    pub fn with_mass_scale(mut self, scale: f64) -> Self {
        self.m11 *= scale;
        self.m22 *= scale;
        self.m33 *= scale;
        self.m44 *= scale;
        self
    }
}

/// Frame a wrench is expressed in.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum WrenchFrame {
    Body,
    World,
}

/// Force/torque command `[fx, fy, fz, mz]` with an explicit frame tag.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ControlWrench {
    pub fx: f64,
    pub fy: f64,
    pub fz: f64,
    pub mz: f64,
    pub frame: WrenchFrame,
}

impl ControlWrench {
    pub fn body(fx: f64, fy: f64, fz: f64, mz: f64) -> Self {
        Self {
            fx,
            fy,
            fz,
            mz,
            frame: WrenchFrame::Body,
        }
    }

    pub fn world(fx: f64, fy: f64, fz: f64, mz: f64) -> Self {
        Self {
            fx,
            fy,
            fz,
            mz,
            frame: WrenchFrame::World,
        }
    }

    pub fn zero_body() -> Self {
        Self::body(0.0, 0.0, 0.0, 0.0)
    }

    pub fn from_vector(v: &Vector4<f64>, frame: WrenchFrame) -> Self {
        Self {
            fx: v[0],
            fy: v[1],
            fz: v[2],
            mz: v[3],
            frame,
        }
    }

    pub fn to_vector(&self) -> Vector4<f64> {
        Vector4::new(self.fx, self.fy, self.fz, self.mz)
    }

    /// Expresses the wrench in the body frame given the vehicle yaw:
    /// `tau = J(psi)^T tau_world`.
    pub fn to_body(&self, psi: f64) -> ControlWrench {
        match self.frame {
            WrenchFrame::Body => *self,
            WrenchFrame::World => {
                let v = transform_j(psi).transpose() * self.to_vector();
                ControlWrench::from_vector(&v, WrenchFrame::Body)
            }
        }
    }

    pub fn is_finite(&self) -> bool {
        self.to_vector().iter().all(|v| v.is_finite())
    }
}

/// Symmetric per-component actuator bounds applied before integration.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SaturationLimits {
    /// Max magnitude per component (N, N, N, N*m).
    pub max: [f64; 4],
}

impl Default for SaturationLimits {
    /// BlueROV2-class bounds: +-40 N force, +-10 N*m yaw torque.
    fn default() -> Self {
        Self {
            max: [40.0, 40.0, 40.0, 10.0],
        }
    }
}

impl SaturationLimits {
    pub fn unlimited() -> Self {
        Self {
            max: [f64::INFINITY; 4],
        }
    }

    /// Clamps each component; the flag reports whether anything was clipped.
    pub fn clamp(&self, wrench: &ControlWrench) -> (ControlWrench, bool) {
        let v = wrench.to_vector();
        let mut out = v;
        let mut saturated = false;
        for i in 0..4 {
            let clipped = v[i].clamp(-self.max[i], self.max[i]);
            if clipped != v[i] {
                saturated = true;
            }
            out[i] = clipped;
        }
        (ControlWrench::from_vector(&out, wrench.frame), saturated)
    }
}

/// Total inertia matrix `M = diag(m11, m22, m33, m44)`.
pub fn mass_matrix(p: &ModelParams) -> Matrix4<f64> {
    Matrix4::from_diagonal(&Vector4::new(p.m11, p.m22, p.m33, p.m44))
}

/// Coriolis/centripetal matrix coupling surge/sway with yaw rate:
///
/// ```text
///        [ 0        0       0  -m22 v ]
/// C(nu) = [ 0        0       0   m11 u ]
///        [ 0        0       0   0     ]
///        [ m22 v  -m11 u    0   0     ]
/// ```
pub fn coriolis_matrix(p: &ModelParams, nu: &BodyVelocity) -> Matrix4<f64> {
    let mut c = Matrix4::zeros();
    c[(0, 3)] = -p.c_m22 * nu.v;
    c[(1, 3)] = p.c_m11 * nu.u;
    c[(3, 0)] = p.c_m22 * nu.v;
    c[(3, 1)] = -p.c_m11 * nu.u;
    c
}

/// Damping matrix `diag(d_l_i + d_n_i |nu_i|)`.
pub fn damping_matrix(p: &ModelParams, nu: &BodyVelocity) -> Matrix4<f64> {
    let speeds = [nu.u, nu.v, nu.w, nu.r];
    let mut d = Matrix4::zeros();
    for i in 0..4 {
        d[(i, i)] = p.d_lin[i] + p.d_quad[i] * speeds[i].abs();
    }
    d
}

/// Hydrostatic vector `g = [0, 0, B - W, 0]`.
pub fn hydrostatic_vector(p: &ModelParams) -> Vector4<f64> {
    Vector4::new(0.0, 0.0, p.buoyancy_minus_weight, 0.0)
}

/// Body-to-world velocity map `J(psi)`: planar rotation in x/y, identity in z/psi.
pub fn transform_j(psi: f64) -> Matrix4<f64> {
    let (s, c) = (libm::sin(psi), libm::cos(psi));
    Matrix4::new(
        c, -s, 0.0, 0.0, //
        s, c, 0.0, 0.0, //
        0.0, 0.0, 1.0, 0.0, //
        0.0, 0.0, 0.0, 1.0,
    )
}

/// Time derivative `J_dot = dJ/dpsi * r`.
pub fn transform_j_dot(psi: f64, r: f64) -> Matrix4<f64> {
    let (s, c) = (libm::sin(psi), libm::cos(psi));
    let mut m = Matrix4::zeros();
    m[(0, 0)] = -s * r;
    m[(0, 1)] = -c * r;
    m[(1, 0)] = c * r;
    m[(1, 1)] = -s * r;
    m
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum DynamicsError {
    NonFinite,
    /// `body_accel` needs the wrench already expressed in the body frame.
    WrongFrame,
}

impl fmt::Display for DynamicsError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            DynamicsError::NonFinite => write!(f, "non-finite state or wrench"),
            DynamicsError::WrongFrame => write!(f, "wrench must be in the body frame"),
        }
    }
}

/// Body-frame acceleration `nu_dot = M^-1 (tau - C nu - D nu - g - tau_d)`.
pub fn body_accel(
    state: &VehicleState,
    p: &ModelParams,
    tau_body: &ControlWrench,
) -> Result<Vector4<f64>, DynamicsError> {
    if tau_body.frame != WrenchFrame::Body {
        return Err(DynamicsError::WrongFrame);
    }
    if !state.is_finite() || !tau_body.is_finite() {
        return Err(DynamicsError::NonFinite);
    }
    Ok(body_accel_unchecked(state, p, &tau_body.to_vector()))
}

/// Hot-path version without the validity checks; `M` is diagonal so the solve
/// is a componentwise division.
fn body_accel_unchecked(state: &VehicleState, p: &ModelParams, tau: &Vector4<f64>) -> Vector4<f64> {
    let nu = state.nu.to_vector();
    let rhs = tau
        - coriolis_matrix(p, &state.nu) * nu
        - damping_matrix(p, &state.nu) * nu
        - hydrostatic_vector(p)
        - p.tau_d;
    Vector4::new(rhs[0] / p.m11, rhs[1] / p.m22, rhs[2] / p.m33, rhs[3] / p.m44)
}

/// The five world-frame quantities of the conjugated model
/// `M_eta eta_ddot + C_eta eta_dot + D_eta eta_dot + g_eta + tau_e = tau_eta`.
#[derive(Debug, Clone, Copy)]
pub struct WorldTerms {
    pub m_eta: Matrix4<f64>,
    pub c_eta: Matrix4<f64>,
    pub d_eta: Matrix4<f64>,
    pub g_eta: Vector4<f64>,
    pub tau_e: Vector4<f64>,
}

impl WorldTerms {
    /// `M_eta^-1`, computed from the diagonal body inertia: `J M^-1 J^T`.
    pub fn m_eta_inv(&self, p: &ModelParams, psi: f64) -> Matrix4<f64> {
        let j = transform_j(psi);
        let m_inv = Matrix4::from_diagonal(&Vector4::new(
            1.0 / p.m11,
            1.0 / p.m22,
            1.0 / p.m33,
            1.0 / p.m44,
        ));
        j * m_inv * j.transpose()
    }
}

/// Conjugates the body model into the world frame. `J` is orthogonal, so
/// `J^-1 = J^T` and `J^-T = J`:
///
/// ```text
/// M_eta = J M J^T
/// C_eta = J (C(nu) - M J^T J_dot) J^T
/// D_eta = J D(nu) J^T
/// g_eta = J g,  tau_e = J tau_d
/// ```
pub fn world_dynamics_terms(state: &VehicleState, p: &ModelParams) -> WorldTerms {
    let psi = state.eta.psi;
    let j = transform_j(psi);
    let j_t = j.transpose();
    let j_dot = transform_j_dot(psi, state.nu.r);
    let m = mass_matrix(p);
    WorldTerms {
        m_eta: j * m * j_t,
        c_eta: j * (coriolis_matrix(p, &state.nu) - m * j_t * j_dot) * j_t,
        d_eta: j * damping_matrix(p, &state.nu) * j_t,
        g_eta: j * hydrostatic_vector(p),
        tau_e: j * p.tau_d,
    }
}

/// Largest accepted integration step (seconds).
pub const MAX_STEP_DT: f64 = 0.05;

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum StepError {
    /// `dt` outside `(0, MAX_STEP_DT]`.
    InvalidDt { dt: f64 },
    /// Integration produced a non-finite state; carries the last valid one.
    Diverged { last_valid: VehicleState },
    Dynamics(DynamicsError),
}

impl fmt::Display for StepError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            StepError::InvalidDt { dt } => write!(f, "step size {dt} outside (0, {MAX_STEP_DT}]"),
            StepError::Diverged { .. } => write!(f, "integration diverged to non-finite state"),
            StepError::Dynamics(e) => write!(f, "{e}"),
        }
    }
}

/// Advances the coupled system one classical RK4 step under a zero-order-hold
/// wrench, then wraps `psi`.
pub fn step(
    state: &VehicleState,
    p: &ModelParams,
    tau: &ControlWrench,
    dt: f64,
) -> Result<VehicleState, StepError> {
    if !(dt > 0.0 && dt <= MAX_STEP_DT) {
        return Err(StepError::InvalidDt { dt });
    }
    let tau_body = tau.to_body(state.eta.psi);
    if tau_body.frame != WrenchFrame::Body {
        return Err(StepError::Dynamics(DynamicsError::WrongFrame));
    }
    if !state.is_finite() || !tau_body.is_finite() {
        return Err(StepError::Diverged { last_valid: *state });
    }
    let tau_vec = tau_body.to_vector();

    let deriv = |eta: &Vector4<f64>, nu: &Vector4<f64>| -> (Vector4<f64>, Vector4<f64>) {
        let s = VehicleState {
            // psi deliberately left unwrapped mid-stage; J only sees it through sin/cos
            eta: PlanarPose {
                x: eta[0],
                y: eta[1],
                z: eta[2],
                psi: eta[3],
            },
            nu: BodyVelocity::from_vector(nu),
        };
        let eta_dot = transform_j(eta[3]) * nu;
        let nu_dot = body_accel_unchecked(&s, p, &tau_vec);
        (eta_dot, nu_dot)
    };

    let eta0 = Vector4::new(state.eta.x, state.eta.y, state.eta.z, state.eta.psi);
    let nu0 = state.nu.to_vector();

    let (k1e, k1n) = deriv(&eta0, &nu0);
    let (k2e, k2n) = deriv(&(eta0 + k1e * (dt / 2.0)), &(nu0 + k1n * (dt / 2.0)));
    let (k3e, k3n) = deriv(&(eta0 + k2e * (dt / 2.0)), &(nu0 + k2n * (dt / 2.0)));
    let (k4e, k4n) = deriv(&(eta0 + k3e * dt), &(nu0 + k3n * dt));

    let eta1 = eta0 + (k1e + k2e * 2.0 + k3e * 2.0 + k4e) * (dt / 6.0);
    let nu1 = nu0 + (k1n + k2n * 2.0 + k3n * 2.0 + k4n) * (dt / 6.0);

    let next = VehicleState {
        eta: PlanarPose::new(eta1[0], eta1[1], eta1[2], wrap_angle(eta1[3])),
        nu: BodyVelocity::from_vector(&nu1),
    };
    if !next.is_finite() {
        return Err(StepError::Diverged { last_valid: *state });
    }
    Ok(next)
}
