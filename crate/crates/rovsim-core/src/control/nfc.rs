//! Nominal feedback controller: cancels the modeled dynamics and imposes
//! stable linear error dynamics,
//!
//! ```text
//! tau_eta = M_eta (K e + eta_d_ddot) + [C_eta + D_eta] eta_d_dot + g_eta + tau_e
//! ```
//!
//! with `K = [K1, K2]` acting on the stacked error `e = [eps, eps_dot]`. The
//! diagonal gain entries are negative (they play the role of stiffness and
//! damping), which makes the closed loop
//!
//! ```text
//! A1 = A + B K = [[0, I], [K1, N + K2]]
//! ```
//!
//! Hurwitz; `verify_stability` checks that numerically at an operating point.

use core::fmt;

use nalgebra::{Complex, Matrix4, SMatrix, Vector4};

use super::{error_system_matrices, tracking_error, ControlTelemetry, ReferencePoint};
use crate::dynamics::{
    world_dynamics_terms, BodyVelocity, ControlWrench, ModelParams, SaturationLimits,
    VehicleState, WrenchFrame,
};
use crate::transform::PlanarPose;

/// Diagonal entries of the two feedback gain blocks. Stability requires
/// negative entries; see [`verify_stability`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NfcGains {
    pub k1: Vector4<f64>,
    pub k2: Vector4<f64>,
}

impl Default for NfcGains {
    /// Gains tuned for the nominal BlueROV2-class model.
    fn default() -> Self {
        Self {
            k1: Vector4::new(-300.0, -350.0, -1500.0, -250.0),
            k2: Vector4::new(-100.0, -70.0, -300.0, -60.0),
        }
    }
}

/// Closed-loop matrix `A1 = A + B K` for the given `N` block.
pub fn closed_loop_matrix(gains: &NfcGains, n: &Matrix4<f64>) -> SMatrix<f64, 8, 8> {
    let mut a1 = SMatrix::<f64, 8, 8>::zeros();
    a1.fixed_view_mut::<4, 4>(0, 4)
        .copy_from(&Matrix4::identity());
    a1.fixed_view_mut::<4, 4>(4, 0)
        .copy_from(&Matrix4::from_diagonal(&gains.k1));
    a1.fixed_view_mut::<4, 4>(4, 4)
        .copy_from(&(n + Matrix4::from_diagonal(&gains.k2)));
    a1
}

/// Eigenvalues of the closed loop at one operating point.
#[derive(Debug, Clone, Copy)]
pub struct StabilityReport {
    /// True iff every eigenvalue has strictly negative real part.
    pub stable: bool,
    pub eigenvalues: [Complex<f64>; 8],
}

/// Computes the eight closed-loop eigenvalues at the operating point
/// `(nu, psi = 0)` and reports asymptotic stability.
pub fn verify_stability(gains: &NfcGains, p: &ModelParams, nu: &BodyVelocity) -> StabilityReport {
    let state = VehicleState::new(PlanarPose::origin(), *nu);
    let sys = error_system_matrices(&state, p);
    let a1 = closed_loop_matrix(gains, &sys.n);
    let ev = a1.complex_eigenvalues();
    let mut eigenvalues = [Complex::new(0.0, 0.0); 8];
    for (slot, value) in eigenvalues.iter_mut().zip(ev.iter()) {
        *slot = *value;
    }
    StabilityReport {
        stable: eigenvalues.iter().all(|c| c.re < 0.0),
        eigenvalues,
    }
}

/// The control law itself; returns the world-frame wrench `tau_eta`.
///
/// `p` is the controller's nominal model, which may differ from the plant;
/// its `tau_d` field acts as the constant disturbance feedforward `tau_e`.
pub fn nfc_wrench(
    state: &VehicleState,
    reference: &ReferencePoint,
    p: &ModelParams,
    gains: &NfcGains,
) -> ControlWrench {
    let e = tracking_error(state, reference);
    let terms = world_dynamics_terms(state, p);
    let ke = gains.k1.component_mul(&e.eps) + gains.k2.component_mul(&e.eps_dot);
    let tau_eta = terms.m_eta * (ke + reference.eta_d_ddot)
        + (terms.c_eta + terms.d_eta) * reference.eta_d_dot
        + terms.g_eta
        + terms.tau_e;
    ControlWrench::from_vector(&tau_eta, WrenchFrame::World)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum NfcError {
    /// The gains fail the closed-loop eigenvalue check at hover.
    UnstableGains,
}

impl fmt::Display for NfcError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            NfcError::UnstableGains => write!(f, "gains do not stabilize the error dynamics"),
        }
    }
}

/// Stateful wrapper used by the episode loop: applies the law on the state
/// estimate, converts to the body frame, and saturates.
#[derive(Debug, Clone)]
pub struct NfcController {
    gains: NfcGains,
    nominal: ModelParams,
    limits: SaturationLimits,
}

impl NfcController {
    /// Rejects gains that fail `verify_stability` at `nu = 0`.
    pub fn new(
        gains: NfcGains,
        nominal: ModelParams,
        limits: SaturationLimits,
    ) -> Result<Self, NfcError> {
        if !verify_stability(&gains, &nominal, &BodyVelocity::zero()).stable {
            return Err(NfcError::UnstableGains);
        }
        Ok(Self {
            gains,
            nominal,
            limits,
        })
    }

    pub fn step(&self, estimate: &VehicleState, reference: &ReferencePoint) -> ControlTelemetry {
        let error = tracking_error(estimate, reference);
        let tau_eta = nfc_wrench(estimate, reference, &self.nominal, &self.gains);
        let tau_body = tau_eta.to_body(estimate.eta.psi);
        let (wrench, saturated) = self.limits.clamp(&tau_body);
        ControlTelemetry {
            error,
            wrench,
            saturated,
        }
    }
}
