//! Tracking-error formulation and the two trajectory-tracking controllers.
//!
//! The tracking error `eps = eta - eta_d` stacks with its derivative into
//! `e = [eps, eps_dot]`, whose unforced dynamics are
//!
//! ```text
//! e_dot = A e + B f,   A = [[0, I], [0, N]],   B = [0, I]^T,
//! N = -M_eta^-1 [C(nu,eta) + D(nu,eta)]
//! ```
//!
//! The nominal feedback controller ([`nfc`](self::nfc_wrench)) cancels the
//! model terms so the closed loop becomes the linear system `e_dot = A1 e`;
//! the PID baseline drives each axis independently in the body frame.

mod nfc;
mod pid;

pub use nfc::{
    closed_loop_matrix, nfc_wrench, verify_stability, NfcController, NfcError, NfcGains,
    StabilityReport,
};
pub use pid::{pid_wrench, PidAxisGains, PidController, PidGains, PidMemory};

use nalgebra::{Matrix4, SMatrix, Vector4};

use crate::dynamics::transform_j;
use crate::dynamics::{world_dynamics_terms, ControlWrench, ModelParams, VehicleState};
use crate::transform::{wrap_angle, PlanarPose};

/// World-frame tracking error and its time derivative. The yaw component is
/// wrapped, so `eps[3]` is always the shortest angular error.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TrackingError {
    pub eps: Vector4<f64>,
    pub eps_dot: Vector4<f64>,
}

impl TrackingError {
    /// Stacked error state `e = [eps, eps_dot]`.
    pub fn stacked(&self) -> SMatrix<f64, 8, 1> {
        let mut e = SMatrix::<f64, 8, 1>::zeros();
        e.fixed_rows_mut::<4>(0).copy_from(&self.eps);
        e.fixed_rows_mut::<4>(4).copy_from(&self.eps_dot);
        e
    }
}

/// Desired pose, world-frame velocity, and world-frame acceleration.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ReferencePoint {
    pub eta_d: PlanarPose,
    pub eta_d_dot: Vector4<f64>,
    pub eta_d_ddot: Vector4<f64>,
}

impl ReferencePoint {
    pub fn hold(eta_d: PlanarPose) -> Self {
        Self {
            eta_d,
            eta_d_dot: Vector4::zeros(),
            eta_d_ddot: Vector4::zeros(),
        }
    }
}

/// `eps = eta - eta_d` (yaw wrapped), `eps_dot = J(psi) nu - eta_d_dot`.
pub fn tracking_error(state: &VehicleState, reference: &ReferencePoint) -> TrackingError {
    let eta = state.eta.to_vector();
    let eta_d = reference.eta_d.to_vector();
    let mut eps = eta - eta_d;
    eps[3] = wrap_angle(eps[3]);
    let eps_dot = transform_j(state.eta.psi) * state.nu.to_vector() - reference.eta_d_dot;
    TrackingError { eps, eps_dot }
}

/// The matrices of the error dynamics `e_dot = A e + B f`.
#[derive(Debug, Clone, Copy)]
pub struct ErrorSystem {
    pub a: SMatrix<f64, 8, 8>,
    pub b: SMatrix<f64, 8, 4>,
    pub n: Matrix4<f64>,
}

/// Builds `A`, `B`, and `N = -M_eta^-1 (C_eta + D_eta)` at the given state.
pub fn error_system_matrices(state: &VehicleState, p: &ModelParams) -> ErrorSystem {
    let terms = world_dynamics_terms(state, p);
    let n = -terms.m_eta_inv(p, state.eta.psi) * (terms.c_eta + terms.d_eta);

    let mut a = SMatrix::<f64, 8, 8>::zeros();
    a.fixed_view_mut::<4, 4>(0, 4)
        .copy_from(&Matrix4::identity());
    a.fixed_view_mut::<4, 4>(4, 4).copy_from(&n);

    let mut b = SMatrix::<f64, 8, 4>::zeros();
    b.fixed_view_mut::<4, 4>(4, 0)
        .copy_from(&Matrix4::identity());

    ErrorSystem { a, b, n }
}

/// Per-tick controller output for the episode trace.
#[derive(Debug, Clone, Copy)]
pub struct ControlTelemetry {
    pub error: TrackingError,
    /// Saturated wrench, expressed in the body frame ready for actuation.
    pub wrench: ControlWrench,
    pub saturated: bool,
}

/// Either tracking controller behind one step interface; each instance is
/// owned by a single simulation loop.
#[derive(Debug, Clone)]
pub enum Controller {
    Nfc(NfcController),
    Pid(PidController),
}

impl Controller {
    pub fn step(
        &mut self,
        estimate: &VehicleState,
        reference: &ReferencePoint,
    ) -> ControlTelemetry {
        match self {
            Controller::Nfc(c) => c.step(estimate, reference),
            Controller::Pid(c) => c.step(estimate, reference),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dynamics::{step, BodyVelocity, WrenchFrame};
    use approx::assert_abs_diff_eq;
    use core::f64::consts::PI;
    use std::vec::Vec;

    #[test]
    fn tracking_error_zero_at_reference() {
        let reference = ReferencePoint {
            eta_d: PlanarPose::new(1.0, 2.0, 0.5, 0.3),
            eta_d_dot: Vector4::new(0.1, 0.0, 0.0, 0.0),
            eta_d_ddot: Vector4::zeros(),
        };
        // Body velocity chosen so J(psi) nu equals the reference velocity.
        let psi = 0.3;
        let nu = transform_j(psi).transpose() * reference.eta_d_dot;
        let state = VehicleState::new(
            PlanarPose::new(1.0, 2.0, 0.5, psi),
            BodyVelocity::from_vector(&nu),
        );
        let e = tracking_error(&state, &reference);
        assert!(e.eps.abs().max() < 1e-15);
        assert!(e.eps_dot.abs().max() < 1e-15);
    }

    #[test]
    fn tracking_error_yaw_wrap() {
        let state = |psi: f64| VehicleState::at_rest(PlanarPose::new(0.0, 0.0, 0.0, psi));
        let reference = |psi_d: f64| ReferencePoint::hold(PlanarPose::new(0.0, 0.0, 0.0, psi_d));

        let e = tracking_error(&state(0.1), &reference(-0.1));
        assert_abs_diff_eq!(e.eps[3], 0.2, epsilon = 1e-15);

        // Across the pi boundary the shortest error wins: -0.1, not 2*pi - 0.1.
        let e = tracking_error(&state(PI - 0.05), &reference(-PI + 0.05));
        assert_abs_diff_eq!(e.eps[3], -0.1, epsilon = 1e-12);
    }

    #[test]
    fn error_system_diagonal_at_origin() {
        let p = ModelParams::nominal();
        let s = VehicleState::at_rest(PlanarPose::origin());
        let sys = error_system_matrices(&s, &p);
        let expected = Vector4::new(-5.5 / 25.2, -7.0 / 25.2, -8.0 / 25.2, -1.0 / 0.402);
        assert!((sys.n - Matrix4::from_diagonal(&expected)).abs().max() < 1e-14);
    }

    #[test]
    fn error_system_block_structure() {
        let p = ModelParams::nominal();
        let s = VehicleState::new(
            PlanarPose::new(0.4, -0.2, 0.1, 1.1),
            BodyVelocity::new(0.2, -0.1, 0.05, 0.3),
        );
        let sys = error_system_matrices(&s, &p);
        assert_eq!(sys.a.fixed_view::<4, 4>(0, 0).abs().max(), 0.0);
        assert_eq!(
            sys.a.fixed_view::<4, 4>(0, 4).clone_owned(),
            Matrix4::identity()
        );
        assert_eq!(sys.a.fixed_view::<4, 4>(4, 0).abs().max(), 0.0);
        assert_eq!(sys.b.fixed_view::<4, 4>(0, 0).abs().max(), 0.0);
        assert_eq!(
            sys.b.fixed_view::<4, 4>(4, 0).clone_owned(),
            Matrix4::identity()
        );
    }

    #[test]
    fn unforced_error_dynamics_match_finite_differences() {
        // With the feedback gains zeroed the control law reduces to pure model
        // cancellation and the error obeys e_dot = A e. Differentiate the
        // simulated eps_dot numerically and compare against N eps_dot.
        let p = ModelParams::nominal();
        let reference = ReferencePoint::hold(PlanarPose::new(0.5, 0.5, 0.3, 0.2));
        let gains = NfcGains {
            k1: Vector4::zeros(),
            k2: Vector4::zeros(),
        };
        let dt = 1e-4;
        let mut s = VehicleState::new(
            PlanarPose::new(0.7, 0.3, 0.2, 0.5),
            BodyVelocity::new(0.1, -0.05, 0.02, 0.1),
        );

        let mut history: Vec<(VehicleState, Vector4<f64>)> = Vec::new();
        for _ in 0..400 {
            let e = tracking_error(&s, &reference);
            history.push((s, e.eps_dot));
            let tau = nfc_wrench(&s, &reference, &p, &gains);
            let tau_body = tau.to_body(s.eta.psi);
            assert_eq!(tau_body.frame, WrenchFrame::Body);
            s = step(&s, &p, &tau_body, dt).unwrap();
        }

        for k in (10..390).step_by(25) {
            let (state_k, _) = history[k];
            let sys = error_system_matrices(&state_k, &p);
            let fd = (history[k + 1].1 - history[k - 1].1) / (2.0 * dt);
            let model = sys.n * history[k].1;
            assert!(
                (fd - model).abs().max() < 1e-6,
                "finite-difference acceleration deviates at step {k}"
            );
        }
    }
}
