//! Four-axis PID baseline.
//!
//! Axis-to-wrench mapping follows the vehicle's inspection attitude, where it
//! translates along its body y axis while facing the net:
//!
//! * lateral  (body x, stand-off distance) -> fx
//! * throttle (body y, the constant-speed axis) -> fy, plus an open-loop
//!   velocity feedforward from the nominal sway damping
//! * depth    (z) -> fz
//! * yaw      -> mz
//!
//! The derivative term low-pass filters a backward difference (time constant
//! `5 dt`); the integrator is conditionally frozen while the output saturates.

use nalgebra::Vector4;

use super::{tracking_error, ControlTelemetry, ReferencePoint};
use crate::dynamics::{ControlWrench, SaturationLimits, VehicleState, WrenchFrame};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PidAxisGains {
    pub kp: f64,
    pub ki: f64,
    pub kd: f64,
}

impl PidAxisGains {
    pub fn new(kp: f64, ki: f64, kd: f64) -> Self {
        Self { kp, ki, kd }
    }
}

/// Gains for the four control channels.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PidGains {
    pub lateral: PidAxisGains,
    pub throttle: PidAxisGains,
    pub depth: PidAxisGains,
    pub yaw: PidAxisGains,
}

impl Default for PidGains {
    /// Hand-tuned values for the BlueROV2-class vehicle.
    fn default() -> Self {
        Self {
            lateral: PidAxisGains::new(400.0, 0.0, 50.0),
            throttle: PidAxisGains::new(350.0, 0.0, 15.0),
            depth: PidAxisGains::new(500.0, 0.0, 50.0),
            yaw: PidAxisGains::new(150.0, 0.0, 15.0),
        }
    }
}

impl PidGains {
    fn as_array(&self) -> [PidAxisGains; 4] {
        [self.lateral, self.throttle, self.depth, self.yaw]
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Default)]
struct AxisMemory {
    integral: f64,
    prev_err: f64,
    deriv_filtered: f64,
    primed: bool,
}

/// Integrator and derivative-filter state, one slot per channel.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct PidMemory {
    axes: [AxisMemory; 4],
}

impl PidMemory {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn integral_state(&self) -> [f64; 4] {
        [
            self.axes[0].integral,
            self.axes[1].integral,
            self.axes[2].integral,
            self.axes[3].integral,
        ]
    }
}

/// One PID update at period `dt`.
///
/// `sway_damping` is `[d_l2, d_n2]` of the nominal model, used for the
/// open-loop feedforward that sustains the commanded body-y speed. Returns the
/// saturated body-frame wrench and whether any channel clipped.
pub fn pid_wrench(
    state: &VehicleState,
    reference: &ReferencePoint,
    gains: &PidGains,
    sway_damping: [f64; 2],
    limits: &SaturationLimits,
    dt: f64,
    memory: &mut PidMemory,
) -> (ControlWrench, bool) {
    debug_assert!(dt > 0.0);
    let world_err = tracking_error(state, reference);

    // Rotate the horizontal position error into the body frame.
    let (s, c) = (libm::sin(state.eta.psi), libm::cos(state.eta.psi));
    let e_lateral = c * world_err.eps[0] + s * world_err.eps[1];
    let e_throttle = -s * world_err.eps[0] + c * world_err.eps[1];
    let errors = [e_lateral, e_throttle, world_err.eps[2], world_err.eps[3]];

    // Feedforward force that sustains the commanded body-y velocity.
    let v_des = -s * reference.eta_d_dot[0] + c * reference.eta_d_dot[1];
    let feedforward = sway_damping[0] * v_des + sway_damping[1] * v_des.abs() * v_des;

    let gains = gains.as_array();
    let mut raw = Vector4::zeros();
    for i in 0..4 {
        let axis = &mut memory.axes[i];
        let ctrl_err = -errors[i];
        let raw_deriv = if axis.primed {
            (ctrl_err - axis.prev_err) / dt
        } else {
            axis.primed = true;
            0.0
        };
        // First-order low-pass, time constant 5 dt.
        let alpha = dt / (5.0 * dt + dt);
        axis.deriv_filtered += alpha * (raw_deriv - axis.deriv_filtered);
        axis.prev_err = ctrl_err;

        raw[i] = gains[i].kp * ctrl_err
            + gains[i].ki * axis.integral
            + gains[i].kd * axis.deriv_filtered;
    }
    raw[1] += feedforward;

    let (clamped, saturated) =
        limits.clamp(&ControlWrench::from_vector(&raw, WrenchFrame::Body));

    // Conditional integration: freeze any channel whose output is clipped.
    // Channels with ki = 0 carry no integral state at all.
    let clamped_vec = clamped.to_vector();
    for i in 0..4 {
        if gains[i].ki != 0.0 && clamped_vec[i] == raw[i] {
            memory.axes[i].integral += -errors[i] * dt;
        }
    }

    (clamped, saturated)
}

/// Stateful wrapper used by the episode loop.
#[derive(Debug, Clone)]
pub struct PidController {
    gains: PidGains,
    limits: SaturationLimits,
    sway_damping: [f64; 2],
    dt: f64,
    memory: PidMemory,
}

impl PidController {
    pub fn new(
        gains: PidGains,
        sway_damping: [f64; 2],
        limits: SaturationLimits,
        dt: f64,
    ) -> Self {
        Self {
            gains,
            limits,
            sway_damping,
            dt,
            memory: PidMemory::new(),
        }
    }

    pub fn step(&mut self, estimate: &VehicleState, reference: &ReferencePoint) -> ControlTelemetry {
        let error = tracking_error(estimate, reference);
        let (wrench, saturated) = pid_wrench(
            estimate,
            reference,
            &self.gains,
            self.sway_damping,
            &self.limits,
            self.dt,
            &mut self.memory,
        );
        ControlTelemetry {
            error,
            wrench,
            saturated,
        }
    }
}
