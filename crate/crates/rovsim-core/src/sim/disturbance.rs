//! Body-frame disturbance wrench injected into the plant, modeling water
//! currents: a constant bias plus one sinusoidal component, gated by an onset
//! time.

use nalgebra::Vector4;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DisturbanceSpec {
    /// Constant body-frame wrench (N, N, N, N*m).
    pub constant: Vector4<f64>,
    pub sin_amplitude: Vector4<f64>,
    pub sin_frequency_hz: f64,
    pub sin_phase: f64,
    /// Seconds before any disturbance is applied.
    pub onset: f64,
}

impl DisturbanceSpec {
    pub fn none() -> Self {
        Self {
            constant: Vector4::zeros(),
            sin_amplitude: Vector4::zeros(),
            sin_frequency_hz: 0.0,
            sin_phase: 0.0,
            onset: 0.0,
        }
    }

    pub fn constant(wrench: Vector4<f64>) -> Self {
        Self {
            constant: wrench,
            ..Self::none()
        }
    }

    pub fn is_valid(&self) -> bool {
        self.sin_frequency_hz >= 0.0
            && self.onset >= 0.0
            && self.constant.iter().all(|v| v.is_finite())
            && self.sin_amplitude.iter().all(|v| v.is_finite())
            && self.sin_phase.is_finite()
    }

    pub fn eval(&self, t: f64) -> Vector4<f64> {
        if t < self.onset {
            return Vector4::zeros();
        }
        let phase = 2.0 * core::f64::consts::PI * self.sin_frequency_hz * t + self.sin_phase;
        self.constant + self.sin_amplitude * libm::sin(phase)
    }
}
