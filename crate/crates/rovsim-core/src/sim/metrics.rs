//! Tracking metrics: per-axis mean absolute error between the flown and
//! reference pose series, with the yaw difference wrapped before taking the
//! absolute value.

use core::fmt;

use nalgebra::Vector4;

use crate::transform::{wrap_angle, PlanarPose};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MetricsError {
    LengthMismatch { actual: usize, reference: usize },
    Empty,
}

impl fmt::Display for MetricsError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            MetricsError::LengthMismatch { actual, reference } => {
                write!(f, "series lengths differ: {actual} vs {reference}")
            }
            MetricsError::Empty => write!(f, "series must contain at least one sample"),
        }
    }
}

/// Componentwise mean absolute error `[x, y, z, psi]`. The y axis is the
/// feedforward-speed direction and is reported separately by callers, but it
/// is computed the same way.
pub fn mae(actual: &[PlanarPose], reference: &[PlanarPose]) -> Result<Vector4<f64>, MetricsError> {
    if actual.len() != reference.len() {
        return Err(MetricsError::LengthMismatch {
            actual: actual.len(),
            reference: reference.len(),
        });
    }
    if actual.is_empty() {
        return Err(MetricsError::Empty);
    }
    let mut acc = Vector4::zeros();
    for (a, r) in actual.iter().zip(reference.iter()) {
        acc[0] += (a.x - r.x).abs();
        acc[1] += (a.y - r.y).abs();
        acc[2] += (a.z - r.z).abs();
        acc[3] += wrap_angle(a.psi - r.psi).abs();
    }
    Ok(acc / actual.len() as f64)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use core::f64::consts::PI;
    use std::vec;

    #[test]
    fn identical_series_zero() {
        let s = vec![PlanarPose::new(1.0, 2.0, 3.0, 0.4); 10];
        assert_eq!(mae(&s, &s).unwrap(), Vector4::zeros());
    }

    #[test]
    fn simple_arithmetic() {
        let actual = vec![
            PlanarPose::new(0.0, 0.0, 0.0, 0.0),
            PlanarPose::new(1.0, 0.0, 0.0, 0.0),
            PlanarPose::new(2.0, 0.0, 0.0, 0.0),
        ];
        let reference = vec![PlanarPose::origin(); 3];
        let m = mae(&actual, &reference).unwrap();
        assert_abs_diff_eq!(m[0], 1.0, epsilon = 1e-15);
        assert_eq!(m[1], 0.0);
    }

    #[test]
    fn yaw_wraps_before_abs() {
        let actual = vec![PlanarPose::new(0.0, 0.0, 0.0, PI - 0.05)];
        let reference = vec![PlanarPose::new(0.0, 0.0, 0.0, -PI + 0.05)];
        let m = mae(&actual, &reference).unwrap();
        assert_abs_diff_eq!(m[3], 0.1, epsilon = 1e-12);
    }

    #[test]
    fn errors() {
        let a = vec![PlanarPose::origin()];
        assert_eq!(
            mae(&a, &[]),
            Err(MetricsError::LengthMismatch {
                actual: 1,
                reference: 0
            })
        );
        assert_eq!(mae(&[], &[]), Err(MetricsError::Empty));
    }
}
