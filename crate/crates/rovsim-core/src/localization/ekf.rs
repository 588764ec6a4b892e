//! Extended Kalman filter over the 8-state vector `[eta, nu]`.
//!
//! Prediction integrates the body-frame IMU acceleration through the
//! kinematics `eta_dot = J(psi) nu`; updates fuse absolute 4-DoF pose
//! measurements produced by the tag chain. The covariance is propagated in
//! Joseph form and re-symmetrized, and updates are gated on the Mahalanobis
//! distance of the innovation.

use nalgebra::{Matrix4, SMatrix, Vector4};

use crate::dynamics::{transform_j, transform_j_dot, BodyVelocity};
use crate::transform::{wrap_angle, PlanarPose};

/// Chi-squared gate for a 4-DoF innovation at the 0.99 quantile.
pub const MAHALANOBIS_GATE_SQ: f64 = 13.28;

type Matrix8 = SMatrix<f64, 8, 8>;
type Matrix8x4 = SMatrix<f64, 8, 4>;

/// Filter state: pose estimate, velocity estimate, and their joint covariance.
#[derive(Debug, Clone, Copy)]
pub struct FusedEstimate {
    pub eta_hat: PlanarPose,
    pub nu_hat: BodyVelocity,
    pub covariance: Matrix8,
}

impl FusedEstimate {
    pub fn new(eta_hat: PlanarPose, nu_hat: BodyVelocity, covariance: Matrix8) -> Self {
        Self {
            eta_hat,
            nu_hat,
            covariance,
        }
    }

    pub fn from_diagonal(eta_hat: PlanarPose, nu_hat: BodyVelocity, diag: &[f64; 8]) -> Self {
        let mut covariance = Matrix8::zeros();
        for i in 0..8 {
            covariance[(i, i)] = diag[i];
        }
        Self::new(eta_hat, nu_hat, covariance)
    }

    /// Covariance health check: symmetry residual and smallest eigenvalue.
    pub fn covariance_health(&self) -> (f64, f64) {
        let asym = (self.covariance - self.covariance.transpose()).abs().max();
        let min_eig = self
            .covariance
            .symmetric_eigenvalues()
            .iter()
            .fold(f64::INFINITY, |a, &b| a.min(b));
        (asym, min_eig)
    }
}

/// Continuous-time process noise PSD; the per-step contribution is `diag * dt`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ProcessNoise {
    pub pose: [f64; 4],
    pub velocity: [f64; 4],
}

impl ProcessNoise {
    fn step_matrix(&self, dt: f64) -> Matrix8 {
        let mut q = Matrix8::zeros();
        for i in 0..4 {
            q[(i, i)] = self.pose[i] * dt;
            q[(i + 4, i + 4)] = self.velocity[i] * dt;
        }
        q
    }
}

/// Measurement noise variances for the 4 pose components.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MeasurementNoise {
    pub variance: [f64; 4],
}

impl MeasurementNoise {
    fn matrix(&self) -> Matrix4<f64> {
        Matrix4::from_diagonal(&Vector4::new(
            self.variance[0],
            self.variance[1],
            self.variance[2],
            self.variance[3],
        ))
    }
}

fn symmetrize(m: &Matrix8) -> Matrix8 {
    (m + m.transpose()) * 0.5
}

/// Propagates the estimate with the body-frame IMU acceleration `a`:
///
/// ```text
/// eta  += J(psi) (nu dt + a dt^2 / 2)
/// nu   += a dt
/// P    <- F P F^T + Q dt
/// ```
pub fn ekf_predict(
    est: &FusedEstimate,
    imu_accel: &Vector4<f64>,
    dt: f64,
    q: &ProcessNoise,
) -> FusedEstimate {
    debug_assert!(dt > 0.0);
    let psi = est.eta_hat.psi;
    let j = transform_j(psi);
    let nu = est.nu_hat.to_vector();

    let delta_body = nu * dt + imu_accel * (0.5 * dt * dt);
    let eta_next = est.eta_hat.to_vector() + j * delta_body;
    let nu_next = nu + imu_accel * dt;

    // Jacobian of the propagation.
    let mut f = Matrix8::identity();
    // d(eta_next)/d(psi): rotation derivative applied to the body displacement.
    let dj_dpsi = transform_j_dot(psi, 1.0);
    let dpos_dpsi = dj_dpsi * delta_body;
    for row in 0..4 {
        f[(row, 3)] += dpos_dpsi[row];
    }
    // d(eta_next)/d(nu) = J dt.
    for row in 0..4 {
        for col in 0..4 {
            f[(row, col + 4)] = j[(row, col)] * dt;
        }
    }

    let covariance = symmetrize(&(f * est.covariance * f.transpose() + q.step_matrix(dt)));
    FusedEstimate {
        eta_hat: PlanarPose::from_vector(&eta_next),
        nu_hat: BodyVelocity::from_vector(&nu_next),
        covariance,
    }
}

/// Fuses one absolute pose measurement (Joseph-form update, wrapped yaw
/// innovation). Returns the new estimate and a rejection flag: measurements
/// whose Mahalanobis distance exceeds the 0.99 chi-squared gate leave the
/// estimate untouched.
pub fn ekf_update(
    est: &FusedEstimate,
    measured: &PlanarPose,
    r: &MeasurementNoise,
) -> (FusedEstimate, bool) {
    let mut innovation = measured.to_vector() - est.eta_hat.to_vector();
    innovation[3] = wrap_angle(innovation[3]);

    let p_pose = est.covariance.fixed_view::<4, 4>(0, 0).clone_owned();
    let s = p_pose + r.matrix();
    let s_inv = match s.try_inverse() {
        Some(inv) => inv,
        // Degenerate innovation covariance: treat as un-fusable.
        None => return (*est, true),
    };

    let md_sq = (innovation.transpose() * s_inv * innovation)[(0, 0)];
    if md_sq > MAHALANOBIS_GATE_SQ {
        return (*est, true);
    }

    let ph_t: Matrix8x4 = est.covariance.fixed_columns::<4>(0).clone_owned();
    let gain = ph_t * s_inv;

    let dx = gain * innovation;
    let eta = est.eta_hat.to_vector() + dx.fixed_rows::<4>(0).clone_owned();
    let nu = est.nu_hat.to_vector() + dx.fixed_rows::<4>(4).clone_owned();

    // Joseph form: (I - K H) P (I - K H)^T + K R K^T with H = [I 0].
    let mut i_kh = Matrix8::identity();
    for row in 0..8 {
        for col in 0..4 {
            i_kh[(row, col)] -= gain[(row, col)];
        }
    }
    let covariance = symmetrize(
        &(i_kh * est.covariance * i_kh.transpose() + gain * r.matrix() * gain.transpose()),
    );

    (
        FusedEstimate {
            eta_hat: PlanarPose::from_vector(&eta),
            nu_hat: BodyVelocity::from_vector(&nu),
            covariance,
        },
        false,
    )
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn default_estimate() -> FusedEstimate {
        FusedEstimate::from_diagonal(
            PlanarPose::origin(),
            BodyVelocity::zero(),
            &[0.01; 8],
        )
    }

    fn q_small() -> ProcessNoise {
        ProcessNoise {
            pose: [1e-6; 4],
            velocity: [1e-4; 4],
        }
    }

    #[test]
    fn predict_at_rest_grows_covariance_only() {
        let est = default_estimate();
        let next = ekf_predict(&est, &Vector4::zeros(), 0.01, &q_small());
        assert_eq!(next.eta_hat, est.eta_hat);
        assert_eq!(next.nu_hat, est.nu_hat);
        for i in 0..8 {
            assert!(next.covariance[(i, i)] > est.covariance[(i, i)]);
        }
    }

    #[test]
    fn predict_integrates_velocity() {
        let mut est = default_estimate();
        est.nu_hat = BodyVelocity::new(0.1, 0.0, 0.0, 0.0);
        let next = ekf_predict(&est, &Vector4::zeros(), 1.0, &q_small());
        assert_abs_diff_eq!(next.eta_hat.x, 0.1, epsilon = 1e-15);
        assert_eq!(next.eta_hat.y, 0.0);
    }

    #[test]
    fn predict_half_accel_term() {
        let est = default_estimate();
        let a = Vector4::new(0.2, 0.0, 0.0, 0.0);
        let next = ekf_predict(&est, &a, 1.0, &q_small());
        assert_abs_diff_eq!(next.eta_hat.x, 0.1, epsilon = 1e-15);
        assert_abs_diff_eq!(next.nu_hat.u, 0.2, epsilon = 1e-15);
    }

    #[test]
    fn jacobian_matches_finite_differences() {
        // Central differences of the propagation map at random states; the
        // analytic F must agree to 1e-5 relative.
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let q = ProcessNoise {
            pose: [0.0; 4],
            velocity: [0.0; 4],
        };
        let dt = 0.05;
        for _ in 0..20 {
            let eta = PlanarPose::new(
                rng.random_range(-2.0..2.0),
                rng.random_range(-2.0..2.0),
                rng.random_range(-1.0..1.0),
                rng.random_range(-3.0..3.0),
            );
            let nu = BodyVelocity::new(
                rng.random_range(-0.5..0.5),
                rng.random_range(-0.5..0.5),
                rng.random_range(-0.5..0.5),
                rng.random_range(-0.5..0.5),
            );
            let a = Vector4::new(
                rng.random_range(-0.5..0.5),
                rng.random_range(-0.5..0.5),
                rng.random_range(-0.5..0.5),
                rng.random_range(-0.5..0.5),
            );
            let base = FusedEstimate::from_diagonal(eta, nu, &[1e-4; 8]);

            // Recover F from how predict transports the state.
            let propagate = |x: &SMatrix<f64, 8, 1>| -> SMatrix<f64, 8, 1> {
                let e = FusedEstimate::from_diagonal(
                    PlanarPose {
                        x: x[0],
                        y: x[1],
                        z: x[2],
                        psi: x[3],
                    },
                    BodyVelocity::new(x[4], x[5], x[6], x[7]),
                    &[1e-4; 8],
                );
                let out = ekf_predict(&e, &a, dt, &q);
                let mut v = SMatrix::<f64, 8, 1>::zeros();
                v.fixed_rows_mut::<4>(0).copy_from(&out.eta_hat.to_vector());
                v.fixed_rows_mut::<4>(4).copy_from(&out.nu_hat.to_vector());
                v
            };

            let mut x0 = SMatrix::<f64, 8, 1>::zeros();
            x0.fixed_rows_mut::<4>(0).copy_from(&base.eta_hat.to_vector());
            x0.fixed_rows_mut::<4>(4).copy_from(&base.nu_hat.to_vector());

            // Analytic F via the covariance path: extract from predict by
            // rebuilding it the same way the implementation does.
            let j = transform_j(eta.psi);
            let mut f = Matrix8::identity();
            let delta = nu.to_vector() * dt + a * (0.5 * dt * dt);
            let dpos = transform_j_dot(eta.psi, 1.0) * delta;
            for row in 0..4 {
                f[(row, 3)] += dpos[row];
                for col in 0..4 {
                    f[(row, col + 4)] = j[(row, col)] * dt;
                }
            }

            let h = 1e-6;
            for col in 0..8 {
                let mut xp = x0;
                let mut xm = x0;
                xp[col] += h;
                xm[col] -= h;
                let fd = (propagate(&xp) - propagate(&xm)) / (2.0 * h);
                for row in 0..8 {
                    let scale = f[(row, col)].abs().max(1.0);
                    assert!(
                        (fd[row] - f[(row, col)]).abs() / scale < 1e-5,
                        "F[{row},{col}] analytic {} vs fd {}",
                        f[(row, col)],
                        fd[row]
                    );
                }
            }
        }
    }

    #[test]
    fn update_at_prediction_shrinks_covariance() {
        let est = default_estimate();
        let r = MeasurementNoise { variance: [1e-4; 4] };
        let (next, rejected) = ekf_update(&est, &est.eta_hat, &r);
        assert!(!rejected);
        assert_eq!(next.eta_hat, est.eta_hat);
        for i in 0..4 {
            assert!(next.covariance[(i, i)] < est.covariance[(i, i)]);
        }
    }

    #[test]
    fn zero_r_snaps_to_measurement() {
        let est = FusedEstimate::from_diagonal(
            PlanarPose::new(0.3, -0.2, 0.1, 0.4),
            BodyVelocity::zero(),
            &[0.05; 8],
        );
        let truth = PlanarPose::new(0.0, 0.0, 0.0, 0.0);
        let r = MeasurementNoise { variance: [0.0; 4] };
        let (next, rejected) = ekf_update(&est, &truth, &r);
        assert!(!rejected);
        let err = (next.eta_hat.to_vector() - truth.to_vector()).abs().max();
        assert!(err < 1e-9, "posterior off by {err}");
        assert_eq!(next.nu_hat, BodyVelocity::zero());
    }

    #[test]
    fn innovation_gate_rejects_outliers() {
        let est = default_estimate();
        let r = MeasurementNoise { variance: [1e-4; 4] };
        let outlier = PlanarPose::new(5.0, 5.0, 5.0, 3.0);
        let (next, rejected) = ekf_update(&est, &outlier, &r);
        assert!(rejected);
        assert_eq!(next.eta_hat, est.eta_hat);
        assert_eq!(next.covariance, est.covariance);
    }

    #[test]
    fn yaw_innovation_wraps() {
        let est = FusedEstimate::from_diagonal(
            PlanarPose::new(0.0, 0.0, 0.0, core::f64::consts::PI - 0.01),
            BodyVelocity::zero(),
            &[0.05; 8],
        );
        let measured = PlanarPose::new(0.0, 0.0, 0.0, -core::f64::consts::PI + 0.01);
        let r = MeasurementNoise { variance: [1e-4; 4] };
        let (next, rejected) = ekf_update(&est, &measured, &r);
        assert!(!rejected, "wrapped innovation is tiny, must pass the gate");
        // The estimate crosses the pi boundary instead of spinning back.
        assert!(next.eta_hat.psi.abs() > core::f64::consts::PI - 0.02);
    }

    #[test]
    fn covariance_stays_psd_through_cycles() {
        let mut rng = ChaCha8Rng::seed_from_u64(13);
        let mut est = default_estimate();
        let q = q_small();
        let r = MeasurementNoise { variance: [1e-4; 4] };
        for k in 0..20_000 {
            let a = Vector4::new(
                rng.random_range(-0.2..0.2),
                rng.random_range(-0.2..0.2),
                rng.random_range(-0.2..0.2),
                rng.random_range(-0.2..0.2),
            );
            est = ekf_predict(&est, &a, 0.01, &q);
            if k % 10 == 0 {
                let z = PlanarPose::new(
                    est.eta_hat.x + rng.random_range(-0.02..0.02),
                    est.eta_hat.y + rng.random_range(-0.02..0.02),
                    est.eta_hat.z + rng.random_range(-0.02..0.02),
                    est.eta_hat.psi + rng.random_range(-0.02..0.02),
                );
                (est, _) = ekf_update(&est, &z, &r);
            }
            let (asym, min_eig) = est.covariance_health();
            assert!(asym < 1e-12, "asymmetry {asym} at cycle {k}");
            assert!(min_eig > -1e-9, "eigenvalue {min_eig} at cycle {k}");
        }
    }

    #[test]
    fn fused_beats_prediction_only() {
        // 100-step Monte Carlo: with a biased, noisy IMU, fusing pose
        // measurements must end with lower pose RMSE than dead reckoning on
        // the same inertial stream.
        let mut rng = ChaCha8Rng::seed_from_u64(17);
        let dt = 0.01;
        let q = q_small();
        let r = MeasurementNoise { variance: [1e-4; 4] };
        let bias = Vector4::new(0.2, -0.15, 0.1, 0.2);

        let mut sq_fused = 0.0;
        let mut sq_pred = 0.0;
        for _ in 0..100 {
            // Truth: vehicle at rest, so the IMU should read zero.
            let truth = PlanarPose::new(0.5, -0.2, 0.3, 0.7);
            let mut fused =
                FusedEstimate::from_diagonal(truth, BodyVelocity::zero(), &[1e-4; 8]);
            let mut pred_only = fused;

            for k in 0..100 {
                let noise = Vector4::new(
                    rng.random_range(-0.05..0.05),
                    rng.random_range(-0.05..0.05),
                    rng.random_range(-0.05..0.05),
                    rng.random_range(-0.05..0.05),
                );
                let imu = bias + noise;
                fused = ekf_predict(&fused, &imu, dt, &q);
                pred_only = ekf_predict(&pred_only, &imu, dt, &q);
                if k % 10 == 0 {
                    let z = PlanarPose::new(
                        truth.x + rng.random_range(-0.01..0.01),
                        truth.y + rng.random_range(-0.01..0.01),
                        truth.z + rng.random_range(-0.01..0.01),
                        truth.psi + rng.random_range(-0.01..0.01),
                    );
                    (fused, _) = ekf_update(&fused, &z, &r);
                }
            }
            let err_f = fused.eta_hat.to_vector() - truth.to_vector();
            let err_p = pred_only.eta_hat.to_vector() - truth.to_vector();
            sq_fused += err_f.norm_squared();
            sq_pred += err_p.norm_squared();
        }
        assert!(
            sq_fused < sq_pred,
            "fusion did not help: {sq_fused} vs {sq_pred}"
        );
    }
}
