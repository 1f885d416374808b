//! Extended Kalman filter over the full object state
//! `(px, py, θ, cx, cy, l, μ)`.
//!
//! The process model is the pushing rollout itself; its Jacobian comes from
//! central finite differences. The observation model selects the pose.

use nalgebra::{Matrix3, SMatrix, SVector, Vector3};
use serde::{Deserialize, Serialize};

use crate::dynamics::{rollout_command, ObjectState, PushAction, PushCommand, PLANNER_SUBSTEP};
use crate::error::{Error, Result};
use crate::geometry::{wrap_angle, Pose2, ShapeContour, Vec2};
use crate::sim::Observation;

pub const STATE_DIM: usize = 7;
pub type StateVector = SVector<f64, STATE_DIM>;
pub type StateMatrix = SMatrix<f64, STATE_DIM, STATE_DIM>;
type ObsJacobian = SMatrix<f64, 3, STATE_DIM>;

/// χ²(3) quantile at 0.999.
pub const CHI2_3_999: f64 = 16.266_236_196_238_1;

const THETA: usize = 2;

/// Gaussian belief over the object state.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BeliefState {
    pub mean: StateVector,
    pub covariance: StateMatrix,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EkfConfig {
    /// Rollout substep of the process model (m).
    pub substep: f64,
    /// Position process variance per metre of push (m²/m).
    pub q_position_per_m: f64,
    /// Orientation process variance per metre of push (rad²/m).
    pub q_theta_per_m: f64,
    pub q_com: f64,
    pub q_limit: f64,
    pub q_mu: f64,
    /// Multiplier on the pose process noise when the approach misses.
    pub miss_inflation: f64,
    /// Mahalanobis gate on the innovation.
    pub gate: f64,
    /// Central-difference step per state component.
    pub fd_steps: [f64; STATE_DIM],
    pub limit_bounds: (f64, f64),
    pub mu_bounds: (f64, f64),
}

impl Default for EkfConfig {
    fn default() -> Self {
        Self {
            substep: PLANNER_SUBSTEP,
            // (1 mm)² per 5 cm of push.
            q_position_per_m: 1e-6 / 0.05,
            q_theta_per_m: 1f64.to_radians().powi(2) / 0.05,
            q_com: 0.0005f64.powi(2),
            q_limit: 0.0005f64.powi(2),
            q_mu: 0.01f64.powi(2),
            miss_inflation: 25.0,
            gate: CHI2_3_999,
            // Pose steps near the observation noise scale: contact-face
            // switches at vertices make the map discontinuous below that.
            fd_steps: [1e-3, 1e-3, 1e-2, 1e-3, 1e-3, 1e-3, 1e-2],
            limit_bounds: (1e-3, 0.5),
            mu_bounds: (0.01, 2.0),
        }
    }
}

impl EkfConfig {
    /// Diagonal process noise for a push of the given travel.
    pub fn process_noise(&self, push_length: f64, missed: bool) -> StateMatrix {
        let scale = if missed { self.miss_inflation } else { 1.0 };
        // A missed push still carries some pose uncertainty from the attempt.
        let length = push_length.max(0.0);
        StateMatrix::from_diagonal(&StateVector::from_column_slice(&[
            self.q_position_per_m * length * scale,
            self.q_position_per_m * length * scale,
            self.q_theta_per_m * length * scale,
            self.q_com,
            self.q_com,
            self.q_limit,
            self.q_mu,
        ]))
    }
}

/// Default prior covariance: pose from the observation noise, broad latent terms.
pub fn default_prior(obs_noise_pos: f64, obs_noise_theta: f64) -> StateMatrix {
    let pos = obs_noise_pos.max(1e-3);
    let theta = obs_noise_theta.max(0.5f64.to_radians());
    StateMatrix::from_diagonal(&StateVector::from_column_slice(&[
        pos * pos,
        pos * pos,
        theta * theta,
        0.025f64.powi(2),
        0.025f64.powi(2),
        0.015f64.powi(2),
        0.15f64.powi(2),
    ]))
}

/// Observation covariance for per-axis position noise and orientation noise.
pub fn observation_covariance(pos_std: f64, theta_std: f64) -> Matrix3<f64> {
    Matrix3::from_diagonal(&Vector3::new(
        pos_std * pos_std,
        pos_std * pos_std,
        theta_std * theta_std,
    ))
}

pub fn state_to_vector(state: &ObjectState) -> StateVector {
    StateVector::from_column_slice(&[
        state.pose.position.x,
        state.pose.position.y,
        state.pose.theta,
        state.com.x,
        state.com.y,
        state.limit_param,
        state.mu,
    ])
}

/// Unchecked conversion; callers clamp the parameters first.
pub fn vector_to_state(x: &StateVector) -> ObjectState {
    ObjectState {
        pose: Pose2 {
            position: Vec2::new(x[0], x[1]),
            theta: x[THETA],
        },
        com: Vec2::new(x[3], x[4]),
        limit_param: x[5],
        mu: x[6],
    }
}

fn is_positive_definite(m: &StateMatrix) -> bool {
    (m - m.transpose()).abs().max() <= 1e-9 * (1.0 + m.abs().max()) && m.cholesky().is_some()
}

impl BeliefState {
    /// Mean as an object state, θ wrapped.
    pub fn mean_state(&self) -> ObjectState {
        let mut s = vector_to_state(&self.mean);
        s.pose.theta = wrap_angle(s.pose.theta);
        s
    }

    pub fn pose(&self) -> Pose2 {
        self.mean_state().pose
    }

    pub fn com(&self) -> Vec2 {
        Vec2::new(self.mean[3], self.mean[4])
    }

    /// Smallest eigenvalue of the covariance.
    pub fn min_eigenvalue(&self) -> f64 {
        self.covariance.symmetric_eigenvalues().min()
    }

    fn clamp(&mut self, config: &EkfConfig) {
        self.mean[THETA] = wrap_angle(self.mean[THETA]);
        self.mean[5] = self.mean[5].clamp(config.limit_bounds.0, config.limit_bounds.1);
        self.mean[6] = self.mean[6].clamp(config.mu_bounds.0, config.mu_bounds.1);
        self.covariance = (self.covariance + self.covariance.transpose()) * 0.5;
    }
}

/// Belief with mean `(obs pose, c = 0, l0, μ0)` and the given prior covariance.
pub fn init_belief(obs: &Observation, l0: f64, mu0: f64, prior_cov: &StateMatrix) -> Result<BeliefState> {
    if !is_positive_definite(prior_cov) {
        return Err(Error::NotPositiveDefinite);
    }
    let mean = StateVector::from_column_slice(&[
        obs.pose.position.x,
        obs.pose.position.y,
        obs.pose.theta,
        0.0,
        0.0,
        l0,
        mu0,
    ]);
    Ok(BeliefState {
        mean,
        covariance: *prior_cov,
    })
}

/// Process map: rolls the pushed state forward with the latent terms held.
/// Returns the successor and whether the approach missed.
pub fn process_map(
    x: &StateVector,
    command: &PushCommand,
    contour: &ShapeContour,
    config: &EkfConfig,
) -> (StateVector, bool) {
    let mut clamped = *x;
    clamped[5] = clamped[5].clamp(config.limit_bounds.0, config.limit_bounds.1);
    clamped[6] = clamped[6].clamp(config.mu_bounds.0, config.mu_bounds.1);
    let state = vector_to_state(&clamped);
    let trace = rollout_command(&state, contour, command, config.substep, true);
    let end = trace.final_state();
    let mut next = *x;
    next[0] = end.pose.position.x;
    next[1] = end.pose.position.y;
    // Keep θ continuous in x so finite differences never straddle the wrap.
    next[THETA] = x[THETA] + wrap_angle(end.pose.theta - state.pose.theta);
    (next, trace.missed)
}

/// Central-difference Jacobian of [`process_map`] with per-component steps.
pub fn process_jacobian(
    x: &StateVector,
    command: &PushCommand,
    contour: &ShapeContour,
    config: &EkfConfig,
    steps: &[f64; STATE_DIM],
) -> StateMatrix {
    let mut jac = StateMatrix::zeros();
    for (j, &h) in steps.iter().enumerate() {
        let mut plus = *x;
        let mut minus = *x;
        plus[j] += h;
        minus[j] -= h;
        let (fp, _) = process_map(&plus, command, contour, config);
        let (fm, _) = process_map(&minus, command, contour, config);
        let mut col = (fp - fm) / (2.0 * h);
        col[THETA] = wrap_angle(fp[THETA] - fm[THETA]) / (2.0 * h);
        jac.set_column(j, &col);
    }
    jac
}

/// Outcome of an EKF prediction.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PredictOutcome {
    pub belief: BeliefState,
    /// The approach line missed the believed object; the mean was kept.
    pub missed: bool,
}

/// Propagates the belief through a world-frame push.
pub fn predict(
    belief: &BeliefState,
    command: &PushCommand,
    contour: &ShapeContour,
    config: &EkfConfig,
) -> PredictOutcome {
    if command.length <= 0.0 {
        let mut next = *belief;
        next.covariance += config.process_noise(0.0, false);
        next.clamp(config);
        return PredictOutcome {
            belief: next,
            missed: false,
        };
    }
    let (mean, missed) = process_map(&belief.mean, command, contour, config);
    if missed {
        let mut next = *belief;
        next.covariance += config.process_noise(command.length, true);
        next.clamp(config);
        return PredictOutcome {
            belief: next,
            missed: true,
        };
    }
    let jac = process_jacobian(&belief.mean, command, contour, config, &config.fd_steps);
    if jac.iter().any(|v| !v.is_finite()) {
        let mut next = *belief;
        next.covariance += config.process_noise(command.length, true);
        next.clamp(config);
        return PredictOutcome {
            belief: next,
            missed: true,
        };
    }
    let mut next = BeliefState {
        mean,
        covariance: jac * belief.covariance * jac.transpose()
            + config.process_noise(command.length, false),
    };
    next.clamp(config);
    PredictOutcome {
        belief: next,
        missed: false,
    }
}

/// Convenience wrapper: resolves `action` against the belief's mean pose.
pub fn predict_action(
    belief: &BeliefState,
    action: &PushAction,
    contour: &ShapeContour,
    config: &EkfConfig,
) -> Result<PredictOutcome> {
    let command = action.command(&belief.pose(), contour)?;
    Ok(predict(belief, &command, contour, config))
}

/// Outcome of an EKF update.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct UpdateOutcome {
    pub belief: BeliefState,
    pub innovation: Vector3<f64>,
    /// Squared Mahalanobis distance of the innovation.
    pub mahalanobis: f64,
    /// The observation failed the gate and was ignored.
    pub outlier: bool,
}

/// Joseph-form EKF update with a pose observation.
pub fn update(
    belief: &BeliefState,
    obs: &Observation,
    obs_cov: &Matrix3<f64>,
    config: &EkfConfig,
) -> Result<UpdateOutcome> {
    if obs_cov.cholesky().is_none() {
        return Err(Error::NotPositiveDefinite);
    }
    let mut h = ObsJacobian::zeros();
    h[(0, 0)] = 1.0;
    h[(1, 1)] = 1.0;
    h[(2, 2)] = 1.0;
    let innovation = Vector3::new(
        obs.pose.position.x - belief.mean[0],
        obs.pose.position.y - belief.mean[1],
        wrap_angle(obs.pose.theta - belief.mean[THETA]),
    );
    let p = belief.covariance;
    let s = h * p * h.transpose() + obs_cov;
    let s_inv = s
        .try_inverse()
        .ok_or(Error::NotPositiveDefinite)?;
    let mahalanobis = (innovation.transpose() * s_inv * innovation)[(0, 0)];
    if mahalanobis > config.gate {
        return Ok(UpdateOutcome {
            belief: *belief,
            innovation,
            mahalanobis,
            outlier: true,
        });
    }
    let gain = p * h.transpose() * s_inv;
    let mut next = *belief;
    next.mean += gain * innovation;
    let i_kh = StateMatrix::identity() - gain * h;
    next.covariance = i_kh * p * i_kh.transpose() + gain * obs_cov * gain.transpose();
    next.clamp(config);
    Ok(UpdateOutcome {
        belief: next,
        innovation,
        mahalanobis,
        outlier: false,
    })
}

/// Re-anchors the pose on `obs` after the filter has lost track: pose mean
/// from the observation, pose covariance `obs_cov`, pose/latent
/// correlations dropped, latent block kept.
pub fn reanchor_pose(belief: &BeliefState, obs: &Observation, obs_cov: &Matrix3<f64>) -> BeliefState {
    let mut next = *belief;
    next.mean[0] = obs.pose.position.x;
    next.mean[1] = obs.pose.position.y;
    next.mean[THETA] = obs.pose.theta;
    for i in 0..3 {
        for j in 3..STATE_DIM {
            next.covariance[(i, j)] = 0.0;
            next.covariance[(j, i)] = 0.0;
        }
    }
    next.covariance.fixed_view_mut::<3, 3>(0, 0).copy_from(obs_cov);
    next
}
