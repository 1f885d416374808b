//! One closed-loop pushing episode.

use std::io::Write;

use push_core::dynamics::{ObjectState, PushAction};
use push_core::estimation::{
    default_prior, init_belief, observation_covariance, predict, reanchor_pose, update, BeliefState,
    EkfConfig,
};
use push_core::geometry::{Pose2, ShapeLibrary};
use push_core::planner::{plan_step, GoalSpec, PlannerConfig};
use push_core::sim::{goal_reached, World, WorldConfig};
use push_core::Result;
use rand::{RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::task::TaskSpec;

/// Which state the planner acts on.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum EstimatorMode {
    /// The planner sees the true state, latent properties included.
    GroundTruth,
    /// The planner sees the EKF mean.
    Ekf,
}

impl std::str::FromStr for EstimatorMode {
    type Err = push_core::Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "ground-truth" => Ok(Self::GroundTruth),
            "ekf" => Ok(Self::Ekf),
            other => Err(push_core::Error::InvalidConfig(format!("unknown estimator '{other}'"))),
        }
    }
}

impl std::fmt::Display for EstimatorMode {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Self::GroundTruth => "ground-truth",
            Self::Ekf => "ekf",
        })
    }
}

/// Everything that defines a trial except its seed and start orientation.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrialSetup {
    pub task: TaskSpec,
    /// `rng_seed` is overwritten per trial.
    pub world: WorldConfig,
    /// `rng_seed` is overwritten per trial.
    pub planner: PlannerConfig,
    pub estimator: EstimatorMode,
    pub ekf: EkfConfig,
    /// Initial guess of the limit-surface parameter.
    pub l0: f64,
    /// Initial guess of the pusher friction coefficient.
    pub mu0: f64,
    /// Floor on the observation noise the filter assumes, so a noiseless
    /// world still gives a well-conditioned update.
    pub min_obs_std: (f64, f64),
    /// Consecutive gated observations after which the pose is re-anchored
    /// on the latest observation. Zero disables re-anchoring.
    pub reanchor_after: usize,
}

impl TrialSetup {
    pub fn new(task: TaskSpec, world: WorldConfig, planner: PlannerConfig, estimator: EstimatorMode) -> Self {
        Self {
            task,
            world,
            planner,
            estimator,
            ekf: EkfConfig::default(),
            l0: 0.04,
            mu0: 0.3,
            min_obs_std: (1e-4, 0.01f64.to_radians()),
            reanchor_after: 1,
        }
    }
}

/// One executed push.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StepLog {
    pub step: usize,
    pub action: PushAction,
    pub score: f64,
    pub obs_pose: Pose2,
    pub true_pose: Pose2,
    pub est_state: ObjectState,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrialRecord {
    pub setup: TrialSetup,
    pub seed: u64,
    pub initial_theta: f64,
    pub goal: Pose2,
    pub true_initial: ObjectState,
    pub steps: Vec<StepLog>,
    pub steps_taken: usize,
    /// The state the planner acts on came within tolerance.
    pub stopped_on_estimate: bool,
    /// Stopped on the estimate and the true pose is within tolerance.
    pub success: bool,
    pub final_error_mm: f64,
    pub final_error_deg: f64,
    /// ‖c_est − c_true‖ in mm after initialization and after every push.
    pub com_error_trace: Vec<f64>,
}

impl TrialRecord {
    pub fn final_com_error_mm(&self) -> f64 {
        self.com_error_trace.last().copied().unwrap_or(f64::NAN)
    }

    pub fn true_com_norm_mm(&self) -> f64 {
        self.true_initial.com.norm() * 1e3
    }

    /// Writes the per-step log as JSON lines.
    pub fn write_jsonl<W: Write>(&self, mut writer: W) -> std::io::Result<()> {
        #[derive(Serialize)]
        struct Line<'a> {
            step: usize,
            action: &'a PushAction,
            obs_pose: &'a Pose2,
            true_pose: &'a Pose2,
            est_state: &'a ObjectState,
        }
        for s in &self.steps {
            let line = Line {
                step: s.step,
                action: &s.action,
                obs_pose: &s.obs_pose,
                true_pose: &s.true_pose,
                est_state: &s.est_state,
            };
            serde_json::to_writer(&mut writer, &line)?;
            writer.write_all(b"\n")?;
        }
        Ok(())
    }
}

/// Independent world and planner seeds from one trial seed.
pub fn derive_seeds(seed: u64) -> (u64, u64) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (rng.next_u64(), rng.next_u64())
}

fn com_error_mm(belief: Option<&BeliefState>, truth: &ObjectState) -> f64 {
    match belief {
        Some(b) => (b.com() - truth.com).norm() * 1e3,
        None => 0.0,
    }
}

/// Runs observe → update → plan → execute until the planner's state is
/// within tolerance of the goal or the step budget is spent.
pub fn run_trial(setup: &TrialSetup, shapes: &ShapeLibrary, initial_theta: f64, seed: u64) -> Result<TrialRecord> {
    setup.task.validate()?;
    setup.planner.validate()?;
    let (world_seed, planner_seed) = derive_seeds(seed);
    let mut world_config = setup.world.clone();
    world_config.rng_seed = world_seed;
    let mut world = World::spawn(&world_config, shapes, initial_theta)?;
    let mut planner = setup.planner.clone();
    planner.rng_seed = planner_seed;
    let mut rng = ChaCha8Rng::seed_from_u64(planner_seed);

    let contour = world.contour().clone();
    let true_initial = *world.true_state();
    let goal = setup.task.goal_from(&true_initial.pose);
    let goal_spec = GoalSpec {
        goal_pose: goal,
        tol_pos: setup.task.tol_pos,
        tol_theta: setup.task.tol_theta,
    };
    let obs_cov = observation_covariance(
        world_config.obs_noise_pos.max(setup.min_obs_std.0),
        world_config.obs_noise_theta.max(setup.min_obs_std.1),
    );

    let first = world.observe();
    let mut belief = match setup.estimator {
        EstimatorMode::GroundTruth => None,
        EstimatorMode::Ekf => {
            let prior = default_prior(world_config.obs_noise_pos, world_config.obs_noise_theta);
            Some(init_belief(&first, setup.l0, setup.mu0, &prior)?)
        }
    };
    let mut com_error_trace = vec![com_error_mm(belief.as_ref(), world.true_state())];
    let mut steps = Vec::new();
    let mut stopped_on_estimate = false;
    let mut outliers = 0usize;

    for step in 0..=setup.task.max_steps {
        let estimate = match &belief {
            Some(b) => b.mean_state(),
            None => *world.true_state(),
        };
        if goal_reached(&estimate.pose, &goal, goal_spec.tol_pos, goal_spec.tol_theta) {
            stopped_on_estimate = true;
            break;
        }
        if step == setup.task.max_steps {
            break;
        }
        let plan = plan_step(&estimate, &contour, &goal_spec, &planner, &mut rng)?;
        let command = plan.action.command(&estimate.pose, &contour)?;
        let obs = world.execute(&command);
        if let Some(b) = belief.as_mut() {
            let predicted = predict(b, &command, &contour, &setup.ekf).belief;
            let outcome = update(&predicted, &obs, &obs_cov, &setup.ekf)?;
            *b = outcome.belief;
            if outcome.outlier {
                outliers += 1;
                if setup.reanchor_after > 0 && outliers >= setup.reanchor_after {
                    *b = reanchor_pose(b, &obs, &obs_cov);
                    outliers = 0;
                }
            } else {
                outliers = 0;
            }
        }
        com_error_trace.push(com_error_mm(belief.as_ref(), world.true_state()));
        steps.push(StepLog {
            step,
            action: plan.action,
            score: plan.score,
            obs_pose: obs.pose,
            true_pose: world.true_state().pose,
            est_state: match &belief {
                Some(b) => b.mean_state(),
                None => *world.true_state(),
            },
        });
    }

    let final_pose = world.true_state().pose;
    let (dp, dtheta) = final_pose.error_to(&goal);
    let success =
        stopped_on_estimate && goal_reached(&final_pose, &goal, goal_spec.tol_pos, goal_spec.tol_theta);
    Ok(TrialRecord {
        setup: TrialSetup {
            world: world_config,
            planner,
            ..setup.clone()
        },
        seed,
        initial_theta,
        goal,
        true_initial,
        steps_taken: steps.len(),
        steps,
        stopped_on_estimate,
        success,
        final_error_mm: dp * 1e3,
        final_error_deg: dtheta.to_degrees(),
        com_error_trace,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::task::TaskKind;
    use push_core::planner::SamplerKind;

    fn setup(task: TaskKind, object: &str, estimator: EstimatorMode) -> TrialSetup {
        TrialSetup::new(
            TaskSpec::new(task),
            WorldConfig::new(object).noiseless(),
            PlannerConfig::default(),
            estimator,
        )
    }

    #[test]
    fn square_translation_ground_truth_within_six_steps() {
        let s = setup(TaskKind::Translation, "square", EstimatorMode::GroundTruth);
        let shapes = ShapeLibrary::builtin();
        let r = run_trial(&s, &shapes, 0.0, 1).unwrap();
        assert!(r.success, "{r:?}");
        assert!(r.steps_taken >= 4 && r.steps_taken <= 6, "{} steps", r.steps_taken);
        assert!(r.final_error_mm < 7.5);
    }

    #[test]
    fn zero_budget_fails_immediately() {
        let mut s = setup(TaskKind::Rotation, "square", EstimatorMode::Ekf);
        s.task.max_steps = 0;
        let r = run_trial(&s, &ShapeLibrary::builtin(), 0.3, 0).unwrap();
        assert!(!r.success && !r.stopped_on_estimate);
        assert_eq!(r.steps_taken, 0);
        assert_eq!(r.com_error_trace.len(), 1);
    }

    #[test]
    fn identical_seeds_identical_records() {
        let mut s = setup(TaskKind::Mixed, "butter", EstimatorMode::Ekf);
        s.world = WorldConfig::new("butter");
        s.planner.sampler = SamplerKind::Ana;
        let shapes = ShapeLibrary::builtin();
        let a = run_trial(&s, &shapes, 1.0, 42).unwrap();
        let b = run_trial(&s, &shapes, 1.0, 42).unwrap();
        assert_eq!(serde_json::to_string(&a).unwrap(), serde_json::to_string(&b).unwrap());
        let c = run_trial(&s, &shapes, 1.0, 43).unwrap();
        assert_ne!(a.steps, c.steps);
    }

    #[test]
    fn success_implies_true_pose_within_tolerance() {
        let mut s = setup(TaskKind::Mixed, "triangle", EstimatorMode::Ekf);
        s.world = WorldConfig::new("triangle");
        let shapes = ShapeLibrary::builtin();
        for seed in 0..4 {
            let r = run_trial(&s, &shapes, seed as f64, seed).unwrap();
            assert!(r.steps_taken <= s.task.max_steps);
            if r.success {
                assert!(r.final_error_mm < 7.5 && r.final_error_deg < 5.0);
            }
        }
    }

    #[test]
    fn jsonl_has_one_line_per_step() {
        let s = setup(TaskKind::Translation, "square", EstimatorMode::GroundTruth);
        let r = run_trial(&s, &ShapeLibrary::builtin(), 0.5, 3).unwrap();
        let mut buf = Vec::new();
        r.write_jsonl(&mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert_eq!(text.lines().count(), r.steps_taken);
        let first: serde_json::Value = serde_json::from_str(text.lines().next().unwrap()).unwrap();
        for key in ["step", "action", "obs_pose", "true_pose", "est_state"] {
            assert!(first.get(key).is_some());
        }
    }
}
