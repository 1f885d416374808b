//! Ground-truth pushing world with latent object properties and noisy pose
//! observations.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::dynamics::{rollout_command, ObjectState, PushAction, PushCommand, SIM_SUBSTEP};
use crate::error::{Error, Result};
use crate::geometry::{wrap_angle, Pose2, ShapeContour, ShapeLibrary, Vec2};

/// How the latent centre of mass is chosen.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ComMode {
    /// COM at the area centroid (object-frame origin).
    Centered,
    /// COM drawn uniformly inside the polygon.
    UniformRandomInside,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WorldConfig {
    pub object_name: String,
    pub com_mode: ComMode,
    pub l_range: (f64, f64),
    pub mu_range: (f64, f64),
    /// Standard deviation of the position observation noise per axis (m).
    pub obs_noise_pos: f64,
    /// Standard deviation of the orientation observation noise (rad).
    pub obs_noise_theta: f64,
    pub rng_seed: u64,
}

impl WorldConfig {
    pub fn new(object_name: impl Into<String>) -> Self {
        Self {
            object_name: object_name.into(),
            com_mode: ComMode::Centered,
            l_range: (0.02, 0.06),
            mu_range: (0.2, 0.6),
            obs_noise_pos: 0.002,
            obs_noise_theta: 1f64.to_radians(),
            rng_seed: 0,
        }
    }

    pub fn noiseless(mut self) -> Self {
        self.obs_noise_pos = 0.0;
        self.obs_noise_theta = 0.0;
        self
    }

    pub fn validate(&self) -> Result<()> {
        let range_ok = |(lo, hi): (f64, f64)| lo > 0.0 && lo <= hi && hi.is_finite();
        if !range_ok(self.l_range) || self.l_range.1 > crate::dynamics::MAX_LIMIT_PARAM {
            return Err(Error::InvalidConfig(format!("bad l_range {:?}", self.l_range)));
        }
        if !range_ok(self.mu_range) || self.mu_range.1 > crate::dynamics::MAX_MU {
            return Err(Error::InvalidConfig(format!("bad mu_range {:?}", self.mu_range)));
        }
        if !(self.obs_noise_pos >= 0.0 && self.obs_noise_theta >= 0.0) {
            return Err(Error::InvalidConfig("noise std-devs must be >= 0".into()));
        }
        Ok(())
    }
}

/// Noisy pose measurement.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Observation {
    pub pose: Pose2,
    pub step_index: usize,
}

/// One episode's ground-truth world.
#[derive(Debug, Clone)]
pub struct World {
    config: WorldConfig,
    contour: ShapeContour,
    state: ObjectState,
    rng: ChaCha8Rng,
    step_index: usize,
    history: Vec<ObjectState>,
}

/// Draws a point uniformly inside the contour by rejection from its bounding box.
pub fn sample_inside<R: Rng + ?Sized>(contour: &ShapeContour, rng: &mut R) -> Vec2 {
    let (lo, hi) = contour.bounds();
    loop {
        let p = Vec2::new(rng.random_range(lo.x..hi.x), rng.random_range(lo.y..hi.y));
        if contour.contains(&p) {
            return p;
        }
    }
}

fn uniform<R: Rng + ?Sized>(rng: &mut R, (lo, hi): (f64, f64)) -> f64 {
    if lo == hi {
        lo
    } else {
        rng.random_range(lo..hi)
    }
}

impl World {
    /// Places the object at the workspace centre with orientation
    /// `initial_theta` and draws its latent properties.
    pub fn spawn(config: &WorldConfig, shapes: &ShapeLibrary, initial_theta: f64) -> Result<Self> {
        config.validate()?;
        let contour = shapes.contour(&config.object_name)?;
        let mut rng = ChaCha8Rng::seed_from_u64(config.rng_seed);
        let com = match config.com_mode {
            ComMode::Centered => Vec2::zeros(),
            ComMode::UniformRandomInside => sample_inside(&contour, &mut rng),
        };
        let limit_param = uniform(&mut rng, config.l_range);
        let mu = uniform(&mut rng, config.mu_range);
        let state = ObjectState::new(Pose2::new(0.0, 0.0, initial_theta), com, limit_param, mu)?;
        Ok(Self {
            config: config.clone(),
            contour,
            state,
            rng,
            step_index: 0,
            history: vec![state],
        })
    }

    pub fn config(&self) -> &WorldConfig {
        &self.config
    }

    pub fn contour(&self) -> &ShapeContour {
        &self.contour
    }

    pub fn true_state(&self) -> &ObjectState {
        &self.state
    }

    pub fn step_index(&self) -> usize {
        self.step_index
    }

    /// True states from spawn onwards, one per executed push.
    pub fn history(&self) -> &[ObjectState] {
        &self.history
    }

    /// Noisy observation of the current pose.
    pub fn observe(&mut self) -> Observation {
        let nx: f64 = self.rng.sample(StandardNormal);
        let ny: f64 = self.rng.sample(StandardNormal);
        let nt: f64 = self.rng.sample(StandardNormal);
        let truth = self.state.pose;
        Observation {
            pose: Pose2 {
                position: truth.position
                    + Vec2::new(nx, ny) * self.config.obs_noise_pos,
                theta: wrap_angle(truth.theta + nt * self.config.obs_noise_theta),
            },
            step_index: self.step_index,
        }
    }

    /// Executes a world-frame push on the true object and returns the next
    /// observation. A push whose approach misses the object still counts as
    /// a step.
    pub fn execute(&mut self, command: &PushCommand) -> Observation {
        let trace = rollout_command(&self.state, &self.contour, command, SIM_SUBSTEP, true);
        self.state = trace.final_state();
        self.step_index += 1;
        self.history.push(self.state);
        self.observe()
    }

    /// Executes an action planned against `planning_pose`, the pose the
    /// planner believed the object to be at.
    pub fn execute_action(&mut self, action: &PushAction, planning_pose: &Pose2) -> Result<Observation> {
        let command = action.command(planning_pose, &self.contour)?;
        Ok(self.execute(&command))
    }
}

/// Whether `pose` is strictly within both tolerances of `goal`.
pub fn goal_reached(pose: &Pose2, goal: &Pose2, tol_pos: f64, tol_theta: f64) -> bool {
    let (dp, dtheta) = pose.error_to(goal);
    dp < tol_pos && dtheta < tol_theta
}
