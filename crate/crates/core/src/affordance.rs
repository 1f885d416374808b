//! Dense push affordances: the object motion predicted for a fixed set of
//! representative pushes at every contour sample, and the per-point score
//! against a desired motion.

use std::io::Write;

use serde::{Deserialize, Serialize};

use crate::dynamics::{
    predict_one_step, rollout, MotionPrediction, ObjectState, PushAction, PLANNER_SUBSTEP,
};
use crate::error::Result;
use crate::geometry::{wrap_angle, Pose2, ShapeContour, Vec2};

/// Push directions (relative to the inward normal) crossed with push lengths.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RepresentativePushSet {
    pub angles: Vec<f64>,
    pub lengths: Vec<f64>,
}

impl Default for RepresentativePushSet {
    fn default() -> Self {
        Self {
            angles: [-60.0f64, -30.0, 0.0, 30.0, 60.0]
                .iter()
                .map(|d| d.to_radians())
                .collect(),
            lengths: vec![0.01, 0.05],
        }
    }
}

impl RepresentativePushSet {
    pub fn len(&self) -> usize {
        self.angles.len() * self.lengths.len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Push id for a direction and length index.
    pub fn id(&self, angle_index: usize, length_index: usize) -> usize {
        angle_index * self.lengths.len() + length_index
    }

    /// `(angle, length)` of push `id`.
    pub fn push(&self, id: usize) -> (f64, f64) {
        let n = self.lengths.len();
        (self.angles[id / n], self.lengths[id % n])
    }

    pub fn max_length_index(&self) -> usize {
        self.lengths
            .iter()
            .enumerate()
            .max_by(|a, b| a.1.total_cmp(b.1))
            .map(|(i, _)| i)
            .unwrap_or(0)
    }
}

/// Which predictive model fills the map.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum AffordanceMode {
    /// Whole push in one model evaluation.
    OneStep,
    /// Planner-resolution substep rollout.
    Rollout,
}

impl std::str::FromStr for AffordanceMode {
    type Err = crate::Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "one-step" => Ok(Self::OneStep),
            "rollout" => Ok(Self::Rollout),
            other => Err(crate::Error::InvalidConfig(format!("unknown affordance mode '{other}'"))),
        }
    }
}

/// Predictions for every contour sample and representative push.
#[derive(Debug, Clone, PartialEq)]
pub struct AffordanceMap {
    pub push_set: RepresentativePushSet,
    pub mode: AffordanceMode,
    /// State the map was computed under.
    pub snapshot: ObjectState,
    points: usize,
    predictions: Vec<MotionPrediction>,
}

impl AffordanceMap {
    pub fn num_points(&self) -> usize {
        self.points
    }

    pub fn get(&self, point: usize, push: usize) -> &MotionPrediction {
        &self.predictions[point * self.push_set.len() + push]
    }

    /// All push predictions for one contour sample.
    pub fn row(&self, point: usize) -> &[MotionPrediction] {
        let n = self.push_set.len();
        &self.predictions[point * n..(point + 1) * n]
    }

    /// Whether `state` differs from the snapshot beyond `tol` in any
    /// component (metres, radians, or unitless for μ).
    pub fn is_stale(&self, state: &ObjectState, tol: f64) -> bool {
        let s = &self.snapshot;
        (s.pose.position - state.pose.position).norm() > tol
            || wrap_angle(s.pose.theta - state.pose.theta).abs() > tol
            || (s.com - state.com).norm() > tol
            || (s.limit_param - state.limit_param).abs() > tol
            || (s.mu - state.mu).abs() > tol
    }

    /// Debug dump: `index,x,y,push_id,dpx,dpy,dtheta,lost` with world-frame
    /// sample positions.
    pub fn write_csv<W: Write>(&self, contour: &ShapeContour, writer: W) -> Result<()> {
        let mut out = csv::Writer::from_writer(writer);
        let io = |e: csv::Error| crate::error::Error::Io(e.to_string());
        out.write_record(["index", "x", "y", "push_id", "dpx", "dpy", "dtheta", "lost"])
            .map_err(io)?;
        for i in 0..self.points {
            let p = self.snapshot.pose.transform_point(&contour.points[i]);
            for (j, pred) in self.row(i).iter().enumerate() {
                out.write_record([
                    i.to_string(),
                    p.x.to_string(),
                    p.y.to_string(),
                    j.to_string(),
                    pred.delta_position.x.to_string(),
                    pred.delta_position.y.to_string(),
                    pred.delta_theta.to_string(),
                    u8::from(pred.contact_lost).to_string(),
                ])
                .map_err(io)?;
            }
        }
        out.flush()?;
        Ok(())
    }
}

/// Fills the affordance map for `state` (pose and latent properties).
pub fn compute_affordances(
    contour: &ShapeContour,
    state: &ObjectState,
    mode: AffordanceMode,
    push_set: &RepresentativePushSet,
) -> Result<AffordanceMap> {
    let mut predictions = Vec::with_capacity(contour.len() * push_set.len());
    for i in 0..contour.len() {
        for j in 0..push_set.len() {
            let (angle, length) = push_set.push(j);
            let action = PushAction::new(i, angle, length);
            let pred = match mode {
                AffordanceMode::OneStep => predict_one_step(state, contour, &action)?,
                AffordanceMode::Rollout => rollout(state, contour, &action, PLANNER_SUBSTEP)?,
            };
            predictions.push(pred);
        }
    }
    Ok(AffordanceMap {
        push_set: push_set.clone(),
        mode,
        snapshot: *state,
        points: contour.len(),
        predictions,
    })
}

/// Desired object motion for the next push.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct GoalMotion {
    /// World-frame translation of the pose position (m).
    pub translation: Vec2,
    /// Rotation (rad).
    pub rotation: f64,
}

/// Unit conventions and caps for scoring.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ScoreConfig {
    /// Weight of the rotation error.
    pub lambda: f64,
    /// Translation error scale: score units per metre.
    pub translation_scale: f64,
    /// Rotation error scale: score units per radian.
    pub rotation_scale: f64,
    /// Largest translation requested from one push (m).
    pub max_translation: f64,
    /// Largest rotation requested from one push (rad).
    pub max_rotation: f64,
}

impl Default for ScoreConfig {
    fn default() -> Self {
        Self {
            lambda: 2.0,
            // Centimetres and degrees.
            translation_scale: 100.0,
            rotation_scale: 180.0 / std::f64::consts::PI,
            max_translation: 0.05,
            max_rotation: 15f64.to_radians(),
        }
    }
}

impl GoalMotion {
    /// Remaining error from `current` to `goal`, with translation and
    /// rotation independently capped in magnitude.
    pub fn toward(current: &Pose2, goal: &Pose2, config: &ScoreConfig) -> Self {
        let mut translation = goal.position - current.position;
        let dist = translation.norm();
        if dist > config.max_translation {
            translation *= config.max_translation / dist;
        }
        let rotation = wrap_angle(goal.theta - current.theta)
            .clamp(-config.max_rotation, config.max_rotation);
        Self {
            translation,
            rotation,
        }
    }
}

/// Score of a predicted motion against the desired one; lower is better.
pub fn motion_score(pred: &MotionPrediction, goal: &GoalMotion, config: &ScoreConfig) -> f64 {
    (goal.translation - pred.delta_position).norm() * config.translation_scale
        + config.lambda * (goal.rotation - pred.delta_theta).abs() * config.rotation_scale
}

/// Best score over the representative pushes at every contour sample.
pub fn score_field(map: &AffordanceMap, goal: &GoalMotion, config: &ScoreConfig) -> Vec<f64> {
    (0..map.num_points())
        .map(|i| {
            map.row(i)
                .iter()
                .map(|p| motion_score(p, goal, config))
                .fold(f64::INFINITY, f64::min)
        })
        .collect()
}
