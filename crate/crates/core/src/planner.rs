//! Greedy one-push planner.
//!
//! Each step samples candidate contact points (affordance softmax, the
//! geometric heuristic, or uniformly), optimizes a straight push at every
//! candidate and returns the candidate with the lowest score. Scores are
//! errors: lower is better throughout.

use rand::seq::index;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::affordance::{
    compute_affordances, motion_score, score_field, AffordanceMap, AffordanceMode, GoalMotion,
    RepresentativePushSet, ScoreConfig,
};
use crate::dynamics::{
    rollout_command, MotionPrediction, ObjectState, PushAction, RolloutTrace, PLANNER_SUBSTEP,
};
use crate::error::{Error, Result};
use crate::geometry::{cross, wrap_angle, world_contour, Pose2, ShapeContour};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum SamplerKind {
    /// Softmax over affordance scores.
    Ana,
    /// Geometric heuristic around the line from object to goal.
    Geo,
    /// Uniform over the outline.
    Rdn,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum OptimizerKind {
    /// Substep rollouts of five base pushes, direction interpolation, length search.
    Rollout,
    /// One-step affordance predictions rescaled linearly in length.
    Direct,
}

/// How the push length along the interpolated direction is chosen.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum LengthSearch {
    /// Best prefix of a maximum-length rollout.
    Prefix,
    /// Golden-section search over the push length.
    GoldenSection,
}

impl std::str::FromStr for SamplerKind {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "ana" => Ok(Self::Ana),
            "geo" => Ok(Self::Geo),
            "rdn" => Ok(Self::Rdn),
            other => Err(Error::InvalidConfig(format!("unknown sampler '{other}'"))),
        }
    }
}

impl std::fmt::Display for SamplerKind {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Self::Ana => "ana",
            Self::Geo => "geo",
            Self::Rdn => "rdn",
        })
    }
}

impl std::str::FromStr for OptimizerKind {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "rollout" => Ok(Self::Rollout),
            "direct" => Ok(Self::Direct),
            other => Err(Error::InvalidConfig(format!("unknown optimizer '{other}'"))),
        }
    }
}

impl std::fmt::Display for OptimizerKind {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Self::Rollout => "rollout",
            Self::Direct => "direct",
        })
    }
}

/// Parameters of the geometric contact heuristic.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GeoConfig {
    /// Below this rotation error, candidates must lie near the object-goal line (rad).
    pub rotation_threshold: f64,
    /// Half-width of the band around the object-goal line (m).
    pub band: f64,
}

impl Default for GeoConfig {
    fn default() -> Self {
        Self {
            rotation_threshold: 2f64.to_radians(),
            band: 0.02,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PlannerConfig {
    pub k: usize,
    pub sampler: SamplerKind,
    pub optimizer: OptimizerKind,
    /// Softmax temperature in score units.
    pub temperature: f64,
    pub score: ScoreConfig,
    pub max_len: f64,
    pub min_len: f64,
    pub substep: f64,
    pub length_search: LengthSearch,
    /// Resolution of the golden-section length search (m).
    pub length_tolerance: f64,
    pub affordance_mode: AffordanceMode,
    pub push_set: RepresentativePushSet,
    pub geo: GeoConfig,
    pub rng_seed: u64,
}

impl Default for PlannerConfig {
    fn default() -> Self {
        Self {
            k: 3,
            sampler: SamplerKind::Ana,
            optimizer: OptimizerKind::Rollout,
            temperature: 0.1,
            score: ScoreConfig::default(),
            max_len: 0.05,
            min_len: 0.01,
            substep: PLANNER_SUBSTEP,
            length_search: LengthSearch::Prefix,
            length_tolerance: 0.001,
            affordance_mode: AffordanceMode::OneStep,
            push_set: RepresentativePushSet::default(),
            geo: GeoConfig::default(),
            rng_seed: 0,
        }
    }
}

impl PlannerConfig {
    pub fn validate(&self) -> Result<()> {
        if self.k == 0 {
            return Err(Error::InvalidConfig("k must be >= 1".into()));
        }
        if !(self.temperature > 0.0) {
            return Err(Error::InvalidConfig("temperature must be > 0".into()));
        }
        if !(self.min_len > 0.0 && self.min_len < self.max_len) {
            return Err(Error::InvalidConfig("need 0 < min_len < max_len".into()));
        }
        if !(self.substep > 0.0) {
            return Err(Error::InvalidConfig("substep must be > 0".into()));
        }
        if self.push_set.angles.len() < 3 {
            return Err(Error::InvalidConfig("need at least three push directions".into()));
        }
        Ok(())
    }
}

/// Target pose and its success tolerances.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GoalSpec {
    pub goal_pose: Pose2,
    pub tol_pos: f64,
    pub tol_theta: f64,
}

/// Softmax sampling of `k` distinct indices with probability
/// proportional to `exp(-score / temperature)`.
pub fn sample_contacts_affordance<R: Rng + ?Sized>(
    scores: &[f64],
    k: usize,
    temperature: f64,
    rng: &mut R,
) -> Vec<usize> {
    let mut remaining: Vec<usize> = (0..scores.len()).collect();
    let mut chosen = Vec::with_capacity(k.min(scores.len()));
    while chosen.len() < k && !remaining.is_empty() {
        let best = remaining
            .iter()
            .map(|&i| scores[i])
            .fold(f64::INFINITY, f64::min);
        // Shift by the minimum so the best candidate has weight one.
        let weights: Vec<f64> = remaining
            .iter()
            .map(|&i| (-(scores[i] - best) / temperature).exp())
            .collect();
        let total: f64 = weights.iter().sum();
        let mut target = rng.random::<f64>() * total;
        let mut pick = remaining.len() - 1;
        for (slot, w) in weights.iter().enumerate() {
            if target < *w {
                pick = slot;
                break;
            }
            target -= w;
        }
        // Guard against landing on a zero-weight tail through rounding.
        if weights[pick] == 0.0 {
            pick = weights
                .iter()
                .position(|w| *w > 0.0)
                .expect("minimum has unit weight");
        }
        chosen.push(remaining.swap_remove(pick));
        // swap_remove reorders; keep `remaining` sorted for reproducibility.
        remaining.sort_unstable();
    }
    chosen
}

/// Uniform sampling without replacement.
pub fn sample_contacts_rdn<R: Rng + ?Sized>(len: usize, k: usize, rng: &mut R) -> Vec<usize> {
    index::sample(rng, len, k.min(len)).into_vec()
}

/// Candidate region of the geometric heuristic, in contour index order.
pub fn geo_region(contour_world: &ShapeContour, pose: &Pose2, goal: &GoalSpec, config: &GeoConfig) -> Vec<usize> {
    let p = pose.position;
    let line = goal.goal_pose.position - p;
    let all: Vec<usize> = (0..contour_world.len()).collect();
    if line.norm() < 1e-9 {
        return all;
    }
    let dir = line.normalize();
    let rot_err = wrap_angle(goal.goal_pose.theta - pose.theta);
    let pushing_side: Vec<usize> = all
        .iter()
        .copied()
        .filter(|&i| (contour_world.points[i] - p).dot(&dir) < 0.0)
        .collect();
    let side_ok = |i: usize| {
        let offset = cross(&dir, &(contour_world.points[i] - p));
        if rot_err.abs() < config.rotation_threshold {
            offset.abs() < config.band
        } else if rot_err > 0.0 {
            // Right of the line for counter-clockwise rotation.
            offset < 0.0
        } else {
            offset > 0.0
        }
    };
    let both: Vec<usize> = pushing_side.iter().copied().filter(|&i| side_ok(i)).collect();
    if !both.is_empty() {
        both
    } else if !pushing_side.is_empty() {
        pushing_side
    } else {
        all
    }
}

/// Geometric heuristic: up to `k` indices drawn uniformly from [`geo_region`].
pub fn sample_contacts_geo<R: Rng + ?Sized>(
    contour_world: &ShapeContour,
    pose: &Pose2,
    goal: &GoalSpec,
    k: usize,
    config: &GeoConfig,
    rng: &mut R,
) -> Vec<usize> {
    let region = geo_region(contour_world, pose, goal, config);
    index::sample(rng, region.len(), k.min(region.len()))
        .into_iter()
        .map(|i| region[i])
        .collect()
}

/// An optimized push and its score.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct OptimizedPush {
    pub action: PushAction,
    pub score: f64,
    pub prediction: MotionPrediction,
}

/// Best prefix of a rollout, restricted to commanded lengths in
/// `[min_len, max_len]`. Prefixes past contact loss keep the last state.
fn best_prefix(
    trace: &RolloutTrace,
    commanded: f64,
    goal: &GoalMotion,
    config: &PlannerConfig,
) -> Option<(f64, f64, MotionPrediction)> {
    if trace.steps.is_empty() {
        return None;
    }
    let total_travel = trace.steps.last().map(|s| s.0).unwrap_or(0.0);
    // Travel before the first contact that does not count as push length;
    // non-zero when the approach touches the object early.
    let extra = if trace.contact_lost {
        0.0
    } else {
        (total_travel - commanded).max(0.0)
    };
    let mut best: Option<(f64, f64, MotionPrediction)> = None;
    let mut consider = |length: f64, state: &ObjectState| {
        let pred = MotionPrediction::between(&trace.initial, state, false, 0.0);
        let score = motion_score(&pred, goal, &config.score);
        if best.as_ref().is_none_or(|b| score < b.1) {
            best = Some((length, score, pred));
        }
    };
    let mut reached_min = false;
    for (travel, state) in &trace.steps {
        let length = (travel - extra).min(config.max_len);
        if length + 1e-12 < config.min_len {
            continue;
        }
        reached_min = true;
        consider(length, state);
    }
    if !reached_min {
        // Contact ended before the minimum length: a minimum-length push
        // produces the same motion.
        let last = trace.final_state();
        consider(config.min_len, &last);
    }
    best
}

/// Rolls out the push at `index` with `angle` and `length` and scores it.
pub fn evaluate_push(
    state: &ObjectState,
    contour: &ShapeContour,
    index: usize,
    angle: f64,
    length: f64,
    goal: &GoalMotion,
    config: &PlannerConfig,
) -> Result<OptimizedPush> {
    let action = PushAction::new(index, angle, length);
    let cmd = action.command(&state.pose, contour)?;
    let trace = rollout_command(state, contour, &cmd, config.substep, true);
    let prediction = trace.prediction();
    Ok(OptimizedPush {
        action,
        score: motion_score(&prediction, goal, &config.score),
        prediction,
    })
}

/// Prefix search along one direction: best length in `[min_len, max_len]`.
fn optimize_length_prefix(
    state: &ObjectState,
    contour: &ShapeContour,
    index: usize,
    angle: f64,
    goal: &GoalMotion,
    config: &PlannerConfig,
) -> Result<Option<OptimizedPush>> {
    let action = PushAction::new(index, angle, config.max_len);
    let cmd = action.command(&state.pose, contour)?;
    let trace = rollout_command(state, contour, &cmd, config.substep, true);
    Ok(
        best_prefix(&trace, config.max_len, goal, config).map(|(length, score, mut prediction)| {
            prediction.contact_lost = trace.contact_lost;
            OptimizedPush {
                action: PushAction::new(index, angle, length),
                score,
                prediction,
            }
        }),
    )
}

/// Golden-section minimization of `f` on `[lo, hi]` down to bracket width `tol`.
pub fn golden_section_min<F: FnMut(f64) -> f64>(mut f: F, lo: f64, hi: f64, tol: f64) -> (f64, f64) {
    let inv_phi = (5f64.sqrt() - 1.0) / 2.0;
    let (mut a, mut b) = (lo, hi);
    let mut c = b - inv_phi * (b - a);
    let mut d = a + inv_phi * (b - a);
    let mut fc = f(c);
    let mut fd = f(d);
    while b - a > tol {
        if fc <= fd {
            b = d;
            d = c;
            fd = fc;
            c = b - inv_phi * (b - a);
            fc = f(c);
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + inv_phi * (b - a);
            fd = f(d);
        }
    }
    if fc <= fd {
        (c, fc)
    } else {
        (d, fd)
    }
}

fn optimize_length(
    state: &ObjectState,
    contour: &ShapeContour,
    index: usize,
    angle: f64,
    goal: &GoalMotion,
    config: &PlannerConfig,
) -> Result<Option<OptimizedPush>> {
    match config.length_search {
        LengthSearch::Prefix => optimize_length_prefix(state, contour, index, angle, goal, config),
        LengthSearch::GoldenSection => {
            let mut failure = None;
            let (length, _) = golden_section_min(
                |len| match evaluate_push(state, contour, index, angle, len, goal, config) {
                    Ok(p) => p.score,
                    Err(e) => {
                        failure = Some(e);
                        f64::INFINITY
                    }
                },
                config.min_len,
                config.max_len,
                config.length_tolerance,
            );
            if let Some(e) = failure {
                return Err(e);
            }
            let push = evaluate_push(state, contour, index, angle, length, goal, config)?;
            Ok(Some(push))
        }
    }
}

/// Vertex of the parabola through three points, or `None` if it opens downward.
fn parabola_vertex(xs: [f64; 3], ys: [f64; 3]) -> Option<f64> {
    let [x0, x1, x2] = xs;
    let [y0, y1, y2] = ys;
    let d01 = (y1 - y0) / (x1 - x0);
    let d12 = (y2 - y1) / (x2 - x1);
    let curvature = (d12 - d01) / (x2 - x0);
    if !(curvature > 0.0) || !curvature.is_finite() {
        return None;
    }
    // y = y0 + d01 (x - x0) + curvature (x - x0)(x - x1)
    Some((x0 + x1) / 2.0 - d01 / (2.0 * curvature))
}

/// Interpolated direction from the per-direction best scores: a parabola
/// through the best direction and its neighbours, clamped to the
/// neighbouring interval. At the ends of the range the two inner
/// neighbours are used and the result is clamped to the end interval.
pub fn interpolate_direction(angles: &[f64], scores: &[f64]) -> f64 {
    let n = angles.len();
    let best = scores
        .iter()
        .enumerate()
        .min_by(|a, b| a.1.total_cmp(b.1))
        .map(|(i, _)| i)
        .unwrap_or(0);
    let (fit, bracket) = if best == 0 {
        ([0, 1, 2], (angles[0], angles[1]))
    } else if best == n - 1 {
        ([n - 3, n - 2, n - 1], (angles[n - 2], angles[n - 1]))
    } else {
        ([best - 1, best, best + 1], (angles[best - 1], angles[best + 1]))
    };
    if fit.iter().any(|&i| !scores[i].is_finite()) {
        return angles[best];
    }
    match parabola_vertex(fit.map(|i| angles[i]), fit.map(|i| scores[i])) {
        Some(v) => v.clamp(bracket.0, bracket.1),
        None => angles[best],
    }
}

/// Rollout-based push optimization at one contact sample.
pub fn optimize_push(
    state: &ObjectState,
    contour: &ShapeContour,
    index: usize,
    goal: &GoalMotion,
    config: &PlannerConfig,
) -> Result<OptimizedPush> {
    let angles = &config.push_set.angles;
    let mut base: Vec<Option<OptimizedPush>> = Vec::with_capacity(angles.len());
    for &angle in angles {
        base.push(optimize_length_prefix(state, contour, index, angle, goal, config)?);
    }
    if base.iter().all(|b| b.is_none()) {
        return evaluate_push(state, contour, index, 0.0, config.min_len, goal, config);
    }
    let scores: Vec<f64> = base
        .iter()
        .map(|b| b.map(|p| p.score).unwrap_or(f64::INFINITY))
        .collect();
    let best_base = base
        .iter()
        .flatten()
        .min_by(|a, b| a.score.total_cmp(&b.score))
        .copied()
        .expect("at least one base push touches the object");
    let angle = interpolate_direction(angles, &scores);
    if angle == best_base.action.angle && config.length_search == LengthSearch::Prefix {
        return Ok(best_base);
    }
    match optimize_length(state, contour, index, angle, goal, config)? {
        Some(p) if p.score < best_base.score => Ok(p),
        _ => Ok(best_base),
    }
}

/// Push optimization from a one-step affordance row: each direction's
/// maximum-length prediction is rescaled linearly to best match the goal.
pub fn optimize_push_direct(
    row: &[MotionPrediction],
    push_set: &RepresentativePushSet,
    index: usize,
    goal: &GoalMotion,
    config: &PlannerConfig,
) -> OptimizedPush {
    let long = push_set.max_length_index();
    let base_len = push_set.lengths[long];
    let sc = &config.score;
    let weighted = |p: &MotionPrediction| {
        nalgebra::Vector3::new(
            p.delta_position.x * sc.translation_scale,
            p.delta_position.y * sc.translation_scale,
            p.delta_theta * sc.rotation_scale * sc.lambda,
        )
    };
    let desired = weighted(&MotionPrediction {
        delta_position: goal.translation,
        delta_theta: goal.rotation,
        ..Default::default()
    });
    let mut best: Option<OptimizedPush> = None;
    for (a, &angle) in push_set.angles.iter().enumerate() {
        let pred = row[push_set.id(a, long)];
        let w = weighted(&pred);
        let mag2 = w.norm_squared();
        if mag2 < 1e-18 {
            continue;
        }
        let length = (desired.dot(&w) / mag2 * base_len).clamp(config.min_len, config.max_len);
        let scaled = pred.scaled(length / base_len);
        let score = motion_score(&scaled, goal, sc);
        if best.as_ref().is_none_or(|b| score < b.score) {
            best = Some(OptimizedPush {
                action: PushAction::new(index, angle, length),
                score,
                prediction: scaled,
            });
        }
    }
    best.unwrap_or_else(|| {
        let normal = push_set
            .angles
            .iter()
            .enumerate()
            .min_by(|a, b| a.1.abs().total_cmp(&b.1.abs()))
            .map(|(i, _)| i)
            .unwrap_or(0);
        let short = push_set
            .lengths
            .iter()
            .enumerate()
            .min_by(|a, b| a.1.total_cmp(b.1))
            .map(|(i, _)| i)
            .unwrap_or(0);
        let pred = row[push_set.id(normal, short)];
        let scaled = pred.scaled(config.min_len / push_set.lengths[short]);
        OptimizedPush {
            action: PushAction::new(index, 0.0, config.min_len),
            score: motion_score(&scaled, goal, sc),
            prediction: scaled,
        }
    })
}

/// Result of one planning step.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PlannedPush {
    pub action: PushAction,
    pub score: f64,
    pub prediction: MotionPrediction,
    /// Sampled contact indices, in sampling order.
    pub candidates: Vec<usize>,
}

/// Contact candidates for the configured sampler. `map` is required for
/// the affordance sampler.
pub fn sample_candidates<R: Rng + ?Sized>(
    state: &ObjectState,
    contour: &ShapeContour,
    goal: &GoalSpec,
    goal_motion: &GoalMotion,
    map: Option<&AffordanceMap>,
    config: &PlannerConfig,
    rng: &mut R,
) -> Vec<usize> {
    match config.sampler {
        SamplerKind::Ana => {
            let map = map.expect("affordance sampler needs a map");
            let scores = score_field(map, goal_motion, &config.score);
            sample_contacts_affordance(&scores, config.k, config.temperature, rng)
        }
        SamplerKind::Geo => {
            let world = world_contour(contour, &state.pose);
            sample_contacts_geo(&world, &state.pose, goal, config.k, &config.geo, rng)
        }
        SamplerKind::Rdn => sample_contacts_rdn(contour.len(), config.k, rng),
    }
}

/// Plans the next push for an object believed to be in `state`.
pub fn plan_step<R: Rng + ?Sized>(
    state: &ObjectState,
    contour: &ShapeContour,
    goal: &GoalSpec,
    config: &PlannerConfig,
    rng: &mut R,
) -> Result<PlannedPush> {
    config.validate()?;
    let goal_motion = GoalMotion::toward(&state.pose, &goal.goal_pose, &config.score);
    let needs_map =
        config.sampler == SamplerKind::Ana || config.optimizer == OptimizerKind::Direct;
    let map = if needs_map {
        let mode = if config.optimizer == OptimizerKind::Direct {
            AffordanceMode::OneStep
        } else {
            config.affordance_mode
        };
        Some(compute_affordances(contour, state, mode, &config.push_set)?)
    } else {
        None
    };
    let candidates = sample_candidates(state, contour, goal, &goal_motion, map.as_ref(), config, rng);
    let mut best: Option<OptimizedPush> = None;
    for &index in &candidates {
        let push = match config.optimizer {
            OptimizerKind::Rollout => optimize_push(state, contour, index, &goal_motion, config)?,
            OptimizerKind::Direct => {
                let map = map.as_ref().expect("direct optimizer computes a map");
                optimize_push_direct(map.row(index), &config.push_set, index, &goal_motion, config)
            }
        };
        if best.as_ref().is_none_or(|b| push.score < b.score) {
            best = Some(push);
        }
    }
    let best = best.ok_or_else(|| Error::InvalidConfig("no contact candidates".into()))?;
    Ok(PlannedPush {
        action: best.action,
        score: best.score,
        prediction: best.prediction,
        candidates,
    })
}
