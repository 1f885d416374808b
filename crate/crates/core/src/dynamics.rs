//! Quasi-static point-contact pushing with an ellipsoidal limit surface.
//!
//! Under the ellipsoidal limit surface a pusher force `f` applied at offset
//! `r` from the centre of mass produces the object twist
//! `v ∝ f`, `ω ∝ (r × f) / l²`. The contact-point velocity is then
//! `w = v + ω × r`, a symmetric positive-definite linear map of `f`. Sticking
//! inverts that map; sliding puts the force on the edge of the friction cone.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::{
    contact_query, cross, perp, rotate, Pose2, ShapeContour, SurfaceContact, Vec2,
};

/// Pusher speed during execution, m/s.
pub const PUSH_SPEED: f64 = 0.02;
/// Planner rollout substep (m).
pub const PLANNER_SUBSTEP: f64 = 0.005;
/// Simulator ground-truth substep (m).
pub const SIM_SUBSTEP: f64 = 0.0005;
/// Smallest admissible limit-surface parameter.
pub const MIN_LIMIT_PARAM: f64 = 1e-4;
pub const MAX_LIMIT_PARAM: f64 = 0.5;
pub const MAX_MU: f64 = 2.0;
/// Extra distance by which the pusher's approach clears the believed object (m).
pub const APPROACH_CLEARANCE: f64 = 0.01;

/// Full physical state of the pushed object.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ObjectState {
    pub pose: Pose2,
    /// Centre of mass in the object frame.
    pub com: Vec2,
    /// Ratio of maximum frictional torque to maximum frictional force (m).
    pub limit_param: f64,
    /// Pusher-object friction coefficient.
    pub mu: f64,
}

impl ObjectState {
    pub fn new(pose: Pose2, com: Vec2, limit_param: f64, mu: f64) -> Result<Self> {
        let state = Self {
            pose,
            com,
            limit_param,
            mu,
        };
        state.validate()?;
        Ok(state)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.limit_param >= MIN_LIMIT_PARAM && self.limit_param <= MAX_LIMIT_PARAM) {
            return Err(Error::InvalidState(format!(
                "limit parameter {} outside [{MIN_LIMIT_PARAM}, {MAX_LIMIT_PARAM}]",
                self.limit_param
            )));
        }
        if !(self.mu > 0.0 && self.mu <= MAX_MU) {
            return Err(Error::InvalidState(format!(
                "friction coefficient {} outside (0, {MAX_MU}]",
                self.mu
            )));
        }
        if !(self.pose.position.iter().all(|v| v.is_finite())
            && self.pose.theta.is_finite()
            && self.com.iter().all(|v| v.is_finite()))
        {
            return Err(Error::InvalidState("non-finite pose or COM".into()));
        }
        Ok(())
    }

    /// World position of the centre of mass.
    pub fn com_world(&self) -> Vec2 {
        self.pose.transform_point(&self.com)
    }

    /// Applies a COM displacement `v` (world) and rotation `omega` about the COM.
    pub fn apply_twist(&self, twist: &Twist) -> ObjectState {
        let com_world = self.com_world() + twist.v;
        let theta = self.pose.theta + twist.omega;
        let mut pose = Pose2 {
            position: Vec2::zeros(),
            theta,
        };
        pose.position = com_world - pose.transform_vector(&self.com);
        pose.theta = crate::geometry::wrap_angle(theta);
        ObjectState { pose, ..*self }
    }
}

/// Object displacement over a push or substep: COM translation and rotation.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct Twist {
    pub v: Vec2,
    pub omega: f64,
}

impl Twist {
    /// Displacement of the material point at offset `r` from the COM.
    pub fn point_velocity(&self, r: &Vec2) -> Vec2 {
        self.v + perp(r) * self.omega
    }

    pub fn scaled(&self, k: f64) -> Twist {
        Twist {
            v: self.v * k,
            omega: self.omega * k,
        }
    }
}

/// A straight push: contact sample, direction relative to the inward normal,
/// and travel.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PushAction {
    pub contact_index: usize,
    /// Counter-clockwise angle from the inward normal (rad).
    pub angle: f64,
    pub length: f64,
    pub speed: f64,
}

impl PushAction {
    pub fn new(contact_index: usize, angle: f64, length: f64) -> Self {
        Self {
            contact_index,
            angle,
            length,
            speed: PUSH_SPEED,
        }
    }

    /// Resolves the action into a world-frame pusher motion for an object
    /// believed to be at `pose`.
    pub fn command(&self, pose: &Pose2, contour: &ShapeContour) -> Result<PushCommand> {
        if self.contact_index >= contour.len() {
            return Err(Error::IndexOutOfRange {
                index: self.contact_index,
                len: contour.len(),
            });
        }
        let local = contour.points[self.contact_index];
        let start = pose.transform_point(&local);
        let inward = -pose.transform_vector(&contour.normals[self.contact_index]);
        Ok(PushCommand {
            start,
            direction: rotate(&inward, self.angle),
            length: self.length,
            standoff: local.norm() + contour.bounding_radius() + APPROACH_CLEARANCE,
        })
    }
}

/// Pusher motion in the world frame. The pusher is lowered `standoff`
/// before `start` (clear of the object where the planner believes it is)
/// and its tip moves along `direction` to `start + length * direction`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PushCommand {
    pub start: Vec2,
    pub direction: Vec2,
    pub length: f64,
    pub standoff: f64,
}

impl PushCommand {
    pub fn end(&self) -> Vec2 {
        self.start + self.direction * self.length
    }
}

/// Predicted effect of a push on the object-frame origin.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct MotionPrediction {
    /// Displacement of the pose position (world frame, m).
    pub delta_position: Vec2,
    pub delta_theta: f64,
    pub contact_lost: bool,
    /// Signed tangential pusher slip along the contour (m); positive follows
    /// the contour winding.
    pub slide_distance: f64,
}

impl MotionPrediction {
    pub fn between(before: &ObjectState, after: &ObjectState, contact_lost: bool, slide: f64) -> Self {
        Self {
            delta_position: after.pose.position - before.pose.position,
            delta_theta: crate::geometry::wrap_angle(after.pose.theta - before.pose.theta),
            contact_lost,
            slide_distance: slide,
        }
    }

    /// Linearly rescaled prediction.
    pub fn scaled(&self, k: f64) -> Self {
        Self {
            delta_position: self.delta_position * k,
            delta_theta: self.delta_theta * k,
            slide_distance: self.slide_distance * k,
            ..*self
        }
    }
}

/// Rigid-sticking object motion for a pusher displacement `u` at contact
/// offset `r` from the COM.
pub fn stick_twist(r: &Vec2, u: &Vec2, limit_param: f64) -> Twist {
    let l2 = limit_param * limit_param;
    let denom = l2 + r.x * r.x + r.y * r.y;
    let vx = ((l2 + r.x * r.x) * u.x + r.x * r.y * u.y) / denom;
    let vy = (r.x * r.y * u.x + (l2 + r.y * r.y) * u.y) / denom;
    let omega = (r.x * vy - r.y * vx) / l2;
    Twist {
        v: Vec2::new(vx, vy),
        omega,
    }
}

/// Object twist produced by a force `f` at offset `r` (up to a positive scale).
pub fn force_twist(r: &Vec2, f: &Vec2, limit_param: f64) -> Twist {
    Twist {
        v: *f,
        omega: cross(r, f) / (limit_param * limit_param),
    }
}

/// Cone of contact-point velocity directions achievable while sticking.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MotionCone {
    /// Edge produced by the friction-cone edge rotated counter-clockwise.
    pub left: Vec2,
    pub right: Vec2,
    pub left_force: Vec2,
    pub right_force: Vec2,
}

impl MotionCone {
    /// Whether direction `u` lies inside the cone (edges included).
    pub fn contains(&self, u: &Vec2) -> bool {
        let scale = u.norm();
        let tol = 1e-12 * scale;
        cross(&self.right, u) >= -tol && cross(u, &self.left) >= -tol
    }
}

pub fn motion_cone(r: &Vec2, n_out: &Vec2, mu: f64, limit_param: f64) -> MotionCone {
    let half = mu.atan();
    let inward = -n_out;
    let left_force = rotate(&inward, half);
    let right_force = rotate(&inward, -half);
    let left = force_twist(r, &left_force, limit_param)
        .point_velocity(r)
        .normalize();
    let right = force_twist(r, &right_force, limit_param)
        .point_velocity(r)
        .normalize();
    MotionCone {
        left,
        right,
        left_force,
        right_force,
    }
}

/// Contact mode chosen for a substep.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ContactMode {
    Sticking,
    SlidingLeft,
    SlidingRight,
    Separating,
}

/// Object twist and pusher slip for one substep, before re-localization.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SubstepMotion {
    pub twist: Twist,
    pub mode: ContactMode,
    /// Pusher motion relative to the object's contact point (world frame).
    pub slip_vector: Vec2,
    /// The friction force direction used (unit), zero when separating.
    pub force: Vec2,
}

/// Resolves the contact mode for pusher displacement `u` at world contact
/// offset `r` (from the COM) with outward normal `n_out`.
pub fn substep_motion(r: &Vec2, n_out: &Vec2, u: &Vec2, mu: f64, limit_param: f64) -> SubstepMotion {
    let un = u.dot(n_out);
    if un >= 0.0 {
        return SubstepMotion {
            twist: Twist::default(),
            mode: ContactMode::Separating,
            slip_vector: *u,
            force: Vec2::zeros(),
        };
    }
    let cone = motion_cone(r, n_out, mu, limit_param);
    if cone.contains(u) {
        let twist = stick_twist(r, u, limit_param);
        let force = twist.v.normalize();
        return SubstepMotion {
            twist,
            mode: ContactMode::Sticking,
            slip_vector: Vec2::zeros(),
            force,
        };
    }
    let (mode, force) = if cross(&cone.right, u) < 0.0 {
        (ContactMode::SlidingRight, cone.right_force)
    } else {
        (ContactMode::SlidingLeft, cone.left_force)
    };
    let edge = force_twist(r, &force, limit_param);
    let w = edge.point_velocity(r);
    let scale = un / w.dot(n_out);
    let twist = edge.scaled(scale);
    let slip_vector = u - twist.point_velocity(r);
    SubstepMotion {
        twist,
        mode,
        slip_vector,
        force,
    }
}

/// Result of a single substep.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SubstepOutcome {
    pub state: ObjectState,
    /// New contact, `None` when contact was lost.
    pub contact: Option<SurfaceContact>,
    /// Signed slip along the contour (m).
    pub slip: f64,
    pub mode: ContactMode,
}

/// Walks `distance` along the contour from `contact` (positive follows the
/// winding). Returns the new contact, or `None` if it crosses onto a
/// segment whose normal makes `u_world` separating.
fn slide_along(
    contour: &ShapeContour,
    pose: &Pose2,
    contact: SurfaceContact,
    distance: f64,
    u_world: &Vec2,
) -> Option<SurfaceContact> {
    let mut seg = contact.segment;
    let mut offset = contact.offset;
    let mut remaining = distance;
    let separating =
        |s: usize| u_world.dot(&pose.transform_vector(&contour.normals[s])) >= 0.0;
    // Bounded by one full lap.
    for _ in 0..=contour.len() {
        let len = contour.segment_length(seg);
        if remaining >= 0.0 {
            if offset + remaining <= len {
                return Some(SurfaceContact {
                    segment: seg,
                    offset: offset + remaining,
                });
            }
            remaining -= len - offset;
            let next = contour.next_index(seg);
            if !contour.same_normal(seg, next) && separating(next) {
                return None;
            }
            seg = next;
            offset = 0.0;
        } else {
            if offset + remaining >= 0.0 {
                return Some(SurfaceContact {
                    segment: seg,
                    offset: offset + remaining,
                });
            }
            remaining += offset;
            let prev = contour.prev_index(seg);
            if !contour.same_normal(seg, prev) && separating(prev) {
                return None;
            }
            seg = prev;
            offset = contour.segment_length(seg);
        }
    }
    None
}

/// Advances the object by one pusher displacement `u_step` (world frame)
/// at an object-frame contact.
pub fn push_substep(
    state: &ObjectState,
    contour: &ShapeContour,
    contact: &SurfaceContact,
    u_step: &Vec2,
) -> Result<SubstepOutcome> {
    contour.validate_contact(contact)?;
    Ok(substep_unchecked(state, contour, contact, u_step, true))
}

fn substep_unchecked(
    state: &ObjectState,
    contour: &ShapeContour,
    contact: &SurfaceContact,
    u_step: &Vec2,
    relocalize: bool,
) -> SubstepOutcome {
    let point = state.pose.transform_point(&contour.contact_point(contact));
    let normal = state.pose.transform_vector(&contour.normals[contact.segment]);
    let r = point - state.com_world();
    let motion = substep_motion(&r, &normal, u_step, state.mu, state.limit_param);
    if motion.mode == ContactMode::Separating {
        return SubstepOutcome {
            state: *state,
            contact: None,
            slip: 0.0,
            mode: motion.mode,
        };
    }
    let next = state.apply_twist(&motion.twist);
    let tangent = state.pose.transform_vector(&contour.tangent(contact.segment));
    let slip = motion.slip_vector.dot(&tangent);
    let new_contact = if relocalize && slip != 0.0 {
        slide_along(contour, &next.pose, *contact, slip, u_step)
    } else {
        Some(*contact)
    };
    SubstepOutcome {
        state: next,
        contact: new_contact,
        slip,
        mode: motion.mode,
    }
}

/// How the approach of a push ended.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Engagement {
    pub contact: SurfaceContact,
    /// Pusher travel remaining after touching the object.
    pub travel: f64,
}

/// Casts the pusher path against the true object. Returns the first contact
/// on the way from the approach point to `command.end()` and the travel left
/// after touching.
pub fn engage(state: &ObjectState, contour: &ShapeContour, command: &PushCommand) -> Option<Engagement> {
    if command.length <= 0.0 {
        return None;
    }
    // Ray-cast in the object frame; distances are preserved.
    let origin = state
        .pose
        .inverse_transform_point(&(command.start - command.direction * command.standoff));
    let direction = state.pose.inverse_transform_vector(&command.direction);
    let hit = contact_query(contour, &origin, &direction)?;
    let travel = command.standoff + command.length - hit.distance;
    if travel <= 1e-12 {
        return None;
    }
    Some(Engagement {
        contact: contour.contact_from_hit(&hit),
        travel,
    })
}

/// Object states along a rollout.
#[derive(Debug, Clone, PartialEq)]
pub struct RolloutTrace {
    pub initial: ObjectState,
    /// State after each substep, with the pusher travel so far.
    pub steps: Vec<(f64, ObjectState)>,
    pub contact_lost: bool,
    /// Set when the approach line missed the object.
    pub missed: bool,
    pub slide_distance: f64,
    pub substep_length: f64,
}

impl RolloutTrace {
    pub fn final_state(&self) -> ObjectState {
        self.steps.last().map(|s| s.1).unwrap_or(self.initial)
    }

    pub fn prediction(&self) -> MotionPrediction {
        MotionPrediction::between(
            &self.initial,
            &self.final_state(),
            self.contact_lost,
            self.slide_distance,
        )
    }
}

/// Integrates a world-frame push over substeps of at most `substep`.
///
/// The travel is cut into substeps of exactly `substep` plus a final
/// remainder, so results vary continuously with the travel. Integration
/// stops at contact loss; later travel leaves the object in place. With `relocalize` off the
/// contact never moves along the contour.
pub fn rollout_command(
    state: &ObjectState,
    contour: &ShapeContour,
    command: &PushCommand,
    substep: f64,
    relocalize: bool,
) -> RolloutTrace {
    let mut trace = RolloutTrace {
        initial: *state,
        steps: Vec::new(),
        contact_lost: false,
        missed: false,
        slide_distance: 0.0,
        substep_length: substep,
    };
    let Some(engagement) = engage(state, contour, command) else {
        trace.contact_lost = true;
        trace.missed = true;
        return trace;
    };
    let travel = engagement.travel;
    trace.substep_length = substep.min(travel);
    let mut current = *state;
    let mut contact = engagement.contact;
    let mut travelled = 0.0;
    while travel - travelled > 1e-12 {
        let step_len = if travel - travelled - substep < 1e-12 {
            travel - travelled
        } else {
            substep
        };
        let u = command.direction * step_len;
        let outcome = substep_unchecked(&current, contour, &contact, &u, relocalize);
        if outcome.mode == ContactMode::Separating {
            trace.contact_lost = true;
            break;
        }
        travelled += step_len;
        current = outcome.state;
        trace.slide_distance += outcome.slip;
        trace.steps.push((travelled, current));
        match outcome.contact {
            Some(c) => contact = c,
            None => {
                trace.contact_lost = true;
                break;
            }
        }
    }
    trace
}

/// Predicted motion of a push rolled out in substeps of at most `substep`.
pub fn rollout(
    state: &ObjectState,
    contour: &ShapeContour,
    action: &PushAction,
    substep: f64,
) -> Result<MotionPrediction> {
    if !(substep > 0.0) {
        return Err(Error::InvalidConfig(format!("substep {substep} must be positive")));
    }
    let command = action.command(&state.pose, contour)?;
    Ok(rollout_command(state, contour, &command, substep, true).prediction())
}

/// Single-step prediction: the whole push evaluated at the initial contact.
/// Sliding direction is fixed by the initial contact and the contact never
/// moves, so sliding off the object is not modelled.
pub fn predict_one_step(
    state: &ObjectState,
    contour: &ShapeContour,
    action: &PushAction,
) -> Result<MotionPrediction> {
    let command = action.command(&state.pose, contour)?;
    Ok(rollout_command(state, contour, &command, f64::INFINITY, false).prediction())
}
