//! Benchmark tasks and goal regions.

use std::fmt;
use std::str::FromStr;

use push_core::geometry::Pose2;
use push_core::{Error, Result};
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum TaskKind {
    /// 20 cm translation.
    Translation,
    /// 0.5 rad rotation in place.
    Rotation,
    /// 10 cm translation plus 0.35 rad rotation.
    Mixed,
}

impl TaskKind {
    pub const ALL: [TaskKind; 3] = [TaskKind::Translation, TaskKind::Rotation, TaskKind::Mixed];
}

impl FromStr for TaskKind {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "translation" => Ok(Self::Translation),
            "rotation" => Ok(Self::Rotation),
            "mixed" => Ok(Self::Mixed),
            other => Err(Error::InvalidConfig(format!("unknown task '{other}'"))),
        }
    }
}

impl fmt::Display for TaskKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Self::Translation => "translation",
            Self::Rotation => "rotation",
            Self::Mixed => "mixed",
        })
    }
}

/// Success tolerance pairs.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum GoalRegion {
    /// 0.75 cm, 5°.
    Small,
    /// 2.5 cm, 7.5°.
    Medium,
    /// 5 cm, 10°.
    Large,
}

impl GoalRegion {
    pub const ALL: [GoalRegion; 3] = [GoalRegion::Small, GoalRegion::Medium, GoalRegion::Large];

    /// `(tol_pos [m], tol_theta [rad])`.
    pub fn tolerances(self) -> (f64, f64) {
        match self {
            Self::Small => (0.0075, 5f64.to_radians()),
            Self::Medium => (0.025, 7.5f64.to_radians()),
            Self::Large => (0.05, 10f64.to_radians()),
        }
    }
}

impl FromStr for GoalRegion {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "small" => Ok(Self::Small),
            "medium" => Ok(Self::Medium),
            "large" => Ok(Self::Large),
            other => Err(Error::InvalidConfig(format!("unknown goal region '{other}'"))),
        }
    }
}

impl fmt::Display for GoalRegion {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Self::Small => "small",
            Self::Medium => "medium",
            Self::Large => "large",
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TaskSpec {
    pub kind: TaskKind,
    /// Goal translation along world +x (m).
    pub translation: f64,
    /// Goal rotation, counter-clockwise (rad).
    pub rotation: f64,
    pub tol_pos: f64,
    pub tol_theta: f64,
    pub max_steps: usize,
}

impl TaskSpec {
    pub fn new(kind: TaskKind) -> Self {
        let (translation, rotation) = match kind {
            TaskKind::Translation => (0.20, 0.0),
            TaskKind::Rotation => (0.0, 0.5),
            TaskKind::Mixed => (0.10, 0.35),
        };
        let (tol_pos, tol_theta) = GoalRegion::Small.tolerances();
        Self {
            kind,
            translation,
            rotation,
            tol_pos,
            tol_theta,
            max_steps: 30,
        }
    }

    pub fn with_region(mut self, region: GoalRegion) -> Self {
        (self.tol_pos, self.tol_theta) = region.tolerances();
        self
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.tol_pos > 0.0 && self.tol_theta > 0.0) {
            return Err(Error::InvalidConfig("tolerances must be positive".into()));
        }
        Ok(())
    }

    /// Goal pose relative to the starting pose.
    pub fn goal_from(&self, start: &Pose2) -> Pose2 {
        Pose2::new(
            start.position.x + self.translation,
            start.position.y,
            start.theta + self.rotation,
        )
    }
}
