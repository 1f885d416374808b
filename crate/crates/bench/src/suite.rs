//! Grids of trial cells, parallel execution and CSV summaries.

use std::io::Write;

use push_core::affordance::AffordanceMode;
use push_core::geometry::ShapeLibrary;
use push_core::planner::{OptimizerKind, PlannerConfig, SamplerKind};
use push_core::sim::{ComMode, WorldConfig};
use push_core::{Error, Result};
use rand::{RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::task::{GoalRegion, TaskKind, TaskSpec};
use crate::trial::{run_trial, EstimatorMode, TrialRecord, TrialSetup};

/// Number of evenly spaced start orientations.
pub const ORIENTATIONS: usize = 20;

/// One row of the experiment grid.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Cell {
    pub object: String,
    pub task: TaskKind,
    pub sampler: SamplerKind,
    pub optimizer: OptimizerKind,
    pub k: usize,
    pub region: GoalRegion,
    pub estimator: EstimatorMode,
    pub com_mode: ComMode,
    /// Observation noise switched on.
    pub noise: bool,
    pub temperature: f64,
    pub affordance_mode: AffordanceMode,
}

impl Cell {
    pub fn new(object: impl Into<String>, task: TaskKind, sampler: SamplerKind, k: usize) -> Self {
        Self {
            object: object.into(),
            task,
            sampler,
            optimizer: OptimizerKind::Rollout,
            k,
            region: GoalRegion::Small,
            estimator: EstimatorMode::GroundTruth,
            com_mode: ComMode::Centered,
            noise: false,
            temperature: 0.1,
            affordance_mode: AffordanceMode::OneStep,
        }
    }

    pub fn setup(&self) -> TrialSetup {
        let mut world = WorldConfig::new(self.object.clone());
        world.com_mode = self.com_mode;
        if !self.noise {
            world = world.noiseless();
        }
        let planner = PlannerConfig {
            k: self.k,
            sampler: self.sampler,
            optimizer: self.optimizer,
            temperature: self.temperature,
            affordance_mode: self.affordance_mode,
            ..Default::default()
        };
        TrialSetup::new(
            TaskSpec::new(self.task).with_region(self.region),
            world,
            planner,
            self.estimator,
        )
    }
}

/// Start orientation of trial `index`: 0°, 18°, …, 342°, then repeating.
pub fn trial_orientation(index: usize) -> f64 {
    (index % ORIENTATIONS) as f64 * std::f64::consts::TAU / ORIENTATIONS as f64
}

/// Seed of trial `index` under `base_seed`. Independent of the cell, so
/// cells sharing a base seed see the same latent draws per trial.
pub fn trial_seed(base_seed: u64, index: usize) -> u64 {
    let mut rng = ChaCha8Rng::seed_from_u64(base_seed);
    let mut seed = rng.next_u64();
    for _ in 0..index {
        seed = rng.next_u64();
    }
    seed
}

/// Runs `trials` trials of `setup` in parallel; records are ordered by trial index.
pub fn run_setup(setup: &TrialSetup, shapes: &ShapeLibrary, trials: usize, base_seed: u64) -> Result<Vec<TrialRecord>> {
    (0..trials)
        .into_par_iter()
        .map(|i| run_trial(setup, shapes, trial_orientation(i), trial_seed(base_seed, i)))
        .collect()
}

pub fn run_cell(cell: &Cell, shapes: &ShapeLibrary, trials: usize, base_seed: u64) -> Result<Vec<TrialRecord>> {
    run_setup(&cell.setup(), shapes, trials, base_seed)
}

/// Aggregates of one cell, recomputable from its records.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CellSummary {
    pub object: String,
    pub task: TaskKind,
    pub sampler: SamplerKind,
    pub optimizer: OptimizerKind,
    pub k: usize,
    pub region: GoalRegion,
    pub estimator: EstimatorMode,
    pub com_mode: ComMode,
    pub noise: bool,
    pub trials: usize,
    pub success_rate: f64,
    /// Over successful trials.
    pub mean_steps_success: f64,
    pub std_steps_success: f64,
    /// Over all trials; failures count their full step budget.
    pub mean_steps_all: f64,
    pub std_steps_all: f64,
    pub mean_final_error_mm: f64,
    pub mean_final_error_deg: f64,
    pub median_com_error_mm: f64,
}

fn mean_std(xs: &[f64]) -> (f64, f64) {
    if xs.is_empty() {
        return (f64::NAN, f64::NAN);
    }
    let n = xs.len() as f64;
    let mean = xs.iter().sum::<f64>() / n;
    let var = xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / n;
    (mean, var.sqrt())
}

pub fn median(xs: &[f64]) -> f64 {
    if xs.is_empty() {
        return f64::NAN;
    }
    let mut v = xs.to_vec();
    v.sort_by(f64::total_cmp);
    let m = v.len() / 2;
    if v.len() % 2 == 1 {
        v[m]
    } else {
        (v[m - 1] + v[m]) / 2.0
    }
}

pub fn summarize(cell: &Cell, records: &[TrialRecord]) -> CellSummary {
    let steps_success: Vec<f64> = records
        .iter()
        .filter(|r| r.success)
        .map(|r| r.steps_taken as f64)
        .collect();
    let steps_all: Vec<f64> = records.iter().map(|r| r.steps_taken as f64).collect();
    let (mean_s, std_s) = mean_std(&steps_success);
    let (mean_a, std_a) = mean_std(&steps_all);
    let pos: Vec<f64> = records.iter().map(|r| r.final_error_mm).collect();
    let ang: Vec<f64> = records.iter().map(|r| r.final_error_deg).collect();
    let com: Vec<f64> = records.iter().map(|r| r.final_com_error_mm()).collect();
    CellSummary {
        object: cell.object.clone(),
        task: cell.task,
        sampler: cell.sampler,
        optimizer: cell.optimizer,
        k: cell.k,
        region: cell.region,
        estimator: cell.estimator,
        com_mode: cell.com_mode,
        noise: cell.noise,
        trials: records.len(),
        success_rate: steps_success.len() as f64 / records.len().max(1) as f64,
        mean_steps_success: mean_s,
        std_steps_success: std_s,
        mean_steps_all: mean_a,
        std_steps_all: std_a,
        mean_final_error_mm: mean_std(&pos).0,
        mean_final_error_deg: mean_std(&ang).0,
        median_com_error_mm: median(&com),
    }
}

/// Writes summaries as CSV with a header row.
pub fn write_summaries<W: Write>(summaries: &[CellSummary], writer: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(writer);
    for s in summaries {
        w.serialize(s).map_err(|e| Error::Io(e.to_string()))?;
    }
    w.flush()?;
    Ok(())
}

/// Cartesian experiment grid, loadable from JSON.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct Grid {
    pub objects: Vec<String>,
    pub tasks: Vec<TaskKind>,
    pub samplers: Vec<SamplerKind>,
    pub optimizers: Vec<OptimizerKind>,
    pub k: Vec<usize>,
    pub regions: Vec<GoalRegion>,
    pub estimators: Vec<EstimatorMode>,
    pub com_mode: ComMode,
    pub noise: bool,
    pub temperature: f64,
    pub affordance_mode: AffordanceMode,
    pub trials: usize,
    pub seed: u64,
}

impl Default for Grid {
    fn default() -> Self {
        Self {
            objects: vec!["triangle".into(), "butter".into(), "hexagon".into()],
            tasks: TaskKind::ALL.to_vec(),
            samplers: vec![SamplerKind::Rdn, SamplerKind::Geo, SamplerKind::Ana],
            optimizers: vec![OptimizerKind::Rollout],
            k: vec![1, 3, 5, 10],
            regions: vec![GoalRegion::Small],
            estimators: vec![EstimatorMode::GroundTruth],
            com_mode: ComMode::Centered,
            noise: false,
            temperature: 0.1,
            affordance_mode: AffordanceMode::OneStep,
            trials: 60,
            seed: 0,
        }
    }
}

impl Grid {
    pub fn cells(&self) -> Vec<Cell> {
        let mut out = Vec::new();
        for object in &self.objects {
            for &task in &self.tasks {
                for &region in &self.regions {
                    for &estimator in &self.estimators {
                        for &optimizer in &self.optimizers {
                            for &sampler in &self.samplers {
                                for &k in &self.k {
                                    out.push(Cell {
                                        optimizer,
                                        region,
                                        estimator,
                                        com_mode: self.com_mode,
                                        noise: self.noise,
                                        temperature: self.temperature,
                                        affordance_mode: self.affordance_mode,
                                        ..Cell::new(object.clone(), task, sampler, k)
                                    });
                                }
                            }
                        }
                    }
                }
            }
        }
        out
    }

    pub fn validate(&self) -> Result<()> {
        if self.cells().is_empty() {
            return Err(Error::InvalidConfig("grid has no cells".into()));
        }
        if self.trials == 0 {
            return Err(Error::InvalidConfig("trials must be >= 1".into()));
        }
        Ok(())
    }

    /// Runs every cell and returns its records alongside the summary.
    pub fn run(&self, shapes: &ShapeLibrary) -> Result<Vec<(CellSummary, Vec<TrialRecord>)>> {
        self.validate()?;
        self.cells()
            .iter()
            .map(|cell| {
                let records = run_cell(cell, shapes, self.trials, self.seed)?;
                Ok((summarize(cell, &records), records))
            })
            .collect()
    }
}
