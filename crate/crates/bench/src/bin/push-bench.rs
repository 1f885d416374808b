//! `push-bench run ...` runs one cell; `push-bench sweep --grid grid.json` runs a grid.

use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::PathBuf;

use anyhow::{Context, Result};
use clap::{Parser, Subcommand};
use push_bench::suite::{run_cell, summarize, write_summaries, Cell, Grid};
use push_bench::{EstimatorMode, GoalRegion, TaskKind, TrialRecord};
use push_core::affordance::AffordanceMode;
use push_core::geometry::ShapeLibrary;
use push_core::planner::{OptimizerKind, SamplerKind};
use push_core::sim::ComMode;

#[derive(Parser)]
#[command(name = "push-bench", about = "Closed-loop planar pushing benchmarks")]
struct Cli {
    /// Directory of extra shape fixtures (*.json) added to the built-in ones.
    #[arg(long, global = true)]
    shapes: Option<PathBuf>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run one cell of trials.
    Run {
        #[arg(long, default_value = "translation")]
        task: TaskKind,
        #[arg(long, default_value = "triangle")]
        object: String,
        #[arg(long, default_value = "ana")]
        sampler: SamplerKind,
        #[arg(long, default_value = "rollout")]
        optimizer: OptimizerKind,
        #[arg(short, default_value_t = 3)]
        k: usize,
        #[arg(long, default_value_t = 60)]
        trials: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, default_value = "small")]
        region: GoalRegion,
        #[arg(long, default_value = "ground-truth")]
        estimator: EstimatorMode,
        /// Draw the centre of mass uniformly inside the object.
        #[arg(long)]
        random_com: bool,
        /// Turn on observation noise.
        #[arg(long)]
        noise: bool,
        /// Softmax temperature of the affordance sampler (score units).
        #[arg(long, default_value_t = 0.1)]
        temperature: f64,
        /// Model behind the affordance map: one-step or rollout.
        #[arg(long, default_value = "one-step")]
        affordance_mode: AffordanceMode,
        #[arg(long, default_value = "results.csv")]
        out: PathBuf,
        /// Per-step episode log (JSON lines, all trials concatenated).
        #[arg(long)]
        log: Option<PathBuf>,
    },
    /// Run every cell of a JSON grid.
    Sweep {
        #[arg(long)]
        grid: PathBuf,
        #[arg(long, default_value = "results.csv")]
        out: PathBuf,
        #[arg(long)]
        log: Option<PathBuf>,
    },
}

fn write_logs(path: &PathBuf, records: &[&TrialRecord]) -> Result<()> {
    let mut w = BufWriter::new(File::create(path).with_context(|| format!("creating {}", path.display()))?);
    for r in records {
        r.write_jsonl(&mut w)?;
    }
    w.flush()?;
    Ok(())
}

fn main() -> Result<()> {
    let cli = Cli::parse();
    let mut shapes = ShapeLibrary::builtin();
    if let Some(dir) = &cli.shapes {
        let extra = ShapeLibrary::from_dir(dir)?;
        for name in extra.names() {
            shapes.insert(extra.get(name)?.clone());
        }
    }
    match cli.command {
        Command::Run {
            task,
            object,
            sampler,
            optimizer,
            k,
            trials,
            seed,
            region,
            estimator,
            random_com,
            noise,
            temperature,
            affordance_mode,
            out,
            log,
        } => {
            let cell = Cell {
                optimizer,
                region,
                estimator,
                com_mode: if random_com { ComMode::UniformRandomInside } else { ComMode::Centered },
                noise,
                temperature,
                affordance_mode,
                ..Cell::new(object, task, sampler, k)
            };
            let records = run_cell(&cell, &shapes, trials, seed)?;
            let summary = summarize(&cell, &records);
            eprintln!(
                "{} {} {} k={}: success {:.1}%, steps {:.2} ± {:.2} (successful), {:.2} (all), end error {:.2} mm / {:.2}°",
                cell.object,
                cell.task,
                cell.sampler,
                cell.k,
                summary.success_rate * 100.0,
                summary.mean_steps_success,
                summary.std_steps_success,
                summary.mean_steps_all,
                summary.mean_final_error_mm,
                summary.mean_final_error_deg,
            );
            write_summaries(&[summary], File::create(&out)?)?;
            if let Some(path) = log {
                write_logs(&path, &records.iter().collect::<Vec<_>>())?;
            }
        }
        Command::Sweep { grid, out, log } => {
            let text = std::fs::read_to_string(&grid).with_context(|| format!("reading {}", grid.display()))?;
            let grid: Grid = serde_json::from_str(&text)?;
            let results = grid.run(&shapes)?;
            let summaries: Vec<_> = results.iter().map(|(s, _)| s.clone()).collect();
            write_summaries(&summaries, File::create(&out)?)?;
            if let Some(path) = log {
                let all: Vec<&TrialRecord> = results.iter().flat_map(|(_, r)| r.iter()).collect();
                write_logs(&path, &all)?;
            }
            eprintln!("{} cells written to {}", summaries.len(), out.display());
        }
    }
    Ok(())
}
