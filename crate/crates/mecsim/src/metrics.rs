//! Episode metrics, evaluation summaries, and JSON-lines emission shared by
//! the trainer, the comparison policies, and the CLI.
//!
//! The three headline metrics are time-averaged, vehicle-summed per episode:
//! average system cost `(1/T) sum_t sum_v C`, average service delay, and
//! average energy consumption.

use std::io::{BufRead, BufWriter, Write};
use std::path::Path;

use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};

use crate::compute::OffloadDecision;
use crate::env::StepOutcome;

/// Format tag embedded in trajectory dumps.
pub const TRAJECTORY_FORMAT: &str = "mecsim-trajectory-v1";

/// One line of a training/evaluation metrics log.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EpisodeRecord {
    pub episode: usize,
    pub cumulative_reward: f64,
    pub avg_system_cost: f64,
    pub avg_service_delay_s: f64,
    pub avg_energy_j: f64,
    pub deadline_violations: usize,
    pub vehicle_energy_violations: usize,
    pub server_energy_violations: usize,
}

/// Accumulates step outcomes into one [`EpisodeRecord`].
#[derive(Debug, Default)]
pub struct EpisodeAccumulator {
    steps: usize,
    reward_sum: f64,
    cost_sum: f64,
    delay_sum: f64,
    energy_sum: f64,
    deadline_violations: usize,
    vehicle_energy_violations: usize,
    server_energy_violations: usize,
}

impl EpisodeAccumulator {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn push(&mut self, outcome: &StepOutcome) {
        self.steps += 1;
        self.reward_sum += outcome.reward;
        for c in &outcome.costs {
            self.cost_sum += c.cost;
            self.delay_sum += c.delay_s;
            self.energy_sum += c.energy_j;
        }
        self.deadline_violations += outcome.violations.deadline.iter().filter(|&&d| d).count();
        self.vehicle_energy_violations += outcome
            .violations
            .vehicle_energy_over_j
            .iter()
            .filter(|&&e| e > 0.0)
            .count();
        self.server_energy_violations += outcome
            .violations
            .server_energy_over_j
            .iter()
            .filter(|&&e| e > 0.0)
            .count();
    }

    pub fn finish(self, episode: usize) -> EpisodeRecord {
        let t = self.steps.max(1) as f64;
        EpisodeRecord {
            episode,
            cumulative_reward: self.reward_sum,
            avg_system_cost: self.cost_sum / t,
            avg_service_delay_s: self.delay_sum / t,
            avg_energy_j: self.energy_sum / t,
            deadline_violations: self.deadline_violations,
            vehicle_energy_violations: self.vehicle_energy_violations,
            server_energy_violations: self.server_energy_violations,
        }
    }
}

/// Evaluation requested zero episodes (or produced no records).
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct EmptyEvaluation;

impl std::fmt::Display for EmptyEvaluation {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "evaluation over zero episodes has no summary")
    }
}

impl std::error::Error for EmptyEvaluation {}

/// Mean and sample standard deviation of the per-episode metrics.
#[derive(Debug, Clone, Serialize)]
pub struct EvalSummary {
    pub episodes: usize,
    pub mean_reward: f64,
    pub avg_system_cost_mean: f64,
    pub avg_system_cost_std: f64,
    pub avg_service_delay_mean_s: f64,
    pub avg_service_delay_std_s: f64,
    pub avg_energy_mean_j: f64,
    pub avg_energy_std_j: f64,
}

fn mean_std(values: &[f64]) -> (f64, f64) {
    if values.is_empty() {
        return (0.0, 0.0);
    }
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    if values.len() == 1 {
        return (mean, 0.0);
    }
    let var = values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1.0);
    (mean, var.sqrt())
}

impl EvalSummary {
    pub fn from_records(records: &[EpisodeRecord]) -> Result<Self, EmptyEvaluation> {
        if records.is_empty() {
            return Err(EmptyEvaluation);
        }
        let costs: Vec<f64> = records.iter().map(|r| r.avg_system_cost).collect();
        let delays: Vec<f64> = records.iter().map(|r| r.avg_service_delay_s).collect();
        let energies: Vec<f64> = records.iter().map(|r| r.avg_energy_j).collect();
        let (cost_mean, cost_std) = mean_std(&costs);
        let (delay_mean, delay_std) = mean_std(&delays);
        let (energy_mean, energy_std) = mean_std(&energies);
        Ok(Self {
            episodes: records.len(),
            mean_reward: records.iter().map(|r| r.cumulative_reward).sum::<f64>() / records.len() as f64,
            avg_system_cost_mean: cost_mean,
            avg_system_cost_std: cost_std,
            avg_service_delay_mean_s: delay_mean,
            avg_service_delay_std_s: delay_std,
            avg_energy_mean_j: energy_mean,
            avg_energy_std_j: energy_std,
        })
    }
}

/// One step of an optional trajectory dump.
#[derive(Debug, Serialize)]
pub struct TrajectoryRecord<'a> {
    pub format: &'static str,
    pub slot: usize,
    pub actions: &'a [Vec<f64>],
    pub decisions: &'a [OffloadDecision],
    pub costs: &'a [crate::compute::CostBreakdown],
    pub reward: f64,
    pub violations: &'a crate::env::SlotViolations,
    pub done: bool,
}

impl<'a> TrajectoryRecord<'a> {
    pub fn new(slot: usize, actions: &'a [Vec<f64>], outcome: &'a StepOutcome) -> Self {
        Self {
            format: TRAJECTORY_FORMAT,
            slot,
            actions,
            decisions: &outcome.decisions,
            costs: &outcome.costs,
            reward: outcome.reward,
            violations: &outcome.violations,
            done: outcome.done,
        }
    }
}

/// Write records as JSON lines.
pub fn write_jsonl<T: Serialize>(path: impl AsRef<Path>, records: &[T]) -> std::io::Result<()> {
    let file = std::fs::File::create(path)?;
    let mut out = BufWriter::new(file);
    for record in records {
        serde_json::to_writer(&mut out, record)?;
        out.write_all(b"\n")?;
    }
    out.flush()
}

/// Read a JSON-lines file back.
pub fn read_jsonl<T: DeserializeOwned>(path: impl AsRef<Path>) -> std::io::Result<Vec<T>> {
    let file = std::fs::File::open(path)?;
    let reader = std::io::BufReader::new(file);
    let mut records = Vec::new();
    for line in reader.lines() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        records.push(serde_json::from_str(&line)?);
    }
    Ok(records)
}

/// Incremental JSON-lines writer for long dumps.
pub struct JsonlWriter {
    out: BufWriter<std::fs::File>,
}

impl JsonlWriter {
    pub fn create(path: impl AsRef<Path>) -> std::io::Result<Self> {
        Ok(Self {
            out: BufWriter::new(std::fs::File::create(path)?),
        })
    }

    pub fn push<T: Serialize>(&mut self, record: &T) -> std::io::Result<()> {
        serde_json::to_writer(&mut self.out, record)?;
        self.out.write_all(b"\n")
    }

    pub fn finish(mut self) -> std::io::Result<()> {
        self.out.flush()
    }
}
