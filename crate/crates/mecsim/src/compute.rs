//! Deterministic delay, energy, and system-cost accounting for local
//! execution and edge offloading.
//!
//! Local:  D = l*mu/F_v,            E = gamma * F_v^2 * l * mu
//! Edge:   D = l/R + l*mu/f,        E = p*l/R + eps*l*mu
//! Cost:   C = w_D * D + w_E * E
//!
//! For an edge execution the transmit energy belongs to the vehicle and the
//! per-cycle energy to the server; [`CostBreakdown`] keeps the components
//! separate so budget accounting can attribute them per entity.

use serde::Serialize;

use crate::scenario::Task;

/// Where a task runs: on the vehicle itself or on one server.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum OffloadTarget {
    Local,
    Server(usize),
}

/// A decoded per-vehicle decision. `requested_cpu_hz` is meaningful only
/// when the target is a server.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct OffloadDecision {
    pub target: OffloadTarget,
    pub requested_cpu_hz: f64,
}

/// Delay/energy/cost of one completed (or failed) task.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct CostBreakdown {
    pub delay_s: f64,
    pub energy_j: f64,
    pub cost: f64,
    pub deadline_overrun_s: f64,
    pub offload_delay_s: f64,
    pub compute_delay_s: f64,
    pub tx_energy_j: f64,
    pub compute_energy_j: f64,
}

/// The offload link cannot carry data (zero or non-finite rate).
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct LinkUnusable;

impl std::fmt::Display for LinkUnusable {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "offload link has zero rate")
    }
}

impl std::error::Error for LinkUnusable {}

pub fn local_delay(task: &Task, cpu_hz: f64) -> f64 {
    debug_assert!(cpu_hz > 0.0);
    task.size_bits * task.intensity_cpb / cpu_hz
}

pub fn local_energy(task: &Task, cpu_hz: f64, capacitance: f64) -> f64 {
    debug_assert!(cpu_hz > 0.0 && capacitance >= 0.0);
    capacitance * cpu_hz * cpu_hz * task.size_bits * task.intensity_cpb
}

pub fn edge_delay(task: &Task, rate_bps: f64, granted_cpu_hz: f64) -> Result<f64, LinkUnusable> {
    if !(rate_bps > 0.0) {
        return Err(LinkUnusable);
    }
    debug_assert!(granted_cpu_hz > 0.0);
    Ok(task.size_bits / rate_bps + task.size_bits * task.intensity_cpb / granted_cpu_hz)
}

pub fn edge_energy(
    task: &Task,
    tx_power_w: f64,
    rate_bps: f64,
    energy_per_cycle_j: f64,
) -> Result<f64, LinkUnusable> {
    if !(rate_bps > 0.0) {
        return Err(LinkUnusable);
    }
    Ok(tx_power_w * task.size_bits / rate_bps + energy_per_cycle_j * task.size_bits * task.intensity_cpb)
}

/// The concrete execution branch a decision resolved to.
#[derive(Debug, Clone, Copy)]
pub enum ExecutionPlan {
    Local {
        cpu_hz: f64,
        capacitance: f64,
    },
    Edge {
        rate_bps: f64,
        granted_cpu_hz: f64,
        tx_power_w: f64,
        energy_per_cycle_j: f64,
    },
}

/// Evaluate the full per-task breakdown for one execution branch.
pub fn task_cost(
    task: &Task,
    plan: ExecutionPlan,
    weight_delay: f64,
    weight_energy: f64,
) -> Result<CostBreakdown, LinkUnusable> {
    let (offload_delay, compute_delay, tx_energy, compute_energy) = match plan {
        ExecutionPlan::Local { cpu_hz, capacitance } => (
            0.0,
            local_delay(task, cpu_hz),
            0.0,
            local_energy(task, cpu_hz, capacitance),
        ),
        ExecutionPlan::Edge {
            rate_bps,
            granted_cpu_hz,
            tx_power_w,
            energy_per_cycle_j,
        } => {
            if !(rate_bps > 0.0) {
                return Err(LinkUnusable);
            }
            debug_assert!(granted_cpu_hz > 0.0);
            (
                task.size_bits / rate_bps,
                task.size_bits * task.intensity_cpb / granted_cpu_hz,
                tx_power_w * task.size_bits / rate_bps,
                energy_per_cycle_j * task.size_bits * task.intensity_cpb,
            )
        }
    };
    let delay = offload_delay + compute_delay;
    let energy = tx_energy + compute_energy;
    Ok(CostBreakdown {
        delay_s: delay,
        energy_j: energy,
        cost: weight_delay * delay + weight_energy * energy,
        deadline_overrun_s: (delay - task.deadline_s).max(0.0),
        offload_delay_s: offload_delay,
        compute_delay_s: compute_delay,
        tx_energy_j: tx_energy,
        compute_energy_j: compute_energy,
    })
}
