//! Exact brute-force solver for single-slot instances: the ground-truth
//! reference for the environment's cost accounting and a lower bound for
//! learned policies.
//!
//! An instance freezes everything stochastic (tasks, resources, realized
//! rates), leaving a deterministic assignment-plus-allocation problem. The
//! solver enumerates all `(M+1)^V` offload assignments; per server the CPU
//! split minimizing the weighted delay cost `sum_v w_D * l_v * mu_v / f_v`
//! subject to `sum f_v <= F_m` has the closed form
//! `f_v* = F_m * sqrt(w_D l_v mu_v) / sum_j sqrt(w_D l_j mu_j)`
//! (energy terms do not depend on f). Each assignment is scored with the
//! same cost formulas and soft constraint penalties the environment uses, so
//! policy gaps are apples-to-apples.

use serde::{Deserialize, Serialize};

use crate::baselines::{ecra_allocation, nto_decision, EvalPolicy};
use crate::compute::{task_cost, CostBreakdown, ExecutionPlan, OffloadDecision, OffloadTarget};
use crate::env::{decode_action, failed_offload_cost, resolve_allocation};
use crate::scenario::{
    generate_scenario, sample_task, MecServer, ScenarioConfig, Task,
};

/// Enumeration bounds: `(M+1)^V` assignments stay trivially small.
pub const MAX_VEHICLES: usize = 6;
pub const MAX_SERVERS: usize = 3;

#[derive(Debug)]
pub enum OracleError {
    /// Instance exceeds the enumeration bounds.
    SizeBound { vehicles: usize, servers: usize },
    /// Strict-feasibility mode found no assignment satisfying every
    /// constraint.
    NoFeasibleAssignment,
    Io(std::io::Error),
    Parse(String),
}

impl std::fmt::Display for OracleError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            OracleError::SizeBound { vehicles, servers } => write!(
                f,
                "instance of {vehicles} vehicles / {servers} servers exceeds the {MAX_VEHICLES}/{MAX_SERVERS} enumeration bound"
            ),
            OracleError::NoFeasibleAssignment => write!(f, "no assignment satisfies all constraints"),
            OracleError::Io(e) => write!(f, "instance i/o error: {e}"),
            OracleError::Parse(e) => write!(f, "instance parse error: {e}"),
        }
    }
}

impl std::error::Error for OracleError {}

/// Per-vehicle frozen state.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct InstanceVehicle {
    pub position_m: [f64; 2],
    pub cpu_hz: f64,
    pub energy_budget_j: f64,
    pub tx_power_w: f64,
    pub cpu_capacitance: f64,
    pub task_size_bits: f64,
    pub task_intensity_cpb: f64,
    pub task_deadline_s: f64,
}

impl InstanceVehicle {
    pub fn task(&self) -> Task {
        Task {
            size_bits: self.task_size_bits,
            intensity_cpb: self.task_intensity_cpb,
            deadline_s: self.task_deadline_s,
        }
    }
}

/// Per-server frozen state.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct InstanceServer {
    pub position_m: [f64; 2],
    pub cpu_hz: f64,
    pub energy_budget_j: f64,
}

/// A frozen single-slot problem: channel realizations are fixed, so the
/// oracle certifies per-realization decisions.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SlotInstance {
    pub vehicles: Vec<InstanceVehicle>,
    pub servers: Vec<InstanceServer>,
    /// Realized uplink rates, `rates_bps[v][m]`.
    pub rates_bps: Vec<Vec<f64>>,
    pub weight_delay: f64,
    pub weight_energy: f64,
    pub penalty_deadline: f64,
    pub penalty_energy: f64,
    pub energy_per_cycle_j: f64,
    pub slot_duration_s: f64,
}

impl SlotInstance {
    pub fn num_vehicles(&self) -> usize {
        self.vehicles.len()
    }

    pub fn num_servers(&self) -> usize {
        self.servers.len()
    }

    pub fn save(&self, path: impl AsRef<std::path::Path>) -> Result<(), OracleError> {
        let text = toml::to_string_pretty(self).map_err(|e| OracleError::Parse(e.to_string()))?;
        std::fs::write(path, text).map_err(OracleError::Io)
    }

    pub fn load(path: impl AsRef<std::path::Path>) -> Result<Self, OracleError> {
        let text = std::fs::read_to_string(path).map_err(OracleError::Io)?;
        toml::from_str(&text).map_err(|e: toml::de::Error| OracleError::Parse(e.to_string()))
    }
}

/// Freeze a random single-slot instance drawn the same way the environment
/// draws its slots.
pub fn random_instance(cfg: &ScenarioConfig, seed: u64) -> SlotInstance {
    use rand::SeedableRng;
    let (vehicles, servers) = generate_scenario(cfg, seed);
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed ^ 0x6f72_61_63_6c65);
    let tasks: Vec<Task> = (0..cfg.num_vehicles).map(|_| sample_task(&cfg.task, &mut rng)).collect();

    let rates: Vec<Vec<f64>> = vehicles
        .iter()
        .map(|v| {
            servers
                .iter()
                .map(|s| {
                    let dx = v.position_m[0] - s.position_m[0];
                    let dy = v.position_m[1] - s.position_m[1];
                    let d = (dx * dx + dy * dy).sqrt();
                    crate::channel::realize_channel(d, v.tx_power_w, &cfg.channel, &mut rng).rate_bps
                })
                .collect()
        })
        .collect();

    SlotInstance {
        vehicles: vehicles
            .iter()
            .zip(&tasks)
            .map(|(v, t)| InstanceVehicle {
                position_m: v.position_m,
                cpu_hz: v.cpu_hz,
                energy_budget_j: v.energy_budget_j,
                tx_power_w: v.tx_power_w,
                cpu_capacitance: v.cpu_capacitance,
                task_size_bits: t.size_bits,
                task_intensity_cpb: t.intensity_cpb,
                task_deadline_s: t.deadline_s,
            })
            .collect(),
        servers: servers
            .iter()
            .map(|s| InstanceServer {
                position_m: s.position_m,
                cpu_hz: s.cpu_hz,
                energy_budget_j: s.energy_budget_j,
            })
            .collect(),
        rates_bps: rates,
        weight_delay: cfg.cost.weight_delay,
        weight_energy: cfg.cost.weight_energy,
        penalty_deadline: cfg.cost.penalty_deadline,
        penalty_energy: cfg.cost.penalty_energy,
        energy_per_cycle_j: cfg.server.energy_per_cycle_j,
        slot_duration_s: cfg.slot_duration_s,
    }
}

/// Closed-form delay-cost-minimizing split of `capacity_hz` over positive
/// weighted workloads (`w_D * l * mu` per vehicle): allocations proportional
/// to the square roots of the workloads, saturating the capacity.
pub fn optimal_allocation(capacity_hz: f64, weighted_workloads: &[f64]) -> Vec<f64> {
    assert!(!weighted_workloads.is_empty());
    assert!(capacity_hz > 0.0);
    let roots: Vec<f64> = weighted_workloads.iter().map(|&w| w.max(0.0).sqrt()).collect();
    let total: f64 = roots.iter().sum();
    if total == 0.0 {
        // Degenerate zero-weight workloads: split equally.
        return ecra_allocation(capacity_hz, weighted_workloads.len());
    }
    roots.iter().map(|r| capacity_hz * r / total).collect()
}

/// Fully evaluated assignment: per-task breakdowns plus the penalized total.
#[derive(Debug, Clone)]
pub struct AssignmentEvaluation {
    pub per_vehicle: Vec<CostBreakdown>,
    pub cost_sum: f64,
    pub penalty_sum: f64,
    /// cost_sum + penalty_sum; the negated environment reward.
    pub total: f64,
    pub feasible: bool,
    /// Some task offloaded over a zero-rate link and could not complete.
    /// Such assignments are not valid schedules: the solver never selects
    /// them (the environment still scores them softly when a policy does).
    pub link_failed: bool,
}

/// Score one assignment with explicit per-vehicle allocations, using the
/// same formulas and penalty terms as the environment.
pub fn evaluate_assignment(
    instance: &SlotInstance,
    targets: &[OffloadTarget],
    allocations_hz: &[f64],
) -> AssignmentEvaluation {
    let num_servers = instance.num_servers();
    let mut per_vehicle = Vec::with_capacity(instance.num_vehicles());
    let mut cost_sum = 0.0;
    let mut overrun_sum = 0.0;
    let mut vehicle_over = 0.0;
    let mut server_used = vec![0.0; num_servers];
    let mut feasible = true;
    let mut link_failed = false;

    for (v, vehicle) in instance.vehicles.iter().enumerate() {
        let task = vehicle.task();
        let breakdown = match targets[v] {
            OffloadTarget::Local => {
                let b = task_cost(
                    &task,
                    ExecutionPlan::Local {
                        cpu_hz: vehicle.cpu_hz,
                        capacitance: vehicle.cpu_capacitance,
                    },
                    instance.weight_delay,
                    instance.weight_energy,
                )
                .expect("local always evaluates");
                if b.compute_energy_j > vehicle.energy_budget_j {
                    vehicle_over += b.compute_energy_j - vehicle.energy_budget_j;
                }
                b
            }
            OffloadTarget::Server(m) => {
                let rate = instance.rates_bps[v][m];
                let plan = ExecutionPlan::Edge {
                    rate_bps: rate,
                    granted_cpu_hz: allocations_hz[v],
                    tx_power_w: vehicle.tx_power_w,
                    energy_per_cycle_j: instance.energy_per_cycle_j,
                };
                let b = match task_cost(&task, plan, instance.weight_delay, instance.weight_energy) {
                    Ok(b) => {
                        server_used[m] += b.compute_energy_j;
                        b
                    }
                    Err(_) => {
                        feasible = false;
                        link_failed = true;
                        failed_offload_cost(
                            &task,
                            vehicle.tx_power_w,
                            instance.slot_duration_s,
                            instance.weight_delay,
                            instance.weight_energy,
                        )
                    }
                };
                if b.tx_energy_j > vehicle.energy_budget_j {
                    vehicle_over += b.tx_energy_j - vehicle.energy_budget_j;
                }
                b
            }
        };
        cost_sum += breakdown.cost;
        overrun_sum += breakdown.deadline_overrun_s;
        if breakdown.deadline_overrun_s > 0.0 {
            feasible = false;
        }
        per_vehicle.push(breakdown);
    }

    let mut server_over = 0.0;
    for (m, &used) in server_used.iter().enumerate() {
        if used > instance.servers[m].energy_budget_j {
            server_over += used - instance.servers[m].energy_budget_j;
        }
    }
    if vehicle_over > 0.0 || server_over > 0.0 {
        feasible = false;
    }

    let penalty_sum = instance.penalty_deadline * overrun_sum
        + instance.penalty_energy * (vehicle_over + server_over);
    AssignmentEvaluation {
        per_vehicle,
        cost_sum,
        penalty_sum,
        total: cost_sum + penalty_sum,
        feasible,
        link_failed,
    }
}

/// Allocations for one assignment under the closed-form rule.
pub fn assignment_allocations(instance: &SlotInstance, targets: &[OffloadTarget]) -> Vec<f64> {
    let mut allocations = vec![0.0; instance.num_vehicles()];
    for m in 0..instance.num_servers() {
        let assigned: Vec<usize> = targets
            .iter()
            .enumerate()
            .filter_map(|(v, t)| (*t == OffloadTarget::Server(m)).then_some(v))
            .collect();
        if assigned.is_empty() {
            continue;
        }
        let workloads: Vec<f64> = assigned
            .iter()
            .map(|&v| {
                instance.weight_delay
                    * instance.vehicles[v].task_size_bits
                    * instance.vehicles[v].task_intensity_cpb
            })
            .collect();
        let grants = optimal_allocation(instance.servers[m].cpu_hz, &workloads);
        for (&v, g) in assigned.iter().zip(grants) {
            allocations[v] = g;
        }
    }
    allocations
}

/// Whether infeasible assignments are penalized or discarded.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ObjectiveMode {
    /// Soft constraints: minimize cost + penalties (matches the reward).
    Penalized,
    /// Discard assignments that violate any constraint.
    StrictFeasible,
}

/// The exact minimum over all assignments.
#[derive(Debug, Clone)]
pub struct OracleSolution {
    pub targets: Vec<OffloadTarget>,
    pub allocations_hz: Vec<f64>,
    pub evaluation: AssignmentEvaluation,
    pub assignments_scored: usize,
}

fn targets_from_code(mut code: usize, num_vehicles: usize, num_servers: usize) -> Vec<OffloadTarget> {
    let radix = num_servers + 1;
    (0..num_vehicles)
        .map(|_| {
            let digit = code % radix;
            code /= radix;
            if digit == 0 {
                OffloadTarget::Local
            } else {
                OffloadTarget::Server(digit - 1)
            }
        })
        .collect()
}

/// Enumerate every offload assignment, apply the closed-form allocation per
/// server, and return the minimum under the requested objective.
/// Deterministic given the instance.
pub fn solve_exact(instance: &SlotInstance, mode: ObjectiveMode) -> Result<OracleSolution, OracleError> {
    let v = instance.num_vehicles();
    let m = instance.num_servers();
    if v > MAX_VEHICLES || m > MAX_SERVERS {
        return Err(OracleError::SizeBound {
            vehicles: v,
            servers: m,
        });
    }

    let count = (m + 1).pow(v as u32);
    let mut best: Option<OracleSolution> = None;
    for code in 0..count {
        let targets = targets_from_code(code, v, m);
        let allocations = assignment_allocations(instance, &targets);
        let evaluation = evaluate_assignment(instance, &targets, &allocations);
        if evaluation.link_failed {
            continue;
        }
        if mode == ObjectiveMode::StrictFeasible && !evaluation.feasible {
            continue;
        }
        let better = match &best {
            None => true,
            Some(b) => evaluation.total < b.evaluation.total,
        };
        if better {
            best = Some(OracleSolution {
                targets,
                allocations_hz: allocations,
                evaluation,
                assignments_scored: count,
            });
        }
    }
    best.ok_or(OracleError::NoFeasibleAssignment)
}

/// One policy-vs-oracle comparison row.
#[derive(Debug, Clone, Serialize)]
pub struct GapRow {
    pub instance: usize,
    pub policy_total: f64,
    pub oracle_total: f64,
    pub gap: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct GapReport {
    pub rows: Vec<GapRow>,
    pub mean_gap: f64,
}

/// Observation vector for one instance vehicle, matching the environment's
/// layout and normalization.
pub fn instance_observation(instance: &SlotInstance, vehicle: usize, cfg: &ScenarioConfig) -> Vec<f64> {
    let norm = |value: f64, range: [f64; 2]| {
        if range[1] > range[0] {
            (value - range[0]) / (range[1] - range[0])
        } else {
            0.0
        }
    };
    let v = &instance.vehicles[vehicle];
    let mut obs = Vec::with_capacity(6 + 2 * instance.num_servers());
    obs.push(v.position_m[0] / cfg.area_side_m);
    obs.push(v.position_m[1] / cfg.area_side_m);
    obs.push(norm(v.task_size_bits, cfg.task.size_range_bits));
    obs.push(norm(v.task_intensity_cpb, cfg.task.intensity_range_cpb));
    obs.push(norm(v.task_deadline_s, cfg.task.deadline_range_s));
    obs.push(norm(v.cpu_hz, cfg.vehicle.cpu_range_hz));
    for s in &instance.servers {
        obs.push(s.position_m[0] / cfg.area_side_m);
        obs.push(s.position_m[1] / cfg.area_side_m);
    }
    obs
}

/// Decisions a policy takes on one frozen instance.
pub fn policy_decisions(
    policy: &EvalPolicy<'_>,
    instance: &SlotInstance,
    cfg: &ScenarioConfig,
    rng: &mut impl rand::Rng,
) -> Vec<OffloadDecision> {
    let server_cpus: Vec<f64> = instance.servers.iter().map(|s| s.cpu_hz).collect();
    let mec_servers: Vec<MecServer> = instance
        .servers
        .iter()
        .map(|s| MecServer {
            position_m: s.position_m,
            cpu_hz: s.cpu_hz,
            energy_budget_j: s.energy_budget_j,
        })
        .collect();
    (0..instance.num_vehicles())
        .map(|v| {
            let raw: Vec<f64> = match policy {
                EvalPolicy::Learned(fleet)
                | EvalPolicy::NearestServer(fleet)
                | EvalPolicy::EqualAllocation(fleet) => {
                    fleet.act_greedy(v, &instance_observation(instance, v, cfg))
                }
                EvalPolicy::Random => (0..server_cpus.len() + 2)
                    .map(|_| rng.gen::<f64>() * 2.0 - 1.0)
                    .collect(),
            };
            match policy {
                EvalPolicy::NearestServer(_) => {
                    nto_decision(&raw, instance.vehicles[v].position_m, &mec_servers)
                }
                _ => decode_action(&raw, &server_cpus),
            }
        })
        .collect()
}

/// Resolve a policy's decisions into allocations the way the environment
/// would, then score them on the frozen instance.
pub fn policy_total_on_instance(
    policy: &EvalPolicy<'_>,
    instance: &SlotInstance,
    cfg: &ScenarioConfig,
    rng: &mut impl rand::Rng,
) -> f64 {
    let decisions = policy_decisions(policy, instance, cfg, rng);
    let targets: Vec<OffloadTarget> = decisions.iter().map(|d| d.target).collect();

    let mut allocations = vec![0.0; instance.num_vehicles()];
    for m in 0..instance.num_servers() {
        let assigned: Vec<usize> = targets
            .iter()
            .enumerate()
            .filter_map(|(v, t)| (*t == OffloadTarget::Server(m)).then_some(v))
            .collect();
        if assigned.is_empty() {
            continue;
        }
        let grants = match policy {
            EvalPolicy::EqualAllocation(_) => ecra_allocation(instance.servers[m].cpu_hz, assigned.len()),
            _ => {
                let requests: Vec<f64> =
                    assigned.iter().map(|&v| decisions[v].requested_cpu_hz).collect();
                resolve_allocation(&requests, instance.servers[m].cpu_hz)
            }
        };
        for (&v, g) in assigned.iter().zip(grants) {
            allocations[v] = g;
        }
    }
    evaluate_assignment(instance, &targets, &allocations).total
}

/// Mean relative optimality gap of a policy over an instance set.
pub fn policy_gap(
    policy: &EvalPolicy<'_>,
    instances: &[SlotInstance],
    cfg: &ScenarioConfig,
    seed: u64,
) -> Result<GapReport, OracleError> {
    use rand::SeedableRng;
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
    let mut rows = Vec::with_capacity(instances.len());
    for (i, instance) in instances.iter().enumerate() {
        let oracle = solve_exact(instance, ObjectiveMode::Penalized)?;
        let policy_total = policy_total_on_instance(policy, instance, cfg, &mut rng);
        let oracle_total = oracle.evaluation.total;
        rows.push(GapRow {
            instance: i,
            policy_total,
            oracle_total,
            gap: (policy_total - oracle_total) / oracle_total,
        });
    }
    let mean_gap = rows.iter().map(|r| r.gap).sum::<f64>() / rows.len().max(1) as f64;
    Ok(GapReport { rows, mean_gap })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scenario::RawConfig;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn desk_cfg(vehicles: usize, servers: usize) -> ScenarioConfig {
        let mut raw = RawConfig::default();
        raw.scenario.num_vehicles = vehicles;
        raw.scenario.num_servers = servers;
        raw.validate().unwrap()
    }

    #[test]
    fn single_vehicle_gets_everything() {
        let grants = optimal_allocation(9e10, &[123.0]);
        assert_eq!(grants, vec![9e10]);
    }

    #[test]
    fn identical_workloads_split_evenly() {
        let grants = optimal_allocation(8e10, &[5.0, 5.0]);
        assert!((grants[0] - 4e10).abs() < 1.0);
        assert!((grants[1] - 4e10).abs() < 1.0);
    }

    #[test]
    fn one_to_four_workload_ratio_splits_one_third_two_thirds() {
        let grants = optimal_allocation(9e10, &[2.0, 8.0]);
        assert!((grants[0] - 3e10).abs() / 3e10 < 1e-12);
        assert!((grants[1] - 6e10).abs() / 6e10 < 1e-12);
    }

    /// Weighted-delay objective the closed form minimizes.
    fn delay_cost(workloads: &[f64], grants: &[f64]) -> f64 {
        workloads.iter().zip(grants).map(|(w, f)| w / f).sum()
    }

    #[test]
    fn closed_form_beats_fine_grid_search() {
        let capacity = 1e11;
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        use rand::Rng;
        for _ in 0..20 {
            let workloads: Vec<f64> = (0..2).map(|_| rng.gen::<f64>() * 4e9 + 1e8).collect();
            let best = optimal_allocation(capacity, &workloads);
            let best_cost = delay_cost(&workloads, &best);
            let mut grid_best = f64::INFINITY;
            for i in 1..1000 {
                let f0 = capacity * i as f64 / 1000.0;
                let cost = delay_cost(&workloads, &[f0, capacity - f0]);
                grid_best = grid_best.min(cost);
            }
            assert!(
                best_cost <= grid_best * (1.0 + 1e-4),
                "closed form {best_cost} vs grid {grid_best}"
            );
        }
    }

    #[test]
    fn closed_form_beats_simplex_perturbations() {
        let capacity = 7e10;
        let workloads = [3e9, 1e9, 5e8];
        let best = optimal_allocation(capacity, &workloads);
        let best_cost = delay_cost(&workloads, &best);
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        use rand::Rng;
        for _ in 0..1000 {
            // Perturb and renormalize onto the capacity simplex.
            let mut perturbed: Vec<f64> = best
                .iter()
                .map(|f| (f + (rng.gen::<f64>() - 0.5) * 0.2 * capacity).max(1e6))
                .collect();
            let total: f64 = perturbed.iter().sum();
            for f in &mut perturbed {
                *f *= capacity / total;
            }
            let cost = delay_cost(&workloads, &perturbed);
            assert!(best_cost <= cost * (1.0 + 1e-12));
        }
    }

    fn tiny_instance(rates: Vec<Vec<f64>>) -> SlotInstance {
        SlotInstance {
            vehicles: vec![InstanceVehicle {
                position_m: [100.0, 100.0],
                cpu_hz: 2e9,
                energy_budget_j: 25.0,
                tx_power_w: 0.1,
                cpu_capacitance: 1e-28,
                task_size_bits: 2e6,
                task_intensity_cpb: 1000.0,
                task_deadline_s: 5.0,
            }],
            servers: vec![InstanceServer {
                position_m: [500.0, 500.0],
                cpu_hz: 5e10,
                energy_budget_j: 1000.0,
            }],
            rates_bps: rates,
            weight_delay: 0.5,
            weight_energy: 0.5,
            penalty_deadline: 1.0,
            penalty_energy: 1.0,
            energy_per_cycle_j: 8.2e-28,
            slot_duration_s: 1.0,
        }
    }

    #[test]
    fn dominant_local_cost_picks_local() {
        // A crawling link makes offloading strictly worse than local.
        let instance = tiny_instance(vec![vec![1e3]]);
        let solution = solve_exact(&instance, ObjectiveMode::Penalized).unwrap();
        assert_eq!(solution.targets, vec![OffloadTarget::Local]);
    }

    #[test]
    fn zero_rates_force_local() {
        let cfg = desk_cfg(3, 2);
        let mut instance = random_instance(&cfg, 5);
        for row in &mut instance.rates_bps {
            row.fill(0.0);
        }
        let solution = solve_exact(&instance, ObjectiveMode::Penalized).unwrap();
        assert!(solution.targets.iter().all(|t| *t == OffloadTarget::Local));
    }

    #[test]
    fn oracle_is_minimum_over_every_enumerated_assignment() {
        let cfg = desk_cfg(2, 1);
        for seed in 0..10 {
            let instance = random_instance(&cfg, seed);
            let solution = solve_exact(&instance, ObjectiveMode::Penalized).unwrap();
            // Hand enumeration through the shared compute path.
            for code in 0..4usize {
                let targets = targets_from_code(code, 2, 1);
                let allocations = assignment_allocations(&instance, &targets);
                let eval = evaluate_assignment(&instance, &targets, &allocations);
                assert!(
                    solution.evaluation.total <= eval.total * (1.0 + 1e-12),
                    "assignment {code} beats the oracle"
                );
            }
        }
    }

    #[test]
    fn size_bound_is_enforced() {
        let cfg = desk_cfg(7, 2);
        let instance = random_instance(&cfg, 1);
        match solve_exact(&instance, ObjectiveMode::Penalized) {
            Err(OracleError::SizeBound { vehicles: 7, servers: 2 }) => {}
            other => panic!("expected size bound error, got {other:?}"),
        }
    }

    #[test]
    fn strict_mode_discards_infeasible_assignments() {
        // Deadline so tight nothing is feasible.
        let mut instance = tiny_instance(vec![vec![1e3]]);
        instance.vehicles[0].task_deadline_s = 1e-6;
        match solve_exact(&instance, ObjectiveMode::StrictFeasible) {
            Err(OracleError::NoFeasibleAssignment) => {}
            other => panic!("expected infeasible, got {other:?}"),
        }
        // The penalized objective still returns a minimum.
        assert!(solve_exact(&instance, ObjectiveMode::Penalized).is_ok());
    }

    #[test]
    fn oracle_self_gap_is_zero() {
        let cfg = desk_cfg(2, 1);
        let instance = random_instance(&cfg, 3);
        let solution = solve_exact(&instance, ObjectiveMode::Penalized).unwrap();
        let again = evaluate_assignment(&instance, &solution.targets, &solution.allocations_hz);
        assert_eq!(solution.evaluation.total, again.total);
    }

    #[test]
    fn random_policy_gap_is_nonnegative_on_seeded_set() {
        let cfg = desk_cfg(3, 2);
        let instances: Vec<SlotInstance> = (0..20).map(|s| random_instance(&cfg, s)).collect();
        let report = policy_gap(&EvalPolicy::Random, &instances, &cfg, 11).unwrap();
        for row in &report.rows {
            assert!(row.gap >= -1e-12, "instance {} gap {}", row.instance, row.gap);
        }
        assert!(report.mean_gap >= 0.0);
    }

    #[test]
    fn instance_files_roundtrip() {
        let cfg = desk_cfg(2, 2);
        let instance = random_instance(&cfg, 9);
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("instance.toml");
        instance.save(&path).unwrap();
        let loaded = SlotInstance::load(&path).unwrap();
        assert_eq!(instance.rates_bps, loaded.rates_bps);
        assert_eq!(instance.vehicles[0].task_size_bits, loaded.vehicles[0].task_size_bits);
        let a = solve_exact(&instance, ObjectiveMode::Penalized).unwrap();
        let b = solve_exact(&loaded, ObjectiveMode::Penalized).unwrap();
        assert_eq!(a.evaluation.total, b.evaluation.total);
    }

    #[test]
    fn instance_observation_matches_environment_layout() {
        let cfg = desk_cfg(2, 2);
        let instance = random_instance(&cfg, 4);
        let obs = instance_observation(&instance, 0, &cfg);
        assert_eq!(obs.len(), 6 + 2 * 2);
        assert!(obs.iter().all(|&v| (0.0..=1.0).contains(&v)));
    }
}
