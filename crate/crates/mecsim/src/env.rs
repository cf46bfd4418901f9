//! The multi-agent offloading environment: observations, action decoding,
//! allocation conflict resolution, cost accounting, shared reward, and slot
//! dynamics.
//!
//! # Vector layouts
//!
//! These orders are stable; trajectory dumps embed a format tag (see
//! `metrics`) so downstream tooling can detect changes.
//!
//! Observation of agent `n` (length `6 + 2*M`), all entries normalized to
//! [0, 1] by the configured ranges (positions by the area side):
//!
//! ```text
//! [ x_n, y_n, task_size, task_intensity, task_deadline, cpu_n,
//!   server0_x, server0_y, ..., serverM-1_x, serverM-1_y ]
//! ```
//!
//! Global state (length `7*V + 4*M`), same normalization:
//!
//! ```text
//! per vehicle v: [ x_v, y_v, cpu_v, energy_budget_v,
//!                  task_size_v, task_intensity_v, task_deadline_v ]
//! per server m: [ x_m, y_m, cpu_m, energy_budget_m ]
//! ```
//!
//! The slot index is tracked by the environment but deliberately kept out of
//! the flat state so critic inputs stay stationary across an episode.
//!
//! Raw agent actions are `M + 2` reals in [-1, 1]: entries `0..=M` are
//! target scores (argmax decides; index 0 = local, index m = server m-1,
//! ties to the lower index) and the last entry squashes to a requested CPU
//! fraction in [[`MIN_CPU_FRACTION`], 1].
//!
//! A normalized feature with a degenerate configured range (hi == lo) is
//! defined as 0.
//!
//! All agents receive the same scalar reward:
//! `r = -sum(costs) - phi_T * sum(deadline overruns)
//!    - phi_E * (vehicle energy overruns + server energy overruns)`.
//! A zero-rate offload cannot complete: it is scored as a deadline-violating
//! outcome with delay `deadline + slot` (overrun of exactly one slot) and
//! transmit energy `p * slot`.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::baselines::ecra_allocation;
use crate::channel::realize_channel;
use crate::compute::{task_cost, CostBreakdown, ExecutionPlan, OffloadDecision, OffloadTarget};
use crate::mobility::advance_vehicle;
use crate::scenario::{
    generate_scenario, sample_task, CostParams, MecServer, ScenarioConfig, Task, VehicleState,
};

/// Smallest CPU fraction an agent can request from a server.
pub const MIN_CPU_FRACTION: f64 = 0.05;

const DYN_STREAM: u64 = 0x6d6f_6269_6c69_7479; // mobility + task draws
const CHANNEL_STREAM: u64 = 0x6368_616e_6e65_6c73; // channel draws

/// How a server splits its CPU among the vehicles that picked it.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum AllocationRule {
    /// Grant as requested; scale proportionally when oversubscribed.
    ProportionalToRequest,
    /// Ignore requests and split the full capacity equally.
    EqualShare,
}

/// Per-slot constraint bookkeeping.
#[derive(Debug, Clone, serde::Serialize)]
pub struct SlotViolations {
    /// Per vehicle: the task missed its deadline (or could not complete).
    pub deadline: Vec<bool>,
    /// Per vehicle: seconds past the deadline.
    pub deadline_overrun_s: Vec<f64>,
    /// Per vehicle: joules above the per-slot energy budget.
    pub vehicle_energy_over_j: Vec<f64>,
    /// Per server: joules above the per-slot energy budget.
    pub server_energy_over_j: Vec<f64>,
}

impl SlotViolations {
    pub fn any(&self) -> bool {
        self.deadline.iter().any(|&d| d)
            || self.vehicle_energy_over_j.iter().any(|&e| e > 0.0)
            || self.server_energy_over_j.iter().any(|&e| e > 0.0)
    }
}

/// Everything one step produces. The reward is shared: every agent receives
/// the same scalar by construction.
#[derive(Debug, Clone)]
pub struct StepOutcome {
    pub observations: Vec<Vec<f64>>,
    pub reward: f64,
    pub costs: Vec<CostBreakdown>,
    pub decisions: Vec<OffloadDecision>,
    /// Granted server CPU per vehicle (0 for local execution).
    pub granted_cpu_hz: Vec<f64>,
    pub violations: SlotViolations,
    pub done: bool,
}

/// Decode one raw actor output into an offload decision.
pub fn decode_action(raw: &[f64], server_cpus_hz: &[f64]) -> OffloadDecision {
    let num_servers = server_cpus_hz.len();
    assert_eq!(raw.len(), num_servers + 2, "raw action length");
    debug_assert!(raw.iter().all(|v| v.is_finite()));

    let mut best = 0usize;
    for idx in 1..=num_servers {
        if raw[idx] > raw[best] {
            best = idx;
        }
    }
    let fraction = ((raw[num_servers + 1] + 1.0) / 2.0).clamp(MIN_CPU_FRACTION, 1.0);
    if best == 0 {
        OffloadDecision {
            target: OffloadTarget::Local,
            requested_cpu_hz: 0.0,
        }
    } else {
        OffloadDecision {
            target: OffloadTarget::Server(best - 1),
            requested_cpu_hz: fraction * server_cpus_hz[best - 1],
        }
    }
}

/// Proportionally scale requests down when they oversubscribe the capacity.
pub fn resolve_allocation(requested_cpu_hz: &[f64], capacity_hz: f64) -> Vec<f64> {
    debug_assert!(requested_cpu_hz.iter().all(|&r| r > 0.0));
    let total: f64 = requested_cpu_hz.iter().sum();
    if total <= capacity_hz {
        requested_cpu_hz.to_vec()
    } else {
        let scale = capacity_hz / total;
        requested_cpu_hz.iter().map(|r| r * scale).collect()
    }
}

/// Shared reward from per-task costs and constraint overruns.
pub fn compute_reward(costs: &[CostBreakdown], violations: &SlotViolations, params: &CostParams) -> f64 {
    let cost_sum: f64 = costs.iter().map(|c| c.cost).sum();
    let overrun_sum: f64 = violations.deadline_overrun_s.iter().sum();
    let energy_over: f64 = violations.vehicle_energy_over_j.iter().sum::<f64>()
        + violations.server_energy_over_j.iter().sum::<f64>();
    -cost_sum - params.penalty_deadline * overrun_sum - params.penalty_energy * energy_over
}

/// The steppable Markov game. One instance is single-threaded; run several
/// instances with distinct seeds for parallel rollouts.
pub struct Environment {
    cfg: ScenarioConfig,
    vehicles: Vec<VehicleState>,
    servers: Vec<MecServer>,
    tasks: Vec<Task>,
    /// Realized uplink rates for the current slot, `V x M` row-major.
    rates_bps: Vec<f64>,
    slot: usize,
    dyn_rng: ChaCha8Rng,
    channel_rng: ChaCha8Rng,
    allocation_rule: AllocationRule,
}

impl Environment {
    pub fn new(cfg: ScenarioConfig) -> Self {
        let num_vehicles = cfg.num_vehicles;
        let num_servers = cfg.num_servers;
        let seed = cfg.rng_seed;
        let mut env = Self {
            cfg,
            vehicles: Vec::new(),
            servers: Vec::new(),
            tasks: Vec::new(),
            rates_bps: vec![0.0; num_vehicles * num_servers],
            slot: 0,
            dyn_rng: ChaCha8Rng::seed_from_u64(0),
            channel_rng: ChaCha8Rng::seed_from_u64(0),
            allocation_rule: AllocationRule::ProportionalToRequest,
        };
        env.reset(seed);
        env
    }

    /// Start a fresh episode: new scenario, new slot-0 tasks, slot = 0.
    pub fn reset(&mut self, seed: u64) -> Vec<Vec<f64>> {
        self.reset_with_channel_seed(seed, seed ^ CHANNEL_STREAM)
    }

    /// As [`reset`](Self::reset) with an independent channel stream, so tests
    /// can vary channel draws while keeping mobility and tasks fixed.
    pub fn reset_with_channel_seed(&mut self, seed: u64, channel_seed: u64) -> Vec<Vec<f64>> {
        let (vehicles, servers) = generate_scenario(&self.cfg, seed);
        self.vehicles = vehicles;
        self.servers = servers;
        self.dyn_rng = ChaCha8Rng::seed_from_u64(seed ^ DYN_STREAM);
        self.channel_rng = ChaCha8Rng::seed_from_u64(channel_seed);
        self.tasks = (0..self.cfg.num_vehicles)
            .map(|_| sample_task(&self.cfg.task, &mut self.dyn_rng))
            .collect();
        self.slot = 0;
        self.observations()
    }

    /// Build an environment from explicit entity states (oracle instance
    /// generation and targeted tests).
    pub fn from_parts(
        cfg: ScenarioConfig,
        vehicles: Vec<VehicleState>,
        servers: Vec<MecServer>,
        tasks: Vec<Task>,
        seed: u64,
    ) -> Self {
        assert_eq!(vehicles.len(), cfg.num_vehicles);
        assert_eq!(servers.len(), cfg.num_servers);
        assert_eq!(tasks.len(), cfg.num_vehicles);
        let rates = vec![0.0; cfg.num_vehicles * cfg.num_servers];
        Self {
            dyn_rng: ChaCha8Rng::seed_from_u64(seed ^ DYN_STREAM),
            channel_rng: ChaCha8Rng::seed_from_u64(seed ^ CHANNEL_STREAM),
            cfg,
            vehicles,
            servers,
            tasks,
            rates_bps: rates,
            slot: 0,
            allocation_rule: AllocationRule::ProportionalToRequest,
        }
    }

    pub fn set_allocation_rule(&mut self, rule: AllocationRule) {
        self.allocation_rule = rule;
    }

    pub fn cfg(&self) -> &ScenarioConfig {
        &self.cfg
    }

    pub fn vehicles(&self) -> &[VehicleState] {
        &self.vehicles
    }

    pub fn servers(&self) -> &[MecServer] {
        &self.servers
    }

    pub fn tasks(&self) -> &[Task] {
        &self.tasks
    }

    pub fn slot(&self) -> usize {
        self.slot
    }

    /// Realized rate of the (vehicle, server) link for the current slot.
    /// Meaningful only after a step has realized the slot's channels.
    pub fn rate_bps(&self, vehicle: usize, server: usize) -> f64 {
        self.rates_bps[vehicle * self.cfg.num_servers + server]
    }

    pub fn num_agents(&self) -> usize {
        self.cfg.num_vehicles
    }

    pub fn observation_dim(&self) -> usize {
        6 + 2 * self.cfg.num_servers
    }

    pub fn global_state_dim(&self) -> usize {
        7 * self.cfg.num_vehicles + 4 * self.cfg.num_servers
    }

    pub fn action_dim(&self) -> usize {
        self.cfg.num_servers + 2
    }

    fn norm(value: f64, range: [f64; 2]) -> f64 {
        if range[1] > range[0] {
            (value - range[0]) / (range[1] - range[0])
        } else {
            0.0
        }
    }

    /// Local observation of one agent (layout in the module docs).
    pub fn observation(&self, agent: usize) -> Vec<f64> {
        let cfg = &self.cfg;
        let v = &self.vehicles[agent];
        let t = &self.tasks[agent];
        let mut obs = Vec::with_capacity(self.observation_dim());
        obs.push(v.position_m[0] / cfg.area_side_m);
        obs.push(v.position_m[1] / cfg.area_side_m);
        obs.push(Self::norm(t.size_bits, cfg.task.size_range_bits));
        obs.push(Self::norm(t.intensity_cpb, cfg.task.intensity_range_cpb));
        obs.push(Self::norm(t.deadline_s, cfg.task.deadline_range_s));
        obs.push(Self::norm(v.cpu_hz, cfg.vehicle.cpu_range_hz));
        for s in &self.servers {
            obs.push(s.position_m[0] / cfg.area_side_m);
            obs.push(s.position_m[1] / cfg.area_side_m);
        }
        obs
    }

    pub fn observations(&self) -> Vec<Vec<f64>> {
        (0..self.num_agents()).map(|n| self.observation(n)).collect()
    }

    /// Normalized flat global state (layout in the module docs).
    pub fn global_state(&self) -> Vec<f64> {
        let cfg = &self.cfg;
        let mut state = Vec::with_capacity(self.global_state_dim());
        for (v, t) in self.vehicles.iter().zip(&self.tasks) {
            state.push(v.position_m[0] / cfg.area_side_m);
            state.push(v.position_m[1] / cfg.area_side_m);
            state.push(Self::norm(v.cpu_hz, cfg.vehicle.cpu_range_hz));
            state.push(Self::norm(v.energy_budget_j, cfg.vehicle.energy_budget_range_j));
            state.push(Self::norm(t.size_bits, cfg.task.size_range_bits));
            state.push(Self::norm(t.intensity_cpb, cfg.task.intensity_range_cpb));
            state.push(Self::norm(t.deadline_s, cfg.task.deadline_range_s));
        }
        for s in &self.servers {
            state.push(s.position_m[0] / cfg.area_side_m);
            state.push(s.position_m[1] / cfg.area_side_m);
            state.push(Self::norm(s.cpu_hz, cfg.server.cpu_range_hz));
            state.push(if cfg.server.energy_budget_j > 0.0 {
                s.energy_budget_j / cfg.server.energy_budget_j
            } else {
                0.0
            });
        }
        state
    }

    /// Decode this slot's raw joint action.
    pub fn decode_joint(&self, raw_actions: &[Vec<f64>]) -> Vec<OffloadDecision> {
        assert_eq!(raw_actions.len(), self.num_agents(), "one action per agent");
        let server_cpus: Vec<f64> = self.servers.iter().map(|s| s.cpu_hz).collect();
        raw_actions.iter().map(|raw| decode_action(raw, &server_cpus)).collect()
    }

    /// Step with raw actor outputs.
    pub fn step(&mut self, raw_actions: &[Vec<f64>]) -> StepOutcome {
        let decisions = self.decode_joint(raw_actions);
        self.step_decoded(&decisions)
    }

    /// Realize this slot's full rate matrix. Unconditional and in fixed
    /// order, so policies evaluated on the same seed see identical channels.
    fn realize_rates(&mut self) {
        for v in 0..self.cfg.num_vehicles {
            for m in 0..self.cfg.num_servers {
                let dx = self.vehicles[v].position_m[0] - self.servers[m].position_m[0];
                let dy = self.vehicles[v].position_m[1] - self.servers[m].position_m[1];
                let distance = (dx * dx + dy * dy).sqrt();
                let realization = realize_channel(
                    distance,
                    self.vehicles[v].tx_power_w,
                    &self.cfg.channel,
                    &mut self.channel_rng,
                );
                self.rates_bps[v * self.cfg.num_servers + m] = realization.rate_bps;
            }
        }
    }

    /// Step with already-decoded decisions (used by the hybrid baselines).
    pub fn step_decoded(&mut self, decisions: &[OffloadDecision]) -> StepOutcome {
        let slot_duration = self.cfg.slot_duration_s;
        let num_vehicles = self.cfg.num_vehicles;
        let num_servers = self.cfg.num_servers;
        assert!(self.slot < self.cfg.horizon_slots, "episode already finished");
        assert_eq!(decisions.len(), num_vehicles);

        self.realize_rates();

        // Collect requests per server and resolve grants.
        let mut assigned: Vec<Vec<usize>> = vec![Vec::new(); num_servers];
        for (v, d) in decisions.iter().enumerate() {
            if let OffloadTarget::Server(m) = d.target {
                assert!(m < num_servers, "decision targets unknown server");
                assigned[m].push(v);
            }
        }
        let mut granted = vec![0.0; num_vehicles];
        for (m, vehicles) in assigned.iter().enumerate() {
            if vehicles.is_empty() {
                continue;
            }
            let grants = match self.allocation_rule {
                AllocationRule::ProportionalToRequest => {
                    let requests: Vec<f64> =
                        vehicles.iter().map(|&v| decisions[v].requested_cpu_hz).collect();
                    resolve_allocation(&requests, self.servers[m].cpu_hz)
                }
                AllocationRule::EqualShare => ecra_allocation(self.servers[m].cpu_hz, vehicles.len()),
            };
            for (&v, g) in vehicles.iter().zip(grants) {
                granted[v] = g;
            }
        }

        // Per-task cost accounting.
        let (w_delay, w_energy) = (self.cfg.cost.weight_delay, self.cfg.cost.weight_energy);
        let mut costs = Vec::with_capacity(num_vehicles);
        let mut deadline_flags = vec![false; num_vehicles];
        let mut overruns = vec![0.0; num_vehicles];
        let mut vehicle_consumed = vec![0.0; num_vehicles];
        let mut server_consumed = vec![0.0; num_servers];
        for v in 0..num_vehicles {
            let task = &self.tasks[v];
            let vehicle = &self.vehicles[v];
            let breakdown = match decisions[v].target {
                OffloadTarget::Local => {
                    let b = task_cost(
                        task,
                        ExecutionPlan::Local {
                            cpu_hz: vehicle.cpu_hz,
                            capacitance: vehicle.cpu_capacitance,
                        },
                        w_delay,
                        w_energy,
                    )
                    .expect("local execution cannot fail");
                    vehicle_consumed[v] = b.compute_energy_j;
                    b
                }
                OffloadTarget::Server(m) => {
                    let rate = self.rates_bps[v * num_servers + m];
                    let plan = ExecutionPlan::Edge {
                        rate_bps: rate,
                        granted_cpu_hz: granted[v],
                        tx_power_w: vehicle.tx_power_w,
                        energy_per_cycle_j: self.cfg.server.energy_per_cycle_j,
                    };
                    let b = match task_cost(task, plan, w_delay, w_energy) {
                        Ok(b) => {
                            server_consumed[m] += b.compute_energy_j;
                            b
                        }
                        // Unusable link: the task cannot complete this slot.
                        Err(_) => {
                            deadline_flags[v] = true;
                            failed_offload_cost(task, vehicle.tx_power_w, slot_duration, w_delay, w_energy)
                        }
                    };
                    vehicle_consumed[v] = b.tx_energy_j;
                    b
                }
            };
            deadline_flags[v] |= breakdown.deadline_overrun_s > 0.0;
            overruns[v] = breakdown.deadline_overrun_s;
            costs.push(breakdown);
        }

        let violations = SlotViolations {
            deadline: deadline_flags,
            deadline_overrun_s: overruns,
            vehicle_energy_over_j: vehicle_consumed
                .iter()
                .zip(&self.vehicles)
                .map(|(&used, veh)| (used - veh.energy_budget_j).max(0.0))
                .collect(),
            server_energy_over_j: server_consumed
                .iter()
                .zip(&self.servers)
                .map(|(&used, srv)| (used - srv.energy_budget_j).max(0.0))
                .collect(),
        };
        let reward = compute_reward(&costs, &violations, &self.cfg.cost);

        // Slot dynamics: motion, fresh tasks, clock.
        for vehicle in &mut self.vehicles {
            advance_vehicle(
                vehicle,
                &self.cfg.mobility,
                self.cfg.slot_duration_s,
                self.cfg.area_side_m,
                &mut self.dyn_rng,
            );
        }
        self.tasks = (0..num_vehicles)
            .map(|_| sample_task(&self.cfg.task, &mut self.dyn_rng))
            .collect();
        self.slot += 1;

        StepOutcome {
            observations: self.observations(),
            reward,
            costs,
            decisions: decisions.to_vec(),
            granted_cpu_hz: granted,
            violations,
            done: self.slot == self.cfg.horizon_slots,
        }
    }
}

/// Cost record for a task whose offload link carried no data: one slot of
/// transmission at full power, delay one slot past the deadline.
pub fn failed_offload_cost(
    task: &Task,
    tx_power_w: f64,
    slot_duration_s: f64,
    weight_delay: f64,
    weight_energy: f64,
) -> CostBreakdown {
    let delay = task.deadline_s + slot_duration_s;
    let energy = tx_power_w * slot_duration_s;
    CostBreakdown {
        delay_s: delay,
        energy_j: energy,
        cost: weight_delay * delay + weight_energy * energy,
        deadline_overrun_s: slot_duration_s,
        offload_delay_s: delay,
        compute_delay_s: 0.0,
        tx_energy_j: energy,
        compute_energy_j: 0.0,
    }
}
