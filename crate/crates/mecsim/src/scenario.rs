//! Scenario configuration, domain entities, unit conversions, and seeded
//! random scenario generation.
//!
//! Configuration lives in a TOML file with nested sections (see
//! `configs/default_scenario.toml` for the full schema with the default
//! parameter set). Human units in the file (Mb, GHz, MHz, dBm) are converted
//! to SI (bits, Hz, W) on load; everything downstream works in SI.
//!
//! Any config key can be overridden through the environment with the
//! `MECSIM_<SECTION>__<KEY>` convention, e.g.
//! `MECSIM_SCENARIO__NUM_VEHICLES=8` or `MECSIM_TRAINING__ACTOR_HIDDEN='[64,64]'`.
//! Values are parsed as TOML fragments, falling back to plain strings.

use std::fmt;
use std::path::Path;

use rand::Rng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

/// Convert a dBm power level to watts: `10^((p - 30) / 10)`.
pub fn dbm_to_watts(dbm: f64) -> f64 {
    10f64.powf((dbm - 30.0) / 10.0)
}

const MEGABIT: f64 = 1e6;
const GIGA: f64 = 1e9;
const MEGA: f64 = 1e6;

/// Errors produced while loading or validating a scenario configuration.
#[derive(Debug)]
pub enum ConfigError {
    Io(std::io::Error),
    Parse(String),
    /// A field is present but violates an invariant; names the field.
    Validation { field: &'static str, reason: String },
}

impl fmt::Display for ConfigError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ConfigError::Io(e) => write!(f, "config i/o error: {e}"),
            ConfigError::Parse(e) => write!(f, "config parse error: {e}"),
            ConfigError::Validation { field, reason } => {
                write!(f, "invalid config field `{field}`: {reason}")
            }
        }
    }
}

impl std::error::Error for ConfigError {}

/// How the LoS/NLoS mixture of the channel gain is realized.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LosMixture {
    /// Probability-weighted sum of the two per-class realized gains.
    Expected,
    /// Bernoulli draw of the link class, then a single-class realization.
    Bernoulli,
}

fn default_los_mixture() -> LosMixture {
    LosMixture::Expected
}

// ---------------------------------------------------------------------------
// Raw (file-level) representation: human units, serde-checked required fields.
// ---------------------------------------------------------------------------

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RawConfig {
    pub scenario: RawScenarioSection,
    pub mobility: RawMobilitySection,
    pub task: RawTaskSection,
    pub vehicle: RawVehicleSection,
    pub server: RawServerSection,
    pub channel: RawChannelSection,
    pub cost: RawCostSection,
    #[serde(default)]
    pub training: TrainingParams,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RawScenarioSection {
    pub num_vehicles: usize,
    pub num_servers: usize,
    pub area_side_m: f64,
    pub slot_duration_s: f64,
    pub horizon_slots: usize,
    pub rng_seed: u64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RawMobilitySection {
    pub memory_degree: f64,
    pub vel_std_mps: f64,
    pub vel_mean_range_mps: [f64; 2],
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RawTaskSection {
    pub size_range_mb: [f64; 2],
    pub intensity_range_cpb: [f64; 2],
    pub deadline_range_s: [f64; 2],
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RawVehicleSection {
    pub cpu_range_ghz: [f64; 2],
    pub energy_budget_range_j: [f64; 2],
    pub tx_power_range_dbm: [f64; 2],
    pub cpu_capacitance: f64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RawServerSection {
    pub cpu_range_ghz: [f64; 2],
    pub energy_budget_j: f64,
    pub energy_per_cycle_j: f64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RawChannelSection {
    pub bandwidth_mhz: f64,
    pub noise_power_dbm: f64,
    pub carrier_freq_ghz: f64,
    pub light_speed_mps: f64,
    pub ref_distance_m: f64,
    pub alpha1_m: f64,
    pub alpha2_m: f64,
    pub nakagami_m_los: f64,
    pub nakagami_m_nlos: f64,
    pub pathloss_exp_los: f64,
    pub pathloss_exp_nlos: f64,
    pub shadow_std_los_db: f64,
    pub shadow_std_nlos_db: f64,
    #[serde(default = "default_los_mixture")]
    pub los_mixture: LosMixture,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RawCostSection {
    pub weight_delay: f64,
    pub weight_energy: f64,
    pub penalty_deadline: f64,
    pub penalty_energy: f64,
}

/// Learner hyperparameters. All fields carry defaults so partial `[training]`
/// sections (or none at all) are accepted.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default)]
pub struct TrainingParams {
    pub episodes: usize,
    pub discount: f64,
    pub actor_lr: f64,
    pub critic_lr: f64,
    pub soft_update_rate: f64,
    pub buffer_capacity: usize,
    pub batch_size: usize,
    /// Updates start once the buffer holds `warmup_factor * batch_size` items.
    pub warmup_factor: usize,
    /// One update round (all agents) every `update_every` environment steps.
    pub update_every: usize,
    pub noise_std_start: f64,
    pub noise_std_end: f64,
    pub actor_hidden: Vec<usize>,
    pub critic_hidden: Vec<usize>,
    /// All agents share one centralized critic when true.
    pub shared_critic: bool,
}

impl Default for TrainingParams {
    fn default() -> Self {
        Self {
            episodes: 3000,
            discount: 0.95,
            actor_lr: 5e-4,
            critic_lr: 5e-4,
            soft_update_rate: 5e-3,
            buffer_capacity: 100_000,
            batch_size: 128,
            warmup_factor: 10,
            update_every: 1,
            noise_std_start: 0.3,
            noise_std_end: 0.05,
            actor_hidden: vec![128, 128],
            critic_hidden: vec![256, 256],
            shared_critic: true,
        }
    }
}

impl Default for RawConfig {
    fn default() -> Self {
        Self {
            scenario: RawScenarioSection {
                num_vehicles: 20,
                num_servers: 4,
                area_side_m: 1000.0,
                slot_duration_s: 1.0,
                horizon_slots: 100,
                rng_seed: 1,
            },
            mobility: RawMobilitySection {
                memory_degree: 0.9,
                vel_std_mps: 2.0,
                vel_mean_range_mps: [10.0, 25.0],
            },
            task: RawTaskSection {
                size_range_mb: [1.0, 3.0],
                intensity_range_cpb: [500.0, 1500.0],
                deadline_range_s: [0.1, 5.0],
            },
            vehicle: RawVehicleSection {
                cpu_range_ghz: [1.0, 5.0],
                energy_budget_range_j: [5.0, 25.0],
                tx_power_range_dbm: [10.0, 25.0],
                cpu_capacitance: 1e-28,
            },
            server: RawServerSection {
                cpu_range_ghz: [50.0, 100.0],
                energy_budget_j: 1000.0,
                energy_per_cycle_j: 8.2e-28,
            },
            channel: RawChannelSection {
                bandwidth_mhz: 20.0,
                noise_power_dbm: -98.0,
                carrier_freq_ghz: 2.0,
                light_speed_mps: 3e8,
                ref_distance_m: 1.0,
                alpha1_m: 18.0,
                alpha2_m: 36.0,
                nakagami_m_los: 4.0,
                nakagami_m_nlos: 2.0,
                pathloss_exp_los: 2.42,
                pathloss_exp_nlos: 4.28,
                shadow_std_los_db: 4.0,
                shadow_std_nlos_db: 6.0,
                los_mixture: LosMixture::Expected,
            },
            cost: RawCostSection {
                weight_delay: 0.5,
                weight_energy: 0.5,
                penalty_deadline: 1.0,
                penalty_energy: 1.0,
            },
            training: TrainingParams::default(),
        }
    }
}

// ---------------------------------------------------------------------------
// Validated, SI-unit configuration.
// ---------------------------------------------------------------------------

/// Fully validated scenario configuration in SI units. Immutable after
/// construction; safe to share across threads.
#[derive(Debug, Clone, Serialize)]
pub struct ScenarioConfig {
    pub num_vehicles: usize,
    pub num_servers: usize,
    pub area_side_m: f64,
    pub slot_duration_s: f64,
    pub horizon_slots: usize,
    pub rng_seed: u64,

    pub mobility: MobilityParams,
    pub task: TaskParams,
    pub vehicle: VehicleParams,
    pub server: ServerParams,
    pub channel: ChannelParams,
    pub cost: CostParams,
    pub training: TrainingParams,
}

#[derive(Debug, Clone, Serialize)]
pub struct MobilityParams {
    /// Memory degree of the velocity process, in [0, 1].
    pub memory_degree: f64,
    /// Asymptotic standard deviation of velocity per axis, m/s.
    pub vel_std_mps: f64,
    /// Initial speed magnitudes are drawn uniformly from this range, m/s.
    pub vel_mean_range_mps: [f64; 2],
}

#[derive(Debug, Clone, Serialize)]
pub struct TaskParams {
    pub size_range_bits: [f64; 2],
    pub intensity_range_cpb: [f64; 2],
    pub deadline_range_s: [f64; 2],
}

#[derive(Debug, Clone, Serialize)]
pub struct VehicleParams {
    pub cpu_range_hz: [f64; 2],
    pub energy_budget_range_j: [f64; 2],
    pub tx_power_range_w: [f64; 2],
    /// Effective switched capacitance of the vehicle CPU.
    pub cpu_capacitance: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct ServerParams {
    pub cpu_range_hz: [f64; 2],
    /// Per-slot energy budget of one server, joules.
    pub energy_budget_j: f64,
    /// Energy consumed per CPU cycle by a server, joules.
    pub energy_per_cycle_j: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct ChannelParams {
    pub bandwidth_hz: f64,
    pub noise_power_w: f64,
    pub carrier_freq_hz: f64,
    pub light_speed_mps: f64,
    /// Reference distance of the path-loss model; also the minimum modeled
    /// link distance (avoids the singularity at d = 0).
    pub ref_distance_m: f64,
    pub alpha1_m: f64,
    pub alpha2_m: f64,
    pub nakagami_m_los: f64,
    pub nakagami_m_nlos: f64,
    pub pathloss_exp_los: f64,
    pub pathloss_exp_nlos: f64,
    pub shadow_std_los_db: f64,
    pub shadow_std_nlos_db: f64,
    pub los_mixture: LosMixture,
}

#[derive(Debug, Clone, Serialize)]
pub struct CostParams {
    pub weight_delay: f64,
    pub weight_energy: f64,
    pub penalty_deadline: f64,
    pub penalty_energy: f64,
}

macro_rules! require {
    ($cond:expr, $field:literal, $($reason:tt)+) => {
        if !($cond) {
            return Err(ConfigError::Validation {
                field: $field,
                reason: format!($($reason)+),
            });
        }
    };
}

fn check_range(range: [f64; 2], field: &'static str, strictly_positive: bool) -> Result<(), ConfigError> {
    require!(range.iter().all(|v| v.is_finite()), "range", "{field}: non-finite bound");
    if range[0] > range[1] {
        return Err(ConfigError::Validation {
            field,
            reason: format!("lower bound {} exceeds upper bound {}", range[0], range[1]),
        });
    }
    if strictly_positive && range[0] <= 0.0 {
        return Err(ConfigError::Validation {
            field,
            reason: format!("lower bound {} must be strictly positive", range[0]),
        });
    }
    Ok(())
}

impl RawConfig {
    /// Validate every invariant and convert to SI units.
    pub fn validate(self) -> Result<ScenarioConfig, ConfigError> {
        let s = &self.scenario;
        require!(s.num_vehicles > 0, "scenario.num_vehicles", "must be positive");
        require!(s.num_servers > 0, "scenario.num_servers", "must be positive");
        require!(s.area_side_m > 0.0, "scenario.area_side_m", "must be positive");
        require!(s.slot_duration_s > 0.0, "scenario.slot_duration_s", "must be positive");
        require!(s.horizon_slots > 0, "scenario.horizon_slots", "must be positive");

        let m = &self.mobility;
        require!(
            (0.0..=1.0).contains(&m.memory_degree),
            "mobility.memory_degree",
            "must lie in [0, 1], got {}",
            m.memory_degree
        );
        require!(m.vel_std_mps >= 0.0, "mobility.vel_std_mps", "must be non-negative");
        check_range(m.vel_mean_range_mps, "mobility.vel_mean_range_mps", true)?;

        check_range(self.task.size_range_mb, "task.size_range_mb", true)?;
        check_range(self.task.intensity_range_cpb, "task.intensity_range_cpb", true)?;
        check_range(self.task.deadline_range_s, "task.deadline_range_s", true)?;

        check_range(self.vehicle.cpu_range_ghz, "vehicle.cpu_range_ghz", true)?;
        check_range(self.vehicle.energy_budget_range_j, "vehicle.energy_budget_range_j", true)?;
        check_range(self.vehicle.tx_power_range_dbm, "vehicle.tx_power_range_dbm", false)?;
        require!(
            self.vehicle.cpu_capacitance >= 0.0,
            "vehicle.cpu_capacitance",
            "must be non-negative"
        );

        check_range(self.server.cpu_range_ghz, "server.cpu_range_ghz", true)?;
        require!(self.server.energy_budget_j > 0.0, "server.energy_budget_j", "must be positive");
        require!(
            self.server.energy_per_cycle_j >= 0.0,
            "server.energy_per_cycle_j",
            "must be non-negative"
        );

        let c = &self.channel;
        require!(c.bandwidth_mhz > 0.0, "channel.bandwidth_mhz", "must be positive");
        require!(c.carrier_freq_ghz > 0.0, "channel.carrier_freq_ghz", "must be positive");
        require!(c.light_speed_mps > 0.0, "channel.light_speed_mps", "must be positive");
        require!(c.ref_distance_m > 0.0, "channel.ref_distance_m", "must be positive");
        require!(c.alpha1_m > 0.0, "channel.alpha1_m", "must be positive");
        require!(c.alpha2_m > 0.0, "channel.alpha2_m", "must be positive");
        require!(
            c.nakagami_m_los >= 0.5,
            "channel.nakagami_m_los",
            "shape factor must be >= 0.5, got {}",
            c.nakagami_m_los
        );
        require!(
            c.nakagami_m_nlos >= 0.5,
            "channel.nakagami_m_nlos",
            "shape factor must be >= 0.5, got {}",
            c.nakagami_m_nlos
        );
        require!(c.pathloss_exp_los > 0.0, "channel.pathloss_exp_los", "must be positive");
        require!(c.pathloss_exp_nlos > 0.0, "channel.pathloss_exp_nlos", "must be positive");
        require!(c.shadow_std_los_db >= 0.0, "channel.shadow_std_los_db", "must be non-negative");
        require!(c.shadow_std_nlos_db >= 0.0, "channel.shadow_std_nlos_db", "must be non-negative");

        let w = &self.cost;
        require!(w.weight_delay >= 0.0, "cost.weight_delay", "must be non-negative");
        require!(w.weight_energy >= 0.0, "cost.weight_energy", "must be non-negative");
        require!(w.penalty_deadline >= 0.0, "cost.penalty_deadline", "must be non-negative");
        require!(w.penalty_energy >= 0.0, "cost.penalty_energy", "must be non-negative");

        let t = &self.training;
        require!(
            t.discount > 0.0 && t.discount < 1.0,
            "training.discount",
            "must lie in (0, 1), got {}",
            t.discount
        );
        require!(t.actor_lr > 0.0, "training.actor_lr", "must be positive");
        require!(t.critic_lr > 0.0, "training.critic_lr", "must be positive");
        require!(
            (0.0..=1.0).contains(&t.soft_update_rate),
            "training.soft_update_rate",
            "must lie in [0, 1]"
        );
        require!(t.batch_size > 0, "training.batch_size", "must be positive");
        require!(
            t.buffer_capacity >= t.batch_size,
            "training.buffer_capacity",
            "must hold at least one batch"
        );
        require!(t.update_every > 0, "training.update_every", "must be positive");
        require!(t.noise_std_start >= 0.0, "training.noise_std_start", "must be non-negative");
        require!(t.noise_std_end >= 0.0, "training.noise_std_end", "must be non-negative");
        require!(!t.actor_hidden.is_empty(), "training.actor_hidden", "needs at least one layer");
        require!(!t.critic_hidden.is_empty(), "training.critic_hidden", "needs at least one layer");

        Ok(ScenarioConfig {
            num_vehicles: s.num_vehicles,
            num_servers: s.num_servers,
            area_side_m: s.area_side_m,
            slot_duration_s: s.slot_duration_s,
            horizon_slots: s.horizon_slots,
            rng_seed: s.rng_seed,
            mobility: MobilityParams {
                memory_degree: m.memory_degree,
                vel_std_mps: m.vel_std_mps,
                vel_mean_range_mps: m.vel_mean_range_mps,
            },
            task: TaskParams {
                size_range_bits: self.task.size_range_mb.map(|v| v * MEGABIT),
                intensity_range_cpb: self.task.intensity_range_cpb,
                deadline_range_s: self.task.deadline_range_s,
            },
            vehicle: VehicleParams {
                cpu_range_hz: self.vehicle.cpu_range_ghz.map(|v| v * GIGA),
                energy_budget_range_j: self.vehicle.energy_budget_range_j,
                tx_power_range_w: self.vehicle.tx_power_range_dbm.map(dbm_to_watts),
                cpu_capacitance: self.vehicle.cpu_capacitance,
            },
            server: ServerParams {
                cpu_range_hz: self.server.cpu_range_ghz.map(|v| v * GIGA),
                energy_budget_j: self.server.energy_budget_j,
                energy_per_cycle_j: self.server.energy_per_cycle_j,
            },
            channel: ChannelParams {
                bandwidth_hz: c.bandwidth_mhz * MEGA,
                noise_power_w: dbm_to_watts(c.noise_power_dbm),
                carrier_freq_hz: c.carrier_freq_ghz * GIGA,
                light_speed_mps: c.light_speed_mps,
                ref_distance_m: c.ref_distance_m,
                alpha1_m: c.alpha1_m,
                alpha2_m: c.alpha2_m,
                nakagami_m_los: c.nakagami_m_los,
                nakagami_m_nlos: c.nakagami_m_nlos,
                pathloss_exp_los: c.pathloss_exp_los,
                pathloss_exp_nlos: c.pathloss_exp_nlos,
                shadow_std_los_db: c.shadow_std_los_db,
                shadow_std_nlos_db: c.shadow_std_nlos_db,
                los_mixture: c.los_mixture,
            },
            cost: CostParams {
                weight_delay: w.weight_delay,
                weight_energy: w.weight_energy,
                penalty_deadline: w.penalty_deadline,
                penalty_energy: w.penalty_energy,
            },
            training: self.training,
        })
    }
}

impl ScenarioConfig {
    /// The full default parameter set (paper scale: 20 vehicles, 4 servers).
    pub fn table_defaults() -> Self {
        RawConfig::default().validate().expect("defaults validate")
    }
}

/// Apply `MECSIM_<SECTION>__<KEY>` overrides onto a parsed TOML table.
/// Values parse as TOML fragments (`8`, `[64, 64]`, `true`), else as strings.
pub fn apply_env_overrides(
    table: &mut toml::Table,
    vars: impl Iterator<Item = (String, String)>,
) -> Result<(), ConfigError> {
    const PREFIX: &str = "MECSIM_";
    for (key, value) in vars {
        let Some(rest) = key.strip_prefix(PREFIX) else { continue };
        let Some((section, field)) = rest.split_once("__") else { continue };
        let section = section.to_ascii_lowercase();
        let field = field.to_ascii_lowercase();
        let parsed: toml::Value = match format!("v = {value}").parse::<toml::Table>() {
            Ok(mut t) => t.remove("v").unwrap(),
            Err(_) => toml::Value::String(value.clone()),
        };
        table
            .entry(section)
            .or_insert_with(|| toml::Value::Table(toml::Table::new()))
            .as_table_mut()
            .ok_or_else(|| ConfigError::Parse(format!("override {key} targets a non-table key")))?
            .insert(field, parsed);
    }
    Ok(())
}

/// Parse, override from the environment, and validate a config file.
pub fn load_config(path: impl AsRef<Path>) -> Result<ScenarioConfig, ConfigError> {
    let text = std::fs::read_to_string(path).map_err(ConfigError::Io)?;
    load_config_str(&text, std::env::vars())
}

/// As [`load_config`] but from an in-memory string with explicit overrides
/// (the testable core).
pub fn load_config_str(
    text: &str,
    vars: impl Iterator<Item = (String, String)>,
) -> Result<ScenarioConfig, ConfigError> {
    let mut table: toml::Table = text.parse().map_err(|e: toml::de::Error| ConfigError::Parse(e.to_string()))?;
    apply_env_overrides(&mut table, vars)?;
    let raw: RawConfig =
        toml::Value::Table(table).try_into().map_err(|e: toml::de::Error| ConfigError::Parse(e.to_string()))?;
    raw.validate()
}

// ---------------------------------------------------------------------------
// Domain entities.
// ---------------------------------------------------------------------------

/// Kinematic and resource state of one vehicle.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VehicleState {
    pub position_m: [f64; 2],
    pub velocity_mps: [f64; 2],
    /// Asymptotic mean of the velocity process (reflected along with it).
    pub mean_velocity_mps: [f64; 2],
    pub cpu_hz: f64,
    /// Per-slot energy budget.
    pub energy_budget_j: f64,
    pub tx_power_w: f64,
    pub cpu_capacitance: f64,
}

/// A static edge server.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MecServer {
    pub position_m: [f64; 2],
    pub cpu_hz: f64,
    /// Per-slot energy budget.
    pub energy_budget_j: f64,
}

/// One per-slot workload descriptor.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Task {
    pub size_bits: f64,
    pub intensity_cpb: f64,
    pub deadline_s: f64,
}

/// Uniform draw from `[range[0], range[1]]`, consuming exactly one `f64`
/// draw even when the range is degenerate (keeps RNG streams aligned across
/// configs that pin a parameter).
pub fn sample_range(rng: &mut impl Rng, range: [f64; 2]) -> f64 {
    range[0] + (range[1] - range[0]) * rng.gen::<f64>()
}

/// Centers of the first `count` cells of a `g x g` subdivision of the square,
/// `g = ceil(sqrt(count))`, x-major then y.
pub fn server_grid_positions(count: usize, area_side_m: f64) -> Vec<[f64; 2]> {
    let g = (count as f64).sqrt().ceil() as usize;
    let cell = area_side_m / g as f64;
    let mut positions = Vec::with_capacity(count);
    'outer: for gx in 0..g {
        for gy in 0..g {
            if positions.len() == count {
                break 'outer;
            }
            positions.push([(gx as f64 + 0.5) * cell, (gy as f64 + 0.5) * cell]);
        }
    }
    positions
}

/// Sample one task with attributes uniform in the configured ranges.
pub fn sample_task(params: &TaskParams, rng: &mut impl Rng) -> Task {
    Task {
        size_bits: sample_range(rng, params.size_range_bits),
        intensity_cpb: sample_range(rng, params.intensity_range_cpb),
        deadline_s: sample_range(rng, params.deadline_range_s),
    }
}

/// Generate the initial vehicle and server populations for one episode.
/// Identical `(cfg, seed)` pairs yield identical output.
pub fn generate_scenario(cfg: &ScenarioConfig, seed: u64) -> (Vec<VehicleState>, Vec<MecServer>) {
    use rand::SeedableRng;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);

    let vehicles = (0..cfg.num_vehicles)
        .map(|_| {
            let position = [
                rng.gen::<f64>() * cfg.area_side_m,
                rng.gen::<f64>() * cfg.area_side_m,
            ];
            let speed = sample_range(&mut rng, cfg.mobility.vel_mean_range_mps);
            let heading = rng.gen::<f64>() * std::f64::consts::TAU;
            let velocity = [speed * heading.cos(), speed * heading.sin()];
            VehicleState {
                position_m: position,
                velocity_mps: velocity,
                mean_velocity_mps: velocity,
                cpu_hz: sample_range(&mut rng, cfg.vehicle.cpu_range_hz),
                energy_budget_j: sample_range(&mut rng, cfg.vehicle.energy_budget_range_j),
                tx_power_w: sample_range(&mut rng, cfg.vehicle.tx_power_range_w),
                cpu_capacitance: cfg.vehicle.cpu_capacitance,
            }
        })
        .collect();

    let servers = server_grid_positions(cfg.num_servers, cfg.area_side_m)
        .into_iter()
        .map(|position| MecServer {
            position_m: position,
            cpu_hz: sample_range(&mut rng, cfg.server.cpu_range_hz),
            energy_budget_j: cfg.server.energy_budget_j,
        })
        .collect();

    (vehicles, servers)
}
