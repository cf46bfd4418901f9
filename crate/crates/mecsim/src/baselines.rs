//! Comparison policies sharing the environment and metrics pipeline.
//!
//! The hybrid baselines post-process a trained joint policy: the
//! nearest-server baseline overrides the offload target and delegates the
//! resource request to the learned head; the equal-allocation baseline keeps
//! the learned offload decisions and replaces the server's split rule.
//! The independent learner is the same trainer with local critics.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::compute::{OffloadDecision, OffloadTarget};
use crate::env::{AllocationRule, Environment, StepOutcome, MIN_CPU_FRACTION};
use crate::maddpg::{train, CriticMode, Fleet, TrainResult};
use crate::metrics::{EpisodeAccumulator, EpisodeRecord, EvalSummary};
use crate::scenario::{MecServer, ScenarioConfig};

/// Index of the server closest to `position`; ties break to the lower index.
pub fn nearest_server(position: [f64; 2], servers: &[MecServer]) -> usize {
    assert!(!servers.is_empty());
    let mut best = 0usize;
    let mut best_d2 = f64::INFINITY;
    for (m, s) in servers.iter().enumerate() {
        let dx = position[0] - s.position_m[0];
        let dy = position[1] - s.position_m[1];
        let d2 = dx * dx + dy * dy;
        if d2 < best_d2 {
            best_d2 = d2;
            best = m;
        }
    }
    best
}

/// Nearest-server offloading with the resource request taken from the
/// learned action's allocation head.
pub fn nto_decision(raw_action: &[f64], position: [f64; 2], servers: &[MecServer]) -> OffloadDecision {
    let m = nearest_server(position, servers);
    let fraction = ((raw_action[raw_action.len() - 1] + 1.0) / 2.0).clamp(MIN_CPU_FRACTION, 1.0);
    OffloadDecision {
        target: OffloadTarget::Server(m),
        requested_cpu_hz: fraction * servers[m].cpu_hz,
    }
}

/// Equal split of a server's capacity among its assigned vehicles. Grants
/// sum to the capacity exactly.
pub fn ecra_allocation(capacity_hz: f64, assigned: usize) -> Vec<f64> {
    assert!(assigned > 0);
    let share = capacity_hz / assigned as f64;
    let mut grants = vec![share; assigned];
    let partial: f64 = grants[..assigned - 1].iter().sum();
    grants[assigned - 1] = capacity_hz - partial;
    grants
}

/// Train the independent-critic variant (each critic sees only its own
/// agent's observation and action).
pub fn train_independent(cfg: &ScenarioConfig, seed: u64) -> TrainResult {
    train(cfg, CriticMode::IndependentLocal, seed)
}

/// An evaluation-time policy.
pub enum EvalPolicy<'a> {
    /// Greedy decentralized execution of a trained fleet.
    Learned(&'a Fleet),
    /// Trained fleet with the offload target forced to the nearest server.
    NearestServer(&'a Fleet),
    /// Trained fleet with servers splitting capacity equally.
    EqualAllocation(&'a Fleet),
    /// Uniform random raw actions.
    Random,
}

impl EvalPolicy<'_> {
    fn allocation_rule(&self) -> AllocationRule {
        match self {
            EvalPolicy::EqualAllocation(_) => AllocationRule::EqualShare,
            _ => AllocationRule::ProportionalToRequest,
        }
    }
}

fn raw_actions(
    policy: &EvalPolicy<'_>,
    observations: &[Vec<f64>],
    action_dim: usize,
    rng: &mut ChaCha8Rng,
) -> Vec<Vec<f64>> {
    match policy {
        EvalPolicy::Learned(fleet) | EvalPolicy::NearestServer(fleet) | EvalPolicy::EqualAllocation(fleet) => {
            observations
                .iter()
                .enumerate()
                .map(|(n, obs)| fleet.act_greedy(n, obs))
                .collect()
        }
        EvalPolicy::Random => observations
            .iter()
            .map(|_| (0..action_dim).map(|_| rng.gen::<f64>() * 2.0 - 1.0).collect())
            .collect(),
    }
}

/// Step an environment under a policy, applying the baseline overrides.
pub fn policy_step(
    policy: &EvalPolicy<'_>,
    env: &mut Environment,
    observations: &[Vec<f64>],
    rng: &mut ChaCha8Rng,
) -> (Vec<Vec<f64>>, StepOutcome) {
    let actions = raw_actions(policy, observations, env.action_dim(), rng);
    let outcome = match policy {
        EvalPolicy::NearestServer(_) => {
            let decisions: Vec<OffloadDecision> = actions
                .iter()
                .zip(env.vehicles())
                .map(|(raw, vehicle)| nto_decision(raw, vehicle.position_m, env.servers()))
                .collect();
            env.step_decoded(&decisions)
        }
        _ => env.step(&actions),
    };
    (actions, outcome)
}

/// Greedy rollouts over `episodes` episodes. Episode `i` resets with
/// `base_seed + i`, so different policies evaluated with the same base seed
/// face identical scenarios, tasks, and channel draws.
pub fn evaluate_policy(
    policy: &EvalPolicy<'_>,
    cfg: &ScenarioConfig,
    episodes: usize,
    base_seed: u64,
) -> (Vec<EpisodeRecord>, Result<EvalSummary, crate::metrics::EmptyEvaluation>) {
    let mut env = Environment::new(cfg.clone());
    env.set_allocation_rule(policy.allocation_rule());
    let mut rng = ChaCha8Rng::seed_from_u64(base_seed ^ 0x6576_616c);

    let mut records = Vec::with_capacity(episodes);
    for episode in 0..episodes {
        let mut observations = env.reset(base_seed + episode as u64);
        let mut acc = EpisodeAccumulator::new();
        loop {
            let (_, outcome) = policy_step(policy, &mut env, &observations, &mut rng);
            acc.push(&outcome);
            observations = outcome.observations.clone();
            if outcome.done {
                break;
            }
        }
        records.push(acc.finish(episode));
    }
    let summary = EvalSummary::from_records(&records);
    (records, summary)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::env::decode_action;
    use crate::scenario::RawConfig;

    fn servers_at(positions: &[[f64; 2]]) -> Vec<MecServer> {
        positions
            .iter()
            .map(|&p| MecServer {
                position_m: p,
                cpu_hz: 5e10,
                energy_budget_j: 1000.0,
            })
            .collect()
    }

    #[test]
    fn nearest_picks_closer_server() {
        let servers = servers_at(&[[250.0, 250.0], [750.0, 750.0]]);
        assert_eq!(nearest_server([0.0, 0.0], &servers), 0);
        assert_eq!(nearest_server([1000.0, 1000.0], &servers), 1);
    }

    #[test]
    fn nearest_breaks_ties_to_lower_index() {
        let servers = servers_at(&[[250.0, 500.0], [750.0, 500.0]]);
        assert_eq!(nearest_server([500.0, 500.0], &servers), 0);
    }

    #[test]
    fn crossing_the_midline_flips_the_server() {
        let servers = servers_at(&[[250.0, 500.0], [750.0, 500.0]]);
        for offset in 1..10 {
            let d = offset as f64;
            assert_eq!(nearest_server([500.0 - d, 500.0], &servers), 0);
            assert_eq!(nearest_server([500.0 + d, 500.0], &servers), 1);
        }
    }

    #[test]
    fn nearest_invariant_under_uniform_scaling() {
        let servers = servers_at(&[[100.0, 900.0], [400.0, 300.0], [800.0, 600.0]]);
        let scaled: Vec<MecServer> = servers
            .iter()
            .map(|s| MecServer {
                position_m: [s.position_m[0] * 3.5, s.position_m[1] * 3.5],
                ..s.clone()
            })
            .collect();
        for p in [[0.0, 0.0], [500.0, 500.0], [900.0, 100.0], [333.0, 777.0]] {
            assert_eq!(
                nearest_server(p, &servers),
                nearest_server([p[0] * 3.5, p[1] * 3.5], &scaled)
            );
        }
    }

    #[test]
    fn nto_uses_learned_fraction_on_nearest() {
        let servers = servers_at(&[[250.0, 250.0], [750.0, 750.0]]);
        let raw = vec![0.9, -0.9, -0.9, 0.0]; // argmax says local; override wins
        let d = nto_decision(&raw, [900.0, 900.0], &servers);
        assert_eq!(d.target, OffloadTarget::Server(1));
        assert_eq!(d.requested_cpu_hz, 0.5 * 5e10);
        // Decode would have gone local; the fraction head is shared.
        let decoded = decode_action(&raw, &[5e10, 5e10]);
        assert_eq!(decoded.target, OffloadTarget::Local);
    }

    #[test]
    fn equal_allocation_partitions_exactly() {
        assert_eq!(ecra_allocation(9e10, 1), vec![9e10]);
        let grants = ecra_allocation(1e11, 4);
        assert_eq!(grants, vec![2.5e10; 4]);
        for n in 1..=7 {
            let grants = ecra_allocation(1000.0, n);
            let total: f64 = grants.iter().sum();
            assert_eq!(total, 1000.0, "n = {n}");
        }
    }

    #[test]
    fn equal_allocation_is_permutation_equivariant() {
        // Every assigned vehicle gets the same share, so any permutation of
        // the assignment list yields the same grant multiset.
        let grants = ecra_allocation(7.3e10, 5);
        assert!(grants.windows(2).take(3).all(|w| w[0] == w[1]));
    }

    #[test]
    fn random_policy_rollout_is_reproducible() {
        let mut raw = RawConfig::default();
        raw.scenario.num_vehicles = 3;
        raw.scenario.num_servers = 2;
        raw.scenario.horizon_slots = 15;
        let cfg = raw.validate().unwrap();
        let (a, _) = evaluate_policy(&EvalPolicy::Random, &cfg, 3, 42);
        let (b, _) = evaluate_policy(&EvalPolicy::Random, &cfg, 3, 42);
        assert_eq!(a, b);
        assert_eq!(a.len(), 3);
    }

    #[test]
    fn evaluation_with_zero_episodes_has_no_summary() {
        let mut raw = RawConfig::default();
        raw.scenario.num_vehicles = 2;
        raw.scenario.num_servers = 2;
        raw.scenario.horizon_slots = 5;
        let cfg = raw.validate().unwrap();
        let (records, summary) = evaluate_policy(&EvalPolicy::Random, &cfg, 0, 1);
        assert!(records.is_empty());
        assert!(summary.is_err());
    }
}
