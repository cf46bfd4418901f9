//! Centralized-training / decentralized-execution deterministic policy
//! gradient learner: replay buffer, per-agent actors with targets,
//! centralized critics with targets, and the training loop.
//!
//! Critic inputs depend on the critic mode:
//! - centralized (shared or per-agent): `[global_state | a_0 | ... | a_V-1]`
//! - independent (local): `[o_n | a_n]`
//!
//! Execution is decentralized either way: [`Fleet::act_greedy`] consumes a
//! single local observation and nothing else.

use rand::Rng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};

use crate::env::Environment;
use crate::metrics::{EpisodeAccumulator, EpisodeRecord};
use crate::nn::{adam_step, soft_update, Activation, AdamState, ForwardCache, Matrix, MlpParams};
use crate::scenario::{ScenarioConfig, TrainingParams};

const INIT_STREAM: u64 = 0x696e_6974; // network initialization
const RUN_STREAM: u64 = 0x7472_6169_6e; // episode seeds, noise, batch sampling

/// One stored step of experience.
#[derive(Debug, Clone)]
pub struct Transition {
    pub state: Vec<f64>,
    pub next_state: Vec<f64>,
    pub observations: Vec<Vec<f64>>,
    pub next_observations: Vec<Vec<f64>>,
    pub actions: Vec<Vec<f64>>,
    pub reward: f64,
    pub done: bool,
}

/// Sampling was attempted before the buffer held a full batch.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct BufferUnderfull {
    pub has: usize,
    pub wants: usize,
}

impl std::fmt::Display for BufferUnderfull {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "replay buffer holds {} transitions, batch wants {}", self.has, self.wants)
    }
}

impl std::error::Error for BufferUnderfull {}

/// Fixed-capacity ring buffer with uniform without-replacement sampling.
pub struct ReplayBuffer {
    items: Vec<Transition>,
    capacity: usize,
    cursor: usize,
}

impl ReplayBuffer {
    pub fn new(capacity: usize) -> Self {
        assert!(capacity > 0);
        Self {
            items: Vec::with_capacity(capacity.min(1 << 20)),
            capacity,
            cursor: 0,
        }
    }

    pub fn len(&self) -> usize {
        self.items.len()
    }

    pub fn is_empty(&self) -> bool {
        self.items.is_empty()
    }

    /// Append, overwriting the oldest entry once full.
    pub fn push(&mut self, transition: Transition) {
        if self.items.len() < self.capacity {
            self.items.push(transition);
        } else {
            self.items[self.cursor] = transition;
        }
        self.cursor = (self.cursor + 1) % self.capacity;
    }

    pub fn get(&self, index: usize) -> &Transition {
        &self.items[index]
    }

    /// Draw `batch_size` distinct indices uniformly.
    pub fn sample_indices(
        &self,
        batch_size: usize,
        rng: &mut impl Rng,
    ) -> Result<Vec<usize>, BufferUnderfull> {
        if self.items.len() < batch_size {
            return Err(BufferUnderfull {
                has: self.items.len(),
                wants: batch_size,
            });
        }
        let mut picked = Vec::with_capacity(batch_size);
        while picked.len() < batch_size {
            let idx = rng.gen_range(0..self.items.len());
            if !picked.contains(&idx) {
                picked.push(idx);
            }
        }
        Ok(picked)
    }
}

/// What the critics see.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CriticMode {
    /// One critic shared by all agents, fed global state + joint action.
    SharedCentralized,
    /// One critic per agent, fed global state + joint action.
    PerAgentCentralized,
    /// One critic per agent, fed only that agent's observation and action.
    IndependentLocal,
}

/// An online network, its target, and the optimizer state.
pub struct NetPair {
    pub online: MlpParams,
    pub target: MlpParams,
    pub opt: AdamState,
}

impl NetPair {
    fn new(online: MlpParams, lr: f64) -> Self {
        Self {
            target: online.clone(),
            opt: AdamState::new(&online, lr),
            online,
        }
    }
}

/// All agents' networks plus the shapes they were built for.
pub struct Fleet {
    pub actors: Vec<NetPair>,
    /// Length 1 in shared mode, `num_agents` otherwise.
    pub critics: Vec<NetPair>,
    pub mode: CriticMode,
    pub num_agents: usize,
    pub obs_dim: usize,
    pub state_dim: usize,
    pub action_dim: usize,
    pub discount: f64,
    pub soft_update_rate: f64,
}

impl Fleet {
    /// Build actors and critics for the given environment shapes.
    pub fn new(
        cfg: &TrainingParams,
        mode: CriticMode,
        num_agents: usize,
        obs_dim: usize,
        state_dim: usize,
        action_dim: usize,
        rng: &mut impl Rng,
    ) -> Self {
        let mut actor_dims = vec![obs_dim];
        actor_dims.extend_from_slice(&cfg.actor_hidden);
        actor_dims.push(action_dim);

        let critic_input = match mode {
            CriticMode::SharedCentralized | CriticMode::PerAgentCentralized => {
                state_dim + num_agents * action_dim
            }
            CriticMode::IndependentLocal => obs_dim + action_dim,
        };
        let mut critic_dims = vec![critic_input];
        critic_dims.extend_from_slice(&cfg.critic_hidden);
        critic_dims.push(1);

        let actors = (0..num_agents)
            .map(|_| {
                let mut net = MlpParams::new(&actor_dims, Activation::Relu, Activation::Tanh, rng);
                // Start near the neutral policy.
                net.scale_output_layer(1e-3);
                NetPair::new(net, cfg.actor_lr)
            })
            .collect();
        let critic_count = if mode == CriticMode::SharedCentralized { 1 } else { num_agents };
        let critics = (0..critic_count)
            .map(|_| {
                let net = MlpParams::new(&critic_dims, Activation::Relu, Activation::Identity, rng);
                NetPair::new(net, cfg.critic_lr)
            })
            .collect();

        Self {
            actors,
            critics,
            mode,
            num_agents,
            obs_dim,
            state_dim,
            action_dim,
            discount: cfg.discount,
            soft_update_rate: cfg.soft_update_rate,
        }
    }

    /// Index into `critics` for agent `n`.
    pub fn critic_index(&self, agent: usize) -> usize {
        match self.mode {
            CriticMode::SharedCentralized => 0,
            _ => agent,
        }
    }

    pub fn critic_input_dim(&self) -> usize {
        self.critics[0].online.in_dim()
    }

    /// Deterministic decentralized-execution action from one local
    /// observation.
    pub fn act_greedy(&self, agent: usize, observation: &[f64]) -> Vec<f64> {
        self.actors[agent].online.forward(observation)
    }

    /// Greedy action plus clipped exploration noise.
    pub fn act_noisy(
        &self,
        agent: usize,
        observation: &[f64],
        noise_std: f64,
        rng: &mut impl Rng,
    ) -> Vec<f64> {
        let mut action = self.act_greedy(agent, observation);
        if noise_std > 0.0 {
            let normal = Normal::new(0.0, noise_std).expect("valid std");
            for a in &mut action {
                *a = (*a + normal.sample(rng)).clamp(-1.0, 1.0);
            }
        }
        action
    }

    /// Critic input row for agent `n` on one transition's current step.
    fn critic_row(&self, agent: usize, t: &Transition) -> Vec<f64> {
        match self.mode {
            CriticMode::SharedCentralized | CriticMode::PerAgentCentralized => {
                let mut row = Vec::with_capacity(self.critic_input_dim());
                row.extend_from_slice(&t.state);
                for a in &t.actions {
                    row.extend_from_slice(a);
                }
                row
            }
            CriticMode::IndependentLocal => {
                let mut row = Vec::with_capacity(self.critic_input_dim());
                row.extend_from_slice(&t.observations[agent]);
                row.extend_from_slice(&t.actions[agent]);
                row
            }
        }
    }

    /// Bootstrap targets `Y = r + gamma * Q'(s', a')` with `a'` from the
    /// target actors on the next observations; terminal transitions keep
    /// `Y = r`.
    pub fn critic_targets(&self, agent: usize, batch: &[&Transition]) -> Vec<f64> {
        let batch_size = batch.len();
        let critic = &self.critics[self.critic_index(agent)];

        let mut rows = Vec::with_capacity(batch_size);
        match self.mode {
            CriticMode::SharedCentralized | CriticMode::PerAgentCentralized => {
                // Target actions for every agent, batched per agent.
                let mut next_actions: Vec<Matrix> = Vec::with_capacity(self.num_agents);
                for j in 0..self.num_agents {
                    let obs =
                        Matrix::from_rows(&batch.iter().map(|t| t.next_observations[j].clone()).collect::<Vec<_>>());
                    next_actions.push(self.actors[j].target.forward_batch(&obs).output().clone());
                }
                for (b, t) in batch.iter().enumerate() {
                    let mut row = Vec::with_capacity(self.critic_input_dim());
                    row.extend_from_slice(&t.next_state);
                    for actions in &next_actions {
                        row.extend_from_slice(actions.row(b));
                    }
                    rows.push(row);
                }
            }
            CriticMode::IndependentLocal => {
                let obs = Matrix::from_rows(
                    &batch.iter().map(|t| t.next_observations[agent].clone()).collect::<Vec<_>>(),
                );
                let acts = self.actors[agent].target.forward_batch(&obs);
                for (b, t) in batch.iter().enumerate() {
                    let mut row = Vec::with_capacity(self.critic_input_dim());
                    row.extend_from_slice(&t.next_observations[agent]);
                    row.extend_from_slice(acts.output().row(b));
                    rows.push(row);
                }
            }
        }

        let q_next = critic.target.forward_batch(&Matrix::from_rows(&rows));
        batch
            .iter()
            .enumerate()
            .map(|(b, t)| {
                if t.done {
                    t.reward
                } else {
                    t.reward + self.discount * q_next.output().row(b)[0]
                }
            })
            .collect()
    }

    /// Mean squared TD error of the online critic on a batch (no update).
    pub fn critic_batch_loss(&self, agent: usize, batch: &[&Transition]) -> f64 {
        let targets = self.critic_targets(agent, batch);
        let rows: Vec<Vec<f64>> = batch.iter().map(|t| self.critic_row(agent, t)).collect();
        let cache = self.critics[self.critic_index(agent)]
            .online
            .forward_batch(&Matrix::from_rows(&rows));
        cache
            .output()
            .data
            .iter()
            .zip(&targets)
            .map(|(q, y)| (q - y).powi(2))
            .sum::<f64>()
            / batch.len() as f64
    }

    /// One Adam step on the critic toward the bootstrap targets.
    /// Returns the pre-step batch loss.
    pub fn update_critic(&mut self, agent: usize, batch: &[&Transition]) -> f64 {
        let batch_size = batch.len();
        let targets = self.critic_targets(agent, batch);
        let rows: Vec<Vec<f64>> = batch.iter().map(|t| self.critic_row(agent, t)).collect();
        let input = Matrix::from_rows(&rows);

        let critic_idx = self.critic_index(agent);
        let critic = &mut self.critics[critic_idx];
        let cache = critic.online.forward_batch(&input);
        let mut loss = 0.0;
        let mut grad = Matrix::zeros(batch_size, 1);
        for b in 0..batch_size {
            let residual = cache.output().row(b)[0] - targets[b];
            loss += residual * residual;
            grad.row_mut(b)[0] = 2.0 * residual / batch_size as f64;
        }
        loss /= batch_size as f64;

        let (grads, _) = critic.online.backward(&cache, &grad);
        adam_step(&mut critic.online, &grads, &mut critic.opt);
        loss
    }

    /// One ascent step on agent `n`'s actor through the critic. Returns the
    /// pre-step batch objective (mean Q of the re-selected joint action).
    pub fn update_actor(&mut self, agent: usize, batch: &[&Transition]) -> f64 {
        let batch_size = batch.len();
        let obs = Matrix::from_rows(&batch.iter().map(|t| t.observations[agent].clone()).collect::<Vec<_>>());
        let actor_cache = self.actors[agent].online.forward_batch(&obs);
        let new_actions = actor_cache.output();

        // Critic input with agent n's batch action replaced by the fresh one.
        let mut rows = Vec::with_capacity(batch_size);
        let action_offset = match self.mode {
            CriticMode::SharedCentralized | CriticMode::PerAgentCentralized => {
                for (b, t) in batch.iter().enumerate() {
                    let mut row = Vec::with_capacity(self.critic_input_dim());
                    row.extend_from_slice(&t.state);
                    for (j, a) in t.actions.iter().enumerate() {
                        if j == agent {
                            row.extend_from_slice(new_actions.row(b));
                        } else {
                            row.extend_from_slice(a);
                        }
                    }
                    rows.push(row);
                }
                self.state_dim + agent * self.action_dim
            }
            CriticMode::IndependentLocal => {
                for (b, t) in batch.iter().enumerate() {
                    let mut row = Vec::with_capacity(self.critic_input_dim());
                    row.extend_from_slice(&t.observations[agent]);
                    row.extend_from_slice(new_actions.row(b));
                    rows.push(row);
                }
                self.obs_dim
            }
        };

        let critic = &self.critics[self.critic_index(agent)];
        let critic_cache = critic.online.forward_batch(&Matrix::from_rows(&rows));
        let objective =
            critic_cache.output().data.iter().sum::<f64>() / batch_size as f64;

        // dJ/d(critic input), then the slice belonging to agent n's action.
        let mut q_grad = Matrix::zeros(batch_size, 1);
        for b in 0..batch_size {
            q_grad.row_mut(b)[0] = 1.0 / batch_size as f64;
        }
        let (_, input_grad) = critic.online.backward(&critic_cache, &q_grad);
        let mut dj_da = Matrix::zeros(batch_size, self.action_dim);
        for b in 0..batch_size {
            dj_da
                .row_mut(b)
                .copy_from_slice(&input_grad.row(b)[action_offset..action_offset + self.action_dim]);
        }

        ascend_actor(&mut self.actors[agent], &actor_cache, &dj_da);
        objective
    }

    /// Blend every target network toward its online network.
    pub fn soft_update_agent(&mut self, agent: usize) {
        let rate = self.soft_update_rate;
        let actor = &mut self.actors[agent];
        soft_update(&actor.online, &mut actor.target, rate);
        let critic_idx = self.critic_index(agent);
        let critic = &mut self.critics[critic_idx];
        soft_update(&critic.online, &mut critic.target, rate);
    }
}

/// Gradient-ascent step on an actor given dJ/d(action) per batch row.
/// Exposed separately so the ascent machinery can be driven by an analytic
/// objective in tests.
pub fn ascend_actor(actor: &mut NetPair, cache: &ForwardCache, dj_da: &Matrix) {
    let mut descent = dj_da.clone();
    for v in &mut descent.data {
        *v = -*v;
    }
    let (grads, _) = actor.online.backward(cache, &descent);
    adam_step(&mut actor.online, &grads, &mut actor.opt);
}

/// Linear anneal from `start` to `end` over `total` ticks.
fn annealed(start: f64, end: f64, tick: usize, total: usize) -> f64 {
    if total == 0 {
        return end;
    }
    let frac = (tick as f64 / total as f64).clamp(0.0, 1.0);
    start + (end - start) * frac
}

/// A finished training run.
pub struct TrainResult {
    pub fleet: Fleet,
    pub episodes: Vec<EpisodeRecord>,
}

/// Run the full training loop on a fresh environment built from `cfg`.
/// Fixed `(cfg, mode, seed)` reproduces the metrics log bit for bit.
pub fn train(cfg: &ScenarioConfig, mode: CriticMode, seed: u64) -> TrainResult {
    use rand::SeedableRng;
    let mut env = Environment::new(cfg.clone());
    let mut init_rng = ChaCha8Rng::seed_from_u64(seed ^ INIT_STREAM);
    let mut run_rng = ChaCha8Rng::seed_from_u64(seed ^ RUN_STREAM);

    let params = &cfg.training;
    let mut fleet = Fleet::new(
        params,
        mode,
        env.num_agents(),
        env.observation_dim(),
        env.global_state_dim(),
        env.action_dim(),
        &mut init_rng,
    );
    let mut buffer = ReplayBuffer::new(params.buffer_capacity);
    let warmup = params.warmup_factor * params.batch_size;
    let total_steps = params.episodes * cfg.horizon_slots;

    let mut episodes = Vec::with_capacity(params.episodes);
    let mut step_counter = 0usize;
    for episode in 0..params.episodes {
        let episode_seed = run_rng.gen::<u64>();
        let mut observations = env.reset(episode_seed);
        let mut acc = EpisodeAccumulator::new();
        loop {
            let noise_std = annealed(
                params.noise_std_start,
                params.noise_std_end,
                step_counter,
                total_steps,
            );
            let actions: Vec<Vec<f64>> = (0..fleet.num_agents)
                .map(|n| fleet.act_noisy(n, &observations[n], noise_std, &mut run_rng))
                .collect();

            let state = env.global_state();
            let outcome = env.step(&actions);
            let next_state = env.global_state();
            acc.push(&outcome);

            buffer.push(Transition {
                state,
                next_state,
                observations: observations.clone(),
                next_observations: outcome.observations.clone(),
                actions,
                reward: outcome.reward,
                done: outcome.done,
            });
            observations = outcome.observations;
            step_counter += 1;

            if buffer.len() >= warmup && step_counter % params.update_every == 0 {
                for n in 0..fleet.num_agents {
                    let indices = buffer
                        .sample_indices(params.batch_size, &mut run_rng)
                        .expect("buffer past warmup");
                    let batch: Vec<&Transition> = indices.iter().map(|&i| buffer.get(i)).collect();
                    fleet.update_critic(n, &batch);
                    fleet.update_actor(n, &batch);
                    fleet.soft_update_agent(n);
                }
            }
            if outcome.done {
                break;
            }
        }
        episodes.push(acc.finish(episode));
    }

    TrainResult { fleet, episodes }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scenario::RawConfig;
    use rand::SeedableRng;

    fn tiny_transition(reward: f64, done: bool) -> Transition {
        Transition {
            state: vec![0.2, 0.4],
            next_state: vec![0.3, 0.1],
            observations: vec![vec![0.5]],
            next_observations: vec![vec![0.6]],
            actions: vec![vec![0.1]],
            reward,
            done,
        }
    }

    #[test]
    fn buffer_evicts_fifo() {
        let mut buffer = ReplayBuffer::new(3);
        for i in 0..4 {
            buffer.push(tiny_transition(i as f64, false));
        }
        assert_eq!(buffer.len(), 3);
        let rewards: Vec<f64> = (0..3).map(|i| buffer.get(i).reward).collect();
        // Slot 0 was overwritten by the 4th push.
        assert_eq!(rewards, vec![3.0, 1.0, 2.0]);
    }

    #[test]
    fn premature_sample_errors() {
        let mut buffer = ReplayBuffer::new(10);
        buffer.push(tiny_transition(0.0, false));
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        let err = buffer.sample_indices(2, &mut rng).unwrap_err();
        assert_eq!(err, BufferUnderfull { has: 1, wants: 2 });
    }

    #[test]
    fn sampling_is_uniform_without_replacement() {
        let mut buffer = ReplayBuffer::new(100);
        for i in 0..100 {
            buffer.push(tiny_transition(i as f64, false));
        }
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let mut counts = vec![0usize; 100];
        let draws = 100_000;
        let batch = 10;
        for _ in 0..draws / batch {
            let indices = buffer.sample_indices(batch, &mut rng).unwrap();
            let mut seen = indices.clone();
            seen.sort_unstable();
            seen.dedup();
            assert_eq!(seen.len(), batch, "indices must be distinct");
            for i in indices {
                counts[i] += 1;
            }
        }
        // Each index expects draws/100 hits; allow 3 sigma of the binomial.
        let expected = draws as f64 / 100.0;
        let sigma = (draws as f64 * (1.0 / 100.0) * (99.0 / 100.0)).sqrt();
        for (i, &c) in counts.iter().enumerate() {
            assert!(
                (c as f64 - expected).abs() < 3.0 * sigma + 1e-9,
                "index {i} drawn {c} times, expected {expected} +- {sigma}"
            );
        }
    }

    /// A fleet with hand-set scalar networks: critic Q = w * a + b over
    /// input [s0, s1, a] picks out the action column.
    fn scalar_fleet() -> Fleet {
        let params = TrainingParams {
            actor_hidden: vec![1],
            critic_hidden: vec![1],
            discount: 0.9,
            ..TrainingParams::default()
        };
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        Fleet::new(&params, CriticMode::SharedCentralized, 1, 1, 2, 1, &mut rng)
    }

    #[test]
    fn critic_targets_match_hand_computation() {
        let mut fleet = scalar_fleet();
        // Target actor: output = tanh(1 * tanh... use identity-ish tiny nets:
        // set both layers to identity pass-through of the observation.
        for layer in &mut fleet.actors[0].target.layers {
            layer.weights.fill(1.0);
            layer.bias.fill(0.0);
        }
        // Target critic: first layer sums its 3 inputs (relu), second layer
        // scales by 2.
        for layer in &mut fleet.critics[0].target.layers {
            layer.weights.fill(1.0);
            layer.bias.fill(0.0);
        }
        fleet.critics[0].target.layers[1].weights.fill(2.0);

        let t = tiny_transition(0.5, false);
        let targets = fleet.critic_targets(0, &[&t]);
        // a' = tanh(relu(0.6)) ; q' = 2 * relu(0.3 + 0.1 + a') ; y = 0.5 + 0.9 q'
        let a_prime = (0.6f64).tanh();
        let q_prime = 2.0 * (0.3 + 0.1 + a_prime);
        let expected = 0.5 + 0.9 * q_prime;
        assert!((targets[0] - expected).abs() < 1e-12, "{} vs {expected}", targets[0]);

        // gamma = 0 collapses to the reward.
        fleet.discount = 0.0;
        assert_eq!(fleet.critic_targets(0, &[&t])[0], 0.5);

        // Terminal transitions drop the bootstrap regardless of gamma.
        fleet.discount = 0.9;
        let done = tiny_transition(0.5, true);
        assert_eq!(fleet.critic_targets(0, &[&done])[0], 0.5);
    }

    #[test]
    fn critic_loss_matches_recomputed_residuals() {
        let fleet = scalar_fleet();
        let transitions = vec![
            tiny_transition(0.3, false),
            tiny_transition(-0.7, false),
            tiny_transition(0.1, true),
        ];
        let batch: Vec<&Transition> = transitions.iter().collect();
        let loss = fleet.critic_batch_loss(0, &batch);

        let targets = fleet.critic_targets(0, &batch);
        let mut expected = 0.0;
        for (t, y) in batch.iter().zip(&targets) {
            let mut row = t.state.clone();
            row.extend_from_slice(&t.actions[0]);
            let q = fleet.critics[0].online.forward(&row)[0];
            expected += (q - y) * (q - y);
        }
        expected /= batch.len() as f64;
        assert!((loss - expected).abs() < 1e-12);
    }

    #[test]
    fn overfitting_one_transition_drives_loss_down() {
        let params = TrainingParams {
            actor_hidden: vec![4],
            critic_hidden: vec![4],
            critic_lr: 1e-2,
            ..TrainingParams::default()
        };
        let mut rng = ChaCha8Rng::seed_from_u64(8);
        let mut fleet = Fleet::new(&params, CriticMode::SharedCentralized, 1, 1, 2, 1, &mut rng);
        let t = tiny_transition(1.0, true);
        let batch = vec![&t];
        let mut losses = Vec::new();
        for _ in 0..2000 {
            losses.push(fleet.update_critic(0, &batch));
        }
        assert!(losses[1999] < 1e-6, "final loss {}", losses[1999]);
        // Monotone decrease after an Adam burn-in (floating noise aside once
        // the loss is effectively zero).
        for w in losses[200..].windows(2) {
            assert!(
                w[1] <= w[0] * 1.05 || w[1] < 1e-9,
                "loss bounced: {} -> {}",
                w[0],
                w[1]
            );
        }
    }

    #[test]
    fn critic_fixed_point_leaves_parameters_nearly_unchanged() {
        let mut fleet = scalar_fleet();
        // Critic identically zero; reward zero; terminal => y = 0 = q.
        for layer in &mut fleet.critics[0].online.layers {
            layer.weights.fill(0.0);
            layer.bias.fill(0.0);
        }
        let before = fleet.critics[0].online.clone();
        let t = tiny_transition(0.0, true);
        let loss = fleet.update_critic(0, &[&t]);
        assert_eq!(loss, 0.0);
        for (la, lb) in before.layers.iter().zip(&fleet.critics[0].online.layers) {
            for (a, b) in la.weights.iter().zip(&lb.weights) {
                assert!((a - b).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn actor_unmoved_when_critic_ignores_action() {
        let mut fleet = scalar_fleet();
        // Zero the critic input weights on the action column: Q constant in a.
        let in_dim = fleet.critics[0].online.layers[0].in_dim;
        let out_dim = fleet.critics[0].online.layers[0].out_dim;
        for o in 0..out_dim {
            fleet.critics[0].online.layers[0].weights[(in_dim - 1) * out_dim + o] = 0.0;
        }
        let before = fleet.actors[0].online.clone();
        let t = tiny_transition(0.2, false);
        fleet.update_actor(0, &[&t]);
        assert_eq!(before, fleet.actors[0].online);
    }

    #[test]
    fn actor_ascends_to_analytic_optimum() {
        // Objective J(a) = -(a - 0.5)^2, dJ/da = -2 (a - 0.5).
        let params = TrainingParams {
            actor_hidden: vec![8],
            actor_lr: 1e-3,
            ..TrainingParams::default()
        };
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let mut fleet = Fleet::new(&params, CriticMode::SharedCentralized, 1, 1, 2, 1, &mut rng);
        let obs = Matrix::from_rows(&[vec![0.3]]);
        for _ in 0..2000 {
            let cache = fleet.actors[0].online.forward_batch(&obs);
            let a = cache.output().row(0)[0];
            let mut dj_da = Matrix::zeros(1, 1);
            dj_da.row_mut(0)[0] = -2.0 * (a - 0.5);
            ascend_actor(&mut fleet.actors[0], &cache, &dj_da);
        }
        let a = fleet.actors[0].online.forward(&[0.3])[0];
        assert!((a - 0.5).abs() < 0.05, "converged to {a}");
    }

    #[test]
    fn actor_gradient_matches_finite_differences_of_objective() {
        let params = TrainingParams {
            actor_hidden: vec![4],
            critic_hidden: vec![5],
            ..TrainingParams::default()
        };
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let mut fleet = Fleet::new(&params, CriticMode::PerAgentCentralized, 2, 3, 6, 2, &mut rng);
        // Undo the near-zero output scaling so gradients are well away from
        // the relu kinks.
        fleet.actors[0].online.scale_output_layer(1e3);

        let t = Transition {
            state: vec![0.1, 0.6, 0.3, 0.9, 0.2, 0.5],
            next_state: vec![0.3; 6],
            observations: vec![vec![0.4, 0.1, 0.7], vec![0.2, 0.9, 0.5]],
            next_observations: vec![vec![0.1; 3], vec![0.2; 3]],
            actions: vec![vec![0.1, -0.2], vec![0.4, 0.3]],
            reward: 0.0,
            done: false,
        };
        let batch = vec![&t];

        // J as a function of actor parameters, recomputed from scratch.
        let objective = |fleet: &Fleet| -> f64 {
            let a_new = fleet.actors[0].online.forward(&t.observations[0]);
            let mut row = t.state.clone();
            row.extend_from_slice(&a_new);
            row.extend_from_slice(&t.actions[1]);
            fleet.critics[0].online.forward(&row)[0]
        };

        // Analytic parameter gradient via the ascent path: capture it by
        // differencing a single tiny Adam-free probe. Instead, reuse
        // update_actor's internals indirectly: finite-difference J wrt a few
        // parameters and compare with the backward result.
        let obs = Matrix::from_rows(&[t.observations[0].clone()]);
        let cache = fleet.actors[0].online.forward_batch(&obs);
        let a_new = cache.output().row(0).to_vec();
        let mut row = t.state.clone();
        row.extend_from_slice(&a_new);
        row.extend_from_slice(&t.actions[1]);
        let critic_cache = fleet.critics[0].online.forward_batch(&Matrix::from_rows(&[row]));
        let mut q_grad = Matrix::zeros(1, 1);
        q_grad.row_mut(0)[0] = 1.0;
        let (_, input_grad) = fleet.critics[0].online.backward(&critic_cache, &q_grad);
        let mut dj_da = Matrix::zeros(1, 2);
        dj_da.row_mut(0).copy_from_slice(&input_grad.row(0)[6..8]);
        let (actor_grads, _) = {
            // d(-J)/d(params): negate afterwards for dJ/d(params).
            let mut descent = dj_da.clone();
            for v in &mut descent.data {
                *v = -*v;
            }
            fleet.actors[0].online.backward(&cache, &descent)
        };

        let h = 1e-6;
        for l in 0..fleet.actors[0].online.layers.len() {
            for idx in (0..fleet.actors[0].online.layers[l].weights.len()).step_by(3) {
                let orig = fleet.actors[0].online.layers[l].weights[idx];
                fleet.actors[0].online.layers[l].weights[idx] = orig + h;
                let up = objective(&fleet);
                fleet.actors[0].online.layers[l].weights[idx] = orig - h;
                let down = objective(&fleet);
                fleet.actors[0].online.layers[l].weights[idx] = orig;
                let numeric = (up - down) / (2.0 * h);
                let analytic = -actor_grads.weights[l][idx];
                let denom = numeric.abs().max(analytic.abs()).max(1e-4);
                assert!(
                    (numeric - analytic).abs() / denom < 1e-3,
                    "layer {l} w[{idx}]: fd {numeric} vs {analytic}"
                );
            }
        }
        let _ = batch;
    }

    #[test]
    fn critic_updates_mostly_decrease_batch_loss() {
        let mut raw = RawConfig::default();
        raw.scenario.num_vehicles = 2;
        raw.scenario.num_servers = 2;
        raw.scenario.horizon_slots = 30;
        raw.training.actor_hidden = vec![16];
        raw.training.critic_hidden = vec![16];
        raw.training.critic_lr = 1e-4;
        raw.training.batch_size = 16;
        let cfg = raw.validate().unwrap();

        let mut env = Environment::new(cfg.clone());
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let mut fleet = Fleet::new(
            &cfg.training,
            CriticMode::SharedCentralized,
            env.num_agents(),
            env.observation_dim(),
            env.global_state_dim(),
            env.action_dim(),
            &mut rng,
        );
        let mut buffer = ReplayBuffer::new(1000);
        let mut observations = env.reset(4);
        for _ in 0..300 {
            let actions: Vec<Vec<f64>> = (0..2).map(|n| fleet.act_noisy(n, &observations[n], 0.5, &mut rng)).collect();
            let state = env.global_state();
            let outcome = env.step(&actions);
            buffer.push(Transition {
                state,
                next_state: env.global_state(),
                observations: observations.clone(),
                next_observations: outcome.observations.clone(),
                actions,
                reward: outcome.reward,
                done: outcome.done,
            });
            observations = if outcome.done { env.reset(rng.gen()) } else { outcome.observations };
        }

        let mut decreased = 0;
        for _ in 0..100 {
            let indices = buffer.sample_indices(16, &mut rng).unwrap();
            let batch: Vec<&Transition> = indices.iter().map(|&i| buffer.get(i)).collect();
            let before = fleet.update_critic(0, &batch);
            let after = fleet.critic_batch_loss(0, &batch);
            if after < before {
                decreased += 1;
            }
        }
        assert!(decreased >= 90, "loss decreased on only {decreased}/100 updates");
    }

    fn quick_cfg(episodes: usize) -> ScenarioConfig {
        let mut raw = RawConfig::default();
        raw.scenario.num_vehicles = 2;
        raw.scenario.num_servers = 2;
        raw.scenario.horizon_slots = 10;
        raw.training.episodes = episodes;
        raw.training.batch_size = 8;
        raw.training.warmup_factor = 2;
        raw.training.actor_hidden = vec![8];
        raw.training.critic_hidden = vec![8];
        raw.validate().unwrap()
    }

    #[test]
    fn zero_episodes_leaves_fleet_at_init() {
        let result_a = train(&quick_cfg(0), CriticMode::SharedCentralized, 11);
        let result_b = train(&quick_cfg(0), CriticMode::SharedCentralized, 11);
        assert!(result_a.episodes.is_empty());
        assert_eq!(result_a.fleet.actors[0].online, result_b.fleet.actors[0].online);
        assert_eq!(result_a.fleet.critics[0].online, result_b.fleet.critics[0].online);
        // Targets start equal to the online networks.
        assert_eq!(result_a.fleet.actors[0].online, result_a.fleet.actors[0].target);
    }

    #[test]
    fn training_is_deterministic_per_seed() {
        let a = train(&quick_cfg(5), CriticMode::SharedCentralized, 21);
        let b = train(&quick_cfg(5), CriticMode::SharedCentralized, 21);
        assert_eq!(a.episodes, b.episodes);
        assert_eq!(a.fleet.actors[1].online, b.fleet.actors[1].online);
        let c = train(&quick_cfg(5), CriticMode::SharedCentralized, 22);
        assert_ne!(a.episodes, c.episodes);
    }

    #[test]
    fn greedy_action_is_deterministic_and_bounded() {
        let result = train(&quick_cfg(2), CriticMode::SharedCentralized, 31);
        let obs = vec![0.3; 10];
        let a = result.fleet.act_greedy(0, &obs);
        let b = result.fleet.act_greedy(0, &obs);
        assert_eq!(a, b);
        assert_eq!(a.len(), 4); // M + 2 with M = 2
        assert!(a.iter().all(|&v| v > -1.0 && v < 1.0));
    }

    #[test]
    fn shared_and_independent_critic_shapes() {
        let params = TrainingParams::default();
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        let shared = Fleet::new(&params, CriticMode::SharedCentralized, 4, 10, 36, 4, &mut rng);
        assert_eq!(shared.critics.len(), 1);
        assert_eq!(shared.critic_input_dim(), 36 + 4 * 4);

        let per_agent = Fleet::new(&params, CriticMode::PerAgentCentralized, 4, 10, 36, 4, &mut rng);
        assert_eq!(per_agent.critics.len(), 4);

        let local = Fleet::new(&params, CriticMode::IndependentLocal, 4, 10, 36, 4, &mut rng);
        assert_eq!(local.critics.len(), 4);
        assert_eq!(local.critic_input_dim(), 10 + 4);

        // Single-agent degeneracy: independent and centralized critics match
        // when the "global" state is the lone observation.
        let a = Fleet::new(&params, CriticMode::IndependentLocal, 1, 10, 10, 4, &mut rng);
        let b = Fleet::new(&params, CriticMode::SharedCentralized, 1, 10, 10, 4, &mut rng);
        assert_eq!(a.critic_input_dim(), b.critic_input_dim());
    }
}
