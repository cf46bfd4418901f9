use mecsim::baselines::{evaluate_policy, EvalPolicy};
use mecsim::maddpg::{train, CriticMode};
use mecsim::scenario::RawConfig;
use std::time::Instant;

fn run(tag: &str, episodes: usize, discount: f64, noise_end: f64) {
    let mut raw = RawConfig::default();
    raw.scenario.num_vehicles = 4;
    raw.scenario.num_servers = 2;
    raw.scenario.horizon_slots = 100;
    raw.training.episodes = episodes;
    raw.training.batch_size = 64;
    raw.training.warmup_factor = 10;
    raw.training.update_every = 2;
    raw.training.buffer_capacity = 20_000;
    raw.training.actor_lr = 1e-3;
    raw.training.critic_lr = 1e-3;
    raw.training.discount = discount;
    raw.training.noise_std_end = noise_end;
    raw.training.actor_hidden = vec![64, 64];
    raw.training.critic_hidden = vec![64, 64];
    let cfg = raw.validate().unwrap();

    let start = Instant::now();
    let result = train(&cfg, CriticMode::SharedCentralized, 42);
    let secs = start.elapsed().as_secs_f64();

    let mean = |xs: &[f64]| xs.iter().sum::<f64>() / xs.len() as f64;
    let (g, _) = evaluate_policy(&EvalPolicy::Learned(&result.fleet), &cfg, 30, 9000);
    let (n, _) = evaluate_policy(&EvalPolicy::NearestServer(&result.fleet), &cfg, 30, 9000);
    let (e, _) = evaluate_policy(&EvalPolicy::EqualAllocation(&result.fleet), &cfg, 30, 9000);
    let cost = |rs: &[mecsim::metrics::EpisodeRecord]| mean(&rs.iter().map(|e| e.avg_system_cost).collect::<Vec<_>>());
    println!(
        "{tag}: {secs:.0}s  cost greedy {:.3} nto {:.3} ecra {:.3}",
        cost(&g), cost(&n), cost(&e)
    );
}

fn main() {
    run("g=0.5  250ep", 250, 0.5, 0.05);
    run("g=0.2  250ep", 250, 0.2, 0.05);
    run("g=0.5  250ep noise_end=0.15", 250, 0.5, 0.15);
}
