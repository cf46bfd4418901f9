//! Discrete-time simulator of a multi-server vehicular edge computing system
//! with a from-scratch MADDPG learner that jointly decides task offloading
//! and computing-resource allocation, plus comparison policies and an exact
//! brute-force oracle for small instances.

pub mod baselines;
pub mod channel;
pub mod compute;
pub mod env;
pub mod maddpg;
pub mod metrics;
pub mod mobility;
pub mod nn;
pub mod oracle;
pub mod scenario;

pub use scenario::{load_config, ScenarioConfig};
