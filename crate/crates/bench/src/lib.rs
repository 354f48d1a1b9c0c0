//! Fixtures shared by the benchmarks.

use meqc_core::environment::{stream_rng, SlotSource, World};
use meqc_core::lyapunov::{SlotInput, VirtualQueueState};
use meqc_core::policy::{DqnAgent, DqnHyper, ObservationScaler, ReplayBuffer, Transition};
use meqc_core::ExperimentConfig;
use rand::Rng;

/// First slot of the default world with backlogs spread over `[0, 100)`.
pub fn default_slot(seed: u64) -> (ExperimentConfig, Vec<SlotInput>, VirtualQueueState) {
    let cfg = ExperimentConfig::default();
    let inputs = World::new(&cfg.world, &cfg.taskgen, seed).next_slot();
    let mut queues = VirtualQueueState::new(inputs.len(), cfg.dpp.delta);
    let mut rng = stream_rng(seed, 99);
    for z in &mut queues.backlog {
        *z = rng.random_range(0.0..100.0);
    }
    (cfg, inputs, queues)
}

/// A default-sized agent and a replay buffer holding `n` random transitions.
pub fn agent_with_buffer(n: usize) -> (DqnAgent, ReplayBuffer) {
    let cfg = ExperimentConfig::default();
    let scaler = ObservationScaler::from_config(&cfg.world, &cfg.taskgen);
    let hyper = DqnHyper {
        value_scale: Some(1.0),
        ..DqnHyper::default()
    };
    let agent = DqnAgent::new(hyper, scaler, 1);
    let dim = agent.online.input_dim();
    let mut rng = stream_rng(2, 0);
    let mut buffer = ReplayBuffer::new(n);
    for _ in 0..n {
        let mut v = || {
            (0..dim)
                .map(|_| rng.random_range(0.0..1.0))
                .collect::<Vec<f64>>()
        };
        let (state, next_state) = (v(), v());
        buffer.push(Transition {
            state,
            action: rng.random_range(0..3),
            reward: -rng.random_range(0.0..2.0),
            next_state,
            next_mask: [true; 3],
            terminal: rng.random_bool(0.05),
        });
    }
    (agent, buffer)
}
