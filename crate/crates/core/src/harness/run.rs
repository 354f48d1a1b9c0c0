use std::time::Instant;

use serde::{Deserialize, Serialize};

use super::config::ExperimentConfig;
use crate::environment::{SlotSource, World};
use crate::lyapunov::{constraint_drift, VirtualQueueState};
use crate::model::{evaluate, Mode};
use crate::policy::{
    policy_decide, DqnAgent, ObservationScaler, Policy, PolicyContext, PolicyKind,
};

/// One device in one slot.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SlotRecord {
    pub slot: u64,
    pub device_id: usize,
    pub policy: String,
    pub mode: Mode,
    pub phi: f64,
    pub time_s: f64,
    pub energy_j: f64,
    pub wset: f64,
    /// Virtual-queue backlog after this slot's update.
    pub backlog: f64,
    pub feasible: bool,
    pub seed: u64,
}

/// Aggregate of one run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunSummary {
    pub policy: String,
    pub seed: u64,
    /// Mean over slots of the total cost across devices.
    pub time_avg_wset: f64,
    /// Per device, mean over slots of `delta * 1[phi = 0] - phi`.
    pub constraint_residual: Vec<f64>,
    pub infeasible_fraction: f64,
    /// Zero unless wall-clock recording is enabled.
    pub wall_time_s: f64,
}

impl RunSummary {
    /// Aggregate a complete record stream of `num_devices` devices.
    pub fn from_records(
        records: &[SlotRecord],
        policy: &str,
        seed: u64,
        num_devices: usize,
        delta: f64,
    ) -> Self {
        let slots = records.len().checked_div(num_devices).unwrap_or(0);
        let denom = slots.max(1) as f64;
        let mut residual = vec![0.0; num_devices];
        let mut total = 0.0;
        let mut infeasible = 0usize;
        for r in records {
            total += r.wset;
            residual[r.device_id] += constraint_drift(r.phi, delta);
            infeasible += usize::from(!r.feasible);
        }
        residual.iter_mut().for_each(|x| *x /= denom);
        Self {
            policy: policy.to_string(),
            seed,
            time_avg_wset: total / denom,
            constraint_residual: residual,
            infeasible_fraction: if records.is_empty() {
                0.0
            } else {
                infeasible as f64 / records.len() as f64
            },
            wall_time_s: 0.0,
        }
    }
}

/// Drive `policy` on `source` for `horizon` slots from empty queues.
pub fn simulate<S: SlotSource>(
    source: &mut S,
    policy: &mut Policy,
    ctx: &PolicyContext,
    horizon: usize,
    seed: u64,
) -> (RunSummary, Vec<SlotRecord>) {
    let n = source.num_devices();
    let name = policy.kind().as_str();
    let mut queues = VirtualQueueState::new(n, ctx.dpp.delta);
    let mut records = Vec::with_capacity(horizon * n);
    for _ in 0..horizon {
        let slot = queues.slot;
        let inputs = source.next_slot();
        let decisions = policy_decide(policy, &inputs, &queues, ctx);
        queues.apply(&decisions);
        for (m, (input, d)) in inputs.iter().zip(&decisions).enumerate() {
            let cost = evaluate(
                d,
                &input.task,
                &input.device,
                &input.channel,
                &ctx.qhw,
                &ctx.qec,
            );
            records.push(SlotRecord {
                slot,
                device_id: m,
                policy: name.to_string(),
                mode: d.mode(),
                phi: d.phi,
                time_s: cost.time_s,
                energy_j: cost.energy_j,
                wset: cost.wset,
                backlog: queues.backlog[m],
                feasible: cost.feasible,
                seed,
            });
        }
    }
    let summary = RunSummary::from_records(&records, name, seed, n, ctx.dpp.delta);
    (summary, records)
}

fn splitmix64(mut x: u64) -> u64 {
    x = x.wrapping_add(0x9E37_79B9_7F4A_7C15);
    x = (x ^ (x >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    x = (x ^ (x >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    x ^ (x >> 31)
}

/// Seed of the world used for training episode `epoch` of run `seed`;
/// never equal to an evaluation seed in practice.
pub fn training_seed(seed: u64, epoch: usize) -> u64 {
    splitmix64(splitmix64(seed ^ 0x7261_696E_5345_4544).wrapping_add(epoch as u64))
}

/// Train a fresh agent for `config.epochs` episodes on independently
/// seeded worlds.
pub fn train_dqn(config: &ExperimentConfig, seed: u64) -> DqnAgent {
    let scaler = ObservationScaler::from_config(&config.world, &config.taskgen);
    let mut agent = DqnAgent::new(config.policy.dqn.clone(), scaler, seed);
    let ctx = config.context();
    for epoch in 0..config.epochs {
        let mut world = World::new(&config.world, &config.taskgen, training_seed(seed, epoch));
        agent.train_episode(&mut world, &ctx);
    }
    agent
}

/// Build the policy for a run, training it first if it learns.
pub fn prepare_policy(config: &ExperimentConfig, kind: PolicyKind, seed: u64) -> Policy {
    if kind.is_learning() {
        Policy::Dqn(Box::new(train_dqn(config, seed)))
    } else {
        Policy::baseline(kind, seed)
    }
}

/// One evaluation run of `kind` on the world seeded by `seed`.
pub fn run(
    config: &ExperimentConfig,
    kind: PolicyKind,
    seed: u64,
) -> (RunSummary, Vec<SlotRecord>) {
    let start = Instant::now();
    let mut policy = prepare_policy(config, kind, seed);
    let (mut summary, records) = run_with_policy(config, &mut policy, seed);
    if config.record_wall_time {
        summary.wall_time_s = start.elapsed().as_secs_f64();
    }
    (summary, records)
}

/// Evaluate an already prepared policy on the world seeded by `seed`.
pub fn run_with_policy(
    config: &ExperimentConfig,
    policy: &mut Policy,
    seed: u64,
) -> (RunSummary, Vec<SlotRecord>) {
    let mut world = World::new(&config.world, &config.taskgen, seed);
    simulate(
        &mut world,
        policy,
        &config.context(),
        config.horizon_slots,
        seed,
    )
}

#[cfg(test)]
mod tests {
    use super::*;

    fn small() -> ExperimentConfig {
        let mut c = ExperimentConfig::default();
        c.world.num_devices = 3;
        c.horizon_slots = 20;
        c
    }

    #[test]
    fn local_only_backlog_grows_by_delta() {
        let cfg = small();
        let (summary, records) = run(&cfg, PolicyKind::LocalOnly, 7);
        assert_eq!(records.len(), 60);
        for r in &records {
            assert_eq!(r.phi, 0.0);
            let expect = cfg.dpp.delta * (r.slot + 1) as f64;
            assert!((r.backlog - expect).abs() < 1e-12);
        }
        for res in &summary.constraint_residual {
            assert!((res - cfg.dpp.delta).abs() < 1e-15);
        }
    }

    #[test]
    fn runs_are_repeatable() {
        let cfg = small();
        for kind in [PolicyKind::Random, PolicyKind::LyapunovExact] {
            assert_eq!(run(&cfg, kind, 3), run(&cfg, kind, 3));
        }
    }

    #[test]
    fn summary_matches_independent_aggregation() {
        let cfg = small();
        let (summary, records) = run(&cfg, PolicyKind::CpuContinuous, 11);
        let mut per_slot = vec![0.0; cfg.horizon_slots];
        for r in &records {
            per_slot[r.slot as usize] += r.wset;
        }
        let mean = per_slot.iter().sum::<f64>() / per_slot.len() as f64;
        assert!((summary.time_avg_wset - mean).abs() <= 1e-12 * mean);
    }

    #[test]
    fn training_seeds_differ_from_run_seed() {
        let seeds: std::collections::BTreeSet<u64> =
            (0..100).map(|e| training_seed(1, e)).collect();
        assert_eq!(seeds.len(), 100);
        assert!(!seeds.contains(&1));
    }
}
