use criterion::{criterion_group, criterion_main, BatchSize, Criterion};
use meqc_bench::{agent_with_buffer, default_slot};
use meqc_core::environment::{stream_rng, SlotSource, World};
use meqc_core::harness::run;
use meqc_core::lyapunov::solve_slot;
use meqc_core::model::{evaluate, Decision, Mode};
use meqc_core::policy::dqn::dqn_train_step;
use meqc_core::PolicyKind;
use std::hint::black_box;

fn model(c: &mut Criterion) {
    let (cfg, inputs, _) = default_slot(1);
    let i = inputs[0];
    c.bench_function("evaluate/qpu", |b| {
        b.iter(|| {
            evaluate(
                black_box(&Decision::offload(Mode::Qpu, 0.6)),
                &i.task,
                &i.device,
                &i.channel,
                &cfg.quantum,
                &cfg.qec,
            )
        })
    });
}

fn solver(c: &mut Criterion) {
    let (cfg, inputs, queues) = default_slot(1);
    c.bench_function("solve_slot/15 devices", |b| {
        b.iter(|| {
            solve_slot(
                black_box(&inputs),
                &cfg.quantum,
                &cfg.qec,
                &queues,
                &cfg.dpp,
            )
        })
    });
    let mut world = World::new(&cfg.world, &cfg.taskgen, 3);
    c.bench_function("world/next_slot", |b| b.iter(|| world.next_slot()));
    let mut short = cfg.clone();
    short.horizon_slots = 100;
    c.bench_function("run/lyapunov 100 slots", |b| {
        b.iter(|| run(&short, PolicyKind::LyapunovExact, 1))
    });
}

fn learner(c: &mut Criterion) {
    let (agent, buffer) = agent_with_buffer(5_000);
    let mut group = c.benchmark_group("dqn");
    group.sample_size(20);
    group.bench_function("train_step 3x512 batch 64", |b| {
        b.iter_batched(
            || {
                (
                    agent.online.clone(),
                    agent.optimizer.clone(),
                    stream_rng(5, 0),
                )
            },
            |(mut online, mut opt, mut rng)| {
                dqn_train_step(
                    &buffer,
                    &mut online,
                    &agent.target,
                    &mut opt,
                    &agent.hyper,
                    &mut rng,
                )
            },
            BatchSize::LargeInput,
        )
    });
    group.finish();
}

criterion_group!(benches, model, solver, learner);
criterion_main!(benches);
