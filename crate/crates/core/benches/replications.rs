//! Sequential vs rayon replications, plus the UCB1 argmax that dominates
//! large grids.

use std::hint::black_box;

use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};

use rank1bandit::baselines::Ucb1;
use rank1bandit::env::SpikeSpec;
use rank1bandit::harness::{run_replications, EnvSpec, Execution, ExperimentConfig};
use rank1bandit::model::{Arm, Policy};
use rank1bandit::rng::{stream, StreamRole};

fn replications(c: &mut Criterion) {
    let mut group = c.benchmark_group("replications");
    group.sample_size(10);
    for policy in ["rank1elim", "ucb1"] {
        let config = ExperimentConfig::new(
            EnvSpec::Spike(SpikeSpec::new(16, 16, 0.7, 0.7, 0.2, 0.2)),
            policy.parse().unwrap(),
            100_000,
            8,
            1,
        );
        for (label, execution) in [
            ("sequential", Execution::Sequential),
            ("parallel", Execution::Parallel),
        ] {
            group.bench_with_input(BenchmarkId::new(label, policy), &config, |b, config| {
                b.iter(|| run_replications(black_box(config), execution).unwrap())
            });
        }
    }
    group.finish();
}

fn ucb1_choose(c: &mut Criterion) {
    let mut rng = stream(0, 0, StreamRole::Policy);
    let mut policy = Ucb1::new(64, 64);
    for a in 0..64 * 64 {
        policy.observe(Arm::new(a / 64, a % 64), ((a * 7919) % 13) as f64 / 13.0);
    }
    c.bench_function("ucb1_choose_4096", |b| {
        b.iter(|| black_box(policy.choose(1, &mut rng)))
    });
}

criterion_group!(benches, replications, ucb1_choose);
criterion_main!(benches);
