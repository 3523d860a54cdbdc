//! Parallel versus sequential execution of the independent-restart loops.

use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use std::hint::black_box;

use vqo_core::anneal::Sampler;
use vqo_core::baselines::{restart_harness, HeuristicConfig, RestartPlan, SimAnnealConfig, TabuConfig};
use vqo_core::encoders::{presets, Penalty};
use vqo_core::optimizers::{NelderMeadConfig, OptimizerConfig};
use vqo_core::qaoa::{random_restart_search, InitialState, Mixer, QaoaInstance, RestartConfig};
use vqo_core::Execution;

const MODES: [(&str, Execution); 2] = [
    ("parallel", Execution::Parallel),
    ("sequential", Execution::Sequential),
];

fn qaoa_restarts(c: &mut Criterion) {
    let enc = presets::problem_a(40.0).unwrap();
    let inst = QaoaInstance::new(&enc, Mixer::X, InitialState::Uniform).unwrap();
    let mut group = c.benchmark_group("qaoa_restarts");
    group.sample_size(10);
    for (label, execution) in MODES {
        let cfg = RestartConfig {
            depth: 3,
            restarts: 16,
            optimizer: OptimizerConfig::NelderMead(NelderMeadConfig::default()),
            seed: 1,
            execution,
        };
        group.bench_with_input(BenchmarkId::from_parameter(label), &cfg, |b, cfg| {
            b.iter(|| black_box(random_restart_search(&inst, cfg).unwrap()))
        });
    }
    group.finish();
}

fn tabu_restarts(c: &mut Criterion) {
    let enc = presets::grid_two_ambulances(4, Penalty::Absolute(60.0)).unwrap();
    let mut group = c.benchmark_group("tabu_restarts");
    group.sample_size(10);
    for (label, execution) in MODES {
        let plan = RestartPlan {
            heuristic: HeuristicConfig::Tabu(TabuConfig::default()),
            restarts: 64,
            seed: 1,
            execution,
        };
        group.bench_with_input(BenchmarkId::from_parameter(label), &plan, |b, plan| {
            b.iter(|| black_box(restart_harness(&enc, plan, 1.0).unwrap()))
        });
    }
    group.finish();
}

fn annealer_reads(c: &mut Criterion) {
    let enc = presets::problem_b(Penalty::Ratio(1.0)).unwrap();
    let sampler = Sampler::SimAnneal(SimAnnealConfig {
        sweeps: 200,
        ..Default::default()
    });
    let mut group = c.benchmark_group("annealer_reads");
    group.sample_size(10);
    for (label, execution) in MODES {
        group.bench_function(label, |b| {
            b.iter(|| black_box(sampler.sample(&enc, 256, 1, execution).unwrap()))
        });
    }
    group.finish();
}

criterion_group!(benches, qaoa_restarts, tabu_restarts, annealer_reads);
criterion_main!(benches);
