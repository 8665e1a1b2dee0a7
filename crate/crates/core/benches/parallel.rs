use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use std::hint::black_box;

use pathtune::eval::{evaluate_gains, grid_compare};
use pathtune::rl::{train_sweep, TrainingConfig, TrainingEnv};
use pathtune::supervisor::{LANE_CHANGE_GAINS, ROUNDABOUT_GAINS};
use pathtune::{Exec, GainSet, Maneuver, NoiseModel, Scenario, SimConfig};

fn modes() -> Vec<(&'static str, Exec)> {
    let mut m = vec![("sequential", Exec::Sequential)];
    #[cfg(feature = "parallel")]
    m.push(("parallel", Exec::Parallel));
    m
}

fn bench_evaluate(c: &mut Criterion) {
    let sim = SimConfig::default();
    let scenario = Scenario::for_maneuver(Maneuver::LaneChange).unwrap();
    let noise = NoiseModel::enabled(0);
    let mut group = c.benchmark_group("evaluate_gains_10_runs");
    group.sample_size(10);
    for (name, exec) in modes() {
        group.bench_function(BenchmarkId::from_parameter(name), |b| {
            b.iter(|| evaluate_gains(black_box(&LANE_CHANGE_GAINS), &scenario, &sim, &noise, 10, 0, exec).unwrap())
        });
    }
    group.finish();
}

fn bench_compare(c: &mut Criterion) {
    let sim = SimConfig::default();
    let scenario = Scenario::for_maneuver(Maneuver::Roundabout).unwrap();
    let sets = [
        ROUNDABOUT_GAINS,
        LANE_CHANGE_GAINS,
        GainSet::new(1.0, 1.0, 1.0, 0.7),
        GainSet::new(5.8, 21.0, 21.0, 0.98),
    ];
    let noise = [NoiseModel::disabled(), NoiseModel::enabled(0)];
    let mut group = c.benchmark_group("grid_compare_4x2");
    group.sample_size(10);
    for (name, exec) in modes() {
        group.bench_function(BenchmarkId::from_parameter(name), |b| {
            b.iter(|| grid_compare(black_box(&sets), &scenario, &sim, &noise, 3, 0, exec).unwrap())
        });
    }
    group.finish();
}

fn bench_sweep(c: &mut Criterion) {
    let env = TrainingEnv::new(SimConfig::default(), Scenario::for_maneuver(Maneuver::LaneChange).unwrap());
    let cfg = TrainingConfig { episodes: 6, loop_time: 2.0, ..TrainingConfig::lane_change() };
    let alphas = [0.1, 0.3, 0.5, 0.7, 0.9];
    let mut group = c.benchmark_group("train_sweep_5_alphas");
    group.sample_size(10);
    for (name, exec) in modes() {
        group.bench_function(BenchmarkId::from_parameter(name), |b| {
            b.iter(|| train_sweep(black_box(&cfg), &alphas, &env, exec).unwrap())
        });
    }
    group.finish();
}

criterion_group!(benches, bench_evaluate, bench_compare, bench_sweep);
criterion_main!(benches);
