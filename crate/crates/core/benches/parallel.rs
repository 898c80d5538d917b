use std::hint::black_box;

use ackplan::bench::{generate_maps, MapFamilySpec};
use ackplan::env::EnvConfig;
use ackplan::kinematics::VehicleParams;
use ackplan::par::Exec;
use ackplan::sac::{evaluate_with, update_with, ReplayBuffer, SacAgent, SacHyper, SacNets, Transition};
use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

const MODES: [(&str, Exec); 2] = [("sequential", Exec::Sequential), ("parallel", Exec::Parallel)];

fn sac_update(c: &mut Criterion) {
    let cfg = EnvConfig::open_field();
    let hyper = SacHyper::default();
    let mut rng = ChaCha8Rng::seed_from_u64(0);
    let mut buffer = ReplayBuffer::new(hyper.batch_size * 4).unwrap();
    let mut obs = || (0..cfg.obs_dim()).map(|_| rng.random_range(0.0..1.0)).collect::<Vec<f64>>();
    for _ in 0..buffer.capacity() {
        let (o, n) = (obs(), obs());
        buffer.push(Transition {
            obs: o,
            action: [0.1, -0.2],
            reward: 0.05,
            next_obs: n,
            done: false,
        });
    }
    let mut group = c.benchmark_group("sac_update_batch256");
    for (name, exec) in MODES {
        let mut agent = SacAgent::new(SacNets::new(cfg.obs_dim(), 64, 0).unwrap(), hyper.lr);
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        group.bench_function(BenchmarkId::from_parameter(name), |b| {
            b.iter(|| update_with(&mut agent, &buffer, &hyper, &mut rng, exec).unwrap())
        });
    }
    group.finish();
}

fn evaluation(c: &mut Criterion) {
    let cfg = EnvConfig::open_field();
    let nets = SacNets::new(cfg.obs_dim(), 64, 0).unwrap();
    let mut group = c.benchmark_group("evaluate_16_episodes");
    group.sample_size(10);
    for (name, exec) in MODES {
        group.bench_function(BenchmarkId::from_parameter(name), |b| {
            b.iter(|| evaluate_with(&nets, &cfg, 16, 0, exec).unwrap())
        });
    }
    group.finish();
}

fn map_generation(c: &mut Criterion) {
    let specs: Vec<_> = (0..8).map(MapFamilySpec::clutter).collect();
    let vehicle = VehicleParams::default();
    let mut group = c.benchmark_group("generate_8_clutter_maps");
    group.sample_size(10);
    for (name, exec) in MODES {
        group.bench_function(BenchmarkId::from_parameter(name), |b| {
            b.iter(|| black_box(generate_maps(&specs, &vehicle, exec)))
        });
    }
    group.finish();
}

criterion_group!(benches, sac_update, evaluation, map_generation);
criterion_main!(benches);
