use criterion::{criterion_group, criterion_main, Criterion};
use navsim_core::batch::{plan_batch, plan_batch_sequential, run_batch, run_batch_sequential};
use navsim_core::sim::{BehaviorMode, EpisodeOptions, WorldState};
use navsim_core::{maps, parse_map, GridMap, RobotConfig};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn random_maps(n: usize) -> Vec<GridMap> {
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    (0..n)
        .map(|_| {
            let mut text = String::new();
            for r in 0..40 {
                for c in 0..40 {
                    text.push(match (r, c) {
                        (0, 0) => 'M',
                        (39, 39) => 'E',
                        _ if rng.random_bool(0.25) => '#',
                        _ => '.',
                    });
                }
                text.push('\n');
            }
            parse_map(&text).unwrap()
        })
        .collect()
}

fn worlds(n: u64) -> Vec<WorldState> {
    let map = parse_map(maps::CLUTTERED_ROOM).unwrap();
    (0..n)
        .map(|seed| WorldState::new(map.clone(), RobotConfig::default(), seed).unwrap())
        .collect()
}

fn bench(c: &mut Criterion) {
    let grids = random_maps(100);
    let mut g = c.benchmark_group("plan_100_maps");
    g.bench_function("sequential", |b| b.iter(|| plan_batch_sequential(&grids)));
    g.bench_function("parallel", |b| b.iter(|| plan_batch(&grids)));
    g.finish();

    let opts = EpisodeOptions::new(BehaviorMode::Avoidance, 1000);
    let mut g = c.benchmark_group("avoidance_16_episodes");
    g.sample_size(10);
    g.bench_function("sequential", |b| {
        b.iter(|| run_batch_sequential(worlds(16), &opts))
    });
    g.bench_function("parallel", |b| b.iter(|| run_batch(worlds(16), &opts)));
    g.finish();
}

criterion_group!(benches, bench);
criterion_main!(benches);
