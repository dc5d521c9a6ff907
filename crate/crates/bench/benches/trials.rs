use acs_bench::parse_config;
use acs_bench::runner::{run_grid, run_grid_sequential};
use criterion::{criterion_group, criterion_main, Criterion};
use std::hint::black_box;

const GRID: &str = "
[defaults]
trials = 16

[bench]
scheme = linf_l2, round_optimal_l2l2, count_sketch
family = spike-plus-gaussian(snr=10)
n = 16384
k = 8
eps = 0.5
";

// With the `parallel` feature off both paths are sequential and should match.
fn grid(c: &mut Criterion) {
    let cells = parse_config(GRID).unwrap();
    let mut g = c.benchmark_group("grid");
    g.sample_size(10);
    g.bench_function("run_grid", |b| b.iter(|| run_grid(black_box(&cells), 1)));
    g.bench_function("run_grid_sequential", |b| b.iter(|| run_grid_sequential(black_box(&cells), 1)));
    g.finish();
}

criterion_group!(benches, grid);
criterion_main!(benches);
