//! Sequential vs data-parallel comparison of the hot loops.

use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use swapsim_core::grid::{Boundary, Grid};
use swapsim_core::lattice::Spin;
use swapsim_core::par;
use swapsim_core::presets;
use swapsim_core::spectral::solve_stationary;

/// Stationary solves of the ramp snapshots, dispatched through the `par`
/// layer with jobs = 1 (forced sequential) and jobs = 0 (rayon default).
fn bench_ramp_snapshots(c: &mut Criterion) {
    let ramp = presets::merge_ramp(10.0).unwrap();
    let grid = presets::pair_grid(128).unwrap();
    let times: Vec<f64> = (0..16).map(|i| 10.0 * i as f64 / 15.0).collect();

    let mut group = c.benchmark_group("ramp_snapshots");
    group.sample_size(10);
    for jobs in [1usize, 0] {
        group.bench_with_input(BenchmarkId::new("jobs", jobs), &jobs, |b, &jobs| {
            b.iter(|| {
                par::map_collect(jobs, &times, |&t| {
                    let params = ramp.sample(t);
                    solve_stationary(&params, Spin::Zero, &grid, Boundary::Periodic, 4)
                        .map(|s| s.energies[0])
                        .unwrap()
                })
            })
        });
    }
    group.finish();
}

criterion_group!(benches, bench_ramp_snapshots);
criterion_main!(benches);
