use std::hint::black_box;

use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use sdstab::classifier::{scan_region, Grid};
use sdstab::exec::{self, Execution};
use sdstab::simloop::{stability_sweep, LoopParams, PartitionRule};
use sdstab::synth::{synthesize, SynthParams};
use sdstab::templates::Corollary2;

const MODES: [(&str, Execution); 2] = [
    ("sequential", Execution::Sequential),
    ("parallel", Execution::Parallel),
];

fn scan(c: &mut Criterion) {
    let sys = Corollary2::new("1", "1", 3).unwrap().system().unwrap();
    let grid = Grid::cube(3, 1.0, 0.25, 1e-6);
    let mut group = c.benchmark_group("scan_region");
    for (name, mode) in MODES {
        group.bench_function(BenchmarkId::from_parameter(name), |b| {
            b.iter(|| scan_region(black_box(&sys), &grid, mode))
        });
    }
    group.finish();
}

fn synth(c: &mut Criterion) {
    let sys = Corollary2::new("1", "1", 3).unwrap().system().unwrap();
    let points: Vec<Vec<f64>> = vec![
        vec![1.0, 1.0, 0.0],
        vec![1.0, 0.0, 0.0],
        vec![-0.5, 0.3, 0.0],
        vec![0.4, -0.2, 0.7],
        vec![-1.2, 0.0, 0.0],
        vec![0.1, 0.9, -0.3],
    ];
    let mut group = c.benchmark_group("synthesize_batch");
    group.sample_size(20);
    for (name, mode) in MODES {
        let params = SynthParams {
            execution: Execution::Sequential,
            ..SynthParams::default()
        };
        group.bench_function(BenchmarkId::from_parameter(name), |b| {
            b.iter(|| {
                exec::map(mode, &points, |x| {
                    synthesize(&sys, x, 0.25, true, &params).is_ok()
                })
            })
        });
    }
    group.finish();
}

fn sweep(c: &mut Criterion) {
    let sys = Corollary2::new("1", "1", 3).unwrap().system().unwrap();
    let mut params = LoopParams::new(PartitionRule::Uniform { delta: 0.25 }, 2.0, 2.0);
    params.synth.execution = Execution::Sequential;
    let mut group = c.benchmark_group("stability_sweep");
    group.sample_size(10);
    for (name, mode) in MODES {
        group.bench_function(BenchmarkId::from_parameter(name), |b| {
            b.iter(|| stability_sweep(&sys, &[0.1, 0.5, 1.0], &[1.0], &params, 4, 7, mode))
        });
    }
    group.finish();
}

criterion_group!(benches, scan, synth, sweep);
criterion_main!(benches);
