use std::hint::black_box;

use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use dynakernel::{corpus, to_tikz, NodeId, Point, TikzOptions};
use dynakernel_bench::scattered;

fn wireless_moves(c: &mut Criterion) {
    let mut group = c.benchmark_group("move_to");
    for n in [50usize, 200, 800] {
        group.bench_with_input(BenchmarkId::from_parameter(n), &n, |b, &n| {
            let mut sim = scattered(n, None, 1);
            let mut i = 0u32;
            b.iter(|| {
                let id = NodeId(i % n as u32);
                let rng = sim.rng_mut();
                let p = Point::new(rng.uniform(0.0, 800.0), rng.uniform(0.0, 600.0));
                sim.move_to(id, p).unwrap();
                i += 1;
            });
        });
    }
    group.finish();
}

fn ticks(c: &mut Criterion) {
    let mut group = c.benchmark_group("tick");
    for name in [
        corpus::RED_GREEN_V1,
        corpus::RED_GREEN_V3,
        corpus::RED_GREEN_V4,
    ] {
        group.bench_function(name, |b| {
            let mut sim = scattered(100, Some(name), 2);
            b.iter(|| black_box(sim.tick()));
        });
    }
    group.finish();
}

fn tikz(c: &mut Criterion) {
    let sim = scattered(200, None, 3);
    let opts = TikzOptions::default();
    c.bench_function("to_tikz/200", |b| {
        b.iter(|| black_box(to_tikz(sim.topology(), &opts)))
    });
}

criterion_group!(benches, wireless_moves, ticks, tikz);
criterion_main!(benches);
