use std::hint::black_box;

use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use watchdog_bench::trellis_fixture;
use watchdog_core::experiment::run_point;
use watchdog_core::simnet::{TwoHopConfig, TwoHopRunner};
use watchdog_core::{compute_p_star, forward_pass, FieldParams, HashFn, SimRng};

fn field_mul(c: &mut Criterion) {
    let field = FieldParams::new(10).unwrap();
    c.bench_function("gf_mul n=10 all pairs of 32", |b| {
        b.iter(|| {
            let mut acc = 0;
            for a in 0..32u32 {
                for x in 0..32u32 {
                    acc ^= field.mul(black_box(a * 31 + 1), black_box(x * 29));
                }
            }
            acc
        })
    });
}

fn hash_classes(c: &mut Criterion) {
    let hash = HashFn::new(3, 1, 2).unwrap();
    c.bench_function("hash classes n=10 delta=2", |b| b.iter(|| black_box(hash).classes(10)));
}

fn forward(c: &mut Criterion) {
    let mut group = c.benchmark_group("forward pass n=10 delta=2 p=0.1");
    for m in [2usize, 3, 4] {
        let fx = trellis_fixture(10, m, 2, 0.1, 7);
        group.bench_with_input(BenchmarkId::new("m", m), &fx, |b, fx| b.iter(|| forward_pass(&fx.trellis)));
    }
    group.finish();

    let fx = trellis_fixture(10, 3, 2, 0.1, 7);
    let last = forward_pass(&fx.trellis);
    c.bench_function("p* n=10 m=3", |b| {
        b.iter(|| compute_p_star(&last, fx.relay_observed, fx.relay_digest, &fx.classes, fx.channel).unwrap())
    });
}

fn trials(c: &mut Criterion) {
    let runner = TwoHopRunner::new(TwoHopConfig::default()).unwrap();
    let root = SimRng::new(1);
    let mut index = 0;
    c.bench_function("paired two-hop trial n=10 m=3", |b| {
        b.iter(|| {
            index += 1;
            runner.run(&root.fork(index), index).unwrap()
        })
    });
    let mut group = c.benchmark_group("sweep point");
    group.sample_size(10);
    group.bench_function("200 trials n=10 m=3", |b| {
        b.iter(|| run_point(&TwoHopConfig::default(), 200, 1, false).unwrap())
    });
    group.finish();
}

criterion_group!(benches, field_mul, hash_classes, forward, trials);
criterion_main!(benches);
