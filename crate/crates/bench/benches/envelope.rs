use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use nisio::{envelope_step, nisio_value, Refine};
use nisio_bench::{chain_family, heat_family, quadratic};

fn step(c: &mut Criterion) {
    let mut group = c.benchmark_group("envelope_step");
    for members in [2, 8] {
        let fam = heat_family(0.01, members);
        let u = quadratic(&fam);
        group.bench_with_input(BenchmarkId::new("heat", members), &members, |b, _| {
            b.iter(|| envelope_step(&fam, 0.125, &u).unwrap())
        });
    }
    group.finish();
}

fn dyadic(c: &mut Criterion) {
    let mut group = c.benchmark_group("nisio_value");
    group.sample_size(10);
    let fam = heat_family(0.02, 2);
    let u = quadratic(&fam);
    for level in [3u32, 5] {
        group.bench_with_input(BenchmarkId::new("heat", level), &level, |b, &l| {
            b.iter(|| nisio_value(&fam, 1.0, &u, Refine::fixed(l)).unwrap())
        });
    }
    let chain = chain_family(32);
    let v = quadratic(&chain);
    group.bench_function("chain-32/level-10", |b| b.iter(|| nisio_value(&chain, 1.0, &v, Refine::fixed(10)).unwrap()));
    group.finish();
}

criterion_group!(benches, step, dyadic);
criterion_main!(benches);
