use std::hint::black_box;

use criterion::{criterion_group, criterion_main, Criterion};
use tangleproof::dimension::{dim_lower, duarte_distortion};
use tangleproof::hsets::{verify_chain, ChainLink, ChainOptions, CoverOptions, Direction};
use tangleproof::map::{Iterate, PlanarMap};
use tangleproof::{IVec2, Interval};
use tangleproof_bench::fixture;

fn interval_ops(c: &mut Criterion) {
    let a = Interval::new(0.3, 0.31);
    let b = Interval::new(-2.0, -1.9);
    c.bench_function("interval mul", |z| z.iter(|| black_box(a) * black_box(b)));
    c.bench_function("interval div", |z| z.iter(|| black_box(a).checked_div(black_box(b))));
    c.bench_function("interval sqrt", |z| z.iter(|| black_box(a).sqrt()));
}

fn formulas(c: &mut Criterion) {
    c.bench_function("distortion", |z| z.iter(|| duarte_distortion(black_box(16.6), 0.88, 47.8)));
    c.bench_function("dim_lower", |z| z.iter(|| dim_lower(black_box(0.065), 0.0514, 3749.28)));
}

fn map_and_cover(c: &mut Criterion) {
    let (m, sets) = fixture(16);
    let p = IVec2::new(Interval::centered(0.66, 1e-3), Interval::centered(-0.07, 1e-3));
    c.bench_function("F on a box", |z| z.iter(|| m.apply_f(black_box(&p))));
    let g = Iterate::new(&m, 3);
    c.bench_function("G jacobian on a box", |z| z.iter(|| g.jacobian(black_box(&p))));
    let link = [ChainLink {
        from: 0,
        to: 1,
        power: 2,
        direction: Direction::Forward,
    }];
    let opts = ChainOptions {
        cover: CoverOptions::with_subdivision(16),
        ..ChainOptions::default()
    };
    let mut group = c.benchmark_group("covering");
    group.sample_size(10);
    group.bench_function("table1 first link", |z| z.iter(|| verify_chain(&m, &sets, &link, &opts)));
    group.finish();
}

criterion_group!(benches, interval_ops, formulas, map_and_cover);
criterion_main!(benches);
