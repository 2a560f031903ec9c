//! Benchmarks of the data-parallel inner loops against their sequential
//! fallbacks: the brute-force category oracle and the skeleton morphism
//! search. The runtime toggle flips the same binary between the rayon
//! bridge and plain iterators.

use coclass::family::fixtures::dihedral2;
use coclass::family::Family;
use coclass::par;
use coclass::quillen::{category_bruteforce, compare_with_bruteforce, skeleton_gx};
use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use std::sync::Arc;

fn bench_oracle(c: &mut Criterion) {
    let fam = Family::new(dihedral2()).unwrap();
    let base = Arc::new(fam.base_at(fam.data.precision_for(2)).unwrap());
    let level = fam.level_with_base(2, base).unwrap();
    let realized = level.ext.realize(1 << 12).unwrap();

    let mut group = c.benchmark_group("bruteforce_category_order_64");
    for seq in [false, true] {
        let name = if seq { "sequential" } else { "parallel" };
        group.bench_with_input(BenchmarkId::from_parameter(name), &seq, |b, &seq| {
            par::set_sequential(seq);
            b.iter(|| category_bruteforce(&realized, 1 << 12).unwrap());
            par::set_sequential(false);
        });
    }
    group.finish();
}

fn bench_skeleton(c: &mut Criterion) {
    let fam = Family::new(dihedral2()).unwrap();
    let base = Arc::new(fam.base_at(fam.data.precision_for(4)).unwrap());
    let level = fam.level_with_base(4, base).unwrap();

    let mut group = c.benchmark_group("skeleton_morphisms_x4");
    for seq in [false, true] {
        let name = if seq { "sequential" } else { "parallel" };
        group.bench_with_input(BenchmarkId::from_parameter(name), &seq, |b, &seq| {
            par::set_sequential(seq);
            b.iter(|| skeleton_gx(&level).unwrap());
            par::set_sequential(false);
        });
    }
    group.finish();
}

fn bench_oracle_comparison(c: &mut Criterion) {
    let fam = Family::new(dihedral2()).unwrap();
    let base = Arc::new(fam.base_at(fam.data.precision_for(2)).unwrap());
    let level = fam.level_with_base(2, base).unwrap();
    let cat = skeleton_gx(&level).unwrap();

    let mut group = c.benchmark_group("oracle_comparison_order_64");
    group.sample_size(20);
    for seq in [false, true] {
        let name = if seq { "sequential" } else { "parallel" };
        group.bench_with_input(BenchmarkId::from_parameter(name), &seq, |b, &seq| {
            par::set_sequential(seq);
            b.iter(|| compare_with_bruteforce(&level, &cat, 1 << 12).unwrap());
            par::set_sequential(false);
        });
    }
    group.finish();
}

criterion_group!(benches, bench_oracle, bench_skeleton, bench_oracle_comparison);
criterion_main!(benches);
