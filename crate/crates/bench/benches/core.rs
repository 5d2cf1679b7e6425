use criterion::{black_box, criterion_group, criterion_main, Criterion};

use smoothdist_core::{
    build_group, build_prime_table, contour_psi_auto, for_each_smooth, solve_alpha,
    MellinEvaluator, SmoothWeight, WeightSide,
};

fn sieve(c: &mut Criterion) {
    c.bench_function("prime_table_1e6", |b| {
        b.iter(|| build_prime_table(black_box(1_000_000)).unwrap())
    });
}

fn enumeration(c: &mut Criterion) {
    let table = build_prime_table(101).unwrap();
    c.bench_function("smooth_walk_1e6_y100", |b| {
        b.iter(|| {
            let mut acc = 0u64;
            for_each_smooth(black_box(1e6), 100.0, &table, |n| acc = acc.wrapping_add(n))
                .unwrap();
            acc
        })
    });
}

fn saddle(c: &mut Criterion) {
    let table = build_prime_table(1001).unwrap();
    c.bench_function("alpha_1e6_1e3", |b| {
        b.iter(|| solve_alpha(black_box(1e6), 1e3, &table).unwrap())
    });
}

fn contour(c: &mut Criterion) {
    let table = build_prime_table(11).unwrap();
    let chi0 = build_group(1).unwrap().principal();
    let weight = SmoothWeight::new(WeightSide::Lower, 0.05).unwrap();
    c.bench_function("contour_auto_1e3_y10", |b| {
        b.iter(|| {
            // fresh evaluator per iteration so the transform cache does not
            // turn later iterations into lookups
            let ev = MellinEvaluator::new(weight);
            contour_psi_auto(black_box(1e3), 10.0, &chi0, &ev, &table).unwrap()
        })
    });
}

criterion_group!(benches, sieve, enumeration, saddle, contour);
criterion_main!(benches);
