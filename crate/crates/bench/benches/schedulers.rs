use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use std::hint::black_box;

use twosided_bench::{energy_instance, time_instance};
use twosided_core::{oracle_energy, schedule_energy, schedule_time_two_sided, InverseCost, OracleConfig};

fn energy(c: &mut Criterion) {
    let mut g = c.benchmark_group("schedule_energy");
    for m in [10, 30, 100, 300] {
        let inst = energy_instance(m, 1);
        g.bench_with_input(BenchmarkId::from_parameter(m), &inst, |b, inst| {
            b.iter(|| schedule_energy(black_box(inst)).unwrap())
        });
    }
    g.finish();
}

fn time(c: &mut Criterion) {
    let mut g = c.benchmark_group("schedule_time_two_sided");
    for m in [5, 30, 100] {
        let b_inst = time_instance(m, 2);
        g.bench_with_input(BenchmarkId::from_parameter(m), &b_inst, |b, inst| {
            b.iter(|| schedule_time_two_sided(black_box(inst)))
        });
    }
    g.finish();
}

fn oracle(c: &mut Criterion) {
    let inst = energy_instance(6, 3);
    let cfg = OracleConfig::default();
    c.bench_function("oracle_energy/6", |b| {
        b.iter(|| oracle_energy(black_box(&inst), &InverseCost, inst.end_time(), &cfg).unwrap())
    });
}

criterion_group!(benches, energy, time, oracle);
criterion_main!(benches);
