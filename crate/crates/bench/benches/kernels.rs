use std::hint::black_box;

use criterion::{criterion_group, criterion_main, Criterion};
use lift_moments::first_moment::exact_first_moment;
use lift_moments::laplace::DEFAULT_CAP;
use lift_moments::lattice::second_moment_lattice;
use lift_moments::nb_walks::{ssc_constant, walk_counts};
use lift_moments::second_moment::{asymptotic_second_moment, exact_second_moment};
use lift_moments::sim::{count_k_cycles, count_perfect_matchings, sample_lift};
use lift_moments::{families, MaximizeOptions};

fn exact_sums(c: &mut Criterion) {
    let k4 = families::complete(4);
    c.bench_function("first moment K4 n=96", |b| b.iter(|| exact_first_moment(black_box(&k4), 96, DEFAULT_CAP)));
    c.bench_function("second moment K4 n=3", |b| b.iter(|| exact_second_moment(black_box(&k4), 3, DEFAULT_CAP)));
}

fn asymptotics(c: &mut Criterion) {
    let k4 = families::complete(4);
    c.bench_function("second moment lattice K4", |b| b.iter(|| second_moment_lattice(black_box(&k4))));
    let opts = MaximizeOptions { multistart: 0, ..Default::default() };
    c.bench_function("second moment asymptotics K4", |b| b.iter(|| asymptotic_second_moment(black_box(&k4), &opts)));
    let petersen = families::petersen();
    c.bench_function("walk counts Petersen k<=12", |b| b.iter(|| walk_counts(black_box(&petersen), 12)));
    c.bench_function("ssc constant Petersen", |b| b.iter(|| ssc_constant(black_box(&petersen), 20)));
}

fn lifts(c: &mut Criterion) {
    let k4 = families::complete(4);
    let lift = sample_lift(&k4, 30, 1, 0).unwrap().to_ugraph();
    let mut group = c.benchmark_group("K4 lift n=30");
    group.sample_size(20);
    group.bench_function("sample", |b| b.iter(|| sample_lift(black_box(&k4), 30, 1, 0)));
    group.bench_function("perfect matchings", |b| b.iter(|| count_perfect_matchings(black_box(&lift))));
    group.bench_function("cycles k<=6", |b| b.iter(|| count_k_cycles(black_box(&lift), 6)));
    group.finish();
}

criterion_group!(benches, exact_sums, asymptotics, lifts);
criterion_main!(benches);
