use criterion::{criterion_group, criterion_main, Criterion};
use std::hint::black_box;

use warmcg_bench::{knn_without, synthetic_family};
use warmcg_core::congen::constraint_generation;
use warmcg_core::instances::{toy_instance, TOY_TEST_B};
use warmcg_core::learner::LabelSource;
use warmcg_core::{solve_lp, solve_milp, LpProblem};

fn lp(c: &mut Criterion) {
    let toy = toy_instance("toy", TOY_TEST_B);
    let toy_lp = LpProblem::from_instance(&toy, &toy.full_set());
    c.bench_function("lp/toy_relaxation", |b| {
        b.iter(|| solve_lp(black_box(&toy_lp)).unwrap())
    });
    let fam = synthetic_family(50, 25, 2);
    let inst = &fam.dataset[0];
    let root = LpProblem::from_instance(inst, &inst.full_set());
    c.bench_function("lp/synthetic_root_50x25", |b| {
        b.iter(|| solve_lp(black_box(&root)).unwrap())
    });
}

fn milp(c: &mut Criterion) {
    let fam = synthetic_family(50, 25, 2);
    let inst = &fam.dataset[0];
    let full = inst.full_set();
    c.bench_function("milp/synthetic_full_50x25", |b| {
        b.iter(|| solve_milp(black_box(inst), &full).unwrap())
    });
}

fn knn_and_cg(c: &mut Criterion) {
    let fam = synthetic_family(50, 25, 60);
    let inst = &fam.dataset[0];
    let model = knn_without(&fam, 0, LabelSource::Invariant, 10);
    c.bench_function("knn/predict_k10_t59", |b| {
        b.iter(|| {
            model
                .predict_set(&inst.name, black_box(&inst.theta))
                .unwrap()
        })
    });
    let warm = model.predict_set(&inst.name, &inst.theta).unwrap();
    let cold = inst.base_set();
    let mut g = c.benchmark_group("cg");
    g.sample_size(20);
    g.bench_function("warm_s_learner", |b| {
        b.iter(|| constraint_generation(inst, black_box(&warm)).unwrap())
    });
    g.bench_function("cold", |b| {
        b.iter(|| constraint_generation(inst, black_box(&cold)).unwrap())
    });
    g.finish();
}

criterion_group!(benches, lp, milp, knn_and_cg);
criterion_main!(benches);
