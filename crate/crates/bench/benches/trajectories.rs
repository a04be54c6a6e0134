use std::hint::black_box;

use criterion::{criterion_group, criterion_main, Criterion};

use saddle_bench::{figure1, start, FIGURE1_ETA};
use saddle_core::{classify, run, AlgoConfig, ClassifyOptions, MinimaxProblem, Scheme};

fn ppm_runs(c: &mut Criterion) {
    let mut g = c.benchmark_group("trajectory/ppm_1500");
    g.sample_size(20);
    for a in [1.0, 10.0, 100.0] {
        let p = figure1(a);
        let cfg = AlgoConfig::ppm(FIGURE1_ETA, 1.0).with_max_iter(1500);
        g.bench_function(format!("a={a}"), |b| b.iter(|| run(&p, &cfg, black_box(&start())).unwrap()));
    }
    g.finish();
}

fn gradient_runs(c: &mut Criterion) {
    let mut g = c.benchmark_group("trajectory/gradient_6000");
    g.sample_size(20);
    let p = figure1(10.0);
    for scheme in [Scheme::Gda, Scheme::Agda, Scheme::Egm] {
        let cfg = AlgoConfig::gradient(scheme, 0.5 / p.beta()).with_max_iter(6000);
        g.bench_function(format!("{scheme:?}"), |b| b.iter(|| run(&p, &cfg, black_box(&start())).unwrap()));
    }
    g.finish();
}

fn classification(c: &mut Criterion) {
    let p = figure1(10.0);
    let traj = run(&p, &AlgoConfig::ppm(FIGURE1_ETA, 1.0).with_max_iter(1500), &start()).unwrap();
    let opts = ClassifyOptions::default();
    c.bench_function("classify/cycle_window_400", |b| b.iter(|| classify(black_box(&traj), &opts)));
}

criterion_group!(benches, ppm_runs, gradient_runs, classification);
criterion_main!(benches);
