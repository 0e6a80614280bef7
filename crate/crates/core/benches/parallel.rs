use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use sodefield_core::analysis::analyze;
use sodefield_core::cli::corpus_get;
use sodefield_core::par::Execution;
use sodefield_core::straighten::{build_normal_coordinates, pushforward_residuals, GridSpec, StraightenOptions};

const MODES: [(&str, Execution); 2] = [("parallel", Execution::Parallel), ("sequential", Execution::Sequential)];

fn residual_grid(c: &mut Criterion) {
    let prepared = corpus_get("timedep-scrambled").unwrap().prepare().unwrap();
    let analysis = analyze(&prepared.problem).unwrap();
    let mut group = c.benchmark_group("pushforward_residuals");
    group.sample_size(10);
    for (label, execution) in MODES {
        let opts = StraightenOptions { execution, ..prepared.straighten };
        let tr = build_normal_coordinates(&analysis, &prepared.problem.f, &opts).unwrap();
        let grid = GridSpec::for_transform(&tr, &opts);
        group.bench_function(BenchmarkId::new(label, grid.len()), |b| {
            b.iter(|| pushforward_residuals(&tr, &grid, &opts))
        });
    }
    group.finish();
}

fn identity_suite(c: &mut Criterion) {
    let prepared = corpus_get("quadratic-demo").unwrap().prepare().unwrap();
    let mut group = c.benchmark_group("analyze");
    group.sample_size(10);
    for (label, execution) in MODES {
        let mut problem = prepared.problem.clone();
        problem.options.execution = execution;
        group.bench_function(label, |b| b.iter(|| analyze(&problem).unwrap()));
    }
    group.finish();
}

criterion_group!(benches, residual_grid, identity_suite);
criterion_main!(benches);
