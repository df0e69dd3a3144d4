use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use nullrig::catalog::load;
use nullrig::checks::{run, RunConfig, Suite};
use nullrig::exec::Execution;

fn curvature_suite(c: &mut Criterion) {
    let mut group = c.benchmark_group("curvat_suite");
    group.sample_size(10);
    for name in ["ppwave_wavefront", "desitter_horizon"] {
        let scenario = load(name).unwrap();
        for execution in [Execution::Sequential, Execution::Parallel] {
            let mut config = RunConfig::for_scenario(&scenario).with_suites(&[Suite::Curvat]);
            config.samples = 64;
            config.execution = execution;
            group.bench_with_input(
                BenchmarkId::new(format!("{execution:?}"), name),
                &config,
                |b, config| b.iter(|| run(&scenario, config).unwrap()),
            );
        }
    }
    group.finish();
}

fn hypersurface_sampling(c: &mut Criterion) {
    let scenario = load("minkowski_cone").unwrap();
    let surface = scenario.hypersurface.as_ref().unwrap();
    let mut group = c.benchmark_group("totally_geodesic_report");
    for execution in [Execution::Sequential, Execution::Parallel] {
        group.bench_function(format!("{execution:?}"), |b| {
            b.iter(|| surface.totally_geodesic_report(256, 42, execution).unwrap())
        });
    }
    group.finish();
}

criterion_group!(benches, curvature_suite, hypersurface_sampling);
criterion_main!(benches);
