use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use fracradon::bodies::StarBody;
use fracradon::radon::{max_over_directions, moment_integral, with_execution, Density, QuadratureSpec};
use fracradon::Execution;

fn spec(direction_nodes: usize) -> QuadratureSpec {
    QuadratureSpec { direction_nodes, refine_rounds: 1, ..QuadratureSpec::default() }
}

fn direction_max(c: &mut Criterion) {
    let mut group = c.benchmark_group("max_over_directions");
    group.sample_size(10);
    let bodies = [
        ("ellipsoid", StarBody::ellipsoid(&[2.0, 1.0, 0.5]).unwrap(), Density::uniform()),
        ("ball-gaussian", StarBody::unit_ball(3).unwrap(), Density::gaussian(1.0).unwrap()),
        ("cube", StarBody::cube(3, 1.0).unwrap(), Density::uniform()),
    ];
    for (name, k, f) in &bodies {
        let nodes = if *name == "cube" { 20 } else { 200 };
        for exec in [Execution::Sequential, Execution::Parallel] {
            let s = with_execution(&spec(nodes), exec);
            group.bench_with_input(BenchmarkId::new(format!("{exec:?}"), name), &s, |b, s| {
                b.iter(|| max_over_directions(k, f, 0.5, s).unwrap())
            });
        }
    }
    group.finish();
}

fn moments(c: &mut Criterion) {
    let mut group = c.benchmark_group("moment_integral");
    let cube = StarBody::cube(3, 1.0).unwrap();
    let f = Density::uniform();
    for exec in [Execution::Sequential, Execution::Parallel] {
        let s = with_execution(&QuadratureSpec::default(), exec);
        group.bench_function(format!("{exec:?}"), |b| b.iter(|| moment_integral(&cube, &cube, &f, 1.5, &s).unwrap()));
    }
    group.finish();
}

criterion_group!(benches, direction_max, moments);
criterion_main!(benches);
