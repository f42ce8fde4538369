use std::hint::black_box;

use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};

use drumhead::profiles::builtin;
use drumhead::report::reference_modes;
use drumhead::shooting::Shooter;
use drumhead::tuner::{Template, TuneProblem};
use drumhead::{Execution, SearchConfig};

const MODES: [(&str, Execution); 2] = [
    ("sequential", Execution::Sequential),
    ("parallel", Execution::Parallel),
];

fn reference_sweep(c: &mut Criterion) {
    let mut group = c.benchmark_group("reference_sweep");
    group.sample_size(10);
    let modes = reference_modes();
    for name in ["uniform", "default-continuous"] {
        let profile = builtin(name).unwrap();
        for (label, execution) in MODES {
            let cfg = SearchConfig {
                execution,
                ..SearchConfig::default()
            };
            group.bench_with_input(BenchmarkId::new(label, name), &profile, |b, p| {
                let shooter = Shooter::new(p, cfg).unwrap();
                b.iter(|| black_box(shooter.modes(&modes).unwrap()))
            });
        }
    }
    group.finish();
}

fn single_order_scan(c: &mut Criterion) {
    let mut group = c.benchmark_group("order_scan");
    let profile = builtin("default-rings").unwrap();
    for (label, execution) in MODES {
        let cfg = SearchConfig {
            execution,
            ..SearchConfig::default()
        };
        let shooter = Shooter::new(&profile, cfg).unwrap();
        group.bench_function(BenchmarkId::new(label, "m=2 c<=3"), |b| {
            b.iter(|| black_box(shooter.roots(2, 4).unwrap()))
        });
    }
    group.finish();
}

fn tuner_objective(c: &mut Criterion) {
    let mut group = c.benchmark_group("tuner_objective");
    group.sample_size(20);
    for (label, execution) in MODES {
        let mut problem = TuneProblem::new(Template::StepRings { rings: 3 });
        problem.search.execution = execution;
        let x = vec![0.3, 0.2, 15.0, 12.0, 2.0];
        group.bench_function(label, |b| {
            b.iter(|| black_box(problem.evaluate(&x).unwrap()))
        });
    }
    group.finish();
}

criterion_group!(benches, reference_sweep, single_order_scan, tuner_objective);
criterion_main!(benches);
