use std::hint::black_box;

use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};

use mequi::ergodic::{birkhoff_average, Observable};
use mequi::mean_equi::weyl_pseudometric;
use mequi::spectrum::{eigenvalue_scan, weyl_sum, ScanOptions};
use mequi::systems::catalog::{self, fixed_point, SystemSpec};
use mequi::systems::{sturmian_point, SturmianSystem};
use mequi::{CirclePoint, FoelnerFamily, Point, RotationNumber, Tail, Window};

fn birkhoff(c: &mut Criterion) {
    let sys = catalog::build(&SystemSpec::new("thue-morse")).unwrap();
    let x = Point::Symbolic(fixed_point("thue-morse").unwrap());
    let f = Observable::sign();
    let mut g = c.benchmark_group("birkhoff_average");
    for log_len in [12u32, 16, 20] {
        let w = Window::interval(0, 1 << log_len).unwrap();
        g.bench_with_input(BenchmarkId::new("thue-morse", 1u64 << log_len), &w, |b, w| {
            b.iter(|| birkhoff_average(sys.as_ref(), &f, black_box(&x), w).unwrap())
        });
    }
    g.finish();
}

fn weyl_pseudo(c: &mut Criterion) {
    let alpha = RotationNumber::golden_default();
    let sys = SturmianSystem::new(alpha.clone());
    let p = |t: f64| Point::Symbolic(sturmian_point(&alpha, CirclePoint::from_f64(t)).unwrap());
    let (x, y) = (p(0.1), p(0.11));
    let family = FoelnerFamily::dyadic(15, 1).unwrap();
    let mut g = c.benchmark_group("weyl_pseudometric");
    g.sample_size(10);
    for budget in [64u64, 1024] {
        g.bench_with_input(BenchmarkId::new("sturmian", budget), &budget, |b, &s| {
            b.iter(|| weyl_pseudometric(&sys, &x, &y, &family, Tail::new(12, 14).unwrap(), Some(s)).unwrap())
        });
    }
    g.finish();
}

fn weyl_sums(c: &mut Criterion) {
    let sys = catalog::build(&SystemSpec::new("period-doubling")).unwrap();
    let x = Point::Symbolic(fixed_point("period-doubling").unwrap());
    let f = Observable::sign();
    let mut g = c.benchmark_group("weyl_sums");
    g.sample_size(10);
    g.bench_function("single/period-doubling/65536", |b| {
        b.iter(|| weyl_sum(sys.as_ref(), &f, &x, black_box(0.5), 1 << 16).unwrap())
    });
    g.bench_function("grid/period-doubling/4096x65536", |b| {
        b.iter(|| eigenvalue_scan(sys.as_ref(), &f, &x, 4096, 1 << 16, &ScanOptions::default()).unwrap())
    });
    g.finish();
}

criterion_group!(benches, birkhoff, weyl_pseudo, weyl_sums);
criterion_main!(benches);
