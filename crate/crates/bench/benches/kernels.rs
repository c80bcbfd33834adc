use std::hint::black_box;

use criterion::{criterion_group, criterion_main, Criterion};

use folia_bench::{random_q2, tilted};
use folia_core::geometry::gv_density_metric;
use folia_core::invariants::gv_number;
use folia_core::jets::Jet;
use folia_core::quadrature::QuadratureSpec;
use folia_core::reeb::{solve_cond2, StepControl};

fn jets(c: &mut Criterion) {
    let x = Jet::seed(&[0.3, 1.1, 2.0, 0.4, 5.0], 2);
    let a = x[0].sin().mul(&x[2]).add_const(1.5);
    let b = x[1].cos().mul(&x[3]).exp();
    c.bench_function("jet mul n=5 order 2", |bch| bch.iter(|| black_box(&a).mul(black_box(&b))));
    c.bench_function("jet div n=5 order 2", |bch| bch.iter(|| black_box(&a).div(black_box(&b)).unwrap()));
}

fn densities(c: &mut Criterion) {
    let (s1, s2) = (tilted(), random_q2());
    c.bench_function("eta q=2 n=5", |bch| bch.iter(|| s2.local(black_box(&[0.3, 1.1, 2.0, 0.4, 5.0]), 1).unwrap().eta().unwrap()));
    c.bench_function("metric density t3_tilted", |bch| bch.iter(|| gv_density_metric(&s1, black_box(&[0.3, 1.1, 2.0])).unwrap()));
    let spec = QuadratureSpec { estimate: false, ..QuadratureSpec::for_chart(&s1.chart).with_resolution(16) };
    c.bench_function("gv t3_tilted 16^3", |bch| bch.iter(|| gv_number(&s1, &spec).unwrap().value));
}

fn reeb(c: &mut Criterion) {
    c.bench_function("cond2 profile A1=0.25", |bch| bch.iter(|| solve_cond2(1.0, black_box(0.25), 0.0, StepControl::default()).unwrap().r0));
}

criterion_group! {
    name = benches;
    config = Criterion::default().sample_size(10);
    targets = jets, densities, reeb
}
criterion_main!(benches);
