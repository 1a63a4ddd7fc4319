use criterion::{black_box, criterion_group, criterion_main, Criterion};
use solibound::kp::{kp_dressed, Alpha, KpParams, Phase};
use solibound::toda::{toda_dressed, Example, TodaParams};
use solibound::verify::{run_checks, suite_checks};
use solibound::{Dd, Point, C64};

fn point_evaluation(c: &mut Criterion) {
    let kp = KpParams::new(Alpha::One, 1.0, C64::new(0.5, 0.0));
    let toda = TodaParams::desk(Example::Ex3);
    let p = Point::new(0.3, 0.7, 1.1);
    let pd: Point<Dd> = Point::new(Dd::from(0.3), Dd::from(0.7), Dd::from(1.1));
    let pn = Point::lattice(0.3, 0.7, 2);

    c.bench_function("kp_dressed_f64", |b| {
        b.iter(|| kp_dressed(black_box(&p), &kp, Phase::Corrected))
    });
    c.bench_function("kp_dressed_dd", |b| {
        b.iter(|| kp_dressed(black_box(&pd), &kp, Phase::Corrected))
    });
    c.bench_function("toda_dressed_ex3", |b| b.iter(|| toda_dressed(black_box(&pn), &toda)));
}

fn suites(c: &mut Criterion) {
    let mut g = c.benchmark_group("suite");
    g.sample_size(10);
    for name in ["kp-seed", "kp-glm", "toda-ex1", "toda-glm"] {
        let checks = suite_checks(name).unwrap();
        g.bench_function(name, |b| b.iter(|| run_checks(black_box(&checks))));
    }
    g.finish();
}

criterion_group!(benches, point_evaluation, suites);
criterion_main!(benches);
