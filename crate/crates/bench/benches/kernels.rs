use attocell_core::interference::{closed_form_moments, Truncation};
use attocell_core::lattice::exact_moments;
use attocell_core::link;
use attocell_core::mcsim::{self, McConfig};
use attocell_core::specfun::bessel_k;
use attocell_core::sweep::{run_sweep, SweepSpec};
use attocell_core::{LatticeSpec, MomentMethod, ReceiverPos, SystemParams};
use criterion::{black_box, criterion_group, criterion_main, BenchmarkId, Criterion};

fn special(c: &mut Criterion) {
    let mut g = c.benchmark_group("bessel_k");
    for y in [0.5, 5.0, 40.0] {
        g.bench_with_input(BenchmarkId::from_parameter(y), &y, |b, &y| {
            b.iter(|| bessel_k(black_box(3.0), black_box(y)))
        });
    }
    g.finish();
}

fn moments(c: &mut Criterion) {
    let sp = SystemParams::default();
    let d = sp.derive(3.0).unwrap();
    let pos = ReceiverPos::new(0.3, 0.1);
    let mut g = c.benchmark_group("moments");
    for k in [1, 15] {
        let spec = LatticeSpec::new(1.0, 3.0, k).unwrap();
        g.bench_with_input(BenchmarkId::new("closed_form", k), &spec, |b, spec| {
            b.iter(|| closed_form_moments(pos, spec, &d, Truncation::Adaptive).unwrap())
        });
        g.bench_with_input(BenchmarkId::new("exact_r200", k), &spec, |b, spec| {
            b.iter(|| exact_moments(pos, spec, &d, 200).unwrap())
        });
    }
    g.finish();
}

fn link_and_sweep(c: &mut Criterion) {
    let sp = SystemParams::default();
    let d = sp.derive(5.0).unwrap();
    let spec = LatticeSpec::new(1.0, 5.0, 8).unwrap();
    c.bench_function("link_metrics", |b| {
        b.iter(|| {
            link::metrics(ReceiverPos::ORIGIN, &spec, &sp, &d, MomentMethod::default()).unwrap()
        })
    });
    c.bench_function("default_sweep", |b| {
        b.iter(|| run_sweep(&SweepSpec::default(), &sp).unwrap())
    });
}

fn monte_carlo(c: &mut Criterion) {
    let sp = SystemParams::default();
    let d = sp.derive(3.0).unwrap();
    let spec = LatticeSpec::new(1.0, 3.0, 5).unwrap();
    let mc = McConfig {
        n_slots: 10_000,
        ..McConfig::default()
    };
    let mut g = c.benchmark_group("mcsim");
    g.sample_size(10);
    g.bench_function("10k_slots_r50", |b| {
        b.iter(|| mcsim::simulate(ReceiverPos::ORIGIN, &spec, &sp, &d, &mc).unwrap())
    });
    g.finish();
}

criterion_group!(benches, special, moments, link_and_sweep, monte_carlo);
criterion_main!(benches);
