use std::hint::black_box;

use criterion::{criterion_group, criterion_main, Criterion};
use kawasaki_core::hierarchy::{apply_ldelta, ClosureKind, ClosureRule, CorrelationField, FieldMode};
use kawasaki_core::kmc::{replica_stream, InitialLaw, SimState};
use kawasaki_core::scheduler::lambert_w0;
use kawasaki_bench::demo_spec;
use kawasaki_core::{Lattice, LatticeKernels, TorusDomain};

fn kmc_step(c: &mut Criterion) {
    for (dim, side) in [(1, 1000.0), (2, 40.0)] {
        let dom = TorusDomain::new(dim, side).unwrap();
        let mut rng = replica_stream(1, 0);
        let cfg = InitialLaw::Poisson { intensity: 0.5 }.sample(&dom, &mut rng).unwrap();
        let mut st = SimState::new(cfg, demo_spec(dim), rng).unwrap();
        c.bench_function(&format!("kmc_step_{dim}d"), |b| b.iter(|| black_box(st.step().unwrap())));
    }
}

fn ldelta(c: &mut Criterion) {
    let lk = LatticeKernels::new(Lattice::new(1, 32, 0.25).unwrap(), &demo_spec(1)).unwrap();
    for n_max in [2, 3] {
        let rule = ClosureRule::new(ClosureKind::PoissonTail, n_max).unwrap();
        let f = CorrelationField::poisson(lk.lattice, FieldMode::Invariant, rule, 1, 0.3).unwrap();
        c.bench_function(&format!("apply_ldelta_n{n_max}"), |b| {
            b.iter(|| apply_ldelta(black_box(&f), &lk).unwrap())
        });
    }
}

fn lambert(c: &mut Criterion) {
    let xs: Vec<f64> = (0..64).map(|i| 10f64.powf(-8.0 + 0.25 * i as f64)).collect();
    c.bench_function("lambert_w0_x64", |b| {
        b.iter(|| xs.iter().map(|&x| lambert_w0(black_box(x)).unwrap()).sum::<f64>())
    });
}

criterion_group!(benches, kmc_step, ldelta, lambert);
criterion_main!(benches);
