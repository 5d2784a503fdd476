use std::hint::black_box;

use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use lfl_core::os::{GramReport, MonomialBasis};
use lfl_core::par;
use lfl_core::wightman::{BaumannSetup, IntegratorSpec};
use lfl_core::{FieldModel, JumpLaw, LatticeSpec, LazyEnsemble, LevyCharacteristic, ModelParams, MomentumSymbol};

fn model(l: usize) -> FieldModel {
    let spec = LatticeSpec::new(3, l, 0.5).unwrap();
    let noise = LevyCharacteristic::new(0.0, 1.0, 2.0, JumpLaw::atom(1.0).unwrap()).unwrap();
    FieldModel::new(
        ModelParams::new(0.75, 1.0, MomentumSymbol::Discrete).unwrap(),
        noise,
        spec,
    )
    .unwrap()
}

fn sampling(c: &mut Criterion) {
    let mut g = c.benchmark_group("sample_ensemble");
    g.sample_size(10);
    let n = 64;
    let ens = LazyEnsemble::new(model(16), n, 1).unwrap();
    g.bench_function("sequential", |b| {
        b.iter(|| black_box(par::map_indexed_sequential(n, |i| ens.sample(i).power_sum(2))))
    });
    for w in [1, 2, 4] {
        g.bench_with_input(BenchmarkId::new("parallel", w), &w, |b, &w| {
            b.iter(|| {
                par::with_workers(Some(w), || {
                    black_box(par::map_indexed(n, |i| ens.sample(i).power_sum(2)))
                })
            })
        });
    }
    g.finish();
}

fn gram(c: &mut Criterion) {
    let mut g = c.benchmark_group("reflection_gram");
    g.sample_size(10);
    let m = model(8);
    let basis = MonomialBasis::time_slices(m.spec, &[1, 2, 3]).unwrap();
    for w in [1, 4] {
        g.bench_with_input(BenchmarkId::new("workers", w), &w, |b, &w| {
            b.iter(|| {
                par::with_workers(Some(w), || {
                    black_box(GramReport::compute(&m, &basis, true).unwrap().min_eig)
                })
            })
        });
    }
    g.finish();
}

fn wightman(c: &mut Criterion) {
    let mut g = c.benchmark_group("baumann_check");
    g.sample_size(10);
    let setup = BaumannSetup::standard().unwrap();
    let spec = IntegratorSpec::new(50_000, 3);
    for w in [1, 4] {
        g.bench_with_input(BenchmarkId::new("workers", w), &w, |b, &w| {
            b.iter(|| {
                par::with_workers(Some(w), || {
                    black_box(lfl_core::wightman::baumann_check(&setup, &[0.5, 0.05, 0.005], &spec).unwrap())
                })
            })
        });
    }
    g.finish();
}

criterion_group!(benches, sampling, gram, wightman);
criterion_main!(benches);
