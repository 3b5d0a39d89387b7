use std::hint::black_box;

use conformal_stl::config::default_atoms;
use conformal_stl::cqr::fit_atom_bank;
use conformal_stl::dataset::{generate, GeneratorConfig, EVEN_SPLIT};
use conformal_stl::opt::{optimize, Algorithm, LossConfig, OptimizerConfig};
use conformal_stl::pipeline::{run_trial, TrialSpec};
use conformal_stl::stl::AtomSet;
use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};

fn pipeline(c: &mut Criterion) {
    let data = generate(&GeneratorConfig::default()).unwrap();
    let atoms = AtomSet::new(default_atoms()).unwrap();
    let split = data.split(EVEN_SPLIT, 1).unwrap();

    let mut g = c.benchmark_group("pipeline");
    g.sample_size(10);
    g.bench_function("fit_atom_bank_n2000", |b| {
        b.iter(|| fit_atom_bank(&atoms, &split, &data, 0.1, None).unwrap())
    });

    let bank = fit_atom_bank(&atoms, &split, &data, 0.1, None).unwrap();
    let loss = LossConfig::default();
    for alg in Algorithm::ALL {
        let opt = OptimizerConfig {
            algorithm: alg,
            iterations: 50,
            samples: 5000,
            ..Default::default()
        };
        g.bench_with_input(BenchmarkId::new("optimize", alg.short()), &opt, |b, opt| {
            b.iter(|| optimize(black_box(&bank.test_intervals), &loss, opt).unwrap())
        });
    }

    let spec = TrialSpec {
        alpha: 0.1,
        k: None,
        split: EVEN_SPLIT,
        loss,
        optimizer: OptimizerConfig::default(),
        use_intervals: true,
    };
    g.bench_function("run_trial_gp_default", |b| b.iter(|| run_trial(&data, &atoms, &spec, 3).unwrap()));
    g.finish();
}

criterion_group!(benches, pipeline);
criterion_main!(benches);
