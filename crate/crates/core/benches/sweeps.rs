use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};

use equipart::averaged::{integrate_averaged, AveragedState};
use equipart::full::{integrate_full, IntegratorConfig, Sampler};
use equipart::oscillatory::{osc_integral, LinearPhase};
use equipart::par::{map_with, Mode};
use equipart::spectral::{ModalState, Spectrum};

const MODES: [(&str, Mode); 2] = [("sequential", Mode::Sequential), ("parallel", Mode::Parallel)];

fn averaged_batch(c: &mut Criterion) {
    let inits: Vec<AveragedState> = (0..32).map(|i| AveragedState::power_law(50, 1.0, 0.4 + 0.02 * i as f64)).collect();
    let mut g = c.benchmark_group("averaged_batch");
    for (name, mode) in MODES {
        g.bench_function(BenchmarkId::from_parameter(name), |b| {
            b.iter(|| map_with(mode, &inits, |s| integrate_averaged(s, 30.0, 1e-10).unwrap().len()))
        });
    }
    g.finish();
}

fn full_batch(c: &mut Criterion) {
    let spec = Spectrum::new(vec![1.0, 2.0, 3.0]).unwrap();
    let inits: Vec<ModalState> = (0..16)
        .map(|i| ModalState::new(0.0, vec![1.0, 0.05 * i as f64, 0.3], vec![0.0; 3]).unwrap())
        .collect();
    let cfg = IntegratorConfig::new(500.0, Sampler::Dyadic).with_tolerances(1e-9, 1e-11);
    let mut g = c.benchmark_group("full_batch");
    g.sample_size(10);
    for (name, mode) in MODES {
        g.bench_function(BenchmarkId::from_parameter(name), |b| {
            b.iter(|| map_with(mode, &inits, |s| integrate_full(s, &spec, &cfg).unwrap().len()))
        });
    }
    g.finish();
}

fn oscillatory_batch(c: &mut Criterion) {
    let cases: Vec<(f64, f64)> = (0..64).map(|i| (0.25 + 0.01 * i as f64, 10.0 + i as f64)).collect();
    let psi = LinearPhase::new(0.0, 1.0);
    let mut g = c.benchmark_group("oscillatory_batch");
    for (name, mode) in MODES {
        g.bench_function(BenchmarkId::from_parameter(name), |b| {
            b.iter(|| map_with(mode, &cases, |&(alpha, s)| osc_integral(alpha, &psi, 1.0, s, 1e-10).unwrap().value))
        });
    }
    g.finish();
}

criterion_group!(benches, averaged_batch, full_batch, oscillatory_batch);
criterion_main!(benches);
