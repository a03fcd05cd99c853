use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use partsel_core::accounting::{release_threshold, zcdp_to_dp};
use partsel_core::data::{generate_synthetic, SyntheticSpec};
use partsel_core::engine::{parallel_histogram, Preprocess};
use partsel_core::rng::{Domain, StreamKey};
use partsel_core::{dp_sips, dpsu_policy_gaussian, gw_greedy, weighted_gaussian, ApproxDpParams, Dataset, MechanismConfig, PrivacyBudget};

fn corpus() -> Dataset {
    generate_synthetic(&SyntheticSpec::with_users(20_000, 1), 1).unwrap()
}

fn histogram(c: &mut Criterion) {
    let d = corpus();
    let prep = Preprocess {
        delta0: 100,
        dedup: true,
        stream: StreamKey::new(1, Domain::GaussianTruncate, 0),
    };
    let mut g = c.benchmark_group("histogram");
    for workers in [1, 4] {
        g.bench_with_input(BenchmarkId::from_parameter(workers), &workers, |b, &w| {
            b.iter(|| parallel_histogram(d.users(), d.vocab().len(), &prep, |k| 1.0 / (k as f64).sqrt(), w))
        });
    }
    g.finish();
}

fn mechanisms(c: &mut Criterion) {
    let d = corpus();
    let budget = PrivacyBudget::new(0.1, 1e-5).unwrap();
    let dp = ApproxDpParams::new(1.7, 8.1142e-5).unwrap();
    let cfg = MechanismConfig { workers: 1, ..Default::default() };
    let mut g = c.benchmark_group("mechanism");
    g.sample_size(10);
    g.bench_function("wgauss", |b| b.iter(|| weighted_gaussian(&d, budget, &cfg).unwrap()));
    g.bench_function("sips", |b| b.iter(|| dp_sips(&d, budget, &cfg).unwrap()));
    g.bench_function("dpsu", |b| b.iter(|| dpsu_policy_gaussian(&d, budget, &cfg).unwrap()));
    g.bench_function("gw", |b| b.iter(|| gw_greedy(&d, dp, &cfg).unwrap()));
    g.finish();
}

fn accounting(c: &mut Criterion) {
    let budget = PrivacyBudget::new(0.1, 1e-5).unwrap();
    c.bench_function("threshold/delta0=100", |b| b.iter(|| release_threshold(budget, 100).unwrap()));
    c.bench_function("zcdp_to_dp", |b| b.iter(|| zcdp_to_dp(budget, 1.765).unwrap()));
}

criterion_group!(benches, histogram, mechanisms, accounting);
criterion_main!(benches);
