use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use riskforest_bench::{classification_data, column_names};
use riskforest_core::forest::{fit_forest, ForestConfig, MaxDepth};

fn bench_fit(c: &mut Criterion) {
    let mut group = c.benchmark_group("fit_forest");
    group.sample_size(10);
    for &n in &[1000usize, 4000] {
        let (x, y) = classification_data(n, 16, 7);
        let cfg = ForestConfig {
            n_trees: 50,
            max_depth: MaxDepth::limit(10),
            ..Default::default()
        };
        group.bench_with_input(BenchmarkId::from_parameter(n), &n, |b, _| {
            b.iter(|| fit_forest(x.view(), &y, &cfg, column_names(16)).unwrap())
        });
    }
    group.finish();
}

fn bench_predict(c: &mut Criterion) {
    let (x, y) = classification_data(2000, 16, 8);
    let model = fit_forest(x.view(), &y, &ForestConfig::default(), column_names(16)).unwrap();
    c.bench_function("predict_proba_batch_2000", |b| {
        b.iter(|| model.predict_proba_batch(x.view()).unwrap())
    });
}

criterion_group!(benches, bench_fit, bench_predict);
criterion_main!(benches);
