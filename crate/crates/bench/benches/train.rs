use criterion::{criterion_group, criterion_main, Criterion};
use cwlmkl::{generate, kernel_matrix, smo_train, GenConfig, MklModel, SvmConfig, TrainConfig};

fn train(c: &mut Criterion) {
    let ds = generate(&GenConfig {
        n_benign: 40,
        n_malicious: 40,
        ..GenConfig::default()
    })
    .expect("valid preset");
    let cfg = TrainConfig::default();
    let (_, data) = MklModel::train_with_data(&ds, &cfg).expect("trainable");
    let kernel = kernel_matrix(&data.per_view[0].1).expect("same dimension");

    c.bench_function("gram/api", |b| b.iter(|| kernel_matrix(&data.per_view[0].1)));
    c.bench_function("smo/api", |b| {
        b.iter(|| smo_train(&kernel, &data.labels, &SvmConfig::default()))
    });
    let mut group = c.benchmark_group("mkl");
    group.sample_size(10);
    group.bench_function("end_to_end", |b| b.iter(|| MklModel::train(&ds, &cfg)));
    group.finish();
}

criterion_group!(benches, train);
criterion_main!(benches);
