use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use wkstat::spectral::autocorrelation;
use wkstat::synth::{generate, GeneratorKind, GeneratorSpec};
use wkstat::window::WindowLen;
use wkstat::wktest::{test_stationarity, TestConfig};
use wkstat::{moving_average, rolling_std};

fn series(n: usize) -> Vec<f64> {
    generate(&GeneratorSpec::new(GeneratorKind::GaussianIid { sigma: 1.0 }, n, 1))
        .unwrap()
        .values
}

fn bench_moving_average(c: &mut Criterion) {
    let x = series(1_000_000);
    let mut group = c.benchmark_group("moving_average");
    for w in [60usize, 10_080, 131_072] {
        group.bench_with_input(BenchmarkId::from_parameter(w), &w, |b, &w| {
            b.iter(|| moving_average(&x, WindowLen { samples: w }).unwrap())
        });
    }
    group.finish();
}

fn bench_rolling_std(c: &mut Criterion) {
    let x = series(1_000_000);
    c.bench_function("rolling_std/60", |b| {
        b.iter(|| rolling_std(&x, WindowLen { samples: 60 }).unwrap())
    });
}

fn bench_autocorrelation(c: &mut Criterion) {
    let x = series(10_000);
    c.bench_function("autocorrelation/10000", |b| {
        b.iter(|| autocorrelation(&x, 9_999).unwrap())
    });
}

fn bench_full_test(c: &mut Criterion) {
    let s = generate(&GeneratorSpec::new(
        GeneratorKind::GaussianIid { sigma: 1.0 },
        1_000_000,
        1,
    ))
    .unwrap();
    let mut group = c.benchmark_group("test_stationarity");
    group.sample_size(10);
    group.bench_function("1e6_default", |b| {
        b.iter(|| test_stationarity(&s, &TestConfig::default()).unwrap())
    });
    group.finish();
}

criterion_group!(
    benches,
    bench_moving_average,
    bench_rolling_std,
    bench_autocorrelation,
    bench_full_test
);
criterion_main!(benches);
