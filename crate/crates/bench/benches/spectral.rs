use std::hint::black_box;
use std::sync::Arc;

use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use spherevortex_core::spectral::SpectralPlan;
use spherevortex_core::{LatLonGrid, SphericalField};

fn transforms(c: &mut Criterion) {
    let mut group = c.benchmark_group("spectral");
    group.sample_size(10);
    for n in [32usize, 64, 128] {
        let plan = SpectralPlan::new(Arc::new(LatLonGrid::new(n, 2 * n).unwrap())).unwrap();
        let f = SphericalField::from_fn(plan.grid.clone(), |t, p| (t.cos() * 3.0).sin() + t.sin() * p.cos());
        let coef = plan.analysis(&f);
        group.bench_with_input(BenchmarkId::new("analysis", n), &f, |b, f| b.iter(|| plan.analysis(black_box(f))));
        group.bench_with_input(BenchmarkId::new("synthesis", n), &coef, |b, c| {
            b.iter(|| plan.synthesis(black_box(c)))
        });
        group.bench_with_input(BenchmarkId::new("poisson_inverse", n), &f, |b, f| {
            b.iter(|| plan.poisson_inverse(black_box(f)))
        });
    }
    group.finish();
}

criterion_group!(benches, transforms);
criterion_main!(benches);
