//! Sequential against rayon for the three data-parallel hot loops. On a
//! single-core machine the two should be close; the gap is pool overhead.

use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use wobble_core::campaign::{run_campaign, CampaignConfig};
use wobble_core::conjecture::height_scan;
use wobble_core::contact::TableSpec;
use wobble_core::motion::MotionKind;
use wobble_core::terrain::{generate, slope_bound_with};
use wobble_core::{Exec, Extent};

const POLICIES: [(&str, Exec); 2] = [("sequential", Exec::Sequential), ("parallel", Exec::Parallel)];

fn slope(c: &mut Criterion) {
    let t = generate(7, 10f64.to_radians(), 20, Extent::square(8.0)).unwrap();
    let mut g = c.benchmark_group("slope_bound");
    g.sample_size(10);
    for (name, exec) in POLICIES {
        g.bench_with_input(BenchmarkId::from_parameter(name), &exec, |b, &e| {
            b.iter(|| slope_bound_with(&t, t.extent(), 40_000, e).unwrap())
        });
    }
    g.finish();
}

fn scan(c: &mut Criterion) {
    let t = generate(7, 10f64.to_radians(), 20, Extent::square(8.0)).unwrap();
    let table = TableSpec::square(1.0);
    let mut g = c.benchmark_group("height_scan");
    g.sample_size(10);
    for (name, exec) in POLICIES {
        g.bench_with_input(BenchmarkId::from_parameter(name), &exec, |b, &e| {
            b.iter(|| height_scan(&table, &t, [0.0, 0.0], 4096, e).unwrap())
        });
    }
    g.finish();
}

fn campaign(c: &mut Criterion) {
    let cfg = CampaignConfig::new(4, 1, 10f64.to_radians(), MotionKind::RotateTranslate);
    let mut g = c.benchmark_group("campaign");
    g.sample_size(10);
    for (name, exec) in POLICIES {
        g.bench_with_input(BenchmarkId::from_parameter(name), &exec, |b, &e| {
            b.iter(|| run_campaign(&cfg, e).unwrap())
        });
    }
    g.finish();
}

criterion_group!(benches, slope, scan, campaign);
criterion_main!(benches);
