use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use termfit_core::calibration::{calibrate_batch, DateFailure};
use termfit_core::synthetic::NsScenario;
use termfit_core::{bootstrap_zero_curve, de_minimize, group_by_date, Bounds, DeConfig, Execution, MaturityGrid, Model, ZeroCurve};

const MODES: [(&str, Execution); 2] = [("sequential", Execution::Sequential), ("parallel", Execution::Parallel)];

/// Rosenbrock in 8 dimensions with some extra arithmetic per call, so the
/// evaluation step dominates the generation loop.
fn heavy_rosenbrock(x: &[f64]) -> f64 {
    let mut acc = 0.0;
    for _ in 0..50 {
        acc += x.windows(2).map(|w| 100.0 * (w[1] - w[0] * w[0]).powi(2) + (1.0 - w[0]).powi(2)).sum::<f64>();
    }
    acc / 50.0
}

fn de_evaluation(c: &mut Criterion) {
    let bounds = Bounds(vec![(-2.0, 2.0); 8]);
    let mut g = c.benchmark_group("de_rosenbrock_8d");
    g.sample_size(10);
    for (name, execution) in MODES {
        let cfg = DeConfig { max_generations: 200, execution, ..DeConfig::default().with_seed(1) };
        g.bench_function(BenchmarkId::from_parameter(name), |b| b.iter(|| de_minimize(heavy_rosenbrock, &bounds, &cfg).unwrap()));
    }
    g.finish();
}

fn batch_calibration(c: &mut Criterion) {
    let grid = MaturityGrid::default();
    let recs = NsScenario { seed: 3, dates: 8, ..NsScenario::default() }.auctions(&grid).unwrap();
    let (ds, _) = group_by_date(&recs, &grid).unwrap();
    let curves: Vec<Result<ZeroCurve, DateFailure>> =
        ds.observations.iter().map(|o| Ok(bootstrap_zero_curve(o, &grid).unwrap())).collect();
    let mut g = c.benchmark_group("calibrate_batch_ns_8_dates");
    g.sample_size(10);
    for (name, execution) in MODES {
        let cfg = DeConfig { execution, ..DeConfig::default().with_seed(5) };
        g.bench_function(BenchmarkId::from_parameter(name), |b| {
            b.iter(|| calibrate_batch(&curves, Model::NelsonSiegel, &cfg).unwrap())
        });
    }
    g.finish();
}

criterion_group!(benches, de_evaluation, batch_calibration);
criterion_main!(benches);
