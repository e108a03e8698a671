use criterion::{criterion_group, criterion_main, Criterion};
use std::hint::black_box;

use pilotgeom::area_models::{E3Method, MixedAreaDistribution};
use pilotgeom::coverage_se::{AnalyticalModel, NetworkConfig};
use pilotgeom::geometry::{sample_ppp, CellBuilder, RegionKind, Window};
use pilotgeom::numerics::RngStream;
use pilotgeom::simulate::{run_realization, SimulationConfig};

fn voronoi(c: &mut Criterion) {
    let lambda = 4e-6;
    let pattern = sample_ppp(
        lambda,
        Window::for_density(lambda),
        &mut RngStream::new(1, 0),
    )
    .unwrap();
    let interior = pattern.interior_indices();
    c.bench_function("voronoi_interior_cells", |b| {
        b.iter(|| {
            let builder = CellBuilder::new(&pattern);
            for &i in &interior {
                black_box(builder.voronoi(i).unwrap());
            }
        })
    });
}

fn area_fit(c: &mut Criterion) {
    c.bench_function("area_fit_cc_ce", |b| {
        b.iter(|| {
            for kind in [RegionKind::CC, RegionKind::CE] {
                black_box(
                    MixedAreaDistribution::fit(kind, 4e-6, black_box(200.0), E3Method::MonteCarlo)
                        .unwrap(),
                );
            }
        })
    });
}

fn coverage(c: &mut Criterion) {
    let cfg = NetworkConfig::default();
    c.bench_function("analytical_model_build", |b| {
        b.iter(|| black_box(AnalyticalModel::new(&cfg).unwrap()))
    });
    let model = AnalyticalModel::new(&cfg).unwrap();
    c.bench_function("coverage_point", |b| {
        b.iter(|| black_box(model.coverage(RegionKind::CE, black_box(1.0)).unwrap()))
    });
    c.bench_function("user_se_ce", |b| {
        b.iter(|| black_box(model.avg_user_se(RegionKind::CE).unwrap()))
    });
}

fn realization(c: &mut Criterion) {
    let cfg = SimulationConfig::default();
    let mut i = 0;
    c.bench_function("full_realization", |b| {
        b.iter(|| {
            i += 1;
            black_box(run_realization(&cfg, &mut RngStream::new(1, i)).unwrap())
        })
    });
}

criterion_group! {
    name = benches;
    config = Criterion::default().sample_size(10);
    targets = voronoi, area_fit, coverage, realization
}
criterion_main!(benches);
