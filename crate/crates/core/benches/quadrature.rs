//! Parallel against sequential execution of the excised-domain node loop.

use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};

use finsler_gbc::chern_forms::{FormSettings, TransgressionBundle};
use finsler_gbc::connection::{ConnectionKind, ConnectionModel, EhresmannSpec};
use finsler_gbc::manifolds::{install_metric, sphere_atlas};
use finsler_gbc::metric::finsler::MetricSpec;
use finsler_gbc::quadrature::{base_integral_excised_with, pullback_by_section, ExcisedDisk, ExcisedDomain, Execution};
use finsler_gbc::topology::{find_zeros, section, SectionField, VectorFieldSpec};

fn node_loops(c: &mut Criterion) {
    let atlas = sphere_atlas();
    let metric = install_metric(&atlas, MetricSpec::Randers(0.1)).unwrap();
    let model = ConnectionModel::new(atlas.clone(), metric, EhresmannSpec::Spray, ConnectionKind::Cartan);
    let settings = FormSettings { fiber_order: 32, ..FormSettings::default() };
    let bundle = TransgressionBundle::new(model, settings);
    let field = SectionField::new(atlas.clone(), VectorFieldSpec::Rotational).unwrap();
    let zeros = find_zeros(&field, 17, &[]).unwrap().zeros;
    let disks: Vec<ExcisedDisk> =
        zeros.iter().map(|z| ExcisedDisk { chart: z.chart, center: z.location, radius: 0.1 }).collect();
    let dom = ExcisedDomain::new(&atlas, &disks).unwrap();
    let integrands: Vec<_> =
        (0..atlas.chart_count()).map(|ch| pullback_by_section(&bundle.integrand_field(ch), &section(&field, ch))).collect();

    let mut group = c.benchmark_group("excised_integral");
    group.sample_size(10);
    for order in [8, 16] {
        for (name, exec) in [("parallel", Execution::Parallel), ("sequential", Execution::Sequential)] {
            group.bench_with_input(BenchmarkId::new(name, order), &order, |b, &order| {
                b.iter(|| base_integral_excised_with(&integrands, &dom, order, exec).unwrap())
            });
        }
    }
    group.finish();
}

criterion_group!(benches, node_loops);
criterion_main!(benches);
