use std::hint::black_box;

use criterion::{criterion_group, criterion_main, Criterion};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use gradconf_bench::fixture;
use gradconf_core::autodiff::Tape;
use gradconf_core::dsm;
use gradconf_core::fields;
use gradconf_core::metrics;
use gradconf_core::molgraph::compute_distances;
use gradconf_core::sampler::{self, LangevinConfig};
use gradconf_core::scorenet;
use gradconf_core::testkit;

fn bench_pipeline(c: &mut Criterion) {
    let fx = fixture();

    c.bench_function("compute_distances", |b| {
        b.iter(|| compute_distances(black_box(&fx.graph), black_box(&fx.conformation)).unwrap())
    });

    c.bench_function("edge_score", |b| {
        b.iter(|| {
            scorenet::edge_score(
                black_box(&fx.graph),
                black_box(&fx.distances),
                0.5,
                &fx.params,
            )
            .unwrap()
        })
    });

    c.bench_function("coordinate_score", |b| {
        b.iter(|| {
            fields::coordinate_score(
                black_box(&fx.graph),
                black_box(&fx.conformation),
                0.5,
                &fx.params,
            )
            .unwrap()
        })
    });

    c.bench_function("dsm_loss_grad", |b| {
        let tape = Tape::new();
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        b.iter(|| {
            tape.clear();
            dsm::dsm_loss(
                black_box(&fx.params),
                &fx.graph,
                &fx.distances,
                &fx.schedule,
                &mut rng,
            )
            .unwrap()
        })
    });

    c.bench_function("langevin_level", |b| {
        let cfg = LangevinConfig {
            epsilon: 1e-4,
            steps_per_level: 10,
            prior_std: 1.0,
            seed: 5,
            clamp_distance: 1e-3,
        };
        let two_level = dsm::make_schedule(1.0, 0.5, 2).unwrap();
        b.iter(|| sampler::sample(&fx.graph, &fx.params, &two_level, &cfg).unwrap())
    });

    c.bench_function("kabsch_rmsd_8_atoms", |b| {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let other = testkit::random_conformation(&mut rng, fx.graph.num_atoms());
        let mask = fx.graph.heavy_mask();
        b.iter(|| {
            metrics::kabsch_rmsd(black_box(&fx.conformation), black_box(&other), &mask).unwrap()
        })
    });

    c.bench_function("mmd_50x50", |b| {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let draw = |rng: &mut ChaCha8Rng| -> Vec<Vec<f64>> {
            use rand::Rng;
            (0..50)
                .map(|_| (0..4).map(|_| rng.random_range(-1.0..1.0)).collect())
                .collect()
        };
        let x = draw(&mut rng);
        let y = draw(&mut rng);
        b.iter(|| metrics::mmd(black_box(&x), black_box(&y), 0.7).unwrap())
    });
}

criterion_group!(
    name = benches;
    config = Criterion::default().sample_size(20);
    targets = bench_pipeline
);
criterion_main!(benches);
