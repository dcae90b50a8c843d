//! Shared fixtures for the pipeline benchmarks.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use gradconf_core::dsm::{make_schedule, NoiseSchedule};
use gradconf_core::molgraph::{compute_distances, Conformation, DistanceVector, MolecularGraph};
use gradconf_core::scorenet::{init_params, ScoreNetHyper, ScoreNetParams};
use gradconf_core::testkit;

pub struct Fixture {
    pub graph: MolecularGraph,
    pub conformation: Conformation,
    pub distances: DistanceVector,
    pub params: ScoreNetParams,
    pub hyper: ScoreNetHyper,
    pub schedule: NoiseSchedule,
}

/// A deterministic 8-atom molecule with a 4-layer, 64-wide network: small
/// enough to iterate quickly, large enough to exercise every code path.
pub fn fixture() -> Fixture {
    let mut rng = ChaCha8Rng::seed_from_u64(777);
    let graph = loop {
        let g = testkit::random_tree_graph(&mut rng, 8);
        if g.num_atoms() == 8 {
            break g;
        }
    };
    let conformation = testkit::random_conformation(&mut rng, graph.num_atoms());
    let distances = compute_distances(&graph, &conformation).unwrap();
    let hyper = ScoreNetHyper::new(4, 64, 10);
    let params = init_params(&hyper, 7).unwrap();
    let schedule = make_schedule(2.0, 0.01, 10).unwrap();
    Fixture {
        graph,
        conformation,
        distances,
        params,
        hyper,
        schedule,
    }
}
