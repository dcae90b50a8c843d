use super::*;
use crate::geom;
use crate::molgraph::{build_graph, compute_distances, extend_graph, BondKind, Conformation};
use crate::testkit;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn two_atom_graph() -> MolecularGraph {
    build_graph(&[1, 2], &[(0, 1, BondKind::Single)]).unwrap()
}

#[test]
fn init_is_deterministic_in_seed() {
    let hyper = ScoreNetHyper::new(2, 8, 10);
    let a = init_params(&hyper, 42).unwrap();
    let b = init_params(&hyper, 42).unwrap();
    assert_eq!(a.values(), b.values());

    let c = init_params(&hyper, 43).unwrap();
    assert!(a.values().iter().zip(c.values()).any(|(x, y)| x != y));
}

#[test]
fn param_count_matches_hand_tally() {
    // H=4, N=1, 10 atomic numbers, 6 edge types:
    //   node MLP: 4*10 + 4 + 4*4 + 4 = 64
    //   edge MLP: 4*7  + 4 + 4*4 + 4 = 52
    //   layer:    4*4  + 4 + 4*4 + 4 = 40
    //   head:     4*12 + 4 + 1*4 + 1 = 57
    let hyper = ScoreNetHyper::new(1, 4, 10);
    assert_eq!(param_count(&hyper), 64 + 52 + 40 + 57);
    assert_eq!(init_params(&hyper, 0).unwrap().values().len(), 213);
}

#[test]
fn params_round_trip_bit_exactly() {
    let hyper = ScoreNetHyper::new(2, 6, 10);
    let params = init_params(&hyper, 7).unwrap();
    let rebuilt = ScoreNetParams::from_values(*params.hyper(), params.values().to_vec()).unwrap();
    for (a, b) in params.values().iter().zip(rebuilt.values()) {
        assert_eq!(a.to_bits(), b.to_bits());
    }
    assert!(matches!(
        ScoreNetParams::from_values(hyper, vec![0.0; 3]),
        Err(ScoreNetError::BadParamLength { .. })
    ));
}

#[test]
fn zero_weights_give_zero_embeddings() {
    let hyper = ScoreNetHyper::new(1, 4, 10);
    let params = ScoreNetParams::zeros(hyper).unwrap();
    let g = two_atom_graph();
    let d = DistanceVector::new(vec![1.2]);
    let (node_h, edge_h) = embed(&g, &d, &params).unwrap();
    assert!(node_h.iter().flatten().all(|&v| v == 0.0));
    assert!(edge_h.iter().flatten().all(|&v| v == 0.0));
}

#[test]
fn embeddings_depend_only_on_distances_and_types() {
    let hyper = ScoreNetHyper::new(1, 4, 10);
    let params = init_params(&hyper, 5).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(17);
    let g = testkit::random_tree_graph(&mut rng, 6);
    let r = testkit::random_conformation(&mut rng, g.num_atoms());
    let rot = geom::random_rotation(&mut rng);
    let moved = Conformation::new(geom::apply_rigid(&rot, [0.4, -0.8, 1.1], &r.coords));

    let d0 = compute_distances(&g, &r).unwrap();
    let d1 = compute_distances(&g, &moved).unwrap();
    let (n0, e0) = embed(&g, &d0, &params).unwrap();
    let (n1, e1) = embed(&g, &d1, &params).unwrap();
    for (a, b) in n0.iter().flatten().zip(n1.iter().flatten()) {
        assert!((a - b).abs() < 1e-9);
    }
    for (a, b) in e0.iter().flatten().zip(e1.iter().flatten()) {
        assert!((a - b).abs() < 1e-9);
    }
}

#[test]
fn embed_matches_hand_computed_values() {
    // H=2, one Single bond of length 1.5 between Z=1 and Z=2.
    let hyper = ScoreNetHyper {
        num_layers: 1,
        hidden_dim: 2,
        max_atomic_number: 2,
        num_edge_types: 6,
    };
    let lay = layout(&hyper);
    let mut params = ScoreNetParams::zeros(hyper).unwrap();
    {
        let v = params.values_mut();
        v[lay.node.w1.clone()].copy_from_slice(&[0.1, 0.2, 0.3, -0.4]);
        v[lay.node.b1.clone()].copy_from_slice(&[0.05, -0.05]);
        v[lay.node.w2.clone()].copy_from_slice(&[1.0, 0.5, -0.25, 2.0]);
        v[lay.node.b2.clone()].copy_from_slice(&[0.0, 0.1]);
        let mut edge_w1 = vec![0.0; 14];
        edge_w1[0] = 0.2; // type column, row 0
        edge_w1[6] = 0.4; // distance column, row 0
        edge_w1[7] = -0.3;
        edge_w1[13] = 0.6;
        v[lay.edge.w1.clone()].copy_from_slice(&edge_w1);
        v[lay.edge.b1.clone()].copy_from_slice(&[0.1, -0.2]);
        v[lay.edge.w2.clone()].copy_from_slice(&[0.5, -1.0, 1.5, 0.25]);
        v[lay.edge.b2.clone()].copy_from_slice(&[0.01, -0.02]);
    }
    let g = two_atom_graph();
    let d = DistanceVector::new(vec![1.5]);
    let (node_h, edge_h) = embed(&g, &d, &params).unwrap();

    // Worked out on paper: relu([0.15, 0.25]) and relu([0.25, -0.45]) through
    // the second layer, and relu([0.9, 0.4]) for the edge.
    let want_node0 = [1.0 * 0.15 + 0.5 * 0.25, -0.25 * 0.15 + 2.0 * 0.25 + 0.1];
    let want_node1 = [1.0 * 0.25, -0.25 * 0.25 + 0.1];
    let want_edge = [0.5 * 0.9 - 1.0 * 0.4 + 0.01, 1.5 * 0.9 + 0.25 * 0.4 - 0.02];
    for (got, want) in node_h[0].iter().zip(&want_node0) {
        assert!((got - want).abs() < 1e-15);
    }
    for (got, want) in node_h[1].iter().zip(&want_node1) {
        assert!((got - want).abs() < 1e-15);
    }
    for (got, want) in edge_h[0].iter().zip(&want_edge) {
        assert!((got - want).abs() < 1e-15);
    }
}

#[test]
fn embed_rejects_unknown_atoms_and_bad_sizes() {
    let hyper = ScoreNetHyper::new(1, 4, 10);
    let params = init_params(&hyper, 1).unwrap();
    let heavy = build_graph(&[26, 6], &[(0, 1, BondKind::Single)]).unwrap();
    assert!(matches!(
        embed(&heavy, &DistanceVector::new(vec![1.0]), &params),
        Err(ScoreNetError::UnknownAtomType { charge: 26, .. })
    ));
    let g = two_atom_graph();
    assert!(matches!(
        embed(&g, &DistanceVector::new(vec![]), &params),
        Err(ScoreNetError::SizeMismatch { .. })
    ));
}

#[test]
fn isolated_node_is_a_pure_mlp_chain() {
    let hyper = ScoreNetHyper::new(3, 4, 10);
    let params = init_params(&hyper, 9).unwrap();
    let g = build_graph(&[6], &[]).unwrap();
    let d = DistanceVector::new(vec![]);
    let (node_h, edge_h) = embed(&g, &d, &params).unwrap();
    let out = message_pass(&g, &node_h, &edge_h, &params);

    let lay = layout(params.hyper());
    let mut h = node_h[0].clone();
    for lr in &lay.layers {
        h = mlp2(params.values(), lr, &h);
    }
    assert_eq!(out[0], h);
}

#[test]
fn message_pass_matches_hand_computed_path() {
    // 3-node path, N=1, H=2, layer MLP set to the identity so the update is
    // h_i + sum relu(h_j + h_e) followed by a final relu.
    let hyper = ScoreNetHyper {
        num_layers: 1,
        hidden_dim: 2,
        max_atomic_number: 8,
        num_edge_types: 6,
    };
    let lay = layout(&hyper);
    let mut params = ScoreNetParams::zeros(hyper).unwrap();
    {
        let v = params.values_mut();
        v[lay.layers[0].w1.clone()].copy_from_slice(&[1.0, 0.0, 0.0, 1.0]);
        v[lay.layers[0].w2.clone()].copy_from_slice(&[1.0, 0.0, 0.0, 1.0]);
    }
    let g = build_graph(
        &[6, 6, 6],
        &[(0, 1, BondKind::Single), (1, 2, BondKind::Single)],
    )
    .unwrap();
    let node_h = vec![vec![1.0, 0.0], vec![0.0, 1.0], vec![0.5, 0.5]];
    let edge_h = vec![vec![0.1, -0.1], vec![0.2, 0.3]];
    let out = message_pass(&g, &node_h, &edge_h, &params);

    // acc_0 = [1,0] + relu([0.1, 0.9])         = [1.1, 0.9]
    // acc_1 = [0,1] + relu([1.1,-0.1]) + relu([0.7,0.8]) = [1.8, 1.8]
    // acc_2 = [0.5,0.5] + relu([0.2, 1.3])     = [0.7, 1.8]
    let want = [[1.1, 0.9], [1.8, 1.8], [0.7, 1.8]];
    for (got, want) in out.iter().zip(&want) {
        for (a, b) in got.iter().zip(want) {
            assert!((a - b).abs() < 1e-15, "{got:?} vs {want:?}");
        }
    }
}

#[test]
fn message_pass_is_permutation_equivariant() {
    let hyper = ScoreNetHyper::new(2, 6, 10);
    let params = init_params(&hyper, 23).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(51);
    for _ in 0..10 {
        let g = testkit::random_tree_graph(&mut rng, 8);
        let n = g.num_atoms();
        let r = testkit::random_conformation(&mut rng, n);

        let mut perm: Vec<usize> = (0..n).collect();
        for k in (1..n).rev() {
            perm.swap(k, rng.random_range(0..=k));
        }
        let mut atoms_p = vec![0u32; n];
        let mut coords_p = vec![[0.0; 3]; n];
        for i in 0..n {
            atoms_p[perm[i]] = g.atoms()[i];
            coords_p[perm[i]] = r.coords[i];
        }
        let edges_p: Vec<_> = g
            .edges()
            .iter()
            .map(|e| (perm[e.i], perm[e.j], e.kind))
            .collect();
        let gp = crate::molgraph::from_typed_edges(&atoms_p, &edges_p).unwrap();
        let rp = Conformation::new(coords_p);

        let d = compute_distances(&g, &r).unwrap();
        let dp = compute_distances(&gp, &rp).unwrap();
        let (nh, eh) = embed(&g, &d, &params).unwrap();
        let (nhp, ehp) = embed(&gp, &dp, &params).unwrap();
        let out = message_pass(&g, &nh, &eh, &params);
        let out_p = message_pass(&gp, &nhp, &ehp, &params);
        for i in 0..n {
            for c in 0..hyper.hidden_dim {
                // Neighbor sums run in a different order after relabeling, so
                // allow last-ulp rounding drift.
                assert!((out[i][c] - out_p[perm[i]][c]).abs() < 1e-12);
            }
        }
    }
}

#[test]
fn sigma_doubling_exactly_halves_scores() {
    let hyper = ScoreNetHyper::new(2, 5, 10);
    let params = init_params(&hyper, 3).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    let g = testkit::random_tree_graph(&mut rng, 5);
    let r = testkit::random_conformation(&mut rng, g.num_atoms());
    let d = compute_distances(&g, &r).unwrap();
    let s1 = edge_score(&g, &d, 0.37, &params).unwrap();
    let s2 = edge_score(&g, &d, 0.74, &params).unwrap();
    for (a, b) in s1.iter().zip(&s2) {
        assert_eq!(b.to_bits(), (a / 2.0).to_bits());
    }
}

#[test]
fn sigma_scaling_identity() {
    let hyper = ScoreNetHyper::new(1, 4, 10);
    let params = init_params(&hyper, 12).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(13);
    let g = testkit::random_tree_graph(&mut rng, 6);
    let r = testkit::random_conformation(&mut rng, g.num_atoms());
    let d = compute_distances(&g, &r).unwrap();
    let uncond = unconditional_edge_scores(&g, &d, &params).unwrap();
    // Powers of two make the divide/multiply round trip exact.
    for sigma in [0.25, 0.5, 2.0, 8.0] {
        let s = edge_score(&g, &d, sigma, &params).unwrap();
        for (a, u) in s.iter().zip(&uncond) {
            assert_eq!((a * sigma).to_bits(), u.to_bits());
        }
    }
}

#[test]
fn zero_output_head_gives_zero_scores() {
    let hyper = ScoreNetHyper::new(2, 5, 10);
    let mut params = init_params(&hyper, 6).unwrap();
    let lay = layout(&hyper);
    {
        let v = params.values_mut();
        v[lay.head.w2.clone()].fill(0.0);
        v[lay.head.b2.clone()].fill(0.0);
    }
    let g = two_atom_graph();
    let d = DistanceVector::new(vec![0.9]);
    let s = edge_score(&g, &d, 0.4, &params).unwrap();
    assert!(s.iter().all(|&v| v == 0.0));
}

#[test]
fn rejects_non_positive_sigma() {
    let hyper = ScoreNetHyper::new(1, 4, 10);
    let params = init_params(&hyper, 2).unwrap();
    let g = two_atom_graph();
    let d = DistanceVector::new(vec![1.0]);
    for sigma in [0.0, -1.0, f64::NAN] {
        assert!(matches!(
            edge_score(&g, &d, sigma, &params),
            Err(ScoreNetError::NonPositiveSigma { .. })
        ));
    }
}

#[test]
fn scores_invariant_under_rigid_motion() {
    let hyper = ScoreNetHyper::new(2, 6, 10);
    let params = init_params(&hyper, 8).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(21);
    for _ in 0..10 {
        let g = testkit::random_tree_graph(&mut rng, 7);
        let r = testkit::random_conformation(&mut rng, g.num_atoms());
        let rot = geom::random_rotation(&mut rng);
        let t = [
            rng.random_range(-3.0..3.0),
            rng.random_range(-3.0..3.0),
            rng.random_range(-3.0..3.0),
        ];
        let moved = Conformation::new(geom::apply_rigid(&rot, t, &r.coords));
        let s0 = edge_score(&g, &compute_distances(&g, &r).unwrap(), 0.5, &params).unwrap();
        let s1 = edge_score(&g, &compute_distances(&g, &moved).unwrap(), 0.5, &params).unwrap();
        for (a, b) in s0.iter().zip(&s1) {
            assert!((a - b).abs() < 1e-9);
        }
    }
}

#[test]
fn plain_forward_matches_tape_forward() {
    let hyper = ScoreNetHyper::new(2, 3, 10);
    let params = init_params(&hyper, 77).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(78);
    let g = extend_graph(
        &build_graph(
            &[6, 8, 6, 1],
            &[
                (0, 1, BondKind::Single),
                (1, 2, BondKind::Double),
                (2, 3, BondKind::Single),
            ],
        )
        .unwrap(),
    )
    .unwrap();
    let r = testkit::random_conformation(&mut rng, 4);
    let d = compute_distances(&g, &r).unwrap();

    let plain = unconditional_edge_scores(&g, &d, &params).unwrap();

    let tape = Tape::new();
    let theta = lift_params(&tape, &params);
    let d_vars: Vec<_> = d.values.iter().map(|&v| tape.lift(v)).collect();
    let on_tape = unconditional_scores_on_tape(&tape, &g, &d_vars, &theta, &hyper).unwrap();

    for (p, t) in plain.iter().zip(&on_tape) {
        assert!(
            (p - t.value()).abs() <= 1e-12 * p.abs().max(1.0),
            "plain {p} vs tape {}",
            t.value()
        );
    }
}
