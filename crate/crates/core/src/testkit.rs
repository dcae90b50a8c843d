//! Randomized fixtures shared by tests and benchmarks: small random
//! molecules, well-separated conformations, and a central finite-difference
//! gradient oracle.

use rand::Rng;

use crate::geom::{self, Vec3};
use crate::molgraph::{self, BondKind, Conformation, MolecularGraph};

const CHARGES: [u32; 4] = [1, 6, 7, 8];
const REAL_KINDS: [BondKind; 4] = [
    BondKind::Single,
    BondKind::Double,
    BondKind::Triple,
    BondKind::Aromatic,
];

/// Random connected molecule on 2..=`max_atoms` nodes: a uniform random tree
/// plus an occasional extra edge, extended with virtual bonds.
pub fn random_tree_graph<R: Rng>(rng: &mut R, max_atoms: usize) -> MolecularGraph {
    let n = rng.random_range(2..=max_atoms.max(2));
    let atoms: Vec<u32> = (0..n).map(|_| CHARGES[rng.random_range(0..4)]).collect();
    let mut bonds: Vec<(usize, usize, BondKind)> = (1..n)
        .map(|v| {
            let parent = rng.random_range(0..v);
            (parent, v, REAL_KINDS[rng.random_range(0..4)])
        })
        .collect();
    if n >= 4 && rng.random_bool(0.3) {
        // One extra edge between non-adjacent nodes, if such a pair exists.
        for _ in 0..8 {
            let a = rng.random_range(0..n);
            let b = rng.random_range(0..n);
            if a != b
                && !bonds
                    .iter()
                    .any(|&(i, j, _)| (i, j) == (a.min(b), a.max(b)) || (j, i) == (a.min(b), a.max(b)))
            {
                bonds.push((a.min(b), a.max(b), BondKind::Single));
                break;
            }
        }
    }
    let g = molgraph::build_graph(&atoms, &bonds).unwrap();
    molgraph::extend_graph(&g).unwrap()
}

/// Random coordinates in a box, resampled until all pairs are at least 0.3 A
/// apart so distance divisions stay well away from the singular regime.
pub fn random_conformation<R: Rng>(rng: &mut R, n: usize) -> Conformation {
    'outer: loop {
        let coords: Vec<Vec3> = (0..n)
            .map(|_| {
                [
                    rng.random_range(-1.5..1.5),
                    rng.random_range(-1.5..1.5),
                    rng.random_range(-1.5..1.5),
                ]
            })
            .collect();
        for i in 0..n {
            for j in (i + 1)..n {
                if geom::distance(coords[i], coords[j]) < 0.3 {
                    continue 'outer;
                }
            }
        }
        return Conformation::new(coords);
    }
}

/// Central finite-difference gradient of `f` at `x` with step `h`.
pub fn central_difference<F: Fn(&[f64]) -> f64>(f: F, x: &[f64], h: f64) -> Vec<f64> {
    let mut grad = Vec::with_capacity(x.len());
    let mut probe = x.to_vec();
    for k in 0..x.len() {
        probe[k] = x[k] + h;
        let fp = f(&probe);
        probe[k] = x[k] - h;
        let fm = f(&probe);
        probe[k] = x[k];
        grad.push((fp - fm) / (2.0 * h));
    }
    grad
}

/// Largest relative component difference, with an absolute floor so
/// near-zero components do not blow the ratio up.
pub fn max_relative_error(got: &[f64], want: &[f64]) -> f64 {
    assert_eq!(got.len(), want.len());
    let scale = want.iter().fold(0.0f64, |m, v| m.max(v.abs())).max(1e-12);
    got.iter()
        .zip(want)
        .map(|(a, b)| (a - b).abs() / scale)
        .fold(0.0, f64::max)
}

/// Exhaustive rotation-grid oracle for the minimum RMSD between two centered
/// point sets: a full ZYZ Euler scan at 4 degrees, then local refinement of
/// the best candidates down to `final_step_deg`. Independent of the SVD
/// path it is used to check.
pub fn grid_search_rmsd(p: &[Vec3], q: &[Vec3], final_step_deg: f64) -> f64 {
    assert_eq!(p.len(), q.len());
    let center = |pts: &[Vec3]| -> Vec<Vec3> {
        let mut c = [0.0; 3];
        for v in pts {
            c = geom::add(c, *v);
        }
        c = geom::scale(c, 1.0 / pts.len() as f64);
        pts.iter().map(|v| geom::sub(*v, c)).collect()
    };
    let pc = center(p);
    let qc = center(q);
    let rmsd_at = |angles: [f64; 3]| -> f64 {
        let rot = geom::rotation_from_euler_zyz(angles[0], angles[1], angles[2]);
        let mut ss = 0.0;
        for (a, b) in pc.iter().zip(&qc) {
            let d = geom::sub(geom::mat_vec(&rot, *a), *b);
            ss += geom::dot(d, d);
        }
        (ss / pc.len() as f64).sqrt()
    };

    let deg = std::f64::consts::PI / 180.0;
    let coarse = 4.0 * deg;
    let mut candidates: Vec<([f64; 3], f64)> = Vec::new();
    let mut alpha = 0.0;
    while alpha < 2.0 * std::f64::consts::PI {
        let mut beta = 0.0;
        while beta <= std::f64::consts::PI {
            let mut gamma = 0.0;
            while gamma < 2.0 * std::f64::consts::PI {
                let v = rmsd_at([alpha, beta, gamma]);
                candidates.push(([alpha, beta, gamma], v));
                gamma += coarse;
            }
            beta += coarse;
        }
        alpha += coarse;
    }
    candidates.sort_by(|a, b| a.1.partial_cmp(&b.1).unwrap());
    candidates.truncate(24);

    let mut best = candidates[0].1;
    let mut step = coarse;
    let final_step = final_step_deg * deg;
    while step > final_step {
        let next_step = (step / 4.0).max(final_step);
        let mut refined = Vec::new();
        for &(center_angles, _) in &candidates {
            let span = 4;
            for da in -span..=span {
                for db in -span..=span {
                    for dg in -span..=span {
                        let angles = [
                            center_angles[0] + da as f64 * next_step,
                            center_angles[1] + db as f64 * next_step,
                            center_angles[2] + dg as f64 * next_step,
                        ];
                        let v = rmsd_at(angles);
                        refined.push((angles, v));
                    }
                }
            }
        }
        refined.sort_by(|a, b| a.1.partial_cmp(&b.1).unwrap());
        refined.truncate(8);
        best = best.min(refined[0].1);
        candidates = refined;
        step = next_step;
    }
    best
}
