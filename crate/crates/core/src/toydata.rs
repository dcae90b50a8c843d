//! Synthetic desk-scale molecules with known conformational distributions.
//!
//! Three families: an equilateral triangle, a fixed-angle zig-zag chain, and
//! a four-atom chain whose dihedral flips between +60 and -60 degrees with
//! equal probability (a genuinely multimodal target). Every emitted
//! conformation gets an independent random rotation and translation so the
//! training data has no preferred frame; all graphs come out already
//! extended with virtual bonds.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use thiserror::Error;

use crate::geom::{self, Vec3};
use crate::molgraph::{build_graph, extend_graph, BondKind, Conformation, MolecularGraph};

#[derive(Debug, Error, PartialEq)]
pub enum ToyDataError {
    #[error("invalid toy spec: {reason}")]
    InvalidSpec { reason: String },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ToyFamily {
    /// 3 carbons, equilateral with side `bond_length`.
    RigidTriangle,
    /// `atom_count` carbons, fixed bond length and bend angle, planar zig-zag.
    RigidChain,
    /// 4 carbons; dihedral drawn from {+60, -60} degrees with equal
    /// probability.
    TwoModeChain,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ToySpec {
    pub family: ToyFamily,
    pub atom_count: usize,
    pub bond_length: f64,
    pub angle_deg: f64,
    pub jitter_std: f64,
    pub count: usize,
    pub seed: u64,
}

impl ToySpec {
    pub fn rigid_triangle(bond_length: f64, jitter_std: f64, count: usize, seed: u64) -> Self {
        ToySpec {
            family: ToyFamily::RigidTriangle,
            atom_count: 3,
            bond_length,
            angle_deg: 60.0,
            jitter_std,
            count,
            seed,
        }
    }

    pub fn rigid_chain(
        atom_count: usize,
        bond_length: f64,
        angle_deg: f64,
        jitter_std: f64,
        count: usize,
        seed: u64,
    ) -> Self {
        ToySpec {
            family: ToyFamily::RigidChain,
            atom_count,
            bond_length,
            angle_deg,
            jitter_std,
            count,
            seed,
        }
    }

    pub fn two_mode_chain(
        bond_length: f64,
        angle_deg: f64,
        jitter_std: f64,
        count: usize,
        seed: u64,
    ) -> Self {
        ToySpec {
            family: ToyFamily::TwoModeChain,
            atom_count: 4,
            bond_length,
            angle_deg,
            jitter_std,
            count,
            seed,
        }
    }

    fn validate(&self) -> Result<(), ToyDataError> {
        let fail = |reason: String| Err(ToyDataError::InvalidSpec { reason });
        if !(self.bond_length > 0.0) {
            return fail(format!("bond length must be positive, got {}", self.bond_length));
        }
        if !(self.jitter_std >= 0.0) {
            return fail(format!("jitter must be nonnegative, got {}", self.jitter_std));
        }
        if self.count < 1 {
            return fail("count must be at least 1".to_string());
        }
        if !(self.angle_deg > 0.0 && self.angle_deg < 180.0) {
            return fail(format!("angle must lie in (0, 180), got {}", self.angle_deg));
        }
        match self.family {
            ToyFamily::RigidTriangle if self.atom_count != 3 => {
                fail("rigid_triangle has exactly 3 atoms".to_string())
            }
            ToyFamily::TwoModeChain if self.atom_count != 4 => {
                fail("two_mode_chain has exactly 4 atoms".to_string())
            }
            ToyFamily::RigidChain if self.atom_count < 2 => {
                fail("rigid_chain needs at least 2 atoms".to_string())
            }
            _ => Ok(()),
        }
    }
}

fn triangle_base(b: f64) -> Vec<Vec3> {
    vec![
        [0.0, 0.0, 0.0],
        [b, 0.0, 0.0],
        [b / 2.0, b * 3.0f64.sqrt() / 2.0, 0.0],
    ]
}

/// Planar zig-zag with interior angle `angle` at every middle atom: step
/// headings alternate between +/- (pi - angle)/2 about the x axis.
fn chain_base(n: usize, bond: f64, angle: f64) -> Vec<Vec3> {
    let half_turn = (std::f64::consts::PI - angle) / 2.0;
    let mut coords = Vec::with_capacity(n);
    let mut pos = [0.0, 0.0, 0.0];
    coords.push(pos);
    for k in 0..n - 1 {
        let heading = if k % 2 == 0 { half_turn } else { -half_turn };
        let step = [bond * heading.cos(), bond * heading.sin(), 0.0];
        pos = geom::add(pos, step);
        coords.push(pos);
    }
    coords
}

fn two_mode_base(bond: f64, angle: f64, positive: bool) -> Vec<Vec3> {
    let mut coords = chain_base(3, bond, angle);
    let dihedral: f64 = if positive { 60.0 } else { -60.0 };
    coords.push(geom::place_dihedral(
        coords[0],
        coords[1],
        coords[2],
        bond,
        angle,
        dihedral.to_radians(),
    ));
    coords
}

fn toy_graph(spec: &ToySpec) -> MolecularGraph {
    let atoms = vec![6u32; spec.atom_count];
    let bonds: Vec<_> = (0..spec.atom_count - 1)
        .map(|k| (k, k + 1, BondKind::Single))
        .collect();
    extend_graph(&build_graph(&atoms, &bonds).expect("valid toy bonds")).expect("not extended")
}

/// Emits `count` (graph, conformation) pairs. Per-sample draw order: mode
/// flip (two-mode family only), per-coordinate jitter, rotation quaternion,
/// translation. Deterministic in `spec.seed`.
pub fn generate(spec: &ToySpec) -> Result<Vec<(MolecularGraph, Conformation)>, ToyDataError> {
    spec.validate()?;
    let graph = toy_graph(spec);
    let angle = spec.angle_deg.to_radians();
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let mut out = Vec::with_capacity(spec.count);
    for _ in 0..spec.count {
        let mut coords = match spec.family {
            ToyFamily::RigidTriangle => triangle_base(spec.bond_length),
            ToyFamily::RigidChain => chain_base(spec.atom_count, spec.bond_length, angle),
            ToyFamily::TwoModeChain => {
                let positive = rng.random_bool(0.5);
                two_mode_base(spec.bond_length, angle, positive)
            }
        };
        for p in &mut coords {
            for c in p.iter_mut() {
                *c += spec.jitter_std * rng.sample::<f64, _>(StandardNormal);
            }
        }
        let rot = geom::random_rotation(&mut rng);
        let t = [
            rng.sample::<f64, _>(StandardNormal),
            rng.sample::<f64, _>(StandardNormal),
            rng.sample::<f64, _>(StandardNormal),
        ];
        out.push((graph.clone(), Conformation::new(geom::apply_rigid(&rot, t, &coords))));
    }
    Ok(out)
}
