//! Converts per-edge distance scores into per-atom coordinate scores.
//!
//! For a log-density that factors through interatomic distances, the gradient
//! with respect to atom `i` is the signed sum over incident edges of
//! `(s_ij / d_ij) * (r_i - r_j)`: each edge acts like a pair force along the
//! bond direction, pushing its two endpoints in opposite directions. Distance
//! scores are rotation and translation invariant, and `(r_i - r_j)` rotates
//! with the molecule, so the assembled field is roto-translation equivariant.
//!
//! Two division policies exist for the `1/d_ij` factor. Scoring errors out
//! below [`MIN_SCORING_DISTANCE`] (training data never has coincident atoms);
//! the Langevin sampler instead clamps the divisor so transient
//! near-collisions during sampling cannot abort a chain. The clamp applies to
//! the division only; the network always sees the raw distances.

use thiserror::Error;

use crate::geom::{self, Vec3};
use crate::molgraph::{compute_distances, Conformation, GraphError, MolecularGraph};
use crate::scorenet::{edge_score, ScoreNetError, ScoreNetParams};

/// Distances below this (in Angstroms) make scoring fail rather than divide.
pub const MIN_SCORING_DISTANCE: f64 = 1e-8;

#[derive(Debug, Error)]
pub enum FieldsError {
    #[error("degenerate distance {distance} on edge ({i}, {j})")]
    DegenerateDistance { i: usize, j: usize, distance: f64 },
    #[error(transparent)]
    Graph(#[from] GraphError),
    #[error(transparent)]
    Net(#[from] ScoreNetError),
}

/// Gradient of the log-density with respect to every atom position (1/A).
#[derive(Debug, Clone, PartialEq)]
pub struct CoordinateScore {
    pub vectors: Vec<Vec3>,
}

impl CoordinateScore {
    pub fn num_atoms(&self) -> usize {
        self.vectors.len()
    }
}

fn assemble(
    g: &MolecularGraph,
    r: &Conformation,
    edge_scores: &[f64],
    clamp: Option<f64>,
) -> Result<CoordinateScore, FieldsError> {
    if r.num_atoms() != g.num_atoms() {
        return Err(GraphError::SizeMismatch {
            expected: g.num_atoms(),
            got: r.num_atoms(),
        }
        .into());
    }
    if edge_scores.len() != g.num_edges() {
        return Err(GraphError::SizeMismatch {
            expected: g.num_edges(),
            got: edge_scores.len(),
        }
        .into());
    }
    let mut out = vec![[0.0; 3]; g.num_atoms()];
    for (e, &s) in g.edges().iter().zip(edge_scores) {
        let delta = geom::sub(r.coords[e.i], r.coords[e.j]);
        let d = geom::norm(delta);
        let divisor = match clamp {
            Some(floor) => d.max(floor),
            None if d < MIN_SCORING_DISTANCE => {
                return Err(FieldsError::DegenerateDistance {
                    i: e.i,
                    j: e.j,
                    distance: d,
                });
            }
            None => d,
        };
        let v = geom::scale(delta, s / divisor);
        out[e.i] = geom::add(out[e.i], v);
        out[e.j] = geom::sub(out[e.j], v);
    }
    Ok(CoordinateScore { vectors: out })
}

/// Assembles a coordinate score from externally supplied per-edge scores.
pub fn assemble_coordinate_score(
    g: &MolecularGraph,
    r: &Conformation,
    edge_scores: &[f64],
) -> Result<CoordinateScore, FieldsError> {
    assemble(g, r, edge_scores, None)
}

/// Network score of the coordinates at noise level `sigma`.
pub fn coordinate_score(
    g: &MolecularGraph,
    r: &Conformation,
    sigma: f64,
    params: &ScoreNetParams,
) -> Result<CoordinateScore, FieldsError> {
    let d = compute_distances(g, r)?;
    let scores = edge_score(g, &d, sigma, params)?;
    assemble(g, r, &scores, None)
}

/// Like [`coordinate_score`], but the `1/d` divisor is floored at
/// `clamp_distance` so near-coincident atoms never abort. Used by sampling.
pub fn coordinate_score_clamped(
    g: &MolecularGraph,
    r: &Conformation,
    sigma: f64,
    params: &ScoreNetParams,
    clamp_distance: f64,
) -> Result<CoordinateScore, FieldsError> {
    let d = compute_distances(g, r)?;
    let scores = edge_score(g, &d, sigma, params)?;
    assemble(g, r, &scores, Some(clamp_distance))
}
