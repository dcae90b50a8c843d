//! Noise-conditional score network over interatomic distances.
//!
//! Nodes embed one-hot nuclear charges and edges embed one-hot bond types
//! concatenated with the raw distance; a GIN-variant message-passing stack
//! updates node embeddings; per-edge scores come from an MLP over
//! `h_i || h_j || h_e` with the canonical `i < j` orientation. The network is
//! conditioned on the noise level purely by division: `s(d, sigma) =
//! s(d) / sigma`. Every MLP is two layers with one ReLU in between.
//!
//! Parameters live in one flat `f64` vector with a fixed layout (see
//! [`Layout`]), which makes the optimizer state, the tape-based training
//! forward, and the on-disk checkpoint format trivial to keep in sync.

pub mod checkpoint;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use std::ops::Range;
use thiserror::Error;

use crate::autodiff::{sum, Tape, Var};
use crate::molgraph::{DistanceVector, MolecularGraph, NUM_BOND_KINDS};

#[derive(Debug, Error, PartialEq)]
pub enum ScoreNetError {
    #[error("invalid hyperparameters: {reason}")]
    InvalidHyper { reason: String },
    #[error("nuclear charge {charge} outside the embedded range 1..={max}")]
    UnknownAtomType { charge: u32, max: usize },
    #[error("sigma must be positive, got {sigma}")]
    NonPositiveSigma { sigma: f64 },
    #[error("distance vector has {got} components, graph has {expected} edges")]
    SizeMismatch { expected: usize, got: usize },
    #[error("parameter vector has {got} values, layout needs {expected}")]
    BadParamLength { expected: usize, got: usize },
}

/// Architecture hyperparameters: `num_layers` message-passing rounds over a
/// `hidden_dim`-wide embedding space.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ScoreNetHyper {
    pub num_layers: usize,
    pub hidden_dim: usize,
    pub max_atomic_number: usize,
    pub num_edge_types: usize,
}

impl ScoreNetHyper {
    pub fn new(num_layers: usize, hidden_dim: usize, max_atomic_number: usize) -> Self {
        ScoreNetHyper {
            num_layers,
            hidden_dim,
            max_atomic_number,
            num_edge_types: NUM_BOND_KINDS,
        }
    }

    pub fn validate(&self) -> Result<(), ScoreNetError> {
        let fail = |reason: &str| {
            Err(ScoreNetError::InvalidHyper {
                reason: reason.to_string(),
            })
        };
        if self.num_layers < 1 {
            return fail("num_layers must be >= 1");
        }
        if self.hidden_dim < 1 {
            return fail("hidden_dim must be >= 1");
        }
        if self.max_atomic_number < 1 {
            return fail("max_atomic_number must be >= 1");
        }
        if self.num_edge_types < NUM_BOND_KINDS {
            return fail("num_edge_types must cover all bond kinds");
        }
        Ok(())
    }

    fn node_input_dim(&self) -> usize {
        self.max_atomic_number
    }

    /// One-hot edge type plus the scalar distance.
    fn edge_input_dim(&self) -> usize {
        self.num_edge_types + 1
    }
}

/// Ranges of one two-layer MLP inside the flat parameter vector.
/// `w1` is `mid x input`, `w2` is `out x mid`, both row-major.
#[derive(Debug, Clone)]
pub(crate) struct MlpRanges {
    pub input: usize,
    pub mid: usize,
    pub out: usize,
    pub w1: Range<usize>,
    pub b1: Range<usize>,
    pub w2: Range<usize>,
    pub b2: Range<usize>,
}

/// Flat layout: node MLP, edge MLP, one MLP per message-passing layer, then
/// the output head. Weight matrices are row-major; biases follow their matrix.
#[derive(Debug, Clone)]
pub(crate) struct Layout {
    pub node: MlpRanges,
    pub edge: MlpRanges,
    pub layers: Vec<MlpRanges>,
    pub head: MlpRanges,
    pub total: usize,
}

fn mlp_ranges(cursor: &mut usize, input: usize, mid: usize, out: usize) -> MlpRanges {
    let mut take = |len: usize| {
        let start = *cursor;
        *cursor += len;
        start..*cursor
    };
    MlpRanges {
        input,
        mid,
        out,
        w1: take(mid * input),
        b1: take(mid),
        w2: take(out * mid),
        b2: take(out),
    }
}

pub(crate) fn layout(hyper: &ScoreNetHyper) -> Layout {
    let h = hyper.hidden_dim;
    let mut cursor = 0;
    let node = mlp_ranges(&mut cursor, hyper.node_input_dim(), h, h);
    let edge = mlp_ranges(&mut cursor, hyper.edge_input_dim(), h, h);
    let layers = (0..hyper.num_layers)
        .map(|_| mlp_ranges(&mut cursor, h, h, h))
        .collect();
    let head = mlp_ranges(&mut cursor, 3 * h, h, 1);
    Layout {
        node,
        edge,
        layers,
        head,
        total: cursor,
    }
}

/// Number of scalars a parameter vector for `hyper` holds.
pub fn param_count(hyper: &ScoreNetHyper) -> usize {
    layout(hyper).total
}

/// All learnable weights, flattened. Round-trips through
/// [`ScoreNetParams::values`] / [`ScoreNetParams::from_values`] bit-exactly.
#[derive(Debug, Clone, PartialEq)]
pub struct ScoreNetParams {
    hyper: ScoreNetHyper,
    values: Vec<f64>,
}

impl ScoreNetParams {
    pub fn from_values(hyper: ScoreNetHyper, values: Vec<f64>) -> Result<Self, ScoreNetError> {
        hyper.validate()?;
        let expected = param_count(&hyper);
        if values.len() != expected {
            return Err(ScoreNetError::BadParamLength {
                expected,
                got: values.len(),
            });
        }
        Ok(ScoreNetParams { hyper, values })
    }

    pub fn zeros(hyper: ScoreNetHyper) -> Result<Self, ScoreNetError> {
        hyper.validate()?;
        let n = param_count(&hyper);
        Ok(ScoreNetParams {
            hyper,
            values: vec![0.0; n],
        })
    }

    pub fn hyper(&self) -> &ScoreNetHyper {
        &self.hyper
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub(crate) fn values_mut(&mut self) -> &mut [f64] {
        &mut self.values
    }
}

/// He-style initialization: each weight matrix is uniform on
/// `[-sqrt(6/fan_in), sqrt(6/fan_in)]`, biases are zero. Deterministic in
/// `seed`; draws happen in flat layout order.
pub fn init_params(hyper: &ScoreNetHyper, seed: u64) -> Result<ScoreNetParams, ScoreNetError> {
    hyper.validate()?;
    let lay = layout(hyper);
    let mut values = vec![0.0; lay.total];
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut fill = |range: Range<usize>, fan_in: usize, values: &mut Vec<f64>| {
        let bound = (6.0 / fan_in as f64).sqrt();
        for v in &mut values[range] {
            *v = rng.random_range(-bound..bound);
        }
    };
    for mlp in [&lay.node, &lay.edge]
        .into_iter()
        .chain(lay.layers.iter())
        .chain(std::iter::once(&lay.head))
    {
        fill(mlp.w1.clone(), mlp.input, &mut values);
        fill(mlp.w2.clone(), mlp.mid, &mut values);
    }
    Ok(ScoreNetParams {
        hyper: *hyper,
        values,
    })
}

fn check_inputs(
    g: &MolecularGraph,
    d: &DistanceVector,
    hyper: &ScoreNetHyper,
) -> Result<(), ScoreNetError> {
    if d.len() != g.num_edges() {
        return Err(ScoreNetError::SizeMismatch {
            expected: g.num_edges(),
            got: d.len(),
        });
    }
    for &z in g.atoms() {
        if z == 0 || z as usize > hyper.max_atomic_number {
            return Err(ScoreNetError::UnknownAtomType {
                charge: z,
                max: hyper.max_atomic_number,
            });
        }
    }
    Ok(())
}

/// `out[r] = b[r] + sum_c w[r, c] * x[c]` over the row-major `w` slice.
fn affine(w: &[f64], b: &[f64], x: &[f64], out_dim: usize) -> Vec<f64> {
    let cols = x.len();
    (0..out_dim)
        .map(|r| {
            let row = &w[r * cols..(r + 1) * cols];
            b[r] + row.iter().zip(x).map(|(wi, xi)| wi * xi).sum::<f64>()
        })
        .collect()
}

/// Two-layer perceptron with ReLU between the layers.
fn mlp2(p: &[f64], r: &MlpRanges, x: &[f64]) -> Vec<f64> {
    debug_assert_eq!(x.len(), r.input);
    let mut hidden = affine(&p[r.w1.clone()], &p[r.b1.clone()], x, r.mid);
    for h in &mut hidden {
        *h = h.max(0.0);
    }
    affine(&p[r.w2.clone()], &p[r.b2.clone()], &hidden, r.out)
}

/// One-hot column selection: `w1[:, col] + b1`, then ReLU, then the second
/// layer. Bitwise identical to `mlp2` on a one-hot input.
fn mlp2_onehot(p: &[f64], r: &MlpRanges, col: usize) -> Vec<f64> {
    let hidden: Vec<f64> = (0..r.mid)
        .map(|row| (p[r.w1.start + row * r.input + col] + p[r.b1.start + row]).max(0.0))
        .collect();
    affine(&p[r.w2.clone()], &p[r.b2.clone()], &hidden, r.out)
}

/// Initial node and edge embeddings: `h_i = MLP(onehot(Z_i))` and
/// `h_e = MLP(onehot(type(e)) || d_e)`.
pub fn embed(
    g: &MolecularGraph,
    d: &DistanceVector,
    params: &ScoreNetParams,
) -> Result<(Vec<Vec<f64>>, Vec<Vec<f64>>), ScoreNetError> {
    let hyper = &params.hyper;
    check_inputs(g, d, hyper)?;
    let lay = layout(hyper);
    let p = params.values();

    let node_h = g
        .atoms()
        .iter()
        .map(|&z| mlp2_onehot(p, &lay.node, z as usize - 1))
        .collect();

    let mut x = vec![0.0; hyper.edge_input_dim()];
    let edge_h = g
        .edges()
        .iter()
        .zip(&d.values)
        .map(|(e, &dist)| {
            x.fill(0.0);
            x[e.kind.index()] = 1.0;
            x[hyper.num_edge_types] = dist;
            mlp2(p, &lay.edge, &x)
        })
        .collect();

    Ok((node_h, edge_h))
}

/// `num_layers` rounds of `h_i <- MLP(h_i + sum_j ReLU(h_j + h_e_ij))` over
/// the extended edge set; every undirected edge feeds both endpoints.
pub fn message_pass(
    g: &MolecularGraph,
    node_h: &[Vec<f64>],
    edge_h: &[Vec<f64>],
    params: &ScoreNetParams,
) -> Vec<Vec<f64>> {
    let hyper = &params.hyper;
    let h = hyper.hidden_dim;
    let lay = layout(hyper);
    let p = params.values();
    let adj = g.adjacency();

    let mut current = node_h.to_vec();
    for lr in &lay.layers {
        let next: Vec<Vec<f64>> = (0..g.num_atoms())
            .map(|i| {
                let mut acc = current[i].clone();
                for &(j, k) in &adj[i] {
                    for c in 0..h {
                        acc[c] += (current[j][c] + edge_h[k][c]).max(0.0);
                    }
                }
                mlp2(p, lr, &acc)
            })
            .collect();
        current = next;
    }
    current
}

/// Unconditional per-edge scores `s(d)_ij = MLP(h_i || h_j || h_e)`.
pub fn unconditional_edge_scores(
    g: &MolecularGraph,
    d: &DistanceVector,
    params: &ScoreNetParams,
) -> Result<Vec<f64>, ScoreNetError> {
    let (node_h, edge_h) = embed(g, d, params)?;
    let final_h = message_pass(g, &node_h, &edge_h, params);
    let lay = layout(&params.hyper);
    let p = params.values();
    let h = params.hyper.hidden_dim;

    let mut cat = vec![0.0; 3 * h];
    Ok(g.edges()
        .iter()
        .enumerate()
        .map(|(k, e)| {
            cat[..h].copy_from_slice(&final_h[e.i]);
            cat[h..2 * h].copy_from_slice(&final_h[e.j]);
            cat[2 * h..].copy_from_slice(&edge_h[k]);
            mlp2(p, &lay.head, &cat)[0]
        })
        .collect())
}

/// Noise-conditional per-edge scores `s(d, sigma) = s(d) / sigma`.
pub fn edge_score(
    g: &MolecularGraph,
    d: &DistanceVector,
    sigma: f64,
    params: &ScoreNetParams,
) -> Result<Vec<f64>, ScoreNetError> {
    if !(sigma > 0.0) {
        return Err(ScoreNetError::NonPositiveSigma { sigma });
    }
    let mut scores = unconditional_edge_scores(g, d, params)?;
    for s in &mut scores {
        *s /= sigma;
    }
    Ok(scores)
}

// ---------------------------------------------------------------------------
// Tape forward: the same network rebuilt on the autodiff tape. Training
// differentiates this with respect to the lifted parameters; tests use it as
// the reverse-mode oracle for the hand-derived chain rule.
// ---------------------------------------------------------------------------

/// Lifts the flat parameter vector onto `tape`, in layout order.
pub fn lift_params<'t>(tape: &'t Tape, params: &ScoreNetParams) -> Vec<Var<'t>> {
    params.values().iter().map(|&v| tape.lift(v)).collect()
}

fn affine_on_tape<'t>(
    tape: &'t Tape,
    theta: &[Var<'t>],
    w: &Range<usize>,
    b: &Range<usize>,
    x: &[Var<'t>],
    out_dim: usize,
) -> Vec<Var<'t>> {
    let cols = x.len();
    (0..out_dim)
        .map(|r| {
            let terms: Vec<Var<'t>> = (0..cols)
                .map(|c| theta[w.start + r * cols + c] * x[c])
                .collect();
            theta[b.start + r] + sum(tape, &terms).expect("single tape")
        })
        .collect()
}

fn mlp2_on_tape<'t>(
    tape: &'t Tape,
    theta: &[Var<'t>],
    r: &MlpRanges,
    x: &[Var<'t>],
) -> Vec<Var<'t>> {
    let hidden: Vec<Var<'t>> = affine_on_tape(tape, theta, &r.w1, &r.b1, x, r.mid)
        .into_iter()
        .map(|v| v.relu())
        .collect();
    affine_on_tape(tape, theta, &r.w2, &r.b2, &hidden, r.out)
}

fn mlp2_onehot_on_tape<'t>(
    tape: &'t Tape,
    theta: &[Var<'t>],
    r: &MlpRanges,
    col: usize,
) -> Vec<Var<'t>> {
    let hidden: Vec<Var<'t>> = (0..r.mid)
        .map(|row| (theta[r.w1.start + row * r.input + col] + theta[r.b1.start + row]).relu())
        .collect();
    affine_on_tape(tape, theta, &r.w2, &r.b2, &hidden, r.out)
}

/// Tape twin of [`unconditional_edge_scores`]: distances arrive as tape
/// variables, parameters as the vars produced by [`lift_params`].
pub fn unconditional_scores_on_tape<'t>(
    tape: &'t Tape,
    g: &MolecularGraph,
    d_vars: &[Var<'t>],
    theta: &[Var<'t>],
    hyper: &ScoreNetHyper,
) -> Result<Vec<Var<'t>>, ScoreNetError> {
    if d_vars.len() != g.num_edges() {
        return Err(ScoreNetError::SizeMismatch {
            expected: g.num_edges(),
            got: d_vars.len(),
        });
    }
    for &z in g.atoms() {
        if z == 0 || z as usize > hyper.max_atomic_number {
            return Err(ScoreNetError::UnknownAtomType {
                charge: z,
                max: hyper.max_atomic_number,
            });
        }
    }
    let lay = layout(hyper);
    let h = hyper.hidden_dim;

    let node_h: Vec<Vec<Var<'t>>> = g
        .atoms()
        .iter()
        .map(|&z| mlp2_onehot_on_tape(tape, theta, &lay.node, z as usize - 1))
        .collect();

    // Edge input is one-hot(type) || d, so w1 * x reduces to the type column
    // plus d times the distance column.
    let edge_h: Vec<Vec<Var<'t>>> = g
        .edges()
        .iter()
        .zip(d_vars)
        .map(|(e, &dv)| {
            let r = &lay.edge;
            let hidden: Vec<Var<'t>> = (0..r.mid)
                .map(|row| {
                    let w_type = theta[r.w1.start + row * r.input + e.kind.index()];
                    let w_dist = theta[r.w1.start + row * r.input + hyper.num_edge_types];
                    (w_type + w_dist * dv + theta[r.b1.start + row]).relu()
                })
                .collect();
            affine_on_tape(tape, theta, &r.w2, &r.b2, &hidden, r.out)
        })
        .collect();

    let adj = g.adjacency();
    let mut current = node_h;
    for lr in &lay.layers {
        let next: Vec<Vec<Var<'t>>> = (0..g.num_atoms())
            .map(|i| {
                let mut acc = current[i].clone();
                for &(j, k) in &adj[i] {
                    for c in 0..h {
                        acc[c] = acc[c] + (current[j][c] + edge_h[k][c]).relu();
                    }
                }
                mlp2_on_tape(tape, theta, lr, &acc)
            })
            .collect();
        current = next;
    }

    Ok(g.edges()
        .iter()
        .enumerate()
        .map(|(k, e)| {
            let mut cat = Vec::with_capacity(3 * h);
            cat.extend_from_slice(&current[e.i]);
            cat.extend_from_slice(&current[e.j]);
            cat.extend_from_slice(&edge_h[k]);
            mlp2_on_tape(tape, theta, &lay.head, &cat)[0]
        })
        .collect())
}

#[cfg(test)]
mod tests;
