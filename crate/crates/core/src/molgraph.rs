//! Molecular graph data model, virtual-bond extension, and the map from
//! coordinates to interatomic distances.
//!
//! Graphs hold nuclear charges at the nodes and typed undirected edges. The
//! bonded edges alone underdetermine a 3D structure, so [`extend_graph`] adds
//! a virtual edge for every node pair at bond-path distance exactly 2 (fixing
//! angles) or exactly 3 (fixing dihedrals). Edges are stored once per
//! unordered pair and kept sorted by `(i, j)`, which gives distance vectors a
//! canonical component order.

use std::collections::VecDeque;

use thiserror::Error;

use crate::geom::{self, Vec3};

/// Type of an undirected edge: a real bond order or a virtual 2-/3-hop bond.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum BondKind {
    Single,
    Double,
    Triple,
    Aromatic,
    Virtual2Hop,
    Virtual3Hop,
}

impl BondKind {
    pub fn is_virtual(self) -> bool {
        matches!(self, BondKind::Virtual2Hop | BondKind::Virtual3Hop)
    }

    /// Stable index used for one-hot edge-type features (0..6).
    pub fn index(self) -> usize {
        match self {
            BondKind::Single => 0,
            BondKind::Double => 1,
            BondKind::Triple => 2,
            BondKind::Aromatic => 3,
            BondKind::Virtual2Hop => 4,
            BondKind::Virtual3Hop => 5,
        }
    }
}

/// Number of distinct [`BondKind`] values.
pub const NUM_BOND_KINDS: usize = 6;

/// Undirected edge with `i < j`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Edge {
    pub i: usize,
    pub j: usize,
    pub kind: BondKind,
}

#[derive(Debug, Error, PartialEq)]
pub enum GraphError {
    #[error("node index {index} out of range for {num_atoms} atoms")]
    IndexOutOfRange { index: usize, num_atoms: usize },
    #[error("duplicate bond between atoms {i} and {j}")]
    DuplicateBond { i: usize, j: usize },
    #[error("self-loop on atom {index}")]
    SelfLoop { index: usize },
    #[error("graph already contains virtual edges")]
    AlreadyExtended,
    #[error("bond list contains virtual kind at ({i}, {j}); virtual edges come from extend_graph")]
    VirtualBondInInput { i: usize, j: usize },
    #[error("virtual edge ({i}, {j}) marked {kind:?} but bond-path distance is {actual:?}")]
    BadVirtualEdge {
        i: usize,
        j: usize,
        kind: BondKind,
        actual: Option<usize>,
    },
    #[error("atom with nuclear charge 0")]
    ZeroCharge,
    #[error("size mismatch: expected {expected}, got {got}")]
    SizeMismatch { expected: usize, got: usize },
}

/// Undirected molecular graph: nuclear charges plus typed edges in canonical
/// `(i, j)`-sorted order. Immutable after construction.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct MolecularGraph {
    atoms: Vec<u32>,
    edges: Vec<Edge>,
    num_real_bonds: usize,
}

impl MolecularGraph {
    pub fn atoms(&self) -> &[u32] {
        &self.atoms
    }

    pub fn edges(&self) -> &[Edge] {
        &self.edges
    }

    pub fn num_atoms(&self) -> usize {
        self.atoms.len()
    }

    pub fn num_edges(&self) -> usize {
        self.edges.len()
    }

    pub fn num_real_bonds(&self) -> usize {
        self.num_real_bonds
    }

    pub fn is_extended(&self) -> bool {
        self.num_real_bonds < self.edges.len()
    }

    /// True for atoms that are not hydrogen.
    pub fn heavy_mask(&self) -> Vec<bool> {
        self.atoms.iter().map(|&z| z != 1).collect()
    }

    /// Per-node list of `(neighbor, edge index)` over all (real and virtual)
    /// edges, neighbors in ascending edge order.
    pub fn adjacency(&self) -> Vec<Vec<(usize, usize)>> {
        let mut adj = vec![Vec::new(); self.atoms.len()];
        for (k, e) in self.edges.iter().enumerate() {
            adj[e.i].push((e.j, k));
            adj[e.j].push((e.i, k));
        }
        adj
    }

    /// Shortest path lengths from `src` over real bonds only, capped at `cap`.
    fn bond_distances(&self, src: usize, cap: usize) -> Vec<Option<usize>> {
        let mut adj = vec![Vec::new(); self.atoms.len()];
        for e in self.edges.iter().filter(|e| !e.kind.is_virtual()) {
            adj[e.i].push(e.j);
            adj[e.j].push(e.i);
        }
        let mut dist = vec![None; self.atoms.len()];
        dist[src] = Some(0);
        let mut queue = VecDeque::from([src]);
        while let Some(u) = queue.pop_front() {
            let du = dist[u].unwrap();
            if du == cap {
                continue;
            }
            for &v in &adj[u] {
                if dist[v].is_none() {
                    dist[v] = Some(du + 1);
                    queue.push_back(v);
                }
            }
        }
        dist
    }
}

/// Per-atom 3D coordinates (Angstroms), ordered like the paired graph's nodes.
#[derive(Debug, Clone, PartialEq)]
pub struct Conformation {
    pub coords: Vec<Vec3>,
}

impl Conformation {
    pub fn new(coords: Vec<Vec3>) -> Self {
        Self { coords }
    }

    pub fn num_atoms(&self) -> usize {
        self.coords.len()
    }
}

/// Per-edge scalars in the graph's canonical edge order. Produced by
/// [`compute_distances`] these are Euclidean distances (>= 0); Gaussian
/// perturbation may push components negative, which is intentional.
#[derive(Debug, Clone, PartialEq)]
pub struct DistanceVector {
    pub values: Vec<f64>,
}

impl DistanceVector {
    pub fn new(values: Vec<f64>) -> Self {
        Self { values }
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }
}

fn validate_and_sort(
    num_atoms: usize,
    raw: &[(usize, usize, BondKind)],
) -> Result<Vec<Edge>, GraphError> {
    let mut edges = Vec::with_capacity(raw.len());
    for &(a, b, kind) in raw {
        if a >= num_atoms {
            return Err(GraphError::IndexOutOfRange {
                index: a,
                num_atoms,
            });
        }
        if b >= num_atoms {
            return Err(GraphError::IndexOutOfRange {
                index: b,
                num_atoms,
            });
        }
        if a == b {
            return Err(GraphError::SelfLoop { index: a });
        }
        let (i, j) = if a < b { (a, b) } else { (b, a) };
        edges.push(Edge { i, j, kind });
    }
    edges.sort_by_key(|e| (e.i, e.j));
    for w in edges.windows(2) {
        if w[0].i == w[1].i && w[0].j == w[1].j {
            return Err(GraphError::DuplicateBond {
                i: w[0].i,
                j: w[0].j,
            });
        }
    }
    Ok(edges)
}

/// Builds a graph from real bonds only. Edges end up in canonical order,
/// regardless of the order of the input list.
pub fn build_graph(
    atoms: &[u32],
    bonds: &[(usize, usize, BondKind)],
) -> Result<MolecularGraph, GraphError> {
    if atoms.contains(&0) {
        return Err(GraphError::ZeroCharge);
    }
    for &(i, j, kind) in bonds {
        if kind.is_virtual() {
            return Err(GraphError::VirtualBondInInput { i, j });
        }
    }
    let edges = validate_and_sort(atoms.len(), bonds)?;
    Ok(MolecularGraph {
        atoms: atoms.to_vec(),
        num_real_bonds: edges.len(),
        edges,
    })
}

/// Reconstructs a graph from a full typed edge list (possibly already
/// extended), checking that every virtual edge sits at the bond-path distance
/// its kind claims. Used when graphs are read back from files.
pub fn from_typed_edges(
    atoms: &[u32],
    edges: &[(usize, usize, BondKind)],
) -> Result<MolecularGraph, GraphError> {
    if atoms.contains(&0) {
        return Err(GraphError::ZeroCharge);
    }
    let sorted = validate_and_sort(atoms.len(), edges)?;
    let num_real_bonds = sorted.iter().filter(|e| !e.kind.is_virtual()).count();
    let graph = MolecularGraph {
        atoms: atoms.to_vec(),
        edges: sorted,
        num_real_bonds,
    };
    for e in graph.edges.iter().filter(|e| e.kind.is_virtual()) {
        let want = match e.kind {
            BondKind::Virtual2Hop => 2,
            BondKind::Virtual3Hop => 3,
            _ => unreachable!(),
        };
        let actual = graph.bond_distances(e.i, 3)[e.j];
        if actual != Some(want) {
            return Err(GraphError::BadVirtualEdge {
                i: e.i,
                j: e.j,
                kind: e.kind,
                actual,
            });
        }
    }
    Ok(graph)
}

/// Adds one virtual edge per node pair at bond-path distance exactly 2
/// (`Virtual2Hop`) or exactly 3 (`Virtual3Hop`). Real edges are unchanged.
/// Rejects graphs that already contain virtual edges.
pub fn extend_graph(g: &MolecularGraph) -> Result<MolecularGraph, GraphError> {
    if g.is_extended() {
        return Err(GraphError::AlreadyExtended);
    }
    let n = g.num_atoms();
    let mut edges = g.edges.clone();
    for i in 0..n {
        let dist = g.bond_distances(i, 3);
        for (j, d) in dist.iter().enumerate().skip(i + 1) {
            match d {
                Some(2) => edges.push(Edge {
                    i,
                    j,
                    kind: BondKind::Virtual2Hop,
                }),
                Some(3) => edges.push(Edge {
                    i,
                    j,
                    kind: BondKind::Virtual3Hop,
                }),
                _ => {}
            }
        }
    }
    edges.sort_by_key(|e| (e.i, e.j));
    Ok(MolecularGraph {
        atoms: g.atoms.clone(),
        num_real_bonds: g.num_real_bonds,
        edges,
    })
}

/// Euclidean distance of each edge's endpoints, in canonical edge order.
pub fn compute_distances(
    g: &MolecularGraph,
    r: &Conformation,
) -> Result<DistanceVector, GraphError> {
    if r.num_atoms() != g.num_atoms() {
        return Err(GraphError::SizeMismatch {
            expected: g.num_atoms(),
            got: r.num_atoms(),
        });
    }
    Ok(DistanceVector::new(
        g.edges
            .iter()
            .map(|e| geom::distance(r.coords[e.i], r.coords[e.j]))
            .collect(),
    ))
}
