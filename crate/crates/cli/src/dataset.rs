//! Line-delimited dataset files: one JSON record per molecule, UTF-8.
//!
//! ```json
//! {"version":1,"atoms":[6,6,6],
//!  "edges":[{"i":0,"j":1,"type":"single"},{"i":0,"j":2,"type":"virtual_2hop"}],
//!  "conformations":[[x0,y0,z0,x1,y1,z1,...]]}
//! ```
//!
//! `atoms` holds nuclear charges; `edges` lists each undirected edge once
//! with a type drawn from `single | double | triple | aromatic |
//! virtual_2hop | virtual_3hop`; each conformation is a flat coordinate
//! array of length `3 * atoms`. Virtual edges are checked against bond-path
//! distances on load, so a dataset cannot smuggle in a mislabeled graph.

use std::io::{BufRead, BufReader, Write};
use std::path::Path;

use gradconf_core::molgraph::{self, BondKind, Conformation, MolecularGraph};
use serde::{Deserialize, Serialize};

use crate::error::CliError;

pub const DATASET_VERSION: u32 = 1;

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct EdgeRecord {
    pub i: usize,
    pub j: usize,
    #[serde(rename = "type")]
    pub kind: String,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct DatasetRecord {
    pub version: u32,
    pub atoms: Vec<u32>,
    pub edges: Vec<EdgeRecord>,
    pub conformations: Vec<Vec<f64>>,
}

fn kind_to_str(kind: BondKind) -> &'static str {
    match kind {
        BondKind::Single => "single",
        BondKind::Double => "double",
        BondKind::Triple => "triple",
        BondKind::Aromatic => "aromatic",
        BondKind::Virtual2Hop => "virtual_2hop",
        BondKind::Virtual3Hop => "virtual_3hop",
    }
}

fn kind_from_str(s: &str) -> Option<BondKind> {
    Some(match s {
        "single" => BondKind::Single,
        "double" => BondKind::Double,
        "triple" => BondKind::Triple,
        "aromatic" => BondKind::Aromatic,
        "virtual_2hop" => BondKind::Virtual2Hop,
        "virtual_3hop" => BondKind::Virtual3Hop,
        _ => return None,
    })
}

impl DatasetRecord {
    pub fn from_molecule(graph: &MolecularGraph, conformations: &[&Conformation]) -> Self {
        DatasetRecord {
            version: DATASET_VERSION,
            atoms: graph.atoms().to_vec(),
            edges: graph
                .edges()
                .iter()
                .map(|e| EdgeRecord {
                    i: e.i,
                    j: e.j,
                    kind: kind_to_str(e.kind).to_string(),
                })
                .collect(),
            conformations: conformations
                .iter()
                .map(|c| c.coords.iter().flatten().copied().collect())
                .collect(),
        }
    }

    /// Rebuilds the graph and conformations; `line` only feeds error
    /// messages.
    pub fn into_molecule(
        self,
        path: &Path,
        line: usize,
    ) -> Result<(MolecularGraph, Vec<Conformation>), CliError> {
        let bad = |message: String| CliError::Parse {
            path: path.to_path_buf(),
            line,
            message,
        };
        if self.version != DATASET_VERSION {
            return Err(bad(format!(
                "unsupported record version {} (expected {DATASET_VERSION})",
                self.version
            )));
        }
        let edges: Vec<(usize, usize, BondKind)> = self
            .edges
            .iter()
            .map(|e| {
                kind_from_str(&e.kind)
                    .map(|k| (e.i, e.j, k))
                    .ok_or_else(|| bad(format!("unknown edge type {:?}", e.kind)))
            })
            .collect::<Result<_, _>>()?;
        let graph =
            molgraph::from_typed_edges(&self.atoms, &edges).map_err(|e| bad(e.to_string()))?;
        let conformations = self
            .conformations
            .iter()
            .map(|flat| {
                if flat.len() != 3 * self.atoms.len() {
                    return Err(bad(format!(
                        "conformation has {} coordinates, expected {}",
                        flat.len(),
                        3 * self.atoms.len()
                    )));
                }
                if !flat.iter().all(|v| v.is_finite()) {
                    return Err(bad("non-finite coordinate".to_string()));
                }
                Ok(Conformation::new(
                    flat.chunks_exact(3).map(|c| [c[0], c[1], c[2]]).collect(),
                ))
            })
            .collect::<Result<_, _>>()?;
        Ok((graph, conformations))
    }
}

pub fn write_dataset(path: &Path, records: &[DatasetRecord]) -> Result<(), CliError> {
    let mut file = std::fs::File::create(path).map_err(|source| CliError::Write {
        path: path.to_path_buf(),
        source,
    })?;
    for record in records {
        let line = serde_json::to_string(record).expect("record serializes");
        writeln!(file, "{line}").map_err(|source| CliError::Write {
            path: path.to_path_buf(),
            source,
        })?;
    }
    Ok(())
}

/// Reads all molecules. Blank lines are ignored; any malformed line fails
/// with its 1-based line number.
pub fn read_dataset(path: &Path) -> Result<Vec<(MolecularGraph, Vec<Conformation>)>, CliError> {
    if !path.exists() {
        return Err(CliError::MissingInput {
            path: path.to_path_buf(),
        });
    }
    let file = std::fs::File::open(path).map_err(|source| CliError::Io {
        path: path.to_path_buf(),
        source,
    })?;
    let reader = BufReader::new(file);
    let mut out = Vec::new();
    for (idx, line) in reader.lines().enumerate() {
        let line_no = idx + 1;
        let line = line.map_err(|source| CliError::Io {
            path: path.to_path_buf(),
            source,
        })?;
        if line.trim().is_empty() {
            continue;
        }
        let record: DatasetRecord =
            serde_json::from_str(&line).map_err(|e| CliError::Parse {
                path: path.to_path_buf(),
                line: line_no,
                message: e.to_string(),
            })?;
        out.push(record.into_molecule(path, line_no)?);
    }
    Ok(out)
}
