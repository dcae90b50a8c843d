//! Extended-XYZ conformation files.
//!
//! Per frame: line 1 is the atom count, line 2 a comment of the form
//! `mol=<index> seed=<seed> frame=<k>`, then one `symbol x y z` line per
//! atom with six decimal places. Frames are concatenated; a zero-frame file
//! is empty.

use std::fmt::Write as _;
use std::path::Path;

use gradconf_core::geom::Vec3;
use gradconf_core::molgraph::Conformation;

use crate::error::CliError;

const SYMBOLS: [&str; 36] = [
    "H", "He", "Li", "Be", "B", "C", "N", "O", "F", "Ne", "Na", "Mg", "Al", "Si", "P", "S", "Cl",
    "Ar", "K", "Ca", "Sc", "Ti", "V", "Cr", "Mn", "Fe", "Co", "Ni", "Cu", "Zn", "Ga", "Ge", "As",
    "Se", "Br", "Kr",
];

pub fn element_symbol(z: u32) -> Option<&'static str> {
    SYMBOLS.get(z as usize - 1).copied()
}

pub fn element_number(symbol: &str) -> Option<u32> {
    SYMBOLS
        .iter()
        .position(|&s| s.eq_ignore_ascii_case(symbol))
        .map(|i| i as u32 + 1)
}

#[derive(Debug, Clone, PartialEq)]
pub struct Frame {
    pub comment: String,
    pub charges: Vec<u32>,
    pub conformation: Conformation,
}

impl Frame {
    /// Molecule index parsed from a `mol=<k>` token in the comment.
    pub fn molecule_index(&self) -> Option<usize> {
        self.comment
            .split_whitespace()
            .find_map(|tok| tok.strip_prefix("mol="))
            .and_then(|v| v.parse().ok())
    }
}

pub fn frame_comment(molecule: usize, seed: u64, frame: usize) -> String {
    format!("mol={molecule} seed={seed} frame={frame}")
}

pub fn encode(frames: &[Frame]) -> Result<String, CliError> {
    let mut out = String::new();
    for frame in frames {
        writeln!(out, "{}", frame.charges.len()).expect("string write");
        writeln!(out, "{}", frame.comment).expect("string write");
        for (&z, p) in frame.charges.iter().zip(&frame.conformation.coords) {
            let symbol = element_symbol(z).ok_or_else(|| {
                CliError::Compute(format!("no element symbol for nuclear charge {z}"))
            })?;
            writeln!(out, "{} {:.6} {:.6} {:.6}", symbol, p[0], p[1], p[2])
                .expect("string write");
        }
    }
    Ok(out)
}

pub fn write_frames(path: &Path, frames: &[Frame]) -> Result<(), CliError> {
    let text = encode(frames)?;
    std::fs::write(path, text).map_err(|source| CliError::Write {
        path: path.to_path_buf(),
        source,
    })
}

pub fn read_frames(path: &Path) -> Result<Vec<Frame>, CliError> {
    if !path.exists() {
        return Err(CliError::MissingInput {
            path: path.to_path_buf(),
        });
    }
    let text = std::fs::read_to_string(path).map_err(|source| CliError::Io {
        path: path.to_path_buf(),
        source,
    })?;
    parse(&text, path)
}

pub fn parse(text: &str, path: &Path) -> Result<Vec<Frame>, CliError> {
    let bad = |line: usize, message: String| CliError::Parse {
        path: path.to_path_buf(),
        line,
        message,
    };
    let lines: Vec<&str> = text.lines().collect();
    let mut frames = Vec::new();
    let mut cursor = 0;
    while cursor < lines.len() {
        if lines[cursor].trim().is_empty() {
            cursor += 1;
            continue;
        }
        let count: usize = lines[cursor]
            .trim()
            .parse()
            .map_err(|_| bad(cursor + 1, format!("expected atom count, got {:?}", lines[cursor])))?;
        if cursor + 1 >= lines.len() {
            return Err(bad(cursor + 1, "missing comment line".to_string()));
        }
        let comment = lines[cursor + 1].to_string();
        let mut charges = Vec::with_capacity(count);
        let mut coords: Vec<Vec3> = Vec::with_capacity(count);
        for k in 0..count {
            let line_no = cursor + 2 + k;
            let line = lines
                .get(line_no)
                .ok_or_else(|| bad(line_no + 1, "truncated frame".to_string()))?;
            let mut parts = line.split_whitespace();
            let symbol = parts
                .next()
                .ok_or_else(|| bad(line_no + 1, "empty atom line".to_string()))?;
            let z = element_number(symbol)
                .ok_or_else(|| bad(line_no + 1, format!("unknown element {symbol:?}")))?;
            let mut coord = [0.0; 3];
            for c in coord.iter_mut() {
                let tok = parts
                    .next()
                    .ok_or_else(|| bad(line_no + 1, "missing coordinate".to_string()))?;
                *c = tok
                    .parse()
                    .map_err(|_| bad(line_no + 1, format!("bad coordinate {tok:?}")))?;
            }
            charges.push(z);
            coords.push(coord);
        }
        frames.push(Frame {
            comment,
            charges,
            conformation: Conformation::new(coords),
        });
        cursor += 2 + count;
    }
    Ok(frames)
}
