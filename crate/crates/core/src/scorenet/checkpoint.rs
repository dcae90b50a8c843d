//! On-disk parameter checkpoints.
//!
//! Byte layout (all integers little-endian):
//!
//! | offset | size | field                  |
//! |--------|------|------------------------|
//! | 0      | 8    | magic `b"GRADCONF"`    |
//! | 8      | 4    | format version (`1`)   |
//! | 12     | 4    | num_layers (u32)       |
//! | 16     | 4    | hidden_dim (u32)       |
//! | 20     | 4    | max_atomic_number (u32)|
//! | 24     | 4    | num_edge_types (u32)   |
//! | 28     | 8    | param_count (u64)      |
//! | 36     | 8*n  | parameters, f64 LE, flat layout order |
//!
//! Floats are written bit for bit, so a write/read cycle reproduces the
//! parameter vector exactly.

use std::fs;
use std::io::{self, Read, Write};
use std::path::Path;

use thiserror::Error;

use super::{param_count, ScoreNetHyper, ScoreNetParams};

pub const MAGIC: [u8; 8] = *b"GRADCONF";
pub const VERSION: u32 = 1;

#[derive(Debug, Error)]
pub enum CheckpointError {
    #[error("i/o error: {0}")]
    Io(#[from] io::Error),
    #[error("not a checkpoint file (bad magic)")]
    BadMagic,
    #[error("unsupported checkpoint version {0}")]
    UnsupportedVersion(u32),
    #[error("checkpoint declares {declared} parameters but the hyperparameters need {expected}")]
    CountMismatch { declared: u64, expected: usize },
    #[error("invalid hyperparameters in header: {0}")]
    Hyper(#[from] super::ScoreNetError),
}

pub fn encode(params: &ScoreNetParams) -> Vec<u8> {
    let h = params.hyper();
    let values = params.values();
    let mut out = Vec::with_capacity(36 + 8 * values.len());
    out.extend_from_slice(&MAGIC);
    out.extend_from_slice(&VERSION.to_le_bytes());
    out.extend_from_slice(&(h.num_layers as u32).to_le_bytes());
    out.extend_from_slice(&(h.hidden_dim as u32).to_le_bytes());
    out.extend_from_slice(&(h.max_atomic_number as u32).to_le_bytes());
    out.extend_from_slice(&(h.num_edge_types as u32).to_le_bytes());
    out.extend_from_slice(&(values.len() as u64).to_le_bytes());
    for v in values {
        out.extend_from_slice(&v.to_le_bytes());
    }
    out
}

pub fn decode(bytes: &[u8]) -> Result<ScoreNetParams, CheckpointError> {
    let mut cursor = io::Cursor::new(bytes);
    let mut magic = [0u8; 8];
    cursor.read_exact(&mut magic)?;
    if magic != MAGIC {
        return Err(CheckpointError::BadMagic);
    }
    let mut u32_buf = [0u8; 4];
    let mut read_u32 = |cursor: &mut io::Cursor<&[u8]>| -> io::Result<u32> {
        cursor.read_exact(&mut u32_buf)?;
        Ok(u32::from_le_bytes(u32_buf))
    };
    let version = read_u32(&mut cursor)?;
    if version != VERSION {
        return Err(CheckpointError::UnsupportedVersion(version));
    }
    let hyper = ScoreNetHyper {
        num_layers: read_u32(&mut cursor)? as usize,
        hidden_dim: read_u32(&mut cursor)? as usize,
        max_atomic_number: read_u32(&mut cursor)? as usize,
        num_edge_types: read_u32(&mut cursor)? as usize,
    };
    hyper.validate()?;
    let mut u64_buf = [0u8; 8];
    cursor.read_exact(&mut u64_buf)?;
    let declared = u64::from_le_bytes(u64_buf);
    let expected = param_count(&hyper);
    if declared as usize != expected {
        return Err(CheckpointError::CountMismatch { declared, expected });
    }
    let mut values = Vec::with_capacity(expected);
    let mut f64_buf = [0u8; 8];
    for _ in 0..expected {
        cursor.read_exact(&mut f64_buf)?;
        values.push(f64::from_le_bytes(f64_buf));
    }
    Ok(ScoreNetParams::from_values(hyper, values)?)
}

/// Writes atomically: the bytes land in a sibling temp file which is then
/// renamed over the destination.
pub fn write(path: &Path, params: &ScoreNetParams) -> Result<(), CheckpointError> {
    let tmp = path.with_extension("tmp");
    {
        let mut file = fs::File::create(&tmp)?;
        file.write_all(&encode(params))?;
        file.sync_all()?;
    }
    fs::rename(&tmp, path)?;
    Ok(())
}

pub fn read(path: &Path) -> Result<ScoreNetParams, CheckpointError> {
    let bytes = fs::read(path)?;
    decode(&bytes)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scorenet::init_params;

    fn sample_params() -> ScoreNetParams {
        let hyper = ScoreNetHyper::new(2, 5, 10);
        init_params(&hyper, 314).unwrap()
    }

    #[test]
    fn round_trip_is_bit_exact() {
        let params = sample_params();
        let decoded = decode(&encode(&params)).unwrap();
        assert_eq!(decoded.hyper(), params.hyper());
        for (a, b) in decoded.values().iter().zip(params.values()) {
            assert_eq!(a.to_bits(), b.to_bits());
        }
    }

    #[test]
    fn file_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("params.ckpt");
        let params = sample_params();
        write(&path, &params).unwrap();
        let back = read(&path).unwrap();
        assert_eq!(back, params);
    }

    #[test]
    fn rejects_bad_magic_version_and_truncation() {
        let params = sample_params();
        let bytes = encode(&params);

        let mut bad_magic = bytes.clone();
        bad_magic[0] ^= 0xFF;
        assert!(matches!(decode(&bad_magic), Err(CheckpointError::BadMagic)));

        let mut bad_version = bytes.clone();
        bad_version[8] = 9;
        assert!(matches!(
            decode(&bad_version),
            Err(CheckpointError::UnsupportedVersion(9))
        ));

        let truncated = &bytes[..bytes.len() - 3];
        assert!(matches!(decode(truncated), Err(CheckpointError::Io(_))));

        let mut bad_count = bytes.clone();
        bad_count[28] ^= 0x01;
        assert!(matches!(
            decode(&bad_count),
            Err(CheckpointError::CountMismatch { .. })
        ));
    }
}
