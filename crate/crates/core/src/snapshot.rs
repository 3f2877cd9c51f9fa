//! Binary snapshot format: `"MGSP"`, `u32 N`, `u32 M`, `u64 count`, then
//! `count` pairs of `f64` (re, im), all little endian, in storage order
//! (`n` from `-N` upward, `m` fastest).

use crate::error::{Error, Result};
use crate::field::SpectralField;
use crate::grid::Grid;
use num_complex::Complex64;
use std::path::Path;

pub const MAGIC: &[u8; 4] = b"MGSP";
const HEADER_LEN: usize = 4 + 4 + 4 + 8;

pub fn encode(u: &SpectralField) -> Vec<u8> {
    let g = u.grid();
    let mut out = Vec::with_capacity(HEADER_LEN + 16 * u.coef().len());
    out.extend_from_slice(MAGIC);
    out.extend_from_slice(&(g.n_modes_x() as u32).to_le_bytes());
    out.extend_from_slice(&(g.n_modes_y() as u32).to_le_bytes());
    out.extend_from_slice(&(u.coef().len() as u64).to_le_bytes());
    for c in u.coef() {
        out.extend_from_slice(&c.re.to_le_bytes());
        out.extend_from_slice(&c.im.to_le_bytes());
    }
    out
}

/// Decodes onto a grid with the given oversampling factor.
pub fn decode(bytes: &[u8], oversample: usize) -> Result<SpectralField> {
    if bytes.len() < HEADER_LEN || &bytes[..4] != MAGIC {
        return Err(Error::Snapshot("missing MGSP header".into()));
    }
    let word = |at: usize| u32::from_le_bytes(bytes[at..at + 4].try_into().expect("4 bytes"));
    let (nn, mm) = (word(4) as usize, word(8) as usize);
    let count = u64::from_le_bytes(bytes[12..20].try_into().expect("8 bytes")) as usize;
    let grid = Grid::new(nn, mm, oversample).map_err(|e| Error::Snapshot(e.to_string()))?;
    if count != grid.n_coef() {
        return Err(Error::Snapshot(format!(
            "count {count} does not match (2N + 1) M = {}",
            grid.n_coef()
        )));
    }
    if bytes.len() != HEADER_LEN + 16 * count {
        return Err(Error::Snapshot(format!(
            "expected {} bytes, found {}",
            HEADER_LEN + 16 * count,
            bytes.len()
        )));
    }
    let coef = bytes[HEADER_LEN..]
        .chunks_exact(16)
        .map(|c| {
            let re = f64::from_le_bytes(c[..8].try_into().expect("8 bytes"));
            let im = f64::from_le_bytes(c[8..].try_into().expect("8 bytes"));
            Complex64::new(re, im)
        })
        .collect();
    let u = SpectralField::from_coef(grid, coef)?;
    if !u.is_finite() {
        return Err(Error::Snapshot("non-finite coefficient".into()));
    }
    Ok(u)
}

pub fn write_snapshot(u: &SpectralField, path: &Path) -> Result<()> {
    std::fs::write(path, encode(u))?;
    Ok(())
}

pub fn read_snapshot(path: &Path, oversample: usize) -> Result<SpectralField> {
    decode(&std::fs::read(path)?, oversample)
}
