//! Flat binary field snapshots.
//!
//! Layout (little endian): the 8-byte magic `GPGRID01`, `nx` and `ny` as
//! `u64`, then `L_x, L_y, ε, Ω, s, λ` as `f64` (`s = +∞` for the flat
//! trap), then `nx·ny` interleaved `(re, im)` pairs in row-major order.

use std::path::Path;

use num_complex::Complex64;

use super::grid::GpGrid;
use crate::error::{Error, Result};
use crate::output::write_atomic;

pub const MAGIC: &[u8; 8] = b"GPGRID01";

#[derive(Clone, Debug, PartialEq)]
pub struct Snapshot {
    pub nx: usize,
    pub ny: usize,
    pub lx: f64,
    pub ly: f64,
    pub epsilon: f64,
    pub omega: f64,
    pub s: f64,
    pub lambda: f64,
    pub field: Vec<Complex64>,
}

impl Snapshot {
    pub fn of(grid: &GpGrid) -> Self {
        Snapshot {
            nx: grid.nx,
            ny: grid.ny,
            lx: grid.lx,
            ly: grid.ly,
            epsilon: grid.ctx.epsilon,
            omega: grid.omega,
            s: grid.ctx.trap.s.as_f64(),
            lambda: grid.ctx.trap.lambda,
            field: grid.field.clone(),
        }
    }

    pub fn to_bytes(&self) -> Vec<u8> {
        let mut out = Vec::with_capacity(72 + 16 * self.field.len());
        out.extend_from_slice(MAGIC);
        out.extend_from_slice(&(self.nx as u64).to_le_bytes());
        out.extend_from_slice(&(self.ny as u64).to_le_bytes());
        for v in [self.lx, self.ly, self.epsilon, self.omega, self.s, self.lambda] {
            out.extend_from_slice(&v.to_le_bytes());
        }
        for c in &self.field {
            out.extend_from_slice(&c.re.to_le_bytes());
            out.extend_from_slice(&c.im.to_le_bytes());
        }
        out
    }

    pub fn from_bytes(bytes: &[u8]) -> Result<Self> {
        if bytes.len() < 72 || &bytes[..8] != MAGIC {
            return Err(Error::Format("not a GPGRID01 snapshot".into()));
        }
        let word = |k: usize| -> [u8; 8] { bytes[8 + 8 * k..16 + 8 * k].try_into().expect("8 bytes") };
        let nx = u64::from_le_bytes(word(0)) as usize;
        let ny = u64::from_le_bytes(word(1)) as usize;
        let f = |k: usize| f64::from_le_bytes(word(k));
        let count = nx.checked_mul(ny).ok_or_else(|| Error::Format("grid size overflows".into()))?;
        if bytes.len() != 72 + 16 * count {
            return Err(Error::Format(format!(
                "snapshot holds {} bytes, expected {} for a {nx}x{ny} grid",
                bytes.len(),
                72 + 16 * count
            )));
        }
        let field = bytes[72..]
            .chunks_exact(16)
            .map(|c| {
                Complex64::new(
                    f64::from_le_bytes(c[..8].try_into().expect("8 bytes")),
                    f64::from_le_bytes(c[8..].try_into().expect("8 bytes")),
                )
            })
            .collect();
        Ok(Snapshot { nx, ny, lx: f(2), ly: f(3), epsilon: f(4), omega: f(5), s: f(6), lambda: f(7), field })
    }

    pub fn write(&self, path: &Path) -> Result<()> {
        write_atomic(path, &self.to_bytes())
    }

    pub fn read(path: &Path) -> Result<Self> {
        let bytes = std::fs::read(path).map_err(|source| Error::Io { path: path.to_path_buf(), source })?;
        Self::from_bytes(&bytes)
    }
}
