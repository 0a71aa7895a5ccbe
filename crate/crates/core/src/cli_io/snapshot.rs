//! Versioned little-endian binary snapshots of the interior state.

use crate::dynamics::State;
use crate::fields::{BoundaryMode, FieldError, Grid};
use std::io::{Read, Write};
use std::path::Path;
use thiserror::Error;

pub const MAGIC: [u8; 7] = *b"OLDB2D\0";
pub const VERSION: u32 = 1;
/// magic, version, nx, ny, dx, dy, t
pub const HEADER_LEN: usize = 7 + 4 + 4 + 4 + 8 + 8 + 8;

#[derive(Debug, Error)]
pub enum SnapshotError {
    #[error("not a snapshot file: bad magic {0:?}")]
    BadMagic(Vec<u8>),
    #[error("unsupported snapshot version {0} (this build reads version {VERSION})")]
    Version(u32),
    #[error("truncated snapshot: expected {expected} bytes, found {actual}")]
    Length { expected: usize, actual: usize },
    #[error("snapshot grid spacing ({dx}, {dy}) is not a valid {nx}x{ny} grid")]
    Grid {
        nx: u32,
        ny: u32,
        dx: f64,
        dy: f64,
        #[source]
        source: FieldError,
    },
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub fn encode_snapshot(state: &State) -> Vec<u8> {
    let g = state.grid();
    let mut out = Vec::with_capacity(HEADER_LEN + 7 * 8 * g.cells());
    out.extend_from_slice(&MAGIC);
    out.extend_from_slice(&VERSION.to_le_bytes());
    out.extend_from_slice(&(g.nx as u32).to_le_bytes());
    out.extend_from_slice(&(g.ny as u32).to_le_bytes());
    out.extend_from_slice(&g.dx.to_le_bytes());
    out.extend_from_slice(&g.dy.to_le_bytes());
    out.extend_from_slice(&state.t.to_le_bytes());
    for p in state.planes() {
        for v in p.interior() {
            out.extend_from_slice(&v.to_le_bytes());
        }
    }
    out
}

/// Decodes a snapshot; the boundary mode is not stored and must be supplied
/// so ghosts can be rebuilt.
pub fn decode_snapshot(bytes: &[u8], mode: BoundaryMode) -> Result<State, SnapshotError> {
    if bytes.len() < MAGIC.len() || bytes[..7] != MAGIC {
        return Err(SnapshotError::BadMagic(bytes[..bytes.len().min(7)].to_vec()));
    }
    if bytes.len() < HEADER_LEN {
        return Err(SnapshotError::Length {
            expected: HEADER_LEN,
            actual: bytes.len(),
        });
    }
    let u32_at = |o: usize| u32::from_le_bytes(bytes[o..o + 4].try_into().expect("4 bytes"));
    let f64_at = |o: usize| f64::from_le_bytes(bytes[o..o + 8].try_into().expect("8 bytes"));
    let version = u32_at(7);
    if version != VERSION {
        return Err(SnapshotError::Version(version));
    }
    let (nx, ny) = (u32_at(11), u32_at(15));
    let (dx, dy, t) = (f64_at(19), f64_at(27), f64_at(35));
    let cells = nx as usize * ny as usize;
    let expected = HEADER_LEN + 7 * 8 * cells;
    if bytes.len() != expected {
        return Err(SnapshotError::Length {
            expected,
            actual: bytes.len(),
        });
    }
    let grid = Grid::new(nx as usize, ny as usize, nx as f64 * dx, ny as f64 * dy, mode).map_err(|source| {
        SnapshotError::Grid {
            nx,
            ny,
            dx,
            dy,
            source,
        }
    })?;
    // lx = nx·dx may not round-trip; keep the stored spacing exactly
    let grid = Grid { dx, dy, ..grid };
    let mut s = State::uniform(grid, 1.0, 0.0, [0.0; 3]);
    s.t = t;
    let mut off = HEADER_LEN;
    {
        let planes = [
            &mut s.rho,
            &mut s.mom.x,
            &mut s.mom.y,
            &mut s.eta,
            &mut s.tau.xx,
            &mut s.tau.xy,
            &mut s.tau.yy,
        ];
        for p in planes {
            for j in 0..ny as isize {
                for i in 0..nx as isize {
                    p.set(i, j, f64_at(off));
                    off += 8;
                }
            }
        }
    }
    s.refresh_ghosts();
    Ok(s)
}

pub fn write_snapshot(path: &Path, state: &State) -> Result<(), SnapshotError> {
    let mut f = std::io::BufWriter::new(std::fs::File::create(path)?);
    f.write_all(&encode_snapshot(state))?;
    f.flush()?;
    Ok(())
}

pub fn read_snapshot(path: &Path, mode: BoundaryMode) -> Result<State, SnapshotError> {
    let mut bytes = Vec::new();
    std::fs::File::open(path)?.read_to_end(&mut bytes)?;
    decode_snapshot(&bytes, mode)
}
