//! Binary field files.
//!
//! Layout, all little-endian:
//!
//! | offset | type      | content                     |
//! |--------|-----------|-----------------------------|
//! | 0      | `[u8; 4]` | magic `FKPL`                |
//! | 4      | `u32`     | version (1)                 |
//! | 8      | `u32`     | nx                          |
//! | 12     | `u32`     | ny                          |
//! | 16     | `f64` x 5 | lx, ly, alpha, c, sigma     |
//! | 56     | `f64` x nx·ny | values, row-major (x fastest) |

use std::fs::File;
use std::io::{BufReader, BufWriter, Read, Write};
use std::path::Path;

use crate::error::{FkpError, Result};
use crate::grid::{RealField, SpectralGrid};

pub const MAGIC: [u8; 4] = *b"FKPL";
pub const VERSION: u32 = 1;
pub const HEADER_LEN: u64 = 56;

/// Equation parameters stored alongside the samples.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FieldMeta {
    pub alpha: f64,
    pub c: f64,
    pub sigma: f64,
}

impl Default for FieldMeta {
    fn default() -> Self {
        Self {
            alpha: 2.0,
            c: 1.0,
            sigma: -1.0,
        }
    }
}

pub fn write_field<W: Write>(mut w: W, field: &RealField, meta: &FieldMeta) -> Result<()> {
    let g = field.grid();
    let dim = |n: usize| {
        u32::try_from(n).map_err(|_| FkpError::InvalidGrid(format!("{n} nodes exceed u32")))
    };
    w.write_all(&MAGIC)?;
    w.write_all(&VERSION.to_le_bytes())?;
    w.write_all(&dim(g.nx())?.to_le_bytes())?;
    w.write_all(&dim(g.ny())?.to_le_bytes())?;
    for v in [g.lx(), g.ly(), meta.alpha, meta.c, meta.sigma] {
        w.write_all(&v.to_le_bytes())?;
    }
    let mut buf = Vec::with_capacity(field.values().len() * 8);
    for v in field.values() {
        buf.extend_from_slice(&v.to_le_bytes());
    }
    w.write_all(&buf)?;
    w.flush()?;
    Ok(())
}

struct Cursor<R> {
    inner: R,
    offset: u64,
}

impl<R: Read> Cursor<R> {
    fn take<const N: usize>(&mut self) -> Result<[u8; N]> {
        let mut buf = [0u8; N];
        let mut filled = 0;
        while filled < N {
            match self.inner.read(&mut buf[filled..]) {
                Ok(0) => {
                    return Err(FkpError::Truncated {
                        offset: self.offset,
                    })
                }
                Ok(k) => filled += k,
                Err(e) if e.kind() == std::io::ErrorKind::Interrupted => {}
                Err(e) => return Err(e.into()),
            }
        }
        self.offset += N as u64;
        Ok(buf)
    }

    fn u32(&mut self) -> Result<u32> {
        Ok(u32::from_le_bytes(self.take()?))
    }

    fn f64(&mut self) -> Result<f64> {
        Ok(f64::from_le_bytes(self.take()?))
    }
}

pub fn read_field<R: Read>(r: R) -> Result<(RealField, FieldMeta)> {
    let mut cur = Cursor {
        inner: r,
        offset: 0,
    };
    let magic: [u8; 4] = cur.take()?;
    if magic != MAGIC {
        return Err(FkpError::MagicMismatch { found: magic });
    }
    let version = cur.u32()?;
    if version != VERSION {
        return Err(FkpError::VersionMismatch(version));
    }
    let nx = cur.u32()? as usize;
    let ny = cur.u32()? as usize;
    let lx = cur.f64()?;
    let ly = cur.f64()?;
    let meta = FieldMeta {
        alpha: cur.f64()?,
        c: cur.f64()?,
        sigma: cur.f64()?,
    };
    let grid = SpectralGrid::new(nx, ny, lx, ly).map_err(|e| FkpError::Corrupt {
        offset: 8,
        reason: e.to_string(),
    })?;
    let mut values = Vec::with_capacity(grid.len());
    for _ in 0..grid.len() {
        let at = cur.offset;
        let v = cur.f64()?;
        if !v.is_finite() {
            return Err(FkpError::Corrupt {
                offset: at,
                reason: "non-finite sample".into(),
            });
        }
        values.push(v);
    }
    let mut extra = [0u8; 1];
    if cur.inner.read(&mut extra)? != 0 {
        return Err(FkpError::Corrupt {
            offset: cur.offset,
            reason: "trailing bytes after samples".into(),
        });
    }
    Ok((RealField::new(grid, values)?, meta))
}

pub fn save_field(path: impl AsRef<Path>, field: &RealField, meta: &FieldMeta) -> Result<()> {
    write_field(BufWriter::new(File::create(path)?), field, meta)
}

pub fn load_field(path: impl AsRef<Path>) -> Result<(RealField, FieldMeta)> {
    read_field(BufReader::new(File::open(path)?))
}
