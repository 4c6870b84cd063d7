//! Binary field format `DSFLD1`.
//!
//! Layout: the 6-byte magic `DSFLD1`, a little-endian `u32` kind (0 Cartesian, 1 polar),
//! the `u32` dimensions (`Nx, Ny` or `Nc+1, N, 2`), then the samples as little-endian
//! complex128 pairs in row-major order.

use std::io::{Read, Write};
use std::path::Path;

use num_complex::Complex64;

use super::cartesian::CartesianField;
use super::polar::{PolarField, PolarGrid};
use crate::error::{Error, Result};

pub const MAGIC: &[u8; 6] = b"DSFLD1";

/// A complex field on either grid family.
#[derive(Clone, Debug, PartialEq)]
pub enum ComplexField2D {
    Cartesian(CartesianField),
    /// Polar samples together with the grid they live on.
    Polar(PolarGrid, PolarField),
}

pub fn write_field(w: &mut impl Write, field: &ComplexField2D) -> Result<()> {
    w.write_all(MAGIC)?;
    let (kind, dims, data): (u32, Vec<u32>, &[Complex64]) = match field {
        ComplexField2D::Cartesian(f) => (0, vec![f.nx as u32, f.ny as u32], &f.data),
        ComplexField2D::Polar(g, f) => {
            (1, vec![(g.nc() + 1) as u32, g.n_phi() as u32, 2], &f.data)
        }
    };
    w.write_all(&kind.to_le_bytes())?;
    for d in dims {
        w.write_all(&d.to_le_bytes())?;
    }
    let mut buf = Vec::with_capacity(16 * data.len());
    for c in data {
        buf.extend_from_slice(&c.re.to_le_bytes());
        buf.extend_from_slice(&c.im.to_le_bytes());
    }
    w.write_all(&buf)?;
    Ok(())
}

fn read_u32(r: &mut impl Read) -> Result<u32> {
    let mut b = [0u8; 4];
    r.read_exact(&mut b).map_err(|e| Error::Format(format!("truncated header: {e}")))?;
    Ok(u32::from_le_bytes(b))
}

pub fn read_field(r: &mut impl Read) -> Result<ComplexField2D> {
    let mut magic = [0u8; 6];
    r.read_exact(&mut magic).map_err(|e| Error::Format(format!("truncated header: {e}")))?;
    if &magic != MAGIC {
        return Err(Error::Format("bad magic, expected DSFLD1".into()));
    }
    let kind = read_u32(r)?;
    let dims: Vec<usize> = match kind {
        0 => vec![read_u32(r)? as usize, read_u32(r)? as usize],
        1 => vec![read_u32(r)? as usize, read_u32(r)? as usize, read_u32(r)? as usize],
        k => return Err(Error::Format(format!("unknown field kind {k}"))),
    };
    let count: usize = dims.iter().product();
    let bytes = count
        .checked_mul(16)
        .filter(|b| *b <= 1 << 34)
        .ok_or_else(|| Error::Format(format!("implausible dimensions {dims:?}")))?;
    let mut raw = vec![0u8; bytes];
    r.read_exact(&mut raw).map_err(|_| Error::Format(format!("expected {count} samples, data is truncated")))?;
    let data: Vec<Complex64> = raw
        .chunks_exact(16)
        .map(|c| {
            let re = f64::from_le_bytes(c[..8].try_into().unwrap());
            let im = f64::from_le_bytes(c[8..].try_into().unwrap());
            Complex64::new(re, im)
        })
        .collect();
    match kind {
        0 => Ok(ComplexField2D::Cartesian(CartesianField { nx: dims[0], ny: dims[1], data })),
        _ => {
            if dims[2] != 2 || dims[0] < 2 {
                return Err(Error::Format("polar field must have two radial domains".into()));
            }
            let grid = PolarGrid::new(dims[0] - 1, dims[1])?;
            let mut f = PolarField::zeros(&grid);
            f.data = data;
            Ok(ComplexField2D::Polar(grid, f))
        }
    }
}

pub fn save(path: impl AsRef<Path>, field: &ComplexField2D) -> Result<()> {
    let mut f = std::io::BufWriter::new(std::fs::File::create(path)?);
    write_field(&mut f, field)?;
    f.flush()?;
    Ok(())
}

/// Loads a file holding exactly one record.
pub fn load(path: impl AsRef<Path>) -> Result<ComplexField2D> {
    let mut all = load_all(path)?;
    if all.len() != 1 {
        return Err(Error::Format(format!("expected one record, found {}", all.len())));
    }
    Ok(all.remove(0))
}

/// Loads every record of a file written by consecutive [`write_field`] calls.
pub fn load_all(path: impl AsRef<Path>) -> Result<Vec<ComplexField2D>> {
    let bytes = std::fs::read(path)?;
    let mut rest = bytes.as_slice();
    let mut out = Vec::new();
    while !rest.is_empty() {
        out.push(read_field(&mut rest)?);
    }
    Ok(out)
}
