//! Binary matrix dumps for cross-checking against other implementations.
//!
//! Layout, all little-endian:
//!
//! | offset | size | content                                  |
//! |--------|------|------------------------------------------|
//! | 0      | 4    | magic `SCOP`                             |
//! | 4      | 4    | u32 format version (1)                   |
//! | 8      | 8    | u64 rows                                 |
//! | 16     | 8    | u64 cols                                 |
//! | 24     | 16·r·c | row-major entries, each (re: f64, im: f64) |
//!
//! The entries are the kernel matrix K (not weighted by the quadrature).

use std::io::{Read, Write};
use std::path::Path;

use faer::Mat;
use num_complex::Complex64 as C64;

use crate::error::{Error, Result};

pub const MAGIC: &[u8; 4] = b"SCOP";
pub const VERSION: u32 = 1;

pub fn write_matrix<W: Write>(m: &Mat<C64>, mut out: W) -> std::io::Result<()> {
    out.write_all(MAGIC)?;
    out.write_all(&VERSION.to_le_bytes())?;
    out.write_all(&(m.nrows() as u64).to_le_bytes())?;
    out.write_all(&(m.ncols() as u64).to_le_bytes())?;
    let mut buf = Vec::with_capacity(16 * m.ncols());
    for i in 0..m.nrows() {
        buf.clear();
        for j in 0..m.ncols() {
            let z = m[(i, j)];
            buf.extend_from_slice(&z.re.to_le_bytes());
            buf.extend_from_slice(&z.im.to_le_bytes());
        }
        out.write_all(&buf)?;
    }
    out.flush()
}

pub fn read_matrix<R: Read>(mut input: R) -> Result<Mat<C64>> {
    let io = |e: std::io::Error| Error::Dump(e.to_string());
    let mut head = [0u8; 24];
    input.read_exact(&mut head).map_err(io)?;
    if &head[0..4] != MAGIC {
        return Err(Error::Dump("bad magic".into()));
    }
    let version = u32::from_le_bytes(head[4..8].try_into().unwrap());
    if version != VERSION {
        return Err(Error::Dump(format!("unsupported version {version}")));
    }
    let rows = u64::from_le_bytes(head[8..16].try_into().unwrap()) as usize;
    let cols = u64::from_le_bytes(head[16..24].try_into().unwrap()) as usize;
    let len = rows
        .checked_mul(cols)
        .and_then(|n| n.checked_mul(16))
        .ok_or_else(|| Error::Dump("dimensions overflow".into()))?;
    let mut body = Vec::new();
    input.read_to_end(&mut body).map_err(io)?;
    if body.len() != len {
        return Err(Error::Dump(format!("expected {len} payload bytes, found {}", body.len())));
    }
    let f = |k: usize| f64::from_le_bytes(body[8 * k..8 * k + 8].try_into().unwrap());
    Ok(Mat::from_fn(rows, cols, |i, j| {
        let k = 2 * (i * cols + j);
        C64::new(f(k), f(k + 1))
    }))
}

pub fn save_matrix(m: &Mat<C64>, path: &Path) -> Result<()> {
    let file = std::fs::File::create(path).map_err(|e| Error::io(path, e))?;
    write_matrix(m, std::io::BufWriter::new(file)).map_err(|e| Error::io(path, e))
}

pub fn load_matrix(path: &Path) -> Result<Mat<C64>> {
    let file = std::fs::File::open(path).map_err(|e| Error::io(path, e))?;
    read_matrix(std::io::BufReader::new(file))
}
