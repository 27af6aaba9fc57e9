//! VXF1 binary field dumps and `x,y,re,im` text export.
//!
//! Layout: the bytes `VXF1`, little-endian `u32 nx`, `u32 ny`, `f64 lx`,
//! `f64 ly`, then `nx * ny` interleaved `(re, im)` `f64` pairs in row-major
//! order (`idx = j * nx + i`).

use std::io::{self, Read, Write};

use vxsim_core::{Complex64, ComplexField, RealField, SpectralGrid};

pub const MAGIC: &[u8; 4] = b"VXF1";

pub fn write_vxf(mut w: impl Write, field: &ComplexField) -> io::Result<()> {
    let g = field.grid();
    let mut buf = Vec::with_capacity(28 + 16 * g.len());
    buf.extend_from_slice(MAGIC);
    buf.extend_from_slice(&(g.nx() as u32).to_le_bytes());
    buf.extend_from_slice(&(g.ny() as u32).to_le_bytes());
    buf.extend_from_slice(&g.lx().to_le_bytes());
    buf.extend_from_slice(&g.ly().to_le_bytes());
    for v in field.values() {
        buf.extend_from_slice(&v.re.to_le_bytes());
        buf.extend_from_slice(&v.im.to_le_bytes());
    }
    w.write_all(&buf)
}

/// Real fields are written with zero imaginary parts.
pub fn write_vxf_real(w: impl Write, field: &RealField) -> io::Result<()> {
    write_vxf(w, &field.to_complex())
}

fn invalid(msg: impl Into<String>) -> io::Error {
    io::Error::new(io::ErrorKind::InvalidData, msg.into())
}

pub fn read_vxf(mut r: impl Read) -> io::Result<ComplexField> {
    let mut header = [0u8; 28];
    r.read_exact(&mut header)?;
    if &header[..4] != MAGIC {
        return Err(invalid("missing VXF1 magic"));
    }
    let u32_at = |o: usize| u32::from_le_bytes(header[o..o + 4].try_into().expect("4 bytes"));
    let f64_at = |o: usize| f64::from_le_bytes(header[o..o + 8].try_into().expect("8 bytes"));
    let (nx, ny) = (u32_at(4) as usize, u32_at(8) as usize);
    let (lx, ly) = (f64_at(12), f64_at(20));
    let grid = SpectralGrid::new(nx, ny, lx, ly).map_err(|e| invalid(e.to_string()))?;
    let mut body = vec![0u8; 16 * grid.len()];
    r.read_exact(&mut body)?;
    let values = body
        .chunks_exact(16)
        .map(|c| {
            Complex64::new(
                f64::from_le_bytes(c[..8].try_into().expect("8 bytes")),
                f64::from_le_bytes(c[8..].try_into().expect("8 bytes")),
            )
        })
        .collect();
    let mut rest = [0u8; 1];
    if r.read(&mut rest)? != 0 {
        return Err(invalid("trailing bytes after field data"));
    }
    ComplexField::from_values(&grid, values).map_err(|e| invalid(e.to_string()))
}

/// Header line `x,y,re,im` followed by one row per grid point.
pub fn write_csv(mut w: impl Write, field: &ComplexField) -> io::Result<()> {
    let g = field.grid();
    let mut out = String::with_capacity(48 * g.len());
    out.push_str("x,y,re,im\n");
    for (idx, v) in field.values().iter().enumerate() {
        let (x, y) = g.position(idx);
        out.push_str(&format!("{x:?},{y:?},{:?},{:?}\n", v.re, v.im));
    }
    w.write_all(out.as_bytes())
}
