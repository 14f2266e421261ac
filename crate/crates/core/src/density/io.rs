//! Binary and CSV encodings of grid densities.
//!
//! Binary layout (little-endian): magic `BXGD`, `u32` version, `u32` dimension
//! count, then per axis `u8` layout (0 nodes, 1 cells), `f64` lo, `f64` hi,
//! `u64` length, then `u64` value count and the `f64` values in row-major order.

use std::io::{Read, Write};

use crate::density::grid::{Axis, GridDensity, Layout};
use crate::error::{Error, Result};

pub const GRID_MAGIC: &[u8; 4] = b"BXGD";
pub const FORMAT_VERSION: u32 = 1;

pub(crate) fn write_axis(w: &mut impl Write, ax: &Axis) -> Result<()> {
    w.write_all(&[match ax.layout() {
        Layout::Nodes => 0u8,
        Layout::Cells => 1u8,
    }])?;
    w.write_all(&ax.lo().to_le_bytes())?;
    w.write_all(&ax.hi().to_le_bytes())?;
    w.write_all(&(ax.len() as u64).to_le_bytes())?;
    Ok(())
}

pub(crate) fn read_u8(r: &mut impl Read) -> Result<u8> {
    let mut b = [0u8; 1];
    r.read_exact(&mut b)?;
    Ok(b[0])
}

pub(crate) fn read_u32(r: &mut impl Read) -> Result<u32> {
    let mut b = [0u8; 4];
    r.read_exact(&mut b)?;
    Ok(u32::from_le_bytes(b))
}

pub(crate) fn read_u64(r: &mut impl Read) -> Result<u64> {
    let mut b = [0u8; 8];
    r.read_exact(&mut b)?;
    Ok(u64::from_le_bytes(b))
}

pub(crate) fn read_f64(r: &mut impl Read) -> Result<f64> {
    let mut b = [0u8; 8];
    r.read_exact(&mut b)?;
    Ok(f64::from_le_bytes(b))
}

pub(crate) fn read_axis(r: &mut impl Read) -> Result<Axis> {
    let layout = read_u8(r)?;
    let lo = read_f64(r)?;
    let hi = read_f64(r)?;
    let len = read_u64(r)? as usize;
    match layout {
        0 => Axis::nodes(lo, hi, len),
        1 => Axis::cells(lo, hi, len),
        other => Err(Error::Format(format!("unknown axis layout {other}"))),
    }
}

pub(crate) fn expect_magic(r: &mut impl Read, magic: &[u8; 4]) -> Result<()> {
    let mut m = [0u8; 4];
    r.read_exact(&mut m)?;
    if &m != magic {
        return Err(Error::Format(format!("bad magic {m:?}")));
    }
    let version = read_u32(r)?;
    if version != FORMAT_VERSION {
        return Err(Error::Format(format!(
            "unsupported format version {version}"
        )));
    }
    Ok(())
}

pub fn write_grid<const D: usize>(w: &mut impl Write, g: &GridDensity<D>) -> Result<()> {
    w.write_all(GRID_MAGIC)?;
    w.write_all(&FORMAT_VERSION.to_le_bytes())?;
    w.write_all(&(D as u32).to_le_bytes())?;
    for ax in g.axes() {
        write_axis(w, ax)?;
    }
    w.write_all(&(g.values().len() as u64).to_le_bytes())?;
    let mut buf = Vec::with_capacity(8 * g.values().len());
    for v in g.values() {
        buf.extend_from_slice(&v.to_le_bytes());
    }
    w.write_all(&buf)?;
    Ok(())
}

pub fn read_grid<const D: usize>(r: &mut impl Read) -> Result<GridDensity<D>> {
    expect_magic(r, GRID_MAGIC)?;
    let dims = read_u32(r)? as usize;
    if dims != D {
        return Err(Error::Format(format!(
            "file holds a {dims}-dimensional grid, expected {D}"
        )));
    }
    let mut axes = Vec::with_capacity(D);
    for _ in 0..D {
        axes.push(read_axis(r)?);
    }
    let count = read_u64(r)? as usize;
    let expected: usize = axes.iter().map(|a| a.len()).product();
    if count != expected {
        return Err(Error::Format(format!(
            "{count} values for {expected} grid points"
        )));
    }
    let mut bytes = vec![0u8; 8 * count];
    r.read_exact(&mut bytes)?;
    let values = bytes
        .chunks_exact(8)
        .map(|c| f64::from_le_bytes(c.try_into().unwrap()))
        .collect();
    let axes: [Axis; D] = axes
        .try_into()
        .map_err(|_| Error::Format("axis count".into()))?;
    GridDensity::new(axes, values)
}

/// Shortest decimal text that parses back to the same `f64`.
pub fn fmt_f64(x: f64) -> String {
    format!("{x:?}")
}

/// CSV with one row per grid point: the coordinates (named by `columns`) then `value_name`.
pub fn write_grid_csv<const D: usize>(
    w: &mut impl Write,
    g: &GridDensity<D>,
    columns: [&str; D],
    value_name: &str,
) -> Result<()> {
    let mut header = columns.join(",");
    header.push(',');
    header.push_str(value_name);
    writeln!(w, "{header}")?;
    let coords: Vec<Vec<f64>> = g.axes().iter().map(|a| a.coords()).collect();
    let mut line = String::new();
    for (flat, v) in g.values().iter().enumerate() {
        let idx = g.index_of(flat);
        line.clear();
        for d in 0..D {
            line.push_str(&fmt_f64(coords[d][idx[d]]));
            line.push(',');
        }
        line.push_str(&fmt_f64(*v));
        writeln!(w, "{line}")?;
    }
    Ok(())
}
