//! Binary field snapshots (little-endian):
//! `"LFPPFLD1"`, `u32 n`, `f64 spacing`, `f64 origin_x`, `f64 origin_y`,
//! `u8 kind`, then `n·n` `f64` values in row-major order.

use std::fs::File;
use std::io::{BufReader, BufWriter, Read, Write};
use std::path::Path;

use super::{FieldKind, GridField};
use crate::error::{Error, Result};
use crate::grid::Geometry;

pub const SNAPSHOT_MAGIC: &[u8; 8] = b"LFPPFLD1";

pub fn write_snapshot<W: Write>(field: &GridField, mut w: W) -> Result<()> {
    let g = field.geometry();
    let n = u32::try_from(g.n).map_err(|_| Error::Config("field too large for snapshot".into()))?;
    w.write_all(SNAPSHOT_MAGIC)?;
    w.write_all(&n.to_le_bytes())?;
    w.write_all(&g.spacing.to_le_bytes())?;
    w.write_all(&g.origin[0].to_le_bytes())?;
    w.write_all(&g.origin[1].to_le_bytes())?;
    w.write_all(&[field.kind().code()])?;
    for v in field.values() {
        w.write_all(&v.to_le_bytes())?;
    }
    w.flush()?;
    Ok(())
}

pub fn read_snapshot<R: Read>(mut r: R) -> Result<GridField> {
    let mut magic = [0u8; 8];
    r.read_exact(&mut magic)?;
    if &magic != SNAPSHOT_MAGIC {
        return Err(Error::Corrupt("bad snapshot magic".into()));
    }
    let mut b4 = [0u8; 4];
    r.read_exact(&mut b4)?;
    let n = u32::from_le_bytes(b4) as usize;
    let spacing = read_f64(&mut r)?;
    let ox = read_f64(&mut r)?;
    let oy = read_f64(&mut r)?;
    let mut kb = [0u8; 1];
    r.read_exact(&mut kb)?;
    let kind = FieldKind::from_code(kb[0]).ok_or_else(|| Error::Corrupt(format!("unknown field kind {}", kb[0])))?;
    let geometry = Geometry::new(n, spacing, [ox, oy]).map_err(|e| Error::Corrupt(e.to_string()))?;
    let mut raw = vec![0u8; n * n * 8];
    r.read_exact(&mut raw)?;
    let values = raw
        .chunks_exact(8)
        .map(|c| f64::from_le_bytes(c.try_into().expect("chunk of 8")))
        .collect();
    let mut rest = [0u8; 1];
    if r.read(&mut rest)? != 0 {
        return Err(Error::Corrupt("trailing bytes after snapshot".into()));
    }
    GridField::new(geometry, kind, values).map_err(|e| Error::Corrupt(e.to_string()))
}

fn read_f64<R: Read>(r: &mut R) -> Result<f64> {
    let mut b = [0u8; 8];
    r.read_exact(&mut b)?;
    Ok(f64::from_le_bytes(b))
}

pub fn save_snapshot(field: &GridField, path: impl AsRef<Path>) -> Result<()> {
    write_snapshot(field, BufWriter::new(File::create(path)?))
}

pub fn load_snapshot(path: impl AsRef<Path>) -> Result<GridField> {
    read_snapshot(BufReader::new(File::open(path)?))
}
