//! Snapshot file: magic `SHRD1`, `u32` axis count, `u32` per axis, `u32`
//! snapshot count, then `n × N` little-endian `f64` values snapshot by
//! snapshot (column-major).

use std::fs::File;
use std::io::{BufReader, BufWriter, Read, Write};
use std::path::Path;

use super::FieldDataset;
use crate::container::{expect_magic, read_f64s, read_u32, write_f64s, write_u32};
use crate::error::{Result, ShredError};

pub const SNAPSHOT_MAGIC: &[u8; 5] = b"SHRD1";

pub fn write_snapshots(w: &mut impl Write, field: &FieldDataset) -> Result<()> {
    w.write_all(SNAPSHOT_MAGIC)?;
    write_u32(w, field.grid_shape().len())?;
    for &len in field.grid_shape() {
        write_u32(w, len)?;
    }
    write_u32(w, field.len())?;
    write_f64s(w, field.as_column_major())
}

pub fn read_snapshots(r: &mut impl Read, name: &str) -> Result<FieldDataset> {
    expect_magic(r, SNAPSHOT_MAGIC)?;
    let axes = read_u32(r)?;
    if axes == 0 {
        return Err(ShredError::Format("snapshot file has no axes".into()));
    }
    let shape = (0..axes).map(|_| read_u32(r)).collect::<Result<Vec<_>>>()?;
    let len = read_u32(r)?;
    let n: usize = shape.iter().product();
    let data = read_f64s(r, n * len)?;
    FieldDataset::new(data, shape, len, 1.0, name)
}

pub fn write_snapshot_file(path: &Path, field: &FieldDataset) -> Result<()> {
    let mut w = BufWriter::new(File::create(path)?);
    write_snapshots(&mut w, field)?;
    w.flush()?;
    Ok(())
}

pub fn read_snapshot_file(path: &Path) -> Result<FieldDataset> {
    let name = path
        .file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_default();
    let mut r = BufReader::new(File::open(path)?);
    read_snapshots(&mut r, &name)
}

/// One row per snapshot under a header of node indices. `max_rows` limits
/// the number of snapshots written.
pub fn write_csv_preview(path: &Path, field: &FieldDataset, max_rows: Option<usize>) -> Result<()> {
    let mut w = csv::Writer::from_path(path)?;
    w.write_record((0..field.n()).map(|i| i.to_string()))?;
    let rows = max_rows.unwrap_or(field.len()).min(field.len());
    for t in 0..rows {
        w.write_record(field.snapshot(t).iter().map(|v| v.to_string()))?;
    }
    w.flush()?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn header_layout() {
        let field = FieldDataset::new(vec![1.5; 2 * 3 * 4], vec![2, 3], 4, 1.0, "x").unwrap();
        let mut buf = Vec::new();
        write_snapshots(&mut buf, &field).unwrap();
        assert_eq!(&buf[..5], b"SHRD1");
        assert_eq!(u32::from_le_bytes(buf[5..9].try_into().unwrap()), 2);
        assert_eq!(u32::from_le_bytes(buf[9..13].try_into().unwrap()), 2);
        assert_eq!(u32::from_le_bytes(buf[13..17].try_into().unwrap()), 3);
        assert_eq!(u32::from_le_bytes(buf[17..21].try_into().unwrap()), 4);
        assert_eq!(buf.len(), 21 + 24 * 8);
        let back = read_snapshots(&mut buf.as_slice(), "x").unwrap();
        assert_eq!(back.as_column_major(), field.as_column_major());
        assert_eq!(back.grid_shape(), field.grid_shape());
    }

    #[test]
    fn truncated_file_fails() {
        let field = FieldDataset::new(vec![0.0; 12], vec![4], 3, 1.0, "x").unwrap();
        let mut buf = Vec::new();
        write_snapshots(&mut buf, &field).unwrap();
        buf.truncate(buf.len() - 3);
        assert!(read_snapshots(&mut buf.as_slice(), "x").is_err());
    }
}
