//! Named-array binary container shared by checkpoints.
//!
//! Layout (little-endian): 5 magic bytes, `u32` array count, then per
//! array: `u32` name length, UTF-8 name, `u32` rank, `u32` per dimension,
//! and the row-major `f64` payload.

use std::io::{Read, Write};

use crate::error::{Result, ShredError};

#[derive(Debug, Clone, PartialEq)]
pub struct NamedArray {
    pub name: String,
    pub shape: Vec<usize>,
    pub data: Vec<f64>,
}

impl NamedArray {
    pub fn new(name: impl Into<String>, shape: Vec<usize>, data: Vec<f64>) -> Self {
        debug_assert_eq!(shape.iter().product::<usize>(), data.len());
        NamedArray {
            name: name.into(),
            shape,
            data,
        }
    }
}

pub(crate) fn write_u32(w: &mut impl Write, v: usize) -> Result<()> {
    let v = u32::try_from(v).map_err(|_| ShredError::Format(format!("{v} exceeds u32")))?;
    w.write_all(&v.to_le_bytes())?;
    Ok(())
}

pub(crate) fn read_u32(r: &mut impl Read) -> Result<usize> {
    let mut buf = [0u8; 4];
    r.read_exact(&mut buf)?;
    Ok(u32::from_le_bytes(buf) as usize)
}

pub(crate) fn write_f64s(w: &mut impl Write, values: &[f64]) -> Result<()> {
    for v in values {
        w.write_all(&v.to_le_bytes())?;
    }
    Ok(())
}

pub(crate) fn read_f64s(r: &mut impl Read, count: usize) -> Result<Vec<f64>> {
    let mut bytes = vec![0u8; count * 8];
    r.read_exact(&mut bytes)?;
    Ok(bytes
        .chunks_exact(8)
        .map(|c| f64::from_le_bytes(c.try_into().expect("chunk of 8")))
        .collect())
}

pub(crate) fn expect_magic(r: &mut impl Read, magic: &[u8; 5]) -> Result<()> {
    let mut buf = [0u8; 5];
    r.read_exact(&mut buf)?;
    if &buf != magic {
        return Err(ShredError::Format(format!(
            "bad magic {:?}, expected {:?}",
            String::from_utf8_lossy(&buf),
            String::from_utf8_lossy(magic)
        )));
    }
    Ok(())
}

pub fn write_arrays(w: &mut impl Write, magic: &[u8; 5], arrays: &[NamedArray]) -> Result<()> {
    w.write_all(magic)?;
    write_u32(w, arrays.len())?;
    for a in arrays {
        write_u32(w, a.name.len())?;
        w.write_all(a.name.as_bytes())?;
        write_u32(w, a.shape.len())?;
        for &d in &a.shape {
            write_u32(w, d)?;
        }
        write_f64s(w, &a.data)?;
    }
    Ok(())
}

pub fn read_arrays(r: &mut impl Read, magic: &[u8; 5]) -> Result<Vec<NamedArray>> {
    expect_magic(r, magic)?;
    let count = read_u32(r)?;
    let mut arrays = Vec::with_capacity(count);
    for _ in 0..count {
        let len = read_u32(r)?;
        let mut name = vec![0u8; len];
        r.read_exact(&mut name)?;
        let name = String::from_utf8(name).map_err(|e| ShredError::Format(format!("array name: {e}")))?;
        let rank = read_u32(r)?;
        let shape = (0..rank).map(|_| read_u32(r)).collect::<Result<Vec<_>>>()?;
        let data = read_f64s(r, shape.iter().product())?;
        arrays.push(NamedArray { name, shape, data });
    }
    Ok(arrays)
}

/// Removes the array called `name` from `arrays`, checking its shape.
pub fn take_array(arrays: &mut Vec<NamedArray>, name: &str, shape: &[usize]) -> Result<Vec<f64>> {
    let pos = arrays
        .iter()
        .position(|a| a.name == name)
        .ok_or_else(|| ShredError::Format(format!("missing array `{name}`")))?;
    let a = arrays.swap_remove(pos);
    if a.shape != shape {
        return Err(ShredError::Shape(format!(
            "array `{name}` has shape {:?}, expected {:?}",
            a.shape, shape
        )));
    }
    Ok(a.data)
}
