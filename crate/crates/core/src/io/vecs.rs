//! `.fvecs` / `.ivecs`: each record is a little-endian `i32` dimension
//! followed by that many little-endian `f32` (or `i32`) values.

use std::fs;
use std::path::Path;

use crate::dataset::Matrix;
use crate::error::{Error, Result};
use crate::io::atomic_write;

/// Integer records of equal width, as stored in `.ivecs`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct IdTable {
    pub values: Vec<u32>,
    pub width: usize,
}

impl IdTable {
    pub fn rows(&self) -> usize {
        if self.width == 0 {
            0
        } else {
            self.values.len() / self.width
        }
    }

    pub fn row(&self, i: usize) -> &[u32] {
        &self.values[i * self.width..(i + 1) * self.width]
    }
}

/// Splits `bytes` into records, returning the common width and the payload
/// words of every record.
fn records(bytes: &[u8]) -> Result<(usize, Vec<[u8; 4]>)> {
    let mut words = Vec::with_capacity(bytes.len() / 4);
    let mut width = None;
    let mut offset = 0;
    let mut record = 0;
    while offset < bytes.len() {
        let head = bytes
            .get(offset..offset + 4)
            .ok_or(Error::TruncatedRecord { offset })?;
        let dim = i32::from_le_bytes(head.try_into().expect("four bytes"));
        if dim <= 0 {
            return Err(Error::NonPositiveDim { record, dim });
        }
        let dim = dim as usize;
        match width {
            None => width = Some(dim),
            Some(w) if w != dim => {
                return Err(Error::InconsistentDim {
                    record,
                    expected: w,
                    got: dim,
                })
            }
            _ => {}
        }
        let body = bytes
            .get(offset + 4..offset + 4 + 4 * dim)
            .ok_or(Error::TruncatedRecord { offset })?;
        words.extend(body.chunks_exact(4).map(|c| <[u8; 4]>::try_from(c).expect("four bytes")));
        offset += 4 + 4 * dim;
        record += 1;
    }
    Ok((width.unwrap_or(0), words))
}

/// Decodes `.fvecs` bytes. An empty input gives an empty matrix; NaN and
/// infinite values are rejected.
pub fn decode_fvecs(bytes: &[u8]) -> Result<Matrix> {
    let (width, words) = records(bytes)?;
    if width == 0 {
        return Ok(Matrix::empty());
    }
    let values: Vec<f32> = words.into_iter().map(f32::from_le_bytes).collect();
    if let Some(i) = values.iter().position(|v| !v.is_finite()) {
        return Err(Error::NonFinite { record: i / width });
    }
    Matrix::new(values, width)
}

pub fn encode_fvecs(m: &Matrix) -> Vec<u8> {
    let mut out = Vec::with_capacity(m.len() * (m.dim() + 1) * 4);
    for row in m.rows() {
        out.extend_from_slice(&(row.len() as i32).to_le_bytes());
        for v in row {
            out.extend_from_slice(&v.to_le_bytes());
        }
    }
    out
}

/// Decodes `.ivecs` bytes. Negative values are rejected since every table
/// stored this way holds ids.
pub fn decode_ivecs(bytes: &[u8]) -> Result<IdTable> {
    let (width, words) = records(bytes)?;
    let mut values = Vec::with_capacity(words.len());
    for (i, w) in words.into_iter().enumerate() {
        let v = i32::from_le_bytes(w);
        if v < 0 {
            return Err(Error::NegativeId {
                record: i / width,
                value: v,
            });
        }
        values.push(v as u32);
    }
    Ok(IdTable { values, width })
}

pub fn encode_ivecs(table: &IdTable) -> Result<Vec<u8>> {
    if table.width == 0 {
        if table.values.is_empty() {
            return Ok(Vec::new());
        }
        return Err(Error::Format("ivecs rows need a positive width".into()));
    }
    if table.values.len() % table.width != 0 {
        return Err(Error::Format(format!(
            "{} values do not form rows of width {}",
            table.values.len(),
            table.width
        )));
    }
    let mut out = Vec::with_capacity((table.values.len() + table.rows()) * 4);
    for row in table.values.chunks_exact(table.width) {
        out.extend_from_slice(&(table.width as i32).to_le_bytes());
        for &v in row {
            let v = i32::try_from(v).map_err(|_| Error::Format(format!("id {v} exceeds i32")))?;
            out.extend_from_slice(&v.to_le_bytes());
        }
    }
    Ok(out)
}

pub fn read_fvecs(path: impl AsRef<Path>) -> Result<Matrix> {
    decode_fvecs(&fs::read(path)?)
}

pub fn write_fvecs(path: impl AsRef<Path>, m: &Matrix) -> Result<()> {
    atomic_write(path, &encode_fvecs(m))
}

pub fn read_ivecs(path: impl AsRef<Path>) -> Result<IdTable> {
    decode_ivecs(&fs::read(path)?)
}

pub fn write_ivecs(path: impl AsRef<Path>, table: &IdTable) -> Result<()> {
    atomic_write(path, &encode_ivecs(table)?)
}
