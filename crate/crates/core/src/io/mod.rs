//! File formats, report writers and synthetic data.

mod synth;
mod vecs;

use std::fs;
use std::io::Write;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::neighbors::NeighborTable;
use crate::partition::Clustering;

pub use synth::{synth, SynthSpec, Synthetic};
pub use vecs::{
    decode_fvecs, decode_ivecs, encode_fvecs, encode_ivecs, read_fvecs, read_ivecs, write_fvecs,
    write_ivecs, IdTable,
};

/// Writes through a temporary file in the destination directory and renames
/// it into place, so readers never observe a partial file.
pub fn atomic_write(path: impl AsRef<Path>, bytes: &[u8]) -> Result<()> {
    let path = path.as_ref();
    let dir = match path.parent() {
        Some(p) if !p.as_os_str().is_empty() => p,
        _ => Path::new("."),
    };
    let mut tmp = tempfile::NamedTempFile::new_in(dir)?;
    tmp.write_all(bytes)?;
    tmp.as_file().sync_all()?;
    tmp.persist(path).map_err(|e| Error::Io(e.error))?;
    Ok(())
}

pub fn write_json<T: Serialize + ?Sized>(path: impl AsRef<Path>, value: &T) -> Result<()> {
    let mut bytes = serde_json::to_vec_pretty(value)?;
    bytes.push(b'\n');
    atomic_write(path, &bytes)
}

/// Serializes records as CSV with a header row and `\n` line endings.
pub fn csv_bytes<T: Serialize>(records: &[T]) -> Result<Vec<u8>> {
    let mut w = csv::WriterBuilder::new()
        .terminator(csv::Terminator::Any(b'\n'))
        .from_writer(Vec::new());
    for r in records {
        w.serialize(r)?;
    }
    w.into_inner().map_err(|e| Error::Io(e.into_error()))
}

pub fn write_csv<T: Serialize>(path: impl AsRef<Path>, records: &[T]) -> Result<()> {
    atomic_write(path, &csv_bytes(records)?)
}

pub fn read_csv<T: for<'de> Deserialize<'de>>(path: impl AsRef<Path>) -> Result<Vec<T>> {
    let mut r = csv::Reader::from_path(path)?;
    r.deserialize().map(|rec| rec.map_err(Error::from)).collect()
}

/// How a cluster assignment is laid out in `.ivecs`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum AssignmentLayout {
    /// One record of width 1 per point.
    PerPoint,
    /// A single record holding every point's cluster.
    SingleRecord,
}

pub fn assignment_to_table(c: &Clustering, layout: AssignmentLayout) -> IdTable {
    let values = c.assignment().to_vec();
    let width = match layout {
        AssignmentLayout::PerPoint => 1,
        AssignmentLayout::SingleRecord => values.len(),
    };
    IdTable { values, width }
}

/// Reads an assignment back. Without an explicit layout, width-1 records are
/// read as one point each and a lone record as the whole assignment.
pub fn assignment_from_table(t: &IdTable, layout: Option<AssignmentLayout>) -> Result<Vec<u32>> {
    let ok = match layout {
        Some(AssignmentLayout::PerPoint) => t.width == 1,
        Some(AssignmentLayout::SingleRecord) => t.rows() == 1,
        None => t.width == 1 || t.rows() == 1,
    };
    if !ok {
        return Err(Error::Format(format!(
            "{} records of width {} are not an assignment",
            t.rows(),
            t.width
        )));
    }
    Ok(t.values.clone())
}

pub fn write_assignment(path: impl AsRef<Path>, c: &Clustering, layout: AssignmentLayout) -> Result<()> {
    write_ivecs(path, &assignment_to_table(c, layout))
}

/// Loads an assignment; `num_clusters` defaults to one past the largest id.
pub fn read_assignment(
    path: impl AsRef<Path>,
    layout: Option<AssignmentLayout>,
    num_clusters: Option<usize>,
) -> Result<Clustering> {
    let assign = assignment_from_table(&read_ivecs(path)?, layout)?;
    match num_clusters {
        Some(l) => Clustering::new(assign, l),
        None => Clustering::from_assignment(assign),
    }
}

pub fn write_neighbors(path: impl AsRef<Path>, t: &NeighborTable) -> Result<()> {
    write_ivecs(
        path,
        &IdTable {
            values: t.ids().to_vec(),
            width: t.k(),
        },
    )
}

/// Loads a neighbor table written by [`write_neighbors`] or by another tool.
/// With `strip_self`, each row's own id is dropped.
pub fn read_neighbors(path: impl AsRef<Path>, strip_self: bool) -> Result<NeighborTable> {
    let t = read_ivecs(path)?;
    NeighborTable::imported(t.values, t.width, strip_self)
}

/// Provenance stored next to every report.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunMetadata {
    pub tool: String,
    pub version: String,
    pub seed: Option<u64>,
    pub config: serde_json::Value,
}

impl RunMetadata {
    pub fn new(seed: Option<u64>, config: serde_json::Value) -> Self {
        Self {
            tool: "nsm".into(),
            version: env!("CARGO_PKG_VERSION").into(),
            seed,
            config,
        }
    }
}

/// Removes `path` if present; used to clear stale outputs before a rerun.
pub fn remove_if_exists(path: impl AsRef<Path>) -> Result<()> {
    match fs::remove_file(path) {
        Err(e) if e.kind() != std::io::ErrorKind::NotFound => Err(e.into()),
        _ => Ok(()),
    }
}
