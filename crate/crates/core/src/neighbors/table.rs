use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::metric::Metric;

/// Largest number of neighbors stored per row.
pub const MAX_K: usize = 4096;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum NeighborSource {
    Exact,
    Approximate,
    Imported,
}

/// Ranked neighbor lists, one row per query.
///
/// In self mode (row `u` describes point `u` of the same dataset) no row ever
/// contains its own id. Rows are ordered by ascending comparator value, ties
/// by ascending id. Column 0 is the nearest neighbor.
#[derive(Debug, Clone, PartialEq)]
pub struct NeighborTable {
    k: usize,
    universe: usize,
    ids: Vec<u32>,
    distances: Option<Vec<f64>>,
    source: NeighborSource,
    metric: Option<Metric>,
    self_mode: bool,
    fallback_rows: Vec<usize>,
}

impl NeighborTable {
    pub(crate) fn from_parts(
        k: usize,
        universe: usize,
        ids: Vec<u32>,
        distances: Option<Vec<f64>>,
        source: NeighborSource,
        metric: Option<Metric>,
        self_mode: bool,
    ) -> Self {
        debug_assert!(k == 0 || ids.len() % k == 0);
        debug_assert!(distances.as_ref().is_none_or(|d| d.len() == ids.len()));
        Self {
            k,
            universe,
            ids,
            distances,
            source,
            metric,
            self_mode,
            fallback_rows: Vec::new(),
        }
    }

    pub(crate) fn set_fallback_rows(&mut self, rows: Vec<usize>) {
        self.fallback_rows = rows;
    }

    /// Wraps externally produced neighbor ids (for example, the output of a
    /// graph index) as a self-mode table over `universe` points.
    ///
    /// `ids` holds `universe` rows of width `width`. When `strip_self` is set,
    /// each row's own id is removed (rows without it lose their last entry),
    /// leaving `width - 1` columns; otherwise a row containing its own id is an
    /// error.
    pub fn imported(ids: Vec<u32>, width: usize, strip_self: bool) -> Result<Self> {
        if width == 0 || ids.len() % width != 0 {
            return Err(Error::InvalidTable(format!(
                "{} ids do not form rows of width {width}",
                ids.len()
            )));
        }
        let rows = ids.len() / width;
        if let Some(bad) = ids.iter().find(|&&v| v as usize >= rows) {
            return Err(Error::InvalidTable(format!(
                "neighbor id {bad} out of range for {rows} points"
            )));
        }
        let (ids, k) = if strip_self {
            if width < 2 {
                return Err(Error::InvalidTable(
                    "cannot strip self from rows of width 1".into(),
                ));
            }
            let mut out = Vec::with_capacity(rows * (width - 1));
            for (u, row) in ids.chunks_exact(width).enumerate() {
                let mut kept: Vec<u32> = row.iter().copied().filter(|&v| v as usize != u).collect();
                kept.truncate(width - 1);
                out.extend(kept);
            }
            (out, width - 1)
        } else {
            for (u, row) in ids.chunks_exact(width).enumerate() {
                if row.iter().any(|&v| v as usize == u) {
                    return Err(Error::InvalidTable(format!("row {u} contains its own id")));
                }
            }
            (ids, width)
        };
        Ok(Self::from_parts(
            k,
            rows,
            ids,
            None,
            NeighborSource::Imported,
            None,
            true,
        ))
    }

    /// Wraps externally produced neighbors of query rows (ground truth for a
    /// query set, say) over a dataset of `universe` points.
    pub fn imported_queries(ids: Vec<u32>, width: usize, universe: usize) -> Result<Self> {
        if width == 0 || ids.len() % width != 0 {
            return Err(Error::InvalidTable(format!(
                "{} ids do not form rows of width {width}",
                ids.len()
            )));
        }
        if let Some(bad) = ids.iter().find(|&&v| v as usize >= universe) {
            return Err(Error::InvalidTable(format!(
                "neighbor id {bad} out of range for {universe} points"
            )));
        }
        Ok(Self::from_parts(
            width,
            universe,
            ids,
            None,
            NeighborSource::Imported,
            None,
            false,
        ))
    }

    /// Neighbors stored per row.
    #[inline]
    pub fn k(&self) -> usize {
        self.k
    }

    /// Number of rows (queries, or points in self mode).
    #[inline]
    pub fn rows(&self) -> usize {
        if self.k == 0 {
            0
        } else {
            self.ids.len() / self.k
        }
    }

    /// Number of points the ids refer to.
    pub fn universe(&self) -> usize {
        self.universe
    }

    #[inline]
    pub fn neighbors(&self, row: usize) -> &[u32] {
        &self.ids[row * self.k..(row + 1) * self.k]
    }

    /// Nearest neighbor of `row` (column 0).
    #[inline]
    pub fn nearest(&self, row: usize) -> u32 {
        self.ids[row * self.k]
    }

    pub fn distances(&self, row: usize) -> Option<&[f64]> {
        self.distances
            .as_ref()
            .map(|d| &d[row * self.k..(row + 1) * self.k])
    }

    pub fn has_distances(&self) -> bool {
        self.distances.is_some()
    }

    pub fn ids(&self) -> &[u32] {
        &self.ids
    }

    pub fn source(&self) -> NeighborSource {
        self.source
    }

    /// Metric the table was computed under; `None` for matrix-oracle and
    /// imported tables.
    pub fn metric(&self) -> Option<Metric> {
        self.metric
    }

    pub fn is_self_mode(&self) -> bool {
        self.self_mode
    }

    /// Rows where the approximate search found no candidate in its probed
    /// clusters and fell back to an exhaustive scan.
    pub fn fallback_rows(&self) -> &[usize] {
        &self.fallback_rows
    }

    /// The first `k` columns as a new table.
    pub fn truncated(&self, k: usize) -> Result<Self> {
        if k == 0 || k > self.k {
            return Err(Error::KTooLarge { k, max: self.k });
        }
        let rows = self.rows();
        let mut ids = Vec::with_capacity(rows * k);
        let mut dist = self.distances.as_ref().map(|_| Vec::with_capacity(rows * k));
        for r in 0..rows {
            ids.extend_from_slice(&self.neighbors(r)[..k]);
            if let (Some(out), Some(d)) = (dist.as_mut(), self.distances(r)) {
                out.extend_from_slice(&d[..k]);
            }
        }
        let mut t = Self::from_parts(
            k,
            self.universe,
            ids,
            dist,
            self.source,
            self.metric,
            self.self_mode,
        );
        t.fallback_rows = self.fallback_rows.clone();
        Ok(t)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn query_import_checks_universe() {
        let t = NeighborTable::imported_queries(vec![0, 5, 5, 0], 2, 6).unwrap();
        assert_eq!(t.rows(), 2);
        assert_eq!(t.universe(), 6);
        assert!(!t.is_self_mode());
        assert!(NeighborTable::imported_queries(vec![6], 1, 6).is_err());
    }

    #[test]
    fn import_strips_self() {
        let ids = vec![0, 1, 1, 0, 2, 0];
        let t = NeighborTable::imported(ids, 2, true).unwrap();
        assert_eq!(t.k(), 1);
        assert_eq!(t.neighbors(0), &[1]);
        assert_eq!(t.neighbors(1), &[0]);
        assert_eq!(t.neighbors(2), &[0]);
        assert_eq!(t.source(), NeighborSource::Imported);
    }

    #[test]
    fn import_rejects_self_and_out_of_range() {
        assert!(NeighborTable::imported(vec![0, 0], 1, false).is_err());
        assert!(NeighborTable::imported(vec![1, 5], 1, false).is_err());
        assert!(NeighborTable::imported(vec![1, 0, 2], 2, false).is_err());
    }
}
