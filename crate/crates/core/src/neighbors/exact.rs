use rayon::prelude::*;

use crate::dataset::{Dataset, Matrix};
use crate::error::{Error, Result};
use crate::metric::{self, cosine_from_parts, rank_order, Metric};
use crate::neighbors::table::{NeighborSource, NeighborTable, MAX_K};

/// Scores a query against points of one dataset, caching norms for cosine.
pub(crate) struct Scorer<'a> {
    data: &'a Dataset,
    norms: Option<Vec<f64>>,
}

pub(crate) struct PreparedQuery<'q> {
    vector: &'q [f32],
    norm: f64,
}

impl<'a> Scorer<'a> {
    pub(crate) fn new(data: &'a Dataset) -> Result<Self> {
        let norms = if data.metric() == Metric::Cosine {
            data.check_nonzero_rows()?;
            Some(data.norms())
        } else {
            None
        };
        Ok(Self { data, norms })
    }

    pub(crate) fn prepare<'q>(&self, q: &'q [f32]) -> Result<PreparedQuery<'q>> {
        if q.len() != self.data.dim() {
            return Err(Error::DimMismatch {
                expected: self.data.dim(),
                got: q.len(),
            });
        }
        let norm = if self.norms.is_some() {
            let n = metric::norm(q);
            if n == 0.0 {
                return Err(Error::ZeroVector { row: None });
            }
            n
        } else {
            0.0
        };
        Ok(PreparedQuery { vector: q, norm })
    }

    #[inline]
    pub(crate) fn score(&self, q: &PreparedQuery<'_>, id: usize) -> f64 {
        let p = self.data.row(id);
        match self.data.metric() {
            Metric::Euclidean => metric::squared_l2(q.vector, p),
            Metric::InnerProduct => -metric::dot(q.vector, p),
            Metric::Cosine => {
                let norms = self.norms.as_ref().expect("cosine scorer caches norms");
                cosine_from_parts(metric::dot(q.vector, p), q.norm, norms[id])
            }
        }
    }
}

/// Keeps the `k` best `(value, id)` pairs of `buf`, sorted by the global rule.
pub(crate) fn select_top_k(buf: &mut Vec<(f64, u32)>, k: usize) {
    if k == 0 {
        buf.clear();
        return;
    }
    if buf.len() > k {
        buf.select_nth_unstable_by(k - 1, |a, b| rank_order(*a, *b));
        buf.truncate(k);
    }
    buf.sort_unstable_by(|a, b| rank_order(*a, *b));
}

fn check_k(k: usize, available: usize) -> Result<()> {
    let max = available.min(MAX_K);
    if k == 0 || k > max {
        return Err(Error::KTooLarge { k, max });
    }
    Ok(())
}

fn assemble(rows: Vec<Vec<(f64, u32)>>, k: usize) -> (Vec<u32>, Vec<f64>) {
    let mut ids = Vec::with_capacity(rows.len() * k);
    let mut dist = Vec::with_capacity(rows.len() * k);
    for row in rows {
        for (d, id) in row {
            ids.push(id);
            dist.push(d);
        }
    }
    (ids, dist)
}

/// Exact `k` nearest neighbors of every point among the other points.
///
/// Row `u` never contains `u` itself; value-duplicates of `u` are ordinary
/// neighbors. Rows are computed independently, so the output does not depend
/// on the number of worker threads.
pub fn exact_knn(data: &Dataset, k: usize) -> Result<NeighborTable> {
    let m = data.len();
    check_k(k, m - 1)?;
    let scorer = Scorer::new(data)?;
    let rows: Vec<Vec<(f64, u32)>> = (0..m)
        .into_par_iter()
        .map_init(
            || Vec::with_capacity(m),
            |buf: &mut Vec<(f64, u32)>, u| {
                let q = scorer.prepare(data.row(u)).expect("dataset rows are valid queries");
                buf.clear();
                buf.extend(
                    (0..m)
                        .filter(|&v| v != u)
                        .map(|v| (scorer.score(&q, v), v as u32)),
                );
                select_top_k(buf, k);
                buf.clone()
            },
        )
        .collect();
    let (ids, dist) = assemble(rows, k);
    Ok(NeighborTable::from_parts(
        k,
        m,
        ids,
        Some(dist),
        NeighborSource::Exact,
        Some(data.metric()),
        true,
    ))
}

/// Exact `k` nearest dataset points for each external query row.
pub fn exact_knn_queries(data: &Dataset, queries: &Matrix, k: usize) -> Result<NeighborTable> {
    let m = data.len();
    check_k(k, m)?;
    if !queries.is_empty() && queries.dim() != data.dim() {
        return Err(Error::DimMismatch {
            expected: data.dim(),
            got: queries.dim(),
        });
    }
    let scorer = Scorer::new(data)?;
    let rows: Vec<Vec<(f64, u32)>> = (0..queries.len())
        .into_par_iter()
        .map_init(
            || Vec::with_capacity(m),
            |buf: &mut Vec<(f64, u32)>, qi| -> Result<Vec<(f64, u32)>> {
                let q = scorer
                    .prepare(queries.row(qi))
                    .map_err(|e| match e {
                        Error::ZeroVector { .. } => Error::ZeroVector { row: Some(qi) },
                        other => other,
                    })?;
                buf.clear();
                buf.extend((0..m).map(|v| (scorer.score(&q, v), v as u32)));
                select_top_k(buf, k);
                Ok(buf.clone())
            },
        )
        .collect::<Result<_>>()?;
    let (ids, dist) = assemble(rows, k);
    Ok(NeighborTable::from_parts(
        k,
        m,
        ids,
        Some(dist),
        NeighborSource::Exact,
        Some(data.metric()),
        false,
    ))
}
