//! Clustering-based approximate nearest neighbor search (inverted file).
//!
//! The index routes a query to the `nprobe` clusters whose centroids are
//! nearest under the dataset metric and scans those clusters exactly.

use std::collections::HashSet;

use rayon::prelude::*;
use serde::Serialize;

use crate::dataset::{Dataset, Matrix};
use crate::error::{Error, Result};
use crate::metric::{self, cosine_from_parts, rank_order, Metric};
use crate::neighbors::{select_top_k, Scorer};
use crate::neighbors::NeighborTable;
use crate::partition::Clustering;

pub struct IvfIndex<'a> {
    data: &'a Dataset,
    scorer: Scorer<'a>,
    centroids: Matrix,
    centroid_norms: Vec<f64>,
    postings: Vec<Vec<u32>>,
}

/// Ids returned by one search, best first.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SearchResult {
    pub ids: Vec<u32>,
    /// The probed clusters held fewer than `k` points.
    pub short: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AccuracyRow {
    pub k: usize,
    pub nprobe: usize,
    pub accuracy: f64,
    /// Queries whose probed clusters held fewer than `k` points.
    pub short_results: usize,
}

/// Cluster means, normalized for angular metrics. Empty clusters get a zero
/// vector.
pub fn cluster_means(data: &Dataset, c: &Clustering) -> Result<Matrix> {
    if c.len() != data.len() {
        return Err(Error::LengthMismatch {
            left: c.len(),
            right: data.len(),
        });
    }
    let dim = data.dim();
    let mut rows = Vec::with_capacity(c.num_clusters());
    for ids in c.members() {
        let mut sum = vec![0.0f64; dim];
        for &i in &ids {
            for (s, x) in sum.iter_mut().zip(data.row(i)) {
                *s += *x as f64;
            }
        }
        let n = ids.len().max(1) as f64;
        sum.iter_mut().for_each(|s| *s /= n);
        if data.metric().is_angular() {
            let norm = sum.iter().map(|s| s * s).sum::<f64>().sqrt();
            if norm > 0.0 {
                sum.iter_mut().for_each(|s| *s /= norm);
            }
        }
        rows.push(sum.into_iter().map(|s| s as f32).collect::<Vec<f32>>());
    }
    Matrix::from_rows(&rows)
}

impl<'a> IvfIndex<'a> {
    /// Postings mirror the assignment exactly; centroids come from the
    /// clustering or, when absent, from [`cluster_means`].
    pub fn build(data: &'a Dataset, c: &Clustering) -> Result<Self> {
        if c.len() != data.len() {
            return Err(Error::LengthMismatch {
                left: c.len(),
                right: data.len(),
            });
        }
        let centroids = match c.centroids() {
            Some(m) => {
                if m.dim() != data.dim() {
                    return Err(Error::DimMismatch {
                        expected: data.dim(),
                        got: m.dim(),
                    });
                }
                m.clone()
            }
            None => cluster_means(data, c)?,
        };
        let centroid_norms = centroids.rows().map(metric::norm).collect();
        let mut postings = vec![Vec::new(); c.num_clusters()];
        for (u, &cl) in c.assignment().iter().enumerate() {
            postings[cl as usize].push(u as u32);
        }
        Ok(Self {
            data,
            scorer: Scorer::new(data)?,
            centroids,
            centroid_norms,
            postings,
        })
    }

    pub fn num_clusters(&self) -> usize {
        self.postings.len()
    }

    pub fn postings(&self) -> &[Vec<u32>] {
        &self.postings
    }

    pub fn centroids(&self) -> &Matrix {
        &self.centroids
    }

    pub fn data(&self) -> &Dataset {
        self.data
    }

    fn centroid_order(&self, q: &[f32]) -> Result<Vec<(f64, u32)>> {
        if q.len() != self.data.dim() {
            return Err(Error::DimMismatch {
                expected: self.data.dim(),
                got: q.len(),
            });
        }
        let qn = match self.data.metric() {
            Metric::Cosine => {
                let n = metric::norm(q);
                if n == 0.0 {
                    return Err(Error::ZeroVector { row: None });
                }
                n
            }
            _ => 0.0,
        };
        let mut order: Vec<(f64, u32)> = self
            .centroids
            .rows()
            .enumerate()
            .map(|(j, c)| {
                let v = match self.data.metric() {
                    Metric::Euclidean => metric::squared_l2(q, c),
                    Metric::InnerProduct => -metric::dot(q, c),
                    Metric::Cosine if self.centroid_norms[j] == 0.0 => f64::INFINITY,
                    Metric::Cosine => cosine_from_parts(metric::dot(q, c), qn, self.centroid_norms[j]),
                };
                (v, j as u32)
            })
            .collect();
        order.sort_unstable_by(|a, b| rank_order(*a, *b));
        Ok(order)
    }

    /// The `probes` clusters whose centroids are nearest to `q`, best first.
    pub fn route(&self, q: &[f32], probes: usize) -> Result<Vec<usize>> {
        self.check_probes(probes)?;
        let order = self.centroid_order(q)?;
        Ok(order[..probes].iter().map(|(_, j)| *j as usize).collect())
    }

    fn check_probes(&self, probes: usize) -> Result<()> {
        if probes == 0 || probes > self.num_clusters() {
            return Err(Error::BadProbeCount {
                probes,
                clusters: self.num_clusters(),
            });
        }
        Ok(())
    }

    /// Exact top-`k` among the points of the `probes` nearest clusters.
    pub fn search(&self, q: &[f32], k: usize, probes: usize) -> Result<SearchResult> {
        Ok(self.search_sweep(q, k, &[probes])?.pop().unwrap())
    }

    /// One search per entry of `probes`, sharing the scanned candidates.
    /// Because routing is prefix-consistent, the result for a larger probe
    /// count always scans a superset of the candidates for a smaller one.
    pub fn search_sweep(&self, q: &[f32], k: usize, probes: &[usize]) -> Result<Vec<SearchResult>> {
        if k == 0 {
            return Err(Error::KTooLarge { k, max: self.data.len() });
        }
        for &p in probes {
            self.check_probes(p)?;
        }
        let order = self.centroid_order(q)?;
        let pq = self.scorer.prepare(q)?;
        let mut sorted: Vec<(usize, usize)> = probes.iter().copied().enumerate().map(|(i, p)| (p, i)).collect();
        sorted.sort_unstable();
        let mut out = vec![None; probes.len()];
        let mut candidates: Vec<(f64, u32)> = Vec::new();
        let mut scanned = 0;
        let mut scratch = Vec::new();
        for (p, slot) in sorted {
            while scanned < p {
                let cluster = order[scanned].1 as usize;
                candidates.extend(
                    self.postings[cluster]
                        .iter()
                        .map(|&id| (self.scorer.score(&pq, id as usize), id)),
                );
                scanned += 1;
            }
            scratch.clear();
            scratch.extend_from_slice(&candidates);
            select_top_k(&mut scratch, k);
            out[slot] = Some(SearchResult {
                ids: scratch.iter().map(|(_, id)| *id).collect(),
                short: candidates.len() < k,
            });
        }
        Ok(out.into_iter().map(Option::unwrap).collect())
    }

    /// Mean accuracy of every `(k, nprobe)` combination over a query set,
    /// scored against exact ground truth with at least `max(ks)` columns.
    pub fn evaluate(
        &self,
        queries: &Matrix,
        ground_truth: &NeighborTable,
        ks: &[usize],
        probes: &[usize],
    ) -> Result<Vec<AccuracyRow>> {
        if ground_truth.rows() != queries.len() {
            return Err(Error::LengthMismatch {
                left: ground_truth.rows(),
                right: queries.len(),
            });
        }
        let kmax = ks.iter().copied().max().unwrap_or(0);
        if kmax == 0 || kmax > ground_truth.k() {
            return Err(Error::KTooLarge {
                k: kmax,
                max: ground_truth.k(),
            });
        }
        let per_query: Vec<Vec<SearchResult>> = (0..queries.len())
            .into_par_iter()
            .map(|qi| self.search_sweep(queries.row(qi), kmax, probes))
            .collect::<Result<_>>()?;
        let gt: Vec<Vec<u32>> = (0..queries.len())
            .map(|qi| ground_truth.neighbors(qi).to_vec())
            .collect();
        let mut rows = Vec::new();
        for &k in ks {
            for (pi, &p) in probes.iter().enumerate() {
                let results: Vec<Vec<u32>> = per_query
                    .iter()
                    .map(|r| r[pi].ids.iter().take(k).copied().collect())
                    .collect();
                let short = per_query.iter().filter(|r| r[pi].ids.len() < k).count();
                rows.push(AccuracyRow {
                    k,
                    nprobe: p,
                    accuracy: accuracy(&results, &gt, k)?,
                    short_results: short,
                });
            }
        }
        Ok(rows)
    }
}

/// Mean over queries of `|S ∩ S'| / k`, matching by id. Missing result
/// entries count as misses; ground truth must have at least `k` entries.
pub fn accuracy<R: AsRef<[u32]>, G: AsRef<[u32]>>(
    results: &[R],
    ground_truth: &[G],
    k: usize,
) -> Result<f64> {
    if results.len() != ground_truth.len() {
        return Err(Error::LengthMismatch {
            left: results.len(),
            right: ground_truth.len(),
        });
    }
    if k == 0 {
        return Err(Error::InvalidConfig("k must be at least 1".into()));
    }
    if results.is_empty() {
        return Err(Error::EmptySet);
    }
    let mut total = 0.0;
    for (r, g) in results.iter().zip(ground_truth) {
        let g = g.as_ref();
        if g.len() < k {
            return Err(Error::LengthMismatch {
                left: g.len(),
                right: k,
            });
        }
        let truth: HashSet<u32> = g[..k].iter().copied().collect();
        let r = r.as_ref();
        let hits = r[..r.len().min(k)]
            .iter()
            .filter(|id| truth.contains(id))
            .count();
        total += hits as f64 / k as f64;
    }
    Ok(total / results.len() as f64)
}
