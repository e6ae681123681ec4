use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::dataset::Dataset;
use crate::error::{Error, Result};
use crate::ivf::IvfIndex;
use crate::kmeans::{kmeans, KMeansConfig, KMeansVariant};
use crate::metric::rank_order;
use crate::neighbors::Scorer;
use crate::neighbors::table::{NeighborSource, NeighborTable};
use crate::partition::Clustering;

/// Settings for the clustering-based approximate 1-NN table.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ApproxConfig {
    /// Number of clusters; `None` means `ceil(4 * sqrt(m))`.
    pub clusters: Option<usize>,
    /// Clusters scanned per point.
    pub probes: usize,
    /// KMeans rounds used to build the partition.
    pub iterations: usize,
    pub seed: u64,
}

impl Default for ApproxConfig {
    fn default() -> Self {
        Self {
            clusters: None,
            probes: 10,
            iterations: 10,
            seed: 0,
        }
    }
}

impl ApproxConfig {
    pub fn with_seed(seed: u64) -> Self {
        Self {
            seed,
            ..Self::default()
        }
    }

    pub fn resolved_clusters(&self, m: usize) -> usize {
        self.clusters
            .unwrap_or_else(|| (4.0 * (m as f64).sqrt()).ceil() as usize)
            .clamp(1, m)
    }
}

/// Approximate nearest neighbor of every point: partition with the KMeans
/// variant matching the metric, then scan only the `probes` clusters nearest
/// to each point.
pub fn approximate_1nn(data: &Dataset, cfg: &ApproxConfig) -> Result<NeighborTable> {
    let clusters = cfg.resolved_clusters(data.len());
    if cfg.probes == 0 || cfg.probes > clusters {
        return Err(Error::BadProbeCount {
            probes: cfg.probes,
            clusters,
        });
    }
    let km = KMeansConfig::new(
        KMeansVariant::for_metric(data.metric()),
        clusters,
        cfg.iterations,
        cfg.seed,
    );
    let clustering = kmeans(data, &km)?;
    approximate_1nn_with(data, &clustering, cfg.probes)
}

/// As [`approximate_1nn`] over a caller-supplied partition.
///
/// The point itself is never returned. If every probed cluster holds only
/// the point itself, that row falls back to an exhaustive scan and is listed
/// in [`NeighborTable::fallback_rows`].
pub fn approximate_1nn_with(
    data: &Dataset,
    clustering: &Clustering,
    probes: usize,
) -> Result<NeighborTable> {
    let index = IvfIndex::build(data, clustering)?;
    if probes == 0 || probes > index.num_clusters() {
        return Err(Error::BadProbeCount {
            probes,
            clusters: index.num_clusters(),
        });
    }
    let scorer = Scorer::new(data)?;
    let m = data.len();
    let rows: Vec<((f64, u32), bool)> = (0..m)
        .into_par_iter()
        .map(|u| -> Result<((f64, u32), bool)> {
            let q = scorer.prepare(data.row(u))?;
            let mut best: Option<(f64, u32)> = None;
            for cluster in index.route(data.row(u), probes)? {
                for &v in &index.postings()[cluster] {
                    if v as usize == u {
                        continue;
                    }
                    let cand = (scorer.score(&q, v as usize), v);
                    if best.is_none_or(|b| rank_order(cand, b).is_lt()) {
                        best = Some(cand);
                    }
                }
            }
            match best {
                Some(b) => Ok((b, false)),
                None => {
                    let b = (0..m)
                        .filter(|&v| v != u)
                        .map(|v| (scorer.score(&q, v), v as u32))
                        .min_by(|a, b| rank_order(*a, *b))
                        .expect("at least two points");
                    Ok((b, true))
                }
            }
        })
        .collect::<Result<_>>()?;
    let fallback: Vec<usize> = rows
        .iter()
        .enumerate()
        .filter(|(_, r)| r.1)
        .map(|(u, _)| u)
        .collect();
    let (ids, dist) = rows.iter().map(|((d, id), _)| (*id, *d)).unzip();
    let mut table = NeighborTable::from_parts(
        1,
        m,
        ids,
        Some(dist),
        NeighborSource::Approximate,
        Some(data.metric()),
        true,
    );
    table.set_fallback_rows(fallback);
    Ok(table)
}
