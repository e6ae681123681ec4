//! Classical internal quality measures used as comparators: the Dunn index
//! and the (optionally size-weighted) Davies-Bouldin index. Both use plain
//! Euclidean geometry whatever the dataset metric.

use rand::seq::index;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::dataset::Dataset;
use crate::error::{Error, Result};
use crate::metric::{squared_l2, Metric};
use crate::neighbors::NeighborTable;
use crate::partition::Clustering;

/// How the Dunn index measures the distance between two clusters.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DunnFlavor {
    /// Closest pair of points across the two clusters.
    #[default]
    SingleLinkage,
    /// Distance between the cluster means.
    CentroidLinkage,
}

impl DunnFlavor {
    pub fn name(self) -> &'static str {
        match self {
            DunnFlavor::SingleLinkage => "single_linkage",
            DunnFlavor::CentroidLinkage => "centroid_linkage",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct DunnConfig {
    pub flavor: DunnFlavor,
    /// Above this many points the index is computed on a seeded subsample.
    pub max_points: usize,
    pub seed: u64,
}

impl Default for DunnConfig {
    fn default() -> Self {
        Self {
            flavor: DunnFlavor::SingleLinkage,
            max_points: 200_000,
            seed: 0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DunnReport {
    pub value: f64,
    pub flavor: DunnFlavor,
    /// Smallest inter-cluster distance.
    pub inter: f64,
    /// Largest cluster diameter.
    pub diameter: f64,
    /// Points actually used; less than `m` when subsampled.
    pub points_used: usize,
    pub subsample_seed: Option<u64>,
}

/// Classical Dunn index: smallest single-linkage distance between clusters
/// over the largest cluster diameter.
pub fn dunn_index(data: &Dataset, c: &Clustering) -> Result<f64> {
    Ok(dunn_with(data, c, &DunnConfig::default(), None)?.value)
}

/// Dunn index with explicit settings.
///
/// A Euclidean neighbor table with distances (self mode, same dataset) lets
/// single linkage skip the all-pairs scan for most points: a point's first
/// neighbor in another cluster is its closest foreign point. The result is
/// identical with or without the table.
pub fn dunn_with(
    data: &Dataset,
    c: &Clustering,
    cfg: &DunnConfig,
    nn: Option<&NeighborTable>,
) -> Result<DunnReport> {
    check_lengths(data, c)?;
    let nonempty = c.nonempty_count();
    if nonempty < 2 {
        return Err(Error::FewerThanTwoClusters(nonempty));
    }
    if data.len() > cfg.max_points {
        let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
        let mut ids = index::sample(&mut rng, data.len(), cfg.max_points.max(2)).into_vec();
        ids.sort_unstable();
        let sub = data.subset(&ids)?;
        let assign = ids.iter().map(|&u| c.cluster_of(u)).collect();
        let sub_c = Clustering::new(assign, c.num_clusters())?;
        let mut report = dunn_with(&sub, &sub_c, &DunnConfig { max_points: usize::MAX, ..*cfg }, None)?;
        report.subsample_seed = Some(cfg.seed);
        return Ok(report);
    }

    let members = c.members();
    let diameter_sq = members
        .par_iter()
        .map(|g| {
            let mut best = 0.0f64;
            for (a, &u) in g.iter().enumerate() {
                for &v in &g[a + 1..] {
                    best = best.max(squared_l2(data.row(u), data.row(v)));
                }
            }
            best
        })
        .reduce(|| 0.0, f64::max);

    let inter_sq = match cfg.flavor {
        DunnFlavor::SingleLinkage => match nn.filter(|t| usable_table(t, data)) {
            Some(t) => single_linkage_with_table(data, c, t),
            None => single_linkage_brute(data, c),
        },
        DunnFlavor::CentroidLinkage => {
            let means = cluster_means(data, &members);
            let present: Vec<usize> = (0..means.len()).filter(|&i| !members[i].is_empty()).collect();
            let mut best = f64::INFINITY;
            for (a, &i) in present.iter().enumerate() {
                for &j in &present[a + 1..] {
                    best = best.min(sq_dist64(&means[i], &means[j]));
                }
            }
            best
        }
    };
    if diameter_sq == 0.0 {
        return Err(Error::DegenerateDiameterZero);
    }
    let inter = inter_sq.sqrt();
    let diameter = diameter_sq.sqrt();
    Ok(DunnReport {
        value: inter / diameter,
        flavor: cfg.flavor,
        inter,
        diameter,
        points_used: data.len(),
        subsample_seed: None,
    })
}

fn check_lengths(data: &Dataset, c: &Clustering) -> Result<()> {
    if data.len() != c.len() {
        return Err(Error::LengthMismatch {
            left: data.len(),
            right: c.len(),
        });
    }
    Ok(())
}

fn usable_table(t: &NeighborTable, data: &Dataset) -> bool {
    t.metric() == Some(Metric::Euclidean)
        && data.metric() == Metric::Euclidean
        && t.has_distances()
        && t.is_self_mode()
        && t.rows() == data.len()
        && t.k() >= 1
}

fn nearest_foreign_brute(data: &Dataset, assign: &[u32], u: usize) -> f64 {
    let cu = assign[u];
    let mut best = f64::INFINITY;
    for (v, &cv) in assign.iter().enumerate() {
        if cv != cu {
            best = best.min(squared_l2(data.row(u), data.row(v)));
        }
    }
    best
}

fn single_linkage_brute(data: &Dataset, c: &Clustering) -> f64 {
    let assign = c.assignment();
    (0..data.len())
        .into_par_iter()
        .map(|u| {
            let cu = assign[u];
            let mut best = f64::INFINITY;
            for v in u + 1..data.len() {
                if assign[v] != cu {
                    best = best.min(squared_l2(data.row(u), data.row(v)));
                }
            }
            best
        })
        .reduce(|| f64::INFINITY, f64::min)
}

fn single_linkage_with_table(data: &Dataset, c: &Clustering, t: &NeighborTable) -> f64 {
    let assign = c.assignment();
    let mut best = f64::INFINITY;
    // Points whose stored neighbors all share their cluster; their closest
    // foreign point is at least their k-th distance away.
    let mut unresolved = Vec::new();
    for u in 0..data.len() {
        let ids = t.neighbors(u);
        let dist = t.distances(u).expect("checked by usable_table");
        match ids.iter().position(|&v| assign[v as usize] != assign[u]) {
            Some(p) => best = best.min(dist[p]),
            None => unresolved.push((dist[dist.len() - 1], u)),
        }
    }
    let pending: Vec<usize> = unresolved
        .into_iter()
        .filter(|&(lower, _)| lower < best)
        .map(|(_, u)| u)
        .collect();
    let rest = pending
        .par_iter()
        .map(|&u| nearest_foreign_brute(data, assign, u))
        .reduce(|| f64::INFINITY, f64::min);
    best.min(rest)
}

fn cluster_means(data: &Dataset, members: &[Vec<usize>]) -> Vec<Vec<f64>> {
    members
        .iter()
        .map(|g| {
            let mut sum = vec![0.0f64; data.dim()];
            for &u in g {
                for (s, x) in sum.iter_mut().zip(data.row(u)) {
                    *s += f64::from(*x);
                }
            }
            let n = g.len().max(1) as f64;
            sum.iter_mut().for_each(|s| *s /= n);
            sum
        })
        .collect()
}

fn sq_dist64(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum()
}

fn dist_to_mean(p: &[f32], mean: &[f64]) -> f64 {
    p.iter()
        .zip(mean)
        .map(|(x, m)| {
            let d = f64::from(*x) - m;
            d * d
        })
        .sum::<f64>()
        .sqrt()
}

/// Cluster weights for the Davies-Bouldin average.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DbWeighting {
    /// The classical index.
    #[default]
    Uniform,
    /// Each cluster weighted by its size.
    BySize,
}

/// Davies-Bouldin index: weighted mean over clusters of the worst ratio
/// `(s_i + s_j) / d(mu_i, mu_j)`, where `s_i` is the mean distance of cluster
/// `i`'s members to its mean `mu_i`. Smaller is better. Empty clusters are
/// ignored.
pub fn db_index(data: &Dataset, c: &Clustering, weighting: DbWeighting) -> Result<f64> {
    check_lengths(data, c)?;
    let members = c.members();
    let present: Vec<usize> = (0..members.len()).filter(|&i| !members[i].is_empty()).collect();
    if present.len() < 2 {
        return Err(Error::FewerThanTwoClusters(present.len()));
    }
    let means = cluster_means(data, &members);
    let spread: Vec<f64> = members
        .par_iter()
        .zip(&means)
        .map(|(g, mu)| {
            if g.is_empty() {
                return 0.0;
            }
            g.iter().map(|&u| dist_to_mean(data.row(u), mu)).sum::<f64>() / g.len() as f64
        })
        .collect();
    let worst: Vec<f64> = present
        .par_iter()
        .map(|&i| {
            let mut best = f64::NEG_INFINITY;
            for &j in &present {
                if j == i {
                    continue;
                }
                let d = sq_dist64(&means[i], &means[j]).sqrt();
                if d == 0.0 {
                    return Err(Error::CoincidentCentroids(i.min(j), i.max(j)));
                }
                best = best.max((spread[i] + spread[j]) / d);
            }
            Ok(best)
        })
        .collect::<Result<_>>()?;
    let weight = |i: usize| match weighting {
        DbWeighting::Uniform => 1.0,
        DbWeighting::BySize => members[i].len() as f64,
    };
    // Normalizing the weights first makes equal-size clusters give the same
    // bits under either weighting.
    let den: f64 = present.iter().map(|&i| weight(i)).sum();
    Ok(present.iter().zip(&worst).map(|(&i, r)| weight(i) / den * r).sum())
}
