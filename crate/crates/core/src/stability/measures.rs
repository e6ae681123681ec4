use rand::seq::index;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::neighbors::NeighborTable;
use crate::partition::Clustering;
use crate::stats::{lower_quantile, mean};

fn check_table(nn: &NeighborTable) -> Result<()> {
    if nn.k() == 0 {
        return Err(Error::InvalidTable("table stores no neighbors".into()));
    }
    if !nn.is_self_mode() {
        return Err(Error::InvalidTable(
            "stability measures need a self-mode table over the full dataset".into(),
        ));
    }
    Ok(())
}

/// Fraction of `members` whose nearest neighbor (column 0 of `nn`, computed
/// over the whole dataset) also lies in `members`. Duplicate ids count once.
pub fn set_nsm(nn: &NeighborTable, members: &[usize]) -> Result<f64> {
    check_table(nn)?;
    if members.is_empty() {
        return Err(Error::EmptySet);
    }
    let rows = nn.rows();
    if let Some(&id) = members.iter().find(|&&u| u >= rows) {
        return Err(Error::MissingRows { id, rows });
    }
    let mut set = members.to_vec();
    set.sort_unstable();
    set.dedup();
    let inside = set
        .iter()
        .filter(|&&u| set.binary_search(&(nn.nearest(u) as usize)).is_ok())
        .count();
    Ok(inside as f64 / set.len() as f64)
}

/// Per-clustering stability with the bookkeeping the reports need.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ClusteringNsm {
    pub value: f64,
    /// Set-NSM of each cluster; `None` for empty clusters.
    pub per_cluster: Vec<Option<f64>>,
    pub weight_scheme: String,
    /// Empty clusters, which contribute nothing.
    pub empty_clusters: Vec<usize>,
}

/// Weighted mean of the set-NSM of every cluster. Runs in `O(m + L)` given
/// the neighbor table.
pub fn clustering_nsm(nn: &NeighborTable, c: &Clustering) -> Result<f64> {
    Ok(clustering_nsm_detailed(nn, c)?.value)
}

pub fn clustering_nsm_detailed(nn: &NeighborTable, c: &Clustering) -> Result<ClusteringNsm> {
    clustering_nsm_counted(nn, c).map(|(r, _)| r)
}

/// Returns the result together with the number of elementary steps taken.
pub(crate) fn clustering_nsm_counted(
    nn: &NeighborTable,
    c: &Clustering,
) -> Result<(ClusteringNsm, usize)> {
    check_table(nn)?;
    if nn.rows() != c.len() {
        return Err(Error::LengthMismatch {
            left: nn.rows(),
            right: c.len(),
        });
    }
    let l = c.num_clusters();
    let assign = c.assignment();
    let mut steps = 0usize;
    let mut sizes = vec![0usize; l];
    let mut inside = vec![0usize; l];
    for (u, &cu) in assign.iter().enumerate() {
        steps += 1;
        sizes[cu as usize] += 1;
        if assign[nn.nearest(u) as usize] == cu {
            inside[cu as usize] += 1;
        }
    }
    let weights = c.resolved_weights();
    let mut num = 0.0;
    let mut den = 0.0;
    let mut per_cluster = Vec::with_capacity(l);
    let mut empty = Vec::new();
    for i in 0..l {
        steps += 1;
        if sizes[i] == 0 {
            per_cluster.push(None);
            empty.push(i);
            continue;
        }
        let s = inside[i] as f64 / sizes[i] as f64;
        per_cluster.push(Some(s));
        num += weights[i] * s;
        den += weights[i];
    }
    if den == 0.0 {
        return Err(Error::AllClustersEmpty);
    }
    Ok((
        ClusteringNsm {
            value: num / den,
            per_cluster,
            weight_scheme: c.weight_scheme().name().to_string(),
            empty_clusters: empty,
        },
        steps,
    ))
}

/// The ball of radius `r` around `u`: `u` followed by its `r - 1` nearest
/// neighbors.
pub fn ball(nn: &NeighborTable, u: usize, r: usize) -> Result<Vec<usize>> {
    if r < 2 {
        return Err(Error::RadiusTooSmall(r));
    }
    if r - 1 > nn.k() {
        return Err(Error::RadiusTooLarge {
            radius: r,
            needed: r - 1,
            k: nn.k(),
        });
    }
    if u >= nn.rows() {
        return Err(Error::MissingRows { id: u, rows: nn.rows() });
    }
    let mut out = Vec::with_capacity(r);
    out.push(u);
    out.extend(nn.neighbors(u)[..r - 1].iter().map(|&v| v as usize));
    Ok(out)
}

/// Set-NSM of the ball of radius `r` around `u`.
pub fn point_nsm(nn: &NeighborTable, u: usize, r: usize) -> Result<f64> {
    check_table(nn)?;
    set_nsm(nn, &ball(nn, u, r)?)
}

/// Point-NSM values of a uniform sample of points.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PointNsmDistribution {
    pub radius: usize,
    pub sample_fraction: f64,
    pub seed: u64,
    /// Sampled point ids, ascending.
    pub ids: Vec<usize>,
    pub values: Vec<f64>,
    pub mean: f64,
    /// `(alpha, lower empirical alpha-quantile)` pairs; always includes 0.1.
    pub quantiles: Vec<(f64, f64)>,
}

impl PointNsmDistribution {
    pub fn quantile(&self, alpha: f64) -> Option<f64> {
        self.quantiles
            .iter()
            .find(|(a, _)| (*a - alpha).abs() < 1e-12)
            .map(|(_, q)| *q)
    }
}

/// Number of points drawn for a sampling fraction: `round(f * m)`, at least 1.
pub fn sample_size(m: usize, fraction: f64) -> usize {
    ((fraction * m as f64).round() as usize).clamp(1, m)
}

/// Point-NSM over a seeded uniform sample (without replacement) of the
/// table's points. Extra quantile levels can be requested; 0.1 is always
/// reported.
pub fn point_nsm_distribution(
    nn: &NeighborTable,
    r: usize,
    sample_fraction: f64,
    seed: u64,
    extra_quantiles: &[f64],
) -> Result<PointNsmDistribution> {
    check_table(nn)?;
    if !(sample_fraction > 0.0 && sample_fraction <= 1.0) {
        return Err(Error::InvalidConfig(format!(
            "sample fraction {sample_fraction} outside (0, 1]"
        )));
    }
    if r < 2 {
        return Err(Error::RadiusTooSmall(r));
    }
    if r - 1 > nn.k() {
        return Err(Error::RadiusTooLarge {
            radius: r,
            needed: r - 1,
            k: nn.k(),
        });
    }
    let m = nn.rows();
    let n = sample_size(m, sample_fraction);
    let mut ids = if n == m {
        (0..m).collect()
    } else {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        index::sample(&mut rng, m, n).into_vec()
    };
    ids.sort_unstable();
    let values: Vec<f64> = ids
        .par_iter()
        .map(|&u| point_nsm(nn, u, r))
        .collect::<Result<_>>()?;
    let mut levels = vec![0.1];
    for &a in extra_quantiles {
        if !(0.0..=1.0).contains(&a) {
            return Err(Error::InvalidConfig(format!("quantile level {a} outside [0, 1]")));
        }
        if !levels.iter().any(|l: &f64| (l - a).abs() < 1e-12) {
            levels.push(a);
        }
    }
    let quantiles = levels
        .iter()
        .map(|&a| Ok((a, lower_quantile(&values, a)?)))
        .collect::<Result<_>>()?;
    Ok(PointNsmDistribution {
        radius: r,
        sample_fraction,
        seed,
        mean: mean(&values)?,
        ids,
        values,
        quantiles,
    })
}

/// Threshold `mean - sqrt(ln(1/eps) / (2L))` below which a ball-cover
/// clustering's NSM falls with probability at most `eps`. May be negative.
///
/// # Panics
///
/// If `num_clusters` is zero or `eps` is outside `(0, 1]`.
pub fn clusterability_tail_bound(mean_point_nsm: f64, num_clusters: usize, eps: f64) -> f64 {
    assert!(num_clusters >= 1, "need at least one cluster");
    assert!(eps > 0.0 && eps <= 1.0, "eps must lie in (0, 1]");
    mean_point_nsm - ((1.0 / eps).ln() / (2.0 * num_clusters as f64)).sqrt()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dataset::Dataset;
    use crate::metric::Metric;
    use crate::neighbors::exact_knn;

    fn table(xs: &[f32], k: usize) -> NeighborTable {
        let rows: Vec<[f32; 1]> = xs.iter().map(|x| [*x]).collect();
        exact_knn(&Dataset::from_rows(&rows, Metric::Euclidean).unwrap(), k).unwrap()
    }

    const X_LINE: [f32; 4] = [0.0, 1.0, 10.0, 11.0];
    const X6: [f32; 6] = [0.0, 1.0, 2.0, 10.0, 11.0, 12.0];

    #[test]
    fn set_nsm_examples() {
        let nn = table(&X_LINE, 1);
        assert_eq!(set_nsm(&nn, &[0, 1]).unwrap(), 1.0);
        assert_eq!(set_nsm(&nn, &[1, 2]).unwrap(), 0.0);
        assert_eq!(set_nsm(&nn, &[0, 1, 2]).unwrap(), 2.0 / 3.0);
        assert!(matches!(set_nsm(&nn, &[]), Err(Error::EmptySet)));
        assert!(matches!(set_nsm(&nn, &[9]), Err(Error::MissingRows { .. })));
    }

    #[test]
    fn clustering_nsm_examples() {
        let nn = table(&X_LINE, 1);
        let c = |g: &[Vec<usize>]| Clustering::from_groups(g, 4).unwrap();
        assert_eq!(clustering_nsm(&nn, &c(&[vec![0, 1], vec![2, 3]])).unwrap(), 1.0);
        assert_eq!(clustering_nsm(&nn, &c(&[vec![0, 2], vec![1, 3]])).unwrap(), 0.0);
        assert_eq!(clustering_nsm(&nn, &c(&[vec![0, 1, 2], vec![3]])).unwrap(), 0.5);
    }

    #[test]
    fn trivial_clusterings() {
        let nn = table(&X6, 1);
        let singletons = Clustering::new((0..6).collect(), 6).unwrap();
        assert_eq!(clustering_nsm(&nn, &singletons).unwrap(), 0.0);
        let one = Clustering::new(vec![0; 6], 1).unwrap();
        assert_eq!(clustering_nsm(&nn, &one).unwrap(), 1.0);
    }

    #[test]
    fn empty_clusters_are_skipped_and_reported() {
        let nn = table(&X_LINE, 1);
        let c = Clustering::new(vec![0, 0, 2, 2], 3).unwrap();
        let r = clustering_nsm_detailed(&nn, &c).unwrap();
        assert_eq!(r.value, 1.0);
        assert_eq!(r.empty_clusters, vec![1]);
        assert_eq!(r.per_cluster[1], None);
    }

    #[test]
    fn work_is_linear() {
        let xs: Vec<f32> = (0..200).map(|i| ((i * 7919) % 1000) as f32).collect();
        let nn = table(&xs, 1);
        let c = Clustering::new((0..200).map(|i| (i % 13) as u32).collect(), 13).unwrap();
        let (_, steps) = clustering_nsm_counted(&nn, &c).unwrap();
        assert_eq!(steps, 200 + 13);
    }

    #[test]
    fn point_nsm_examples() {
        let nn = table(&X6, 2);
        assert_eq!(point_nsm(&nn, 0, 3).unwrap(), 1.0);
        assert_eq!(point_nsm(&nn, 2, 2).unwrap(), 0.5);
        // 0 and 1 are mutual nearest neighbors on X_line
        let nn = table(&X_LINE, 1);
        assert_eq!(point_nsm(&nn, 0, 2).unwrap(), 1.0);
        assert!(matches!(point_nsm(&nn, 0, 3), Err(Error::RadiusTooLarge { .. })));
        assert!(matches!(point_nsm(&nn, 0, 1), Err(Error::RadiusTooSmall(1))));
    }

    #[test]
    fn full_distribution_on_x6() {
        let nn = table(&X6, 2);
        let dist = point_nsm_distribution(&nn, 3, 1.0, 7, &[0.5]).unwrap();
        assert_eq!(dist.ids, vec![0, 1, 2, 3, 4, 5]);
        // balls: {0,1,2} {1,0,2} {2,1,0} and mirrored, all stable
        let direct: Vec<f64> = (0..6).map(|u| point_nsm(&nn, u, 3).unwrap()).collect();
        assert_eq!(dist.values, direct);
        assert_eq!(dist.mean, direct.iter().sum::<f64>() / 6.0);
        assert!(dist.quantile(0.1).is_some() && dist.quantile(0.5).is_some());
    }

    #[test]
    fn distribution_values_are_multiples_of_one_over_r() {
        let xs: Vec<f32> = (0..300).map(|i| ((i * 7919) % 1009) as f32 * 0.1).collect();
        let nn = table(&xs, 7);
        let d = point_nsm_distribution(&nn, 8, 0.2, 3, &[]).unwrap();
        assert_eq!(d.values.len(), 60);
        for v in d.values {
            assert!((0.0..=1.0).contains(&v));
            assert!(((v * 8.0) - (v * 8.0).round()).abs() < 1e-12);
        }
    }

    #[test]
    fn tail_bound() {
        let b = clusterability_tail_bound(0.8, 50, 0.01);
        assert!((b - (0.8 - (100f64.ln() / 100.0).sqrt())).abs() < 1e-15);
        // 0.8 - sqrt(4.605170 / 100) = 0.8 - 0.214597
        assert!((b - 0.585403).abs() < 1e-6);
        assert_eq!(clusterability_tail_bound(0.8, 50, 1.0), 0.8);
        let mut prev = f64::NEG_INFINITY;
        for l in [1, 10, 100, 1000, 100_000] {
            let b = clusterability_tail_bound(0.8, l, 0.05);
            assert!(b > prev && b < 0.8);
            prev = b;
        }
    }
}
