//! The correlation experiment: cluster a dataset several ways, score each
//! clustering with every internal measure and with IVF search accuracy, then
//! rank-correlate the measures against accuracy.

use std::collections::BTreeMap;

use rand::seq::index;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::baselines::{db_index, dunn_with, DbWeighting, DunnConfig};
use crate::dataset::{Dataset, Matrix};
use crate::error::{Error, Result};
use crate::ivf::IvfIndex;
use crate::kmeans::{default_num_clusters, kmeans_checkpoints, KMeansConfig, KMeansVariant};
use crate::neighbors::{approximate_1nn, exact_knn, exact_knn_queries, ApproxConfig, NeighborTable};
use crate::partition::Clustering;
use crate::stability::clustering_nsm;
use crate::stats::{homogeneity, mutual_information, negate_for_lower_better, spearman_with, PermutationConfig};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProtocolConfig {
    pub seed: u64,
    /// Clusters as `round(t * sqrt(m))` of the base set.
    pub cluster_factor: f64,
    /// Overrides `cluster_factor`.
    pub num_clusters: Option<usize>,
    /// With labels, use the number of distinct classes as the cluster count.
    pub clusters_from_labels: bool,
    pub variants: Vec<KMeansVariant>,
    pub iterations: Vec<usize>,
    pub ks: Vec<usize>,
    /// Probe counts; empty means `[1]`, or the full sweep when `sweep` is set.
    pub nprobe: Vec<usize>,
    /// Probe `1..=ceil(0.05 L)` and `L`.
    pub sweep: bool,
    /// Queries split off the dataset when none are supplied.
    pub held_out_queries: usize,
    /// Width of the exact neighbor table shared by every clustering.
    pub table_k: usize,
    pub approximate: Option<ApproxConfig>,
    pub dunn: DunnConfig,
    pub permutation: PermutationConfig,
}

impl Default for ProtocolConfig {
    fn default() -> Self {
        Self {
            seed: 0,
            cluster_factor: 1.0,
            num_clusters: None,
            clusters_from_labels: false,
            variants: vec![KMeansVariant::Standard, KMeansVariant::Spherical],
            iterations: vec![5, 10, 20, 40],
            ks: vec![5, 10],
            nprobe: Vec::new(),
            sweep: false,
            held_out_queries: 1000,
            table_k: 32,
            approximate: Some(ApproxConfig::default()),
            dunn: DunnConfig::default(),
            permutation: PermutationConfig::default(),
        }
    }
}

/// Per-clustering measures, one row per `(k, nprobe)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunRow {
    pub dataset: String,
    pub clustering: String,
    pub variant: String,
    pub iterations: usize,
    pub iterations_run: usize,
    pub num_clusters: usize,
    pub k: usize,
    pub nprobe: usize,
    pub accuracy: f64,
    pub nsm: f64,
    pub nsm_approx: Option<f64>,
    pub dunn: Option<f64>,
    pub db: Option<f64>,
    pub db_weighted: Option<f64>,
    pub mutual_information: Option<f64>,
    pub homogeneity: Option<f64>,
}

impl RunRow {
    /// Value of a measure column by name.
    pub fn value(&self, name: &str) -> Option<f64> {
        match name {
            "accuracy" => Some(self.accuracy),
            "nsm" => Some(self.nsm),
            "nsm_approx" => self.nsm_approx,
            "dunn" => self.dunn,
            "db" => self.db,
            "db_weighted" | "db-weighted" => self.db_weighted,
            "mutual_information" => self.mutual_information,
            "homogeneity" => self.homogeneity,
            _ => None,
        }
    }
}

/// One `(measure, accuracy)` pair; the long form of [`RunRow`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PairRow {
    pub dataset: String,
    pub clustering: String,
    pub k: usize,
    pub nprobe: usize,
    pub measure: String,
    pub value: Option<f64>,
    pub accuracy: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CorrelationRow {
    pub dataset: String,
    /// What the measure is correlated against: `accuracy` or a label score.
    pub target: String,
    pub measure: String,
    pub k: Option<usize>,
    pub nprobe: Option<usize>,
    /// Sign-adjusted so that positive means the measure agrees with the
    /// target. NaN when either side is constant.
    pub rho: f64,
    pub p: f64,
    pub n: usize,
    pub p_method: String,
}

#[derive(Debug, Clone, Serialize)]
pub struct ProtocolOutput {
    pub dataset: String,
    pub base_points: usize,
    pub queries: usize,
    pub held_out: bool,
    pub num_clusters: usize,
    pub nprobe: Vec<usize>,
    pub runs: Vec<RunRow>,
    pub correlations: Vec<CorrelationRow>,
    /// Measures that failed for some clustering, with the error code.
    pub measure_errors: Vec<(String, String, String)>,
}

impl ProtocolOutput {
    pub fn pairs(&self) -> Vec<PairRow> {
        let mut out = Vec::new();
        for measure in MEASURES {
            for r in &self.runs {
                if measure == "nsm_approx" && r.nsm_approx.is_none() {
                    continue;
                }
                out.push(PairRow {
                    dataset: r.dataset.clone(),
                    clustering: r.clustering.clone(),
                    k: r.k,
                    nprobe: r.nprobe,
                    measure: measure.to_string(),
                    value: r.value(measure),
                    accuracy: r.accuracy,
                });
            }
        }
        out
    }

    pub fn correlation(&self, target: &str, measure: &str, k: usize, nprobe: usize) -> Option<&CorrelationRow> {
        self.correlations.iter().find(|c| {
            c.target == target && c.measure == measure && c.k == Some(k) && c.nprobe == Some(nprobe)
        })
    }
}

/// Internal measures reported for every clustering.
pub const MEASURES: [&str; 5] = ["nsm", "nsm_approx", "dunn", "db", "db_weighted"];

/// Splits `count` seeded query points off `data`. Returns the remaining base
/// set and the queries, both in ascending id order.
pub fn hold_out(data: &Dataset, count: usize, seed: u64) -> Result<(Dataset, Matrix, Vec<usize>)> {
    let m = data.len();
    if count == 0 || count + 2 > m {
        return Err(Error::InvalidConfig(format!(
            "cannot hold out {count} queries from {m} points"
        )));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0x5155_4552_5953);
    let mut q = index::sample(&mut rng, m, count).into_vec();
    q.sort_unstable();
    let mut is_query = vec![false; m];
    q.iter().for_each(|&i| is_query[i] = true);
    let base: Vec<usize> = (0..m).filter(|&i| !is_query[i]).collect();
    Ok((data.subset(&base)?, data.points().select(&q), base))
}

/// `1..=ceil(0.05 L)` followed by `L`.
pub fn sweep_probes(num_clusters: usize) -> Vec<usize> {
    let top = ((0.05 * num_clusters as f64 - 1e-9).ceil() as usize).clamp(1, num_clusters);
    let mut p: Vec<usize> = (1..=top).collect();
    if top < num_clusters {
        p.push(num_clusters);
    }
    p
}

/// Runs the experiment on `data`. Without `queries`, a seeded subset is held
/// out as the query set and the rest becomes the base set. `labels`, if given,
/// must cover every point of `data`.
pub fn run_protocol(
    name: &str,
    data: &Dataset,
    queries: Option<&Matrix>,
    labels: Option<&[u32]>,
    cfg: &ProtocolConfig,
) -> Result<ProtocolOutput> {
    if let Some(l) = labels {
        if l.len() != data.len() {
            return Err(Error::LengthMismatch {
                left: l.len(),
                right: data.len(),
            });
        }
    }
    if cfg.ks.is_empty() || cfg.ks.contains(&0) || cfg.iterations.is_empty() || cfg.variants.is_empty() {
        return Err(Error::InvalidConfig("ks, iterations and variants must be nonempty and positive".into()));
    }
    let (base, queries, base_labels, held_out) = match queries {
        Some(q) => (data.clone(), q.clone(), labels.map(<[u32]>::to_vec), false),
        None => {
            let (b, q, ids) = hold_out(data, cfg.held_out_queries, cfg.seed)?;
            let bl = labels.map(|l| ids.iter().map(|&i| l[i]).collect());
            (b, q, bl, true)
        }
    };
    let m = base.len();
    let num_clusters = match (cfg.num_clusters, &base_labels) {
        (Some(l), _) => l,
        (None, Some(l)) if cfg.clusters_from_labels => {
            let mut classes = l.clone();
            classes.sort_unstable();
            classes.dedup();
            classes.len()
        }
        _ => default_num_clusters(m, cfg.cluster_factor),
    };
    let nprobe = if !cfg.nprobe.is_empty() {
        cfg.nprobe.clone()
    } else if cfg.sweep {
        sweep_probes(num_clusters)
    } else {
        vec![1]
    };

    // One table per dataset, shared by every clustering.
    let table = exact_knn(&base, cfg.table_k.min(m - 1))?;
    let approx = match &cfg.approximate {
        Some(a) => Some(approximate_1nn(&base, a)?),
        None => None,
    };
    let kmax = *cfg.ks.iter().max().expect("nonempty");
    let truth = exact_knn_queries(&base, &queries, kmax)?;

    let mut runs = Vec::new();
    let mut measure_errors = Vec::new();
    for &variant in &cfg.variants {
        let km = KMeansConfig::new(variant, num_clusters, 0, cfg.seed);
        for run in kmeans_checkpoints(&base, &km, &cfg.iterations)?.into_iter().zip(&cfg.iterations) {
            let (run, &iters) = run;
            let label = format!("{}-{iters}", variant.name());
            let c = &run.clustering;
            let mut note = |measure: &str, e: &Error| {
                measure_errors.push((label.clone(), measure.to_string(), e.code().to_string()));
            };
            let scores = score_clustering(&base, c, &table, approx.as_ref(), base_labels.as_deref(), cfg, &mut note)?;
            // Routing uses the means of the final assignment, normalized for
            // angular metrics, whatever geometry the clustering optimized.
            let routing = Clustering::new(c.assignment().to_vec(), c.num_clusters())?;
            let index = IvfIndex::build(&base, &routing)?;
            for row in index.evaluate(&queries, &truth, &cfg.ks, &nprobe)? {
                runs.push(RunRow {
                    dataset: name.to_string(),
                    clustering: label.clone(),
                    variant: variant.name().to_string(),
                    iterations: iters,
                    iterations_run: run.iterations_run,
                    num_clusters,
                    k: row.k,
                    nprobe: row.nprobe,
                    accuracy: row.accuracy,
                    nsm: scores.nsm,
                    nsm_approx: scores.nsm_approx,
                    dunn: scores.dunn,
                    db: scores.db,
                    db_weighted: scores.db_weighted,
                    mutual_information: scores.mi,
                    homogeneity: scores.homogeneity,
                });
            }
        }
    }

    let mut correlations = correlate_runs(&runs, "accuracy", &MEASURES, &cfg.permutation)?;
    if base_labels.is_some() {
        // Label scores do not depend on k or nprobe; one row per clustering.
        let first: Vec<RunRow> = runs
            .iter()
            .filter(|r| r.k == kmax && r.nprobe == nprobe[0])
            .cloned()
            .collect();
        for target in ["mutual_information", "homogeneity"] {
            for mut c in correlate_runs(&first, target, &MEASURES, &cfg.permutation)? {
                c.k = None;
                c.nprobe = None;
                correlations.push(c);
            }
        }
    }
    Ok(ProtocolOutput {
        dataset: name.to_string(),
        base_points: m,
        queries: queries.len(),
        held_out,
        num_clusters,
        nprobe,
        runs,
        correlations,
        measure_errors,
    })
}

struct Scores {
    nsm: f64,
    nsm_approx: Option<f64>,
    dunn: Option<f64>,
    db: Option<f64>,
    db_weighted: Option<f64>,
    mi: Option<f64>,
    homogeneity: Option<f64>,
}

fn score_clustering(
    base: &Dataset,
    c: &Clustering,
    table: &NeighborTable,
    approx: Option<&NeighborTable>,
    labels: Option<&[u32]>,
    cfg: &ProtocolConfig,
    note: &mut dyn FnMut(&str, &Error),
) -> Result<Scores> {
    let mut soft = |measure: &str, r: Result<f64>| match r {
        Ok(v) => Some(v),
        Err(e) => {
            note(measure, &e);
            None
        }
    };
    Ok(Scores {
        nsm: clustering_nsm(table, c)?,
        nsm_approx: approx.map(|t| clustering_nsm(t, c)).transpose()?,
        dunn: soft("dunn", dunn_with(base, c, &cfg.dunn, Some(table)).map(|r| r.value)),
        db: soft("db", db_index(base, c, DbWeighting::Uniform)),
        db_weighted: soft("db_weighted", db_index(base, c, DbWeighting::BySize)),
        mi: labels.map(|l| mutual_information(l, c.assignment())).transpose()?,
        homogeneity: labels.map(|l| homogeneity(l, c.assignment())).transpose()?,
    })
}

/// Rank-correlates `target` against each measure within every
/// `(dataset, k, nprobe)` group. Rows missing a value are left out of that
/// measure's correlation; groups with fewer than three usable rows are skipped.
pub fn correlate_runs(
    runs: &[RunRow],
    target: &str,
    measures: &[&str],
    perm: &PermutationConfig,
) -> Result<Vec<CorrelationRow>> {
    let mut groups: BTreeMap<(String, usize, usize), Vec<&RunRow>> = BTreeMap::new();
    for r in runs {
        groups.entry((r.dataset.clone(), r.k, r.nprobe)).or_default().push(r);
    }
    let mut out = Vec::new();
    for ((dataset, k, nprobe), rows) in groups {
        for &measure in measures {
            let (x, y): (Vec<f64>, Vec<f64>) = rows
                .iter()
                .filter_map(|r| Some((r.value(target)?, r.value(measure)?)))
                .unzip();
            if x.len() < 3 {
                continue;
            }
            let mut row = correlation_row(&x, &y, measure, perm)?;
            row.dataset = dataset.clone();
            row.target = target.to_string();
            row.k = Some(k);
            row.nprobe = Some(nprobe);
            out.push(row);
        }
    }
    Ok(out)
}

/// Spearman of `x` against measure values `y`, sign-adjusted by measure
/// direction. Constant input gives NaN with method `undefined`.
pub fn correlation_row(x: &[f64], y: &[f64], measure: &str, perm: &PermutationConfig) -> Result<CorrelationRow> {
    let (rho, p, p_method) = match spearman_with(x, y, perm) {
        Ok(c) => (
            negate_for_lower_better(measure, c.rho)?,
            c.p_value,
            c.method.name().to_string(),
        ),
        Err(Error::ZeroVariance) => {
            negate_for_lower_better(measure, 0.0)?;
            (f64::NAN, f64::NAN, "undefined".to_string())
        }
        Err(e) => return Err(e),
    };
    Ok(CorrelationRow {
        dataset: String::new(),
        target: String::new(),
        measure: measure.to_string(),
        k: None,
        nprobe: None,
        rho,
        p,
        n: x.len(),
        p_method,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::io::{synth, SynthSpec};
    use crate::metric::Metric;

    #[test]
    fn sweep_grid() {
        assert_eq!(sweep_probes(1), vec![1]);
        assert_eq!(sweep_probes(20), vec![1, 20]);
        assert_eq!(sweep_probes(100), vec![1, 2, 3, 4, 5, 100]);
        assert_eq!(sweep_probes(141), vec![1, 2, 3, 4, 5, 6, 7, 8, 141]);
    }

    #[test]
    fn hold_out_partitions_points() {
        let s = synth(&SynthSpec::UniformNoise { points: 100, dim: 2 }, Metric::Euclidean, 1).unwrap();
        let (base, q, ids) = hold_out(&s.data, 10, 3).unwrap();
        assert_eq!((base.len(), q.len(), ids.len()), (90, 10, 90));
        assert!(hold_out(&s.data, 99, 3).is_err());
    }

    #[test]
    fn small_pipeline_shape() {
        let spec = SynthSpec::GaussianMixture {
            components: 6,
            per_component: 60,
            sigma: 1.0,
            separation: 6.0,
            dim: 4,
        };
        let s = synth(&spec, Metric::Euclidean, 2).unwrap();
        let cfg = ProtocolConfig {
            held_out_queries: 40,
            permutation: PermutationConfig { draws: 100, seed: 0 },
            ..ProtocolConfig::default()
        };
        let out = run_protocol("tiny", &s.data, None, s.labels.as_deref(), &cfg).unwrap();
        assert_eq!(out.base_points, 320);
        assert_eq!(out.num_clusters, 18);
        assert_eq!(out.runs.len(), 8 * 2);
        for k in [5, 10] {
            for m in MEASURES {
                let c = out.correlation("accuracy", m, k, 1).unwrap();
                assert_eq!(c.n, 8);
            }
        }
        let pairs = out.pairs();
        assert_eq!(pairs.len(), 5 * 16);
        assert!(out.correlations.iter().any(|c| c.target == "homogeneity"));
        let again = run_protocol("tiny", &s.data, None, s.labels.as_deref(), &cfg).unwrap();
        assert_eq!(out.runs, again.runs);
    }

    #[test]
    fn constant_measure_gives_nan() {
        let r = correlation_row(&[1.0, 2.0, 3.0], &[0.5; 3], "nsm", &PermutationConfig::default()).unwrap();
        assert!(r.rho.is_nan());
        assert_eq!(r.p_method, "undefined");
        let r = correlation_row(&[1.0, 2.0, 3.0], &[3.0, 2.0, 1.0], "db", &PermutationConfig::default()).unwrap();
        assert_eq!(r.rho, 1.0);
    }
}
