//! Standard (Lloyd) and spherical KMeans.
//!
//! Both variants are deterministic functions of `(data, config)`: the seed
//! drives initialization only, assignment ties go to the lowest cluster id,
//! and centroid sums run over members in ascending id order. Worker count
//! never changes a result.

use rand::seq::index;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::dataset::{Dataset, Matrix};
use crate::error::{Error, Result};
use crate::metric::{self, Metric};
use crate::partition::Clustering;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum KMeansVariant {
    /// Squared-L2 assignment, arithmetic-mean update.
    Standard,
    /// Dot-product assignment against unit centroids, normalized-mean update.
    Spherical,
}

impl KMeansVariant {
    pub fn name(self) -> &'static str {
        match self {
            KMeansVariant::Standard => "standard",
            KMeansVariant::Spherical => "spherical",
        }
    }

    /// The variant that matches a dataset metric.
    pub fn for_metric(metric: Metric) -> Self {
        if metric.is_angular() {
            KMeansVariant::Spherical
        } else {
            KMeansVariant::Standard
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Init {
    /// Distinct points drawn uniformly at random.
    RandomPoints,
    /// Distance-weighted seeding.
    KMeansPlusPlus,
    /// Explicit seed points, one per cluster.
    Given(Vec<usize>),
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct KMeansConfig {
    pub variant: KMeansVariant,
    pub num_clusters: usize,
    pub iterations: usize,
    pub seed: u64,
    pub init: Init,
}

impl KMeansConfig {
    pub fn new(variant: KMeansVariant, num_clusters: usize, iterations: usize, seed: u64) -> Self {
        Self {
            variant,
            num_clusters,
            iterations,
            seed,
            init: Init::KMeansPlusPlus,
        }
    }

    pub fn with_init(mut self, init: Init) -> Self {
        self.init = init;
        self
    }
}

/// Result of one KMeans run with its metadata.
#[derive(Debug, Clone)]
pub struct KMeansRun {
    pub clustering: Clustering,
    /// Assignment/update rounds actually executed.
    pub iterations_run: usize,
    /// Whether the run stopped on an unchanged assignment.
    pub converged: bool,
    /// Objective after each round: the sum of squared distances for the
    /// standard variant, `sum(|x| - <x, c>)` for the spherical one.
    pub objective: Vec<f64>,
}

/// `max(1, round(t * sqrt(m)))`.
pub fn default_num_clusters(m: usize, t: f64) -> usize {
    ((t * (m as f64).sqrt()).round() as usize).max(1)
}

pub fn kmeans(data: &Dataset, cfg: &KMeansConfig) -> Result<Clustering> {
    Ok(kmeans_run(data, cfg)?.clustering)
}

pub fn kmeans_run(data: &Dataset, cfg: &KMeansConfig) -> Result<KMeansRun> {
    let mut runs = kmeans_checkpoints(data, cfg, &[cfg.iterations])?;
    Ok(runs.pop().expect("one checkpoint requested"))
}

/// Runs once up to the largest checkpoint and snapshots the state after each
/// requested number of rounds. Each snapshot is identical to a separate run
/// with `iterations` set to that checkpoint.
pub fn kmeans_checkpoints(
    data: &Dataset,
    cfg: &KMeansConfig,
    checkpoints: &[usize],
) -> Result<Vec<KMeansRun>> {
    let m = data.len();
    let l = cfg.num_clusters;
    if l == 0 {
        return Err(Error::InvalidConfig("num_clusters must be at least 1".into()));
    }
    if l > m {
        return Err(Error::TooManyClusters {
            clusters: l,
            points: m,
        });
    }
    if checkpoints.is_empty() || checkpoints.contains(&0) {
        return Err(Error::InvalidConfig("iterations must be at least 1".into()));
    }
    if cfg.variant == KMeansVariant::Spherical {
        data.check_nonzero_rows()?;
    }
    let mut order: Vec<usize> = (0..checkpoints.len()).collect();
    order.sort_by_key(|&i| checkpoints[i]);
    let max_iters = checkpoints[*order.last().unwrap()];

    let state = Lloyd::new(data, cfg.variant);
    let mut centroids = state.initialize(cfg)?;
    let mut assignment: Option<Vec<u32>> = None;
    let mut objective = Vec::new();
    let mut converged = false;
    let mut rounds = 0;
    let mut snapshots: Vec<Option<KMeansRun>> = vec![None; checkpoints.len()];
    let mut next = 0;

    while rounds < max_iters && !converged {
        let (mut assign, mut cost) = state.assign(&centroids);
        rounds += 1;
        if assignment.as_ref() == Some(&assign) {
            converged = true;
            objective.push(*objective.last().unwrap_or(&0.0));
        } else {
            state.repair_empty(&mut assign, &mut cost, l);
            centroids = state.update(&assign, l);
            objective.push(state.objective(&assign, &centroids));
            assignment = Some(assign);
        }
        while next < order.len() && (checkpoints[order[next]] <= rounds || converged) {
            let snap = state.snapshot(
                assignment.as_ref().unwrap(),
                &centroids,
                rounds,
                converged,
                &objective,
            )?;
            snapshots[order[next]] = Some(snap);
            next += 1;
        }
    }
    Ok(snapshots
        .into_iter()
        .map(|s| s.expect("all checkpoints reached"))
        .collect())
}

struct Lloyd<'a> {
    data: &'a Dataset,
    variant: KMeansVariant,
    norms: Vec<f64>,
}

impl<'a> Lloyd<'a> {
    fn new(data: &'a Dataset, variant: KMeansVariant) -> Self {
        let norms = match variant {
            KMeansVariant::Standard => Vec::new(),
            KMeansVariant::Spherical => data.norms(),
        };
        Self {
            data,
            variant,
            norms,
        }
    }

    /// Cost of point `i` against centroid `c`; smaller is nearer.
    #[inline]
    fn cost(&self, i: usize, c: &[f32]) -> f64 {
        match self.variant {
            KMeansVariant::Standard => metric::squared_l2(self.data.row(i), c),
            KMeansVariant::Spherical => 1.0 - metric::dot(self.data.row(i), c) / self.norms[i],
        }
    }

    fn seed_centroid(&self, i: usize) -> Vec<f32> {
        let row = self.data.row(i);
        match self.variant {
            KMeansVariant::Standard => row.to_vec(),
            KMeansVariant::Spherical => {
                let n = self.norms[i];
                row.iter().map(|x| (*x as f64 / n) as f32).collect()
            }
        }
    }

    fn initialize(&self, cfg: &KMeansConfig) -> Result<Vec<Vec<f32>>> {
        let m = self.data.len();
        let l = cfg.num_clusters;
        let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
        let ids: Vec<usize> = match &cfg.init {
            Init::Given(ids) => {
                if ids.len() != l {
                    return Err(Error::InvalidConfig(format!(
                        "{} seed points given for {l} clusters",
                        ids.len()
                    )));
                }
                if let Some(bad) = ids.iter().find(|&&i| i >= m) {
                    return Err(Error::InvalidConfig(format!("seed point {bad} out of range")));
                }
                ids.clone()
            }
            Init::RandomPoints => index::sample(&mut rng, m, l).into_vec(),
            Init::KMeansPlusPlus => self.plus_plus(l, &mut rng),
        };
        Ok(ids.into_iter().map(|i| self.seed_centroid(i)).collect())
    }

    fn plus_plus(&self, l: usize, rng: &mut ChaCha8Rng) -> Vec<usize> {
        let m = self.data.len();
        let mut chosen = Vec::with_capacity(l);
        let mut taken = vec![false; m];
        let first = rng.random_range(0..m);
        chosen.push(first);
        taken[first] = true;
        let c0 = self.seed_centroid(first);
        let mut nearest: Vec<f64> = (0..m)
            .into_par_iter()
            .map(|i| self.cost(i, &c0).max(0.0))
            .collect();
        while chosen.len() < l {
            let total: f64 = nearest.iter().sum();
            let pick = if total > 0.0 {
                let target = rng.random::<f64>() * total;
                let mut acc = 0.0;
                let mut pick = None;
                for (i, w) in nearest.iter().enumerate() {
                    acc += w;
                    if acc > target && *w > 0.0 {
                        pick = Some(i);
                        break;
                    }
                }
                // rounding can leave the target just past the final sum
                pick.unwrap_or_else(|| nearest.iter().rposition(|w| *w > 0.0).unwrap())
            } else {
                let free: Vec<usize> = (0..m).filter(|i| !taken[*i]).collect();
                free[rng.random_range(0..free.len())]
            };
            chosen.push(pick);
            taken[pick] = true;
            let c = self.seed_centroid(pick);
            nearest
                .par_iter_mut()
                .enumerate()
                .for_each(|(i, d)| *d = d.min(self.cost(i, &c).max(0.0)));
            nearest[pick] = 0.0;
        }
        chosen
    }

    fn assign(&self, centroids: &[Vec<f32>]) -> (Vec<u32>, Vec<f64>) {
        (0..self.data.len())
            .into_par_iter()
            .map(|i| {
                let mut best = (f64::INFINITY, 0u32);
                for (j, c) in centroids.iter().enumerate() {
                    let v = self.cost(i, c);
                    if v < best.0 {
                        best = (v, j as u32);
                    }
                }
                (best.1, best.0)
            })
            .unzip()
    }

    /// Moves the worst-served points of multi-member clusters into empty ones.
    fn repair_empty(&self, assign: &mut [u32], cost: &mut [f64], l: usize) {
        let mut sizes = vec![0usize; l];
        for &c in assign.iter() {
            sizes[c as usize] += 1;
        }
        let empties: Vec<usize> = (0..l).filter(|&j| sizes[j] == 0).collect();
        if empties.is_empty() {
            return;
        }
        let mut candidates: Vec<usize> = (0..assign.len()).collect();
        candidates.sort_by(|&a, &b| cost[b].total_cmp(&cost[a]).then(a.cmp(&b)));
        let mut cursor = candidates.into_iter();
        for j in empties {
            for p in cursor.by_ref() {
                let from = assign[p] as usize;
                if sizes[from] >= 2 {
                    sizes[from] -= 1;
                    sizes[j] += 1;
                    assign[p] = j as u32;
                    cost[p] = 0.0;
                    break;
                }
            }
        }
    }

    fn update(&self, assign: &[u32], l: usize) -> Vec<Vec<f32>> {
        let dim = self.data.dim();
        let mut members = vec![Vec::new(); l];
        for (i, &c) in assign.iter().enumerate() {
            members[c as usize].push(i);
        }
        members
            .par_iter()
            .map(|ids| {
                let mut sum = vec![0.0f64; dim];
                for &i in ids {
                    for (s, x) in sum.iter_mut().zip(self.data.row(i)) {
                        *s += *x as f64;
                    }
                }
                let n = ids.len().max(1) as f64;
                sum.iter_mut().for_each(|s| *s /= n);
                if self.variant == KMeansVariant::Spherical {
                    let norm = sum.iter().map(|s| s * s).sum::<f64>().sqrt();
                    if norm == 0.0 {
                        // members cancel out exactly; fall back to the first member's direction
                        return self.seed_centroid(ids[0]);
                    }
                    sum.iter_mut().for_each(|s| *s /= norm);
                }
                sum.into_iter().map(|s| s as f32).collect()
            })
            .collect()
    }

    fn objective(&self, assign: &[u32], centroids: &[Vec<f32>]) -> f64 {
        let per_point: Vec<f64> = (0..assign.len())
            .into_par_iter()
            .map(|i| {
                let c = &centroids[assign[i] as usize];
                match self.variant {
                    KMeansVariant::Standard => metric::squared_l2(self.data.row(i), c),
                    KMeansVariant::Spherical => self.norms[i] - metric::dot(self.data.row(i), c),
                }
            })
            .collect();
        per_point.iter().sum()
    }

    fn snapshot(
        &self,
        assign: &[u32],
        centroids: &[Vec<f32>],
        rounds: usize,
        converged: bool,
        objective: &[f64],
    ) -> Result<KMeansRun> {
        let c = Matrix::from_rows(centroids)?;
        let clustering = Clustering::new(assign.to_vec(), centroids.len())?.with_centroids(c)?;
        Ok(KMeansRun {
            clustering,
            iterations_run: rounds,
            converged,
            objective: objective.to_vec(),
        })
    }
}
