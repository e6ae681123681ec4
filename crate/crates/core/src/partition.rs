use serde::{Deserialize, Serialize};

use crate::dataset::Matrix;
use crate::error::{Error, Result};

/// How cluster weights are chosen when averaging per-cluster measures.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum WeightScheme {
    /// `w_i = |C_i|`.
    BySize,
    /// `w_i = 1` for every nonempty cluster.
    Uniform,
    /// Caller-provided positive weights, one per cluster.
    Custom(Vec<f64>),
}

impl WeightScheme {
    pub fn name(&self) -> &'static str {
        match self {
            WeightScheme::BySize => "by_size",
            WeightScheme::Uniform => "uniform",
            WeightScheme::Custom(_) => "custom",
        }
    }
}

/// A flat, total assignment of `m` points to `L` clusters.
///
/// Empty clusters are representable; measures that need positive weights
/// skip them.
#[derive(Debug, Clone, PartialEq)]
pub struct Clustering {
    assignment: Vec<u32>,
    num_clusters: usize,
    weights: WeightScheme,
    centroids: Option<Matrix>,
}

impl Clustering {
    pub fn new(assignment: Vec<u32>, num_clusters: usize) -> Result<Self> {
        if num_clusters == 0 {
            return Err(Error::InvalidClustering("zero clusters".into()));
        }
        if let Some((i, c)) = assignment
            .iter()
            .enumerate()
            .find(|(_, c)| **c as usize >= num_clusters)
        {
            return Err(Error::InvalidClustering(format!(
                "point {i} assigned to cluster {c}, but only {num_clusters} clusters exist"
            )));
        }
        Ok(Self {
            assignment,
            num_clusters,
            weights: WeightScheme::BySize,
            centroids: None,
        })
    }

    /// Builds a clustering from explicit member lists. Every point in
    /// `0..m` must appear exactly once.
    pub fn from_groups<G: AsRef<[usize]>>(groups: &[G], m: usize) -> Result<Self> {
        let mut assignment = vec![u32::MAX; m];
        for (c, g) in groups.iter().enumerate() {
            for &u in g.as_ref() {
                if u >= m {
                    return Err(Error::InvalidClustering(format!("point {u} out of range")));
                }
                if assignment[u] != u32::MAX {
                    return Err(Error::InvalidClustering(format!(
                        "point {u} appears in two clusters"
                    )));
                }
                assignment[u] = c as u32;
            }
        }
        if let Some(u) = assignment.iter().position(|c| *c == u32::MAX) {
            return Err(Error::InvalidClustering(format!("point {u} is unassigned")));
        }
        Self::new(assignment, groups.len())
    }

    /// Infers `L` as one past the largest cluster id.
    pub fn from_assignment(assignment: Vec<u32>) -> Result<Self> {
        let l = assignment.iter().max().map_or(0, |c| *c as usize + 1);
        Self::new(assignment, l)
    }

    pub fn with_weights(mut self, weights: WeightScheme) -> Result<Self> {
        if let WeightScheme::Custom(w) = &weights {
            if w.len() != self.num_clusters {
                return Err(Error::LengthMismatch {
                    left: w.len(),
                    right: self.num_clusters,
                });
            }
            if w.iter().any(|x| !(x.is_finite() && *x > 0.0)) {
                return Err(Error::InvalidClustering("weights must be positive".into()));
            }
        }
        self.weights = weights;
        Ok(self)
    }

    pub fn with_centroids(mut self, centroids: Matrix) -> Result<Self> {
        if centroids.len() != self.num_clusters {
            return Err(Error::LengthMismatch {
                left: centroids.len(),
                right: self.num_clusters,
            });
        }
        self.centroids = Some(centroids);
        Ok(self)
    }

    #[inline]
    pub fn assignment(&self) -> &[u32] {
        &self.assignment
    }

    #[inline]
    pub fn cluster_of(&self, u: usize) -> u32 {
        self.assignment[u]
    }

    pub fn len(&self) -> usize {
        self.assignment.len()
    }

    pub fn is_empty(&self) -> bool {
        self.assignment.is_empty()
    }

    pub fn num_clusters(&self) -> usize {
        self.num_clusters
    }

    pub fn weight_scheme(&self) -> &WeightScheme {
        &self.weights
    }

    pub fn centroids(&self) -> Option<&Matrix> {
        self.centroids.as_ref()
    }

    pub fn cluster_sizes(&self) -> Vec<usize> {
        let mut sizes = vec![0; self.num_clusters];
        for &c in &self.assignment {
            sizes[c as usize] += 1;
        }
        sizes
    }

    /// Resolved weight per cluster; empty clusters always get 0.
    pub fn resolved_weights(&self) -> Vec<f64> {
        let sizes = self.cluster_sizes();
        sizes
            .iter()
            .enumerate()
            .map(|(i, &n)| {
                if n == 0 {
                    0.0
                } else {
                    match &self.weights {
                        WeightScheme::BySize => n as f64,
                        WeightScheme::Uniform => 1.0,
                        WeightScheme::Custom(w) => w[i],
                    }
                }
            })
            .collect()
    }

    /// Member ids per cluster, each list ascending.
    pub fn members(&self) -> Vec<Vec<usize>> {
        let mut out = vec![Vec::new(); self.num_clusters];
        for (u, &c) in self.assignment.iter().enumerate() {
            out[c as usize].push(u);
        }
        out
    }

    pub fn nonempty_count(&self) -> usize {
        self.cluster_sizes().iter().filter(|n| **n > 0).count()
    }
}
