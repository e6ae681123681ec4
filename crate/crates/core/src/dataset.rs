use crate::error::{Error, Result};
use crate::metric::{self, Metric};

/// Dense row-major `f32` matrix. Used for query sets and centroids, and as
/// the storage behind [`Dataset`].
#[derive(Debug, Clone, PartialEq)]
pub struct Matrix {
    values: Vec<f32>,
    dim: usize,
}

impl Matrix {
    pub fn new(values: Vec<f32>, dim: usize) -> Result<Self> {
        if dim == 0 {
            if values.is_empty() {
                return Ok(Self { values, dim });
            }
            return Err(Error::InvalidDataset("dimension must be at least 1".into()));
        }
        if values.len() % dim != 0 {
            return Err(Error::InvalidDataset(format!(
                "{} values do not divide into rows of {dim}",
                values.len()
            )));
        }
        Ok(Self { values, dim })
    }

    pub fn from_rows<R: AsRef<[f32]>>(rows: &[R]) -> Result<Self> {
        let dim = rows.first().map_or(0, |r| r.as_ref().len());
        let mut values = Vec::with_capacity(rows.len() * dim);
        for r in rows {
            let r = r.as_ref();
            if r.len() != dim {
                return Err(Error::DimMismatch {
                    expected: dim,
                    got: r.len(),
                });
            }
            values.extend_from_slice(r);
        }
        Self::new(values, dim)
    }

    pub fn empty() -> Self {
        Self {
            values: Vec::new(),
            dim: 0,
        }
    }

    #[inline]
    pub fn len(&self) -> usize {
        if self.dim == 0 {
            0
        } else {
            self.values.len() / self.dim
        }
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    #[inline]
    pub fn dim(&self) -> usize {
        self.dim
    }

    #[inline]
    pub fn row(&self, i: usize) -> &[f32] {
        &self.values[i * self.dim..(i + 1) * self.dim]
    }

    pub fn rows(&self) -> impl ExactSizeIterator<Item = &[f32]> + '_ {
        // chunks_exact panics on a zero chunk size
        self.values.chunks_exact(self.dim.max(1))
    }

    pub fn as_slice(&self) -> &[f32] {
        &self.values
    }

    pub fn into_vec(self) -> Vec<f32> {
        self.values
    }

    /// Index of the first non-finite row, if any.
    pub fn first_non_finite_row(&self) -> Option<usize> {
        self.rows().position(|r| r.iter().any(|x| !x.is_finite()))
    }

    pub fn select(&self, ids: &[usize]) -> Matrix {
        let mut values = Vec::with_capacity(ids.len() * self.dim);
        for &i in ids {
            values.extend_from_slice(self.row(i));
        }
        Matrix {
            values,
            dim: self.dim,
        }
    }

    pub fn map(&self, f: impl Fn(f32) -> f32) -> Matrix {
        Matrix {
            values: self.values.iter().map(|x| f(*x)).collect(),
            dim: self.dim,
        }
    }
}

/// The universe of points together with the metric that compares them.
///
/// Invariants: at least two points, at least one dimension, every coordinate
/// finite. Point ids are the row indices `0..len()`.
#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    points: Matrix,
    metric: Metric,
}

impl Dataset {
    pub fn new(points: Matrix, metric: Metric) -> Result<Self> {
        if points.len() < 2 {
            return Err(Error::InvalidDataset(format!(
                "need at least 2 points, got {}",
                points.len()
            )));
        }
        if points.dim() == 0 {
            return Err(Error::InvalidDataset("dimension must be at least 1".into()));
        }
        if let Some(r) = points.first_non_finite_row() {
            return Err(Error::NonFinite { record: r });
        }
        Ok(Self { points, metric })
    }

    pub fn from_rows<R: AsRef<[f32]>>(rows: &[R], metric: Metric) -> Result<Self> {
        Self::new(Matrix::from_rows(rows)?, metric)
    }

    #[inline]
    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    #[inline]
    pub fn dim(&self) -> usize {
        self.points.dim()
    }

    #[inline]
    pub fn metric(&self) -> Metric {
        self.metric
    }

    #[inline]
    pub fn row(&self, i: usize) -> &[f32] {
        self.points.row(i)
    }

    pub fn points(&self) -> &Matrix {
        &self.points
    }

    pub fn into_points(self) -> Matrix {
        self.points
    }

    pub fn with_metric(mut self, metric: Metric) -> Self {
        self.metric = metric;
        self
    }

    /// Every coordinate multiplied by `lambda`.
    pub fn scaled(&self, lambda: f32) -> Result<Self> {
        Self::new(self.points.map(|x| x * lambda), self.metric)
    }

    pub fn subset(&self, ids: &[usize]) -> Result<Self> {
        Self::new(self.points.select(ids), self.metric)
    }

    /// L2 norms of every row (`f64`).
    pub fn norms(&self) -> Vec<f64> {
        self.points.rows().map(metric::norm).collect()
    }

    /// Fails with `ZeroVector` if any row has zero norm.
    pub fn check_nonzero_rows(&self) -> Result<()> {
        match self.points.rows().position(|r| r.iter().all(|x| *x == 0.0)) {
            Some(r) => Err(Error::ZeroVector { row: Some(r) }),
            None => Ok(()),
        }
    }
}
