use crate::error::{Error, Result};
use crate::metric::rank_order;
use crate::neighbors::exact::select_top_k;
use crate::neighbors::table::{NeighborSource, NeighborTable, MAX_K};

/// An explicit `m x m` comparator matrix: `D[u][v]` is the value of `v` as seen
/// from `u`. Neither symmetry nor nonnegativity is required, which makes it a
/// handy stand-in for an arbitrary distance function. The diagonal is ignored.
#[derive(Debug, Clone, PartialEq)]
pub struct DistanceMatrixOracle {
    n: usize,
    values: Vec<f64>,
}

impl DistanceMatrixOracle {
    pub fn new(values: Vec<f64>, n: usize) -> Result<Self> {
        if values.len() != n * n {
            return Err(Error::InvalidDataset(format!(
                "{} entries do not form a {n}x{n} matrix",
                values.len()
            )));
        }
        if n < 2 {
            return Err(Error::InvalidDataset("need at least 2 points".into()));
        }
        if let Some(i) = values.iter().position(|x| !x.is_finite()) {
            return Err(Error::NonFinite { record: i / n });
        }
        Ok(Self { n, values })
    }

    pub fn from_fn(n: usize, f: impl Fn(usize, usize) -> f64) -> Result<Self> {
        let values = (0..n * n).map(|i| f(i / n, i % n)).collect();
        Self::new(values, n)
    }

    pub fn len(&self) -> usize {
        self.n
    }

    pub fn is_empty(&self) -> bool {
        self.n == 0
    }

    #[inline]
    pub fn get(&self, u: usize, v: usize) -> f64 {
        self.values[u * self.n + v]
    }

    pub fn set(&mut self, u: usize, v: usize, value: f64) {
        self.values[u * self.n + v] = value;
    }

    pub fn scaled(&self, lambda: f64) -> Self {
        Self {
            n: self.n,
            values: self.values.iter().map(|x| x * lambda).collect(),
        }
    }
}

/// Row-wise `k` minimizers of the oracle, excluding the diagonal.
pub fn knn_from_matrix(oracle: &DistanceMatrixOracle, k: usize) -> Result<NeighborTable> {
    let n = oracle.len();
    let max = (n - 1).min(MAX_K);
    if k == 0 || k > max {
        return Err(Error::KTooLarge { k, max });
    }
    let mut ids = Vec::with_capacity(n * k);
    let mut dist = Vec::with_capacity(n * k);
    let mut buf = Vec::with_capacity(n);
    for u in 0..n {
        buf.clear();
        buf.extend(
            (0..n)
                .filter(|&v| v != u)
                .map(|v| (oracle.get(u, v), v as u32)),
        );
        select_top_k(&mut buf, k);
        debug_assert!(buf.windows(2).all(|w| rank_order(w[0], w[1]).is_lt()));
        for &(d, v) in &buf {
            ids.push(v);
            dist.push(d);
        }
    }
    Ok(NeighborTable::from_parts(
        k,
        n,
        ids,
        Some(dist),
        NeighborSource::Exact,
        None,
        true,
    ))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn blocks() -> DistanceMatrixOracle {
        DistanceMatrixOracle::from_fn(4, |u, v| if u / 2 == v / 2 { 1.0 } else { 10.0 }).unwrap()
    }

    #[test]
    fn block_construction() {
        let t = knn_from_matrix(&blocks(), 1).unwrap();
        assert_eq!(t.ids(), &[1, 0, 3, 2]);
    }

    #[test]
    fn scaling_does_not_change_the_table() {
        let a = knn_from_matrix(&blocks(), 3).unwrap();
        let b = knn_from_matrix(&blocks().scaled(7.0), 3).unwrap();
        assert_eq!(a.ids(), b.ids());
    }

    #[test]
    fn all_equal_breaks_ties_by_id() {
        let d = DistanceMatrixOracle::from_fn(3, |_, _| 2.0).unwrap();
        assert_eq!(knn_from_matrix(&d, 1).unwrap().ids(), &[1, 0, 0]);
    }

    #[test]
    fn rejects_bad_input() {
        assert!(DistanceMatrixOracle::new(vec![0.0; 5], 2).is_err());
        assert!(DistanceMatrixOracle::new(vec![0.0, f64::NAN, 1.0, 0.0], 2).is_err());
        assert!(knn_from_matrix(&blocks(), 4).is_err());
    }
}
