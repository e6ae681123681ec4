//! The three comparison functions used throughout the toolkit.
//!
//! Every metric is expressed as a *comparator value*: a real number where
//! smaller means nearer. Euclidean compares by squared L2 distance, cosine by
//! `1 - cos(u, v)` and inner product by `-<u, v>`. Only the ranking induced by
//! the comparator matters to the stability measures, so the squared distance
//! is never square-rooted here.
//!
//! Vectors are stored as `f32`; all accumulation happens in `f64` with a fixed
//! summation order, so the same pair of vectors always yields the same bits.

use std::cmp::Ordering;
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Metric {
    Euclidean,
    Cosine,
    InnerProduct,
}

impl Metric {
    /// Short name used on the command line and in reports.
    pub fn short_name(self) -> &'static str {
        match self {
            Metric::Euclidean => "l2",
            Metric::Cosine => "cos",
            Metric::InnerProduct => "ip",
        }
    }

    /// Whether clustering under this metric should use spherical geometry.
    pub fn is_angular(self) -> bool {
        !matches!(self, Metric::Euclidean)
    }
}

impl fmt::Display for Metric {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.short_name())
    }
}

impl FromStr for Metric {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "l2" | "euclidean" => Ok(Metric::Euclidean),
            "cos" | "cosine" | "angular" => Ok(Metric::Cosine),
            "ip" | "inner_product" | "inner-product" | "dot" | "mips" => Ok(Metric::InnerProduct),
            other => Err(Error::InvalidConfig(format!("unknown metric `{other}`"))),
        }
    }
}

const LANES: usize = 8;

#[inline]
fn fold_lanes(acc: [f64; LANES]) -> f64 {
    ((acc[0] + acc[4]) + (acc[1] + acc[5])) + ((acc[2] + acc[6]) + (acc[3] + acc[7]))
}

/// Dot product with `f64` accumulation in a fixed lane order.
#[inline]
pub fn dot(a: &[f32], b: &[f32]) -> f64 {
    debug_assert_eq!(a.len(), b.len());
    let mut acc = [0.0f64; LANES];
    let ca = a.chunks_exact(LANES);
    let cb = b.chunks_exact(LANES);
    let (ta, tb) = (ca.remainder(), cb.remainder());
    for (x, y) in ca.zip(cb) {
        for l in 0..LANES {
            acc[l] += x[l] as f64 * y[l] as f64;
        }
    }
    let mut tail = 0.0;
    for (x, y) in ta.iter().zip(tb) {
        tail += *x as f64 * *y as f64;
    }
    fold_lanes(acc) + tail
}

/// Squared Euclidean distance with `f64` accumulation in a fixed lane order.
#[inline]
pub fn squared_l2(a: &[f32], b: &[f32]) -> f64 {
    debug_assert_eq!(a.len(), b.len());
    let mut acc = [0.0f64; LANES];
    let ca = a.chunks_exact(LANES);
    let cb = b.chunks_exact(LANES);
    let (ta, tb) = (ca.remainder(), cb.remainder());
    for (x, y) in ca.zip(cb) {
        for l in 0..LANES {
            let d = x[l] as f64 - y[l] as f64;
            acc[l] += d * d;
        }
    }
    let mut tail = 0.0;
    for (x, y) in ta.iter().zip(tb) {
        let d = *x as f64 - *y as f64;
        tail += d * d;
    }
    fold_lanes(acc) + tail
}

#[inline]
pub fn norm(a: &[f32]) -> f64 {
    dot(a, a).sqrt()
}

/// Cosine comparator from a dot product and two precomputed norms.
///
/// [`comparator_value`] goes through this same expression, which keeps cached
/// norms bit-compatible with the one-shot path.
#[inline]
pub(crate) fn cosine_from_parts(dot: f64, norm_u: f64, norm_v: f64) -> f64 {
    1.0 - dot / (norm_u * norm_v)
}

/// Comparator value of `u` against `v` under `metric`; smaller is nearer.
pub fn comparator_value(metric: Metric, u: &[f32], v: &[f32]) -> Result<f64> {
    if u.len() != v.len() {
        return Err(Error::DimMismatch {
            expected: u.len(),
            got: v.len(),
        });
    }
    Ok(match metric {
        Metric::Euclidean => squared_l2(u, v),
        Metric::InnerProduct => -dot(u, v),
        Metric::Cosine => {
            let (nu, nv) = (norm(u), norm(v));
            if nu == 0.0 || nv == 0.0 {
                return Err(Error::ZeroVector { row: None });
            }
            cosine_from_parts(dot(u, v), nu, nv)
        }
    })
}

/// The global ranking rule: ascending comparator value, ties broken by
/// ascending id.
#[inline]
pub fn rank_order(a: (f64, u32), b: (f64, u32)) -> Ordering {
    a.0.partial_cmp(&b.0)
        .unwrap_or(Ordering::Equal)
        .then(a.1.cmp(&b.1))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn comparator_examples() {
        assert_eq!(
            comparator_value(Metric::Euclidean, &[0.0, 0.0], &[3.0, 4.0]).unwrap(),
            25.0
        );
        assert_eq!(
            comparator_value(Metric::InnerProduct, &[1.0, 2.0], &[2.0, 1.0]).unwrap(),
            -4.0
        );
        assert_eq!(
            comparator_value(Metric::Cosine, &[1.0, 0.0], &[1.0, 0.0]).unwrap(),
            0.0
        );
    }

    #[test]
    fn comparator_errors() {
        assert!(matches!(
            comparator_value(Metric::Cosine, &[0.0, 0.0], &[1.0, 0.0]),
            Err(Error::ZeroVector { .. })
        ));
        assert!(matches!(
            comparator_value(Metric::Euclidean, &[0.0], &[1.0, 0.0]),
            Err(Error::DimMismatch { .. })
        ));
    }

    #[test]
    fn kernels_match_naive_sums_on_long_vectors() {
        let a: Vec<f32> = (0..37).map(|i| (i as f32 * 0.37).sin()).collect();
        let b: Vec<f32> = (0..37).map(|i| (i as f32 * 0.11).cos()).collect();
        let naive_dot: f64 = a.iter().zip(&b).map(|(x, y)| *x as f64 * *y as f64).sum();
        let naive_l2: f64 = a
            .iter()
            .zip(&b)
            .map(|(x, y)| (*x as f64 - *y as f64).powi(2))
            .sum();
        assert!((dot(&a, &b) - naive_dot).abs() < 1e-12);
        assert!((squared_l2(&a, &b) - naive_l2).abs() < 1e-12);
    }

    #[test]
    fn inner_product_self_is_not_always_nearest() {
        // <u,u> = 1 but <u,v> = 2 for a longer parallel v.
        let u = [1.0f32, 0.0];
        let v = [2.0f32, 0.0];
        let self_val = comparator_value(Metric::InnerProduct, &u, &u).unwrap();
        let other = comparator_value(Metric::InnerProduct, &u, &v).unwrap();
        assert!(other < self_val);
    }

    #[test]
    fn parse_names() {
        assert_eq!("l2".parse::<Metric>().unwrap(), Metric::Euclidean);
        assert_eq!("cos".parse::<Metric>().unwrap(), Metric::Cosine);
        assert_eq!("ip".parse::<Metric>().unwrap(), Metric::InnerProduct);
        assert!("hamming".parse::<Metric>().is_err());
    }
}
