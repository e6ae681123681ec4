use serde::Serialize;

use crate::error::{Error, Result};

pub fn mean(values: &[f64]) -> Result<f64> {
    if values.is_empty() {
        return Err(Error::Empty);
    }
    Ok(values.iter().sum::<f64>() / values.len() as f64)
}

/// Lower empirical quantile: the order statistic at position `ceil(alpha * n)`
/// (1-indexed, at least 1).
pub fn lower_quantile(values: &[f64], alpha: f64) -> Result<f64> {
    if values.is_empty() {
        return Err(Error::Empty);
    }
    if !(0.0..=1.0).contains(&alpha) {
        return Err(Error::InvalidConfig(format!("quantile level {alpha} outside [0, 1]")));
    }
    let mut sorted = values.to_vec();
    sorted.sort_by(f64::total_cmp);
    Ok(sorted[order_statistic(sorted.len(), alpha) - 1])
}

/// `ceil(alpha * n)` clamped to `1..=n`. Products such as `0.1 * 30` land a
/// hair above the integer, so a small slack is subtracted before rounding up.
fn order_statistic(n: usize, alpha: f64) -> usize {
    ((alpha * n as f64 - 1e-9).ceil().max(1.0) as usize).min(n)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Summary {
    pub n: usize,
    pub mean: f64,
    /// `(alpha, lower quantile)` in the order requested.
    pub quantiles: Vec<(f64, f64)>,
}

pub fn summarize(values: &[f64], levels: &[f64]) -> Result<Summary> {
    let mean = mean(values)?;
    let quantiles = levels
        .iter()
        .map(|&a| Ok((a, lower_quantile(values, a)?)))
        .collect::<Result<_>>()?;
    Ok(Summary {
        n: values.len(),
        mean,
        quantiles,
    })
}
