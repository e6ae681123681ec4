//! Rank correlation, summaries and label-based clustering scores.

mod info;
mod rank;
mod summary;

pub use info::{homogeneity, mutual_information};
pub use rank::{
    fractional_ranks, spearman, spearman_with, Correlation, PValueMethod, PermutationConfig,
    EXACT_PERMUTATION_MAX_N,
};
pub use summary::{lower_quantile, mean, summarize, Summary};

use crate::error::{Error, Result};

/// Whether larger values of a measure mean a better clustering.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Direction {
    HigherIsBetter,
    LowerIsBetter,
}

/// Looks up a measure by the name used in reports and run tables.
pub fn measure_direction(name: &str) -> Result<Direction> {
    match name {
        "nsm" | "nsm_approx" | "dunn" | "accuracy" | "mutual_information" | "homogeneity" => {
            Ok(Direction::HigherIsBetter)
        }
        "db" | "db_weighted" | "db-weighted" => Ok(Direction::LowerIsBetter),
        other => Err(Error::UnknownMeasure(other.to_string())),
    }
}

/// Flips the sign of a correlation for lower-is-better measures so that a
/// positive value always means "agrees with accuracy".
pub fn negate_for_lower_better(measure: &str, rho: f64) -> Result<f64> {
    Ok(match measure_direction(measure)? {
        Direction::HigherIsBetter => rho,
        Direction::LowerIsBetter => -rho,
    })
}
