//! Neighborhood-stability measures for vector datasets.

pub mod baselines;
pub mod dataset;
pub mod error;
pub mod io;
pub mod ivf;
pub mod kmeans;
pub mod metric;
pub mod neighbors;
pub mod partition;
pub mod protocol;
pub mod stability;
pub mod stats;

pub use dataset::{Dataset, Matrix};
pub use error::{Error, Result};
pub use metric::{comparator_value, Metric};
pub use neighbors::{NeighborSource, NeighborTable};
pub use partition::{Clustering, WeightScheme};

#[cfg(doctest)]
mod book {
    #[doc = include_str!("../../../book/src/intro.md")]
    mod intro {}
    #[doc = include_str!("../../../book/src/neighbors.md")]
    mod neighbors {}
    #[doc = include_str!("../../../book/src/stability.md")]
    mod stability {}
    #[doc = include_str!("../../../book/src/covers.md")]
    mod covers {}
    #[doc = include_str!("../../../book/src/baselines.md")]
    mod baselines {}
    #[doc = include_str!("../../../book/src/ivf.md")]
    mod ivf {}
    #[doc = include_str!("../../../book/src/protocol.md")]
    mod protocol {}
    #[doc = include_str!("../../../book/src/cli.md")]
    mod cli {}
}
