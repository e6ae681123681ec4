//! Neighborhood-stability measures over a precomputed nearest-neighbor table.
//!
//! Every measure reads column 0 of a self-mode [`NeighborTable`](crate::NeighborTable),
//! so one table serves any number of clusterings of the same dataset.

mod covers;
mod measures;

pub use covers::{
    enumerate_ball_covers, sample_ball_covers, verify_cover_expectation, BallCover, GroupedCoverReport,
    CoverExpectationReport, MAX_ENUMERATION_POINTS,
};
pub use measures::{
    ball, clusterability_tail_bound, clustering_nsm, clustering_nsm_detailed, point_nsm,
    point_nsm_distribution, sample_size, set_nsm, ClusteringNsm, PointNsmDistribution,
};
