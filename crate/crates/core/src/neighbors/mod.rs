//! Neighbor tables: exact brute force, explicit distance matrices, and the
//! clustering-based approximate variant.

mod approx;
mod exact;
mod matrix;
mod table;

pub use approx::{approximate_1nn, approximate_1nn_with, ApproxConfig};
pub use exact::{exact_knn, exact_knn_queries};
pub(crate) use exact::{select_top_k, Scorer};
pub use matrix::{knn_from_matrix, DistanceMatrixOracle};
pub use table::{NeighborSource, NeighborTable, MAX_K};
