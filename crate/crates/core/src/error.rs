use std::io;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

/// Every failure the toolkit can report.
///
/// Variants are grouped by [`ErrorClass`] so front ends can map them onto
/// stable exit codes.
#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimMismatch { expected: usize, got: usize },
    #[error("zero-norm vector{} is undefined under cosine or spherical geometry", fmt_row(*row))]
    ZeroVector { row: Option<usize> },
    #[error("invalid dataset: {0}")]
    InvalidDataset(String),
    #[error("k = {k} is out of range (at most {max} neighbors available)")]
    KTooLarge { k: usize, max: usize },
    #[error("{clusters} clusters requested for {points} points")]
    TooManyClusters { clusters: usize, points: usize },
    #[error("invalid configuration: {0}")]
    InvalidConfig(String),
    #[error("neighbor table: {0}")]
    InvalidTable(String),
    #[error("invalid clustering: {0}")]
    InvalidClustering(String),

    #[error("the set is empty")]
    EmptySet,
    #[error("point {id} is not covered by a neighbor table of {rows} rows")]
    MissingRows { id: usize, rows: usize },
    #[error("every cluster is empty")]
    AllClustersEmpty,
    #[error("radius {radius} needs {needed} neighbors per point but the table stores {k}")]
    RadiusTooLarge { radius: usize, needed: usize, k: usize },
    #[error("radius must be at least 2, got {0}")]
    RadiusTooSmall(usize),
    #[error("instance too large for exhaustive enumeration: {size} > {max}")]
    TooLarge { size: usize, max: usize },
    #[error("no ball cover exists for this radius")]
    NoCoverExists,

    #[error("every cluster is a singleton, so the maximum diameter is zero")]
    DegenerateDiameterZero,
    #[error("at least two nonempty clusters are required, found {0}")]
    FewerThanTwoClusters(usize),
    #[error("clusters {0} and {1} have coincident centroids")]
    CoincidentCentroids(usize, usize),

    #[error("nprobe = {probes} must lie in 1..={clusters}")]
    BadProbeCount { probes: usize, clusters: usize },
    #[error("length mismatch: {left} vs {right}")]
    LengthMismatch { left: usize, right: usize },
    #[error("at least {min} observations are required, got {n}")]
    TooShort { n: usize, min: usize },
    #[error("input has zero variance, the rank correlation is undefined")]
    ZeroVariance,
    #[error("unknown measure `{0}`")]
    UnknownMeasure(String),
    #[error("no values to summarize")]
    Empty,

    #[error("truncated record at byte offset {offset}")]
    TruncatedRecord { offset: usize },
    #[error("record {record} has dimension {got}, expected {expected}")]
    InconsistentDim { record: usize, expected: usize, got: usize },
    #[error("record {record} declares non-positive dimension {dim}")]
    NonPositiveDim { record: usize, dim: i32 },
    #[error("record {record} contains a non-finite value")]
    NonFinite { record: usize },
    #[error("record {record} contains negative id {value}")]
    NegativeId { record: usize, value: i32 },
    #[error("malformed table: {0}")]
    Format(String),
    #[error("invalid generator parameters: {0}")]
    BadParams(String),

    #[error(transparent)]
    Io(#[from] io::Error),
    #[error(transparent)]
    Csv(#[from] csv::Error),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

fn fmt_row(row: Option<usize>) -> String {
    match row {
        Some(r) => format!(" (row {r})"),
        None => String::new(),
    }
}

/// Coarse failure class; the CLI turns it into an exit code.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ErrorClass {
    Usage,
    DataFormat,
    Numeric,
}

impl ErrorClass {
    pub fn exit_code(self) -> i32 {
        match self {
            ErrorClass::Usage => 2,
            ErrorClass::DataFormat => 3,
            ErrorClass::Numeric => 4,
        }
    }
}

impl Error {
    /// Stable machine-readable name of the variant.
    pub fn code(&self) -> &'static str {
        use Error::*;
        match self {
            DimMismatch { .. } => "DimMismatch",
            ZeroVector { .. } => "ZeroVector",
            InvalidDataset(_) => "InvalidDataset",
            KTooLarge { .. } => "KTooLarge",
            TooManyClusters { .. } => "TooManyClusters",
            InvalidConfig(_) => "InvalidConfig",
            InvalidTable(_) => "InvalidTable",
            InvalidClustering(_) => "InvalidClustering",
            EmptySet => "EmptySet",
            MissingRows { .. } => "MissingRows",
            AllClustersEmpty => "AllClustersEmpty",
            RadiusTooLarge { .. } => "RadiusTooLarge",
            RadiusTooSmall(_) => "RadiusTooSmall",
            TooLarge { .. } => "TooLarge",
            NoCoverExists => "NoCoverExists",
            DegenerateDiameterZero => "DegenerateDiameterZero",
            FewerThanTwoClusters(_) => "FewerThanTwoClusters",
            CoincidentCentroids(..) => "CoincidentCentroids",
            BadProbeCount { .. } => "BadProbeCount",
            LengthMismatch { .. } => "LengthMismatch",
            TooShort { .. } => "TooShort",
            ZeroVariance => "ZeroVariance",
            UnknownMeasure(_) => "UnknownMeasure",
            Empty => "Empty",
            TruncatedRecord { .. } => "TruncatedRecord",
            InconsistentDim { .. } => "InconsistentDim",
            NonPositiveDim { .. } => "NonPositiveDim",
            NonFinite { .. } => "NonFinite",
            NegativeId { .. } => "NegativeId",
            Format(_) => "Format",
            BadParams(_) => "BadParams",
            Io(_) => "Io",
            Csv(_) => "Csv",
            Json(_) => "Json",
        }
    }

    pub fn class(&self) -> ErrorClass {
        use Error::*;
        match self {
            KTooLarge { .. }
            | TooManyClusters { .. }
            | InvalidConfig(_)
            | RadiusTooLarge { .. }
            | RadiusTooSmall(_)
            | TooLarge { .. }
            | BadProbeCount { .. }
            | UnknownMeasure(_)
            | BadParams(_) => ErrorClass::Usage,
            DimMismatch { .. }
            | InvalidDataset(_)
            | InvalidTable(_)
            | InvalidClustering(_)
            | MissingRows { .. }
            | LengthMismatch { .. }
            | TruncatedRecord { .. }
            | InconsistentDim { .. }
            | NonPositiveDim { .. }
            | NonFinite { .. }
            | NegativeId { .. }
            | Format(_)
            | Io(_)
            | Csv(_)
            | Json(_) => ErrorClass::DataFormat,
            ZeroVector { .. }
            | EmptySet
            | AllClustersEmpty
            | NoCoverExists
            | DegenerateDiameterZero
            | FewerThanTwoClusters(_)
            | CoincidentCentroids(..)
            | TooShort { .. }
            | ZeroVariance
            | Empty => ErrorClass::Numeric,
        }
    }
}
