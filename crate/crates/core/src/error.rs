use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("ambient dimension mismatch: {0} vs {1}")]
    DimensionMismatch(usize, usize),

    #[error(
        "direction set is rank-deficient (expected {expected} independent vectors, found {found})"
    )]
    RankDeficient { expected: usize, found: usize },

    #[error("point is not on the flat (distance {0:e})")]
    PointNotOnFlat(f64),

    #[error("flats are not disjoint (distance {0:e})")]
    NotDisjoint(f64),

    #[error("parallel dimension {found} is below the required {required}")]
    ParallelDimensionTooSmall { found: usize, required: usize },

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("quadrature did not converge after {0} subdivisions")]
    NonConvergence(usize),

    #[error("lattice enumeration exceeded {0} translations; lattice is nearly degenerate")]
    EnumerationGuard(usize),

    #[error("invalid packing: {0}")]
    InvalidPacking(String),

    #[error("slice boundary could not be assembled: {0}")]
    SliceAssembly(String),

    #[error("core index {index} out of range ({count} cores)")]
    BadIndex { index: usize, count: usize },
}
