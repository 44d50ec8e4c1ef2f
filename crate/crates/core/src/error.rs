//! Error type shared across the crate.

use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    /// Joint vector length does not match the chain's actuated joint count.
    #[error("joint vector has {got} entries, chain expects {expected}")]
    DimensionMismatch { expected: usize, got: usize },

    /// A joint value falls outside its configured range of motion.
    #[error("joint {joint} at {value_deg:.6} deg is outside [{min_deg:.6}, {max_deg:.6}] deg")]
    JointOutOfRange {
        joint: usize,
        value_deg: f64,
        min_deg: f64,
        max_deg: f64,
    },

    /// A numeric parameter violates its precondition (step/voxel size etc).
    #[error("invalid parameter: {0}")]
    Parameter(String),

    /// Voxel sets with different edge lengths cannot be intersected.
    #[error("voxel size mismatch: {left} vs {right}")]
    VoxelSizeMismatch { left: f64, right: f64 },

    /// Bad or inconsistent run configuration.
    #[error("configuration error: {0}")]
    Config(String),

    /// Every candidate pair was excluded by the zero-overlap rule.
    #[error("no feasible design pair: all {pairs} pairs have a zero overlap volume")]
    NoFeasiblePair { pairs: usize },

    #[error("cache unusable at {path}: {source}")]
    Cache {
        path: String,
        #[source]
        source: std::io::Error,
    },

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
