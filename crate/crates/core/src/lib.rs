//! Potential-dexterity evaluation and phalanx-length optimization for a
//! five-finger robotic hand.
//!
//! The crate models a 5-DoF thumb and four 4-DoF fingers as modified-DH
//! chains, samples their fingertip workspaces on uniform joint grids, and
//! scores designs by global manipulability, voxelized workspace volume,
//! thumb-finger overlap volume, and distal-joint sensitivity. An exhaustive
//! search over integer phalanx-length triples maximizes a weighted,
//! normalized objective over all thumb-finger design pairs.

pub mod cache;
pub mod config;
pub mod design;
mod eval;
pub mod error;
pub mod grid;
pub mod kinematics;
pub mod metrics;
pub mod model;
pub mod report;
pub mod sweep;
pub mod voxel;

pub use design::{
    enumerate_feasible_designs, search_optimal_pair, NormalizationConstants, NormalizationMode,
    OptimizationResult, PairTable, PhalanxTriple, Weights,
};
pub use error::{Error, Result};
pub use grid::{build_joint_grid, JointGrid};
pub use kinematics::{
    chain_transform, fingertip_position, link_transform, positional_jacobian, BasePose, DhRow,
    JointRange, Point3, SerialChain,
};
pub use metrics::{
    distal_sensitivity, global_manipulability, manipulability, sample_workspace, FingerRecord,
    MetricsRecord,
};
pub use model::{FingerId, HandGeometry, HandModel};
pub use voxel::{overlap_volume, voxelize, workspace_volume, VoxelSet};
