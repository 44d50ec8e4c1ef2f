//! Workspace sampling and the four dexterity measures: global
//! manipulability, voxel workspace volume, overlap volume, and distal
//! sensitivity.

use nalgebra::Matrix3xX;
use serde::{Deserialize, Serialize};

use crate::design::PhalanxTriple;
use crate::error::Result;
use crate::eval::GridWalker;
use crate::grid::{build_joint_grid, build_partial_grid, JointGrid};
use crate::kinematics::{BasePose, Point3, SerialChain};
use crate::model::{FingerId, HandModel};
use crate::voxel::VoxelSet;

/// One fingertip position per grid configuration, in grid order.
pub fn sample_workspace(chain: &SerialChain, grid: &JointGrid) -> Result<Vec<Point3>> {
    Ok(GridWalker::new(chain, grid)?.collect_points())
}

/// Yoshikawa measure sqrt(det(J J^T)); round-off negatives clamp to zero.
pub fn manipulability(jacobian: &Matrix3xX<f64>) -> f64 {
    let jjt = jacobian * jacobian.transpose();
    jjt.determinant().max(0.0).sqrt()
}

/// Mean manipulability over the grid, order-independent by construction.
pub fn global_manipulability(chain: &SerialChain, grid: &JointGrid) -> Result<f64> {
    Ok(GridWalker::new(chain, grid)?.global_manipulability())
}

/// Mean norm of the most-distal joint's Jacobian column over an F/E grid
/// (a grid whose non-flexion joints are pinned to single samples).
pub fn distal_sensitivity(chain: &SerialChain, fe_grid: &JointGrid) -> Result<f64> {
    Ok(GridWalker::new(chain, fe_grid)?.mean_distal_norm())
}

/// Per-design evaluation results for one chain.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricsRecord {
    pub design: PhalanxTriple,
    pub global_manipulability: f64,
    pub workspace_volume: f64,
    pub voxels: VoxelSet,
    pub distal_sensitivity: f64,
}

/// Finger-design results. Scalars are shared by all four fingers (identical
/// chains up to a rigid base move); the voxel sets are per finger because
/// the lattice sees each base differently.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FingerRecord {
    pub index: MetricsRecord,
    pub middle_voxels: VoxelSet,
    pub ring_voxels: VoxelSet,
    pub little_voxels: VoxelSet,
}

impl FingerRecord {
    pub fn voxel_sets(&self) -> [&VoxelSet; 4] {
        [
            &self.index.voxels,
            &self.middle_voxels,
            &self.ring_voxels,
            &self.little_voxels,
        ]
    }

    pub fn voxels_for(&self, finger: FingerId) -> &VoxelSet {
        match finger {
            FingerId::Index => &self.index.voxels,
            FingerId::Middle => &self.middle_voxels,
            FingerId::Ring => &self.ring_voxels,
            FingerId::Little => &self.little_voxels,
        }
    }
}

/// Grids and voxel settings shared by every design evaluation in a sweep.
#[derive(Debug, Clone)]
pub struct EvalContext {
    pub model: HandModel,
    pub thumb_step_deg: f64,
    pub finger_step_deg: f64,
    pub delta: f64,
    thumb_grid: JointGrid,
    thumb_fe_grid: JointGrid,
    finger_grid: JointGrid,
    finger_fe_grid: JointGrid,
}

impl EvalContext {
    pub fn new(
        model: HandModel,
        thumb_step_deg: f64,
        finger_step_deg: f64,
        delta: f64,
    ) -> Result<Self> {
        model.validate()?;
        let thumb_grid = build_joint_grid(&model.thumb_ranges, thumb_step_deg)?;
        let finger_grid = build_joint_grid(&model.finger_ranges, finger_step_deg)?;
        // The F/E sensitivity grids reuse each chain's workspace resolution.
        let thumb_fe_grid = build_partial_grid(
            &model.thumb_ranges,
            &model.thumb_fe_joints,
            thumb_step_deg,
            &model.thumb_sensitivity_posture_deg,
        )?;
        let finger_fe_grid = build_partial_grid(
            &model.finger_ranges,
            &model.finger_fe_joints,
            finger_step_deg,
            &model.finger_sensitivity_posture_deg,
        )?;
        if !(delta.is_finite() && delta > 0.0) {
            return Err(crate::error::Error::Parameter(format!(
                "voxel size must be positive, got {delta}"
            )));
        }
        Ok(EvalContext {
            model,
            thumb_step_deg,
            finger_step_deg,
            delta,
            thumb_grid,
            thumb_fe_grid,
            finger_grid,
            finger_fe_grid,
        })
    }

    pub fn thumb_grid(&self) -> &JointGrid {
        &self.thumb_grid
    }

    pub fn finger_grid(&self) -> &JointGrid {
        &self.finger_grid
    }

    /// Full evaluation of one thumb design.
    pub fn evaluate_thumb(&self, design: &PhalanxTriple) -> Result<MetricsRecord> {
        let chain = self.model.thumb_chain(design);
        let walker = GridWalker::new(&chain, &self.thumb_grid)?;
        let (w_g, mut sets) = walker.manipulability_and_voxels(&[BasePose::identity()], self.delta);
        let voxels = sets.pop().unwrap();
        let s_d = distal_sensitivity(&chain, &self.thumb_fe_grid)?;
        Ok(MetricsRecord {
            design: *design,
            global_manipulability: w_g,
            workspace_volume: voxels.volume(),
            voxels,
            distal_sensitivity: s_d,
        })
    }

    /// Full evaluation of one finger design: one kinematic sweep, four voxel
    /// sets (one per finger base).
    pub fn evaluate_finger(&self, design: &PhalanxTriple) -> Result<FingerRecord> {
        let chain = self.model.finger_chain_local(design);
        let walker = GridWalker::new(&chain, &self.finger_grid)?;
        let (w_g, sets) = walker.manipulability_and_voxels(&self.model.finger_bases, self.delta);
        let s_d = distal_sensitivity(&chain, &self.finger_fe_grid)?;
        let mut sets = sets.into_iter();
        let index_voxels = sets.next().unwrap();
        Ok(FingerRecord {
            index: MetricsRecord {
                design: *design,
                global_manipulability: w_g,
                workspace_volume: index_voxels.volume(),
                voxels: index_voxels,
                distal_sensitivity: s_d,
            },
            middle_voxels: sets.next().unwrap(),
            ring_voxels: sets.next().unwrap(),
            little_voxels: sets.next().unwrap(),
        })
    }

    /// Voxel sets of one chain at several voxel sizes in a single kinematic
    /// pass (resolution studies).
    pub fn voxel_sets_multi_delta(
        &self,
        chain: &SerialChain,
        grid: &JointGrid,
        base: &BasePose,
        deltas: &[f64],
    ) -> Result<Vec<VoxelSet>> {
        let walker = GridWalker::new(chain, grid)?;
        Ok(walker.voxel_sets(std::slice::from_ref(base), deltas).pop().unwrap())
    }
}
