//! File exports and text reports. Numeric text uses fixed 6-decimal
//! formatting and every report embeds the resolved configuration, so two
//! runs with the same config produce byte-identical output.

use std::io::Write;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::config::RunConfig;
use crate::design::{
    group_cases, CaseGroup, NormalizationConstants, OptimizationResult, Weights,
};
use crate::error::Result;
use crate::model::{DesignSlot, HandModel, LinkParam, RowTemplate};
use crate::sweep::ResolutionStudyReport;
use crate::voxel::VoxelSet;

pub fn fmt6(x: f64) -> String {
    format!("{x:.6}")
}

fn write_atomic(path: &Path, bytes: &[u8]) -> Result<()> {
    if let Some(dir) = path.parent() {
        if !dir.as_os_str().is_empty() {
            std::fs::create_dir_all(dir)?;
        }
    }
    let mut f = std::fs::File::create(path)?;
    f.write_all(bytes)?;
    Ok(())
}

/// Scored-pair table: one row per (thumb, finger) pair.
pub fn scored_pairs_csv(result: &OptimizationResult) -> String {
    let mut out = String::from("thumb,finger,z1,z2w,z2o,z2,z3,objective,excluded\n");
    for row in &result.table {
        out.push_str(&format!(
            "{},{},{},{},{},{},{},{},{}\n",
            row.thumb,
            row.finger,
            fmt6(row.z1),
            fmt6(row.z2w),
            fmt6(row.z2o),
            fmt6(row.z2),
            fmt6(row.z3),
            fmt6(row.objective),
            if row.excluded { 1 } else { 0 }
        ));
    }
    out
}

pub fn write_scored_pairs_csv(path: &Path, result: &OptimizationResult) -> Result<()> {
    write_atomic(path, scored_pairs_csv(result).as_bytes())
}

/// Voxel set as `vx,vy,vz` integer rows.
pub fn voxels_csv(set: &VoxelSet) -> String {
    let mut out = String::from("vx,vy,vz\n");
    for c in set.cells() {
        out.push_str(&format!("{},{},{}\n", c[0], c[1], c[2]));
    }
    out
}

pub fn write_voxels_csv(path: &Path, set: &VoxelSet) -> Result<()> {
    write_atomic(path, voxels_csv(set).as_bytes())
}

/// ASCII point cloud of voxel centers (`x y z` per line).
pub fn point_cloud(set: &VoxelSet) -> String {
    let mut out = String::new();
    for c in set.cell_centers() {
        out.push_str(&format!("{} {} {}\n", fmt6(c[0]), fmt6(c[1]), fmt6(c[2])));
    }
    out
}

pub fn write_point_cloud(path: &Path, set: &VoxelSet) -> Result<()> {
    write_atomic(path, point_cloud(set).as_bytes())
}

/// Winner summary written by `optimize` (the full table goes to CSV).
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct WinnerReport {
    pub config: RunConfig,
    pub normalization: NormalizationConstants,
    pub weights: Weights,
    pub thumb: crate::design::PhalanxTriple,
    pub finger: crate::design::PhalanxTriple,
    pub objective: f64,
    pub contributions: [f64; 3],
    pub excluded_pairs: usize,
    pub winner: crate::design::WinnerMetrics,
}

impl WinnerReport {
    pub fn new(
        config: &RunConfig,
        norms: &NormalizationConstants,
        result: &OptimizationResult,
    ) -> Self {
        WinnerReport {
            config: config.clone(),
            normalization: *norms,
            weights: result.weights,
            thumb: result.thumb,
            finger: result.finger,
            objective: result.objective,
            contributions: result.contributions,
            excluded_pairs: result.excluded_pairs,
            winner: result.winner,
        }
    }
}

pub fn write_winner_json(path: &Path, report: &WinnerReport) -> Result<()> {
    let mut bytes = serde_json::to_vec_pretty(report).expect("report serializes");
    bytes.push(b'\n');
    write_atomic(path, &bytes)
}

/// Per-case deltas relative to case 1, in percent.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct CaseDeltas {
    pub thumb_workspace_pct: f64,
    pub index_workspace_pct: f64,
    pub overlap_pct: f64,
    pub thumb_manipulability_pct: f64,
    pub index_manipulability_pct: f64,
    pub thumb_sensitivity_pct: f64,
    pub index_sensitivity_pct: f64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct CaseSummary {
    pub case: usize,
    pub weights: Weights,
    pub group: char,
    pub thumb: crate::design::PhalanxTriple,
    pub finger: crate::design::PhalanxTriple,
    pub objective: f64,
    pub contributions: [f64; 3],
    pub excluded_pairs: usize,
    pub winner: crate::design::WinnerMetrics,
    pub vs_case1: Option<CaseDeltas>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct CaseReport {
    pub config: RunConfig,
    pub normalization: NormalizationConstants,
    pub groups: Vec<CaseGroup>,
    pub cases: Vec<CaseSummary>,
}

fn pct(now: f64, then: f64) -> f64 {
    100.0 * (now - then) / then
}

impl CaseReport {
    pub fn new(
        config: &RunConfig,
        norms: &NormalizationConstants,
        results: &[OptimizationResult],
    ) -> Self {
        let groups = group_cases(results);
        let label_of = |r: &OptimizationResult| {
            groups
                .iter()
                .find(|g| g.thumb == r.thumb && g.finger == r.finger)
                .map(|g| g.label)
                .unwrap_or('?')
        };
        let first = results.first();
        let cases = results
            .iter()
            .enumerate()
            .map(|(i, r)| CaseSummary {
                case: i + 1,
                weights: r.weights,
                group: label_of(r),
                thumb: r.thumb,
                finger: r.finger,
                objective: r.objective,
                contributions: r.contributions,
                excluded_pairs: r.excluded_pairs,
                winner: r.winner,
                vs_case1: match (i, first) {
                    (0, _) | (_, None) => None,
                    (_, Some(base)) => Some(CaseDeltas {
                        thumb_workspace_pct: pct(
                            r.winner.thumb_workspace_volume,
                            base.winner.thumb_workspace_volume,
                        ),
                        index_workspace_pct: pct(
                            r.winner.index_workspace_volume,
                            base.winner.index_workspace_volume,
                        ),
                        overlap_pct: pct(
                            r.winner.overlap_volume_total,
                            base.winner.overlap_volume_total,
                        ),
                        thumb_manipulability_pct: pct(
                            r.winner.thumb_manipulability,
                            base.winner.thumb_manipulability,
                        ),
                        index_manipulability_pct: pct(
                            r.winner.index_manipulability,
                            base.winner.index_manipulability,
                        ),
                        thumb_sensitivity_pct: pct(
                            r.winner.thumb_sensitivity,
                            base.winner.thumb_sensitivity,
                        ),
                        index_sensitivity_pct: pct(
                            r.winner.index_sensitivity,
                            base.winner.index_sensitivity,
                        ),
                    }),
                },
            })
            .collect();
        CaseReport {
            config: config.clone(),
            normalization: *norms,
            groups,
            cases,
        }
    }

    /// Group table in plain text.
    pub fn group_table(&self) -> String {
        let mut out = String::from("group  thumb     finger    cases\n");
        for g in &self.groups {
            let cases = g
                .cases
                .iter()
                .map(|c| c.to_string())
                .collect::<Vec<_>>()
                .join(",");
            out.push_str(&format!(
                "{:<6} {:<9} {:<9} {}\n",
                g.label,
                g.thumb.to_string(),
                g.finger.to_string(),
                cases
            ));
        }
        out
    }
}

pub fn write_case_report_json(path: &Path, report: &CaseReport) -> Result<()> {
    let mut bytes = serde_json::to_vec_pretty(report).expect("report serializes");
    bytes.push(b'\n');
    write_atomic(path, &bytes)
}

/// Plain-text resolution-study table, one block per voxel size, volumes by
/// resolution, with the convergence flag on the first sub-2% step.
pub fn resolution_study_text(config: &RunConfig, report: &ResolutionStudyReport) -> String {
    let mut out = String::new();
    out.push_str("# workspace volumes by voxel size and joint resolution\n");
    out.push_str(&format!(
        "# thumb design {} / finger design {}\n",
        report.thumb_design, report.finger_design
    ));
    out.push_str("# config:\n");
    for line in toml::to_string(config).expect("config serializes").lines() {
        out.push_str(&format!("#   {line}\n"));
    }
    for chain in ["thumb", "finger"] {
        out.push_str(&format!("\n[{chain}]\n"));
        out.push_str("voxel    resolution  cells     volume     change     converged\n");
        for row in report.rows.iter().filter(|r| r.chain == chain) {
            out.push_str(&format!(
                "{:<8} {:<11} {:<9} {:<10} {:<10} {}\n",
                row.delta,
                format!("{} deg", row.resolution_deg),
                row.cells,
                fmt6(row.volume),
                row.rel_change.map(fmt6).unwrap_or_else(|| "-".into()),
                if row.converged { "<2%" } else { "" }
            ));
        }
    }
    out
}

fn link_param_text(p: &LinkParam, slot_names: &[&str; 3]) -> String {
    match p {
        LinkParam::Fixed(v) => fmt6(*v),
        LinkParam::Slot(DesignSlot::Proximal) => slot_names[0].to_string(),
        LinkParam::Slot(DesignSlot::Middle) => slot_names[1].to_string(),
        LinkParam::Slot(DesignSlot::Distal) => slot_names[2].to_string(),
    }
}

fn rows_text(rows: &[RowTemplate], slot_names: &[&str; 3], theta_suffix: &str) -> String {
    let mut out = String::from("  i  alpha_prev  a_prev     d          theta\n");
    for (i, r) in rows.iter().enumerate() {
        let theta = if r.actuated {
            format!("theta{}{theta_suffix} (actuated)", i + 1)
        } else {
            format!("{} deg (fixed)", r.theta_deg)
        };
        out.push_str(&format!(
            "  {}  alpha={:<6} a={:<8} d={:<8} theta={}\n",
            i + 1,
            r.alpha_deg,
            link_param_text(&r.a, slot_names),
            link_param_text(&r.d, slot_names),
            theta
        ));
    }
    out
}

/// Row numbers (1-based, matching the DH table) of the actuated joints
/// named by actuated-order indices.
fn joint_rows(rows: &[RowTemplate], actuated_indices: &[usize]) -> Vec<usize> {
    let actuated_rows: Vec<usize> = rows
        .iter()
        .enumerate()
        .filter(|(_, r)| r.actuated)
        .map(|(i, _)| i + 1)
        .collect();
    actuated_indices.iter().map(|&j| actuated_rows[j]).collect()
}

/// Full dump of the resolved model: geometry constants, DH tables, joint
/// ranges, base poses, F/E joint sets, and sensitivity postures.
pub fn model_dump(model: &HandModel) -> String {
    let g = &model.geometry;
    let mut out = String::new();
    out.push_str("hand geometry (hand-length units)\n");
    out.push_str(&format!(
        "  HL={} HW={} lt={} lf={} a1={} a0'={} a1'={} d1={} d2={}\n",
        g.hand_length, g.hand_width, g.thumb_length, g.finger_length, g.a1, g.a0p, g.a1p, g.d1,
        g.d2
    ));

    out.push_str("\nthumb DH rows (modified convention)\n");
    out.push_str(&rows_text(&model.thumb_rows, &["a2'", "a4'", "a5'"], "'"));
    out.push_str("thumb joint ranges (deg)\n");
    for (i, r) in model.thumb_ranges.iter().enumerate() {
        out.push_str(&format!("  theta{}': [{}, {}]\n", i + 1, r.min_deg, r.max_deg));
    }
    out.push_str(&format!(
        "thumb base: translation=({}, {}, {}) rotation={}\n",
        model.thumb_base.translation.x,
        model.thumb_base.translation.y,
        model.thumb_base.translation.z,
        if model.thumb_base.rotation == nalgebra::Matrix3::identity() {
            "identity".to_string()
        } else {
            format!("{:?}", model.thumb_base.rotation)
        }
    ));
    out.push_str(&format!(
        "thumb F/E joints (table rows): {:?}, sensitivity posture (deg) for the others: {:?}\n",
        joint_rows(&model.thumb_rows, &model.thumb_fe_joints),
        model.thumb_sensitivity_posture_deg
    ));

    out.push_str("\nfinger DH rows (modified convention)\n");
    out.push_str(&rows_text(&model.finger_rows, &["a3", "a4", "a5"], ""));
    out.push_str("finger joint ranges (deg)\n");
    for (i, r) in model.finger_ranges.iter().enumerate() {
        out.push_str(&format!("  theta{}: [{}, {}]\n", i + 2, r.min_deg, r.max_deg));
    }
    for (finger, base) in crate::model::FingerId::ALL.iter().zip(&model.finger_bases) {
        out.push_str(&format!(
            "finger base {}: translation=({}, {}, {}) rotation={}\n",
            finger.name(),
            base.translation.x,
            base.translation.y,
            base.translation.z,
            if base.rotation == nalgebra::Matrix3::identity() {
                "identity".to_string()
            } else {
                format!("{:?}", base.rotation)
            }
        ));
    }
    out.push_str(&format!(
        "finger F/E joints (table rows): {:?}, sensitivity posture (deg) for the others: {:?}\n",
        joint_rows(&model.finger_rows, &model.finger_fe_joints),
        model.finger_sensitivity_posture_deg
    ));
    out
}
