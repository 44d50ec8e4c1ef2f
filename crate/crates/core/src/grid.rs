//! Uniform joint-space grids.
//!
//! Sample k of joint i is `q_min + k * step` (degrees), k starting at zero.
//! Endpoints are included whenever the span is an integer multiple of the
//! step. Configurations are ordered lexicographically, first joint outermost.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::kinematics::{JointRange, SerialChain};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct JointSamples {
    pub values_deg: Vec<f64>,
    pub step_deg: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct JointGrid {
    pub joints: Vec<JointSamples>,
}

impl JointGrid {
    /// Total number of configurations, the product of per-joint counts.
    pub fn config_count(&self) -> u64 {
        self.joints.iter().map(|j| j.values_deg.len() as u64).product()
    }

    pub fn dof(&self) -> usize {
        self.joints.len()
    }

    /// True when every sample lies inside the matching range of `chain`.
    pub fn fits_chain(&self, chain: &SerialChain) -> bool {
        self.dof() == chain.dof()
            && self
                .joints
                .iter()
                .zip(&chain.ranges)
                .all(|(j, r)| {
                    j.values_deg
                        .iter()
                        .all(|&v| v >= r.min_deg && v <= r.max_deg)
                })
    }
}

fn sample_range(range: &JointRange, step_deg: f64) -> Vec<f64> {
    let mut n = (range.span_deg() / step_deg).floor() as usize + 1;
    while n > 1 && range.min_deg + (n - 1) as f64 * step_deg > range.max_deg {
        n -= 1;
    }
    (0..n).map(|k| range.min_deg + k as f64 * step_deg).collect()
}

/// Uniform grid over all joints with a common angular step (degrees).
pub fn build_joint_grid(ranges: &[JointRange], step_deg: f64) -> Result<JointGrid> {
    if !(step_deg.is_finite() && step_deg > 0.0) {
        return Err(Error::Parameter(format!(
            "grid step must be positive, got {step_deg}"
        )));
    }
    Ok(JointGrid {
        joints: ranges
            .iter()
            .map(|r| JointSamples {
                values_deg: sample_range(r, step_deg),
                step_deg,
            })
            .collect(),
    })
}

/// Grid that sweeps only the joints named in `free` (indices into the
/// actuated joints); every other joint is pinned to `fixed_deg`.
pub fn build_partial_grid(
    ranges: &[JointRange],
    free: &[usize],
    step_deg: f64,
    fixed_deg: &[f64],
) -> Result<JointGrid> {
    if !(step_deg.is_finite() && step_deg > 0.0) {
        return Err(Error::Parameter(format!(
            "grid step must be positive, got {step_deg}"
        )));
    }
    let fixed_count = ranges.len() - free.len();
    if fixed_deg.len() != fixed_count {
        return Err(Error::Parameter(format!(
            "expected {fixed_count} fixed joint values, got {}",
            fixed_deg.len()
        )));
    }
    let mut fixed_iter = fixed_deg.iter();
    let joints = ranges
        .iter()
        .enumerate()
        .map(|(i, r)| {
            if free.contains(&i) {
                Ok(JointSamples {
                    values_deg: sample_range(r, step_deg),
                    step_deg,
                })
            } else {
                let v = *fixed_iter.next().unwrap();
                if v < r.min_deg || v > r.max_deg {
                    return Err(Error::Parameter(format!(
                        "fixed posture {v} deg for joint {} is outside [{}, {}]",
                        i + 1,
                        r.min_deg,
                        r.max_deg
                    )));
                }
                Ok(JointSamples {
                    values_deg: vec![v],
                    step_deg,
                })
            }
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(JointGrid { joints })
}
