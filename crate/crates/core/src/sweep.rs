//! Sweep orchestration: compute or load a metrics record per design, backed
//! by the content-hash cache, plus the voxel/resolution study.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::cache::{record_key, CachedRecord, RecordCache};
use crate::design::PhalanxTriple;
use crate::error::Result;
use crate::grid::build_joint_grid;
use crate::metrics::{EvalContext, FingerRecord, MetricsRecord};
use crate::model::FingerId;

/// Progress callback payload, one per design.
#[derive(Debug, Clone, Copy)]
pub struct Progress {
    pub chain: &'static str,
    pub design: PhalanxTriple,
    pub index: usize,
    pub total: usize,
    pub cached: bool,
}

/// All records of one sweep, ordered by design triple.
#[derive(Debug, Clone, Default)]
pub struct RecordStore {
    pub thumb: BTreeMap<PhalanxTriple, MetricsRecord>,
    pub finger: BTreeMap<PhalanxTriple, FingerRecord>,
}

impl RecordStore {
    pub fn thumb_records(&self) -> Vec<MetricsRecord> {
        self.thumb.values().cloned().collect()
    }

    pub fn finger_records(&self) -> Vec<FingerRecord> {
        self.finger.values().cloned().collect()
    }

    /// Records restricted to a design subset, in triple order.
    pub fn thumb_subset(&self, designs: &[PhalanxTriple]) -> Vec<MetricsRecord> {
        let mut designs = designs.to_vec();
        designs.sort_unstable();
        designs
            .iter()
            .filter_map(|d| self.thumb.get(d).cloned())
            .collect()
    }

    pub fn finger_subset(&self, designs: &[PhalanxTriple]) -> Vec<FingerRecord> {
        let mut designs = designs.to_vec();
        designs.sort_unstable();
        designs
            .iter()
            .filter_map(|d| self.finger.get(d).cloned())
            .collect()
    }
}

/// Compute (or serve from cache) a record for every requested design.
/// Designs are processed in triple order; each evaluation parallelizes
/// internally, so the store contents do not depend on the worker count.
pub fn ensure_records(
    ctx: &EvalContext,
    cache: &mut RecordCache,
    thumb_designs: &[PhalanxTriple],
    finger_designs: &[PhalanxTriple],
    mut progress: impl FnMut(Progress),
) -> Result<RecordStore> {
    let mut store = RecordStore::default();

    let mut thumbs = thumb_designs.to_vec();
    thumbs.sort_unstable();
    thumbs.dedup();
    let mut fingers = finger_designs.to_vec();
    fingers.sort_unstable();
    fingers.dedup();

    for (i, design) in thumbs.iter().enumerate() {
        let key = record_key("thumb", design, &ctx.model, ctx.thumb_step_deg, ctx.delta);
        let (record, cached) = match cache.get_thumb(&key) {
            Some(r) => (r.clone(), true),
            None => {
                let r = ctx.evaluate_thumb(design)?;
                cache.insert(key, CachedRecord::Thumb(r.clone()));
                (r, false)
            }
        };
        progress(Progress {
            chain: "thumb",
            design: *design,
            index: i + 1,
            total: thumbs.len(),
            cached,
        });
        store.thumb.insert(*design, record);
    }

    for (i, design) in fingers.iter().enumerate() {
        let key = record_key("finger", design, &ctx.model, ctx.finger_step_deg, ctx.delta);
        let (record, cached) = match cache.get_finger(&key) {
            Some(r) => (r.clone(), true),
            None => {
                let r = ctx.evaluate_finger(design)?;
                cache.insert(key, CachedRecord::Finger(r.clone()));
                (r, false)
            }
        };
        progress(Progress {
            chain: "finger",
            design: *design,
            index: i + 1,
            total: fingers.len(),
            cached,
        });
        store.finger.insert(*design, record);
    }

    cache.flush()?;
    Ok(store)
}

/// Re-evaluate a deterministic sample of cached records and compare them
/// bit-for-bit against fresh computations. Returns (checked, mismatches).
pub fn verify_cache(
    ctx: &EvalContext,
    cache: &RecordCache,
    fraction: f64,
    mut report: impl FnMut(&str),
) -> Result<(usize, usize)> {
    let entries = cache.entries_sorted();
    // Keys are uniform hashes, so sampling by key prefix is both random
    // and reproducible across runs.
    let keep = ((entries.len() as f64) * fraction).ceil() as usize;
    let mut checked = 0usize;
    let mut mismatches = 0usize;
    for (key, entry) in entries.into_iter().take(keep) {
        let design = entry.design();
        let fresh = match entry {
            CachedRecord::Thumb(cached) => {
                let expected_key =
                    record_key("thumb", &design, &ctx.model, ctx.thumb_step_deg, ctx.delta);
                if *key != expected_key {
                    continue; // record belongs to a different configuration
                }
                checked += 1;
                CachedRecord::Thumb(ctx.evaluate_thumb(&design)?) == CachedRecord::Thumb(cached.clone())
            }
            CachedRecord::Finger(cached) => {
                let expected_key =
                    record_key("finger", &design, &ctx.model, ctx.finger_step_deg, ctx.delta);
                if *key != expected_key {
                    continue;
                }
                checked += 1;
                CachedRecord::Finger(ctx.evaluate_finger(&design)?) == CachedRecord::Finger(cached.clone())
            }
        };
        if !fresh {
            mismatches += 1;
            report(&format!("cache mismatch for design {design} (key {key})"));
        }
    }
    Ok((checked, mismatches))
}

/// One row of the voxel/resolution study.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StudyRow {
    pub chain: String,
    pub delta: f64,
    pub resolution_deg: f64,
    pub cells: usize,
    pub volume: f64,
    /// |V - V_prev| / V_prev against the previous (coarser) resolution.
    pub rel_change: Option<f64>,
    /// First resolution in the ladder whose change dropped below 2%.
    pub converged: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ResolutionStudyReport {
    pub thumb_design: PhalanxTriple,
    pub finger_design: PhalanxTriple,
    pub resolutions_deg: Vec<f64>,
    pub voxel_sizes: Vec<f64>,
    pub rows: Vec<StudyRow>,
}

impl ResolutionStudyReport {
    pub fn volume(&self, chain: &str, delta: f64, resolution_deg: f64) -> Option<f64> {
        self.rows
            .iter()
            .find(|r| r.chain == chain && r.delta == delta && r.resolution_deg == resolution_deg)
            .map(|r| r.volume)
    }
}

/// Workspace volumes of the equal-length reference designs while the joint
/// resolution decreases along the ladder, at every requested voxel size.
/// One kinematic pass per (chain, resolution) feeds all voxel sizes.
pub fn resolution_study(
    ctx: &EvalContext,
    resolutions_deg: &[f64],
    voxel_sizes: &[f64],
) -> Result<ResolutionStudyReport> {
    let thumb_design = PhalanxTriple::new(17, 17, 17);
    let finger_design = PhalanxTriple::new(15, 15, 15);
    let mut rows = Vec::new();

    let chains = [
        ("thumb", ctx.model.thumb_chain(&thumb_design), crate::kinematics::BasePose::identity()),
        (
            "finger",
            ctx.model.finger_chain_local(&finger_design),
            ctx.model.finger_base(FingerId::Index),
        ),
    ];

    for (name, chain, base) in &chains {
        // volumes[di][ri]
        let mut volumes: Vec<Vec<(usize, f64)>> = vec![Vec::new(); voxel_sizes.len()];
        for &res in resolutions_deg {
            let grid = build_joint_grid(&chain.ranges, res)?;
            let sets = ctx.voxel_sets_multi_delta(chain, &grid, base, voxel_sizes)?;
            for (di, set) in sets.iter().enumerate() {
                volumes[di].push((set.len(), set.volume()));
            }
        }
        for (di, &delta) in voxel_sizes.iter().enumerate() {
            let mut converged_seen = false;
            for (ri, &res) in resolutions_deg.iter().enumerate() {
                let (cells, volume) = volumes[di][ri];
                let rel_change = (ri > 0).then(|| {
                    let prev = volumes[di][ri - 1].1;
                    (volume - prev).abs() / prev
                });
                let converged = match rel_change {
                    Some(c) if !converged_seen && c < 0.02 => {
                        converged_seen = true;
                        true
                    }
                    _ => false,
                };
                rows.push(StudyRow {
                    chain: name.to_string(),
                    delta,
                    resolution_deg: res,
                    cells,
                    volume,
                    rel_change,
                    converged,
                });
            }
        }
    }

    Ok(ResolutionStudyReport {
        thumb_design,
        finger_design,
        resolutions_deg: resolutions_deg.to_vec(),
        voxel_sizes: voxel_sizes.to_vec(),
        rows,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::design::enumerate_feasible_designs;
    use crate::model::HandModel;

    fn coarse_ctx() -> EvalContext {
        EvalContext::new(HandModel::default(), 30.0, 18.0, 0.05).unwrap()
    }

    #[test]
    fn second_run_serves_everything_from_cache() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("records.jsonl");
        let ctx = coarse_ctx();
        let thumbs = enumerate_feasible_designs(51, 10, true)[..3].to_vec();
        let fingers = enumerate_feasible_designs(45, 10, true)[..2].to_vec();

        let mut cache = RecordCache::open(&path).unwrap();
        let mut computed = 0;
        let store1 = ensure_records(&ctx, &mut cache, &thumbs, &fingers, |p| {
            if !p.cached {
                computed += 1;
            }
        })
        .unwrap();
        assert_eq!(computed, 5);

        let mut cache = RecordCache::open(&path).unwrap();
        let mut recomputed = 0;
        let store2 = ensure_records(&ctx, &mut cache, &thumbs, &fingers, |p| {
            if !p.cached {
                recomputed += 1;
            }
        })
        .unwrap();
        assert_eq!(recomputed, 0);
        assert_eq!(store1.thumb, store2.thumb);
        assert_eq!(store1.finger, store2.finger);
    }

    #[test]
    fn poisoned_cache_line_recomputes_only_that_record() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("records.jsonl");
        let ctx = coarse_ctx();
        let thumbs = enumerate_feasible_designs(51, 10, true)[..3].to_vec();

        let mut cache = RecordCache::open(&path).unwrap();
        ensure_records(&ctx, &mut cache, &thumbs, &[], |_| {}).unwrap();

        // Corrupt the second line in place.
        let text = std::fs::read_to_string(&path).unwrap();
        let mut lines: Vec<&str> = text.lines().collect();
        lines[1] = "{ \"key\": \"zzz\", broken";
        std::fs::write(&path, lines.join("\n")).unwrap();

        let mut cache = RecordCache::open(&path).unwrap();
        assert_eq!(cache.warnings().len(), 1);
        let mut recomputed = Vec::new();
        let store = ensure_records(&ctx, &mut cache, &thumbs, &[], |p| {
            if !p.cached {
                recomputed.push(p.design);
            }
        })
        .unwrap();
        assert_eq!(recomputed.len(), 1);
        assert_eq!(store.thumb.len(), 3);
    }

    #[test]
    fn cache_keys_separate_configurations() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("records.jsonl");
        let thumbs = enumerate_feasible_designs(51, 10, true)[..1].to_vec();

        let ctx_a = coarse_ctx();
        let mut cache = RecordCache::open(&path).unwrap();
        ensure_records(&ctx_a, &mut cache, &thumbs, &[], |_| {}).unwrap();

        let ctx_b = EvalContext::new(HandModel::default(), 30.0, 18.0, 0.025).unwrap();
        let mut cache = RecordCache::open(&path).unwrap();
        let mut computed = 0;
        ensure_records(&ctx_b, &mut cache, &thumbs, &[], |p| {
            if !p.cached {
                computed += 1;
            }
        })
        .unwrap();
        assert_eq!(computed, 1, "different voxel size must recompute");
    }

    #[test]
    fn verify_cache_accepts_fresh_records_and_flags_tampering() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("records.jsonl");
        let ctx = coarse_ctx();
        let thumbs = enumerate_feasible_designs(51, 10, true)[..2].to_vec();

        let mut cache = RecordCache::open(&path).unwrap();
        ensure_records(&ctx, &mut cache, &thumbs, &[], |_| {}).unwrap();

        let cache = RecordCache::open(&path).unwrap();
        let (checked, mismatches) = verify_cache(&ctx, &cache, 1.0, |_| {}).unwrap();
        assert_eq!(checked, 2);
        assert_eq!(mismatches, 0);

        // Tamper with a stored scalar.
        let text = std::fs::read_to_string(&path).unwrap();
        let tampered = text.replacen("\"distal_sensitivity\":0.1", "\"distal_sensitivity\":0.9", 1);
        assert_ne!(text, tampered);
        std::fs::write(&path, tampered).unwrap();
        let cache = RecordCache::open(&path).unwrap();
        let mut messages = Vec::new();
        let (checked, mismatches) = verify_cache(&ctx, &cache, 1.0, |m| messages.push(m.to_string())).unwrap();
        assert_eq!(checked, 2);
        assert_eq!(mismatches, 1);
        assert_eq!(messages.len(), 1);
    }

    #[test]
    fn resolution_study_shapes_and_convergence_flags() {
        let ctx = coarse_ctx();
        let report = resolution_study(&ctx, &[30.0, 15.0, 10.0], &[0.05, 0.025]).unwrap();
        // 2 chains x 2 voxel sizes x 3 resolutions.
        assert_eq!(report.rows.len(), 12);
        for rows in report.rows.chunks(3) {
            assert!(rows[0].rel_change.is_none());
            assert!(rows[1].rel_change.is_some());
        }
        // Finer resolution never shrinks the voxel count within a ladder.
        for pair in report.rows.chunks(3) {
            assert!(pair[1].cells >= pair[0].cells);
            assert!(pair[2].cells >= pair[1].cells);
        }
        assert!(report.volume("thumb", 0.05, 30.0).unwrap() > 0.0);
    }
}
