//! Phalanx-length design space, objective aggregation, and the exhaustive
//! pair search.
//!
//! Lengths are integer hundredths of the hand length so the sum and ordering
//! constraints are exact. A finger triple sums to 45, a thumb triple to 51,
//! every segment is at least 10. The ordered sets (proximal >= middle >=
//! distal) drive the search; the relaxed sets (ordering dropped) only feed
//! the normalization maxima.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::metrics::{FingerRecord, MetricsRecord};

pub const THUMB_TOTAL_HUNDREDTHS: u32 = 51;
pub const FINGER_TOTAL_HUNDREDTHS: u32 = 45;
pub const MIN_PHALANX_HUNDREDTHS: u32 = 10;

/// Segment lengths in hundredths of the hand length, listed base to tip.
/// For the thumb the fields map to metacarpal, proximal, distal.
#[derive(
    Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize,
)]
pub struct PhalanxTriple {
    pub proximal: u32,
    pub middle: u32,
    pub distal: u32,
}

impl PhalanxTriple {
    pub fn new(proximal: u32, middle: u32, distal: u32) -> Self {
        Self { proximal, middle, distal }
    }

    pub fn total(&self) -> u32 {
        self.proximal + self.middle + self.distal
    }

    pub fn is_ordered(&self) -> bool {
        self.proximal >= self.middle && self.middle >= self.distal
    }

    /// Lengths in hand-length units.
    pub fn lengths(&self) -> [f64; 3] {
        [
            self.proximal as f64 / 100.0,
            self.middle as f64 / 100.0,
            self.distal as f64 / 100.0,
        ]
    }

    pub fn distal_length(&self) -> f64 {
        self.distal as f64 / 100.0
    }
}

impl std::fmt::Display for PhalanxTriple {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "{}-{}-{}", self.proximal, self.middle, self.distal)
    }
}

/// All triples with the given total and minimum, in lexicographic order.
/// `ordered` additionally requires proximal >= middle >= distal. An
/// infeasible total yields an empty list.
pub fn enumerate_feasible_designs(total: u32, min_len: u32, ordered: bool) -> Vec<PhalanxTriple> {
    let mut out = Vec::new();
    if total < 3 * min_len {
        return out;
    }
    for p in min_len..=total - 2 * min_len {
        for m in min_len..=total - p - min_len {
            let d = total - p - m;
            if d < min_len {
                continue;
            }
            if ordered && !(p >= m && m >= d) {
                continue;
            }
            out.push(PhalanxTriple::new(p, m, d));
        }
    }
    out
}

/// Weighting coefficients on the simplex c1 + c2 + c3 = 1.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Weights {
    c1: f64,
    c2: f64,
    c3: f64,
}

impl Weights {
    pub fn new(c1: f64, c2: f64, c3: f64) -> Result<Self> {
        for c in [c1, c2, c3] {
            if !(0.0..=1.0).contains(&c) {
                return Err(Error::Parameter(format!(
                    "weight {c} outside [0, 1] in ({c1}, {c2}, {c3})"
                )));
            }
        }
        if (c1 + c2 + c3 - 1.0).abs() > 1e-9 {
            return Err(Error::Parameter(format!(
                "weights ({c1}, {c2}, {c3}) sum to {}, expected 1",
                c1 + c2 + c3
            )));
        }
        Ok(Self { c1, c2, c3 })
    }

    /// Rescale non-negative coefficients to sum to one. The objective is
    /// linear in the weights, so rescaling never changes the argmax.
    pub fn normalized(c1: f64, c2: f64, c3: f64) -> Result<Self> {
        let sum = c1 + c2 + c3;
        if !(sum.is_finite() && sum > 0.0) || c1 < 0.0 || c2 < 0.0 || c3 < 0.0 {
            return Err(Error::Parameter(format!(
                "weights ({c1}, {c2}, {c3}) cannot be normalized"
            )));
        }
        Ok(Self {
            c1: c1 / sum,
            c2: c2 / sum,
            c3: c3 / sum,
        })
    }

    pub fn c1(&self) -> f64 {
        self.c1
    }
    pub fn c2(&self) -> f64 {
        self.c2
    }
    pub fn c3(&self) -> f64 {
        self.c3
    }
}

/// The seven weighting cases of the reference study, rescaled onto the
/// simplex (the equal-weight case is listed as 0.33 each).
pub fn default_weight_cases() -> Vec<Weights> {
    [
        (0.33, 0.33, 0.33),
        (0.8, 0.1, 0.1),
        (0.1, 0.8, 0.1),
        (0.1, 0.1, 0.8),
        (0.4, 0.4, 0.2),
        (0.4, 0.2, 0.4),
        (0.2, 0.4, 0.4),
    ]
    .into_iter()
    .map(|(a, b, c)| Weights::normalized(a, b, c).expect("static cases are valid"))
    .collect()
}

/// Normalization denominators, each the maximum of its term over the
/// relaxed design sets.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NormalizationConstants {
    pub z_m: f64,
    pub z_w: f64,
    pub z_s: f64,
}

/// How the workspace denominator is formed from the relaxed maxima.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "kebab-case")]
pub enum NormalizationMode {
    /// max(z2w) + max(z2o), each maximum taken independently over pairs.
    #[default]
    SumOfMaxima,
    /// max over pairs of the combined z2.
    MaxCombined,
}

/// Which chains feed the sensitivity term z3.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "kebab-case")]
pub enum SensitivitySource {
    #[default]
    Both,
    Thumb,
    Finger,
}

/// Per-pair evaluation terms.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EvaluationTerms {
    pub z1: f64,
    pub z2w: f64,
    pub z2o: f64,
    pub z2: f64,
    pub z3: f64,
}

/// z1 = 0.5 W_thumb + 0.5 W_index.
pub fn aggregate_z1(w_thumb: f64, w_index: f64) -> f64 {
    0.5 * w_thumb + 0.5 * w_index
}

/// z2w = 0.5 V_thumb + 0.5 V_index; z2o = 0.25 * sum of the four per-finger
/// overlap volumes; z2 = 0.5 z2w + 0.5 z2o.
pub fn aggregate_z2(v_thumb: f64, v_index: f64, overlaps: &[f64; 4]) -> (f64, f64, f64) {
    let z2w = 0.5 * v_thumb + 0.5 * v_index;
    let z2o = 0.25 * (overlaps[0] + overlaps[1] + overlaps[2] + overlaps[3]);
    let z2 = 0.5 * z2w + 0.5 * z2o;
    (z2w, z2o, z2)
}

/// z3 from the per-chain mean distal sensitivities.
pub fn aggregate_z3(s_thumb: f64, s_index: f64) -> f64 {
    aggregate_z3_from(SensitivitySource::Both, s_thumb, s_index)
}

pub fn aggregate_z3_from(source: SensitivitySource, s_thumb: f64, s_index: f64) -> f64 {
    match source {
        SensitivitySource::Both => 0.5 * s_thumb + 0.5 * s_index,
        SensitivitySource::Thumb => s_thumb,
        SensitivitySource::Finger => s_index,
    }
}

fn check_norms(norms: &NormalizationConstants) -> Result<()> {
    for (name, v) in [("z_m", norms.z_m), ("z_w", norms.z_w), ("z_s", norms.z_s)] {
        if !(v.is_finite() && v > 0.0) {
            return Err(Error::Config(format!(
                "normalization constant {name} = {v} must be positive"
            )));
        }
    }
    Ok(())
}

/// Signed normalized contributions (c1 z1/z_m, c2 z2/z_w, -c3 z3/z_s).
pub fn objective_contributions(
    terms: &EvaluationTerms,
    weights: &Weights,
    norms: &NormalizationConstants,
) -> Result<[f64; 3]> {
    check_norms(norms)?;
    Ok([
        weights.c1 * terms.z1 / norms.z_m,
        weights.c2 * terms.z2 / norms.z_w,
        -(weights.c3 * terms.z3 / norms.z_s),
    ])
}

/// f = c1 z1/z_m + c2 z2/z_w - c3 z3/z_s.
pub fn objective(
    terms: &EvaluationTerms,
    weights: &Weights,
    norms: &NormalizationConstants,
) -> Result<f64> {
    let c = objective_contributions(terms, weights, norms)?;
    Ok((c[0] + c[1]) + c[2])
}

/// Scalar metrics of one side of a pair.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SideMetrics {
    pub design: PhalanxTriple,
    pub global_manipulability: f64,
    pub workspace_volume: f64,
    pub distal_sensitivity: f64,
}

impl From<&MetricsRecord> for SideMetrics {
    fn from(r: &MetricsRecord) -> Self {
        SideMetrics {
            design: r.design,
            global_manipulability: r.global_manipulability,
            workspace_volume: r.workspace_volume,
            distal_sensitivity: r.distal_sensitivity,
        }
    }
}

/// Weight-independent pair data: per-side scalars plus the four overlap
/// volumes for every (thumb, finger) combination. Built once, scored per
/// weight case without touching kinematics again.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct PairTable {
    pub thumb: Vec<SideMetrics>,
    pub finger: Vec<SideMetrics>,
    /// Thumb-major: `overlaps[ti * finger.len() + fi]`.
    pub overlaps: Vec<[f64; 4]>,
    pub z3_source: SensitivitySource,
}

impl PairTable {
    /// Intersect every thumb voxel set with the four per-finger sets of
    /// every finger design. Records are sorted by design triple first, so
    /// row order (and the search tie-break) is independent of input order.
    pub fn build(
        thumb_records: &[MetricsRecord],
        finger_records: &[FingerRecord],
        z3_source: SensitivitySource,
    ) -> Result<Self> {
        use rayon::prelude::*;

        let mut thumbs: Vec<&MetricsRecord> = thumb_records.iter().collect();
        thumbs.sort_by_key(|r| r.design);
        let mut fingers: Vec<&FingerRecord> = finger_records.iter().collect();
        fingers.sort_by_key(|r| r.index.design);

        let overlaps = thumbs
            .par_iter()
            .map(|t| {
                fingers
                    .iter()
                    .map(|f| {
                        let mut o = [0.0f64; 4];
                        for (slot, set) in o.iter_mut().zip(f.voxel_sets()) {
                            let n = t.voxels.intersection_count(set)?;
                            *slot = crate::voxel::cell_volume(n, set.delta());
                        }
                        Ok(o)
                    })
                    .collect::<Result<Vec<_>>>()
            })
            .collect::<Result<Vec<_>>>()?
            .into_iter()
            .flatten()
            .collect();

        Ok(PairTable {
            thumb: thumbs.iter().map(|r| SideMetrics::from(*r)).collect(),
            finger: fingers.iter().map(|r| SideMetrics::from(&r.index)).collect(),
            overlaps,
            z3_source,
        })
    }

    pub fn pair_count(&self) -> usize {
        self.thumb.len() * self.finger.len()
    }

    pub fn overlap(&self, ti: usize, fi: usize) -> &[f64; 4] {
        &self.overlaps[ti * self.finger.len() + fi]
    }

    pub fn terms(&self, ti: usize, fi: usize) -> EvaluationTerms {
        let t = &self.thumb[ti];
        let f = &self.finger[fi];
        let z1 = aggregate_z1(t.global_manipulability, f.global_manipulability);
        let (z2w, z2o, z2) = aggregate_z2(t.workspace_volume, f.workspace_volume, self.overlap(ti, fi));
        let z3 = aggregate_z3_from(self.z3_source, t.distal_sensitivity, f.distal_sensitivity);
        EvaluationTerms { z1, z2w, z2o, z2, z3 }
    }

    /// A pair is excluded when any of its four overlap volumes is zero.
    pub fn is_excluded(&self, ti: usize, fi: usize) -> bool {
        self.overlap(ti, fi).iter().any(|&v| v == 0.0)
    }
}

/// One row of the scored-pair table.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ScoredPair {
    pub thumb: PhalanxTriple,
    pub finger: PhalanxTriple,
    pub z1: f64,
    pub z2w: f64,
    pub z2o: f64,
    pub z2: f64,
    pub z3: f64,
    pub objective: f64,
    pub excluded: bool,
}

/// Winning-pair metrics carried along for reporting.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct WinnerMetrics {
    pub thumb_workspace_volume: f64,
    pub index_workspace_volume: f64,
    pub overlap_volumes: [f64; 4],
    pub overlap_volume_total: f64,
    pub thumb_manipulability: f64,
    pub index_manipulability: f64,
    pub thumb_sensitivity: f64,
    pub index_sensitivity: f64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct OptimizationResult {
    pub weights: Weights,
    pub thumb: PhalanxTriple,
    pub finger: PhalanxTriple,
    pub objective: f64,
    /// (c1 z1/z_m, c2 z2/z_w, -c3 z3/z_s); their sum is the objective.
    pub contributions: [f64; 3],
    pub excluded_pairs: usize,
    pub winner: WinnerMetrics,
    pub table: Vec<ScoredPair>,
}

/// Scan all pairs, skip zero-overlap ones, return the objective maximum.
/// Ties break toward the lexicographically smallest thumb triple, then
/// finger triple, so the result does not depend on scan partitioning.
pub fn search_optimal_pair(
    table: &PairTable,
    weights: &Weights,
    norms: &NormalizationConstants,
) -> Result<OptimizationResult> {
    check_norms(norms)?;
    let mut rows = Vec::with_capacity(table.pair_count());
    let mut excluded_pairs = 0usize;
    let mut best: Option<(f64, usize, usize)> = None;

    for ti in 0..table.thumb.len() {
        for fi in 0..table.finger.len() {
            let terms = table.terms(ti, fi);
            let excluded = table.is_excluded(ti, fi);
            let f = objective(&terms, weights, norms)?;
            rows.push(ScoredPair {
                thumb: table.thumb[ti].design,
                finger: table.finger[fi].design,
                z1: terms.z1,
                z2w: terms.z2w,
                z2o: terms.z2o,
                z2: terms.z2,
                z3: terms.z3,
                objective: f,
                excluded,
            });
            if excluded {
                excluded_pairs += 1;
                continue;
            }
            // Rows scan in (thumb, finger) lexicographic order, so a strict
            // comparison realizes the tie-break.
            let better = match best {
                None => true,
                Some((fb, _, _)) => f > fb,
            };
            if better {
                best = Some((f, ti, fi));
            }
        }
    }

    let (f_best, ti, fi) = best.ok_or(Error::NoFeasiblePair {
        pairs: table.pair_count(),
    })?;
    let terms = table.terms(ti, fi);
    let contributions = objective_contributions(&terms, weights, norms)?;
    let overlaps = *table.overlap(ti, fi);
    Ok(OptimizationResult {
        weights: *weights,
        thumb: table.thumb[ti].design,
        finger: table.finger[fi].design,
        objective: f_best,
        contributions,
        excluded_pairs,
        winner: WinnerMetrics {
            thumb_workspace_volume: table.thumb[ti].workspace_volume,
            index_workspace_volume: table.finger[fi].workspace_volume,
            overlap_volumes: overlaps,
            overlap_volume_total: overlaps.iter().sum(),
            thumb_manipulability: table.thumb[ti].global_manipulability,
            index_manipulability: table.finger[fi].global_manipulability,
            thumb_sensitivity: table.thumb[ti].distal_sensitivity,
            index_sensitivity: table.finger[fi].distal_sensitivity,
        },
        table: rows,
    })
}

/// Evaluate a list of weight cases against one shared pair table.
pub fn run_case_table(
    table: &PairTable,
    cases: &[Weights],
    norms: &NormalizationConstants,
) -> Result<Vec<OptimizationResult>> {
    cases
        .iter()
        .map(|w| search_optimal_pair(table, w, norms))
        .collect()
}

/// Cases grouped by identical winning pair, labeled A, B, ... in order of
/// first occurrence.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct CaseGroup {
    pub label: char,
    pub thumb: PhalanxTriple,
    pub finger: PhalanxTriple,
    /// 1-based case numbers.
    pub cases: Vec<usize>,
}

pub fn group_cases(results: &[OptimizationResult]) -> Vec<CaseGroup> {
    let mut groups: Vec<CaseGroup> = Vec::new();
    for (i, r) in results.iter().enumerate() {
        match groups
            .iter_mut()
            .find(|g| g.thumb == r.thumb && g.finger == r.finger)
        {
            Some(g) => g.cases.push(i + 1),
            None => {
                let label = (b'A' + groups.len() as u8) as char;
                groups.push(CaseGroup {
                    label,
                    thumb: r.thumb,
                    finger: r.finger,
                    cases: vec![i + 1],
                });
            }
        }
    }
    groups
}

/// Normalization constants from relaxed-set records.
///
/// z_m and z_s decompose over the pair maximum exactly; the workspace
/// denominator needs the joint pair scan for the overlap maximum. Pairs with
/// zero overlap stay in: the exclusion rule applies only to the search.
pub fn compute_normalization(
    relaxed_thumb: &[MetricsRecord],
    relaxed_finger: &[FingerRecord],
    mode: NormalizationMode,
    z3_source: SensitivitySource,
) -> Result<NormalizationConstants> {
    use rayon::prelude::*;

    if relaxed_thumb.is_empty() || relaxed_finger.is_empty() {
        return Err(Error::Config(
            "normalization needs at least one relaxed design per chain".into(),
        ));
    }

    let fmax = |it: &mut dyn Iterator<Item = f64>| it.fold(f64::NEG_INFINITY, f64::max);
    let max_wt = fmax(&mut relaxed_thumb.iter().map(|r| r.global_manipulability));
    let max_wi = fmax(&mut relaxed_finger.iter().map(|r| r.index.global_manipulability));
    let max_vt = fmax(&mut relaxed_thumb.iter().map(|r| r.workspace_volume));
    let max_vi = fmax(&mut relaxed_finger.iter().map(|r| r.index.workspace_volume));
    let max_st = fmax(&mut relaxed_thumb.iter().map(|r| r.distal_sensitivity));
    let max_si = fmax(&mut relaxed_finger.iter().map(|r| r.index.distal_sensitivity));

    let z_m = aggregate_z1(max_wt, max_wi);
    let max_z2w = 0.5 * max_vt + 0.5 * max_vi;
    let z_s = match z3_source {
        SensitivitySource::Both => aggregate_z3(max_st, max_si),
        SensitivitySource::Thumb => max_st,
        SensitivitySource::Finger => max_si,
    };

    // Joint scan over relaxed pairs for the overlap-dependent maxima.
    let (max_z2o, max_z2) = relaxed_thumb
        .par_iter()
        .map(|t| {
            let mut best_o = f64::NEG_INFINITY;
            let mut best_c = f64::NEG_INFINITY;
            for f in relaxed_finger {
                let mut o = [0.0f64; 4];
                for (slot, set) in o.iter_mut().zip(f.voxel_sets()) {
                    let n = t.voxels.intersection_count(set)?;
                    *slot = crate::voxel::cell_volume(n, set.delta());
                }
                let (z2w, z2o, z2) =
                    aggregate_z2(t.workspace_volume, f.index.workspace_volume, &o);
                let _ = z2w;
                best_o = best_o.max(z2o);
                best_c = best_c.max(z2);
            }
            Ok((best_o, best_c))
        })
        .collect::<Result<Vec<_>>>()?
        .into_iter()
        .fold((f64::NEG_INFINITY, f64::NEG_INFINITY), |(ao, ac), (o, c)| {
            (ao.max(o), ac.max(c))
        });

    let z_w = match mode {
        NormalizationMode::SumOfMaxima => max_z2w + max_z2o,
        NormalizationMode::MaxCombined => max_z2,
    };

    let norms = NormalizationConstants { z_m, z_w, z_s };
    check_norms(&norms)?;
    Ok(norms)
}
