//! The five-finger hand model: DH row templates, joint ranges, geometry
//! constants, and base poses.
//!
//! The built-in tables describe a hand of unit length with a 5-DoF thumb and
//! four structurally identical 4-DoF fingers. Thumb rows carry the design
//! lengths (metacarpal a2', proximal a4', distal a5'); finger rows carry
//! (proximal a3, middle a4, distal a5). The palm origin is the thumb base
//! with identity orientation; finger bases sit at `d1` along the palm
//! longitudinal axis (+z) with uniform lateral spacing along +y, index
//! nearest the thumb's opposition sweep. Every base pose can be overridden
//! in the configuration file.

use nalgebra::{Matrix3, Vector3};
use serde::{Deserialize, Serialize};

use crate::design::PhalanxTriple;
use crate::error::{Error, Result};
use crate::kinematics::{BasePose, DhRow, JointRange, SerialChain};

/// Length constants of the hand, in hand-length units.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct HandGeometry {
    pub hand_length: f64,
    pub hand_width: f64,
    pub thumb_length: f64,
    pub finger_length: f64,
    /// Finger in-chain offset between the fixed base row and the A/A joint.
    pub a1: f64,
    /// Thumb base offsets a0' and a1'.
    pub a0p: f64,
    pub a1p: f64,
    /// Longitudinal offset of the finger bases from the palm origin.
    pub d1: f64,
    /// Finger in-chain lateral offset d2 (zero by default; the spacing lives
    /// in the base poses instead so all four finger chains are identical).
    pub d2: f64,
}

impl Default for HandGeometry {
    fn default() -> Self {
        HandGeometry {
            hand_length: 1.0,
            hand_width: 0.54,
            thumb_length: 0.51,
            finger_length: 0.45,
            a1: 0.18,
            a0p: 0.10,
            a1p: 0.10,
            d1: 0.55,
            d2: 0.0,
        }
    }
}

/// Which design slot (if any) provides a template length.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum LinkParam {
    Fixed(f64),
    Slot(DesignSlot),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum DesignSlot {
    Proximal,
    Middle,
    Distal,
}

impl LinkParam {
    fn bind(&self, design: &PhalanxTriple) -> f64 {
        match self {
            LinkParam::Fixed(v) => *v,
            LinkParam::Slot(DesignSlot::Proximal) => design.proximal as f64 / 100.0,
            LinkParam::Slot(DesignSlot::Middle) => design.middle as f64 / 100.0,
            LinkParam::Slot(DesignSlot::Distal) => design.distal as f64 / 100.0,
        }
    }
}

/// One modified-DH row before design lengths are bound.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RowTemplate {
    pub alpha_deg: f64,
    pub a: LinkParam,
    pub d: LinkParam,
    pub theta_deg: f64,
    pub actuated: bool,
}

impl RowTemplate {
    fn bind(&self, design: &PhalanxTriple) -> DhRow {
        if self.actuated {
            DhRow::actuated(self.alpha_deg, self.a.bind(design), self.d.bind(design))
        } else {
            DhRow::fixed(
                self.alpha_deg,
                self.a.bind(design),
                self.d.bind(design),
                self.theta_deg,
            )
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum FingerId {
    Index,
    Middle,
    Ring,
    Little,
}

impl FingerId {
    pub const ALL: [FingerId; 4] = [
        FingerId::Index,
        FingerId::Middle,
        FingerId::Ring,
        FingerId::Little,
    ];

    pub fn name(&self) -> &'static str {
        match self {
            FingerId::Index => "index",
            FingerId::Middle => "middle",
            FingerId::Ring => "ring",
            FingerId::Little => "little",
        }
    }
}

/// The resolved hand model.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HandModel {
    pub geometry: HandGeometry,
    pub thumb_rows: Vec<RowTemplate>,
    pub thumb_ranges: Vec<JointRange>,
    pub thumb_base: BasePose,
    pub finger_rows: Vec<RowTemplate>,
    pub finger_ranges: Vec<JointRange>,
    pub finger_bases: [BasePose; 4],
    /// Actuated-joint indices performing flexion/extension.
    pub thumb_fe_joints: Vec<usize>,
    pub finger_fe_joints: Vec<usize>,
    /// Values (degrees) the non-F/E joints are pinned to while evaluating
    /// distal sensitivity, in actuated order.
    pub thumb_sensitivity_posture_deg: Vec<f64>,
    pub finger_sensitivity_posture_deg: Vec<f64>,
}

fn deg_range(min: f64, max: f64) -> JointRange {
    JointRange::new(min, max).expect("static ranges are valid")
}

impl Default for HandModel {
    fn default() -> Self {
        let g = HandGeometry::default();
        let fixed = |v: f64| LinkParam::Fixed(v);
        let slot = |s: DesignSlot| LinkParam::Slot(s);

        // Five-DoF thumb: O/R at the base, then F/E (metacarpal), A/A, and
        // two more F/E rows; the last row is the fixed distal segment.
        let thumb_rows = vec![
            RowTemplate { alpha_deg: 0.0, a: fixed(g.a0p), d: fixed(0.0), theta_deg: 0.0, actuated: true },
            RowTemplate { alpha_deg: -90.0, a: fixed(g.a1p), d: fixed(0.0), theta_deg: 0.0, actuated: true },
            RowTemplate { alpha_deg: 90.0, a: slot(DesignSlot::Proximal), d: fixed(0.0), theta_deg: 0.0, actuated: true },
            RowTemplate { alpha_deg: -90.0, a: fixed(0.0), d: fixed(0.0), theta_deg: 0.0, actuated: true },
            RowTemplate { alpha_deg: 0.0, a: slot(DesignSlot::Middle), d: fixed(0.0), theta_deg: 0.0, actuated: true },
            RowTemplate { alpha_deg: 0.0, a: slot(DesignSlot::Distal), d: fixed(0.0), theta_deg: 0.0, actuated: false },
        ];
        let thumb_ranges = vec![
            deg_range(-30.0, 90.0),
            deg_range(-90.0, 30.0),
            deg_range(-60.0, 60.0),
            deg_range(-90.0, 0.0),
            deg_range(-90.0, 0.0),
        ];

        // Four-DoF finger: fixed 90-degree base row, A/A, then three F/E
        // rows ending in the fixed distal segment.
        let finger_rows = vec![
            RowTemplate { alpha_deg: 90.0, a: fixed(0.0), d: fixed(0.0), theta_deg: 90.0, actuated: false },
            RowTemplate { alpha_deg: 90.0, a: fixed(g.a1), d: fixed(g.d2), theta_deg: 0.0, actuated: true },
            RowTemplate { alpha_deg: -90.0, a: fixed(0.0), d: fixed(0.0), theta_deg: 0.0, actuated: true },
            RowTemplate { alpha_deg: 0.0, a: slot(DesignSlot::Proximal), d: fixed(0.0), theta_deg: 0.0, actuated: true },
            RowTemplate { alpha_deg: 0.0, a: slot(DesignSlot::Middle), d: fixed(0.0), theta_deg: 0.0, actuated: true },
            RowTemplate { alpha_deg: 0.0, a: slot(DesignSlot::Distal), d: fixed(0.0), theta_deg: 0.0, actuated: false },
        ];
        let finger_ranges = vec![
            deg_range(-30.0, 30.0),
            deg_range(-90.0, 30.0),
            deg_range(-90.0, 0.0),
            deg_range(-90.0, 0.0),
        ];

        let lateral = [0.18, 0.0, -0.18, -0.36];
        let finger_bases = lateral
            .map(|y| BasePose::from_translation(Vector3::new(0.0, y, g.d1)));

        HandModel {
            geometry: g,
            thumb_rows,
            thumb_ranges,
            thumb_base: BasePose::identity(),
            finger_rows,
            finger_ranges,
            finger_bases,
            thumb_fe_joints: vec![1, 3, 4],
            finger_fe_joints: vec![1, 2, 3],
            thumb_sensitivity_posture_deg: vec![0.0, 0.0],
            finger_sensitivity_posture_deg: vec![0.0],
        }
    }
}

impl HandModel {
    /// Thumb chain under its base pose for the given design lengths.
    pub fn thumb_chain(&self, design: &PhalanxTriple) -> SerialChain {
        let rows = self.thumb_rows.iter().map(|r| r.bind(design)).collect();
        SerialChain::new(self.thumb_base, rows, self.thumb_ranges.clone())
            .expect("thumb template is structurally valid")
    }

    /// Finger chain in its local frame (identity base).
    pub fn finger_chain_local(&self, design: &PhalanxTriple) -> SerialChain {
        let rows = self.finger_rows.iter().map(|r| r.bind(design)).collect();
        SerialChain::new(BasePose::identity(), rows, self.finger_ranges.clone())
            .expect("finger template is structurally valid")
    }

    /// Finger chain placed at one of the four finger bases.
    pub fn finger_chain(&self, design: &PhalanxTriple, finger: FingerId) -> SerialChain {
        self.finger_chain_local(design)
            .with_base(self.finger_base(finger))
    }

    pub fn finger_base(&self, finger: FingerId) -> BasePose {
        let i = FingerId::ALL.iter().position(|f| f == &finger).unwrap();
        self.finger_bases[i]
    }

    /// Most distal F/E joint (actuated index) used for sensitivity.
    pub fn thumb_distal_joint(&self) -> usize {
        *self.thumb_fe_joints.iter().max().unwrap()
    }

    pub fn finger_distal_joint(&self) -> usize {
        *self.finger_fe_joints.iter().max().unwrap()
    }

    pub fn validate(&self) -> Result<()> {
        let thumb_dof = self.thumb_rows.iter().filter(|r| r.actuated).count();
        let finger_dof = self.finger_rows.iter().filter(|r| r.actuated).count();
        if self.thumb_ranges.len() != thumb_dof {
            return Err(Error::Config(format!(
                "thumb has {thumb_dof} actuated rows but {} ranges",
                self.thumb_ranges.len()
            )));
        }
        if self.finger_ranges.len() != finger_dof {
            return Err(Error::Config(format!(
                "finger has {finger_dof} actuated rows but {} ranges",
                self.finger_ranges.len()
            )));
        }
        for (name, fe, dof, posture) in [
            ("thumb", &self.thumb_fe_joints, thumb_dof, &self.thumb_sensitivity_posture_deg),
            ("finger", &self.finger_fe_joints, finger_dof, &self.finger_sensitivity_posture_deg),
        ] {
            if fe.is_empty() || fe.iter().any(|&j| j >= dof) {
                return Err(Error::Config(format!("{name} F/E joint indices out of range")));
            }
            if posture.len() != dof - fe.len() {
                return Err(Error::Config(format!(
                    "{name} sensitivity posture needs {} values, got {}",
                    dof - fe.len(),
                    posture.len()
                )));
            }
        }
        // The templates must expose every design slot exactly once.
        for (name, rows) in [("thumb", &self.thumb_rows), ("finger", &self.finger_rows)] {
            for slot in [DesignSlot::Proximal, DesignSlot::Middle, DesignSlot::Distal] {
                let uses = rows
                    .iter()
                    .flat_map(|r| [r.a, r.d])
                    .filter(|p| *p == LinkParam::Slot(slot))
                    .count();
                if uses != 1 {
                    return Err(Error::Config(format!(
                        "{name} rows bind design slot {slot:?} {uses} times, expected once"
                    )));
                }
            }
        }
        Ok(())
    }
}

/// Configuration-file overrides for the model; omitted fields keep the
/// built-in tables.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ModelConfig {
    pub geometry: Option<HandGeometry>,
    pub thumb_rows: Option<Vec<RowTemplate>>,
    pub thumb_ranges: Option<Vec<[f64; 2]>>,
    pub thumb_base: Option<PoseConfig>,
    pub finger_rows: Option<Vec<RowTemplate>>,
    pub finger_ranges: Option<Vec<[f64; 2]>>,
    pub finger_bases: Option<[PoseConfig; 4]>,
    pub finger_lateral: Option<[f64; 4]>,
    pub thumb_fe_joints: Option<Vec<usize>>,
    pub finger_fe_joints: Option<Vec<usize>>,
    pub thumb_sensitivity_posture_deg: Option<Vec<f64>>,
    pub finger_sensitivity_posture_deg: Option<Vec<f64>>,
}

/// Base pose as written in the configuration file.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PoseConfig {
    pub translation: [f64; 3],
    /// Row-major rotation matrix; identity when omitted.
    pub rotation: Option<[[f64; 3]; 3]>,
}

impl PoseConfig {
    fn to_pose(&self) -> Result<BasePose> {
        let t = Vector3::new(self.translation[0], self.translation[1], self.translation[2]);
        match self.rotation {
            None => Ok(BasePose::from_translation(t)),
            Some(rows) => {
                let r = Matrix3::new(
                    rows[0][0], rows[0][1], rows[0][2], //
                    rows[1][0], rows[1][1], rows[1][2], //
                    rows[2][0], rows[2][1], rows[2][2],
                );
                BasePose::new(r, t)
            }
        }
    }
}

impl HandModel {
    pub fn from_config(cfg: &ModelConfig) -> Result<Self> {
        let mut model = HandModel::default();
        if let Some(g) = cfg.geometry {
            model.geometry = g;
            // Re-derive the defaults that embed geometry constants.
            model.thumb_rows[0].a = LinkParam::Fixed(g.a0p);
            model.thumb_rows[1].a = LinkParam::Fixed(g.a1p);
            model.finger_rows[1].a = LinkParam::Fixed(g.a1);
            model.finger_rows[1].d = LinkParam::Fixed(g.d2);
            let lateral = [0.18, 0.0, -0.18, -0.36];
            model.finger_bases =
                lateral.map(|y| BasePose::from_translation(Vector3::new(0.0, y, g.d1)));
        }
        if let Some(rows) = &cfg.thumb_rows {
            model.thumb_rows = rows.clone();
        }
        if let Some(ranges) = &cfg.thumb_ranges {
            model.thumb_ranges = ranges
                .iter()
                .map(|r| JointRange::new(r[0], r[1]))
                .collect::<Result<_>>()?;
        }
        if let Some(rows) = &cfg.finger_rows {
            model.finger_rows = rows.clone();
        }
        if let Some(ranges) = &cfg.finger_ranges {
            model.finger_ranges = ranges
                .iter()
                .map(|r| JointRange::new(r[0], r[1]))
                .collect::<Result<_>>()?;
        }
        if let Some(lateral) = cfg.finger_lateral {
            let d1 = model.geometry.d1;
            model.finger_bases =
                lateral.map(|y| BasePose::from_translation(Vector3::new(0.0, y, d1)));
        }
        if let Some(pose) = &cfg.thumb_base {
            model.thumb_base = pose.to_pose()?;
        }
        if let Some(poses) = &cfg.finger_bases {
            for (i, p) in poses.iter().enumerate() {
                model.finger_bases[i] = p.to_pose()?;
            }
        }
        if let Some(fe) = &cfg.thumb_fe_joints {
            model.thumb_fe_joints = fe.clone();
        }
        if let Some(fe) = &cfg.finger_fe_joints {
            model.finger_fe_joints = fe.clone();
        }
        if let Some(p) = &cfg.thumb_sensitivity_posture_deg {
            model.thumb_sensitivity_posture_deg = p.clone();
        }
        if let Some(p) = &cfg.finger_sensitivity_posture_deg {
            model.finger_sensitivity_posture_deg = p.clone();
        }
        model.validate()?;
        Ok(model)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::kinematics::fingertip_position;
    use approx::assert_abs_diff_eq;
    use nalgebra::Point3;

    #[test]
    fn default_model_validates() {
        HandModel::default().validate().unwrap();
    }

    #[test]
    fn geometry_relations_hold_for_the_defaults() {
        let g = HandGeometry::default();
        assert_eq!(g.hand_length, 1.0);
        assert_abs_diff_eq!(g.hand_width, 0.54 * g.hand_length);
        assert_abs_diff_eq!(g.d1 + g.finger_length, g.hand_length);
        // Uniform finger spacing of hand_width / 3.
        let m = HandModel::default();
        let ys: Vec<f64> = m.finger_bases.iter().map(|b| b.translation.y).collect();
        for w in ys.windows(2) {
            assert_abs_diff_eq!(w[0] - w[1], g.hand_width / 3.0, epsilon = 1e-12);
        }
    }

    #[test]
    fn thumb_zero_posture_reaches_full_extension() {
        let m = HandModel::default();
        let design = PhalanxTriple::new(17, 17, 17);
        let chain = m.thumb_chain(&design);
        let tip = fingertip_position(&chain, &[0.0; 5]).unwrap();
        assert_abs_diff_eq!(tip, Point3::new(0.71, 0.0, 0.0), epsilon = 1e-12);
        assert_abs_diff_eq!(chain.reach(), 0.71, epsilon = 1e-15);
    }

    #[test]
    fn finger_zero_posture_extends_longitudinally() {
        let m = HandModel::default();
        let design = PhalanxTriple::new(15, 15, 15);
        let local = m.finger_chain_local(&design);
        let tip = fingertip_position(&local, &[0.0; 4]).unwrap();
        assert_abs_diff_eq!(tip, Point3::new(0.0, 0.0, 0.63), epsilon = 1e-12);

        let index = m.finger_chain(&design, FingerId::Index);
        let tip = fingertip_position(&index, &[0.0; 4]).unwrap();
        assert_abs_diff_eq!(tip, Point3::new(0.0, 0.18, 1.18), epsilon = 1e-12);
    }

    #[test]
    fn chain_structure_counts() {
        let m = HandModel::default();
        let thumb = m.thumb_chain(&PhalanxTriple::new(31, 10, 10));
        assert_eq!(thumb.dof(), 5);
        assert_eq!(thumb.rows.len(), 6);
        let finger = m.finger_chain_local(&PhalanxTriple::new(25, 10, 10));
        assert_eq!(finger.dof(), 4);
        assert_eq!(finger.rows.len(), 6);
        assert!(!finger.rows[0].actuated);
        assert!(!finger.rows[5].actuated);
    }

    #[test]
    fn config_overrides_apply() {
        let toml_text = r#"
            finger_ranges = [[-45.0, 45.0], [-90.0, 30.0], [-90.0, 0.0], [-90.0, 0.0]]
            finger_lateral = [0.2, 0.0, -0.2, -0.4]
            [thumb_base]
            translation = [0.0, 0.1, 0.0]
        "#;
        let cfg: ModelConfig = toml::from_str(toml_text).unwrap();
        let m = HandModel::from_config(&cfg).unwrap();
        assert_eq!(m.finger_ranges[0].min_deg, -45.0);
        assert_eq!(m.finger_bases[0].translation.y, 0.2);
        assert_eq!(m.thumb_base.translation.y, 0.1);
    }

    #[test]
    fn bad_config_is_rejected() {
        let cfg = ModelConfig {
            thumb_ranges: Some(vec![[0.0, 1.0]]),
            ..Default::default()
        };
        assert!(HandModel::from_config(&cfg).is_err());

        let cfg = ModelConfig {
            thumb_fe_joints: Some(vec![9]),
            ..Default::default()
        };
        assert!(HandModel::from_config(&cfg).is_err());
    }

    #[test]
    fn row_templates_parse_slots_from_toml() {
        let text = r#"
            alpha_deg = 90.0
            a = "proximal"
            d = 0.0
            theta_deg = 0.0
            actuated = true
        "#;
        let row: RowTemplate = toml::from_str(text).unwrap();
        assert_eq!(row.a, LinkParam::Slot(DesignSlot::Proximal));
        assert_eq!(row.d, LinkParam::Fixed(0.0));
        let bound = row.bind(&PhalanxTriple::new(17, 16, 18));
        assert_abs_diff_eq!(bound.a_prev, 0.17);
    }
}
