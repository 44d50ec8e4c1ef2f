//! Serial-chain kinematics in the modified (proximal) DH convention.
//!
//! A chain is an ordered list of [`DhRow`]s under a [`BasePose`]. Each row
//! contributes `Rot_x(alpha_prev) * Trans_x(a_prev) * Trans_z(d) *
//! Rot_z(theta_offset + q)`, with `q = 0` for rows that are not actuated.
//! Angles are radians inside this module; joint ranges are degrees and are
//! converted exactly once when checked.

use nalgebra::{Matrix3, Matrix4, Vector3};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub type Point3 = nalgebra::Point3<f64>;

/// One modified-DH row. Angles in radians, lengths in hand-length units.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DhRow {
    pub alpha_prev: f64,
    pub a_prev: f64,
    pub d: f64,
    pub theta_offset: f64,
    pub actuated: bool,
}

impl DhRow {
    pub fn actuated(alpha_prev_deg: f64, a_prev: f64, d: f64) -> Self {
        Self {
            alpha_prev: alpha_prev_deg.to_radians(),
            a_prev,
            d,
            theta_offset: 0.0,
            actuated: true,
        }
    }

    pub fn fixed(alpha_prev_deg: f64, a_prev: f64, d: f64, theta_deg: f64) -> Self {
        Self {
            alpha_prev: alpha_prev_deg.to_radians(),
            a_prev,
            d,
            theta_offset: theta_deg.to_radians(),
            actuated: false,
        }
    }

    /// Rotation part of `Rot_x(alpha) * Trans_x(a) * Trans_z(d)`, i.e. the
    /// frame in which this row's z-rotation acts.
    pub(crate) fn pre_rotation(&self) -> Matrix3<f64> {
        let (sa, ca) = self.alpha_prev.sin_cos();
        Matrix3::new(1.0, 0.0, 0.0, 0.0, ca, -sa, 0.0, sa, ca)
    }

    pub(crate) fn pre_translation(&self) -> Vector3<f64> {
        let (sa, ca) = self.alpha_prev.sin_cos();
        Vector3::new(self.a_prev, -self.d * sa, self.d * ca)
    }
}

/// Range of motion of one actuated joint, in degrees, endpoints included.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct JointRange {
    pub min_deg: f64,
    pub max_deg: f64,
}

impl JointRange {
    pub fn new(min_deg: f64, max_deg: f64) -> Result<Self> {
        if !(min_deg.is_finite() && max_deg.is_finite() && min_deg <= max_deg) {
            return Err(Error::Parameter(format!(
                "joint range [{min_deg}, {max_deg}] is invalid"
            )));
        }
        Ok(Self { min_deg, max_deg })
    }

    pub fn span_deg(&self) -> f64 {
        self.max_deg - self.min_deg
    }

    /// Inclusive containment test for a radian value. Degree endpoints are
    /// converted with the same monotone scaling used for grid samples, so a
    /// sample generated inside the range in degrees never fails here.
    pub fn contains_rad(&self, q: f64) -> bool {
        q >= self.min_deg.to_radians() && q <= self.max_deg.to_radians()
    }
}

/// Rigid pose of a chain root in the shared palm frame.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BasePose {
    pub rotation: Matrix3<f64>,
    pub translation: Vector3<f64>,
}

impl BasePose {
    pub fn identity() -> Self {
        Self {
            rotation: Matrix3::identity(),
            translation: Vector3::zeros(),
        }
    }

    pub fn from_translation(t: Vector3<f64>) -> Self {
        Self {
            rotation: Matrix3::identity(),
            translation: t,
        }
    }

    pub fn new(rotation: Matrix3<f64>, translation: Vector3<f64>) -> Result<Self> {
        let defect = (rotation * rotation.transpose() - Matrix3::identity()).abs().max();
        if defect > 1e-9 || (rotation.determinant() - 1.0).abs() > 1e-9 {
            return Err(Error::Parameter(
                "base rotation must be orthonormal with determinant +1".into(),
            ));
        }
        Ok(Self { rotation, translation })
    }

    pub fn to_matrix4(&self) -> Matrix4<f64> {
        let mut m = Matrix4::identity();
        m.fixed_view_mut::<3, 3>(0, 0).copy_from(&self.rotation);
        m.fixed_view_mut::<3, 1>(0, 3).copy_from(&self.translation);
        m
    }

    pub fn transform_point(&self, p: &Point3) -> Point3 {
        Point3::from(self.rotation * p.coords + self.translation)
    }

    pub(crate) fn is_identity_rotation(&self) -> bool {
        self.rotation == Matrix3::identity()
    }
}

/// An immutable kinematic chain: base pose, DH rows, and one joint range per
/// actuated row.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SerialChain {
    pub base: BasePose,
    pub rows: Vec<DhRow>,
    pub ranges: Vec<JointRange>,
}

impl SerialChain {
    pub fn new(base: BasePose, rows: Vec<DhRow>, ranges: Vec<JointRange>) -> Result<Self> {
        let dof = rows.iter().filter(|r| r.actuated).count();
        if ranges.len() != dof {
            return Err(Error::Parameter(format!(
                "chain has {dof} actuated rows but {} joint ranges",
                ranges.len()
            )));
        }
        for row in &rows {
            if !(row.a_prev.is_finite() && row.d.is_finite() && row.a_prev >= 0.0 && row.d >= 0.0)
            {
                return Err(Error::Parameter(
                    "link lengths must be finite and non-negative".into(),
                ));
            }
        }
        Ok(Self { base, rows, ranges })
    }

    /// Number of actuated joints.
    pub fn dof(&self) -> usize {
        self.ranges.len()
    }

    /// Upper bound on the fingertip distance from the base origin.
    pub fn reach(&self) -> f64 {
        self.rows.iter().map(|r| r.a_prev.abs() + r.d.abs()).sum()
    }

    /// Same chain with a different base pose.
    pub fn with_base(&self, base: BasePose) -> Self {
        Self {
            base,
            rows: self.rows.clone(),
            ranges: self.ranges.clone(),
        }
    }

    pub(crate) fn check_joint_vector(&self, q: &[f64]) -> Result<()> {
        if q.len() != self.dof() {
            return Err(Error::DimensionMismatch {
                expected: self.dof(),
                got: q.len(),
            });
        }
        for (i, (&qi, range)) in q.iter().zip(&self.ranges).enumerate() {
            if !qi.is_finite() || !range.contains_rad(qi) {
                return Err(Error::JointOutOfRange {
                    joint: i + 1,
                    value_deg: qi.to_degrees(),
                    min_deg: range.min_deg,
                    max_deg: range.max_deg,
                });
            }
        }
        Ok(())
    }
}

/// Homogeneous transform of one row:
/// `Rot_x(alpha_prev) * Trans_x(a_prev) * Trans_z(d) * Rot_z(theta_offset + theta)`.
pub fn link_transform(row: &DhRow, theta: f64) -> Matrix4<f64> {
    let (sa, ca) = row.alpha_prev.sin_cos();
    let (st, ct) = (row.theta_offset + theta).sin_cos();
    Matrix4::new(
        ct,
        -st,
        0.0,
        row.a_prev,
        st * ca,
        ct * ca,
        -sa,
        -row.d * sa,
        st * sa,
        ct * sa,
        ca,
        row.d * ca,
        0.0,
        0.0,
        0.0,
        1.0,
    )
}

/// Base pose times all row transforms, in row order. `q` holds one radian
/// value per actuated row and must lie inside the joint ranges.
pub fn chain_transform(chain: &SerialChain, q: &[f64]) -> Result<Matrix4<f64>> {
    chain.check_joint_vector(q)?;
    let mut t = chain.base.to_matrix4();
    let mut qi = q.iter();
    for row in &chain.rows {
        let theta = if row.actuated { *qi.next().unwrap() } else { 0.0 };
        t *= link_transform(row, theta);
    }
    Ok(t)
}

/// Fingertip position: the translation part of the chain transform.
pub fn fingertip_position(chain: &SerialChain, q: &[f64]) -> Result<Point3> {
    let t = chain_transform(chain, q)?;
    Ok(Point3::new(t[(0, 3)], t[(1, 3)], t[(2, 3)]))
}

/// 3 x n positional Jacobian. Column i is `z_i x (p_e - p_i)` for actuated
/// row i, expressed in the palm frame; fixed rows contribute no column.
pub fn positional_jacobian(chain: &SerialChain, q: &[f64]) -> Result<Vec<Vector3<f64>>> {
    chain.check_joint_vector(q)?;
    let mut r = chain.base.rotation;
    let mut p = chain.base.translation;
    let mut axes: Vec<(Vector3<f64>, Vector3<f64>)> = Vec::with_capacity(chain.dof());
    let mut qi = q.iter();
    for row in &chain.rows {
        p += r * row.pre_translation();
        r *= row.pre_rotation();
        let theta = if row.actuated {
            axes.push((r.column(2).into(), p));
            row.theta_offset + *qi.next().unwrap()
        } else {
            row.theta_offset
        };
        let (st, ct) = theta.sin_cos();
        let rz = Matrix3::new(ct, -st, 0.0, st, ct, 0.0, 0.0, 0.0, 1.0);
        r *= rz;
    }
    Ok(axes
        .into_iter()
        .map(|(z, pj)| z.cross(&(p - pj)))
        .collect())
}

/// Jacobian columns packed into a `3 x n` matrix.
pub fn jacobian_matrix(columns: &[Vector3<f64>]) -> nalgebra::Matrix3xX<f64> {
    nalgebra::Matrix3xX::from_columns(columns)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    /// Independent composition from the four elementary transforms.
    fn link_oracle(row: &DhRow, theta: f64) -> Matrix4<f64> {
        let rot_x = Matrix4::from(nalgebra::Rotation3::from_axis_angle(
            &Vector3::x_axis(),
            row.alpha_prev,
        ));
        let trans_x = Matrix4::new_translation(&Vector3::new(row.a_prev, 0.0, 0.0));
        let trans_z = Matrix4::new_translation(&Vector3::new(0.0, 0.0, row.d));
        let rot_z = Matrix4::from(nalgebra::Rotation3::from_axis_angle(
            &Vector3::z_axis(),
            row.theta_offset + theta,
        ));
        rot_x * trans_x * trans_z * rot_z
    }

    #[test]
    fn zero_row_is_identity() {
        let row = DhRow::actuated(0.0, 0.0, 0.0);
        assert_eq!(link_transform(&row, 0.0), Matrix4::identity());
    }

    #[test]
    fn translation_only_row() {
        let row = DhRow::actuated(0.0, 0.17, 0.0);
        let t = link_transform(&row, 0.0);
        let mut expected = Matrix4::identity();
        expected[(0, 3)] = 0.17;
        assert_abs_diff_eq!(t, expected, epsilon = 1e-15);
    }

    #[test]
    fn link_transform_matches_elementary_product() {
        // Frozen from the oracle: alpha=90 deg, a=0.10, theta=90 deg maps the
        // frame to rows [0,-1,0 | 0.1], [0,0,-1 | 0], [1,0,0 | 0].
        let row = DhRow::actuated(90.0, 0.10, 0.0);
        let theta = 90f64.to_radians();
        let expected = Matrix4::new(
            0.0, -1.0, 0.0, 0.1, //
            0.0, 0.0, -1.0, 0.0, //
            1.0, 0.0, 0.0, 0.0, //
            0.0, 0.0, 0.0, 1.0,
        );
        assert_abs_diff_eq!(link_transform(&row, theta), expected, epsilon = 1e-15);
        assert_abs_diff_eq!(link_transform(&row, theta), link_oracle(&row, theta), epsilon = 1e-15);

        // A few irregular rows against the oracle.
        for (alpha, a, d, off, theta) in [
            (30.0, 0.2, 0.05, 10.0, 0.3),
            (-90.0, 0.0, 0.1, 0.0, -1.2),
            (45.0, 0.11, 0.0, -20.0, 2.0),
        ] {
            let row = DhRow {
                alpha_prev: (alpha as f64).to_radians(),
                a_prev: a,
                d,
                theta_offset: (off as f64).to_radians(),
                actuated: true,
            };
            assert_abs_diff_eq!(link_transform(&row, theta), link_oracle(&row, theta), epsilon = 1e-14);
        }
    }

    #[test]
    fn chain_of_translations_composes() {
        let rows = vec![DhRow::fixed(0.0, 0.2, 0.0, 0.0), DhRow::fixed(0.0, 0.2, 0.0, 0.0)];
        let chain = SerialChain::new(BasePose::identity(), rows, vec![]).unwrap();
        let tip = fingertip_position(&chain, &[]).unwrap();
        assert_abs_diff_eq!(tip, Point3::new(0.4, 0.0, 0.0), epsilon = 1e-15);
    }

    #[test]
    fn chain_transform_equals_link_product_at_zero() {
        let rows = vec![
            DhRow::actuated(0.0, 0.1, 0.0),
            DhRow::actuated(-90.0, 0.1, 0.0),
            DhRow::fixed(0.0, 0.17, 0.0, 0.0),
        ];
        let ranges = vec![JointRange::new(-90.0, 90.0).unwrap(); 2];
        let chain = SerialChain::new(BasePose::identity(), rows.clone(), ranges).unwrap();
        let t = chain_transform(&chain, &[0.0, 0.0]).unwrap();
        let product = rows
            .iter()
            .fold(Matrix4::identity(), |acc, row| acc * link_transform(row, 0.0));
        assert_eq!(t, product);
    }

    #[test]
    fn dimension_and_range_errors() {
        let rows = vec![DhRow::actuated(0.0, 0.1, 0.0)];
        let chain = SerialChain::new(
            BasePose::identity(),
            rows,
            vec![JointRange::new(-30.0, 30.0).unwrap()],
        )
        .unwrap();
        assert!(matches!(
            chain_transform(&chain, &[]),
            Err(Error::DimensionMismatch { expected: 1, got: 0 })
        ));
        assert!(matches!(
            chain_transform(&chain, &[1.0]),
            Err(Error::JointOutOfRange { joint: 1, .. })
        ));
        // Inclusive endpoints.
        assert!(chain_transform(&chain, &[30f64.to_radians()]).is_ok());
        assert!(chain_transform(&chain, &[(-30f64).to_radians()]).is_ok());
    }

    #[test]
    fn zero_length_chain_stays_at_base() {
        let rows = vec![DhRow::actuated(0.0, 0.0, 0.0), DhRow::actuated(90.0, 0.0, 0.0)];
        let base = BasePose::from_translation(Vector3::new(0.3, -0.2, 0.1));
        let ranges = vec![JointRange::new(-180.0, 180.0).unwrap(); 2];
        let chain = SerialChain::new(base, rows, ranges).unwrap();
        let tip = fingertip_position(&chain, &[0.7, -0.4]).unwrap();
        assert_abs_diff_eq!(tip, Point3::new(0.3, -0.2, 0.1), epsilon = 1e-15);
    }

    #[test]
    fn single_joint_lever_arm_column() {
        let rows = vec![DhRow::actuated(0.0, 0.0, 0.0), DhRow::fixed(0.0, 0.25, 0.0, 0.0)];
        let chain = SerialChain::new(
            BasePose::identity(),
            rows,
            vec![JointRange::new(-180.0, 180.0).unwrap()],
        )
        .unwrap();
        let cols = positional_jacobian(&chain, &[0.0]).unwrap();
        assert_eq!(cols.len(), 1);
        assert_abs_diff_eq!(cols[0], Vector3::new(0.0, 0.25, 0.0), epsilon = 1e-15);
        assert_abs_diff_eq!(cols[0].norm(), 0.25, epsilon = 1e-15);
    }

    #[test]
    fn jacobian_matches_finite_differences() {
        let rows = vec![
            DhRow::actuated(0.0, 0.1, 0.0),
            DhRow::actuated(-90.0, 0.1, 0.02),
            DhRow::actuated(90.0, 0.17, 0.0),
            DhRow::actuated(-90.0, 0.0, 0.0),
            DhRow::fixed(0.0, 0.17, 0.0, 0.0),
        ];
        let ranges = vec![JointRange::new(-120.0, 120.0).unwrap(); 4];
        let chain = SerialChain::new(BasePose::identity(), rows, ranges).unwrap();
        let q = [0.3, -0.7, 0.2, -1.0];
        let cols = positional_jacobian(&chain, &q).unwrap();
        let h = 1e-6;
        for j in 0..4 {
            let mut hi = q;
            let mut lo = q;
            hi[j] += h;
            lo[j] -= h;
            let ph = fingertip_position(&chain, &hi).unwrap();
            let pl = fingertip_position(&chain, &lo).unwrap();
            let fd = (ph - pl) / (2.0 * h);
            assert_abs_diff_eq!(cols[j], fd, epsilon = 1e-9);
        }
    }

    #[test]
    fn rotation_blocks_stay_orthonormal() {
        let rows = vec![
            DhRow::actuated(33.0, 0.1, 0.04),
            DhRow::actuated(-61.0, 0.2, 0.0),
            DhRow::fixed(17.0, 0.05, 0.1, 40.0),
        ];
        let ranges = vec![JointRange::new(-180.0, 180.0).unwrap(); 2];
        let chain = SerialChain::new(BasePose::identity(), rows, ranges).unwrap();
        let t = chain_transform(&chain, &[0.9, -2.2]).unwrap();
        let r: Matrix3<f64> = t.fixed_view::<3, 3>(0, 0).into();
        let defect = (r * r.transpose() - Matrix3::identity()).abs().max();
        assert!(defect < 1e-12, "orthonormality defect {defect}");
    }
}
