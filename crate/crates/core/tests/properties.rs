//! Property tests for the set-algebra, lattice, and kinematic invariants.

use nalgebra::{Matrix3, Vector3};
use proptest::prelude::*;

use phalanx_core::grid::build_joint_grid;
use phalanx_core::{
    chain_transform, fingertip_position, overlap_volume, positional_jacobian, sample_workspace,
    voxelize, BasePose, DhRow, JointRange, Point3, SerialChain, VoxelSet,
};

fn cells_strategy() -> impl Strategy<Value = Vec<[i32; 3]>> {
    prop::collection::vec([-40i32..40, -40i32..40, -40i32..40].prop_map(|c| c), 0..200)
}

fn chain_strategy() -> impl Strategy<Value = SerialChain> {
    let row = (
        prop::sample::select(vec![0.0, 90.0, -90.0, 45.0, -30.0]),
        0.0f64..0.3,
        0.0f64..0.15,
        any::<bool>(),
        -40.0f64..40.0,
    )
        .prop_map(|(alpha, a, d, actuated, theta)| {
            if actuated {
                DhRow::actuated(alpha, a, d)
            } else {
                DhRow::fixed(alpha, a, d, theta)
            }
        });
    (
        prop::collection::vec(row, 2..6),
        -0.4f64..0.4,
        -0.4f64..0.4,
        -0.4f64..0.4,
    )
        .prop_map(|(mut rows, tx, ty, tz)| {
            // Keep at least one actuated row so jacobians are non-empty.
            if rows.iter().all(|r| !r.actuated) {
                rows[0].actuated = true;
                rows[0].theta_offset = 0.0;
            }
            let dof = rows.iter().filter(|r| r.actuated).count();
            let ranges = vec![JointRange::new(-120.0, 120.0).unwrap(); dof];
            SerialChain::new(
                BasePose::from_translation(Vector3::new(tx, ty, tz)),
                rows,
                ranges,
            )
            .unwrap()
        })
}

fn q_strategy(chain: &SerialChain) -> impl Strategy<Value = Vec<f64>> {
    prop::collection::vec(-120.0f64..=120.0, chain.dof())
        .prop_map(|v| v.into_iter().map(f64::to_radians).collect())
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn overlap_is_symmetric_and_bounded(a in cells_strategy(), b in cells_strategy()) {
        let sa = VoxelSet::new(0.05, a).unwrap();
        let sb = VoxelSet::new(0.05, b).unwrap();
        let (iab, vab) = overlap_volume(&sa, &sb).unwrap();
        let (iba, vba) = overlap_volume(&sb, &sa).unwrap();
        prop_assert_eq!(&iab, &iba);
        prop_assert_eq!(vab, vba);
        prop_assert!(vab >= 0.0);
        prop_assert!(vab <= sa.volume().min(sb.volume()));
        for c in iab.cells() {
            prop_assert!(sa.contains(c) && sb.contains(c));
        }
        let (self_overlap, v_self) = overlap_volume(&sa, &sa).unwrap();
        prop_assert_eq!(self_overlap, sa.clone());
        prop_assert_eq!(v_self, sa.volume());
    }

    #[test]
    fn voxelization_is_idempotent_under_duplication(
        points in prop::collection::vec((-1.0f64..1.0, -1.0f64..1.0, -1.0f64..1.0), 1..50),
        copies in 1usize..5,
    ) {
        let pts: Vec<Point3> = points.iter().map(|&(x, y, z)| Point3::new(x, y, z)).collect();
        let repeated: Vec<Point3> = pts
            .iter()
            .cycle()
            .take(pts.len() * copies)
            .cloned()
            .collect();
        let once = voxelize(&pts, 0.05).unwrap();
        let many = voxelize(&repeated, 0.05).unwrap();
        prop_assert_eq!(once, many);
    }

    #[test]
    fn floor_indexing_is_consistent_for_negative_coordinates(
        x in -3.0f64..3.0, d in prop::sample::select(vec![0.05, 0.025, 0.0625]),
    ) {
        let set = voxelize(&[Point3::new(x, -x, x)], d).unwrap();
        let c = set.cells()[0];
        for (value, idx) in [(x, c[0]), (-x, c[1]), (x, c[2])] {
            let lo = idx as f64 * d;
            // floor semantics: index * d <= value < (index + 1) * d, up to the
            // division rounding at the cell boundary.
            prop_assert!(value / d >= idx as f64);
            prop_assert!(value / d < (idx + 1) as f64);
            let _ = lo;
        }
    }

    #[test]
    fn rotation_blocks_are_orthonormal(chain in chain_strategy(), seed in any::<u64>()) {
        use rand::{Rng, SeedableRng};
        let mut rng = rand::rngs::StdRng::seed_from_u64(seed);
        let q: Vec<f64> = chain
            .ranges
            .iter()
            .map(|r| rng.gen_range(r.min_deg..=r.max_deg).to_radians())
            .collect();
        let t = chain_transform(&chain, &q).unwrap();
        let r: Matrix3<f64> = t.fixed_view::<3, 3>(0, 0).into();
        let defect = (r * r.transpose() - Matrix3::identity()).abs().max();
        prop_assert!(defect < 1e-12, "defect {}", defect);
    }

    #[test]
    fn fingertip_stays_within_reach(chain in chain_strategy(), seed in any::<u64>()) {
        use rand::{Rng, SeedableRng};
        let mut rng = rand::rngs::StdRng::seed_from_u64(seed);
        let q: Vec<f64> = chain
            .ranges
            .iter()
            .map(|r| rng.gen_range(r.min_deg..=r.max_deg).to_radians())
            .collect();
        let tip = fingertip_position(&chain, &q).unwrap();
        let dist = (tip.coords - chain.base.translation).norm();
        prop_assert!(dist <= chain.reach() + 1e-12, "{} > {}", dist, chain.reach());
    }

    #[test]
    fn manipulability_is_never_negative(chain in chain_strategy(), seed in any::<u64>()) {
        use rand::{Rng, SeedableRng};
        let mut rng = rand::rngs::StdRng::seed_from_u64(seed);
        let q: Vec<f64> = chain
            .ranges
            .iter()
            .map(|r| rng.gen_range(r.min_deg..=r.max_deg).to_radians())
            .collect();
        let cols = positional_jacobian(&chain, &q).unwrap();
        let w = phalanx_core::manipulability(&phalanx_core::kinematics::jacobian_matrix(&cols));
        prop_assert!(w >= 0.0);
        prop_assert!(w.is_finite());
    }
}

/// Scaling all lengths, base translations, and the voxel size by a power of
/// two leaves every voxel index bit-identical, so volumes scale by exactly
/// s^3 (power-of-two scaling is exact in IEEE-754).
#[test]
fn scale_covariance_is_exact_for_dyadic_factors() {
    let rows = vec![
        DhRow::actuated(0.0, 0.1, 0.0),
        DhRow::actuated(-90.0, 0.1, 0.05),
        DhRow::actuated(90.0, 0.17, 0.0),
        DhRow::fixed(0.0, 0.17, 0.0, 0.0),
    ];
    let ranges = vec![
        JointRange::new(-30.0, 90.0).unwrap(),
        JointRange::new(-90.0, 30.0).unwrap(),
        JointRange::new(-90.0, 0.0).unwrap(),
    ];
    let base = BasePose::from_translation(Vector3::new(0.125, -0.25, 0.5));
    let chain = SerialChain::new(base, rows.clone(), ranges.clone()).unwrap();
    let grid = build_joint_grid(&chain.ranges, 15.0).unwrap();
    let delta = 0.05;
    let points = sample_workspace(&chain, &grid).unwrap();
    let voxels = voxelize(&points, delta).unwrap();

    for s in [0.5, 2.0, 4.0, 0.25] {
        let scaled_rows: Vec<DhRow> = rows
            .iter()
            .map(|r| DhRow {
                a_prev: r.a_prev * s,
                d: r.d * s,
                ..*r
            })
            .collect();
        let scaled_base = BasePose::from_translation(base.translation * s);
        let scaled = SerialChain::new(scaled_base, scaled_rows, ranges.clone()).unwrap();
        let scaled_points = sample_workspace(&scaled, &grid).unwrap();
        let scaled_voxels = voxelize(&scaled_points, delta * s).unwrap();

        assert_eq!(voxels.cells(), scaled_voxels.cells(), "cells changed at s={s}");
        assert_eq!(
            scaled_voxels.volume().to_bits(),
            ((s * s * s) * voxels.volume()).to_bits(),
            "volume not exactly s^3-scaled at s={s}"
        );
    }
}

/// Translating a chain base by whole voxels shifts every cell index by the
/// same integer, leaving the count unchanged. Exact for a dyadic voxel size
/// and generic sample angles; configurations at exact multiples of 90 deg
/// can park a coordinate within one rounding step of a cell boundary, so the
/// ranges below keep samples off those angles.
#[test]
fn lattice_aligned_translation_preserves_counts() {
    let delta = 0.0625;
    let rows = vec![
        DhRow::actuated(0.0, 0.1, 0.0),
        DhRow::actuated(-90.0, 0.15, 0.0),
        DhRow::fixed(0.0, 0.2, 0.0, 0.0),
    ];
    let ranges = vec![
        JointRange::new(-56.0, 58.0).unwrap(),
        JointRange::new(-87.0, -3.0).unwrap(),
    ];
    let chain = SerialChain::new(BasePose::identity(), rows.clone(), ranges.clone()).unwrap();
    let grid = build_joint_grid(&chain.ranges, 11.0).unwrap();
    let reference = voxelize(&sample_workspace(&chain, &grid).unwrap(), delta).unwrap();

    for shift in [[1i32, 0, 0], [0, -2, 0], [0, 0, 3], [2, 1, -1]] {
        let t = Vector3::new(
            shift[0] as f64 * delta,
            shift[1] as f64 * delta,
            shift[2] as f64 * delta,
        );
        let moved = SerialChain::new(BasePose::from_translation(t), rows.clone(), ranges.clone())
            .unwrap();
        let voxels = voxelize(&sample_workspace(&moved, &grid).unwrap(), delta).unwrap();
        assert_eq!(voxels.len(), reference.len());
        let shifted: Vec<[i32; 3]> = reference
            .cells()
            .iter()
            .map(|c| [c[0] + shift[0], c[1] + shift[1], c[2] + shift[2]])
            .collect();
        assert_eq!(voxels.cells(), &shifted[..]);
    }
}

/// Halving the grid step keeps all previous samples, so the occupied cell
/// set can only grow.
#[test]
fn nested_grids_are_monotone_in_voxel_count() {
    let rows = vec![
        DhRow::actuated(0.0, 0.12, 0.0),
        DhRow::actuated(-90.0, 0.1, 0.0),
        DhRow::actuated(0.0, 0.15, 0.0),
        DhRow::fixed(0.0, 0.1, 0.0, 0.0),
    ];
    let ranges = vec![
        JointRange::new(-30.0, 30.0).unwrap(),
        JointRange::new(-90.0, 30.0).unwrap(),
        JointRange::new(-90.0, 0.0).unwrap(),
    ];
    let chain = SerialChain::new(BasePose::identity(), rows, ranges).unwrap();

    let coarse = build_joint_grid(&chain.ranges, 20.0).unwrap();
    let fine = build_joint_grid(&chain.ranges, 10.0).unwrap();
    // The fine grid contains every coarse sample.
    for (cj, fj) in coarse.joints.iter().zip(&fine.joints) {
        for v in &cj.values_deg {
            assert!(fj.values_deg.iter().any(|f| f == v));
        }
    }
    let coarse_vox = voxelize(&sample_workspace(&chain, &coarse).unwrap(), 0.05).unwrap();
    let fine_vox = voxelize(&sample_workspace(&chain, &fine).unwrap(), 0.05).unwrap();
    assert!(fine_vox.len() >= coarse_vox.len());
    for c in coarse_vox.cells() {
        assert!(fine_vox.contains(c));
    }
}

/// Pre-multiplying the base by a signed permutation maps fingertips exactly;
/// a general rigid transform agrees to floating tolerance.
#[test]
fn rigid_body_consistency_of_the_base_pose() {
    let rows = vec![
        DhRow::actuated(0.0, 0.1, 0.0),
        DhRow::actuated(-90.0, 0.1, 0.02),
        DhRow::actuated(90.0, 0.17, 0.0),
        DhRow::fixed(0.0, 0.17, 0.0, 0.0),
    ];
    let ranges = vec![JointRange::new(-90.0, 90.0).unwrap(); 3];
    let base = BasePose::from_translation(Vector3::new(0.25, -0.5, 0.125));
    let chain = SerialChain::new(base, rows.clone(), ranges.clone()).unwrap();
    let q = [0.3, -0.9, 0.5];
    let tip = fingertip_position(&chain, &q).unwrap();

    // Signed permutation (det +1), no translation: exact.
    let perm = Matrix3::new(0.0, -1.0, 0.0, 1.0, 0.0, 0.0, 0.0, 0.0, 1.0);
    let new_base = BasePose::new(perm * base.rotation, perm * base.translation).unwrap();
    let moved = SerialChain::new(new_base, rows.clone(), ranges.clone()).unwrap();
    let moved_tip = fingertip_position(&moved, &q).unwrap();
    let expected = perm * tip.coords;
    assert_eq!(moved_tip.coords.x.to_bits(), expected.x.to_bits());
    assert_eq!(moved_tip.coords.y.to_bits(), expected.y.to_bits());
    assert_eq!(moved_tip.coords.z.to_bits(), expected.z.to_bits());

    // General rigid motion: tolerance-level agreement.
    let rot = Matrix3::from(nalgebra::Rotation3::from_euler_angles(0.3, -0.2, 0.9));
    let shift = Vector3::new(0.11, 0.07, -0.23);
    let general = BasePose::new(rot * base.rotation, rot * base.translation + shift).unwrap();
    let moved = SerialChain::new(general, rows, ranges).unwrap();
    let moved_tip = fingertip_position(&moved, &q).unwrap();
    let expected = rot * tip.coords + shift;
    assert!((moved_tip.coords - expected).norm() < 1e-12);
}
