//! Streaming evaluation of a chain over a joint grid.
//!
//! The walker caches prefix transforms: descending the joint tree in grid
//! order, each configuration in the innermost loop costs one cheap fingertip
//! update instead of a full chain product. Per-joint axes and origins are
//! recorded on the way down, so Jacobian columns fall out of cross products
//! at the leaf.
//!
//! Parallel runs split the outermost joints into tasks with a fixed fan-out
//! rule, accumulate compensated partial sums per task, and combine them in
//! task order. The result is bitwise identical for any worker count.

use std::sync::Mutex;

use crate::error::{Error, Result};
use crate::grid::JointGrid;
use crate::kinematics::{BasePose, Point3, SerialChain};
use crate::voxel::{VoxelBitmap, VoxelSet};

pub(crate) const MAX_DOF: usize = 8;

/// Tasks are prefix combinations; keep at least this many for load balance.
const TASK_TARGET: u64 = 256;

/// Rotation columns plus translation; composition stays in plain arrays to
/// keep the inner loops allocation-free.
#[derive(Debug, Clone, Copy)]
pub(crate) struct Affine {
    pub c0: [f64; 3],
    pub c1: [f64; 3],
    pub c2: [f64; 3],
    pub t: [f64; 3],
}

impl Affine {
    pub fn identity() -> Self {
        Affine {
            c0: [1.0, 0.0, 0.0],
            c1: [0.0, 1.0, 0.0],
            c2: [0.0, 0.0, 1.0],
            t: [0.0, 0.0, 0.0],
        }
    }

    #[inline]
    fn rotate(&self, v: [f64; 3]) -> [f64; 3] {
        [
            self.c0[0] * v[0] + self.c1[0] * v[1] + self.c2[0] * v[2],
            self.c0[1] * v[0] + self.c1[1] * v[1] + self.c2[1] * v[2],
            self.c0[2] * v[0] + self.c1[2] * v[1] + self.c2[2] * v[2],
        ]
    }

    #[inline]
    fn apply(&self, v: [f64; 3]) -> [f64; 3] {
        let r = self.rotate(v);
        [r[0] + self.t[0], r[1] + self.t[1], r[2] + self.t[2]]
    }

    #[inline]
    fn compose(&self, o: &Affine) -> Affine {
        Affine {
            c0: self.rotate(o.c0),
            c1: self.rotate(o.c1),
            c2: self.rotate(o.c2),
            t: self.apply(o.t),
        }
    }

    /// `self * Rot_z(theta)` given the angle's cosine and sine.
    #[inline]
    fn rotated_z(&self, c: f64, s: f64) -> Affine {
        let mix = |a: [f64; 3], b: [f64; 3], ka: f64, kb: f64| {
            [
                ka * a[0] + kb * b[0],
                ka * a[1] + kb * b[1],
                ka * a[2] + kb * b[2],
            ]
        };
        Affine {
            c0: mix(self.c0, self.c1, c, s),
            c1: mix(self.c0, self.c1, -s, c),
            c2: self.c2,
            t: self.t,
        }
    }

    fn from_base(base: &BasePose) -> Affine {
        let m = base.rotation;
        Affine {
            c0: [m[(0, 0)], m[(1, 0)], m[(2, 0)]],
            c1: [m[(0, 1)], m[(1, 1)], m[(2, 1)]],
            c2: [m[(0, 2)], m[(1, 2)], m[(2, 2)]],
            t: [base.translation.x, base.translation.y, base.translation.z],
        }
    }
}

/// Knuth two-sum compensated accumulator; branch-free and order-stable.
#[derive(Debug, Clone, Copy, Default)]
pub(crate) struct Compensated {
    sum: f64,
    comp: f64,
}

impl Compensated {
    #[inline]
    pub fn add(&mut self, x: f64) {
        let t = self.sum + x;
        let bv = t - self.sum;
        self.comp += (self.sum - (t - bv)) + (x - bv);
        self.sum = t;
    }

    /// Fixed merge procedure; calling it in a fixed order makes the total
    /// independent of how work was partitioned.
    pub fn merge(&mut self, other: Compensated) {
        self.add(other.sum);
        self.comp += other.comp;
    }

    pub fn value(&self) -> f64 {
        self.sum + self.comp
    }
}

/// Per-joint axes and origins recorded on the way down the joint tree.
pub(crate) struct WalkState {
    pub z: [[f64; 3]; MAX_DOF],
    pub p: [[f64; 3]; MAX_DOF],
}

impl WalkState {
    fn new() -> Self {
        WalkState {
            z: [[0.0; 3]; MAX_DOF],
            p: [[0.0; 3]; MAX_DOF],
        }
    }
}

/// Base pose applied to local fingertip points at the leaf, one per finger
/// instance sharing the chain.
#[derive(Debug, Clone)]
pub(crate) struct LeafBase {
    rot: Option<Affine>,
    t: [f64; 3],
}

impl LeafBase {
    pub fn from_pose(base: &BasePose) -> Self {
        let t = [base.translation.x, base.translation.y, base.translation.z];
        if base.is_identity_rotation() {
            LeafBase { rot: None, t }
        } else {
            LeafBase {
                rot: Some(Affine::from_base(base)),
                t,
            }
        }
    }

    #[inline]
    pub fn apply(&self, p: [f64; 3]) -> [f64; 3] {
        match &self.rot {
            None => [p[0] + self.t[0], p[1] + self.t[1], p[2] + self.t[2]],
            Some(a) => a.apply(p),
        }
    }

    fn center(&self, local_center: [f64; 3]) -> [f64; 3] {
        self.apply(local_center)
    }
}

struct Segment {
    pre: Affine,
}

/// A chain bound to a grid, ready to stream configurations.
pub(crate) struct GridWalker {
    segments: Vec<Segment>,
    tail_t: [f64; 3],
    /// cos/sin of (theta_offset + q) per joint sample.
    samples: Vec<Vec<(f64, f64)>>,
    prefix_depth: usize,
    task_count: u64,
    reach: f64,
    base_t: [f64; 3],
}

impl GridWalker {
    pub fn new(chain: &SerialChain, grid: &JointGrid) -> Result<Self> {
        if !grid.fits_chain(chain) {
            return Err(Error::Parameter(
                "grid does not match the chain's joint ranges".into(),
            ));
        }
        if chain.dof() > MAX_DOF {
            return Err(Error::Parameter(format!(
                "chains with more than {MAX_DOF} actuated joints are not supported"
            )));
        }

        let mut segments = Vec::with_capacity(chain.dof());
        let mut offsets = Vec::with_capacity(chain.dof());
        let mut pending = Affine::from_base(&chain.base);
        for row in &chain.rows {
            let pre = {
                let (sa, ca) = row.alpha_prev.sin_cos();
                Affine {
                    c0: [1.0, 0.0, 0.0],
                    c1: [0.0, ca, sa],
                    c2: [0.0, -sa, ca],
                    t: [row.a_prev, -row.d * sa, row.d * ca],
                }
            };
            if row.actuated {
                segments.push(Segment {
                    pre: pending.compose(&pre),
                });
                offsets.push(row.theta_offset);
                pending = Affine::identity();
            } else {
                let (s, c) = row.theta_offset.sin_cos();
                pending = pending.compose(&pre).rotated_z(c, s);
            }
        }
        let tail_t = pending.t;

        let samples: Vec<Vec<(f64, f64)>> = grid
            .joints
            .iter()
            .zip(&offsets)
            .map(|(j, &off)| {
                j.values_deg
                    .iter()
                    .map(|&deg| {
                        let (s, c) = (off + deg.to_radians()).sin_cos();
                        (c, s)
                    })
                    .collect()
            })
            .collect();

        let counts: Vec<u64> = samples.iter().map(|s| s.len() as u64).collect();
        let mut prefix_depth = 0;
        let mut fanout = 1u64;
        while prefix_depth + 1 < counts.len() && fanout < TASK_TARGET {
            fanout *= counts[prefix_depth];
            prefix_depth += 1;
        }

        Ok(GridWalker {
            segments,
            tail_t,
            samples,
            prefix_depth,
            task_count: fanout,
            reach: chain.reach(),
            base_t: [
                chain.base.translation.x,
                chain.base.translation.y,
                chain.base.translation.z,
            ],
        })
    }

    fn dof(&self) -> usize {
        self.segments.len()
    }

    /// Bitmap that can hold every cell this walker can touch under `base`.
    fn bitmap_for(&self, base: &LeafBase, delta: f64) -> VoxelBitmap {
        VoxelBitmap::for_bounds(base.center(self.base_t), self.reach, delta)
    }

    fn walk_task<S: Sink>(&self, task: u64, state: &mut WalkState, sink: &mut S) {
        if self.dof() == 0 {
            sink.leaf(self.tail_t, state);
            return;
        }
        let mut idx = [0usize; MAX_DOF];
        let mut rem = task;
        for j in (0..self.prefix_depth).rev() {
            let n = self.samples[j].len() as u64;
            idx[j] = (rem % n) as usize;
            rem /= n;
        }
        let mut t = Affine::identity();
        for j in 0..self.prefix_depth {
            let f = t.compose(&self.segments[j].pre);
            state.z[j] = f.c2;
            state.p[j] = f.t;
            let (c, s) = self.samples[j][idx[j]];
            t = f.rotated_z(c, s);
        }
        self.descend(self.prefix_depth, &t, state, sink);
    }

    fn descend<S: Sink>(&self, depth: usize, t: &Affine, state: &mut WalkState, sink: &mut S) {
        let f = t.compose(&self.segments[depth].pre);
        state.z[depth] = f.c2;
        state.p[depth] = f.t;
        if depth + 1 == self.dof() {
            let [tx, ty, tz] = self.tail_t;
            for &(c, s) in &self.samples[depth] {
                let v = [c * tx - s * ty, s * tx + c * ty, tz];
                let p_e = f.apply(v);
                sink.leaf(p_e, state);
            }
        } else {
            for &(c, s) in &self.samples[depth] {
                let next = f.rotated_z(c, s);
                self.descend(depth + 1, &next, state, sink);
            }
        }
    }

    /// Run `sink` over every configuration in grid order on this thread.
    fn run_sequential<S: Sink>(&self, sink: &mut S) {
        let mut state = WalkState::new();
        for task in 0..self.task_count {
            self.walk_task(task, &mut state, sink);
        }
    }

    /// Parallel run: tasks go to the current rayon pool, scalar parts are
    /// combined in task order, bitmaps are unioned into `shared`.
    fn run_parallel<S, F>(&self, make_sink: F) -> Vec<S::Part>
    where
        S: Sink,
        F: Fn() -> S + Sync,
        S::Part: Send,
    {
        use rayon::prelude::*;
        (0..self.task_count)
            .into_par_iter()
            .map(|task| {
                let mut sink = make_sink();
                let mut state = WalkState::new();
                self.walk_task(task, &mut state, &mut sink);
                sink.into_part()
            })
            .collect()
    }

    /// Mean manipulability over the grid, plus one voxel set per leaf base.
    pub fn manipulability_and_voxels(
        &self,
        bases: &[BasePose],
        delta: f64,
    ) -> (f64, Vec<VoxelSet>) {
        let leaf_bases: Vec<LeafBase> = bases.iter().map(LeafBase::from_pose).collect();
        let shared: Vec<Mutex<VoxelBitmap>> = leaf_bases
            .iter()
            .map(|b| Mutex::new(self.bitmap_for(b, delta)))
            .collect();

        let parts = self.run_parallel(|| ManipVoxelSink {
            sum: Compensated::default(),
            count: 0,
            dof: self.dof(),
            delta,
            bases: &leaf_bases,
            local: leaf_bases
                .iter()
                .map(|b| self.bitmap_for(b, delta))
                .collect(),
            shared: &shared,
        });

        let mut total = Compensated::default();
        let mut count = 0u64;
        for (part, n) in parts {
            total.merge(part);
            count += n;
        }
        let mean = if count == 0 { 0.0 } else { total.value() / count as f64 };
        let sets = shared
            .into_iter()
            .map(|m| m.into_inner().unwrap().to_voxel_set(delta))
            .collect();
        (mean, sets)
    }

    /// Mean manipulability only.
    pub fn global_manipulability(&self) -> f64 {
        let (mean, _) = self.manipulability_and_voxels(&[], 0.05);
        mean
    }

    /// Voxel sets per base and per voxel size, positions only.
    pub fn voxel_sets(&self, bases: &[BasePose], deltas: &[f64]) -> Vec<Vec<VoxelSet>> {
        let leaf_bases: Vec<LeafBase> = bases.iter().map(LeafBase::from_pose).collect();
        let shared: Vec<Mutex<VoxelBitmap>> = leaf_bases
            .iter()
            .flat_map(|b| deltas.iter().map(|&d| Mutex::new(self.bitmap_for(b, d))))
            .collect();

        self.run_parallel(|| PositionSink {
            bases: &leaf_bases,
            deltas,
            local: leaf_bases
                .iter()
                .flat_map(|b| deltas.iter().map(|&d| self.bitmap_for(b, d)))
                .collect(),
            shared: &shared,
        });

        let mut iter = shared.into_iter();
        bases
            .iter()
            .map(|_| {
                deltas
                    .iter()
                    .map(|&d| iter.next().unwrap().into_inner().unwrap().to_voxel_set(d))
                    .collect()
            })
            .collect()
    }

    /// Mean norm of the most-distal joint's Jacobian column.
    pub fn mean_distal_norm(&self) -> f64 {
        let parts = self.run_parallel(|| DistalSink {
            sum: Compensated::default(),
            count: 0,
            dof: self.dof(),
        });
        let mut total = Compensated::default();
        let mut count = 0u64;
        for (part, n) in parts {
            total.merge(part);
            count += n;
        }
        if count == 0 {
            0.0
        } else {
            total.value() / count as f64
        }
    }

    /// Fingertip positions in grid order (sequential; the caller owns the
    /// memory implications for large grids).
    pub fn collect_points(&self) -> Vec<Point3> {
        let mut sink = CollectSink { points: Vec::new() };
        self.run_sequential(&mut sink);
        sink.points
    }
}

pub(crate) trait Sink: Send {
    /// Scalar part returned per task and combined in task order.
    type Part;
    fn leaf(&mut self, p_e: [f64; 3], state: &WalkState);
    fn into_part(self) -> Self::Part;
}

#[inline]
fn sub(a: [f64; 3], b: [f64; 3]) -> [f64; 3] {
    [a[0] - b[0], a[1] - b[1], a[2] - b[2]]
}

#[inline]
fn cross(a: [f64; 3], b: [f64; 3]) -> [f64; 3] {
    [
        a[1] * b[2] - a[2] * b[1],
        a[2] * b[0] - a[0] * b[2],
        a[0] * b[1] - a[1] * b[0],
    ]
}

/// sqrt(det(J J^T)) from Jacobian columns; round-off negatives clamp to 0.
#[inline]
pub(crate) fn gram_manipulability(p_e: [f64; 3], state: &WalkState, dof: usize) -> f64 {
    let mut g = [0.0f64; 6];
    for j in 0..dof {
        let col = cross(state.z[j], sub(p_e, state.p[j]));
        g[0] += col[0] * col[0];
        g[1] += col[0] * col[1];
        g[2] += col[0] * col[2];
        g[3] += col[1] * col[1];
        g[4] += col[1] * col[2];
        g[5] += col[2] * col[2];
    }
    let det = g[0] * (g[3] * g[5] - g[4] * g[4]) - g[1] * (g[1] * g[5] - g[4] * g[2])
        + g[2] * (g[1] * g[4] - g[3] * g[2]);
    det.max(0.0).sqrt()
}

struct ManipVoxelSink<'a> {
    sum: Compensated,
    count: u64,
    dof: usize,
    delta: f64,
    bases: &'a [LeafBase],
    local: Vec<VoxelBitmap>,
    shared: &'a [Mutex<VoxelBitmap>],
}

impl Sink for ManipVoxelSink<'_> {
    type Part = (Compensated, u64);

    #[inline]
    fn leaf(&mut self, p_e: [f64; 3], state: &WalkState) {
        self.sum.add(gram_manipulability(p_e, state, self.dof));
        self.count += 1;
        for (base, map) in self.bases.iter().zip(&mut self.local) {
            let q = base.apply(p_e);
            map.set([
                (q[0] / self.delta).floor() as i32,
                (q[1] / self.delta).floor() as i32,
                (q[2] / self.delta).floor() as i32,
            ]);
        }
    }

    fn into_part(self) -> Self::Part {
        for (local, shared) in self.local.iter().zip(self.shared) {
            shared.lock().unwrap().union_in_place(local);
        }
        (self.sum, self.count)
    }
}

struct PositionSink<'a> {
    bases: &'a [LeafBase],
    deltas: &'a [f64],
    local: Vec<VoxelBitmap>,
    shared: &'a [Mutex<VoxelBitmap>],
}

impl Sink for PositionSink<'_> {
    type Part = ();

    #[inline]
    fn leaf(&mut self, p_e: [f64; 3], _state: &WalkState) {
        let nd = self.deltas.len();
        for (bi, base) in self.bases.iter().enumerate() {
            let q = base.apply(p_e);
            for (di, &delta) in self.deltas.iter().enumerate() {
                self.local[bi * nd + di].set([
                    (q[0] / delta).floor() as i32,
                    (q[1] / delta).floor() as i32,
                    (q[2] / delta).floor() as i32,
                ]);
            }
        }
    }

    fn into_part(self) -> Self::Part {
        for (local, shared) in self.local.iter().zip(self.shared) {
            shared.lock().unwrap().union_in_place(local);
        }
    }
}

struct DistalSink {
    sum: Compensated,
    count: u64,
    dof: usize,
}

impl Sink for DistalSink {
    type Part = (Compensated, u64);

    #[inline]
    fn leaf(&mut self, p_e: [f64; 3], state: &WalkState) {
        let k = self.dof - 1;
        let col = cross(state.z[k], sub(p_e, state.p[k]));
        let norm = (col[0] * col[0] + col[1] * col[1] + col[2] * col[2]).sqrt();
        self.sum.add(norm);
        self.count += 1;
    }

    fn into_part(self) -> Self::Part {
        (self.sum, self.count)
    }
}

struct CollectSink {
    points: Vec<Point3>,
}

impl Sink for CollectSink {
    type Part = ();

    #[inline]
    fn leaf(&mut self, p_e: [f64; 3], _state: &WalkState) {
        self.points.push(Point3::new(p_e[0], p_e[1], p_e[2]));
    }

    fn into_part(self) -> Self::Part {}
}
