//! Voxelized workspace volumes.
//!
//! A point `(x, y, z)` occupies the cell `(floor(x/d), floor(y/d),
//! floor(z/d))`. The lattice is anchored at the palm origin for every chain,
//! so thumb and finger sets intersect cell-for-cell. Floor division keeps
//! negative coordinates correct: `-0.01` at `d = 0.05` lands in cell `-1`.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::kinematics::Point3;

/// Volume of `count` cells with edge `delta`.
#[inline]
pub fn cell_volume(count: usize, delta: f64) -> f64 {
    count as f64 * (delta * delta * delta)
}

/// Lattice cell of a point.
#[inline]
pub fn voxel_index(x: f64, y: f64, z: f64, delta: f64) -> [i32; 3] {
    [
        (x / delta).floor() as i32,
        (y / delta).floor() as i32,
        (z / delta).floor() as i32,
    ]
}

/// A set of occupied cells on the shared lattice with edge length `delta`.
/// Cells are kept sorted and unique, so equal sets compare equal and
/// intersections are linear merges.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VoxelSet {
    delta: f64,
    cells: Vec<[i32; 3]>,
}

impl VoxelSet {
    pub fn new(delta: f64, mut cells: Vec<[i32; 3]>) -> Result<Self> {
        if !(delta.is_finite() && delta > 0.0) {
            return Err(Error::Parameter(format!(
                "voxel size must be positive, got {delta}"
            )));
        }
        cells.sort_unstable();
        cells.dedup();
        Ok(Self { delta, cells })
    }

    pub fn empty(delta: f64) -> Result<Self> {
        Self::new(delta, Vec::new())
    }

    pub fn delta(&self) -> f64 {
        self.delta
    }

    pub fn cells(&self) -> &[[i32; 3]] {
        &self.cells
    }

    pub fn len(&self) -> usize {
        self.cells.len()
    }

    pub fn is_empty(&self) -> bool {
        self.cells.is_empty()
    }

    pub fn contains(&self, cell: &[i32; 3]) -> bool {
        self.cells.binary_search(cell).is_ok()
    }

    /// `|cells| * delta^3`, exact per the cardinality definition.
    pub fn volume(&self) -> f64 {
        cell_volume(self.cells.len(), self.delta)
    }

    /// Center coordinates of every occupied cell.
    pub fn cell_centers(&self) -> impl Iterator<Item = [f64; 3]> + '_ {
        let d = self.delta;
        self.cells
            .iter()
            .map(move |c| [(c[0] as f64 + 0.5) * d, (c[1] as f64 + 0.5) * d, (c[2] as f64 + 0.5) * d])
    }

    pub fn intersect(&self, other: &VoxelSet) -> Result<VoxelSet> {
        if self.delta != other.delta {
            return Err(Error::VoxelSizeMismatch {
                left: self.delta,
                right: other.delta,
            });
        }
        let mut out = Vec::new();
        let (mut i, mut j) = (0, 0);
        while i < self.cells.len() && j < other.cells.len() {
            match self.cells[i].cmp(&other.cells[j]) {
                std::cmp::Ordering::Less => i += 1,
                std::cmp::Ordering::Greater => j += 1,
                std::cmp::Ordering::Equal => {
                    out.push(self.cells[i]);
                    i += 1;
                    j += 1;
                }
            }
        }
        Ok(VoxelSet {
            delta: self.delta,
            cells: out,
        })
    }

    /// Number of common cells, without materializing the intersection.
    pub fn intersection_count(&self, other: &VoxelSet) -> Result<usize> {
        if self.delta != other.delta {
            return Err(Error::VoxelSizeMismatch {
                left: self.delta,
                right: other.delta,
            });
        }
        let mut n = 0;
        let (mut i, mut j) = (0, 0);
        while i < self.cells.len() && j < other.cells.len() {
            match self.cells[i].cmp(&other.cells[j]) {
                std::cmp::Ordering::Less => i += 1,
                std::cmp::Ordering::Greater => j += 1,
                std::cmp::Ordering::Equal => {
                    n += 1;
                    i += 1;
                    j += 1;
                }
            }
        }
        Ok(n)
    }
}

/// Map every point to its cell and collapse duplicates.
pub fn voxelize(points: &[Point3], delta: f64) -> Result<VoxelSet> {
    if !(delta.is_finite() && delta > 0.0) {
        return Err(Error::Parameter(format!(
            "voxel size must be positive, got {delta}"
        )));
    }
    let cells = points
        .iter()
        .map(|p| voxel_index(p.x, p.y, p.z, delta))
        .collect();
    VoxelSet::new(delta, cells)
}

/// Total occupied volume of a set.
pub fn workspace_volume(voxels: &VoxelSet) -> f64 {
    voxels.volume()
}

/// Cells reachable by both sets, and their volume.
pub fn overlap_volume(a: &VoxelSet, b: &VoxelSet) -> Result<(VoxelSet, f64)> {
    let common = a.intersect(b)?;
    let vol = common.volume();
    Ok((common, vol))
}

/// Dense occupancy bitmap over a bounded index box. The sweep evaluator
/// marks cells here and converts to a sorted [`VoxelSet`] once at the end.
#[derive(Debug, Clone)]
pub(crate) struct VoxelBitmap {
    min: [i32; 3],
    dims: [usize; 3],
    words: Vec<u64>,
}

impl VoxelBitmap {
    /// Bitmap covering `center ± radius` (coordinates, not cells).
    pub fn for_bounds(center: [f64; 3], radius: f64, delta: f64) -> Self {
        let mut min = [0i32; 3];
        let mut dims = [0usize; 3];
        for k in 0..3 {
            let lo = ((center[k] - radius) / delta).floor() as i32 - 1;
            let hi = ((center[k] + radius) / delta).floor() as i32 + 1;
            min[k] = lo;
            dims[k] = (hi - lo + 1) as usize;
        }
        let bits = dims[0] * dims[1] * dims[2];
        VoxelBitmap {
            min,
            dims,
            words: vec![0u64; bits.div_ceil(64)],
        }
    }

    #[inline]
    pub fn set(&mut self, cell: [i32; 3]) {
        let ix = (cell[0] - self.min[0]) as usize;
        let iy = (cell[1] - self.min[1]) as usize;
        let iz = (cell[2] - self.min[2]) as usize;
        debug_assert!(ix < self.dims[0] && iy < self.dims[1] && iz < self.dims[2]);
        let bit = ix + self.dims[0] * (iy + self.dims[1] * iz);
        self.words[bit >> 6] |= 1u64 << (bit & 63);
    }

    pub fn union_in_place(&mut self, other: &VoxelBitmap) {
        debug_assert_eq!(self.min, other.min);
        debug_assert_eq!(self.dims, other.dims);
        for (w, o) in self.words.iter_mut().zip(&other.words) {
            *w |= o;
        }
    }

    pub fn to_voxel_set(&self, delta: f64) -> VoxelSet {
        let mut cells = Vec::new();
        for (wi, &word) in self.words.iter().enumerate() {
            let mut bits = word;
            while bits != 0 {
                let b = bits.trailing_zeros() as usize;
                bits &= bits - 1;
                let lin = wi * 64 + b;
                let ix = lin % self.dims[0];
                let iy = (lin / self.dims[0]) % self.dims[1];
                let iz = lin / (self.dims[0] * self.dims[1]);
                cells.push([
                    self.min[0] + ix as i32,
                    self.min[1] + iy as i32,
                    self.min[2] + iz as i32,
                ]);
            }
        }
        // Linear order is z-major; VoxelSet::new re-sorts lexicographically.
        VoxelSet::new(delta, cells).expect("bitmap delta validated by caller")
    }
}
