use crate::datamodel::{Dims, VideoVolume, FEATURE_DIM};
use crate::scalar::Scalar;

/// Feature of one voxel: CIELAB at frames `t-1`, `t`, `t+1` (clamped at the
/// volume ends) and its position `(x, y, t)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct VoxelFeature<T> {
    pub color: [T; FEATURE_DIM],
    pub position: [T; 3],
}

/// Dense per-voxel color features in the volume's flat index order.
#[derive(Debug, Clone)]
pub struct FeatureGrid<T> {
    dims: Dims,
    colors: Vec<[T; FEATURE_DIM]>,
}

impl<T: Scalar> FeatureGrid<T> {
    pub fn dims(&self) -> Dims {
        self.dims
    }

    #[inline]
    pub fn color(&self, idx: usize) -> &[T; FEATURE_DIM] {
        &self.colors[idx]
    }

    #[inline]
    pub fn position(&self, idx: usize) -> [T; 3] {
        let (t, y, x) = self.dims.coords(idx);
        [T::from_usize_lossy(x), T::from_usize_lossy(y), T::from_usize_lossy(t)]
    }

    pub fn get(&self, t: usize, y: usize, x: usize) -> VoxelFeature<T> {
        let idx = self.dims.index(t, y, x);
        VoxelFeature { color: self.colors[idx], position: self.position(idx) }
    }

    pub fn len(&self) -> usize {
        self.colors.len()
    }

    pub fn is_empty(&self) -> bool {
        self.colors.is_empty()
    }
}

pub fn extract_features<T: Scalar>(v: &VideoVolume<T>) -> FeatureGrid<T> {
    let dims = v.dims();
    let mut colors = Vec::with_capacity(dims.len());
    for t in 0..dims.depth {
        let prev = t.saturating_sub(1);
        let next = (t + 1).min(dims.depth - 1);
        for y in 0..dims.height {
            for x in 0..dims.width {
                let mut f = [T::zero(); FEATURE_DIM];
                for (slot, frame) in [prev, t, next].into_iter().enumerate() {
                    f[slot * 3..slot * 3 + 3].copy_from_slice(&v.lab(frame, y, x));
                }
                colors.push(f);
            }
        }
    }
    FeatureGrid { dims, colors }
}
