//! Superpixel label volumes and the little-endian `SPV1` / `UNC1` containers.
//!
//! Layout shared by both containers:
//!
//! ```text
//! magic   4 bytes  "SPV1" | "UNC1"
//! T H W K 4 x u32  (K = cluster count for SPV1, 0 for UNC1)
//! payload T*H*W x u32 labels (SPV1) | T*H*W x f32 values (UNC1)
//! SPV1 only: K x 12 f32 (x, y, z centroid, 9 feature values)
//! ```
//!
//! Neither container stores the video id; readers take it from the file stem.

use std::io::Write;
use std::path::Path;

use super::geometry::Dims;
use crate::error::{bail, Error, Result};
use crate::scalar::Scalar;

pub const FEATURE_DIM: usize = 9;
pub const HEADER_LEN: usize = 20;
const SPV_MAGIC: &[u8; 4] = b"SPV1";
const UNC_MAGIC: &[u8; 4] = b"UNC1";

/// Centroid of one superpixel: position `(x, y, z)` and mean feature.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Cluster<T> {
    pub position: [T; 3],
    pub feature: [T; FEATURE_DIM],
}

/// Hard association of every voxel to a superpixel.
#[derive(Debug, Clone, PartialEq)]
pub struct SuperpixelLabels<T> {
    pub video_id: String,
    pub dims: Dims,
    pub labels: Vec<u32>,
    pub clusters: Vec<Cluster<T>>,
}

impl<T: Scalar> SuperpixelLabels<T> {
    pub fn k(&self) -> usize {
        self.clusters.len()
    }

    #[inline]
    pub fn label(&self, t: usize, y: usize, x: usize) -> u32 {
        self.labels[self.dims.index(t, y, x)]
    }

    /// Labels are in range and every cluster owns at least one voxel.
    pub fn validate(&self) -> Result<()> {
        if self.labels.len() != self.dims.len() {
            bail!(Dimension, "label volume has {} voxels, dims say {}", self.labels.len(), self.dims.len());
        }
        let k = self.clusters.len();
        let mut used = vec![false; k];
        for &l in &self.labels {
            let l = l as usize;
            if l >= k {
                bail!(Invariant, "label {l} outside [0, {k})");
            }
            used[l] = true;
        }
        if let Some(empty) = used.iter().position(|u| !u) {
            bail!(Invariant, "cluster {empty} owns no voxels");
        }
        Ok(())
    }

    /// Voxel count per label.
    pub fn sizes(&self) -> Vec<usize> {
        let mut s = vec![0usize; self.clusters.len()];
        for &l in &self.labels {
            s[l as usize] += 1;
        }
        s
    }

    pub fn to_bytes(&self) -> Vec<u8> {
        let d = self.dims;
        let mut buf = Vec::with_capacity(HEADER_LEN + 4 * self.labels.len() + 48 * self.clusters.len());
        buf.extend_from_slice(SPV_MAGIC);
        for v in [d.depth, d.height, d.width, self.clusters.len()] {
            buf.extend_from_slice(&(v as u32).to_le_bytes());
        }
        for &l in &self.labels {
            buf.extend_from_slice(&l.to_le_bytes());
        }
        for c in &self.clusters {
            for v in c.position.iter().chain(c.feature.iter()) {
                buf.extend_from_slice(&(v.to_f64_lossy() as f32).to_le_bytes());
            }
        }
        buf
    }

    pub fn from_bytes(video_id: impl Into<String>, bytes: &[u8]) -> Result<Self> {
        let (dims, k, mut rd) = read_header(bytes, SPV_MAGIC)?;
        let labels = (0..dims.len()).map(|_| rd.u32()).collect::<Result<Vec<_>>>()?;
        let mut clusters = Vec::with_capacity(k);
        for _ in 0..k {
            let mut vals = [T::zero(); 12];
            for v in vals.iter_mut() {
                *v = T::lit(rd.f32()? as f64);
            }
            let mut feature = [T::zero(); FEATURE_DIM];
            feature.copy_from_slice(&vals[3..]);
            clusters.push(Cluster { position: [vals[0], vals[1], vals[2]], feature });
        }
        rd.finish()?;
        let sp = SuperpixelLabels { video_id: video_id.into(), dims, labels, clusters };
        if let Some(&bad) = sp.labels.iter().find(|&&l| l as usize >= k) {
            bail!(Format, "label {bad} outside [0, {k})");
        }
        Ok(sp)
    }
}

struct Reader<'a> {
    bytes: &'a [u8],
    pos: usize,
}

impl Reader<'_> {
    fn take4(&mut self) -> Result<[u8; 4]> {
        match self.bytes.get(self.pos..self.pos + 4) {
            Some(s) => {
                self.pos += 4;
                Ok([s[0], s[1], s[2], s[3]])
            }
            None => bail!(Format, "truncated payload at byte {}", self.pos),
        }
    }

    fn u32(&mut self) -> Result<u32> {
        self.take4().map(u32::from_le_bytes)
    }

    fn f32(&mut self) -> Result<f32> {
        self.take4().map(f32::from_le_bytes)
    }

    fn finish(self) -> Result<()> {
        if self.pos != self.bytes.len() {
            bail!(Format, "{} trailing bytes after payload", self.bytes.len() - self.pos);
        }
        Ok(())
    }
}

fn read_header<'a>(bytes: &'a [u8], magic: &[u8; 4]) -> Result<(Dims, usize, Reader<'a>)> {
    if bytes.len() < 4 || &bytes[..4] != magic {
        bail!(Format, "bad magic, expected {:?}", std::str::from_utf8(magic).unwrap_or("?"));
    }
    let mut rd = Reader { bytes, pos: 4 };
    let t = rd.u32()? as usize;
    let h = rd.u32()? as usize;
    let w = rd.u32()? as usize;
    let k = rd.u32()? as usize;
    let dims = Dims::new(t, h, w).map_err(|e| Error::Format(e.to_string()))?;
    // reject absurd headers before allocating
    let need = dims.len().checked_mul(4).unwrap_or(usize::MAX);
    if bytes.len().saturating_sub(HEADER_LEN) < need {
        bail!(Format, "truncated payload: header declares {t}x{h}x{w} voxels");
    }
    Ok((dims, k, rd))
}

fn stem(path: &Path) -> String {
    path.file_stem().map(|s| s.to_string_lossy().into_owned()).unwrap_or_default()
}

fn write_atomic(path: &Path, bytes: &[u8]) -> Result<()> {
    let mut f = std::fs::File::create(path).map_err(|e| Error::io(path, e))?;
    f.write_all(bytes).map_err(|e| Error::io(path, e))
}

pub fn write_labels<T: Scalar>(sp: &SuperpixelLabels<T>, path: &Path) -> Result<()> {
    write_atomic(path, &sp.to_bytes())
}

/// Read an `SPV1` file; the video id is the file stem.
pub fn read_labels<T: Scalar>(path: &Path) -> Result<SuperpixelLabels<T>> {
    let bytes = std::fs::read(path).map_err(|e| Error::io(path, e))?;
    SuperpixelLabels::from_bytes(stem(path), &bytes)
}

/// Per-voxel non-negative uncertainty scores `U` for one video.
#[derive(Debug, Clone, PartialEq)]
pub struct UncertaintyVolume<T> {
    pub video_id: String,
    pub dims: Dims,
    pub values: Vec<T>,
}

impl<T: Scalar> UncertaintyVolume<T> {
    pub fn new(video_id: impl Into<String>, dims: Dims, values: Vec<T>) -> Result<Self> {
        if values.len() != dims.len() {
            bail!(Dimension, "uncertainty volume has {} values, dims say {}", values.len(), dims.len());
        }
        let video_id = video_id.into();
        if let Some(i) = values.iter().position(|v| !(*v >= T::zero()) || !v.is_finite()) {
            let (t, y, x) = dims.coords(i);
            bail!(Validation, "video {video_id:?}: uncertainty at frame {t} ({x},{y}) is negative or not finite");
        }
        Ok(UncertaintyVolume { video_id, dims, values })
    }

    pub fn frame(&self, t: usize) -> &[T] {
        let n = self.dims.frame_len();
        &self.values[t * n..(t + 1) * n]
    }

    pub fn to_bytes(&self) -> Vec<u8> {
        let d = self.dims;
        let mut buf = Vec::with_capacity(HEADER_LEN + 4 * self.values.len());
        buf.extend_from_slice(UNC_MAGIC);
        for v in [d.depth, d.height, d.width, 0] {
            buf.extend_from_slice(&(v as u32).to_le_bytes());
        }
        for v in &self.values {
            buf.extend_from_slice(&(v.to_f64_lossy() as f32).to_le_bytes());
        }
        buf
    }

    pub fn from_bytes(video_id: impl Into<String>, bytes: &[u8]) -> Result<Self> {
        let (dims, reserved, mut rd) = read_header(bytes, UNC_MAGIC)?;
        if reserved != 0 {
            bail!(Format, "UNC1 reserved header field must be 0, got {reserved}");
        }
        let values = (0..dims.len()).map(|_| rd.f32().map(|v| T::lit(v as f64))).collect::<Result<Vec<_>>>()?;
        rd.finish()?;
        Self::new(video_id, dims, values)
    }
}

pub fn write_uncertainty<T: Scalar>(u: &UncertaintyVolume<T>, path: &Path) -> Result<()> {
    write_atomic(path, &u.to_bytes())
}

pub fn read_uncertainty<T: Scalar>(path: &Path) -> Result<UncertaintyVolume<T>> {
    let bytes = std::fs::read(path).map_err(|e| Error::io(path, e))?;
    UncertaintyVolume::from_bytes(stem(path), &bytes)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn single_voxel() -> SuperpixelLabels<f32> {
        SuperpixelLabels {
            video_id: "one".into(),
            dims: Dims::new(1, 1, 1).unwrap(),
            labels: vec![0],
            clusters: vec![Cluster { position: [0.0; 3], feature: [50.0; 9] }],
        }
    }

    #[test]
    fn minimal_volume_layout() {
        let bytes = single_voxel().to_bytes();
        assert_eq!(&bytes[..4], b"SPV1");
        assert_eq!(&bytes[4..HEADER_LEN], &[1, 0, 0, 0, 1, 0, 0, 0, 1, 0, 0, 0, 1, 0, 0, 0]);
        // label payload then one 48-byte cluster record
        assert_eq!(&bytes[HEADER_LEN..HEADER_LEN + 4], &[0, 0, 0, 0]);
        assert_eq!(bytes.len(), HEADER_LEN + 4 + 48);
    }

    #[test]
    fn truncated_file_is_rejected() {
        let bytes = single_voxel().to_bytes();
        for cut in [3, 10, HEADER_LEN + 2, bytes.len() - 1] {
            assert!(matches!(
                SuperpixelLabels::<f32>::from_bytes("x", &bytes[..cut]),
                Err(Error::Format(_))
            ));
        }
    }

    #[test]
    fn bad_magic_rejected() {
        let mut bytes = single_voxel().to_bytes();
        bytes[0] = b'X';
        assert!(matches!(SuperpixelLabels::<f32>::from_bytes("x", &bytes), Err(Error::Format(_))));
        let unc = UncertaintyVolume::<f32>::new("u", Dims::new(1, 1, 1).unwrap(), vec![0.5]).unwrap();
        assert!(SuperpixelLabels::<f32>::from_bytes("x", &unc.to_bytes()).is_err());
    }

    #[test]
    fn file_round_trip_takes_id_from_stem() {
        let tmp = tempfile::tempdir().unwrap();
        let path = tmp.path().join("one.spv");
        write_labels(&single_voxel(), &path).unwrap();
        assert_eq!(read_labels::<f32>(&path).unwrap(), single_voxel());
    }

    #[test]
    fn negative_uncertainty_rejected() {
        let d = Dims::new(1, 1, 2).unwrap();
        assert!(matches!(UncertaintyVolume::<f64>::new("u", d, vec![0.1, -0.1]), Err(Error::Validation(_))));
    }

    proptest! {
        #[test]
        fn spv_round_trip(t in 1usize..5, h in 1usize..9, w in 1usize..9, k in 1u32..7, seed in any::<u64>()) {
            let dims = Dims::new(t, h, w).unwrap();
            let mut s = seed | 1;
            let mut next = || { s ^= s << 13; s ^= s >> 7; s ^= s << 17; s };
            let labels: Vec<u32> = (0..dims.len()).map(|_| (next() % k as u64) as u32).collect();
            let clusters = (0..k).map(|_| {
                let mut f = [0.0f64; 9];
                for v in f.iter_mut() { *v = (next() % 20000) as f64 / 100.0 - 100.0; }
                Cluster { position: [(next() % 64) as f64 * 0.25, 1.5, 0.125], feature: f }
            }).collect();
            let sp = SuperpixelLabels { video_id: "r".into(), dims, labels, clusters };
            let back = SuperpixelLabels::<f64>::from_bytes("r", &sp.to_bytes()).unwrap();
            prop_assert_eq!(&back.labels, &sp.labels);
            prop_assert_eq!(back.dims, sp.dims);
            for (a, b) in back.clusters.iter().zip(&sp.clusters) {
                for (x, y) in a.position.iter().chain(&a.feature).zip(b.position.iter().chain(&b.feature)) {
                    prop_assert!((x - y).abs() <= 1e-6 * y.abs().max(1.0));
                }
            }
        }

        #[test]
        fn unc_round_trip(t in 1usize..4, h in 1usize..7, w in 1usize..7, seed in any::<u32>()) {
            let dims = Dims::new(t, h, w).unwrap();
            let values: Vec<f32> = (0..dims.len()).map(|i| ((seed as usize + i * 7919) % 1000) as f32 / 7.0).collect();
            let u = UncertaintyVolume::new("u", dims, values).unwrap();
            prop_assert_eq!(UncertaintyVolume::<f32>::from_bytes("u", &u.to_bytes()).unwrap(), u);
        }
    }
}
