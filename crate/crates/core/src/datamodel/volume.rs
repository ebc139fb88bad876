use std::path::Path;

use super::color::srgb_to_lab;
use super::geometry::Dims;
use crate::error::{bail, Error, Result};
use crate::scalar::Scalar;

/// A `T x H x W` grid of CIELAB voxels.
#[derive(Debug, Clone, PartialEq)]
pub struct VideoVolume<T> {
    video_id: String,
    dims: Dims,
    /// `dims.len() * 3` values, `(L, a, b)` per voxel.
    voxels: Vec<T>,
}

impl<T: Scalar> VideoVolume<T> {
    pub fn from_lab(video_id: impl Into<String>, dims: Dims, voxels: Vec<T>) -> Result<Self> {
        let dims = Dims::new(dims.depth, dims.height, dims.width)?;
        if voxels.len() != dims.len() * 3 {
            bail!(Dimension, "expected {} lab values, got {}", dims.len() * 3, voxels.len());
        }
        Ok(VideoVolume { video_id: video_id.into(), dims, voxels })
    }

    /// Build from packed 8-bit sRGB triples in frame-major, row-major order.
    pub fn from_srgb(video_id: impl Into<String>, dims: Dims, rgb: &[u8]) -> Result<Self> {
        if rgb.len() != dims.len() * 3 {
            bail!(Dimension, "expected {} rgb bytes, got {}", dims.len() * 3, rgb.len());
        }
        let voxels = rgb
            .chunks_exact(3)
            .flat_map(|px| srgb_to_lab::<T>([px[0], px[1], px[2]]))
            .collect();
        Self::from_lab(video_id, dims, voxels)
    }

    pub fn video_id(&self) -> &str {
        &self.video_id
    }

    pub fn dims(&self) -> Dims {
        self.dims
    }

    pub fn voxels(&self) -> &[T] {
        &self.voxels
    }

    #[inline]
    pub fn lab(&self, t: usize, y: usize, x: usize) -> [T; 3] {
        let i = self.dims.index(t, y, x) * 3;
        [self.voxels[i], self.voxels[i + 1], self.voxels[i + 2]]
    }

    #[inline]
    pub fn lab_at(&self, idx: usize) -> [T; 3] {
        let i = idx * 3;
        [self.voxels[i], self.voxels[i + 1], self.voxels[i + 2]]
    }
}

fn frame_path(dir: &Path, t: usize) -> std::path::PathBuf {
    dir.join(format!("frame_{t:06}.png"))
}

/// Load `frame_000000.png ...` from `dir` as a CIELAB volume.
///
/// The frame count is the length of the contiguous run starting at index 0;
/// any other file matching the `frame_*.png` pattern outside that run is
/// reported as an irregular frame. The video id is the directory name.
pub fn load_video<T: Scalar>(dir: &Path) -> Result<VideoVolume<T>> {
    let entries = std::fs::read_dir(dir).map_err(|e| Error::io(dir, e))?;
    let mut indices = Vec::new();
    for entry in entries {
        let entry = entry.map_err(|e| Error::io(dir, e))?;
        let name = entry.file_name();
        let name = name.to_string_lossy();
        if let Some(stem) = name.strip_prefix("frame_").and_then(|s| s.strip_suffix(".png")) {
            match stem.parse::<usize>() {
                Ok(i) if stem.len() == 6 => indices.push(i),
                _ => bail!(Format, "irregular frame file name {name:?} in {}", dir.display()),
            }
        }
    }
    indices.sort_unstable();
    if indices.is_empty() {
        bail!(Format, "no frames in {} (first bad index 0)", dir.display());
    }
    for (expected, &got) in indices.iter().enumerate() {
        if expected != got {
            bail!(Format, "missing or irregular frame in {}: first bad index {expected}", dir.display());
        }
    }

    let depth = indices.len();
    let mut rgb = Vec::new();
    let mut frame_dims: Option<(u32, u32)> = None;
    for t in 0..depth {
        let path = frame_path(dir, t);
        let img = image::open(&path)
            .map_err(|e| Error::Format(format!("frame index {t} ({}): {e}", path.display())))?;
        let img = img.to_rgb8();
        let wh = img.dimensions();
        match frame_dims {
            None => frame_dims = Some(wh),
            Some(d) if d != wh => bail!(
                Dimension,
                "frame index {t} is {}x{}, expected {}x{}",
                wh.0,
                wh.1,
                d.0,
                d.1
            ),
            _ => {}
        }
        rgb.extend_from_slice(img.as_raw());
    }
    let (w, h) = frame_dims.expect("at least one frame");
    let dims = Dims::new(depth, h as usize, w as usize)?;
    let id = dir
        .file_name()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_default();
    VideoVolume::from_srgb(id, dims, &rgb)
}

/// Write packed sRGB frames as a `frame_%06d.png` sequence.
pub fn save_frames(dir: &Path, dims: Dims, rgb: &[u8]) -> Result<()> {
    if rgb.len() != dims.len() * 3 {
        bail!(Dimension, "expected {} rgb bytes, got {}", dims.len() * 3, rgb.len());
    }
    std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    let frame_bytes = dims.frame_len() * 3;
    for (t, chunk) in rgb.chunks_exact(frame_bytes).enumerate() {
        let path = frame_path(dir, t);
        image::save_buffer(&path, chunk, dims.width as u32, dims.height as u32, image::ExtendedColorType::Rgb8)
            .map_err(|e| Error::Format(format!("writing {}: {e}", path.display())))?;
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn solid(dims: Dims, rgb: [u8; 3]) -> Vec<u8> {
        rgb.iter().copied().cycle().take(dims.len() * 3).collect()
    }

    #[test]
    fn png_sequence_round_trip() {
        let tmp = tempfile::tempdir().unwrap();
        let dir = tmp.path().join("clip");
        let dims = Dims::new(3, 4, 5).unwrap();
        let mut rgb = solid(dims, [255, 0, 0]);
        rgb[0..3].copy_from_slice(&[255, 255, 255]);
        save_frames(&dir, dims, &rgb).unwrap();
        let v: VideoVolume<f64> = load_video(&dir).unwrap();
        assert_eq!(v.video_id(), "clip");
        assert_eq!(v.dims(), dims);
        assert!((v.lab(0, 0, 0)[0] - 100.0).abs() < 1e-9);
        assert!((v.lab(2, 3, 4)[0] - 53.2408).abs() < 1e-3);
    }

    #[test]
    fn gap_in_sequence_names_first_missing_index() {
        let tmp = tempfile::tempdir().unwrap();
        let dims = Dims::new(3, 2, 2).unwrap();
        save_frames(tmp.path(), dims, &solid(dims, [9, 9, 9])).unwrap();
        std::fs::remove_file(tmp.path().join("frame_000001.png")).unwrap();
        let err = load_video::<f32>(tmp.path()).unwrap_err();
        assert!(matches!(err, Error::Format(ref m) if m.contains("first bad index 1")), "{err}");
    }

    #[test]
    fn mismatched_frame_size_is_dimension_error() {
        let tmp = tempfile::tempdir().unwrap();
        let small = Dims::new(1, 2, 2).unwrap();
        save_frames(tmp.path(), small, &solid(small, [1, 2, 3])).unwrap();
        image::save_buffer(
            tmp.path().join("frame_000001.png"),
            &[0u8; 27],
            3,
            3,
            image::ExtendedColorType::Rgb8,
        )
        .unwrap();
        assert!(matches!(load_video::<f32>(tmp.path()), Err(Error::Dimension(_))));
    }

    #[test]
    fn empty_directory_is_format_error() {
        let tmp = tempfile::tempdir().unwrap();
        assert!(matches!(load_video::<f32>(tmp.path()), Err(Error::Format(_))));
    }
}
