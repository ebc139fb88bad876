use std::collections::BTreeSet;

use crate::datamodel::{Bitmap, BBox, Pixel, SuperpixelLabels};
use crate::error::{bail, Result};
use crate::scalar::Scalar;

/// Superpixels touched by a sparse annotation and the voxels they cover.
#[derive(Debug, Clone, PartialEq)]
pub struct Expansion {
    pub labels: BTreeSet<u32>,
    /// Membership of every voxel, in the label volume's index order.
    pub mask: Vec<bool>,
    height: usize,
    width: usize,
}

impl Expansion {
    pub fn frame_mask(&self, t: usize) -> Bitmap {
        let fl = self.height * self.width;
        Bitmap::from_bits(self.height, self.width, self.mask[t * fl..(t + 1) * fl].to_vec()).expect("frame slice size")
    }

    /// Frames on which the expansion covers at least one voxel.
    pub fn frames(&self) -> Vec<usize> {
        let fl = self.height * self.width;
        self.mask.chunks(fl).enumerate().filter(|(_, c)| c.iter().any(|&b| b)).map(|(t, _)| t).collect()
    }
}

/// Union of every superpixel containing at least one of `pixels`, given as
/// `(frame, pixel)` pairs. Serves scribbles and points alike.
pub fn expand_sparse<T: Scalar>(sp: &SuperpixelLabels<T>, pixels: &[(u32, Pixel)]) -> Result<Expansion> {
    if pixels.is_empty() {
        bail!(Validation, "sparse annotation has no pixels");
    }
    let d = sp.dims;
    let mut labels = BTreeSet::new();
    for &(t, p) in pixels {
        let (t, x, y) = (t as usize, p.x as usize, p.y as usize);
        if t >= d.depth || x >= d.width || y >= d.height {
            bail!(Validation, "pixel ({x}, {y}) on frame {t} outside {}x{}x{}", d.depth, d.height, d.width);
        }
        labels.insert(sp.label(t, y, x));
    }
    let mask = sp.labels.iter().map(|l| labels.contains(l)).collect();
    Ok(Expansion { labels, mask, height: d.height, width: d.width })
}

/// Tight box around a set of pixels on one frame.
pub fn scribble_to_box(pixels: &[Pixel]) -> Result<BBox> {
    let Some(first) = pixels.first() else {
        bail!(Validation, "scribble has no pixels");
    };
    let (mut x0, mut y0, mut x1, mut y1) = (first.x, first.y, first.x, first.y);
    for p in pixels {
        x0 = x0.min(p.x);
        y0 = y0.min(p.y);
        x1 = x1.max(p.x);
        y1 = y1.max(p.y);
    }
    BBox::new(x0.into(), y0.into(), x1.into(), y1.into())
}
