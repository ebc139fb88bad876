use serde::{Deserialize, Serialize};

use crate::error::{bail, Result};

/// Extent of a video volume: frame count, frame height and frame width.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Dims {
    pub depth: usize,
    pub height: usize,
    pub width: usize,
}

impl Dims {
    pub fn new(depth: usize, height: usize, width: usize) -> Result<Self> {
        if depth == 0 || height == 0 || width == 0 {
            bail!(Dimension, "volume dimensions must be positive, got {depth}x{height}x{width}");
        }
        Ok(Dims { depth, height, width })
    }

    #[inline]
    pub fn frame_len(&self) -> usize {
        self.height * self.width
    }

    #[inline]
    pub fn len(&self) -> usize {
        self.depth * self.height * self.width
    }

    #[inline]
    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Flat voxel index in frame-major, then row-major order.
    #[inline]
    pub fn index(&self, t: usize, y: usize, x: usize) -> usize {
        (t * self.height + y) * self.width + x
    }

    /// Inverse of [`Dims::index`]: `(t, y, x)`.
    #[inline]
    pub fn coords(&self, idx: usize) -> (usize, usize, usize) {
        let x = idx % self.width;
        let rest = idx / self.width;
        (rest / self.height, rest % self.height, x)
    }

    pub fn contains_pixel(&self, x: i64, y: i64) -> bool {
        x >= 0 && y >= 0 && (x as usize) < self.width && (y as usize) < self.height
    }
}

/// Integer pixel position `(x, y)` inside a frame.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct Pixel {
    pub x: u32,
    pub y: u32,
}

impl Pixel {
    pub const fn new(x: u32, y: u32) -> Self {
        Pixel { x, y }
    }
}

/// Axis-aligned box with inclusive integer corners.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct BBox {
    pub x_min: i64,
    pub y_min: i64,
    pub x_max: i64,
    pub y_max: i64,
}

impl BBox {
    pub fn new(x_min: i64, y_min: i64, x_max: i64, y_max: i64) -> Result<Self> {
        if x_min > x_max || y_min > y_max {
            bail!(Validation, "degenerate box [{x_min},{y_min},{x_max},{y_max}]");
        }
        Ok(BBox { x_min, y_min, x_max, y_max })
    }

    pub fn as_array(&self) -> [i64; 4] {
        [self.x_min, self.y_min, self.x_max, self.y_max]
    }

    pub fn area(&self) -> i64 {
        (self.x_max - self.x_min + 1) * (self.y_max - self.y_min + 1)
    }

    pub fn within(&self, height: usize, width: usize) -> bool {
        self.x_min >= 0 && self.y_min >= 0 && (self.x_max as usize) < width && (self.y_max as usize) < height
    }

    /// Intersection over union of two inclusive boxes.
    pub fn iou(&self, other: &BBox) -> f64 {
        let ix = (self.x_max.min(other.x_max) - self.x_min.max(other.x_min) + 1).max(0);
        let iy = (self.y_max.min(other.y_max) - self.y_min.max(other.y_min) + 1).max(0);
        let inter = ix * iy;
        let union = self.area() + other.area() - inter;
        if union <= 0 {
            0.0
        } else {
            inter as f64 / union as f64
        }
    }
}

/// Binary `height x width` bitmap stored row-major.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Bitmap {
    height: usize,
    width: usize,
    bits: Vec<bool>,
}

impl Bitmap {
    pub fn empty(height: usize, width: usize) -> Self {
        Bitmap { height, width, bits: vec![false; height * width] }
    }

    pub fn from_bits(height: usize, width: usize, bits: Vec<bool>) -> Result<Self> {
        if bits.len() != height * width {
            bail!(Dimension, "bitmap of {}x{} needs {} bits, got {}", height, width, height * width, bits.len());
        }
        Ok(Bitmap { height, width, bits })
    }

    /// Filled rasterization of an inclusive box, clipped to the frame.
    pub fn from_box(height: usize, width: usize, b: &BBox) -> Self {
        let mut m = Bitmap::empty(height, width);
        let x0 = b.x_min.max(0);
        let y0 = b.y_min.max(0);
        let x1 = b.x_max.min(width as i64 - 1);
        let y1 = b.y_max.min(height as i64 - 1);
        for y in y0..=y1 {
            for x in x0..=x1 {
                m.set(x as usize, y as usize, true);
            }
        }
        m
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn bits(&self) -> &[bool] {
        &self.bits
    }

    #[inline]
    pub fn get(&self, x: usize, y: usize) -> bool {
        self.bits[y * self.width + x]
    }

    #[inline]
    pub fn set(&mut self, x: usize, y: usize, v: bool) {
        self.bits[y * self.width + x] = v;
    }

    pub fn count(&self) -> usize {
        self.bits.iter().filter(|&&b| b).count()
    }

    pub fn is_blank(&self) -> bool {
        !self.bits.iter().any(|&b| b)
    }

    /// Tight inclusive bounding box of the set pixels, if any.
    pub fn bounding_box(&self) -> Option<BBox> {
        let mut out: Option<BBox> = None;
        for y in 0..self.height {
            for x in 0..self.width {
                if self.get(x, y) {
                    let (x, y) = (x as i64, y as i64);
                    out = Some(match out {
                        None => BBox { x_min: x, y_min: y, x_max: x, y_max: y },
                        Some(b) => BBox {
                            x_min: b.x_min.min(x),
                            y_min: b.y_min.min(y),
                            x_max: b.x_max.max(x),
                            y_max: b.y_max.max(y),
                        },
                    });
                }
            }
        }
        out
    }

    /// Intersection over union; two blank maps count as a perfect match.
    pub fn iou(&self, other: &Bitmap) -> f64 {
        debug_assert_eq!(self.bits.len(), other.bits.len());
        let mut inter = 0usize;
        let mut union = 0usize;
        for (&a, &b) in self.bits.iter().zip(&other.bits) {
            inter += (a && b) as usize;
            union += (a || b) as usize;
        }
        if union == 0 {
            1.0
        } else {
            inter as f64 / union as f64
        }
    }
}
