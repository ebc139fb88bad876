use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::datamodel::color::srgb_to_lab;
use crate::datamodel::{BBox, Bitmap, Dims, SuperpixelLabels, VideoVolume};
use crate::error::{bail, Result};
use crate::scalar::Scalar;

/// Motion-direction classes of the synthetic actor.
pub const CLASSES: [&str; 4] = ["right", "left", "down", "up"];

/// Minimum CIELAB distance between actor and background base colors. Pixel
/// texture moves individual voxels by a few units, so this keeps the
/// per-voxel contrast above 30.
const MIN_BASE_CONTRAST: f64 = 45.0;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SceneParams {
    pub depth: usize,
    pub height: usize,
    pub width: usize,
    /// Actor side lengths are drawn from `min_size..=max_size`.
    pub min_size: usize,
    pub max_size: usize,
    /// Upper bound on the actor's speed along its direction, in pixels per
    /// frame. Zero gives a static actor.
    pub max_speed: f64,
    /// Largest change of each side length between the first and last
    /// frame.
    pub max_drift: usize,
    /// Amplitude of the per-pixel sRGB texture.
    pub texture: u8,
}

impl Default for SceneParams {
    fn default() -> Self {
        SceneParams { depth: 16, height: 32, width: 32, min_size: 7, max_size: 12, max_speed: 1.0, max_drift: 3, texture: 6 }
    }
}

impl SceneParams {
    pub fn validate(&self) -> Result<()> {
        if self.depth < 4 {
            bail!(Parameter, "scenes need at least 4 frames, got {}", self.depth);
        }
        if self.min_size < 2 || self.min_size > self.max_size {
            bail!(Parameter, "actor size range {}..={} is empty or below 2", self.min_size, self.max_size);
        }
        if self.max_size >= self.height.min(self.width) {
            bail!(Parameter, "actor size {} does not fit a {}x{} frame", self.max_size, self.height, self.width);
        }
        if !(self.max_speed >= 0.0) || !self.max_speed.is_finite() {
            bail!(Parameter, "max speed must be finite and non-negative");
        }
        if self.texture > 20 {
            bail!(Parameter, "texture amplitude {} above 20 would swamp the actor contrast", self.texture);
        }
        Ok(())
    }
}

/// A video with one rectangular actor moving linearly over a textured
/// background, with exact ground truth.
#[derive(Debug, Clone, PartialEq)]
pub struct SyntheticScene {
    pub video_id: String,
    pub seed: u64,
    pub class: u32,
    pub dims: Dims,
    /// Interleaved 8-bit sRGB, frame-major.
    pub rgb: Vec<u8>,
    /// Actor box on every frame.
    pub boxes: Vec<BBox>,
}

impl SyntheticScene {
    pub fn volume<T: Scalar>(&self) -> VideoVolume<T> {
        VideoVolume::from_srgb(self.video_id.clone(), self.dims, &self.rgb).expect("scene buffer matches its dims")
    }

    pub fn gt_mask(&self, t: usize) -> Bitmap {
        Bitmap::from_box(self.dims.height, self.dims.width, &self.boxes[t])
    }

    /// Ground truth as a flat `T x H x W` occupancy volume.
    pub fn gt_volume(&self) -> Vec<bool> {
        (0..self.dims.depth).flat_map(|t| self.gt_mask(t).bits().to_vec()).collect()
    }

    /// IoU between the actor and the union of superpixels lying mostly
    /// inside it.
    pub fn cover_iou<T: Scalar>(&self, sp: &SuperpixelLabels<T>) -> f64 {
        let gt = self.gt_volume();
        let mut inside = vec![0usize; sp.k()];
        let mut size = vec![0usize; sp.k()];
        for (&l, &g) in sp.labels.iter().zip(&gt) {
            size[l as usize] += 1;
            inside[l as usize] += g as usize;
        }
        let (mut inter, mut union) = (0usize, 0usize);
        for (&l, &g) in sp.labels.iter().zip(&gt) {
            let covered = 2 * inside[l as usize] > size[l as usize];
            inter += (covered && g) as usize;
            union += (covered || g) as usize;
        }
        if union == 0 {
            1.0
        } else {
            inter as f64 / union as f64
        }
    }
}

fn lab_distance(a: [u8; 3], b: [u8; 3]) -> f64 {
    let la: [f64; 3] = srgb_to_lab(a);
    let lb: [f64; 3] = srgb_to_lab(b);
    la.iter().zip(&lb).map(|(x, y)| (x - y).powi(2)).sum::<f64>().sqrt()
}

fn random_color(rng: &mut ChaCha8Rng, margin: u8) -> [u8; 3] {
    [0; 3].map(|_| rng.random_range(margin..=255 - margin))
}

fn jitter(c: u8, d: i32) -> u8 {
    (c as i32 + d).clamp(0, 255) as u8
}

/// Left edge (or top edge) start and per-frame velocity along one axis such
/// that a span of `size` stays inside `[0, extent)` on every frame.
fn axis_motion(rng: &mut ChaCha8Rng, extent: usize, size: usize, frames: usize, speed: f64) -> (f64, f64) {
    let room = (extent - size) as f64;
    let span = frames as f64 - 1.0;
    let v = speed.clamp(-room / span, room / span);
    let travel = v * span;
    let lo = (-travel).max(0.0);
    let hi = (room - travel).min(room);
    let start = if hi > lo { rng.random_range(lo..=hi) } else { lo };
    (start, v)
}

/// Deterministic synthetic scene for `seed`.
pub fn generate_scene(seed: u64, params: &SceneParams) -> Result<SyntheticScene> {
    params.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let dims = Dims::new(params.depth, params.height, params.width)?;
    let (t_len, h, w) = (params.depth, params.height, params.width);

    let class = rng.random_range(0..CLASSES.len() as u32);
    let along = params.max_speed * rng.random_range(0.5..=1.0);
    let across = params.max_speed * rng.random_range(-0.25..=0.25);
    let (vx, vy) = match class {
        0 => (along, across),
        1 => (-along, across),
        2 => (across, along),
        _ => (across, -along),
    };

    let mut side = || {
        let a = rng.random_range(params.min_size..=params.max_size);
        let lo = a.saturating_sub(params.max_drift).max(params.min_size);
        let hi = (a + params.max_drift).min(params.max_size);
        (a as f64, rng.random_range(lo..=hi) as f64)
    };
    let ((w0, w1), (h0, h1)) = (side(), side());
    let (x0, vx) = axis_motion(&mut rng, w, w0.max(w1) as usize, t_len, vx);
    let (y0, vy) = axis_motion(&mut rng, h, h0.max(h1) as usize, t_len, vy);

    let boxes: Vec<BBox> = (0..t_len)
        .map(|t| {
            let s = t as f64 / (t_len - 1) as f64;
            let bw = (w0 + (w1 - w0) * s).round() as i64;
            let bh = (h0 + (h1 - h0) * s).round() as i64;
            let x = (x0 + vx * t as f64).round() as i64;
            let y = (y0 + vy * t as f64).round() as i64;
            BBox::new(x, y, x + bw - 1, y + bh - 1)
        })
        .collect::<Result<_>>()?;
    debug_assert!(boxes.iter().all(|b| b.within(h, w)));

    let background = random_color(&mut rng, 40);
    let actor = loop {
        let c = random_color(&mut rng, 20);
        if lab_distance(c, background) >= MIN_BASE_CONTRAST {
            break c;
        }
    };

    let tex = params.texture as i32;
    let pattern: Vec<[i32; 3]> = (0..h * w).map(|_| [0; 3].map(|_| rng.random_range(-tex..=tex))).collect();
    let mut rgb = Vec::with_capacity(dims.len() * 3);
    for b in &boxes {
        for y in 0..h {
            for x in 0..w {
                let inside = (b.x_min..=b.x_max).contains(&(x as i64)) && (b.y_min..=b.y_max).contains(&(y as i64));
                if inside {
                    let d = tex / 2;
                    rgb.extend(actor.map(|c| jitter(c, rng.random_range(-d..=d))));
                } else {
                    let p = pattern[y * w + x];
                    rgb.extend([jitter(background[0], p[0]), jitter(background[1], p[1]), jitter(background[2], p[2])]);
                }
            }
        }
    }

    Ok(SyntheticScene { video_id: format!("scene{seed}"), seed, class, dims, rgb, boxes })
}

/// `n` scenes drawn from one campaign seed, with ids `v000`, `v001`, ...
/// in index order.
pub fn generate_scenes(n: usize, seed: u64, params: &SceneParams) -> Result<Vec<SyntheticScene>> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let seeds: Vec<u64> = (0..n).map(|_| rng.random()).collect();
    seeds
        .into_iter()
        .enumerate()
        .map(|(i, s)| {
            let mut scene = generate_scene(s, params)?;
            scene.video_id = format!("v{i:03}");
            Ok(scene)
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn boxes_stay_inside_and_static_actor_is_still() {
        for seed in 0..50 {
            let s = generate_scene(seed, &SceneParams::default()).unwrap();
            assert!(s.boxes.iter().all(|b| b.within(32, 32)));
        }
        let still = SceneParams { max_speed: 0.0, max_drift: 0, ..Default::default() };
        let s = generate_scene(3, &still).unwrap();
        assert!(s.boxes.windows(2).all(|w| w[0] == w[1]));
    }

    #[test]
    fn rejects_oversized_actor() {
        let p = SceneParams { max_size: 32, ..Default::default() };
        assert!(matches!(generate_scene(0, &p), Err(crate::Error::Parameter(_))));
        let p = SceneParams { depth: 3, ..Default::default() };
        assert!(generate_scene(0, &p).is_err());
    }
}
