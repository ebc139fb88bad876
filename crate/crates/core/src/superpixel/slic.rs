use rayon::prelude::*;

use super::connectivity::enforce_connectivity;
use super::features::{extract_features, FeatureGrid};
use crate::datamodel::{Cluster, Dims, SuperpixelLabels, VideoVolume, FEATURE_DIM};
use crate::error::{bail, Result};
use crate::scalar::{distance, Scalar};

const WEISZFELD_ITERS: usize = 4;

/// Parameters of the 3-D SLIC clustering.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SlicConfig<T> {
    /// Grid interval `S` in pixels.
    pub interval: usize,
    /// Compactness `m`; larger values favour spatially compact superpixels.
    pub compactness: T,
    /// Temporal scale `rho`; one frame counts as `rho` pixels of distance.
    pub temporal_scale: T,
    pub max_iters: usize,
    /// Components smaller than this are merged into a neighbour.
    pub min_region: usize,
}

impl<T: Scalar> Default for SlicConfig<T> {
    fn default() -> Self {
        SlicConfig::new(16, T::lit(10.0))
    }
}

impl<T: Scalar> SlicConfig<T> {
    pub fn new(interval: usize, compactness: T) -> Self {
        SlicConfig {
            interval,
            compactness,
            temporal_scale: T::one(),
            max_iters: 10,
            min_region: (interval * interval / 4).max(1),
        }
    }

    pub fn validate(&self, dims: Dims) -> Result<()> {
        let s = self.interval;
        if s == 0 {
            bail!(Parameter, "superpixel interval must be positive");
        }
        if s > dims.height.min(dims.width) {
            bail!(Parameter, "superpixel interval {s} exceeds frame size {}x{}", dims.height, dims.width);
        }
        if !(self.compactness > T::zero() && self.compactness.is_finite()) {
            bail!(Parameter, "compactness must be positive and finite, got {}", self.compactness);
        }
        if !(self.temporal_scale > T::zero() && self.temporal_scale.is_finite()) {
            bail!(Parameter, "temporal scale must be positive and finite, got {}", self.temporal_scale);
        }
        if self.temporal_span() < 1.0 {
            bail!(Config, "temporal scale times interval must be at least one frame, search window would be empty");
        }
        if self.max_iters == 0 {
            bail!(Parameter, "max_iters must be positive");
        }
        if self.min_region == 0 {
            bail!(Parameter, "min_region must be positive");
        }
        Ok(())
    }

    /// Length of a temporal grid cell in frames.
    fn temporal_span(&self) -> f64 {
        self.temporal_scale.to_f64_lossy() * self.interval as f64
    }

    /// Half-width of the temporal search window in frames.
    pub fn temporal_radius(&self) -> usize {
        self.temporal_span().ceil() as usize
    }

    fn spatial_weight(&self) -> T {
        self.compactness / T::from_usize_lossy(self.interval)
    }

    /// Whether voxel `(t, y, x)` lies in the search window of `cluster`.
    pub fn window_contains(&self, cluster: &Cluster<T>, t: usize, y: usize, x: usize) -> bool {
        let s = T::from_usize_lossy(self.interval);
        let r = T::from_usize_lossy(self.temporal_radius());
        let [cx, cy, cz] = cluster.position;
        (T::from_usize_lossy(x) - cx).abs() <= s
            && (T::from_usize_lossy(y) - cy).abs() <= s
            && (T::from_usize_lossy(t) - cz).abs() <= r
    }
}

/// Energies and intermediate state of one clustering run.
#[derive(Debug, Clone)]
pub struct SlicTrace<T> {
    /// Energy after every assignment and every centroid update, in order.
    pub energies: Vec<T>,
    /// Number of voxels that changed label in each assignment step.
    pub changed: Vec<usize>,
    pub iterations: usize,
    /// Labels and centroids of the last iteration, before connectivity
    /// enforcement.
    pub raw_labels: Vec<u32>,
    pub raw_clusters: Vec<Cluster<T>>,
}

/// Per-voxel term of the clustering energy.
#[inline]
fn voxel_cost<T: Scalar>(color: &[T; FEATURE_DIM], pos: [T; 3], c: &Cluster<T>, w: T, rho: T) -> T {
    let dx = pos[0] - c.position[0];
    let dy = pos[1] - c.position[1];
    let dz = rho * (pos[2] - c.position[2]);
    distance(color, &c.feature) + w * (dx * dx + dy * dy + dz * dz).sqrt()
}

fn total_energy<T: Scalar>(grid: &FeatureGrid<T>, labels: &[u32], clusters: &[Cluster<T>], cfg: &SlicConfig<T>) -> T {
    let (w, rho) = (cfg.spatial_weight(), cfg.temporal_scale);
    let frame_len = grid.dims().frame_len();
    let per_frame: Vec<f64> = labels
        .par_chunks(frame_len)
        .enumerate()
        .map(|(t, chunk)| {
            chunk
                .iter()
                .enumerate()
                .map(|(i, &l)| {
                    let idx = t * frame_len + i;
                    voxel_cost(grid.color(idx), grid.position(idx), &clusters[l as usize], w, rho).to_f64_lossy()
                })
                .sum()
        })
        .collect();
    T::lit(per_frame.iter().sum())
}

/// Energy of a segmentation under `cfg`: summed color distance plus
/// `m / S` times the temporally scaled spatial distance of every voxel to its
/// centroid.
pub fn energy<T: Scalar>(v: &VideoVolume<T>, sp: &SuperpixelLabels<T>, cfg: &SlicConfig<T>) -> Result<T> {
    if sp.dims != v.dims() {
        bail!(Dimension, "labels are {:?}, video is {:?}", sp.dims, v.dims());
    }
    if sp.labels.len() != sp.dims.len() {
        bail!(Dimension, "label volume has {} voxels, dims say {}", sp.labels.len(), sp.dims.len());
    }
    if let Some(&bad) = sp.labels.iter().find(|&&l| l as usize >= sp.clusters.len()) {
        bail!(Invariant, "label {bad} outside [0, {})", sp.clusters.len());
    }
    Ok(total_energy(&extract_features(v), &sp.labels, &sp.clusters, cfg))
}

pub fn segment<T: Scalar>(v: &VideoVolume<T>, cfg: &SlicConfig<T>) -> Result<SuperpixelLabels<T>> {
    run(v, cfg, false).map(|(sp, _)| sp)
}

/// Like [`segment`], also recording the energy after every step.
pub fn segment_traced<T: Scalar>(v: &VideoVolume<T>, cfg: &SlicConfig<T>) -> Result<(SuperpixelLabels<T>, SlicTrace<T>)> {
    run(v, cfg, true)
}

fn run<T: Scalar>(v: &VideoVolume<T>, cfg: &SlicConfig<T>, traced: bool) -> Result<(SuperpixelLabels<T>, SlicTrace<T>)> {
    let dims = v.dims();
    cfg.validate(dims)?;
    let grid = extract_features(v);
    let n = dims.len();

    let mut clusters = seeds(v, &grid, cfg);
    let mut labels = vec![u32::MAX; n];
    let mut trace = SlicTrace {
        energies: Vec::new(),
        changed: Vec::new(),
        iterations: 0,
        raw_labels: Vec::new(),
        raw_clusters: Vec::new(),
    };
    for _ in 0..cfg.max_iters {
        let changed = assign(&grid, &clusters, cfg, &mut labels);
        if traced {
            trace.energies.push(total_energy(&grid, &labels, &clusters, cfg));
        }
        clusters = update(&grid, &labels, &clusters, cfg);
        if traced {
            trace.energies.push(total_energy(&grid, &labels, &clusters, cfg));
        }
        trace.changed.push(changed);
        trace.iterations += 1;
        log::debug!("slic iteration {}: {changed} voxels changed", trace.iterations);
        if changed * 1000 < n {
            break;
        }
    }

    let final_labels = enforce_connectivity(&grid, &labels, cfg.min_region);
    let final_clusters = member_means(&grid, &final_labels);
    if traced {
        trace.raw_labels = labels;
        trace.raw_clusters = clusters;
    }
    let sp = SuperpixelLabels { video_id: v.video_id().to_string(), dims, labels: final_labels, clusters: final_clusters };
    sp.validate()?;
    Ok((sp, trace))
}

/// Half-open grid cells `[start, end)` covering `len` with cell length `span`.
fn cells(len: usize, span: f64) -> Vec<(usize, usize)> {
    let count = (len as f64 / span).ceil() as usize;
    (0..count)
        .map(|k| {
            let start = (k as f64 * span).floor() as usize;
            let end = if k + 1 == count { len } else { (((k + 1) as f64 * span).floor() as usize).min(len) };
            (start, end)
        })
        .collect()
}

fn gradient<T: Scalar>(v: &VideoVolume<T>, t: usize, y: usize, x: usize) -> T {
    let d = v.dims();
    let sq = |a: [T; 3], b: [T; 3]| (0..3).map(|i| (a[i] - b[i]) * (a[i] - b[i])).sum::<T>();
    let gx = sq(v.lab(t, y, (x + 1).min(d.width - 1)), v.lab(t, y, x.saturating_sub(1)));
    let gy = sq(v.lab(t, (y + 1).min(d.height - 1), x), v.lab(t, y.saturating_sub(1), x));
    gx + gy
}

/// One seed per grid cell, moved to the lowest-gradient pixel of its 3x3
/// neighbourhood in the seed frame. Order is z, then y, then x.
fn seeds<T: Scalar>(v: &VideoVolume<T>, grid: &FeatureGrid<T>, cfg: &SlicConfig<T>) -> Vec<Cluster<T>> {
    let d = v.dims();
    let s = cfg.interval as f64;
    let mut out = Vec::new();
    for (z0, z1) in cells(d.depth, cfg.temporal_span()) {
        let z = (z0 + z1 - 1) / 2;
        for (y0, y1) in cells(d.height, s) {
            for (x0, x1) in cells(d.width, s) {
                let (cy, cx) = ((y0 + y1 - 1) / 2, (x0 + x1 - 1) / 2);
                let (mut by, mut bx) = (cy, cx);
                let mut best = gradient(v, z, cy, cx);
                for ny in cy.saturating_sub(1)..=(cy + 1).min(d.height - 1) {
                    for nx in cx.saturating_sub(1)..=(cx + 1).min(d.width - 1) {
                        let g = gradient(v, z, ny, nx);
                        if g < best {
                            best = g;
                            (by, bx) = (ny, nx);
                        }
                    }
                }
                out.push(Cluster {
                    position: [T::from_usize_lossy(bx), T::from_usize_lossy(by), T::from_usize_lossy(z)],
                    feature: *grid.color(d.index(z, by, bx)),
                });
            }
        }
    }
    out
}

/// Inclusive integer range `[ceil(c - r), floor(c + r)]` clipped to `[0, len)`.
fn window<T: Scalar>(c: T, r: T, len: usize) -> Option<(usize, usize)> {
    let lo = (c - r).ceil().max(T::zero());
    let hi = (c + r).floor().min(T::from_usize_lossy(len - 1));
    if lo > hi {
        return None;
    }
    Some((lo.to_usize()?, hi.to_usize()?))
}

/// Assign every voxel to the cheapest cluster whose window contains it.
/// Clusters are scanned in index order and only a strictly cheaper cost
/// replaces the incumbent. Returns the number of voxels whose label changed.
fn assign<T: Scalar>(grid: &FeatureGrid<T>, clusters: &[Cluster<T>], cfg: &SlicConfig<T>, labels: &mut [u32]) -> usize {
    let d = grid.dims();
    let (w, rho) = (cfg.spatial_weight(), cfg.temporal_scale);
    let s = T::from_usize_lossy(cfg.interval);
    let r = T::from_usize_lossy(cfg.temporal_radius());

    let mut per_frame: Vec<Vec<u32>> = vec![Vec::new(); d.depth];
    for (k, c) in clusters.iter().enumerate() {
        if let Some((t0, t1)) = window(c.position[2], r, d.depth) {
            for list in &mut per_frame[t0..=t1] {
                list.push(k as u32);
            }
        }
    }

    let frame_len = d.frame_len();
    labels
        .par_chunks_mut(frame_len)
        .enumerate()
        .map(|(t, out)| {
            let mut best = vec![T::infinity(); frame_len];
            let mut next = vec![u32::MAX; frame_len];
            let tz = T::from_usize_lossy(t);
            for &k in &per_frame[t] {
                let c = &clusters[k as usize];
                let (Some((y0, y1)), Some((x0, x1))) =
                    (window(c.position[1], s, d.height), window(c.position[0], s, d.width))
                else {
                    continue;
                };
                for y in y0..=y1 {
                    for x in x0..=x1 {
                        let i = y * d.width + x;
                        let pos = [T::from_usize_lossy(x), T::from_usize_lossy(y), tz];
                        let cost = voxel_cost(grid.color(t * frame_len + i), pos, c, w, rho);
                        if cost < best[i] {
                            best[i] = cost;
                            next[i] = k;
                        }
                    }
                }
            }
            let mut changed = 0;
            for (o, n) in out.iter_mut().zip(next) {
                debug_assert!(n != u32::MAX, "voxel outside every search window");
                if *o != n {
                    changed += 1;
                    *o = n;
                }
            }
            changed
        })
        .sum()
}

/// Weiszfeld iterations towards the geometric median of `points`.
fn weiszfeld<const D: usize>(points: &[[f64; D]], start: [f64; D], iters: usize) -> [f64; D] {
    let mut y = start;
    for _ in 0..iters {
        let mut num = [0.0; D];
        let mut den = 0.0;
        for p in points {
            let dist = p.iter().zip(&y).map(|(a, b)| (a - b) * (a - b)).sum::<f64>().sqrt().max(1e-12);
            let wt = 1.0 / dist;
            for (n, v) in num.iter_mut().zip(p) {
                *n += wt * v;
            }
            den += wt;
        }
        for (yi, n) in y.iter_mut().zip(num) {
            *yi = n / den;
        }
    }
    y
}

fn mean<const D: usize>(points: &[[f64; D]]) -> [f64; D] {
    let mut m = [0.0; D];
    for p in points {
        for (a, v) in m.iter_mut().zip(p) {
            *a += v;
        }
    }
    m.map(|v| v / points.len() as f64)
}

/// Move every non-empty cluster to the lowest-energy of three candidates:
/// its previous centroid, the member mean, and a geometric-median refinement
/// of the mean. Candidate positions are clamped so that all members stay
/// inside the new search window, so the next assignment can never do worse
/// than keeping every label, and the energy never increases.
fn update<T: Scalar>(grid: &FeatureGrid<T>, labels: &[u32], clusters: &[Cluster<T>], cfg: &SlicConfig<T>) -> Vec<Cluster<T>> {
    let mut members: Vec<Vec<usize>> = vec![Vec::new(); clusters.len()];
    for (i, &l) in labels.iter().enumerate() {
        members[l as usize].push(i);
    }
    let (w, rho) = (cfg.spatial_weight(), cfg.temporal_scale);
    let rho64 = rho.to_f64_lossy();
    let s = cfg.interval as f64;
    let r = cfg.temporal_radius() as f64;

    clusters
        .par_iter()
        .zip(members.par_iter())
        .map(|(old, idx)| {
            if idx.is_empty() {
                return *old;
            }
            let colors: Vec<[f64; FEATURE_DIM]> =
                idx.iter().map(|&i| grid.color(i).map(|v| v.to_f64_lossy())).collect();
            let positions: Vec<[f64; 3]> = idx
                .iter()
                .map(|&i| {
                    let p = grid.position(i);
                    [p[0].to_f64_lossy(), p[1].to_f64_lossy(), rho64 * p[2].to_f64_lossy()]
                })
                .collect();

            let mut lo = [f64::INFINITY; 3];
            let mut hi = [f64::NEG_INFINITY; 3];
            for &i in idx {
                let p = grid.position(i);
                for a in 0..3 {
                    lo[a] = lo[a].min(p[a].to_f64_lossy());
                    hi[a] = hi[a].max(p[a].to_f64_lossy());
                }
            }
            let reach = [s, s, r];
            let clamp_pos = |scaled: [f64; 3]| -> [T; 3] {
                let raw = [scaled[0], scaled[1], scaled[2] / rho64];
                let mut out = [T::zero(); 3];
                for a in 0..3 {
                    out[a] = T::lit(raw[a].clamp(hi[a] - reach[a], lo[a] + reach[a]));
                }
                out
            };

            let color_mean = mean(&colors);
            let pos_mean = mean(&positions);
            let to_t = |c: [f64; FEATURE_DIM]| c.map(T::lit);
            let feature_candidates =
                [old.feature, to_t(color_mean), to_t(weiszfeld(&colors, color_mean, WEISZFELD_ITERS))];
            let position_candidates =
                [old.position, clamp_pos(pos_mean), clamp_pos(weiszfeld(&positions, pos_mean, WEISZFELD_ITERS))];

            let mut best = *old;
            let mut best_cost = f64::INFINITY;
            for feature in feature_candidates {
                for position in position_candidates {
                    let cand = Cluster { position, feature };
                    let cost: f64 = idx
                        .iter()
                        .map(|&i| voxel_cost(grid.color(i), grid.position(i), &cand, w, rho).to_f64_lossy())
                        .sum();
                    if cost < best_cost {
                        best_cost = cost;
                        best = cand;
                    }
                }
            }
            best
        })
        .collect()
}

/// Mean position and feature of every label's members.
fn member_means<T: Scalar>(grid: &FeatureGrid<T>, labels: &[u32]) -> Vec<Cluster<T>> {
    let k = labels.iter().map(|&l| l as usize + 1).max().unwrap_or(0);
    let mut sums = vec![([0.0f64; 3], [0.0f64; FEATURE_DIM], 0usize); k];
    for (i, &l) in labels.iter().enumerate() {
        let e = &mut sums[l as usize];
        for (a, v) in e.0.iter_mut().zip(grid.position(i)) {
            *a += v.to_f64_lossy();
        }
        for (a, v) in e.1.iter_mut().zip(grid.color(i)) {
            *a += v.to_f64_lossy();
        }
        e.2 += 1;
    }
    sums.into_iter()
        .map(|(p, f, n)| {
            let n = n.max(1) as f64;
            Cluster { position: p.map(|v| T::lit(v / n)), feature: f.map(|v| T::lit(v / n)) }
        })
        .collect()
}
