use crate::datamodel::{Bitmap, Pixel};
use crate::error::{bail, Result};

// 8-neighbours clockwise from north, as P2..P9 in the usual thinning
// notation.
const RING: [(i64, i64); 8] = [(0, -1), (1, -1), (1, 0), (1, 1), (0, 1), (-1, 1), (-1, 0), (-1, -1)];

fn at(m: &Bitmap, x: i64, y: i64) -> bool {
    x >= 0 && y >= 0 && (x as usize) < m.width() && (y as usize) < m.height() && m.get(x as usize, y as usize)
}

fn ring(m: &Bitmap, x: usize, y: usize) -> [bool; 8] {
    RING.map(|(dx, dy)| at(m, x as i64 + dx, y as i64 + dy))
}

/// Zhang-Suen thinning to a one-pixel-wide, 8-connected skeleton.
pub fn thin(mask: &Bitmap) -> Bitmap {
    let mut m = mask.clone();
    loop {
        let mut changed = false;
        for pass in 0..2 {
            let mut remove = Vec::new();
            for y in 0..m.height() {
                for x in 0..m.width() {
                    if !m.get(x, y) {
                        continue;
                    }
                    let p = ring(&m, x, y);
                    let b = p.iter().filter(|v| **v).count();
                    let a = (0..8).filter(|&i| !p[i] && p[(i + 1) % 8]).count();
                    let (c, d) = if pass == 0 {
                        (p[0] && p[2] && p[4], p[2] && p[4] && p[6])
                    } else {
                        (p[0] && p[2] && p[6], p[0] && p[4] && p[6])
                    };
                    if (2..=6).contains(&b) && a == 1 && !c && !d {
                        remove.push((x, y));
                    }
                }
            }
            changed |= !remove.is_empty();
            for (x, y) in remove {
                m.set(x, y, false);
            }
        }
        if !changed {
            return m;
        }
    }
}

fn neighbours(m: &Bitmap, x: usize, y: usize) -> Vec<(usize, usize)> {
    RING.iter()
        .filter(|(dx, dy)| at(m, x as i64 + dx, y as i64 + dy))
        .map(|(dx, dy)| ((x as i64 + dx) as usize, (y as i64 + dy) as usize))
        .collect()
}

/// A skeleton pixel where three or more branches meet: walking around its
/// ring passes from background to foreground at least three times.
fn is_junction(m: &Bitmap, x: usize, y: usize) -> bool {
    let p = ring(m, x, y);
    (0..8).filter(|&i| !p[i] && p[(i + 1) % 8]).count() >= 3
}

/// Remove branches of at most `max_len` pixels that run from an endpoint
/// into a junction. Branches between two junctions, and skeletons without
/// junctions, are left alone.
pub fn prune_spurs(skel: &Bitmap, max_len: usize) -> Bitmap {
    let mut m = skel.clone();
    loop {
        let mut removed = false;
        let endpoints: Vec<(usize, usize)> = (0..m.height())
            .flat_map(|y| (0..m.width()).map(move |x| (x, y)))
            .filter(|&(x, y)| m.get(x, y) && neighbours(&m, x, y).len() == 1)
            .collect();
        for (ex, ey) in endpoints {
            if !m.get(ex, ey) || neighbours(&m, ex, ey).len() != 1 {
                continue;
            }
            let mut path = vec![(ex, ey)];
            let hit_junction = loop {
                let (cx, cy) = path[path.len() - 1];
                let next: Vec<_> = neighbours(&m, cx, cy).into_iter().filter(|p| !path.contains(p)).collect();
                if next.iter().any(|&(x, y)| is_junction(&m, x, y)) {
                    break true;
                }
                if next.is_empty() || path.len() >= max_len {
                    break false;
                }
                // On a staircase both the diagonal and the orthogonal step
                // touch; take the orthogonal one so the other is not skipped.
                let step = next.iter().copied().find(|&(x, y)| x == cx || y == cy).unwrap_or(next[0]);
                path.push(step);
            };
            if hit_junction {
                for (x, y) in path {
                    m.set(x, y, false);
                }
                removed = true;
            }
        }
        if !removed {
            return m;
        }
    }
}

/// A human-like scribble for a mask: its pruned medial axis, listed as a
/// walk from one end. Masks too thin to thin keep their central pixel.
pub fn scribble_from_mask(mask: &Bitmap) -> Result<Vec<Pixel>> {
    let Some(bb) = mask.bounding_box() else {
        bail!(Validation, "cannot draw a scribble on an empty mask");
    };
    let short_side = (bb.x_max - bb.x_min + 1).min(bb.y_max - bb.y_min + 1) as usize;
    let skel = prune_spurs(&thin(mask), short_side / 2 + 1);

    let mut pixels: Vec<(usize, usize)> =
        (0..skel.height()).flat_map(|y| (0..skel.width()).map(move |x| (x, y))).filter(|&(x, y)| skel.get(x, y)).collect();
    if pixels.is_empty() {
        let (cx, cy) = (((bb.x_min + bb.x_max) / 2) as usize, ((bb.y_min + bb.y_max) / 2) as usize);
        let c = if mask.get(cx, cy) {
            (cx, cy)
        } else {
            (0..mask.height())
                .flat_map(|y| (0..mask.width()).map(move |x| (x, y)))
                .find(|&(x, y)| mask.get(x, y))
                .expect("mask is not blank")
        };
        return Ok(vec![Pixel::new(c.0 as u32, c.1 as u32)]);
    }

    // Walk depth-first from an endpoint so consecutive pixels touch.
    let start = pixels.iter().copied().find(|&(x, y)| neighbours(&skel, x, y).len() <= 1).unwrap_or(pixels[0]);
    let mut seen = Bitmap::empty(skel.height(), skel.width());
    let mut order = Vec::with_capacity(pixels.len());
    let mut stack = vec![start];
    while let Some((x, y)) = stack.pop() {
        if seen.get(x, y) {
            continue;
        }
        seen.set(x, y, true);
        order.push(Pixel::new(x as u32, y as u32));
        let mut next = neighbours(&skel, x, y);
        next.reverse();
        stack.extend(next.into_iter().filter(|&(nx, ny)| !seen.get(nx, ny)));
    }
    // Disconnected leftovers, if any, follow in scan order.
    pixels.retain(|&(x, y)| !seen.get(x, y));
    order.extend(pixels.into_iter().map(|(x, y)| Pixel::new(x as u32, y as u32)));
    Ok(order)
}
