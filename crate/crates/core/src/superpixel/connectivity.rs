//! Post-processing that leaves every superpixel a single 6-connected
//! component of at least `min_region` voxels (unless the whole volume is
//! smaller).

use std::collections::VecDeque;

use super::features::FeatureGrid;
use crate::datamodel::{Dims, FEATURE_DIM};
use crate::scalar::Scalar;

struct Components {
    /// Component id of every voxel, numbered in scan order of first voxel.
    id: Vec<u32>,
    size: Vec<usize>,
    label: Vec<u32>,
}

fn neighbors(d: Dims, idx: usize) -> impl Iterator<Item = usize> {
    let (t, y, x) = d.coords(idx);
    let fl = d.frame_len();
    [
        (x > 0).then(|| idx - 1),
        (x + 1 < d.width).then(|| idx + 1),
        (y > 0).then(|| idx - d.width),
        (y + 1 < d.height).then(|| idx + d.width),
        (t > 0).then(|| idx - fl),
        (t + 1 < d.depth).then(|| idx + fl),
    ]
    .into_iter()
    .flatten()
}

fn components(d: Dims, labels: &[u32]) -> Components {
    let mut id = vec![u32::MAX; labels.len()];
    let mut size = Vec::new();
    let mut label = Vec::new();
    let mut queue = VecDeque::new();
    for start in 0..labels.len() {
        if id[start] != u32::MAX {
            continue;
        }
        let c = size.len() as u32;
        let l = labels[start];
        id[start] = c;
        queue.push_back(start);
        let mut n = 0;
        while let Some(v) = queue.pop_front() {
            n += 1;
            for u in neighbors(d, v) {
                if id[u] == u32::MAX && labels[u] == l {
                    id[u] = c;
                    queue.push_back(u);
                }
            }
        }
        size.push(n);
        label.push(l);
    }
    Components { id, size, label }
}

fn find(parent: &mut [usize], mut x: usize) -> usize {
    while parent[x] != x {
        parent[x] = parent[parent[x]];
        x = parent[x];
    }
    x
}

/// Relabel densely in order of first appearance.
fn dense(labels: &[u32]) -> Vec<u32> {
    let k = labels.iter().map(|&l| l as usize + 1).max().unwrap_or(0);
    let mut map = vec![u32::MAX; k];
    let mut next = 0;
    labels
        .iter()
        .map(|&l| {
            let m = &mut map[l as usize];
            if *m == u32::MAX {
                *m = next;
                next += 1;
            }
            *m
        })
        .collect()
}

/// Merge stray fragments until every label is one connected component.
///
/// Each round finds the connected components of every label. The largest
/// component of a label is kept if it has at least `min_region` voxels; every
/// other component points at its largest neighbouring component (ties go to
/// the closest mean feature, then the lower component id) and is merged with
/// it. Rounds repeat until nothing is merged. Labels come back dense, numbered
/// by first voxel in scan order.
pub fn enforce_connectivity<T: Scalar>(grid: &FeatureGrid<T>, labels: &[u32], min_region: usize) -> Vec<u32> {
    let d = grid.dims();
    let mut labels = labels.to_vec();
    loop {
        let comps = components(d, &labels);
        let n = comps.size.len();
        if n == 1 {
            break;
        }
        let mut largest: std::collections::HashMap<u32, usize> = std::collections::HashMap::new();
        for c in 0..n {
            let e = largest.entry(comps.label[c]).or_insert(c);
            if comps.size[c] > comps.size[*e] {
                *e = c;
            }
        }
        let keeper: Vec<bool> = (0..n).map(|c| largest[&comps.label[c]] == c && comps.size[c] >= min_region).collect();
        if keeper.iter().all(|&k| k) {
            break;
        }

        let mut mean = vec![[0.0f64; FEATURE_DIM]; n];
        let mut adjacent: Vec<Vec<u32>> = vec![Vec::new(); n];
        for (v, &c) in comps.id.iter().enumerate() {
            for (m, f) in mean[c as usize].iter_mut().zip(grid.color(v)) {
                *m += f.to_f64_lossy();
            }
            if keeper[c as usize] {
                continue;
            }
            for u in neighbors(d, v) {
                let cu = comps.id[u];
                if cu != c {
                    adjacent[c as usize].push(cu);
                }
            }
        }
        for (m, &s) in mean.iter_mut().zip(&comps.size) {
            for v in m.iter_mut() {
                *v /= s as f64;
            }
        }

        let mut parent: Vec<usize> = (0..n).collect();
        for c in (0..n).filter(|&c| !keeper[c]) {
            let adj = &mut adjacent[c];
            adj.sort_unstable();
            adj.dedup();
            let dist = |o: usize| -> f64 { mean[c].iter().zip(&mean[o]).map(|(a, b)| (a - b) * (a - b)).sum() };
            // a fragment with no neighbour fills its connected piece of the volume alone
            let Some(target) = adj.iter().map(|&o| o as usize).min_by(|&a, &b| {
                comps.size[b]
                    .cmp(&comps.size[a])
                    .then(dist(a).total_cmp(&dist(b)))
                    .then(a.cmp(&b))
            }) else {
                continue;
            };
            let (ra, rb) = (find(&mut parent, c), find(&mut parent, target));
            if ra != rb {
                parent[ra.max(rb)] = ra.min(rb);
            }
        }
        let before = n;
        let merged: Vec<u32> = comps.id.iter().map(|&c| find(&mut parent, c as usize) as u32).collect();
        labels = dense(&merged);
        let after = labels.iter().map(|&l| l as usize + 1).max().unwrap_or(0);
        if after == before {
            break;
        }
    }
    dense(&labels)
}
