//! Objective vectors and Pareto machinery: dominance, non-dominated sorting,
//! crowding distance and exact three-objective hypervolume.

use alloc::format;
use alloc::vec::Vec;
use core::cmp::Ordering;

use crate::{Error, Result};

/// Cumulative rewards of one controller over the journey. Nuisance and risk
/// are minimized, progress is maximized.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct ObjectiveVector {
    pub nuisance: f64,
    pub progress: f64,
    pub risk: f64,
}

impl ObjectiveVector {
    pub const fn new(nuisance: f64, progress: f64, risk: f64) -> Self {
        ObjectiveVector {
            nuisance,
            progress,
            risk,
        }
    }

    /// All-minimization orientation `(nuisance, -progress, risk)`.
    pub fn minimized(&self) -> [f64; 3] {
        [self.nuisance, -self.progress, self.risk]
    }

    pub fn as_array(&self) -> [f64; 3] {
        [self.nuisance, self.progress, self.risk]
    }

    pub fn is_finite(&self) -> bool {
        self.as_array().iter().all(|v| v.is_finite())
    }

    /// Bit patterns, for exact equality and ordering.
    pub fn bits(&self) -> [u64; 3] {
        self.as_array().map(f64::to_bits)
    }
}

/// `u` is no worse than `v` in every objective and strictly better in one.
pub fn dominates(u: &ObjectiveVector, v: &ObjectiveVector) -> bool {
    let (a, b) = (u.minimized(), v.minimized());
    let mut strictly = false;
    for i in 0..3 {
        if a[i] > b[i] {
            return false;
        }
        if a[i] < b[i] {
            strictly = true;
        }
    }
    strictly
}

/// Partitions indices into successive non-dominated fronts.
pub fn fast_nondominated_sort(objs: &[ObjectiveVector]) -> Vec<Vec<usize>> {
    let n = objs.len();
    let mut dominated_by: Vec<Vec<usize>> = alloc::vec![Vec::new(); n];
    let mut domination_count = alloc::vec![0usize; n];
    let mut fronts = Vec::new();
    let mut current = Vec::new();
    for p in 0..n {
        for q in 0..n {
            if p == q {
                continue;
            }
            if dominates(&objs[p], &objs[q]) {
                dominated_by[p].push(q);
            } else if dominates(&objs[q], &objs[p]) {
                domination_count[p] += 1;
            }
        }
        if domination_count[p] == 0 {
            current.push(p);
        }
    }
    while !current.is_empty() {
        let mut next = Vec::new();
        for &p in &current {
            for &q in &dominated_by[p] {
                domination_count[q] -= 1;
                if domination_count[q] == 0 {
                    next.push(q);
                }
            }
        }
        next.sort_unstable();
        fronts.push(current);
        current = next;
    }
    fronts
}

/// NSGA-II crowding distance of each point within its front.
pub fn crowding_distance(front: &[ObjectiveVector]) -> Vec<f64> {
    let n = front.len();
    if n <= 2 {
        return alloc::vec![f64::INFINITY; n];
    }
    let mut dist = alloc::vec![0.0; n];
    let mut order: Vec<usize> = (0..n).collect();
    for k in 0..3 {
        let value = |i: usize| front[i].as_array()[k];
        order.sort_by(|&a, &b| value(a).total_cmp(&value(b)).then(a.cmp(&b)));
        let (lo, hi) = (value(order[0]), value(order[n - 1]));
        dist[order[0]] = f64::INFINITY;
        dist[order[n - 1]] = f64::INFINITY;
        let range = hi - lo;
        if range <= 0.0 {
            continue;
        }
        for w in order.windows(3) {
            dist[w[1]] += (value(w[2]) - value(w[0])) / range;
        }
    }
    dist
}

/// Indices of the non-dominated members of `objs`.
pub fn nondominated_indices(objs: &[ObjectiveVector]) -> Vec<usize> {
    (0..objs.len())
        .filter(|&i| !objs.iter().any(|o| dominates(o, &objs[i])))
        .collect()
}

/// Number of ordered pairs `(i, j)` with `objs[i]` dominating `objs[j]`.
pub fn dominated_pairs(objs: &[ObjectiveVector]) -> usize {
    let mut count = 0;
    for a in objs {
        for b in objs {
            if dominates(a, b) {
                count += 1;
            }
        }
    }
    count
}

/// Exact volume weakly dominated by `front` and bounded by `reference`.
///
/// Every point must be no worse than the reference in each objective. The
/// volume is swept in slabs along the risk axis, each slab being the
/// two-dimensional staircase area of the points below it.
pub fn hypervolume(front: &[ObjectiveVector], reference: &ObjectiveVector) -> Result<f64> {
    let r = reference.minimized();
    let mut pts: Vec<[f64; 3]> = Vec::with_capacity(front.len());
    for p in front {
        let m = p.minimized();
        if (0..3).any(|i| !(m[i] <= r[i])) {
            return Err(Error::input(format!(
                "point {p:?} does not dominate the reference {reference:?}"
            )));
        }
        pts.push(m);
    }
    pts.sort_by(|a, b| a[2].total_cmp(&b[2]));
    let mut volume = 0.0;
    let mut slab: Vec<[f64; 2]> = Vec::with_capacity(pts.len());
    for i in 0..pts.len() {
        slab.push([pts[i][0], pts[i][1]]);
        let top = if i + 1 < pts.len() { pts[i + 1][2] } else { r[2] };
        let height = top - pts[i][2];
        if height > 0.0 {
            volume += area_2d(&mut slab, r[0], r[1]) * height;
        }
    }
    Ok(volume)
}

fn area_2d(pts: &mut [[f64; 2]], rx: f64, ry: f64) -> f64 {
    pts.sort_by(|a, b| match a[0].total_cmp(&b[0]) {
        Ordering::Equal => a[1].total_cmp(&b[1]),
        o => o,
    });
    let mut area = 0.0;
    let mut floor = ry;
    for p in pts.iter() {
        if p[1] < floor {
            area += (rx - p[0]) * (floor - p[1]);
            floor = p[1];
        }
    }
    area
}
