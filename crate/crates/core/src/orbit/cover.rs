use serde::{Deserialize, Serialize};

use crate::interval::Interval;

/// Finite-resolution stand-in for an ω-limit set: the union of the visited
/// bins of a fixed grid, with adjacent bins merged.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IntervalCover {
    pub resolution: f64,
    pub cells: Vec<Interval>,
}

/// Accumulates visited bins `[lo + k r, lo + (k + 1) r]`.
#[derive(Debug, Clone)]
pub struct CoverBuilder {
    lo: f64,
    hi: f64,
    resolution: f64,
    bits: Vec<u64>,
    bins: usize,
}

impl CoverBuilder {
    pub fn new(ambient: Interval, resolution: f64) -> Self {
        // the small slack keeps 1/1e-3 from producing a 1001st sliver bin
        let bins = ((ambient.len() / resolution) * (1.0 - 1e-12)).ceil().max(1.0) as usize;
        CoverBuilder {
            lo: ambient.lo,
            hi: ambient.hi,
            resolution,
            bits: vec![0; bins.div_ceil(64)],
            bins,
        }
    }

    pub fn bin(&self, x: f64) -> usize {
        let k = ((x - self.lo) / self.resolution).floor();
        if k <= 0.0 {
            0
        } else {
            (k as usize).min(self.bins - 1)
        }
    }

    pub fn add(&mut self, x: f64) {
        let k = self.bin(x);
        self.bits[k / 64] |= 1 << (k % 64);
    }

    pub fn add_bin(&mut self, k: usize) {
        self.bits[k / 64] |= 1 << (k % 64);
    }

    pub fn is_set(&self, k: usize) -> bool {
        self.bits[k / 64] >> (k % 64) & 1 == 1
    }

    pub fn merge(&mut self, other: &CoverBuilder) {
        for (a, b) in self.bits.iter_mut().zip(&other.bits) {
            *a |= *b;
        }
    }

    pub fn finish(&self) -> IntervalCover {
        let mut cells = Vec::new();
        let mut run: Option<usize> = None;
        for k in 0..=self.bins {
            let set = k < self.bins && self.is_set(k);
            match (set, run) {
                (true, None) => run = Some(k),
                (false, Some(start)) => {
                    let a = self.lo + start as f64 * self.resolution;
                    let b = if k == self.bins {
                        self.hi
                    } else {
                        self.lo + k as f64 * self.resolution
                    };
                    cells.push(Interval::new(a, b));
                    run = None;
                }
                _ => {}
            }
        }
        IntervalCover {
            resolution: self.resolution,
            cells,
        }
    }
}

/// Merges a sorted list of closed intervals, joining those that touch.
pub(crate) fn normalize(mut v: Vec<Interval>) -> Vec<Interval> {
    v.sort_by(|a, b| a.lo.total_cmp(&b.lo));
    let mut out: Vec<Interval> = Vec::with_capacity(v.len());
    for iv in v {
        match out.last_mut() {
            Some(last) if iv.lo <= last.hi => last.hi = last.hi.max(iv.hi),
            _ => out.push(iv),
        }
    }
    out
}

fn intersection_length(a: &[Interval], b: &[Interval]) -> f64 {
    let (mut i, mut j) = (0, 0);
    let mut total = 0.0;
    while i < a.len() && j < b.len() {
        let lo = a[i].lo.max(b[j].lo);
        let hi = a[i].hi.min(b[j].hi);
        if hi > lo {
            total += hi - lo;
        }
        if a[i].hi < b[j].hi {
            i += 1;
        } else {
            j += 1;
        }
    }
    total
}

impl IntervalCover {
    pub fn empty(resolution: f64) -> Self {
        IntervalCover {
            resolution,
            cells: Vec::new(),
        }
    }

    pub fn from_cells(resolution: f64, cells: Vec<Interval>) -> Self {
        IntervalCover {
            resolution,
            cells: normalize(cells),
        }
    }

    pub fn is_empty(&self) -> bool {
        self.cells.is_empty()
    }

    pub fn total_length(&self) -> f64 {
        self.cells.iter().map(Interval::len).sum()
    }

    pub fn max_cell_length(&self) -> f64 {
        self.cells.iter().map(Interval::len).fold(0.0, f64::max)
    }

    pub fn contains(&self, x: f64) -> bool {
        let k = self.cells.partition_point(|c| c.hi < x);
        k < self.cells.len() && self.cells[k].lo <= x
    }

    /// Distance from `x` to the closest cell; infinite for an empty cover.
    pub fn distance_to(&self, x: f64) -> f64 {
        let k = self.cells.partition_point(|c| c.hi < x);
        let mut d = f64::INFINITY;
        if k < self.cells.len() {
            d = d.min(self.cells[k].distance_to(x));
        }
        if k > 0 {
            d = d.min(self.cells[k - 1].distance_to(x));
        }
        d
    }

    pub fn intersection_length(&self, other: &IntervalCover) -> f64 {
        intersection_length(&self.cells, &other.cells)
    }

    /// Lebesgue measure of the symmetric difference.
    pub fn symmetric_difference(&self, other: &IntervalCover) -> f64 {
        let both = self.intersection_length(other);
        (self.total_length() - both + other.total_length() - both).max(0.0)
    }

    pub fn union(&self, other: &IntervalCover) -> IntervalCover {
        let mut cells = self.cells.clone();
        cells.extend_from_slice(&other.cells);
        IntervalCover::from_cells(self.resolution.min(other.resolution), cells)
    }

    /// Every cell widened by `r` on both sides.
    pub fn inflate(&self, r: f64) -> IntervalCover {
        IntervalCover::from_cells(
            self.resolution,
            self.cells.iter().map(|c| Interval::new(c.lo - r, c.hi + r)).collect(),
        )
    }

    pub fn contains_cover(&self, other: &IntervalCover) -> bool {
        other.cells.iter().all(|c| {
            let k = self.cells.partition_point(|s| s.hi < c.lo);
            k < self.cells.len() && self.cells[k].lo <= c.lo && self.cells[k].hi >= c.hi
        })
    }

    /// True when every point of `target` is within `eps` of a cell, i.e. the
    /// cover is `eps`-dense in `target`.
    pub fn is_dense_in(&self, target: Interval, eps: f64) -> bool {
        if self.cells.is_empty() {
            return false;
        }
        let inflated = self.inflate(eps);
        let mut x = target.lo;
        for c in &inflated.cells {
            if c.hi < x {
                continue;
            }
            if c.lo > x {
                return false;
            }
            x = c.hi;
            if x >= target.hi {
                return true;
            }
        }
        x >= target.hi
    }
}
