use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{sampled_distortion, InducedMap, InductionError};
use crate::interval::Interval;
use crate::map::PiecewiseMap;

const MAX_DEPTH: usize = 8;
const MAX_CELLS: f64 = 1e6;

/// A cell of `P_n`: the points whose first `n + 1` branches are `itinerary`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PartitionCell {
    pub domain: Interval,
    pub itinerary: Vec<usize>,
    /// Total `f`-time of `F^{n+1}` on the cell.
    pub time: usize,
    /// Sampled `sup |DF^{n+1}(x) / DF^{n+1}(y)|` over the cell.
    pub distortion: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Partition {
    pub depth: usize,
    pub cells: Vec<PartitionCell>,
    pub max_diameter: f64,
    pub max_distortion: f64,
}

/// The partition `P_n` into connected components of `F^{-n}` of the branch
/// domains; `P_0` is the branch domains themselves.
pub fn refine_partition(m: &PiecewiseMap, ind: &InducedMap, n: usize) -> Result<Partition, InductionError> {
    if n > MAX_DEPTH {
        return Err(InductionError::InvalidArgument("depth must be at most 8".into()));
    }
    let count = (ind.branches.len() as f64).powi(n as i32);
    if count > MAX_CELLS {
        return Err(InductionError::BranchExplosion { count: count.min(usize::MAX as f64) as usize });
    }
    // (domain, itinerary, time)
    let mut level: Vec<(Interval, Vec<usize>, usize)> = ind
        .branches
        .iter()
        .enumerate()
        .map(|(i, b)| (b.domain, vec![i], b.time))
        .collect();
    for _ in 0..n {
        // P_{k+1} = union over branches b of (F|D_b)^{-1}(P_k)
        let mut next: Vec<(Interval, Vec<usize>, usize)> = ind
            .branches
            .par_iter()
            .enumerate()
            .flat_map_iter(|(i, b)| {
                level.iter().filter_map(move |(q, it, t)| {
                    let d = Interval::hull(b.inverse(m, q.lo), b.inverse(m, q.hi));
                    if d.is_empty() {
                        return None;
                    }
                    let mut itin = Vec::with_capacity(it.len() + 1);
                    itin.push(i);
                    itin.extend_from_slice(it);
                    Some((d, itin, t + b.time))
                })
            })
            .collect();
        next.sort_by(|a, b| a.0.lo.total_cmp(&b.0.lo));
        level = next;
    }
    let cells: Vec<PartitionCell> = level
        .into_par_iter()
        .map(|(domain, itinerary, time)| PartitionCell {
            distortion: sampled_distortion(m, domain, time, 8),
            domain,
            itinerary,
            time,
        })
        .collect();
    let max_diameter = cells.iter().map(|c| c.domain.len()).fold(0.0, f64::max);
    let max_distortion = cells.iter().map(|c| c.distortion).fold(1.0, f64::max);
    Ok(Partition {
        depth: n,
        cells,
        max_diameter,
        max_distortion,
    })
}
