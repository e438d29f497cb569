//! Attractor classification from basin samples: attracting periodic-like
//! orbits, cycles of intervals, and Cantor sets matched to recurrent lateral
//! critical values.

mod omega;

pub use omega::{
    critical_order, critical_values, lateral_cover, match_omega, recurrence_check, CriticalOrder, CriticalValue,
    OmegaConfig, OmegaMatch,
};

use serde::{Deserialize, Serialize};

use crate::interval::Interval;
use crate::map::PiecewiseMap;
use crate::orbit::{attracting_cycles, basin_sample_with, AttractingCycle, BasinConfig, IntervalCover, OrbitError};

/// Hausdorff tolerance for matching a cell's image with another cell.
const PERMUTE_TOL: f64 = 1e-3;

/// Relative slack on length thresholds; cover lengths are sums of bin widths
/// and carry rounding.
pub(crate) const LENGTH_SLACK: f64 = 1.0 + 1e-9;

/// Sample points per cell when estimating `f(cell)`.
const IMAGE_PROBES: usize = 64;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClassifyConfig {
    pub samples: usize,
    pub seed: u64,
    pub burn_in: usize,
    pub length: usize,
    pub resolution: f64,
    pub period_max: usize,
}

impl Default for ClassifyConfig {
    fn default() -> Self {
        ClassifyConfig {
            samples: 1000,
            seed: 0,
            burn_in: 1000,
            length: 20_000,
            resolution: 1e-3,
            period_max: 8,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum AttractorKind {
    PeriodicLike {
        cycle: AttractingCycle,
    },
    IntervalCycle {
        intervals: Vec<Interval>,
        period: usize,
    },
    Cantor {
        values: Vec<CriticalValue>,
        /// `recurrence_check` of each matched value's lateral point.
        recurrent: Vec<bool>,
        symmetric_difference: f64,
    },
    Unresolved {
        reason: String,
        cells: usize,
        max_cell: f64,
        /// Distance to the critical-orbit covers when a match was attempted.
        symmetric_difference: Option<f64>,
    },
}

impl AttractorKind {
    pub fn name(&self) -> &'static str {
        match self {
            AttractorKind::PeriodicLike { .. } => "periodic_like",
            AttractorKind::IntervalCycle { .. } => "interval_cycle",
            AttractorKind::Cantor { .. } => "cantor",
            AttractorKind::Unresolved { .. } => "unresolved",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AttractorReport {
    #[serde(flatten)]
    pub kind: AttractorKind,
    pub cover: IntervalCover,
    pub basin_fraction: f64,
    pub sample_indices: Vec<usize>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Classification {
    pub reports: Vec<AttractorReport>,
    /// Samples whose orbit met `C_f` exactly.
    pub unclassified_fraction: f64,
    pub unclassified_indices: Vec<usize>,
    /// Among samples not captured by a periodic-like orbit, the fraction
    /// whose recorded orbit stayed `resolution` away from `C_f`.
    pub critical_avoiding_fraction: f64,
    pub samples: usize,
}

impl Classification {
    /// `2^{2 |C_f|} - 1` plus the periodic-like reports.
    pub fn report_bound(&self, m: &PiecewiseMap) -> usize {
        let periodic = self
            .reports
            .iter()
            .filter(|r| matches!(r.kind, AttractorKind::PeriodicLike { .. }))
            .count();
        let c = m.exceptional().len() as u32;
        (1usize << (2 * c).min(62)) - 1 + periodic
    }
}

pub fn classify_attractors(m: &PiecewiseMap, cfg: &ClassifyConfig) -> Result<Classification, OrbitError> {
    if cfg.samples < 100 {
        return Err(OrbitError::InvalidArgument("samples must be at least 100".into()));
    }
    if cfg.length < 10_000 {
        return Err(OrbitError::InvalidArgument("length must be at least 1e4".into()));
    }
    let basin = BasinConfig {
        burn_in: cfg.burn_in,
        length: cfg.length,
        resolution: cfg.resolution,
        period_max: cfg.period_max,
    };
    let cycles = attracting_cycles(m, cfg.period_max)?;
    let records = basin_sample_with(m, cfg.samples, cfg.seed, &basin, &cycles)?;
    let n = records.len() as f64;
    let res = cfg.resolution;

    let mut by_cycle: Vec<Vec<usize>> = vec![Vec::new(); cycles.len()];
    let mut unclassified = Vec::new();
    // (representative cover, member indices)
    let mut clusters: Vec<(IntervalCover, Vec<usize>)> = Vec::new();
    let mut free = 0usize;
    let mut avoiding = 0usize;
    for r in &records {
        if r.terminated_at.is_some() {
            unclassified.push(r.index);
            continue;
        }
        if let Some(c) = r.matched_cycle {
            by_cycle[c].push(r.index);
            continue;
        }
        free += 1;
        if r.min_critical_distance > res {
            avoiding += 1;
        }
        match clusters.iter_mut().find(|(rep, _)| rep.symmetric_difference(&r.cover) <= 2.0 * res * LENGTH_SLACK) {
            Some((_, members)) => members.push(r.index),
            None => clusters.push((r.cover.clone(), vec![r.index])),
        }
    }

    let union_of = |idx: &[usize]| -> IntervalCover {
        idx.iter()
            .fold(IntervalCover::empty(res), |acc, &i| acc.union(&records[i].cover))
    };
    let omega_cfg = OmegaConfig {
        burn_in: cfg.burn_in,
        length: cfg.length,
        resolution: res,
    };

    let mut reports = Vec::new();
    for (cycle, idx) in cycles.iter().zip(by_cycle) {
        if idx.is_empty() {
            continue;
        }
        reports.push(AttractorReport {
            kind: AttractorKind::PeriodicLike { cycle: cycle.clone() },
            cover: union_of(&idx),
            basin_fraction: idx.len() as f64 / n,
            sample_indices: idx,
        });
    }
    for (_, idx) in clusters {
        let cover = union_of(&idx);
        let kind = classify_cover(m, &cover, &omega_cfg)?;
        reports.push(AttractorReport {
            kind,
            cover,
            basin_fraction: idx.len() as f64 / n,
            sample_indices: idx,
        });
    }
    Ok(Classification {
        reports,
        unclassified_fraction: unclassified.len() as f64 / n,
        unclassified_indices: unclassified,
        critical_avoiding_fraction: if free > 0 { avoiding as f64 / free as f64 } else { 0.0 },
        samples: records.len(),
    })
}

fn classify_cover(m: &PiecewiseMap, cover: &IntervalCover, cfg: &OmegaConfig) -> Result<AttractorKind, OrbitError> {
    let res = cfg.resolution;
    let cells = cover.cells.len();
    let max_cell = cover.max_cell_length();
    let few = cells <= 2 * m.exceptional().len() + 2;
    let fat = cover.cells.iter().all(|c| c.len() * LENGTH_SLACK >= 100.0 * res);
    if few && fat {
        if let Some(period) = cycle_period(m, &cover.cells, PERMUTE_TOL + 2.0 * res) {
            return Ok(AttractorKind::IntervalCycle {
                intervals: cover.cells.clone(),
                period,
            });
        }
    }
    let unresolved = |reason: &str, d: Option<f64>| AttractorKind::Unresolved {
        reason: reason.into(),
        cells,
        max_cell,
        symmetric_difference: d,
    };
    let Some(found) = match_omega(cover, m, cfg)? else {
        return Ok(unresolved("cover avoids the critical set", None));
    };
    let d = Some(found.symmetric_difference);
    if !found.accepted {
        return Ok(unresolved("cover differs from the critical-orbit closures", d));
    }
    if max_cell > 10.0 * res * LENGTH_SLACK {
        return Ok(unresolved("cover has interior at this resolution", d));
    }
    let recurrent = found
        .values
        .iter()
        .map(|v| recurrence_check(m, v.source, cfg.length.max(10_000), res))
        .collect::<Result<Vec<_>, _>>()?;
    if !recurrent.iter().all(|&r| r) {
        return Ok(unresolved("a matched critical value is not recurrent", d));
    }
    Ok(AttractorKind::Cantor {
        values: found.values,
        recurrent,
        symmetric_difference: found.symmetric_difference,
    })
}

/// Hull of `f` over a cell, including the lateral values at exceptional
/// points in its closure.
pub fn cell_image(m: &PiecewiseMap, cell: Interval) -> Option<Interval> {
    let mut lo = f64::INFINITY;
    let mut hi = f64::NEG_INFINITY;
    let mut push = |y: f64| {
        lo = lo.min(y);
        hi = hi.max(y);
    };
    for k in 0..=IMAGE_PROBES {
        let x = cell.at(k as f64 / IMAGE_PROBES as f64).clamp(m.lo(), m.hi());
        if let Ok(y) = m.eval(x) {
            push(y);
        }
    }
    for v in m.lateral_values() {
        if cell.contains_closed(v.point.point) {
            push(v.value);
        }
    }
    (lo <= hi).then(|| Interval::new(lo, hi))
}

/// Period of the cycle when `f` permutes `cells` transitively up to `tol`.
fn cycle_period(m: &PiecewiseMap, cells: &[Interval], tol: f64) -> Option<usize> {
    let n = cells.len();
    let mut target = Vec::with_capacity(n);
    for c in cells {
        let img = cell_image(m, *c)?;
        let j = (0..n).min_by(|&a, &b| img.hausdorff(&cells[a]).total_cmp(&img.hausdorff(&cells[b])))?;
        if img.hausdorff(&cells[j]) > tol {
            return None;
        }
        target.push(j);
    }
    // transitive: following the map from cell 0 visits every cell once
    let mut seen = vec![false; n];
    let mut k = 0;
    for _ in 0..n {
        if seen[k] {
            return None;
        }
        seen[k] = true;
        k = target[k];
    }
    (k == 0).then_some(n)
}

/// Largest part of some `f(cell)` outside the cover inflated by its
/// resolution, pulled back to the scale of the cell by the mean stretch
/// `|f(cell)| / |cell|` when that exceeds one.
///
/// A bin only records that some orbit point lies in it, so an expanding
/// branch spreads the empty part of a bin over several image bins; measuring
/// the excess in source units keeps thin covers comparable with fat ones.
pub fn forward_excess(m: &PiecewiseMap, cover: &IntervalCover) -> f64 {
    let fat = cover.inflate(cover.resolution);
    cover
        .cells
        .iter()
        .map(|c| {
            let Some(img) = cell_image(m, *c) else { return f64::INFINITY };
            let inside = fat.intersection_length(&IntervalCover::from_cells(cover.resolution, vec![img]));
            let stretch = (img.len() / c.len()).max(1.0);
            (img.len() - inside).max(0.0) / stretch
        })
        .fold(0.0, f64::max)
}

/// `f(cover) ⊂ cover` up to one bin, in the sense of [`forward_excess`].
pub fn forward_invariant(m: &PiecewiseMap, cover: &IntervalCover) -> bool {
    forward_excess(m, cover) <= cover.resolution * LENGTH_SLACK
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fixtures;

    fn quick() -> ClassifyConfig {
        ClassifyConfig {
            samples: 200,
            seed: 3,
            length: 10_000,
            ..ClassifyConfig::default()
        }
    }

    #[test]
    fn two_cycle() {
        let m = fixtures::logistic(3.2);
        let c = classify_attractors(&m, &quick()).unwrap();
        assert_eq!(c.reports.len(), 1);
        let r = &c.reports[0];
        let AttractorKind::PeriodicLike { cycle } = &r.kind else { panic!("{:?}", r.kind) };
        assert_eq!(cycle.period, 2);
        assert!(r.basin_fraction >= 0.99);
    }

    #[test]
    fn tent_is_one_interval() {
        let m = fixtures::tent();
        let c = classify_attractors(&m, &quick()).unwrap();
        assert_eq!(c.reports.len(), 1, "{:?}", c.reports.iter().map(|r| &r.kind).collect::<Vec<_>>());
        let r = &c.reports[0];
        let AttractorKind::IntervalCycle { intervals, period } = &r.kind else { panic!("{:?}", r.kind) };
        assert_eq!(*period, 1);
        assert!(intervals[0].hausdorff(&Interval::new(0.0, 1.0)) <= 1e-3);
        assert!(r.basin_fraction >= 0.99);
        assert!(forward_invariant(&m, &r.cover));
        let total: f64 = c.reports.iter().map(|r| r.basin_fraction).sum::<f64>() + c.unclassified_fraction;
        assert!((total - 1.0).abs() < 1e-12);
    }

    #[test]
    fn two_band_cycle() {
        // after the first band merging the attractor is a 2-cycle of intervals
        let m = fixtures::logistic(3.6);
        let c = classify_attractors(&m, &quick()).unwrap();
        assert_eq!(c.reports.len(), 1);
        let AttractorKind::IntervalCycle { period, .. } = &c.reports[0].kind else {
            panic!("{:?}", c.reports[0].kind)
        };
        assert_eq!(*period, 2);
    }

    #[test]
    fn feigenbaum_is_cantor() {
        let m = fixtures::logistic(fixtures::FEIGENBAUM_A);
        let c = classify_attractors(&m, &quick()).unwrap();
        assert_eq!(c.reports.len(), 1);
        let r = &c.reports[0];
        let AttractorKind::Cantor { values, recurrent, .. } = &r.kind else { panic!("{:?}", r.kind) };
        assert_eq!(values.len(), 2);
        assert!(values.iter().all(|v| v.source.point == 0.5));
        assert!(recurrent.iter().all(|&b| b));
        assert!(r.cover.max_cell_length() <= 1e-2);
        assert!(forward_invariant(&m, &r.cover));
        assert!(c.reports.len() <= c.report_bound(&m));
    }

    #[test]
    fn rejects_small_sample_counts() {
        let cfg = ClassifyConfig {
            samples: 10,
            ..quick()
        };
        assert!(classify_attractors(&fixtures::tent(), &cfg).is_err());
    }

    #[test]
    fn deterministic() {
        let m = fixtures::logistic(3.83);
        let a = classify_attractors(&m, &quick()).unwrap();
        let b = classify_attractors(&m, &quick()).unwrap();
        assert_eq!(a, b);
    }
}
