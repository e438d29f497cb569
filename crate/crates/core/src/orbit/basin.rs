use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{
    check_cover_args, detect_periodic_like, find_periodic_points, CoverBuilder, Dithered, IntervalCover,
    OrbitError, PeriodicLike,
};
use crate::map::{LateralPoint, PiecewiseMap};
use crate::rng::uniform_points;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CycleSource {
    Periodic,
    PeriodicLike,
}

/// An attracting periodic or periodic-like orbit that basin samples can be
/// matched against.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AttractingCycle {
    pub source: CycleSource,
    pub period: usize,
    pub multiplier: f64,
    /// Positions along the cycle, starting from the detected point.
    pub points: Vec<f64>,
    /// Lateral base point for periodic-like cycles.
    pub lateral: Option<LateralPoint>,
}

impl AttractingCycle {
    pub fn distance_to(&self, x: f64) -> f64 {
        self.points.iter().map(|p| (p - x).abs()).fold(f64::INFINITY, f64::min)
    }

    fn same_as(&self, other: &AttractingCycle) -> bool {
        self.points.iter().all(|&p| other.distance_to(p) <= 1e-6)
            && other.points.iter().all(|&p| self.distance_to(p) <= 1e-6)
    }

    pub fn from_periodic_like(m: &PiecewiseMap, pl: &PeriodicLike) -> Option<AttractingCycle> {
        let orbit = pl.orbit(m).ok()?;
        Some(AttractingCycle {
            source: CycleSource::PeriodicLike,
            period: pl.period,
            multiplier: pl.lateral_multiplier,
            points: orbit.iter().map(|q| q.point).collect(),
            lateral: Some(pl.point),
        })
    }
}

/// Attracting periodic orbits of period at most `period_max`, plus the
/// attracting periodic-like orbits through the lateral points of `C_f`.
pub fn attracting_cycles(m: &PiecewiseMap, period_max: usize) -> Result<Vec<AttractingCycle>, OrbitError> {
    let mut cycles: Vec<AttractingCycle> = Vec::new();
    for p in find_periodic_points(m, period_max, 1e-9)? {
        if !(p.multiplier < 1.0 - 1e-9) {
            continue;
        }
        let mut points = vec![p.point];
        let mut x = p.point;
        for _ in 1..p.period {
            x = m.eval(x)?;
            points.push(x);
        }
        let c = AttractingCycle {
            source: CycleSource::Periodic,
            period: p.period,
            multiplier: p.multiplier,
            points,
            lateral: None,
        };
        if !cycles.iter().any(|d| d.same_as(&c)) {
            cycles.push(c);
        }
    }
    for lp in m.critical_laterals() {
        let Some(pl) = detect_periodic_like(m, lp, period_max.clamp(1, 64), 0.05) else { continue };
        if !pl.attracting {
            continue;
        }
        if let Some(c) = AttractingCycle::from_periodic_like(m, &pl) {
            if !cycles.iter().any(|d| d.same_as(&c)) {
                cycles.push(c);
            }
        }
    }
    Ok(cycles)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BasinConfig {
    pub burn_in: usize,
    pub length: usize,
    pub resolution: f64,
    /// Period bound for the attracting-cycle search.
    pub period_max: usize,
}

impl Default for BasinConfig {
    fn default() -> Self {
        BasinConfig {
            burn_in: 1000,
            length: 20_000,
            resolution: 1e-3,
            period_max: 8,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RawPointRecord {
    pub index: usize,
    pub start: f64,
    pub cover: IntervalCover,
    /// Index into the attracting-cycle list when the tail settles on it.
    pub matched_cycle: Option<usize>,
    /// Mean of `log |Df|` over the recorded window.
    pub lyapunov: f64,
    pub min_critical_distance: f64,
    /// Iterate at which the orbit met `C_f`, if it did.
    pub terminated_at: Option<usize>,
}

/// Samples with the attracting cycles computed from `cfg.period_max`.
pub fn basin_sample(m: &PiecewiseMap, sample_count: usize, seed: u64, cfg: &BasinConfig) -> Result<Vec<RawPointRecord>, OrbitError> {
    let cycles = attracting_cycles(m, cfg.period_max)?;
    basin_sample_with(m, sample_count, seed, cfg, &cycles)
}

/// One record per uniform sample point; output order is sample order.
pub fn basin_sample_with(
    m: &PiecewiseMap,
    sample_count: usize,
    seed: u64,
    cfg: &BasinConfig,
    cycles: &[AttractingCycle],
) -> Result<Vec<RawPointRecord>, OrbitError> {
    if sample_count == 0 {
        return Err(OrbitError::InvalidArgument("sample_count must be at least 1".into()));
    }
    check_cover_args(cfg.burn_in, cfg.length, cfg.resolution)?;
    let starts = uniform_points(seed, sample_count, m.lo(), m.hi());
    Ok(starts
        .par_iter()
        .enumerate()
        .map(|(i, &x)| sample_point(m, i, x, cfg, cycles))
        .collect())
}

fn sample_point(m: &PiecewiseMap, index: usize, x: f64, cfg: &BasinConfig, cycles: &[AttractingCycle]) -> RawPointRecord {
    let mut builder = CoverBuilder::new(m.ambient(), cfg.resolution);
    let mut orbit = Dithered::new(m, x);
    let mut terminated_at = None;
    let crit = m.exceptional();
    let tail_from = cfg.length - (cfg.length / 10).max(1).min(cfg.length);
    let mut tail_dist = vec![0.0_f64; cycles.len()];
    let mut log_sum = 0.0;
    let mut steps = 0usize;
    let mut min_crit = f64::INFINITY;

    'run: {
        for i in 0..cfg.burn_in {
            if orbit.step().is_err() {
                terminated_at = Some(i);
                break 'run;
            }
        }
        for k in 0..cfg.length {
            let y = orbit.current();
            builder.add(y);
            for &c in crit {
                min_crit = min_crit.min((y - c).abs());
            }
            if k >= tail_from {
                for (d, cyc) in tail_dist.iter_mut().zip(cycles) {
                    *d = d.max(cyc.distance_to(y));
                }
            }
            match orbit.step_with_deriv() {
                Ok((_, d)) => {
                    log_sum += d.abs().ln();
                    steps += 1;
                }
                Err(_) => {
                    terminated_at = Some(cfg.burn_in + k);
                    break 'run;
                }
            }
        }
    }
    let matched_cycle = if terminated_at.is_none() {
        tail_dist.iter().position(|&d| d <= cfg.resolution)
    } else {
        None
    };
    RawPointRecord {
        index,
        start: x,
        cover: builder.finish(),
        matched_cycle,
        lyapunov: if steps > 0 { log_sum / steps as f64 } else { 0.0 },
        min_critical_distance: min_crit,
        terminated_at,
    }
}
