//! Uniform expansion away from a neighbourhood `U` of the exceptional set,
//! and derivative growth along single orbits.
//!
//! Orbit segments that avoid `U` come from two sources. Forward dithered
//! orbits give the short segments a typical point produces before it falls
//! into `U`. Long segments are rare forward in time, so they are built
//! backwards: a chain of preimages chosen at random among the branches whose
//! preimage avoids `U`. Backward iteration contracts, so the chain points are
//! accurate, and a chain of length `n` yields segments of every length up to
//! `n`.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::interval::Interval;
use crate::map::{MapError, PiecewiseMap};
use crate::orbit::cylinder::{branch_cylinders, Cylinder};
use crate::orbit::{find_periodic_points, Dithered, OrbitError, PeriodicPoint};
use crate::rng::Sampler;

/// A periodic point counts as expanding above this multiplier.
pub const EXPANDING_THRESHOLD: f64 = 1.0 + 1e-9;

/// Running-max threshold for [`GrowthStatus::Growth`].
pub const GROWTH_THRESHOLD: f64 = 1e6;

/// Keeps `|Df^n| > C λ^n` strict at the minimising segment.
const C_MARGIN: f64 = 1.0 - 1e-12;

const STREAM_SALT: u64 = 0x9e37_79b9_7f4a_7c15;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ManeError {
    #[error("U does not cover the exceptional point {point}")]
    UNotCovering { point: f64 },
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
    #[error(transparent)]
    Orbit(#[from] OrbitError),
    #[error(transparent)]
    Map(#[from] MapError),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ManeConfig {
    pub period_max: usize,
    /// Forward orbits and backward chains drawn, each.
    pub samples: usize,
    pub n_max: usize,
    pub seed: u64,
}

impl Default for ManeConfig {
    fn default() -> Self {
        ManeConfig {
            period_max: 8,
            samples: 200,
            n_max: 200,
            seed: 0,
        }
    }
}

/// `f^n` restricted to `x, ..., f^{n-1}(x)`, all outside `U`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Segment {
    pub x: f64,
    pub n: usize,
    pub log_deriv: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ManeCertificate {
    pub u: Vec<Interval>,
    pub period_checked: usize,
    /// Periodic points outside `U` with multiplier `<= 1 + 1e-9`.
    pub periodic_violations: Vec<PeriodicPoint>,
    pub c: f64,
    pub lambda: f64,
    pub n_max: usize,
    pub samples: usize,
    /// Segments tested.
    pub segments: usize,
    /// Length from which `λ` was fitted; `n_max / 2` unless no segment was
    /// that long.
    pub fit_from: usize,
    pub valid: bool,
}

impl ManeCertificate {
    /// Fraction of fresh segments drawn with `seed` that satisfy
    /// `|Df^n| > C λ^n`.
    pub fn replay(&self, m: &PiecewiseMap, seed: u64) -> Result<f64, ManeError> {
        let cfg = ManeConfig {
            period_max: self.period_checked,
            samples: self.samples,
            n_max: self.n_max,
            seed,
        };
        let segs = harvest(m, &self.u, &cfg)?;
        if segs.is_empty() {
            return Ok(1.0);
        }
        let ln_c = self.c.ln();
        let ln_l = self.lambda.ln();
        let ok = segs.iter().filter(|s| s.log_deriv > ln_c + s.n as f64 * ln_l).count();
        Ok(ok as f64 / segs.len() as f64)
    }
}

fn in_u(u: &[Interval], x: f64) -> bool {
    u.iter().any(|iv| iv.contains(x))
}

fn check_u(m: &PiecewiseMap, u: &[Interval]) -> Result<(), ManeError> {
    if u.iter().any(|iv| !(iv.lo < iv.hi)) {
        return Err(ManeError::InvalidArgument("U must consist of non-empty open intervals".into()));
    }
    match m.exceptional().iter().find(|&&c| !in_u(u, c)) {
        Some(&point) => Err(ManeError::UNotCovering { point }),
        None => Ok(()),
    }
}

fn stream(seed: u64, i: usize, salt: u64) -> Sampler {
    Sampler::new(seed ^ (i as u64 + 1).wrapping_mul(STREAM_SALT) ^ salt)
}

/// Maximal runs outside `U` of one forward orbit of length `2 n_max`, cut
/// into pieces of at most `n_max`.
fn forward_segments(m: &PiecewiseMap, u: &[Interval], x0: f64, n_max: usize) -> Vec<Segment> {
    let mut out = Vec::new();
    let mut orbit = Dithered::new(m, x0);
    let mut run: Option<Segment> = None;
    for _ in 0..2 * n_max {
        let x = orbit.current();
        if in_u(u, x) {
            out.extend(run.take());
            if orbit.step().is_err() {
                break;
            }
            continue;
        }
        let Ok((_, d)) = orbit.step_with_deriv() else { break };
        let s = run.get_or_insert(Segment { x, n: 0, log_deriv: 0.0 });
        s.n += 1;
        s.log_deriv += d.abs().ln();
        if s.n == n_max {
            out.extend(run.take());
        }
    }
    out.extend(run);
    out
}

/// Admissible preimages of `y` in random order.
fn preimages(m: &PiecewiseMap, cyls: &[Cylinder], u: &[Interval], rng: &mut Sampler, y: f64) -> Vec<f64> {
    let mut pre: Vec<f64> = cyls
        .iter()
        .filter(|c| c.image().contains(y))
        .map(|c| c.preimage(m, y))
        .filter(|&x| !in_u(u, x) && !m.is_exceptional(x))
        .collect();
    for i in (1..pre.len()).rev() {
        let j = ((rng.unit() * (i + 1) as f64) as usize).min(i);
        pre.swap(i, j);
    }
    pre
}

/// Segments `x_j -> ... -> x_1` of a backward chain from a point `y ∉ U`.
///
/// The chain is a random depth-first walk in the preimage tree, so dead ends
/// (preimages with no admissible preimage) are backed out of rather than
/// ending the chain. The deepest path seen within the budget is used.
fn backward_segments(m: &PiecewiseMap, cyls: &[Cylinder], u: &[Interval], rng: &mut Sampler, n_max: usize) -> Vec<Segment> {
    let mut y = rng.uniform(m.lo(), m.hi());
    let mut tries = 0;
    while in_u(u, y) || m.is_exceptional(y) {
        tries += 1;
        if tries > 1000 {
            return Vec::new();
        }
        y = rng.uniform(m.lo(), m.hi());
    }
    let budget = 50 * n_max;
    let mut path: Vec<f64> = Vec::with_capacity(n_max);
    let mut best: Vec<f64> = Vec::new();
    let mut options = vec![preimages(m, cyls, u, rng, y)];
    for _ in 0..budget {
        if path.len() == n_max {
            break;
        }
        match options.last_mut().and_then(Vec::pop) {
            Some(x) => {
                path.push(x);
                if path.len() > best.len() {
                    best.clone_from(&path);
                }
                let next = preimages(m, cyls, u, rng, x);
                options.push(next);
            }
            None => {
                options.pop();
                if path.pop().is_none() {
                    break;
                }
            }
        }
    }
    let mut out = Vec::with_capacity(best.len());
    let mut log_sum = 0.0;
    for (i, &x) in best.iter().enumerate() {
        let Ok(d) = m.deriv(x) else { break };
        log_sum += d.abs().ln();
        out.push(Segment { x, n: i + 1, log_deriv: log_sum });
    }
    out
}

/// Segments along a periodic orbit that avoids `U`, of every length up to
/// `n_max`, starting at `p`.
fn periodic_segments(m: &PiecewiseMap, u: &[Interval], p: &PeriodicPoint, n_max: usize) -> Vec<Segment> {
    let mut logs = Vec::with_capacity(p.period);
    let mut x = p.point;
    for _ in 0..p.period {
        if in_u(u, x) {
            return Vec::new();
        }
        let Ok((y, d)) = m.eval_with_deriv(x) else { return Vec::new() };
        logs.push(d.abs().ln());
        x = y;
    }
    let mut log_sum = 0.0;
    (0..n_max)
        .map(|k| {
            log_sum += logs[k % p.period];
            Segment {
                x: p.point,
                n: k + 1,
                log_deriv: log_sum,
            }
        })
        .collect()
}

/// Segments avoiding `U`: `cfg.samples` forward orbits, `cfg.samples`
/// backward chains, and the periodic orbits of period at most
/// `cfg.period_max` that avoid `U`.
///
/// Random backward chains drift towards repelling points with a single
/// admissible preimage branch, so on their own they overstate the rate;
/// periodic orbits supply the slowly expanding long segments.
pub fn harvest(m: &PiecewiseMap, u: &[Interval], cfg: &ManeConfig) -> Result<Vec<Segment>, ManeError> {
    let periodic = find_periodic_points(m, cfg.period_max, 1e-9)?;
    harvest_with(m, u, cfg, &periodic)
}

fn harvest_with(m: &PiecewiseMap, u: &[Interval], cfg: &ManeConfig, periodic: &[PeriodicPoint]) -> Result<Vec<Segment>, ManeError> {
    check_u(m, u)?;
    let n_max = cfg.n_max;
    if n_max == 0 || cfg.samples == 0 || cfg.period_max == 0 {
        return Err(ManeError::InvalidArgument("samples, n_max and period_max must be positive".into()));
    }
    let cyls = branch_cylinders(m)?;
    let per: Vec<Vec<Segment>> = (0..cfg.samples)
        .into_par_iter()
        .map(|i| {
            let mut rng = stream(cfg.seed, i, 0);
            let x0 = rng.uniform(m.lo(), m.hi());
            let mut segs = forward_segments(m, u, x0, n_max);
            let mut back = stream(cfg.seed, i, 1);
            segs.extend(backward_segments(m, &cyls, u, &mut back, n_max));
            segs
        })
        .collect();
    let mut out: Vec<Segment> = per.into_iter().flatten().collect();
    for p in periodic {
        out.extend(periodic_segments(m, u, p, n_max));
    }
    Ok(out)
}

pub fn mane_certificate(m: &PiecewiseMap, u: &[Interval], cfg: &ManeConfig) -> Result<ManeCertificate, ManeError> {
    check_u(m, u)?;
    if cfg.samples == 0 || cfg.period_max == 0 {
        return Err(ManeError::InvalidArgument("samples and period_max must be positive".into()));
    }
    let periodic = find_periodic_points(m, cfg.period_max, 1e-9)?;
    let periodic_violations: Vec<PeriodicPoint> = periodic
        .iter()
        .filter(|p| !in_u(u, p.point) && p.multiplier <= EXPANDING_THRESHOLD)
        .copied()
        .collect();

    let segs = harvest_with(m, u, cfg, &periodic)?;
    let longest = segs.iter().map(|s| s.n).max().unwrap_or(0);
    let fit_from = (cfg.n_max / 2).max(1).min(longest.max(1));
    let ln_lambda = segs
        .iter()
        .filter(|s| s.n >= fit_from)
        .map(|s| s.log_deriv / s.n as f64)
        .fold(f64::INFINITY, f64::min);
    let lambda = if ln_lambda.is_finite() { ln_lambda.exp() } else { f64::NAN };
    let ln_c = segs
        .iter()
        .map(|s| s.log_deriv - s.n as f64 * ln_lambda)
        .fold(f64::INFINITY, f64::min);
    let c = if ln_c.is_finite() { ln_c.exp() * C_MARGIN } else { f64::NAN };
    let valid = periodic_violations.is_empty() && lambda > 1.0 && c > 0.0;
    Ok(ManeCertificate {
        u: u.to_vec(),
        period_checked: cfg.period_max,
        periodic_violations,
        c,
        lambda,
        n_max: cfg.n_max,
        samples: cfg.samples,
        segments: segs.len(),
        fit_from,
        valid,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum GrowthStatus {
    Growth,
    Captured,
    Bounded,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GrowthRecord {
    pub status: GrowthStatus,
    /// Iterate at which the status was decided (`n_max` for bounded orbits).
    pub steps: usize,
    /// Running max of `|Df^n(x)|` over the steps taken.
    pub max_derivative: f64,
}

/// Follows the dithered orbit of `x` until `|Df^n(x)|` passes `1e6`, the
/// orbit enters `avoid`, or `n_max` steps pass. Meeting `C_f` counts as
/// entering `avoid`.
pub fn growth_test(m: &PiecewiseMap, x: f64, avoid: &[Interval], n_max: usize) -> GrowthRecord {
    let ln_threshold = GROWTH_THRESHOLD.ln();
    let mut orbit = Dithered::new(m, x);
    let mut log_d = 0.0;
    let mut log_max = 0.0_f64;
    let record = |status, steps, log_max: f64| GrowthRecord {
        status,
        steps,
        max_derivative: log_max.exp(),
    };
    for n in 1..=n_max {
        let Ok((y, d)) = orbit.step_with_deriv() else {
            return record(GrowthStatus::Captured, n - 1, log_max);
        };
        log_d += d.abs().ln();
        log_max = log_max.max(log_d);
        if log_max > ln_threshold {
            return record(GrowthStatus::Growth, n, log_max);
        }
        if in_u(avoid, y) {
            return record(GrowthStatus::Captured, n, log_max);
        }
    }
    record(GrowthStatus::Bounded, n_max, log_max)
}
