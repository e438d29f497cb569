use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::InductionError;
use crate::interval::Interval;
use crate::map::{LateralPoint, MapError, PiecewiseMap};
use crate::orbit::cylinder::Cylinder;
use crate::orbit::{check_cover_args, CoverBuilder, IntervalCover, OrbitError, DITHER, MAX_CYLINDERS};
use crate::rng::dither_stream;

/// Live cylinders kept per time step; the narrowest ones beyond this are
/// dropped and counted as uncovered.
pub const LIVE_CAP: usize = 1 << 12;

/// Cylinders narrower than this fraction of the ambient length are at
/// rounding resolution; they are dropped rather than kept as branches.
const MIN_WIDTH: f64 = 1e-12;

/// Largest accepted time horizon.
const MAX_HORIZON: usize = 100_000;

/// Relative tolerance for the full-Markov image check.
const MARKOV_TOL: f64 = 1e-6;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum InducedKind {
    FirstEntry { from: Interval },
    FirstReturn,
}

/// One branch: `f^time` maps `domain` monotonically onto `image`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct InducedBranch {
    pub domain: Interval,
    pub time: usize,
    pub orientation: f64,
    pub image: Interval,
}

impl InducedBranch {
    fn from_cylinder(c: &Cylinder) -> Self {
        InducedBranch {
            domain: c.domain,
            time: c.time,
            orientation: c.orientation,
            image: c.image(),
        }
    }

    /// The branch as a cylinder with lateral image endpoints.
    pub fn cylinder(&self) -> Cylinder {
        let (lo, hi) = if self.orientation > 0.0 {
            (LateralPoint::right(self.image.lo), LateralPoint::left(self.image.hi))
        } else {
            (LateralPoint::left(self.image.hi), LateralPoint::right(self.image.lo))
        };
        Cylinder {
            domain: self.domain,
            time: self.time,
            image_lo: lo,
            image_hi: hi,
            orientation: self.orientation,
        }
    }

    pub fn eval(&self, m: &PiecewiseMap, x: f64) -> Result<f64, MapError> {
        m.iterate(x, self.time)
    }

    /// `log |DF(x)|`.
    pub fn log_deriv(&self, m: &PiecewiseMap, x: f64) -> Result<f64, MapError> {
        Ok(m.deriv_product(x, self.time)?.log_abs)
    }

    /// Point of the domain mapped to `y`; image endpoints map to domain endpoints.
    pub fn inverse(&self, m: &PiecewiseMap, y: f64) -> f64 {
        let (at_lo, at_hi) = if self.orientation > 0.0 {
            (self.domain.lo, self.domain.hi)
        } else {
            (self.domain.hi, self.domain.lo)
        };
        if y <= self.image.lo {
            at_lo
        } else if y >= self.image.hi {
            at_hi
        } else if self.time == 0 {
            y
        } else {
            self.cylinder().preimage(m, y)
        }
    }

    /// `|image| / |base|`.
    pub fn image_ratio(&self, base: Interval) -> f64 {
        self.image.len() / base.len()
    }
}

/// First-entry or first-return map to `base`, as far as discovered.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InducedMap {
    pub base: Interval,
    pub kind: InducedKind,
    /// Sorted by domain.
    pub branches: Vec<InducedBranch>,
    /// Time horizon of the search.
    pub truncation: usize,
    /// Fraction of the domain of definition covered by branches.
    pub coverage: f64,
    /// Length discarded by the live-cylinder cap and the width floor.
    pub dropped: f64,
    /// Branches whose image is not all of `base`.
    pub markov_failures: usize,
    /// Branches whose probe orbits contradict the entry or return time.
    pub probe_failures: usize,
}

impl InducedMap {
    pub fn full_markov(&self) -> bool {
        self.markov_failures == 0
    }

    /// Interval on which the induced map is being defined.
    pub fn source(&self) -> Interval {
        match self.kind {
            InducedKind::FirstEntry { from } => from,
            InducedKind::FirstReturn => self.base,
        }
    }

    pub fn branch_at(&self, x: f64) -> Option<&InducedBranch> {
        let k = self.branches.partition_point(|b| b.domain.hi <= x);
        self.branches.get(k).filter(|b| b.domain.contains(x))
    }

    /// `F(x)` and `log |DF(x)|`, or `None` off the discovered domain.
    pub fn eval(&self, m: &PiecewiseMap, x: f64) -> Option<(f64, f64)> {
        let b = self.branch_at(x)?;
        let d = m.deriv_product(x, b.time).ok()?;
        Some((b.eval(m, x).ok()?, d.log_abs))
    }

    pub fn min_time(&self) -> Option<usize> {
        self.branches.iter().map(|b| b.time).min()
    }

    /// Visit cover, on the grid of `base`, of a dithered orbit of `F` over
    /// iterates `burn_in .. burn_in + length`. The orbit stops early when a
    /// perturbed iterate lands off the discovered domain.
    pub fn omega_cover(
        &self,
        m: &PiecewiseMap,
        x: f64,
        burn_in: usize,
        length: usize,
        resolution: f64,
    ) -> Result<IntervalCover, InductionError> {
        check_cover_args(burn_in, length, resolution)?;
        if self.branch_at(x).is_none() {
            return Err(OrbitError::DegenerateOrbit { index: 0 }.into());
        }
        let base = self.base;
        let amplitude = DITHER * base.len();
        let mut noise = dither_stream(x);
        let mut builder = CoverBuilder::new(base, resolution);
        let mut x = x;
        for i in 0..burn_in + length {
            if i >= burn_in {
                builder.add(x);
            }
            let Some(b) = self.branch_at(x) else { break };
            let Ok(y) = b.eval(m, x) else { break };
            x = (y + amplitude * noise.symmetric()).clamp(base.lo, base.hi);
            if self.branch_at(x).is_none() {
                x = (y + amplitude * noise.symmetric()).clamp(base.lo, base.hi);
            }
            if i < burn_in && self.branch_at(x).is_none() {
                return Err(OrbitError::DegenerateOrbit { index: i + 1 }.into());
            }
        }
        Ok(builder.finish())
    }
}

/// First entry of `from` into `target` within `t_max` steps. Points already
/// in `target` form a single time-0 branch.
pub fn first_entry(m: &PiecewiseMap, from: Interval, target: Interval, t_max: usize) -> Result<InducedMap, InductionError> {
    check(m, from, target, t_max)?;
    if !from.contains_interval(&target) {
        return Err(InductionError::InvalidArgument("target must lie inside the source interval".into()));
    }
    let tol = tol(m);
    let mut found = Vec::new();
    let mut live = Vec::new();
    for piece in Cylinder::identity(from).split(m, &[target.lo, target.hi]) {
        if inside(&piece, target, tol) {
            found.push(InducedBranch::from_cylinder(&piece));
        } else {
            live.push(piece);
        }
    }
    finish(m, InducedKind::FirstEntry { from }, target, live, found, t_max)
}

/// First return to `base` within `t_max` steps.
pub fn first_return(m: &PiecewiseMap, base: Interval, t_max: usize) -> Result<InducedMap, InductionError> {
    check(m, base, base, t_max)?;
    finish(m, InducedKind::FirstReturn, base, vec![Cylinder::identity(base)], Vec::new(), t_max)
}

fn check(m: &PiecewiseMap, from: Interval, target: Interval, t_max: usize) -> Result<(), InductionError> {
    if t_max > MAX_HORIZON {
        return Err(InductionError::InvalidArgument("t_max must not exceed 1e5".into()));
    }
    for iv in [from, target] {
        if iv.is_empty() || !m.ambient().contains_interval(&iv) {
            return Err(InductionError::InvalidArgument(format!(
                "interval ({}, {}) must be nontrivial and inside the ambient interval",
                iv.lo, iv.hi
            )));
        }
    }
    Ok(())
}

fn tol(m: &PiecewiseMap) -> f64 {
    1e-12 * (m.hi() - m.lo())
}

fn inside(c: &Cylinder, target: Interval, tol: f64) -> bool {
    let img = c.image();
    img.lo >= target.lo - tol && img.hi <= target.hi + tol
}

fn finish(
    m: &PiecewiseMap,
    kind: InducedKind,
    target: Interval,
    mut live: Vec<Cylinder>,
    mut found: Vec<InducedBranch>,
    t_max: usize,
) -> Result<InducedMap, InductionError> {
    let tol = tol(m);
    let mut dropped = 0.0;
    for _ in 1..=t_max {
        if live.is_empty() {
            break;
        }
        let step: Vec<(Vec<InducedBranch>, Vec<Cylinder>)> = live
            .par_iter()
            .map(|c| -> Result<_, MapError> {
                let mut hits = Vec::new();
                let mut rest = Vec::new();
                for piece in c.refine(m)? {
                    for q in piece.split(m, &[target.lo, target.hi]) {
                        if inside(&q, target, tol) {
                            hits.push(InducedBranch::from_cylinder(&q));
                        } else {
                            rest.push(q);
                        }
                    }
                }
                Ok((hits, rest))
            })
            .collect::<Result<_, _>>()?;
        live = Vec::new();
        let floor = MIN_WIDTH * (m.hi() - m.lo());
        for (hits, rest) in step {
            for b in hits {
                if b.domain.len() < floor {
                    dropped += b.domain.len();
                } else {
                    found.push(b);
                }
            }
            for c in rest {
                if c.domain.len() < floor {
                    dropped += c.domain.len();
                } else {
                    live.push(c);
                }
            }
        }
        if found.len() > MAX_CYLINDERS {
            return Err(InductionError::BranchExplosion { count: found.len() });
        }
        if live.len() > LIVE_CAP {
            live.sort_by(|a, b| b.domain.len().total_cmp(&a.domain.len()).then(a.domain.lo.total_cmp(&b.domain.lo)));
            dropped += live[LIVE_CAP..].iter().map(|c| c.domain.len()).sum::<f64>();
            live.truncate(LIVE_CAP);
            live.sort_by(|a, b| a.domain.lo.total_cmp(&b.domain.lo));
        }
    }
    found.sort_by(|a, b| a.domain.lo.total_cmp(&b.domain.lo));
    let source = match kind {
        InducedKind::FirstEntry { from } => from,
        InducedKind::FirstReturn => target,
    };
    let covered: f64 = found.iter().map(|b| b.domain.len()).sum();
    let markov_failures = found
        .iter()
        .filter(|b| (1.0 - b.image_ratio(target)).abs() > MARKOV_TOL)
        .count();
    let entry = matches!(kind, InducedKind::FirstEntry { .. });
    let probe_failures = found
        .par_iter()
        .filter(|b| !probes_agree(m, b, target, entry, tol))
        .count();
    Ok(InducedMap {
        base: target,
        kind,
        branches: found,
        truncation: t_max,
        coverage: (covered / source.len()).min(1.0),
        dropped,
        markov_failures,
        probe_failures,
    })
}

/// Three interior probes must land in `target` exactly at the branch time
/// and stay out of it before (from time 1 for returns, time 0 for entries).
fn probes_agree(m: &PiecewiseMap, b: &InducedBranch, target: Interval, entry: bool, tol: f64) -> bool {
    let strictly_in = |y: f64| y > target.lo + tol && y < target.hi - tol;
    [0.25, 0.5, 0.75].into_iter().all(|t| {
        let mut y = b.domain.at(t);
        for j in 0..b.time {
            if (j > 0 || entry) && strictly_in(y) {
                return false;
            }
            match m.eval(y) {
                Ok(v) => y = v,
                Err(_) => return false,
            }
        }
        y >= target.lo - tol && y <= target.hi + tol
    })
}
