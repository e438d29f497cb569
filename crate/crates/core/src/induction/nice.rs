use crate::interval::Interval;
use crate::map::{LateralPoint, PiecewiseMap};
use crate::orbit::find_periodic_points;

use super::InductionError;

/// Relative tolerance for recognising that an orbit has closed up, and for
/// treating points within rounding distance of an endpoint as outside.
const CLOSE_TOL: f64 = 1e-10;

/// Highest period used for candidate endpoints.
const CANDIDATE_PERIOD: usize = 10;

/// Whether the orbits of `f(a±)` and `f(b±)` avoid the open interval for
/// `horizon` iterates.
///
/// Floating-point orbits of periodic values drift off the cycle, so an orbit
/// that comes back within `1e-10 (hi - lo)` of one of its own earlier points
/// is treated as periodic from there on. Orbits stopped by `C_f` avoid the
/// interval from then on.
pub fn is_nice(m: &PiecewiseMap, j: Interval, horizon: usize) -> bool {
    if horizon == 0 {
        return true;
    }
    let tol = CLOSE_TOL * (m.hi() - m.lo());
    let inside = |y: f64| y > j.lo + tol && y < j.hi - tol;
    let starts = [
        LateralPoint::left(j.lo),
        LateralPoint::right(j.lo),
        LateralPoint::left(j.hi),
        LateralPoint::right(j.hi),
    ];
    starts.into_iter().all(|p| {
        let Ok(v) = m.eval_lateral(p) else { return true };
        orbit_points(m, v, horizon, tol).into_iter().all(|y| !inside(y))
    })
}

/// Orbit of `v` up to the horizon, closing up, or an exceptional hit.
fn orbit_points(m: &PiecewiseMap, v: f64, horizon: usize, tol: f64) -> Vec<f64> {
    let mut seen: Vec<f64> = Vec::with_capacity(horizon.min(4096));
    let mut y = v;
    for _ in 0..horizon {
        if seen.iter().any(|&s| (s - y).abs() <= tol) {
            break;
        }
        seen.push(y);
        match m.eval(y) {
            Ok(next) => y = next,
            Err(_) => break,
        }
    }
    seen
}

/// Orbit points of the lateral values at `x`.
fn lateral_orbits(m: &PiecewiseMap, x: f64, horizon: usize, tol: f64) -> Vec<f64> {
    let mut out = Vec::new();
    for p in [LateralPoint::left(x), LateralPoint::right(x)] {
        if let Ok(v) = m.eval_lateral(p) {
            out.extend(orbit_points(m, v, horizon, tol));
        }
    }
    out
}

/// Nice interval around `p` with endpoints within `delta 2^-k` of `p`, for the
/// first `k = 0..=20` that admits one; the widest candidate at that level.
///
/// Candidate endpoints are periodic points of period at most 10, the
/// exceptional set and the ambient endpoints: intervals cut out by such
/// points between points of their own orbits are nice up to rounding.
pub fn find_nice_interval(m: &PiecewiseMap, p: f64, delta: f64, horizon: usize) -> Result<Option<Interval>, InductionError> {
    if !(delta > 0.0) {
        return Err(InductionError::InvalidArgument("delta must be positive".into()));
    }
    let near_edge = m
        .exceptional()
        .iter()
        .chain([m.lo(), m.hi()].iter())
        .any(|&c| (c - p).abs() < delta);
    if near_edge {
        return Err(InductionError::InvalidArgument(format!(
            "p = {p} lies within delta of C_f or the ambient boundary"
        )));
    }
    let mut candidates: Vec<f64> = find_periodic_points(m, CANDIDATE_PERIOD, 1e-12)?
        .iter()
        .map(|q| q.point)
        .collect();
    candidates.extend_from_slice(m.exceptional());
    candidates.extend([m.lo(), m.hi()]);
    candidates.sort_by(f64::total_cmp);
    candidates.dedup();
    let tol = CLOSE_TOL * (m.hi() - m.lo());
    let window: Vec<f64> = candidates.into_iter().filter(|&x| (x - p).abs() < delta).collect();
    // an endpoint a admits b only below the first orbit point of f(a±) to
    // the right of a, and symmetrically for b
    let reach: Vec<(f64, f64, f64)> = window
        .iter()
        .map(|&x| {
            let orbit = lateral_orbits(m, x, horizon, tol);
            let right = orbit.iter().copied().filter(|&y| y > x + tol).fold(f64::INFINITY, f64::min);
            let left = orbit.iter().copied().filter(|&y| y < x - tol).fold(f64::NEG_INFINITY, f64::max);
            (x, left, right)
        })
        .collect();
    for k in 0..=20 {
        let d = delta * 0.5f64.powi(k);
        let left: Vec<_> = reach.iter().filter(|r| r.0 > p - d && r.0 < p && r.2 + tol >= p).collect();
        let right: Vec<_> = reach.iter().filter(|r| r.0 > p && r.0 < p + d && r.1 - tol <= p).collect();
        let mut pairs: Vec<Interval> = Vec::new();
        for a in &left {
            for b in &right {
                if b.0 <= a.2 + tol && a.0 >= b.1 - tol {
                    pairs.push(Interval::new(a.0, b.0));
                }
            }
        }
        pairs.sort_by(|x, y| y.len().total_cmp(&x.len()).then(x.lo.total_cmp(&y.lo)));
        if let Some(j) = pairs.into_iter().find(|&j| is_nice(m, j, horizon)) {
            return Ok(Some(j));
        }
    }
    Ok(None)
}
