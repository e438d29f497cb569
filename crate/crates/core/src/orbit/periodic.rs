use serde::{Deserialize, Serialize};

use super::cylinder::{branch_cylinders, Cylinder};
use super::{OrbitError, MAX_CYLINDERS};
use crate::map::{LateralPoint, MapError, PiecewiseMap};

/// Offsets used to recognise a lateral fixed point of `f^l`.
pub const PERIODIC_LIKE_EPS: [f64; 3] = [1e-4, 1e-5, 1e-6];

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PeriodicLike {
    pub point: LateralPoint,
    pub period: usize,
    pub lateral_multiplier: f64,
    pub attracting: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PeriodicPoint {
    pub point: f64,
    pub period: usize,
    pub multiplier: f64,
}

/// `p, f(p), ..., f^n(p)` as lateral points.
pub fn lateral_orbit(m: &PiecewiseMap, p: LateralPoint, n: usize) -> Result<Vec<LateralPoint>, MapError> {
    let mut out = Vec::with_capacity(n + 1);
    out.push(p);
    let mut q = p;
    for _ in 0..n {
        q = m.step_lateral(q)?;
        out.push(q);
    }
    Ok(out)
}

impl PeriodicLike {
    /// Positions of the lateral cycle, starting at `point`.
    pub fn orbit(&self, m: &PiecewiseMap) -> Result<Vec<LateralPoint>, MapError> {
        let mut v = lateral_orbit(m, self.point, self.period)?;
        v.pop();
        Ok(v)
    }
}

/// Signed displacement `f^l(p ± e) - p` for each rung of the ladder.
fn ladder(m: &PiecewiseMap, p: LateralPoint, l: usize) -> Option<[f64; 3]> {
    let mut out = [0.0; 3];
    for (k, eps) in PERIODIC_LIKE_EPS.into_iter().enumerate() {
        let x = p.offset(eps);
        if !m.contains(x) {
            return None;
        }
        out[k] = m.iterate(x, l).ok()? - p.point;
    }
    Some(out)
}

/// Smallest `l <= l_max` with `f^l(x) -> p` from the side of `p` as `x -> p`
/// from that side.
///
/// On every rung the displacement must stay on the side of `p` and shrink
/// at least proportionally with the offset (ratio at most `0.1 (1 + tol)`
/// per decade). The multiplier is the ratio `|f^l(x) - p| / |x - p|`
/// extrapolated linearly in `e` to `e = 0`.
pub fn detect_periodic_like(m: &PiecewiseMap, p: LateralPoint, l_max: usize, tol: f64) -> Option<PeriodicLike> {
    let l_max = l_max.min(64);
    for l in 1..=l_max {
        let Some(d) = ladder(m, p, l) else { continue };
        let same_side = d.iter().all(|&v| v * p.side.sign() > 0.0);
        if !same_side {
            continue;
        }
        let shrinks = (0..2).all(|k| d[k + 1].abs() <= 0.1 * (1.0 + tol) * d[k].abs());
        if !shrinks {
            continue;
        }
        let r: Vec<f64> = d
            .iter()
            .zip(PERIODIC_LIKE_EPS)
            .map(|(v, e)| v.abs() / e)
            .collect();
        let (e1, e2) = (PERIODIC_LIKE_EPS[1], PERIODIC_LIKE_EPS[2]);
        let multiplier = (r[2] - (r[1] - r[2]) * e2 / (e1 - e2)).max(0.0);
        let attracting = if (multiplier - 1.0).abs() <= tol {
            converges_one_sided(m, p, l)
        } else {
            multiplier < 1.0
        };
        return Some(PeriodicLike {
            point: p,
            period: l,
            lateral_multiplier: multiplier,
            attracting,
        });
    }
    None
}

/// For neutral multipliers: does `f^{kl}(p ± 1e-3)` approach `p` monotonically
/// from the correct side?
fn converges_one_sided(m: &PiecewiseMap, p: LateralPoint, l: usize) -> bool {
    let mut x = p.offset(1e-3);
    let start = (x - p.point).abs();
    let mut prev = start;
    for _ in 0..10_000 {
        let Ok(y) = m.iterate(x, l) else { return false };
        let d = y - p.point;
        if d * p.side.sign() <= 0.0 || d.abs() > prev {
            return false;
        }
        prev = d.abs();
        x = y;
    }
    prev < 0.5 * start
}

fn sample_roots(m: &PiecewiseMap, c: &Cylinder, out: &mut Vec<f64>) {
    const INTERIOR: usize = 8;
    let g = |x: f64| c.eval(m, x).ok().map(|(y, _)| y - x);
    let mut pts: Vec<(f64, Option<f64>)> = Vec::with_capacity(INTERIOR + 2);
    let boundary = |x: f64| x == m.lo() || x == m.hi();
    pts.push((c.domain.lo, Some(c.image_lo.point - c.domain.lo)));
    for k in 1..=INTERIOR {
        let x = c.domain.at(k as f64 / (INTERIOR + 1) as f64);
        pts.push((x, g(x)));
    }
    pts.push((c.domain.hi, Some(c.image_hi.point - c.domain.hi)));
    for (k, &(x, v)) in pts.iter().enumerate() {
        if v == Some(0.0) && (k != 0 && k != pts.len() - 1 || boundary(x)) {
            out.push(x);
        }
    }
    for w in pts.windows(2) {
        let ((mut a, Some(ga)), (mut b, Some(_gb))) = (w[0], w[1]) else { continue };
        let gb = _gb;
        if ga == 0.0 || gb == 0.0 || (ga > 0.0) == (gb > 0.0) {
            continue;
        }
        let sa = ga > 0.0;
        for _ in 0..200 {
            let mid = 0.5 * (a + b);
            if mid <= a || mid >= b {
                break;
            }
            match g(mid) {
                Some(v) if v == 0.0 => {
                    a = mid;
                    b = mid;
                    break;
                }
                Some(v) if (v > 0.0) == sa => a = mid,
                Some(_) => b = mid,
                None => break,
            }
        }
        out.push(0.5 * (a + b));
    }
}

/// Periodic points of period at most `period_max`, with lowest period and
/// `|Df^period|`. Boundary fixed points of the ambient interval are included.
pub fn find_periodic_points(m: &PiecewiseMap, period_max: usize, tol: f64) -> Result<Vec<PeriodicPoint>, OrbitError> {
    if period_max > 24 {
        return Err(OrbitError::InvalidArgument("period_max must be at most 24".into()));
    }
    let accept = tol.max(1e-9);
    let mut found: Vec<PeriodicPoint> = Vec::new();
    let mut level = branch_cylinders(m)?;
    for n in 1..=period_max {
        if n > 1 {
            let mut next = Vec::with_capacity(level.len() * 2);
            for c in &level {
                next.extend(c.refine(m)?);
                if next.len() > MAX_CYLINDERS {
                    return Err(OrbitError::BranchExplosion { count: next.len() });
                }
            }
            level = next;
        }
        let mut roots = Vec::new();
        for c in &level {
            sample_roots(m, c, &mut roots);
        }
        for x in roots {
            let Ok(y) = m.iterate(x, n) else { continue };
            if (y - x).abs() > accept {
                continue;
            }
            if found.iter().any(|p| (p.point - x).abs() <= tol) {
                continue;
            }
            let period = (1..=n)
                .filter(|d| n % d == 0)
                .find(|&d| m.iterate(x, d).map(|y| (y - x).abs() <= accept).unwrap_or(false))
                .unwrap_or(n);
            let multiplier = m.deriv_product(x, period)?.log_abs.exp();
            found.push(PeriodicPoint {
                point: x,
                period,
                multiplier,
            });
        }
    }
    found.sort_by(|a, b| a.point.total_cmp(&b.point));
    Ok(found)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fixtures;

    fn counts(points: &[PeriodicPoint], n: usize) -> Vec<usize> {
        (1..=n).map(|p| points.iter().filter(|q| q.period == p).count()).collect()
    }

    #[test]
    fn tent_low_periods() {
        let pts = find_periodic_points(&fixtures::tent(), 2, 1e-9).unwrap();
        let expect = [(0.0, 1), (0.4, 2), (2.0 / 3.0, 1), (0.8, 2)];
        assert_eq!(pts.len(), 4);
        for (p, (x, per)) in pts.iter().zip(expect) {
            assert!((p.point - x).abs() < 1e-12, "{p:?}");
            assert_eq!(p.period, per);
            assert!((p.multiplier - 2f64.powi(per as i32)).abs() < 1e-9);
        }
    }

    #[test]
    fn doubling_lattice() {
        let pts = find_periodic_points(&fixtures::doubling(), 3, 1e-9).unwrap();
        // both boundary points are fixed
        assert_eq!(counts(&pts, 3), vec![2, 2, 6]);
        for n in 1..=3u32 {
            let q = (1u64 << n) - 1;
            for k in 0..=q {
                let x = k as f64 / q as f64;
                assert!(pts.iter().any(|p| (p.point - x).abs() < 1e-12), "missing {k}/{q}");
            }
        }
    }

    #[test]
    fn logistic_two_cycle() {
        let a: f64 = 3.2;
        let pts = find_periodic_points(&fixtures::logistic(a), 2, 1e-9).unwrap();
        let fixed: Vec<_> = pts.iter().filter(|p| p.period == 1).collect();
        assert_eq!(fixed.len(), 2);
        assert_eq!(fixed[0].point, 0.0);
        assert!((fixed[1].point - 0.6875).abs() < 1e-12);
        assert!(fixed.iter().all(|p| p.multiplier > 1.0));
        let two: Vec<_> = pts.iter().filter(|p| p.period == 2).collect();
        assert_eq!(two.len(), 2);
        let disc = ((a + 1.0) * (a - 3.0)).sqrt();
        assert!((two[0].point - (a + 1.0 - disc) / (2.0 * a)).abs() < 1e-12);
        assert!(two.iter().all(|p| p.multiplier < 1.0));
    }

    #[test]
    fn fixed_like_point_attracts_from_both_sides() {
        let m = fixtures::fixed_like();
        for p in m.critical_laterals() {
            let pl = detect_periodic_like(&m, p, 8, 0.05).unwrap();
            assert_eq!(pl.period, 1);
            assert!(pl.attracting);
            assert!((pl.lateral_multiplier - 0.5).abs() < 1e-6);
        }
    }

    #[test]
    fn superattracting_logistic_two() {
        let m = fixtures::logistic(2.0);
        let pl = detect_periodic_like(&m, LateralPoint::left(0.5), 8, 0.05).unwrap();
        assert_eq!(pl.period, 1);
        assert!(pl.lateral_multiplier.abs() < 1e-6);
        assert!(pl.attracting);
    }

    #[test]
    fn tent_critical_point_is_not_periodic_like() {
        assert!(detect_periodic_like(&fixtures::tent(), LateralPoint::left(0.5), 32, 0.05).is_none());
    }

    #[test]
    fn neutral_core_is_not_attracting() {
        let m = fixtures::neutral_core();
        let pl = detect_periodic_like(&m, LateralPoint::left(0.5), 4, 0.05);
        assert!(pl.is_none_or(|p| !p.attracting));
    }
}
