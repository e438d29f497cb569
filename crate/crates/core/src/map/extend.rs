//! Extension of a map on `[lo, hi]` to `[lo - w, hi + w]`, `w = hi - lo`.
//!
//! Each collar carries a monotone cubic Hermite curve that matches `f` to
//! first order at the boundary and sends the outer endpoint to `lo - w` or
//! `hi + w`. When points just outside a boundary are pushed further out
//! (the boundary lies on an expanding outside-to-outside cycle) the outer
//! endpoints are made attracting; otherwise they are repelling and collar
//! orbits drift back to `[lo, hi]`. The result is checked by iterating a
//! grid of collar points.

use super::{compile, LateralPoint, MapError, PiecewiseMap, RawBranch, Side};
use crate::expr::{BinaryOp, Expr};
use crate::interval::Interval;

const ATTRACTING_SLOPE: f64 = 0.5;
const REPELLING_SLOPE: f64 = 1.5;
const CHECK_POINTS: usize = 512;
const CHECK_STEPS: usize = 20_000;

/// `c0 + s (c1 + s (c2 + s c3))` with `s = (x - anchor) / span`, exactly
/// `value` at the anchor.
fn hermite(anchor: f64, far: f64, value: f64, slope: f64, far_value: f64, far_slope: f64) -> Expr {
    let span = far - anchor;
    let (d0, d1) = (span * slope, span * far_slope);
    let c = [
        value,
        d0,
        3.0 * (far_value - value) - 2.0 * d0 - d1,
        2.0 * (value - far_value) + d0 + d1,
    ];
    let s = Expr::binary(
        BinaryOp::Div,
        Expr::binary(BinaryOp::Sub, Expr::Var, Expr::Const(anchor)),
        Expr::Const(span),
    );
    let mut acc = Expr::Const(c[3]);
    for &ck in c[..3].iter().rev() {
        acc = Expr::binary(
            BinaryOp::Add,
            Expr::Const(ck),
            Expr::binary(BinaryOp::Mul, s.clone(), acc),
        );
    }
    acc
}

struct Collar {
    inner: f64,
    outer: f64,
    value: f64,
    slope: f64,
    target: f64,
    target_slope: f64,
}

impl Collar {
    /// One cubic if the Fritsch-Carlson ratios allow it, otherwise a short
    /// inner piece that follows the tangent to half height, then a second
    /// cubic to the outer endpoint. Both pieces have ratios below 3.
    fn pieces(&self) -> Vec<(Interval, Expr)> {
        let width = self.outer - self.inner;
        let delta = self.target - self.value;
        let secant = delta / width;
        let alpha = self.slope / secant;
        if alpha < 3.0 {
            let e = hermite(self.outer, self.inner, self.target, self.target_slope, self.value, self.slope);
            return vec![(Interval::hull(self.inner, self.outer), e)];
        }
        let tau = 0.5 * delta / self.slope;
        let knot = self.inner + tau;
        let knot_value = self.value + 0.5 * delta;
        let knot_slope = (self.target - knot_value) / (self.outer - knot);
        let first = hermite(self.inner, knot, self.value, self.slope, knot_value, knot_slope);
        let second = hermite(self.outer, knot, self.target, self.target_slope, knot_value, knot_slope);
        vec![
            (Interval::hull(self.inner, knot), first),
            (Interval::hull(knot, self.outer), second),
        ]
    }
}

/// True when points just outside `b` are carried to points just outside
/// `[lo, hi]` along a cycle with multiplier above one.
fn boundary_expels(m: &PiecewiseMap, start: LateralPoint) -> Result<bool, MapError> {
    let (lo, hi) = (m.lo, m.hi);
    // The outside side of a boundary is the complement of the usual lateral
    // side, so the branch used is the one inside [lo, hi].
    let inside = |p: LateralPoint| LateralPoint::new(p.point, p.side.flip());
    let mut p = start;
    let mut log_mult = 0.0;
    let mut visited = Vec::new();
    loop {
        if let Some(k) = visited.iter().position(|q: &(LateralPoint, f64)| q.0 == p) {
            return Ok(log_mult - visited[k].1 > 0.0);
        }
        visited.push((p, log_mult));
        let q = inside(p);
        let i = m.lateral_branch_index(q)?;
        let b = &m.branches[i];
        let y = b.eval(q.point).map_err(|source| MapError::Eval { branch: i, source })?;
        let d = b.deriv(q.point).map_err(|source| MapError::Eval { branch: i, source })?;
        log_mult += d.abs().ln();
        let side = if d > 0.0 { p.side } else { p.side.flip() };
        let outward = (y >= hi && side == Side::Right) || (y <= lo && side == Side::Left);
        if !outward {
            return Ok(false);
        }
        p = LateralPoint::new(if y >= hi { hi } else { lo }, side);
    }
}

pub fn extend_map(m: &PiecewiseMap) -> Result<PiecewiseMap, MapError> {
    let (lo, hi) = (m.lo, m.hi);
    let w = hi - lo;
    let (ext_lo, ext_hi) = (lo - w, hi + w);

    let mut collars = Vec::new();
    for (boundary, outer, inside_side, outside_side) in [
        (lo, ext_lo, Side::Right, Side::Left),
        (hi, ext_hi, Side::Left, Side::Right),
    ] {
        let q = LateralPoint::new(boundary, inside_side);
        let value = m.eval_lateral(q)?;
        let slope = m.deriv_lateral(q)?;
        if slope == 0.0 || !slope.is_finite() {
            return Err(MapError::Extension(format!(
                "boundary derivative at {boundary} is {slope}"
            )));
        }
        // increasing collars keep their outer endpoint, decreasing ones swap
        let towards = (outer - boundary).signum() * slope.signum();
        let target = if towards > 0.0 { ext_hi } else { ext_lo };
        let magnitude = if boundary_expels(m, LateralPoint::new(boundary, outside_side))? {
            ATTRACTING_SLOPE
        } else {
            REPELLING_SLOPE
        };
        collars.push(Collar {
            inner: boundary,
            outer,
            value,
            slope,
            target,
            target_slope: magnitude * slope.signum(),
        });
    }

    let mut raw = Vec::new();
    let mut left: Vec<_> = collars[0].pieces();
    left.sort_by(|a, b| a.0.lo.total_cmp(&b.0.lo));
    for (domain, e) in left {
        raw.push(RawBranch {
            domain,
            source: e.to_string(),
            expr: e,
            collar: true,
        });
    }
    for b in &m.branches {
        raw.push(RawBranch {
            domain: b.domain,
            source: b.source.clone(),
            expr: b.expr.clone(),
            collar: false,
        });
    }
    for (domain, e) in collars[1].pieces() {
        raw.push(RawBranch {
            domain,
            source: e.to_string(),
            expr: e,
            collar: true,
        });
    }
    let ext = compile(ext_lo, ext_hi, raw, m.exceptional.clone(), &[])?;
    check_collars(&ext, lo, hi)?;
    Ok(ext)
}

/// Every collar point must enter `[lo, hi]`, converge to it, or converge to
/// the outer endpoints.
fn check_collars(ext: &PiecewiseMap, lo: f64, hi: f64) -> Result<(), MapError> {
    let w = hi - lo;
    let core = Interval::new(lo, hi);
    let outer = [ext.lo, ext.hi];
    for (a, b) in [(ext.lo, lo), (hi, ext.hi)] {
        for k in 1..CHECK_POINTS {
            let x0 = a + (b - a) * k as f64 / CHECK_POINTS as f64;
            let mut x = x0;
            let mut settled = false;
            for _ in 0..CHECK_STEPS {
                if core.contains_closed(x) || outer.iter().any(|&e| (x - e).abs() <= 1e-12 * w) {
                    settled = true;
                    break;
                }
                x = ext.eval(x)?;
            }
            if !settled && core.distance_to(x) > 1e-9 * w {
                return Err(MapError::Extension(format!(
                    "collar point {x0} neither enters [{lo}, {hi}] nor reaches the outer endpoints"
                )));
            }
        }
    }
    Ok(())
}
