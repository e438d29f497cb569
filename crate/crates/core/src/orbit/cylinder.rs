//! Monotone cylinders of iterates.
//!
//! A cylinder is an open interval on which `f^t` is continuous and strictly
//! monotone. Its image endpoints are carried as lateral points, so images of
//! cylinders adjacent to `C_f` are exact and never evaluated at `C_f` itself.

use crate::interval::Interval;
use crate::map::{LateralPoint, MapError, PiecewiseMap, Side};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Cylinder {
    pub domain: Interval,
    pub time: usize,
    /// `f^time(domain.lo+)`.
    pub image_lo: LateralPoint,
    /// `f^time(domain.hi-)`.
    pub image_hi: LateralPoint,
    /// Sign of `Df^time` on the domain.
    pub orientation: f64,
}

impl Cylinder {
    /// Time-0 cylinder: the identity on `domain`.
    pub fn identity(domain: Interval) -> Self {
        Cylinder {
            domain,
            time: 0,
            image_lo: LateralPoint::right(domain.lo),
            image_hi: LateralPoint::left(domain.hi),
            orientation: 1.0,
        }
    }

    pub fn image(&self) -> Interval {
        Interval::hull(self.image_lo.point, self.image_hi.point)
    }

    /// Lateral image of the domain endpoint mapped to the low end of the image.
    fn image_low_end(&self) -> LateralPoint {
        if self.orientation > 0.0 {
            self.image_lo
        } else {
            self.image_hi
        }
    }

    fn image_high_end(&self) -> LateralPoint {
        if self.orientation > 0.0 {
            self.image_hi
        } else {
            self.image_lo
        }
    }

    /// `f^time(x)` and `Df^time(x)` for an interior point.
    pub fn eval(&self, m: &PiecewiseMap, x: f64) -> Result<(f64, f64), MapError> {
        let mut y = x;
        let mut d = 1.0;
        for _ in 0..self.time {
            let (next, dy) = m.eval_with_deriv(y)?;
            d *= dy;
            y = next;
        }
        Ok((y, d))
    }

    /// `log |Df^time(x)|`, safe for long times.
    pub fn log_deriv(&self, m: &PiecewiseMap, x: f64) -> Result<f64, MapError> {
        Ok(m.deriv_product(x, self.time)?.log_abs)
    }

    /// Domain point whose image is `target`, which must lie in the open image.
    pub fn preimage(&self, m: &PiecewiseMap, target: f64) -> f64 {
        solve_monotone(m, self, target)
    }

    /// Splits at interior image values `cuts` (any order; values outside the
    /// open image are ignored). Returned pieces are in domain order.
    pub fn split(&self, m: &PiecewiseMap, cuts: &[f64]) -> Vec<Cylinder> {
        let img = self.image();
        let mut inner: Vec<f64> = cuts.iter().copied().filter(|&c| img.contains(c)).collect();
        if inner.is_empty() {
            return vec![*self];
        }
        inner.sort_by(f64::total_cmp);
        inner.dedup();
        // image values listed in domain order
        if self.orientation < 0.0 {
            inner.reverse();
        }
        let mut out = Vec::with_capacity(inner.len() + 1);
        let mut lo = self.domain.lo;
        let mut lo_img = self.image_lo;
        for c in inner {
            let s = self.preimage(m, c);
            // f^t(s-) approaches c from below when increasing
            let before = if self.orientation > 0.0 { Side::Left } else { Side::Right };
            let piece_hi = LateralPoint::new(c, before);
            if s > lo {
                out.push(Cylinder {
                    domain: Interval::new(lo, s),
                    image_lo: lo_img,
                    image_hi: piece_hi,
                    ..*self
                });
            }
            lo = s;
            lo_img = LateralPoint::new(c, before.flip());
        }
        if self.domain.hi > lo {
            out.push(Cylinder {
                domain: Interval::new(lo, self.domain.hi),
                image_lo: lo_img,
                image_hi: self.image_hi,
                ..*self
            });
        }
        out
    }

    /// One more iterate. The open image must avoid `C_f`.
    pub fn advance(&self, m: &PiecewiseMap) -> Result<Cylinder, MapError> {
        let lo = m.step_lateral(self.image_lo)?;
        let hi = m.step_lateral(self.image_hi)?;
        let b = m.lateral_branch_index(self.image_low_end())?;
        Ok(Cylinder {
            domain: self.domain,
            time: self.time + 1,
            image_lo: lo,
            image_hi: hi,
            orientation: self.orientation * m.branches()[b].orientation,
        })
    }

    /// Splits at `C_f` and advances every piece.
    pub fn refine(&self, m: &PiecewiseMap) -> Result<Vec<Cylinder>, MapError> {
        self.split(m, m.exceptional())
            .into_iter()
            .map(|c| c.advance(m))
            .collect()
    }

    /// The low image end as seen from inside the image, used to pick branches.
    pub fn image_low_lateral(&self) -> LateralPoint {
        self.image_low_end()
    }

    pub fn image_high_lateral(&self) -> LateralPoint {
        self.image_high_end()
    }
}

/// Time-1 cylinders: the branches of `f`.
pub fn branch_cylinders(m: &PiecewiseMap) -> Result<Vec<Cylinder>, MapError> {
    m.branches()
        .iter()
        .map(|b| Cylinder::identity(b.domain).advance(m))
        .collect()
}

/// Root of `f^t(x) = target` on a monotone cylinder: Newton steps kept
/// inside a shrinking bracket, bisection otherwise.
fn solve_monotone(m: &PiecewiseMap, cyl: &Cylinder, target: f64) -> f64 {
    let (mut a, mut b) = (cyl.domain.lo, cyl.domain.hi);
    let s = cyl.orientation;
    // g(x) = s (f^t(x) - target) is increasing, negative at a, positive at b
    let mut x = {
        let img = cyl.image();
        let t = (target - img.lo) / img.len();
        let t = if s > 0.0 { t } else { 1.0 - t };
        cyl.domain.at(t.clamp(0.0, 1.0))
    };
    for _ in 0..200 {
        if !(x > a && x < b) {
            x = 0.5 * (a + b);
        }
        if x <= a || x >= b {
            break;
        }
        match cyl.eval(m, x) {
            Ok((y, d)) => {
                let g = s * (y - target);
                if g == 0.0 {
                    return x;
                }
                if g < 0.0 {
                    a = x;
                } else {
                    b = x;
                }
                let newton = x - (y - target) / d;
                if (newton - x).abs() <= 4.0 * f64::EPSILON * x.abs().max(f64::MIN_POSITIVE) {
                    // converged to rounding level
                    return if newton > a && newton < b { newton } else { x };
                }
                x = if newton > a && newton < b && d != 0.0 && d.is_finite() {
                    newton
                } else {
                    0.5 * (a + b)
                };
            }
            Err(_) => {
                // an intermediate iterate landed on C_f through rounding
                x = 0.5 * (a + b);
                if x == a || x == b {
                    break;
                }
                let nudge = (b - a) * 1e-3;
                x += nudge;
            }
        }
        if b - a <= 2.0 * f64::EPSILON * a.abs().max(b.abs()).max(f64::MIN_POSITIVE) {
            break;
        }
    }
    0.5 * (a + b)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fixtures;

    #[test]
    fn doubling_cylinders_are_dyadic() {
        let m = fixtures::doubling();
        let mut level = branch_cylinders(&m).unwrap();
        for _ in 0..2 {
            level = level.iter().flat_map(|c| c.refine(&m).unwrap()).collect();
        }
        assert_eq!(level.len(), 8);
        for (k, c) in level.iter().enumerate() {
            assert!((c.domain.lo - k as f64 / 8.0).abs() < 1e-15);
            assert_eq!(c.image(), Interval::new(0.0, 1.0));
            assert_eq!(c.time, 3);
        }
    }

    #[test]
    fn tent_orientations_alternate() {
        let m = fixtures::tent();
        let level: Vec<_> = branch_cylinders(&m)
            .unwrap()
            .iter()
            .flat_map(|c| c.refine(&m).unwrap())
            .collect();
        let o: Vec<_> = level.iter().map(|c| c.orientation).collect();
        assert_eq!(o, vec![1.0, -1.0, 1.0, -1.0]);
        let (y, d) = level[1].eval(&m, 0.3).unwrap();
        assert!((y - 0.8).abs() < 1e-15 && d == -4.0);
    }

    #[test]
    fn preimage_on_nonlinear_cylinder() {
        let m = fixtures::logistic(4.0);
        let c = branch_cylinders(&m).unwrap()[0];
        let x = c.preimage(&m, 0.75);
        assert!((m.eval(x).unwrap() - 0.75).abs() < 1e-15);
        assert!((x - 0.25).abs() < 1e-15);
    }
}
