//! Piecewise smooth interval maps with a finite exceptional set.
//!
//! A map is given by branches on open intervals whose closures tile the
//! ambient interval `[lo, hi]`. Interior branch endpoints form the
//! exceptional set `C_f`; the map is never evaluated there, only its one-sided
//! limits (lateral values) are. Branch expressions are differentiated
//! symbolically when the map is built.

mod extend;
mod validate;

use std::path::Path;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::expr::{self, EvalError, Expr, ParseError};
use crate::interval::Interval;

pub use extend::extend_map;
pub use validate::{validate_nonflat, BranchValidation, PointValidation, ValidationReport};

/// Grid used at build time for range, derivative and nonlinearity checks.
pub const BUILD_GRID: usize = 1024;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BranchSpec {
    pub domain: [f64; 2],
    pub expr: String,
}

fn default_ambient() -> [f64; 2] {
    [0.0, 1.0]
}

/// Map-definition document.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MapSpec {
    #[serde(default = "default_ambient")]
    pub ambient: [f64; 2],
    pub branches: Vec<BranchSpec>,
}

impl MapSpec {
    pub fn new(ambient: [f64; 2], branches: &[((f64, f64), &str)]) -> Self {
        MapSpec {
            ambient,
            branches: branches
                .iter()
                .map(|&((a, b), e)| BranchSpec {
                    domain: [a, b],
                    expr: e.to_string(),
                })
                .collect(),
        }
    }

    pub fn from_json(text: &str) -> Result<Self, MapError> {
        serde_json::from_str(text).map_err(|e| MapError::Json(e.to_string()))
    }

    pub fn from_file(path: &Path) -> Result<Self, MapError> {
        let text = std::fs::read_to_string(path).map_err(|e| MapError::Io {
            path: path.display().to_string(),
            message: e.to_string(),
        })?;
        Self::from_json(&text)
    }
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum MapError {
    #[error("cannot read {path}: {message}")]
    Io { path: String, message: String },
    #[error("malformed map definition: {0}")]
    Json(String),
    #[error("map has no branches")]
    NoBranches,
    #[error("bad ambient interval [{lo}, {hi}]")]
    BadAmbient { lo: f64, hi: f64 },
    #[error("branch {branch} has an empty or non-finite domain")]
    EmptyBranch { branch: usize },
    #[error("branch domains do not tile the ambient interval: gap between {left} and {right}")]
    TilingGap { left: f64, right: f64 },
    #[error("branch domains do not tile the ambient interval: overlap between {left} and {right}")]
    TilingOverlap { left: f64, right: f64 },
    #[error("branch {branch}: {source}")]
    Parse {
        branch: usize,
        #[source]
        source: ParseError,
    },
    #[error("branch {branch}: {source}")]
    Eval {
        branch: usize,
        #[source]
        source: EvalError,
    },
    #[error("branch {branch} maps {x} to {value}, outside the ambient interval")]
    BranchOutOfRange { branch: usize, x: f64, value: f64 },
    #[error("derivative of branch {branch} vanishes or changes sign near {x}")]
    ZeroDerivative { branch: usize, x: f64 },
    #[error("{0} is an exceptional point")]
    ExceptionalPoint(f64),
    #[error("{0} is outside the ambient interval")]
    OutOfRange(f64),
    #[error("iterate {0} of the orbit lies on the exceptional set")]
    OrbitHitsExceptional(usize),
    #[error("lateral point ({point}, {side:?}) has no branch on that side")]
    InvalidLateral { point: f64, side: Side },
    #[error("extension failed: {0}")]
    Extension(String),
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
}

/// Approach side of a lateral point.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Side {
    Left,
    Right,
}

impl Side {
    pub fn flip(self) -> Side {
        match self {
            Side::Left => Side::Right,
            Side::Right => Side::Left,
        }
    }

    /// -1 for left, +1 for right.
    pub fn sign(self) -> f64 {
        match self {
            Side::Left => -1.0,
            Side::Right => 1.0,
        }
    }

    pub fn symbol(self) -> &'static str {
        match self {
            Side::Left => "-",
            Side::Right => "+",
        }
    }
}

/// A point approached from one side, e.g. `c-` or `c+`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LateralPoint {
    pub point: f64,
    pub side: Side,
}

impl LateralPoint {
    pub fn new(point: f64, side: Side) -> Self {
        LateralPoint { point, side }
    }

    pub fn left(point: f64) -> Self {
        LateralPoint::new(point, Side::Left)
    }

    pub fn right(point: f64) -> Self {
        LateralPoint::new(point, Side::Right)
    }

    /// A point displaced by `eps` towards the approach side.
    pub fn offset(&self, eps: f64) -> f64 {
        self.point + self.side.sign() * eps
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LateralValue {
    pub point: LateralPoint,
    pub value: f64,
}

/// Fitted local orders on either side of an exceptional point.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ExceptionalOrder {
    pub point: f64,
    pub left: Option<f64>,
    pub right: Option<f64>,
}

#[derive(Debug, Clone)]
pub struct Branch {
    pub domain: Interval,
    pub source: String,
    pub expr: Expr,
    pub d1: Expr,
    pub d2: Expr,
    /// +1 increasing, -1 decreasing.
    pub orientation: f64,
    /// sup |D²f / Df| on the build grid.
    pub nonlinearity: f64,
    pub min_abs_derivative: f64,
    /// Added by [`extend_map`]; never part of the original map.
    pub collar: bool,
    hi_exceptional: bool,
}

impl Branch {
    pub fn eval(&self, x: f64) -> Result<f64, EvalError> {
        self.expr.eval(x)
    }

    pub fn deriv(&self, x: f64) -> Result<f64, EvalError> {
        self.d1.eval(x)
    }

    pub fn deriv2(&self, x: f64) -> Result<f64, EvalError> {
        self.d2.eval(x)
    }
}

/// Compiled map. Immutable once built.
#[derive(Debug, Clone)]
pub struct PiecewiseMap {
    lo: f64,
    hi: f64,
    branches: Vec<Branch>,
    exceptional: Vec<f64>,
    lateral_values: Vec<LateralValue>,
    orders: Vec<ExceptionalOrder>,
}

/// `log |Df^n(x)|` and the sign of `Df^n(x)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DerivativeProduct {
    pub log_abs: f64,
    pub sign: f64,
}

struct RawBranch {
    domain: Interval,
    source: String,
    expr: Expr,
    collar: bool,
}

pub fn build_map(spec: &MapSpec) -> Result<PiecewiseMap, MapError> {
    let [lo, hi] = spec.ambient;
    if !(lo.is_finite() && hi.is_finite() && hi > lo) {
        return Err(MapError::BadAmbient { lo, hi });
    }
    if spec.branches.is_empty() {
        return Err(MapError::NoBranches);
    }
    let mut order: Vec<usize> = (0..spec.branches.len()).collect();
    for &i in &order {
        let [a, b] = spec.branches[i].domain;
        if !(a.is_finite() && b.is_finite() && b > a) {
            return Err(MapError::EmptyBranch { branch: i });
        }
    }
    order.sort_by(|&i, &j| spec.branches[i].domain[0].total_cmp(&spec.branches[j].domain[0]));

    let tol = 1e-12 * (hi - lo);
    let mut raw = Vec::with_capacity(order.len());
    let mut cursor = lo;
    for &i in &order {
        let b = &spec.branches[i];
        let [a, e] = b.domain;
        if a > cursor + tol {
            return Err(MapError::TilingGap {
                left: cursor,
                right: a,
            });
        }
        if a < cursor - tol {
            return Err(MapError::TilingOverlap {
                left: a,
                right: cursor,
            });
        }
        let expr = expr::parse(&b.expr).map_err(|source| MapError::Parse { branch: i, source })?;
        // snap near-coincident endpoints so C_f is exact
        raw.push(RawBranch {
            domain: Interval::new(cursor, e),
            source: b.expr.clone(),
            expr,
            collar: false,
        });
        cursor = e;
    }
    if (cursor - hi).abs() > tol {
        return Err(if cursor < hi {
            MapError::TilingGap {
                left: cursor,
                right: hi,
            }
        } else {
            MapError::TilingOverlap {
                left: hi,
                right: cursor,
            }
        });
    }
    raw.last_mut().unwrap().domain.hi = hi;
    let exceptional = raw[1..].iter().map(|b| b.domain.lo).collect();
    compile(lo, hi, raw, exceptional, &order)
}

fn compile(
    lo: f64,
    hi: f64,
    raw: Vec<RawBranch>,
    exceptional: Vec<f64>,
    labels: &[usize],
) -> Result<PiecewiseMap, MapError> {
    let slack = 1e-9 * (hi - lo);
    let mut branches = Vec::with_capacity(raw.len());
    for (k, rb) in raw.into_iter().enumerate() {
        let label = labels.get(k).copied().unwrap_or(k);
        let d1 = expr::differentiate(&rb.expr);
        let d2 = expr::differentiate(&d1);
        let err = |source| MapError::Eval {
            branch: label,
            source,
        };
        let mut orientation = 0.0;
        let mut nonlinearity: f64 = 0.0;
        let mut min_abs = f64::INFINITY;
        for j in 0..BUILD_GRID {
            let x = rb.domain.at((j as f64 + 0.5) / BUILD_GRID as f64);
            let y = rb.expr.eval(x).map_err(err)?;
            if y < lo - slack || y > hi + slack {
                return Err(MapError::BranchOutOfRange {
                    branch: label,
                    x,
                    value: y,
                });
            }
            let d = d1.eval(x).map_err(err)?;
            if d == 0.0 || (orientation != 0.0 && d.signum() != orientation) {
                return Err(MapError::ZeroDerivative { branch: label, x });
            }
            orientation = d.signum();
            min_abs = min_abs.min(d.abs());
            let dd = d2.eval(x).map_err(err)?;
            nonlinearity = nonlinearity.max((dd / d).abs());
        }
        // closure endpoints must also land in range
        for x in [rb.domain.lo, rb.domain.hi] {
            if let Ok(y) = rb.expr.eval(x) {
                if y < lo - slack || y > hi + slack {
                    return Err(MapError::BranchOutOfRange {
                        branch: label,
                        x,
                        value: y,
                    });
                }
            }
        }
        branches.push(Branch {
            hi_exceptional: exceptional.contains(&rb.domain.hi),
            domain: rb.domain,
            source: rb.source,
            expr: rb.expr,
            d1,
            d2,
            orientation,
            nonlinearity,
            min_abs_derivative: min_abs,
            collar: rb.collar,
        });
    }
    let mut m = PiecewiseMap {
        lo,
        hi,
        branches,
        exceptional,
        lateral_values: Vec::new(),
        orders: Vec::new(),
    };
    let mut values = Vec::with_capacity(2 * m.exceptional.len());
    for &c in &m.exceptional {
        for side in [Side::Left, Side::Right] {
            let p = LateralPoint::new(c, side);
            values.push(LateralValue {
                point: p,
                value: m.eval_lateral(p)?,
            });
        }
    }
    m.lateral_values = values;
    m.orders = m
        .exceptional
        .iter()
        .map(|&c| ExceptionalOrder {
            point: c,
            left: validate::fit_order(&m, LateralPoint::left(c)),
            right: validate::fit_order(&m, LateralPoint::right(c)),
        })
        .collect();
    Ok(m)
}

impl PiecewiseMap {
    pub fn lo(&self) -> f64 {
        self.lo
    }

    pub fn hi(&self) -> f64 {
        self.hi
    }

    pub fn ambient(&self) -> Interval {
        Interval::new(self.lo, self.hi)
    }

    pub fn branches(&self) -> &[Branch] {
        &self.branches
    }

    /// The exceptional set `C_f`, sorted.
    pub fn exceptional(&self) -> &[f64] {
        &self.exceptional
    }

    /// `V_f` as `(c-, f(c-)), (c+, f(c+))` for each `c` in order.
    pub fn lateral_values(&self) -> &[LateralValue] {
        &self.lateral_values
    }

    pub fn orders(&self) -> &[ExceptionalOrder] {
        &self.orders
    }

    /// Lateral points `c-` and `c+` for every exceptional `c`.
    pub fn critical_laterals(&self) -> Vec<LateralPoint> {
        self.lateral_values.iter().map(|v| v.point).collect()
    }

    pub fn is_exceptional(&self, x: f64) -> bool {
        self.exceptional.binary_search_by(|c| c.total_cmp(&x)).is_ok()
    }

    pub fn contains(&self, x: f64) -> bool {
        x >= self.lo && x <= self.hi
    }

    fn clamp(&self, y: f64) -> f64 {
        y.clamp(self.lo, self.hi)
    }

    /// Index of the branch used to evaluate `x`, or an error on `C_f` or
    /// outside the ambient interval.
    pub fn branch_index(&self, x: f64) -> Result<usize, MapError> {
        if !(x >= self.lo && x <= self.hi) {
            return Err(MapError::OutOfRange(x));
        }
        let n = self.branches.len();
        let idx = self.branches.partition_point(|b| b.domain.hi < x).min(n - 1);
        let b = &self.branches[idx];
        if x == b.domain.hi && idx + 1 < n {
            if b.hi_exceptional {
                return Err(MapError::ExceptionalPoint(x));
            }
            // smooth joint: prefer the original map over a collar
            if b.collar && !self.branches[idx + 1].collar {
                return Ok(idx + 1);
            }
        }
        Ok(idx)
    }

    /// Branch whose closure is used for the one-sided limit at `p`.
    pub fn lateral_branch_index(&self, p: LateralPoint) -> Result<usize, MapError> {
        let bad = MapError::InvalidLateral {
            point: p.point,
            side: p.side,
        };
        let ok = match p.side {
            Side::Left => p.point > self.lo && p.point <= self.hi,
            Side::Right => p.point >= self.lo && p.point < self.hi,
        };
        if !ok {
            return Err(bad);
        }
        Ok(match p.side {
            Side::Left => self.branches.partition_point(|b| b.domain.hi < p.point),
            Side::Right => self.branches.partition_point(|b| b.domain.hi <= p.point),
        })
    }

    fn wrap(&self, idx: usize) -> impl Fn(EvalError) -> MapError {
        move |source| MapError::Eval {
            branch: idx,
            source,
        }
    }

    pub fn eval(&self, x: f64) -> Result<f64, MapError> {
        let i = self.branch_index(x)?;
        let y = self.branches[i].eval(x).map_err(self.wrap(i))?;
        Ok(self.clamp(y))
    }

    pub fn deriv(&self, x: f64) -> Result<f64, MapError> {
        let i = self.branch_index(x)?;
        self.branches[i].deriv(x).map_err(self.wrap(i))
    }

    pub fn deriv2(&self, x: f64) -> Result<f64, MapError> {
        let i = self.branch_index(x)?;
        self.branches[i].deriv2(x).map_err(self.wrap(i))
    }

    /// Value and derivative in one branch lookup.
    pub fn eval_with_deriv(&self, x: f64) -> Result<(f64, f64), MapError> {
        let i = self.branch_index(x)?;
        let b = &self.branches[i];
        let y = b.eval(x).map_err(self.wrap(i))?;
        let d = b.deriv(x).map_err(self.wrap(i))?;
        Ok((self.clamp(y), d))
    }

    /// One-sided limit of `f` at `p`, i.e. the branch closure evaluated at the endpoint.
    pub fn eval_lateral(&self, p: LateralPoint) -> Result<f64, MapError> {
        let i = self.lateral_branch_index(p)?;
        let y = self.branches[i].eval(p.point).map_err(self.wrap(i))?;
        Ok(self.clamp(y))
    }

    /// One-sided limit of `Df` at `p`.
    pub fn deriv_lateral(&self, p: LateralPoint) -> Result<f64, MapError> {
        let i = self.lateral_branch_index(p)?;
        self.branches[i].deriv(p.point).map_err(self.wrap(i))
    }

    /// Image of a lateral point: `f(x)` approaches `f(p)` from the side
    /// given by the branch orientation.
    pub fn step_lateral(&self, p: LateralPoint) -> Result<LateralPoint, MapError> {
        let i = self.lateral_branch_index(p)?;
        let b = &self.branches[i];
        let value = self.clamp(b.eval(p.point).map_err(self.wrap(i))?);
        let mut side = if b.orientation > 0.0 { p.side } else { p.side.flip() };
        if value <= self.lo {
            side = Side::Right;
        } else if value >= self.hi {
            side = Side::Left;
        }
        Ok(LateralPoint::new(value, side))
    }

    /// `f^n(x)` with exact iteration.
    pub fn iterate(&self, x: f64, n: usize) -> Result<f64, MapError> {
        let mut y = x;
        for i in 0..n {
            y = self.eval(y).map_err(|e| match e {
                MapError::ExceptionalPoint(_) => MapError::OrbitHitsExceptional(i),
                e => e,
            })?;
        }
        Ok(y)
    }

    /// `log |Df^n(x)|` and its sign, accumulated in log space.
    pub fn deriv_product(&self, x: f64, n: usize) -> Result<DerivativeProduct, MapError> {
        let mut log_abs = 0.0;
        let mut sign = 1.0;
        let mut y = x;
        for i in 0..n {
            let (next, d) = self.eval_with_deriv(y).map_err(|e| match e {
                MapError::ExceptionalPoint(_) => MapError::OrbitHitsExceptional(i),
                e => e,
            })?;
            log_abs += d.abs().ln();
            if d < 0.0 {
                sign = -sign;
            }
            y = next;
        }
        Ok(DerivativeProduct { log_abs, sign })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fixtures;

    #[test]
    fn tent_lateral_values() {
        let m = fixtures::tent();
        assert_eq!(m.exceptional(), &[0.5]);
        let v: Vec<_> = m.lateral_values().iter().map(|v| (v.point.side, v.value)).collect();
        assert_eq!(v, vec![(Side::Left, 1.0), (Side::Right, 1.0)]);
    }

    #[test]
    fn doubling_lateral_values() {
        let m = fixtures::doubling();
        let v: Vec<_> = m.lateral_values().iter().map(|v| v.value).collect();
        assert_eq!(v, vec![1.0, 0.0]);
        assert_eq!(m.eval_lateral(LateralPoint::left(0.5)).unwrap(), 1.0);
        assert_eq!(m.eval_lateral(LateralPoint::right(0.5)).unwrap(), 0.0);
    }

    #[test]
    fn logistic_lateral_values() {
        // 4 * 0.5 * (1 - 0.5) from both closures
        let m = fixtures::logistic(4.0);
        for v in m.lateral_values() {
            assert_eq!(v.value, 1.0);
        }
    }

    #[test]
    fn eval_and_errors() {
        let tent = fixtures::tent();
        assert_eq!(tent.eval(0.25).unwrap(), 0.5);
        assert_eq!(tent.eval(0.5), Err(MapError::ExceptionalPoint(0.5)));
        assert_eq!(tent.eval(1.5), Err(MapError::OutOfRange(1.5)));
        assert_eq!(tent.eval(0.0).unwrap(), 0.0);
        assert_eq!(tent.eval(1.0).unwrap(), 0.0);
        assert_eq!(fixtures::doubling().eval(0.75).unwrap(), 0.5);
    }

    #[test]
    fn derivatives() {
        let tent = fixtures::tent();
        assert_eq!(tent.deriv(0.25).unwrap(), 2.0);
        assert_eq!(tent.deriv(0.75).unwrap(), -2.0);
        // 4 - 8x at 0.25
        assert_eq!(fixtures::logistic(4.0).deriv(0.25).unwrap(), 2.0);
        assert_eq!(fixtures::logistic(4.0).deriv2(0.25).unwrap(), -8.0);
    }

    #[test]
    fn deriv_product_constant_slope() {
        let ln2 = std::f64::consts::LN_2;
        let t = fixtures::tent().deriv_product(0.3, 10).unwrap();
        assert!((t.log_abs - 10.0 * ln2).abs() < 1e-12);
        let d = fixtures::doubling().deriv_product(0.3, 20).unwrap();
        assert!((d.log_abs - 20.0 * ln2).abs() < 1e-12);
        assert_eq!(d.sign, 1.0);
        let e = fixtures::logistic(3.2).deriv_product(0.3, 0).unwrap();
        assert_eq!((e.log_abs, e.sign), (0.0, 1.0));
    }

    #[test]
    fn deriv_product_reports_hit_index() {
        // 0.25 -> 0.5
        assert_eq!(
            fixtures::tent().deriv_product(0.25, 5),
            Err(MapError::OrbitHitsExceptional(1))
        );
    }

    #[test]
    fn step_lateral_tracks_orientation() {
        let tent = fixtures::tent();
        let p = tent.step_lateral(LateralPoint::left(0.5)).unwrap();
        assert_eq!(p, LateralPoint::left(1.0));
        let q = tent.step_lateral(p).unwrap();
        assert_eq!(q, LateralPoint::right(0.0));
        let d = fixtures::doubling();
        assert_eq!(d.step_lateral(LateralPoint::right(0.5)).unwrap(), LateralPoint::right(0.0));
    }

    #[test]
    fn build_rejects_bad_tilings() {
        let gap = MapSpec::new([0.0, 1.0], &[((0.0, 0.4), "x"), ((0.5, 1.0), "x")]);
        assert!(matches!(build_map(&gap), Err(MapError::TilingGap { .. })));
        let overlap = MapSpec::new([0.0, 1.0], &[((0.0, 0.6), "x"), ((0.5, 1.0), "x")]);
        assert!(matches!(build_map(&overlap), Err(MapError::TilingOverlap { .. })));
        let short = MapSpec::new([0.0, 1.0], &[((0.0, 0.9), "x")]);
        assert!(matches!(build_map(&short), Err(MapError::TilingGap { .. })));
    }

    #[test]
    fn build_rejects_out_of_range_and_flat_branches() {
        let out = MapSpec::new([0.0, 1.0], &[((0.0, 1.0), "2*x")]);
        match build_map(&out) {
            Err(MapError::BranchOutOfRange { x, value, .. }) => assert!(value > 1.0 && x > 0.5),
            other => panic!("unexpected {other:?}"),
        }
        let zero = MapSpec::new([0.0, 1.0], &[((0.0, 1.0), "0.5")]);
        assert!(matches!(build_map(&zero), Err(MapError::ZeroDerivative { .. })));
        let turning = MapSpec::new([0.0, 1.0], &[((0.0, 1.0), "4*x*(1-x)")]);
        assert!(matches!(build_map(&turning), Err(MapError::ZeroDerivative { .. })));
    }

    #[test]
    fn branch_order_is_irrelevant() {
        let spec = MapSpec::new([0.0, 1.0], &[((0.5, 1.0), "2-2*x"), ((0.0, 0.5), "2*x")]);
        let m = build_map(&spec).unwrap();
        assert_eq!(m.eval(0.25).unwrap(), 0.5);
        assert_eq!(m.exceptional(), &[0.5]);
    }

    #[test]
    fn spec_json_round_trip() {
        let text = r#"{"branches":[{"domain":[0,0.5],"expr":"2*x"},{"domain":[0.5,1],"expr":"2-2*x"}]}"#;
        let spec = MapSpec::from_json(text).unwrap();
        assert_eq!(spec.ambient, [0.0, 1.0]);
        assert!(MapSpec::from_json("{").is_err());
    }
}
