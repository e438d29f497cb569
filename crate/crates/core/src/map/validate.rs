use serde::{Deserialize, Serialize};

use super::{LateralPoint, MapError, PiecewiseMap, Side};
use crate::interval::Interval;

/// Offsets used for the log-log order fit.
pub const ORDER_EPS: [f64; 5] = [1e-3, 1e-4, 1e-5, 1e-6, 1e-7];

/// Fitted orders below `1 - ORDER_SLACK` are flagged as flat.
pub const ORDER_SLACK: f64 = 0.05;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BranchValidation {
    pub domain: Interval,
    pub expr: String,
    pub min_abs_derivative: f64,
    pub nonlinearity: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PointValidation {
    pub point: f64,
    pub left_value: f64,
    pub right_value: f64,
    pub left_order: Option<f64>,
    pub right_order: Option<f64>,
    pub flat_violation: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ValidationReport {
    pub grid_size: usize,
    pub branches: Vec<BranchValidation>,
    pub points: Vec<PointValidation>,
    pub flat_violation: bool,
}

/// Least-squares slope of `log|f(c±e) - f(c±)|` against `log e`.
///
/// Offsets that leave the adjacent branch, or whose increment is lost in
/// rounding, are skipped. Returns `None` with fewer than two usable offsets.
pub(crate) fn fit_order(m: &PiecewiseMap, p: LateralPoint) -> Option<f64> {
    let i = m.lateral_branch_index(p).ok()?;
    let b = &m.branches[i];
    let base = b.eval(p.point).ok()?;
    let floor = 64.0 * f64::EPSILON * base.abs().max(1.0);
    let mut pts = Vec::new();
    for eps in ORDER_EPS {
        let x = p.offset(eps);
        if !b.domain.contains(x) {
            continue;
        }
        let Ok(y) = b.eval(x) else { continue };
        let g = (y - base).abs();
        if g > floor {
            pts.push(((x - p.point).abs().ln(), g.ln()));
        }
    }
    if pts.len() < 2 {
        return None;
    }
    let n = pts.len() as f64;
    let mx = pts.iter().map(|p| p.0).sum::<f64>() / n;
    let my = pts.iter().map(|p| p.1).sum::<f64>() / n;
    let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    let sxx: f64 = pts.iter().map(|p| (p.0 - mx).powi(2)).sum();
    Some(sxy / sxx)
}

pub fn validate_nonflat(m: &PiecewiseMap, grid_size: usize) -> Result<ValidationReport, MapError> {
    if grid_size < 100 {
        return Err(MapError::InvalidArgument(format!(
            "grid_size must be at least 100, got {grid_size}"
        )));
    }
    let mut branches = Vec::with_capacity(m.branches.len());
    for (k, b) in m.branches.iter().enumerate() {
        let mut min_abs = f64::INFINITY;
        let mut nonlin: f64 = 0.0;
        for j in 0..grid_size {
            let x = b.domain.at((j as f64 + 0.5) / grid_size as f64);
            let d = b.deriv(x).map_err(|source| MapError::Eval { branch: k, source })?;
            let dd = b.deriv2(x).map_err(|source| MapError::Eval { branch: k, source })?;
            min_abs = min_abs.min(d.abs());
            nonlin = nonlin.max((dd / d).abs());
        }
        branches.push(BranchValidation {
            domain: b.domain,
            expr: b.source.clone(),
            min_abs_derivative: min_abs,
            nonlinearity: nonlin,
        });
    }
    let mut points = Vec::with_capacity(m.exceptional.len());
    for &c in &m.exceptional {
        let left = LateralPoint::new(c, Side::Left);
        let right = LateralPoint::new(c, Side::Right);
        let left_order = fit_order(m, left);
        let right_order = fit_order(m, right);
        let flat = [left_order, right_order]
            .iter()
            .any(|o| matches!(o, Some(v) if *v < 1.0 - ORDER_SLACK));
        points.push(PointValidation {
            point: c,
            left_value: m.eval_lateral(left)?,
            right_value: m.eval_lateral(right)?,
            left_order,
            right_order,
            flat_violation: flat,
        });
    }
    let flat_violation = points.iter().any(|p| p.flat_violation);
    Ok(ValidationReport {
        grid_size,
        branches,
        points,
        flat_violation,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fixtures;
    use crate::map::{build_map, MapSpec};

    #[test]
    fn tent_is_linear() {
        let r = validate_nonflat(&fixtures::tent(), 1000).unwrap();
        for b in &r.branches {
            assert_eq!(b.min_abs_derivative, 2.0);
            assert_eq!(b.nonlinearity, 0.0);
        }
        let p = &r.points[0];
        assert!((p.left_order.unwrap() - 1.0).abs() <= 0.05);
        assert!((p.right_order.unwrap() - 1.0).abs() <= 0.05);
        assert!(!r.flat_violation);
    }

    #[test]
    fn spow_branch_order() {
        let spec = MapSpec::new(
            [0.0, 1.0],
            &[((0.0, 0.5), "2*x"), ((0.5, 1.0), "0.5 + spow(x-0.5, 2)")],
        );
        let r = validate_nonflat(&build_map(&spec).unwrap(), 500).unwrap();
        assert!((r.points[0].right_order.unwrap() - 2.0).abs() <= 0.05);
        assert!((r.points[0].left_order.unwrap() - 1.0).abs() <= 0.05);
    }

    #[test]
    fn logistic_quadratic_critical_point() {
        let r = validate_nonflat(&fixtures::logistic(4.0), 1000).unwrap();
        assert!((r.points[0].left_order.unwrap() - 2.0).abs() <= 0.05);
        assert!((r.points[0].right_order.unwrap() - 2.0).abs() <= 0.05);
    }

    #[test]
    fn sub_linear_branch_is_flagged() {
        let spec = MapSpec::new(
            [0.0, 1.0],
            &[((0.0, 0.5), "2*x"), ((0.5, 1.0), "sqrt(x-0.5)*sqrt(2)")],
        );
        let r = validate_nonflat(&build_map(&spec).unwrap(), 200).unwrap();
        assert!((r.points[0].right_order.unwrap() - 0.5).abs() < 0.05);
        assert!(r.flat_violation);
    }

    #[test]
    fn small_grid_rejected() {
        assert!(validate_nonflat(&fixtures::tent(), 10).is_err());
    }
}
