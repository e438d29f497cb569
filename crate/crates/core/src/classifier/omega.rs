use serde::{Deserialize, Serialize};

use crate::map::{LateralPoint, PiecewiseMap};
use crate::orbit::{CoverBuilder, IntervalCover, OrbitError};

/// A lateral critical value `f(c±)`, carried as the lateral point it is
/// approached from.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CriticalValue {
    /// The exceptional point and side.
    pub source: LateralPoint,
    /// `f(c±)` with the side its neighbours map to.
    pub value: LateralPoint,
}

pub fn critical_values(m: &PiecewiseMap) -> Vec<CriticalValue> {
    m.critical_laterals()
        .into_iter()
        .filter_map(|source| {
            Some(CriticalValue {
                source,
                value: m.step_lateral(source).ok()?,
            })
        })
        .collect()
}

/// Cover of the exact lateral orbit of `v` over iterates `burn_in .. burn_in + length`.
///
/// Lateral iteration continues through `C_f`, so orbits of critical values
/// that fall on exceptional points are followed from the correct side.
pub fn lateral_cover(
    m: &PiecewiseMap,
    v: LateralPoint,
    burn_in: usize,
    length: usize,
    resolution: f64,
) -> Result<IntervalCover, OrbitError> {
    let mut b = CoverBuilder::new(m.ambient(), resolution);
    let mut q = v;
    for i in 0..burn_in + length {
        if i >= burn_in {
            b.add(q.point);
        }
        q = m.step_lateral(q).map_err(|_| OrbitError::DegenerateOrbit { index: i })?;
    }
    Ok(b.finish())
}

/// Empirical recurrence of a lateral point `v = c±`: the lateral orbit of
/// `f(v)` comes back within `eps` of `c` at least three times after the first
/// `length / 10` iterates.
pub fn recurrence_check(m: &PiecewiseMap, v: LateralPoint, length: usize, eps: f64) -> Result<bool, OrbitError> {
    if length < 10_000 {
        return Err(OrbitError::InvalidArgument("length must be at least 1e4".into()));
    }
    let skip = length / 10;
    let mut q = v;
    let mut returns = 0;
    for i in 1..=length {
        q = match m.step_lateral(q) {
            Ok(q) => q,
            Err(_) if i <= skip => return Err(OrbitError::DegenerateOrbit { index: i }),
            Err(_) => break,
        };
        if i > skip && (q.point - v.point).abs() <= eps {
            returns += 1;
            if returns >= 3 {
                return Ok(true);
            }
        }
    }
    Ok(false)
}

/// Membership table `α ∈ ω(β)` for the lateral critical values, with the
/// strict order `α ≺ β` and its maximal elements.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CriticalOrder {
    pub values: Vec<CriticalValue>,
    /// `member[a][b]`: value `a` lies in the ω-cover of value `b`.
    pub member: Vec<Vec<bool>>,
    /// Pairs `(a, b)` with `a ≺ b`.
    pub relation: Vec<(usize, usize)>,
    /// Values not below any other.
    pub maximal: Vec<usize>,
}

pub fn critical_order(m: &PiecewiseMap, horizon: usize, resolution: f64) -> Result<CriticalOrder, OrbitError> {
    if horizon < 10_000 {
        return Err(OrbitError::InvalidArgument("horizon must be at least 1e4".into()));
    }
    let values = critical_values(m);
    let covers = values
        .iter()
        .map(|v| lateral_cover(m, v.value, horizon / 10, horizon - horizon / 10, resolution))
        .collect::<Result<Vec<_>, _>>()?;
    let n = values.len();
    let member: Vec<Vec<bool>> = (0..n)
        .map(|a| (0..n).map(|b| covers[b].distance_to(values[a].value.point) <= resolution).collect())
        .collect();
    let mut relation = Vec::new();
    for a in 0..n {
        for b in 0..n {
            if a != b && member[a][b] && !member[b][a] {
                relation.push((a, b));
            }
        }
    }
    let maximal = (0..n).filter(|&a| !relation.iter().any(|&(x, _)| x == a)).collect();
    Ok(CriticalOrder {
        values,
        member,
        relation,
        maximal,
    })
}

/// Settings shared by [`match_omega`] and the classifier.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OmegaConfig {
    pub burn_in: usize,
    pub length: usize,
    pub resolution: f64,
}

/// Outcome of comparing a cover with critical-orbit covers.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OmegaMatch {
    /// Critical values whose exceptional point lies in the cover.
    pub values: Vec<CriticalValue>,
    /// Symmetric difference between the cover and the union of their covers.
    pub symmetric_difference: f64,
    pub accepted: bool,
}

/// Tests `cover ≈ ∪ ω(v)` over the critical values `v` whose exceptional
/// point lies in the cover; accepted at symmetric difference `≤ 5·resolution`.
pub fn match_omega(cover: &IntervalCover, m: &PiecewiseMap, cfg: &OmegaConfig) -> Result<Option<OmegaMatch>, OrbitError> {
    let values: Vec<CriticalValue> = critical_values(m)
        .into_iter()
        .filter(|v| cover.distance_to(v.source.point) <= cfg.resolution)
        .collect();
    if values.is_empty() {
        return Ok(None);
    }
    let mut union = IntervalCover::empty(cfg.resolution);
    for v in &values {
        union = union.union(&lateral_cover(m, v.value, cfg.burn_in, cfg.length, cfg.resolution)?);
    }
    let d = cover.symmetric_difference(&union);
    Ok(Some(OmegaMatch {
        values,
        symmetric_difference: d,
        accepted: d <= 5.0 * cfg.resolution * super::LENGTH_SLACK,
    }))
}
