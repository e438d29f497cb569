use serde::{Deserialize, Serialize};

use super::{first_entry, first_return, measure_distortion, InducedBranch, InducedMap, InductionError};
use crate::interval::Interval;
use crate::map::PiecewiseMap;

/// Probe points per branch for distortion and expansion sampling.
const PROBES: usize = 16;

/// Grid used to bracket the fixed points of `F²`.
const FIX_GRID: usize = 1 << 14;

const FIX_TOL: f64 = 1e-10;

/// Horizon for the critical-value orbits that bound the component `T`.
const VALUE_HORIZON: usize = 2000;

/// The construction around a branch of `F` with `|DF| <= 1 + ε²`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NeutralCore {
    /// Probe with the smallest `|DF|`.
    pub p: f64,
    /// Domain `I_p⁰` of the branch containing `p`.
    pub branch: Interval,
    /// `(F|I_p⁰)^{-1}(I_p⁰)`.
    pub i_p: Interval,
    /// `(a, b)`: hull of the fixed points of `F²` in `I_p`.
    pub fixed_hull: Interval,
    /// `I₀, I₁`: components of `J \ I_p`.
    pub flanks: [Interval; 2],
    /// `J₀, J₁`: components of `I_p \ (a, b)`.
    pub connectors: [Interval; 2],
    /// Flank whose first-return map is certified.
    pub chosen: usize,
    /// Sampled `min |D𝓕_j|` of the first return to each flank.
    pub flank_min_expansion: [Option<f64>; 2],
    pub flank_coverage: [f64; 2],
    /// Sampled `min |DG_j|` of the first entry from `J_j` into `I_j`.
    pub entry_min_derivative: [Option<f64>; 2],
    /// `(1 / (ε K)) |I_j| / |J_j|`.
    pub entry_bound: [f64; 2],
    pub entry_bound_holds: bool,
    /// `min |D𝓕_chosen| > 3`.
    pub valid: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "mode", rename_all = "snake_case")]
pub enum ExpansionMode {
    UniformlyExpanding,
    NeutralCore(NeutralCore),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExpansionReport {
    /// Sampled `sup |DF(x) / DF(y)|` over branches.
    pub distortion: f64,
    /// `sqrt(distortion - 1)`.
    pub epsilon: f64,
    /// `Ô(1)`: the largest branch nonlinearity.
    pub nonlinearity: f64,
    /// `5 exp(Ô(1))`.
    pub k: f64,
    /// `ε < 1 / (6K)`, the smallness hypothesis on the distortion.
    pub applicable: bool,
    pub mode: ExpansionMode,
    /// Sampled `min |DF|`.
    pub min_expansion: f64,
    /// Component of the complement of the critical-value orbits containing `J`.
    pub component: Interval,
    /// Relative space of `J` inside `component`.
    pub delta: f64,
    /// `((1 + δ) / δ)² exp(Ô(1))`.
    pub k0: f64,
    /// `K₀ γ₀ / |𝓘|` with `γ₀ = Ô(1) + 2 / |J|`.
    pub gamma: f64,
    /// `exp(γ (1 + 1/ρ))` with `ρ` the certified expansion margin of the
    /// map used (`ε²`, or the sampled margin when larger).
    pub distortion_gamma: f64,
}

/// Points of the critical-value orbits, closing up on near-repeats.
fn value_orbits(m: &PiecewiseMap) -> Vec<f64> {
    let tol = 1e-10 * (m.hi() - m.lo());
    let mut pts = Vec::new();
    for v in m.lateral_values() {
        let mut y = v.value;
        let start = pts.len();
        for _ in 0..VALUE_HORIZON {
            if pts[start..].iter().any(|&s: &f64| (s - y).abs() <= tol) {
                break;
            }
            pts.push(y);
            match m.eval(y) {
                Ok(next) => y = next,
                Err(_) => break,
            }
        }
    }
    pts
}

/// Largest interval around `j` free of critical-value orbit points.
pub fn critical_component(m: &PiecewiseMap, j: Interval) -> Interval {
    let pts = value_orbits(m);
    let lo = pts.iter().copied().filter(|&y| y <= j.lo).fold(m.lo(), f64::max);
    let hi = pts.iter().copied().filter(|&y| y >= j.hi).fold(m.hi(), f64::min);
    Interval::new(lo, hi)
}

/// Smallest sampled `log |DF|` over a branch, and where.
fn branch_min(m: &PiecewiseMap, b: &InducedBranch, probes: usize) -> Option<(f64, f64)> {
    (0..probes)
        .map(|k| b.domain.at((k as f64 + 0.5) / probes as f64))
        .filter_map(|x| Some((b.log_deriv(m, x).ok()?, x)))
        .min_by(|a, b| a.0.total_cmp(&b.0))
}

fn min_expansion(m: &PiecewiseMap, ind: &InducedMap) -> Option<(f64, f64, usize)> {
    ind.branches
        .iter()
        .enumerate()
        .filter_map(|(i, b)| branch_min(m, b, PROBES).map(|(d, x)| (d, x, i)))
        .min_by(|a, b| a.0.total_cmp(&b.0))
}

/// Expansion of a first-return map, following the dichotomy: either
/// `|DF| > 1 + ε²` on every branch, or a branch with slow expansion carries a
/// neutral core whose flanks have a strongly expanding return map.
pub fn expansion_analysis(m: &PiecewiseMap, ind: &InducedMap) -> Result<ExpansionReport, InductionError> {
    if ind.branches.is_empty() {
        return Err(InductionError::InvalidArgument("induced map has no branches".into()));
    }
    let j = ind.base;
    let distortion = measure_distortion(m, ind, PROBES);
    let eps2 = (distortion - 1.0).max(0.0);
    let epsilon = eps2.sqrt();
    let nonlinearity = m.branches().iter().map(|b| b.nonlinearity).fold(0.0, f64::max);
    let k = 5.0 * nonlinearity.exp();
    let applicable = epsilon < 1.0 / (6.0 * k);
    let (min_log, p, pi) = min_expansion(m, ind).ok_or_else(|| {
        InductionError::InvalidArgument("no branch of the induced map could be sampled".into())
    })?;
    let min_exp = min_log.exp();

    let component = critical_component(m, j);
    let delta = ((j.lo - component.lo).min(component.hi - j.hi) / j.len()).max(0.0);
    let k0 = ((1.0 + delta) / delta).powi(2) * nonlinearity.exp();
    let gamma0 = nonlinearity + 2.0 / j.len();

    let (mode, base_len, margin) = if min_exp > 1.0 + eps2 {
        (ExpansionMode::UniformlyExpanding, j.len(), (min_exp - 1.0).max(eps2))
    } else {
        let core = neutral_core(m, ind, &ind.branches[pi], p, epsilon, k)?;
        let l = core.chosen;
        let margin = core.flank_min_expansion[l].map_or(0.0, |v| v - 1.0).max(eps2);
        let len = core.flanks[l].len();
        (ExpansionMode::NeutralCore(core), len, margin)
    };
    let gamma = k0 * gamma0 / base_len;
    let distortion_gamma = (gamma * (1.0 + 1.0 / margin)).exp();
    Ok(ExpansionReport {
        distortion,
        epsilon,
        nonlinearity,
        k,
        applicable,
        mode,
        min_expansion: min_exp,
        component,
        delta,
        k0,
        gamma,
        distortion_gamma,
    })
}

/// Roots of `F²(x) - x` on `iv` from sign changes on a grid, refined by bisection.
fn fixed_points_of_square(m: &PiecewiseMap, b: &InducedBranch, iv: Interval) -> Vec<f64> {
    let g = |x: f64| -> Option<f64> {
        let y = b.eval(m, x).ok()?;
        Some(b.eval(m, y).ok()? - x)
    };
    let xs: Vec<f64> = (0..=FIX_GRID).map(|k| iv.at(k as f64 / FIX_GRID as f64)).collect();
    let vals: Vec<Option<f64>> = xs.iter().map(|&x| g(x)).collect();
    let mut roots = Vec::new();
    for k in 0..FIX_GRID {
        let (Some(ga), Some(gb)) = (vals[k], vals[k + 1]) else { continue };
        if ga == 0.0 {
            roots.push(xs[k]);
            continue;
        }
        if gb == 0.0 || (ga > 0.0) == (gb > 0.0) {
            continue;
        }
        let (mut a, mut c) = (xs[k], xs[k + 1]);
        while c - a > FIX_TOL {
            let mid = 0.5 * (a + c);
            match g(mid) {
                Some(v) if v == 0.0 => {
                    a = mid;
                    c = mid;
                }
                Some(v) if (v > 0.0) == (ga > 0.0) => a = mid,
                Some(_) => c = mid,
                None => break,
            }
        }
        roots.push(0.5 * (a + c));
    }
    if vals[FIX_GRID] == Some(0.0) {
        roots.push(xs[FIX_GRID]);
    }
    roots
}

fn neutral_core(
    m: &PiecewiseMap,
    ind: &InducedMap,
    b: &InducedBranch,
    p: f64,
    epsilon: f64,
    k: f64,
) -> Result<NeutralCore, InductionError> {
    let j = ind.base;
    let i_p = Interval::hull(b.inverse(m, b.domain.lo), b.inverse(m, b.domain.hi));
    let roots = fixed_points_of_square(m, b, i_p);
    if roots.is_empty() {
        return Err(InductionError::NeutralCoreNotBracketable { lo: i_p.lo, hi: i_p.hi });
    }
    let a = roots.iter().copied().fold(f64::INFINITY, f64::min);
    let bb = roots.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let flanks = [Interval::new(j.lo, i_p.lo), Interval::new(i_p.hi, j.hi)];
    let connectors = [Interval::new(i_p.lo, a), Interval::new(bb, i_p.hi)];

    let mut flank_min = [None, None];
    let mut flank_cov = [0.0, 0.0];
    let mut entry_min = [None, None];
    let mut entry_bound = [f64::INFINITY; 2];
    for s in 0..2 {
        let flank = flanks[s];
        if flank.is_empty() {
            continue;
        }
        let ret = first_return(m, flank, ind.truncation)?;
        flank_cov[s] = ret.coverage;
        flank_min[s] = min_expansion(m, &ret).map(|(d, _, _)| d.exp());
        let conn = connectors[s];
        if conn.is_empty() {
            continue;
        }
        let hull = Interval::new(flank.lo.min(conn.lo), flank.hi.max(conn.hi));
        let entry = first_entry(m, hull, flank, ind.truncation)?;
        entry_min[s] = entry
            .branches
            .iter()
            .filter(|br| br.time > 0 && conn.contains_interval(&br.domain))
            .filter_map(|br| branch_min(m, br, PROBES))
            .map(|(d, _)| d.exp())
            .min_by(f64::total_cmp);
        entry_bound[s] = flank.len() / (epsilon * k * conn.len());
    }
    let chosen = if flanks[1].len() > flanks[0].len() { 1 } else { 0 };
    let entry_bound_holds = (0..2).all(|s| entry_min[s].is_none_or(|g| g >= entry_bound[s]));
    let valid = flank_min[chosen].is_some_and(|v| v > 3.0);
    Ok(NeutralCore {
        p,
        branch: b.domain,
        i_p,
        fixed_hull: Interval::new(a, bb),
        flanks,
        connectors,
        chosen,
        flank_min_expansion: flank_min,
        flank_coverage: flank_cov,
        entry_min_derivative: entry_min,
        entry_bound,
        entry_bound_holds,
        valid,
    })
}
