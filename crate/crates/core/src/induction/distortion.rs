use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{InducedMap, InductionError};
use crate::interval::Interval;
use crate::map::PiecewiseMap;
use crate::orbit::cylinder::Cylinder;

/// Ingredients and value of the Koebe-type bound
/// `((1 + δ) / δ)^2 exp(Ô(ε) Σ)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct KoebeEstimate {
    /// Relative size of the smaller component of `f^n(T0) \ f^n(J0)`.
    pub delta: f64,
    /// `max_j |f^j(T0)|` for `0 <= j <= n`.
    pub epsilon: f64,
    /// `sum_{i < n} |f^i(J0)|`.
    pub sum: f64,
    /// `Ô(ε) = ε · N` with `N` the largest nonlinearity `|D²f / Df|` seen.
    pub o_hat: f64,
    pub bound: f64,
}

/// Images `f^j(I)` for `j = 0..=n`, failing if `f^n` is not monotone on `I`.
fn images(m: &PiecewiseMap, iv: Interval, n: usize) -> Result<Vec<Interval>, InductionError> {
    let not_diffeo = InductionError::NotDiffeomorphic { lo: iv.lo, hi: iv.hi, n };
    let mut c = Cylinder::identity(iv);
    let mut out = vec![iv];
    for _ in 0..n {
        let pieces = c.refine(m).map_err(|_| not_diffeo.clone())?;
        if pieces.len() != 1 {
            return Err(not_diffeo);
        }
        c = pieces[0];
        out.push(c.image());
    }
    Ok(out)
}

/// Largest `|D²f / Df|` over 17 interior samples of `iv`.
fn local_nonlinearity(m: &PiecewiseMap, iv: Interval) -> f64 {
    (1..=17)
        .map(|k| iv.at(k as f64 / 18.0))
        .filter_map(|x| Some((m.deriv2(x).ok()? / m.deriv(x).ok()?).abs()))
        .fold(0.0, f64::max)
}

pub fn koebe_estimate(m: &PiecewiseMap, t0: Interval, j0: Interval, n: usize) -> Result<KoebeEstimate, InductionError> {
    if t0.is_empty() || j0.is_empty() || !t0.contains_interval(&j0) {
        return Err(InductionError::InvalidArgument("J0 must be a nontrivial subinterval of T0".into()));
    }
    let t_img = images(m, t0, n)?;
    let j_img = images(m, j0, n)?;
    let epsilon = t_img.iter().map(Interval::len).fold(0.0, f64::max);
    let sum: f64 = j_img[..n].iter().map(Interval::len).sum();
    let global = m.branches().iter().map(|b| b.nonlinearity).fold(0.0, f64::max);
    let local = t_img.iter().map(|iv| local_nonlinearity(m, *iv)).fold(0.0, f64::max);
    let o_hat = epsilon * global.max(local);
    let (t, j) = (t_img[n], j_img[n]);
    let delta = ((j.lo - t.lo).min(t.hi - j.hi) / j.len()).max(0.0);
    let bound = ((1.0 + delta) / delta).powi(2) * (o_hat * sum).exp();
    Ok(KoebeEstimate {
        delta,
        epsilon,
        sum,
        o_hat,
        bound,
    })
}

/// Upper bound on `|Df^n(x) / Df^n(y)|` for `x, y` in `J0`.
pub fn distortion_bound(m: &PiecewiseMap, t0: Interval, j0: Interval, n: usize) -> Result<f64, InductionError> {
    Ok(koebe_estimate(m, t0, j0, n)?.bound)
}

/// `max / min` of `|Df^n|` over `probes` evenly spaced interior points.
pub fn sampled_distortion(m: &PiecewiseMap, iv: Interval, n: usize, probes: usize) -> f64 {
    let mut lo = f64::INFINITY;
    let mut hi = f64::NEG_INFINITY;
    for k in 0..probes {
        let x = iv.at((k as f64 + 0.5) / probes as f64);
        if let Ok(d) = m.deriv_product(x, n) {
            lo = lo.min(d.log_abs);
            hi = hi.max(d.log_abs);
        }
    }
    if hi < lo {
        1.0
    } else {
        (hi - lo).exp()
    }
}

/// Largest sampled ratio `|DF(x) / DF(y)|` over the branches.
pub fn measure_distortion(m: &PiecewiseMap, ind: &InducedMap, probes: usize) -> f64 {
    ind.branches
        .par_iter()
        .map(|b| sampled_distortion(m, b.domain, b.time, probes.max(2)))
        .reduce(|| 1.0, f64::max)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fixtures;

    #[test]
    fn tent_bound_is_pure_koebe_factor() {
        let m = fixtures::tent();
        let e = koebe_estimate(&m, Interval::new(0.1, 0.2), Interval::new(0.125, 0.175), 2).unwrap();
        assert_eq!(e.o_hat, 0.0);
        // f^2(T0) = (0.4, 0.8), f^2(J0) = (0.5, 0.7): delta = 0.1 / 0.2
        assert!((e.delta - 0.5).abs() < 1e-12);
        assert!((e.bound - 9.0).abs() < 1e-9);
        assert_eq!(sampled_distortion(&m, Interval::new(0.125, 0.175), 2, 100), 1.0);
    }

    #[test]
    fn fold_inside_is_not_diffeomorphic() {
        let m = fixtures::logistic(4.0);
        let (t0, j0) = (Interval::new(0.1, 0.2), Interval::new(0.12, 0.18));
        // f(T0) = (0.36, 0.64) contains the critical point
        assert!(matches!(
            distortion_bound(&m, t0, j0, 3),
            Err(InductionError::NotDiffeomorphic { .. })
        ));
        let b = distortion_bound(&m, t0, j0, 1).unwrap();
        assert!(sampled_distortion(&m, j0, 1, 100) <= b);
    }

    #[test]
    fn huge_collars_leave_the_exponential() {
        let m = fixtures::tent();
        let e = koebe_estimate(&m, Interval::new(0.0, 0.5), Interval::new(0.25 - 1e-9, 0.25 + 1e-9), 1).unwrap();
        assert!(e.bound < 1.0 + 1e-7);
    }
}
