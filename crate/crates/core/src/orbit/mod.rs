//! Orbits, ω-limit covers, periodic and periodic-like points, basin samples.
//!
//! Exact binary64 iteration of maps with dyadic slopes collapses quickly: the
//! tent or doubling orbit of any float reaches 0 within about 53 steps. The
//! statistical routines here ([`omega_cover`], [`basin_sample`]) therefore
//! follow a *dithered* orbit, which adds a deterministic perturbation of
//! size `2^-45 (hi - lo)` after every step, drawn from a stream seeded by the
//! start point. [`orbit`] and everything that depends on exact algebraic
//! identities iterate without dither.

mod basin;
mod cover;
pub mod cylinder;
mod periodic;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::map::{MapError, PiecewiseMap};
use crate::rng::{dither_stream, Sampler};

pub use basin::{attracting_cycles, basin_sample, basin_sample_with, AttractingCycle, BasinConfig, CycleSource, RawPointRecord};
pub use cover::{CoverBuilder, IntervalCover};
pub use periodic::{
    detect_periodic_like, find_periodic_points, lateral_orbit, PeriodicLike, PeriodicPoint,
    PERIODIC_LIKE_EPS,
};

pub const DITHER: f64 = 1.0 / (1u64 << 45) as f64;

/// Upper bound on cylinder counts before enumeration gives up.
pub const MAX_CYLINDERS: usize = 10_000_000;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum OrbitError {
    #[error("orbit hit the exceptional set at iterate {index}, before the burn-in ended")]
    DegenerateOrbit { index: usize },
    #[error("cylinder count {count} exceeds the limit")]
    BranchExplosion { count: usize },
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
    #[error(transparent)]
    Map(#[from] MapError),
}

/// Iterates with running sums of `log |Df|`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OrbitSegment {
    pub start: f64,
    /// `iterates[0] = start`, `iterates[k + 1] = f(iterates[k])`.
    pub iterates: Vec<f64>,
    /// `log_deriv_prefix[k] = sum_{i < k} log |Df(iterates[i])|`.
    pub log_deriv_prefix: Vec<f64>,
    /// Index of the iterate lying on `C_f`, if the orbit stopped there.
    pub terminated_at_exceptional: Option<usize>,
}

impl OrbitSegment {
    /// `log |Df^k(start)|`.
    pub fn log_deriv(&self, k: usize) -> f64 {
        self.log_deriv_prefix[k]
    }
}

/// Exact orbit of `x` for `n` steps or until an iterate lies on `C_f`.
pub fn orbit(m: &PiecewiseMap, x: f64, n: usize) -> Result<OrbitSegment, MapError> {
    if !m.contains(x) {
        return Err(MapError::OutOfRange(x));
    }
    let mut iterates = Vec::with_capacity(n + 1);
    let mut prefix = Vec::with_capacity(n + 1);
    iterates.push(x);
    prefix.push(0.0);
    let mut terminated = None;
    let mut y = x;
    let mut sum = 0.0;
    for k in 0..n {
        match m.eval_with_deriv(y) {
            Ok((next, d)) => {
                sum += d.abs().ln();
                y = next;
                iterates.push(y);
                prefix.push(sum);
            }
            Err(MapError::ExceptionalPoint(_)) => {
                terminated = Some(k);
                break;
            }
            Err(e) => return Err(e),
        }
    }
    if terminated.is_none() && n > 0 && m.is_exceptional(y) {
        terminated = Some(n);
    }
    if n == 0 && m.is_exceptional(x) {
        terminated = Some(0);
    }
    Ok(OrbitSegment {
        start: x,
        iterates,
        log_deriv_prefix: prefix,
        terminated_at_exceptional: terminated,
    })
}

/// Orbit with a small deterministic perturbation after each step.
pub struct Dithered<'a> {
    m: &'a PiecewiseMap,
    x: f64,
    noise: Sampler,
    amplitude: f64,
}

impl<'a> Dithered<'a> {
    pub fn new(m: &'a PiecewiseMap, x: f64) -> Self {
        Dithered {
            m,
            x,
            noise: dither_stream(x),
            amplitude: DITHER * (m.hi() - m.lo()),
        }
    }

    pub fn current(&self) -> f64 {
        self.x
    }

    fn perturb(&mut self, y: f64) -> f64 {
        let mut z = (y + self.amplitude * self.noise.symmetric()).clamp(self.m.lo(), self.m.hi());
        while self.m.is_exceptional(z) {
            z = (z + self.amplitude * self.noise.symmetric()).clamp(self.m.lo(), self.m.hi());
        }
        z
    }

    /// Advances one step; fails only when the current point is on `C_f`.
    pub fn step(&mut self) -> Result<f64, MapError> {
        let y = self.m.eval(self.x)?;
        self.x = self.perturb(y);
        Ok(self.x)
    }

    /// Advances one step and returns `Df` at the point left behind.
    pub fn step_with_deriv(&mut self) -> Result<(f64, f64), MapError> {
        let (y, d) = self.m.eval_with_deriv(self.x)?;
        self.x = self.perturb(y);
        Ok((self.x, d))
    }
}

/// Visit cover of the dithered orbit of `x` over iterates
/// `burn_in .. burn_in + length`.
pub fn omega_cover(
    m: &PiecewiseMap,
    x: f64,
    burn_in: usize,
    length: usize,
    resolution: f64,
) -> Result<IntervalCover, OrbitError> {
    check_cover_args(burn_in, length, resolution)?;
    let mut builder = CoverBuilder::new(m.ambient(), resolution);
    if length == 0 {
        return Ok(IntervalCover::empty(resolution));
    }
    if !m.contains(x) {
        return Err(MapError::OutOfRange(x).into());
    }
    let mut orbit = Dithered::new(m, x);
    for i in 0..burn_in {
        if orbit.step().is_err() {
            return Err(OrbitError::DegenerateOrbit { index: i });
        }
    }
    for i in 0..length {
        builder.add(orbit.current());
        if i + 1 < length && orbit.step().is_err() {
            break;
        }
    }
    Ok(builder.finish())
}

pub(crate) fn check_cover_args(burn_in: usize, length: usize, resolution: f64) -> Result<(), OrbitError> {
    if burn_in.saturating_add(length) > 10_000_000 {
        return Err(OrbitError::InvalidArgument("burn_in + length must not exceed 1e7".into()));
    }
    if !(resolution >= 1e-6) {
        return Err(OrbitError::InvalidArgument("resolution must be at least 1e-6".into()));
    }
    Ok(())
}
