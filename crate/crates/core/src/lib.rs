//! Numerical toolkit for piecewise smooth non-flat interval maps.
//!
//! The crate builds maps from a small expression language, iterates them with
//! symbolic derivatives, constructs induced first-entry and first-return maps
//! with distortion and expansion estimates, classifies attractors from basin
//! samples, and fits uniform expansion certificates away from the critical set.

pub mod classifier;
pub mod expr;
pub mod fixtures;
pub mod induction;
pub mod interval;
pub mod mane;
pub mod map;
pub mod orbit;
pub mod report;
pub mod rng;

pub use interval::Interval;
pub use map::{build_map, LateralPoint, MapError, MapSpec, PiecewiseMap, Side};
