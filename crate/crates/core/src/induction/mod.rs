//! Nice intervals, induced Markov maps and their distortion and expansion
//! estimates.
//!
//! Branches of first-entry and first-return maps are found by refining
//! monotone cylinders of `f^t` against `C_f` and the endpoints of the base
//! interval. The search is truncated at a time horizon and at a cap on live
//! cylinders, so the discovered branches may miss part of the base; the
//! uncovered fraction is reported rather than hidden.

mod branches;
mod distortion;
mod expansion;
mod nice;
mod partition;
mod toy;

use thiserror::Error;

use crate::map::MapError;
use crate::orbit::OrbitError;

pub use branches::{first_entry, first_return, InducedBranch, InducedKind, InducedMap, LIVE_CAP};
pub use distortion::{distortion_bound, koebe_estimate, measure_distortion, sampled_distortion, KoebeEstimate};
pub use expansion::{critical_component, expansion_analysis, ExpansionMode, ExpansionReport, NeutralCore};
pub use nice::{find_nice_interval, is_nice};
pub use partition::{refine_partition, Partition, PartitionCell};
pub use toy::{NeutralEntryCheck, NeutralEntryModel};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum InductionError {
    #[error("f^{n} is not a diffeomorphism on ({lo}, {hi})")]
    NotDiffeomorphic { lo: f64, hi: f64, n: usize },
    #[error("fixed points of F^2 could not be bracketed in ({lo}, {hi})")]
    NeutralCoreNotBracketable { lo: f64, hi: f64 },
    #[error("cylinder count {count} exceeds the limit")]
    BranchExplosion { count: usize },
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
    #[error(transparent)]
    Map(#[from] MapError),
}

impl From<OrbitError> for InductionError {
    fn from(e: OrbitError) -> Self {
        match e {
            OrbitError::BranchExplosion { count } => InductionError::BranchExplosion { count },
            OrbitError::InvalidArgument(s) => InductionError::InvalidArgument(s),
            OrbitError::Map(m) => InductionError::Map(m),
            e @ OrbitError::DegenerateOrbit { .. } => InductionError::InvalidArgument(e.to_string()),
        }
    }
}
