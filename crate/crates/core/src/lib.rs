//! Solvers for costly liquid democracy elections.
//!
//! An [`Election`] is a delegation graph where each voter pays a voting cost
//! to cast a ballot or a delegating cost to pass it along one approved edge.
//! The crate finds cost-minimizing delegations, with or without bounds on
//! delegation chains and voting power, and decides whether a controller can
//! make a designated voter the sole super-voter.

pub mod bench;
pub mod constrained;
pub mod control;
pub mod error;
pub mod gen;
pub mod instance;
pub mod model;
pub mod oracle;
pub mod reachability;
pub mod reductions;
mod subsets;

pub use error::{Error, Result};
pub use model::{max_out_degree, metrics, validate_solution, Budget, Election, Feasibility, Solution, SolveReport, VoterRecord};

/// Size guards for the exponential routines.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub struct Limits {
    /// Skip every size guard.
    pub force: bool,
}

impl Limits {
    pub const FORCED: Limits = Limits { force: true };

    pub(crate) fn check(&self, what: &str, value: u128, limit: u64) -> Result<()> {
        if !self.force && value > limit as u128 {
            return Err(Error::InstanceTooLarge {
                what: format!("{what} ({value})"),
                limit,
            });
        }
        Ok(())
    }
}
