//! Multiset order, tournaments, valley queries and peak removal, and the
//! end-to-end check that large tournaments come with a loop.

mod multiset;
mod pawn;
mod tournament;
mod valley;

use thiserror::Error;

use crate::chase::ChaseError;
use crate::surgery::SurgeryError;

pub use multiset::{chain_bound, lex_minimum, mlex_compare, timestamps_of, TimestampMultiset};
pub use pawn::{verify_pawn, EdgeRecord, PawnConfig, PawnReport, StageRecord, Verdict};
pub use tournament::{
    edge_predicate, find_tournament, has_loop, max_tournament, monochromatic_subtournament, Tournament, EDGE,
};
pub use valley::{
    defines_tournament, is_valley_query, path_function_check, peak_removal_step, size4_loop, size4_sweep, valley_witness,
    valley_witness_from, witnesses, FunctionViolation, LoopCase, PeakStep, Size4Hit, ValleyRun, Witness,
};

#[derive(Debug, Error)]
pub enum AnalysisError {
    #[error("term {0} does not occur in the trace")]
    UnknownTerm(String),
    #[error("query has an atom of arity greater than two")]
    NotBinary,
    #[error("witness is already a valley query")]
    AlreadyValley,
    #[error("term {0} was not created by a trigger")]
    NoCreatingTrigger(String),
    #[error("atom {0} around the removed peak is not produced by its creating trigger")]
    HeadContainment(String),
    #[error("no witness for {0}")]
    NoWitness(String),
    #[error("timestamp multiset did not decrease: {before:?} then {after:?}")]
    NoDescent { before: Vec<usize>, after: Vec<usize> },
    #[error("precondition violated: {0}")]
    Precondition(String),
    #[error("soundness check failed: {0}")]
    Soundness(String),
    #[error(transparent)]
    Surgery(#[from] SurgeryError),
    #[error(transparent)]
    Chase(#[from] ChaseError),
}

impl AnalysisError {
    /// Errors that contradict a property the construction guarantees.
    pub fn is_soundness_failure(&self) -> bool {
        matches!(
            self,
            AnalysisError::NoCreatingTrigger(_)
                | AnalysisError::HeadContainment(_)
                | AnalysisError::NoWitness(_)
                | AnalysisError::NoDescent { .. }
                | AnalysisError::Soundness(_)
        )
    }
}
