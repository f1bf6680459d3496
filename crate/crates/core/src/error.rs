use crate::lts::StateId;
use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("state space is empty")]
    EmptyStateSpace,

    #[error("state {0} has no successor (transition relation must be left-total)")]
    NotLeftTotal(StateId),

    #[error("reference to unknown state {id} (system has {states} states)")]
    DanglingState { id: usize, states: usize },

    #[error("labeling covers {labels} states but the system has {states}")]
    PartialLabeling { labels: usize, states: usize },

    #[error("invalid state {id} (system has {states} states)")]
    InvalidState { id: usize, states: usize },

    #[error("invalid reach bound {0}: bounds must be at least 1")]
    InvalidReachBound(usize),

    #[error("invalid refinement map: {0}")]
    InvalidRefinementMap(String),

    #[error("segment {index} cannot be resolved from the partition index")]
    IndexOutOfRange { index: usize },

    #[error("invalid partition index: {0}")]
    InvalidPartition(String),

    #[error("invalid lasso: {0}")]
    InvalidLasso(String),

    #[error("missing rank entry {0}")]
    MissingRankEntry(String),

    #[error("skip bound must be at least 2, got {0}")]
    InvalidSkipBound(usize),

    #[error("forced-stutter graph of column {w} has a cycle through {s}; relation is not engine-valid")]
    CyclicForcedStutter { s: StateId, w: StateId },

    #[error("engine witness failed independent certification: {0}")]
    CertificationFailed(String),

    #[error("verdict is not a failure")]
    NotAFailure,

    #[error("state space exceeds the configured cap of {0} states")]
    StateSpaceLimitExceeded(usize),

    #[error("incompatible models: {0}")]
    IncompatibleModels(String),

    #[error("fault {fault} is not applicable to model kind {kind}")]
    InapplicableFault { fault: String, kind: String },

    #[error("invalid model parameters: {0}")]
    InvalidParams(String),

    #[error("unknown register `{0}`")]
    UnknownRegister(String),

    #[error("program counter map inconsistent: {0}")]
    PcMapInconsistent(String),

    #[error("store domain too large: {states} states exceeds cap {cap}")]
    DomainTooLarge { states: u128, cap: usize },

    #[error("parse error on line {line}: {message}")]
    Parse { line: usize, message: String },

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}
