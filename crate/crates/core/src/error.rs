use alloc::boxed::Box;
use alloc::string::String;
use alloc::vec::Vec;

use crate::gossip::TrialOutcome;
use crate::optim::RoundMetrics;

pub type Result<T, E = Error> = core::result::Result<T, E>;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum Error {
    #[error("invalid parameter: {0}")]
    Parameter(String),

    #[error("graph is disconnected")]
    Disconnected,

    #[error("matrix is not symmetric (asymmetry {0:e} in the infinity norm)")]
    NotSymmetric(f64),

    #[error("dimension mismatch: expected {expected}, got {got}")]
    Dimension { expected: usize, got: usize },

    #[error("linear system is singular")]
    Singular,

    #[error("eigensolver did not converge")]
    NoConvergence,

    #[error("scheme `{0}` needs the effective resistances of the graph")]
    MissingResistance(&'static str),

    #[error("activation matrix is incompatible with the graph: {0}")]
    Incompatible(String),

    #[error("chain not mixed within {0} steps")]
    NotMixed(u64),

    #[error("exceeded max_ticks = {max_ticks}: {unfinished} of {} trials never reached the tolerance", .partial.len())]
    ExceededMaxTicks {
        max_ticks: u64,
        unfinished: usize,
        partial: Vec<TrialOutcome>,
    },

    #[error("iteration diverged at round {round}")]
    Diverged {
        round: usize,
        trace: Box<Vec<RoundMetrics>>,
    },

    #[error("iteration cap of {0} exceeded")]
    IterationCap(usize),
}

impl Error {
    pub(crate) fn param(msg: impl Into<String>) -> Self {
        Error::Parameter(msg.into())
    }
}
