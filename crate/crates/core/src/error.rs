use thiserror::Error;

use crate::rational::Rat;

/// Errors raised by validation, the solvers and the pipeline.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("edge {edge} points at unknown state (from {from}, to {to})")]
    DanglingEdge { edge: usize, from: usize, to: usize },

    #[error("state {state} has no outgoing edge")]
    EmptySuccessorSet { state: usize },

    #[error("bad distribution at state {state}: {reason}")]
    BadDistribution { state: usize, reason: String },

    #[error("state {state} has color {color}, above the limit {limit}")]
    ColorOutOfRange { state: usize, color: u32, limit: u32 },

    #[error("duplicate edge {from} -> {to}")]
    DuplicateEdge { from: usize, to: usize },

    #[error("state ids must be dense: expected {expected}, found {found}")]
    NonDenseIds { expected: usize, found: usize },

    #[error("reward {reward} on edge {edge} exceeds the bound {bound}")]
    RewardOutOfRange { edge: usize, reward: i64, bound: i64 },

    #[error("strategy does not fit the game: {0}")]
    BadStrategy(String),

    #[error("{what}: budget of {budget} exceeded")]
    BudgetExceeded { what: String, budget: u64 },

    #[error("minimizer strategy attaining the minimum at every state not found")]
    UniformityViolated,

    #[error("synthesized strategy from state {state} falls short of the value by {gap}")]
    SynthesisGapDetected { state: usize, gap: Rat },

    #[error("storage-parity set changed between cap {cap} and {doubled}")]
    CapTooSmallSuspected { cap: u64, doubled: u64 },

    #[error("bound search diverged past {limit}")]
    Divergence { limit: u64 },

    #[error("interval did not close below cap limit {limit} (gap {gap})")]
    CapLimit { limit: u64, gap: Rat },

    #[error("bad jump table: {0}")]
    BadJumpTable(String),

    #[error("energy tracking overflow: {0}")]
    EnergyTrackOverflow(String),

    #[error("not a maximizing MDP: state {state} is owned by the minimizer")]
    NotMaximizingMdp { state: usize },

    #[error("internal invariant violated: {0}")]
    Internal(String),

    #[error("parse error at {at}: {msg}")]
    Parse { at: String, msg: String },

    #[error("io error: {0}")]
    Io(String),

    #[error("{stage}: {source}")]
    InStage { stage: &'static str, source: Box<Error> },
}

impl Error {
    /// Short machine-readable name of the variant.
    pub fn kind(&self) -> &'static str {
        match self {
            Error::DanglingEdge { .. } => "DanglingEdge",
            Error::EmptySuccessorSet { .. } => "EmptySuccessorSet",
            Error::BadDistribution { .. } => "BadDistribution",
            Error::ColorOutOfRange { .. } => "ColorOutOfRange",
            Error::DuplicateEdge { .. } => "DuplicateEdge",
            Error::NonDenseIds { .. } => "NonDenseIds",
            Error::RewardOutOfRange { .. } => "RewardOutOfRange",
            Error::BadStrategy(_) => "BadStrategy",
            Error::BudgetExceeded { .. } => "BudgetExceeded",
            Error::UniformityViolated => "UniformityViolated",
            Error::SynthesisGapDetected { .. } => "SynthesisGapDetected",
            Error::CapTooSmallSuspected { .. } => "CapTooSmallSuspected",
            Error::Divergence { .. } => "Divergence",
            Error::CapLimit { .. } => "CapLimit",
            Error::BadJumpTable(_) => "BadJumpTable",
            Error::EnergyTrackOverflow(_) => "EnergyTrackOverflow",
            Error::NotMaximizingMdp { .. } => "NotMaximizingMdp",
            Error::Internal(_) => "Internal",
            Error::Parse { .. } => "Parse",
            Error::Io(_) => "Io",
            Error::InStage { source, .. } => source.kind(),
        }
    }

    /// Process exit code used by the command line tool.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::InStage { source, .. } => source.exit_code(),
            Error::BudgetExceeded { .. }
            | Error::CapTooSmallSuspected { .. }
            | Error::Divergence { .. }
            | Error::CapLimit { .. } => 2,
            Error::UniformityViolated
            | Error::SynthesisGapDetected { .. }
            | Error::EnergyTrackOverflow(_)
            | Error::Internal(_) => 3,
            _ => 1,
        }
    }
}

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}

/// Attaches the pipeline stage to an error.
pub trait Stage<T> {
    fn stage(self, stage: &'static str) -> Result<T>;
}

impl<T> Stage<T> for Result<T> {
    fn stage(self, stage: &'static str) -> Result<T> {
        self.map_err(|e| match e {
            Error::InStage { .. } => e,
            e => Error::InStage { stage, source: Box::new(e) },
        })
    }
}

pub type Result<T> = std::result::Result<T, Error>;
