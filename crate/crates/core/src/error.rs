// SPDX-License-Identifier: Apache-2.0

use std::io;

use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("unknown genotype code {code:?} at position {position}")]
    UnknownGenotype { position: usize, code: String },

    #[error("profile has no bits")]
    EmptyProfile,

    #[error("no profiles")]
    NoProfiles,

    #[error("bit length {0} exceeds the supported maximum of {max}", max = crate::MAX_BIT_LENGTH)]
    BitLengthTooLarge(usize),

    #[error("malformed hex: {0}")]
    MalformedHex(String),

    #[error("malformed line: {0}")]
    MalformedLine(String),

    #[error("invalid profile id {0:?}")]
    InvalidId(String),

    #[error("duplicate profile id {0:?}")]
    DuplicateId(String),

    #[error("length mismatch: expected {expected}, found {found}")]
    LengthMismatch { expected: usize, found: usize },

    #[error("profile {id:?} has nonzero padding bits")]
    CorruptProfile { id: String },

    #[error("missing `#bits=<L>` header")]
    MissingHeader,

    #[error("block size {0} not supported (expected 16, 32 or 64)")]
    InvalidBlockSize(usize),

    #[error("cells per task {0} not supported (expected 4, 8 or 16)")]
    InvalidCellsPerTask(usize),

    #[error("worker count must be at least 1")]
    ZeroWorkers,

    #[error("invalid memory budget {0:?}")]
    InvalidBudget(String),

    #[error("budget of {budget} bytes is infeasible; the minimum feasible budget is {minimum} bytes")]
    InfeasiblePlan { budget: u64, minimum: u64 },

    #[error("batch {index} needs {needed} bytes but the budget is {budget}")]
    BatchOverBudget { index: usize, needed: u64, budget: u64 },

    #[error("reference source failed: {0}")]
    Source(String),

    #[error("job aborted after {completed} completed batches: {source}")]
    Aborted {
        completed: usize,
        #[source]
        source: Box<Error>,
    },

    #[error("malformed score file: {0}")]
    ScoreFormat(String),

    #[error("line {line}: {source}")]
    AtLine {
        line: usize,
        #[source]
        source: Box<Error>,
    },

    #[error(transparent)]
    Io(#[from] io::Error),
}

impl Error {
    pub(crate) fn at_line(self, line: usize) -> Error {
        Error::AtLine {
            line,
            source: Box::new(self),
        }
    }

    /// Strips any line-number wrappers.
    pub fn root(&self) -> &Error {
        match self {
            Error::AtLine { source, .. } => source.root(),
            other => other,
        }
    }

    /// True for errors caused by a budget too small for the job.
    pub fn is_infeasible_plan(&self) -> bool {
        matches!(self.root(), Error::InfeasiblePlan { .. })
    }

    /// True for errors caused by the caller's inputs (files, flags, codes),
    /// as opposed to I/O failures or aborted jobs.
    pub fn is_input_error(&self) -> bool {
        !matches!(
            self.root(),
            Error::Io(_) | Error::Aborted { .. } | Error::Source(_) | Error::InfeasiblePlan { .. }
        )
    }
}
