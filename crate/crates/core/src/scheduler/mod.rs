// SPDX-License-Identifier: Apache-2.0

//! Out-of-core execution: comparisons larger than a memory budget are split
//! into reference-row batches and run through a stage-in / compute /
//! stage-out pipeline.
//!
//! The query panel is staged once and stays resident. For each batch a chunk
//! of reference rows is copied into a staging buffer, scored into a score
//! buffer, and the scores are drained to a [`ScoreSink`]. With overlap
//! enabled, draining batch `k` runs concurrently with staging batch `k + 1`;
//! a batch's compute never overlaps its own transfers.
//!
//! ```text
//!  in(0) | compute(0) | out(0)     | compute(1) | out(1)     | ...
//!                     | in(1)      |            | in(2)      |
//! ```

mod budget;
mod ledger;
mod pipeline;
mod plan;

pub use budget::MemoryBudget;
pub(crate) use ledger::ms;
pub use ledger::{AllocationCounts, BatchTiming, TimingLedger};
pub use pipeline::{run_pipeline, BufferPolicy, PipelineConfig};
pub use plan::{plan_batches, BatchPlan, JobShape, SCORE_CELL_BYTES};

use std::ops::Range;

use crate::error::{Error, Result};
use crate::kernel::{
    naive_into, relayout_queries, BlockedKernel, KernelConfig, KernelKind, Panel, QueryLayout, ScoreMatrix,
};
use crate::word::Word;

/// Computes one batch of scores. The pipeline only talks to this trait, so a
/// device-backed implementation can be dropped in without touching it.
pub trait Executor<W: Word>: Sync {
    /// Query-side data kept resident for the whole job.
    type Resident: Send + Sync;

    fn name(&self) -> &'static str;

    fn stage_queries(&self, queries: &Panel<W>) -> Result<Self::Resident>;

    /// Scores row-major `refs` against the resident queries into `out`.
    fn compute(&self, refs: &[W], resident: &Self::Resident, out: &mut [u32]) -> Result<()>;
}

/// Single-threaded triple loop.
#[derive(Debug, Clone, Copy, Default)]
pub struct NaiveExecutor;

impl<W: Word> Executor<W> for NaiveExecutor {
    type Resident = Panel<W>;

    fn name(&self) -> &'static str {
        "naive"
    }

    fn stage_queries(&self, queries: &Panel<W>) -> Result<Panel<W>> {
        Ok(queries.clone())
    }

    fn compute(&self, refs: &[W], resident: &Panel<W>, out: &mut [u32]) -> Result<()> {
        naive_into(refs, resident.words(), resident.n_words(), out);
        Ok(())
    }
}

impl<W: Word> Executor<W> for BlockedKernel {
    type Resident = QueryLayout<W>;

    fn name(&self) -> &'static str {
        "blocked"
    }

    fn stage_queries(&self, queries: &Panel<W>) -> Result<QueryLayout<W>> {
        Ok(relayout_queries(queries))
    }

    fn compute(&self, refs: &[W], resident: &QueryLayout<W>, out: &mut [u32]) -> Result<()> {
        self.compute_into(refs, resident, out)
    }
}

/// Where reference rows come from.
pub trait RefSource<W: Word> {
    fn n_rows(&self) -> usize;
    fn n_words(&self) -> usize;
    /// Copies rows `rows` into `dst` (`rows.len() * n_words` words).
    fn read_rows(&mut self, rows: Range<usize>, dst: &mut [W]) -> Result<()>;
}

/// An in-memory panel as a reference source.
#[derive(Debug, Clone, Copy)]
pub struct PanelSource<'a, W> {
    panel: &'a Panel<W>,
}

impl<'a, W: Word> PanelSource<'a, W> {
    pub fn new(panel: &'a Panel<W>) -> Self {
        PanelSource { panel }
    }
}

impl<W: Word> RefSource<W> for PanelSource<'_, W> {
    fn n_rows(&self) -> usize {
        self.panel.len()
    }

    fn n_words(&self) -> usize {
        self.panel.n_words()
    }

    fn read_rows(&mut self, rows: Range<usize>, dst: &mut [W]) -> Result<()> {
        if rows.end > self.panel.len() {
            return Err(Error::Source(format!("rows {rows:?} out of range")));
        }
        dst.copy_from_slice(self.panel.rows(rows));
        Ok(())
    }
}

/// Receives score rows in reference order.
pub trait ScoreSink {
    fn begin(&mut self, n_refs: usize, n_queries: usize) -> Result<()>;
    /// `cells` holds whole rows starting at reference row `first_row`.
    fn write_rows(&mut self, first_row: usize, cells: &[u32]) -> Result<()>;
    /// Called once after the last batch; results are final only after this.
    fn finish(&mut self) -> Result<()>;
    /// Called instead of `finish` when the job fails.
    fn abort(&mut self) {}
}

/// Collects scores into a [`ScoreMatrix`].
#[derive(Debug)]
pub struct MatrixSink {
    row_ids: Vec<String>,
    col_ids: Vec<String>,
    scores: Vec<u32>,
    finished: bool,
}

impl MatrixSink {
    pub fn new(row_ids: Vec<String>, col_ids: Vec<String>) -> Self {
        MatrixSink {
            row_ids,
            col_ids,
            scores: Vec::new(),
            finished: false,
        }
    }

    /// The finished matrix, or `None` if the job did not complete.
    pub fn into_matrix(self) -> Option<ScoreMatrix> {
        if !self.finished {
            return None;
        }
        ScoreMatrix::new(self.row_ids, self.col_ids, self.scores).ok()
    }
}

impl ScoreSink for MatrixSink {
    fn begin(&mut self, n_refs: usize, n_queries: usize) -> Result<()> {
        if n_refs != self.row_ids.len() || n_queries != self.col_ids.len() {
            return Err(Error::LengthMismatch {
                expected: self.row_ids.len() * self.col_ids.len(),
                found: n_refs * n_queries,
            });
        }
        self.scores = Vec::with_capacity(n_refs * n_queries);
        self.finished = false;
        Ok(())
    }

    fn write_rows(&mut self, first_row: usize, cells: &[u32]) -> Result<()> {
        let expected = first_row * self.col_ids.len();
        if self.scores.len() != expected {
            return Err(Error::LengthMismatch {
                expected,
                found: self.scores.len(),
            });
        }
        self.scores.extend_from_slice(cells);
        Ok(())
    }

    fn finish(&mut self) -> Result<()> {
        self.finished = true;
        Ok(())
    }

    fn abort(&mut self) {
        self.scores.clear();
    }
}

/// Runs `plan` with the executor `kernel` selects.
pub fn run_job<W, S, K>(
    kernel: &KernelConfig,
    plan: &BatchPlan,
    source: &mut S,
    queries: &Panel<W>,
    sink: &mut K,
    config: PipelineConfig,
) -> Result<TimingLedger>
where
    W: Word,
    S: RefSource<W>,
    K: ScoreSink + Send,
{
    match kernel.kind {
        KernelKind::Naive => run_pipeline(plan, source, queries, &NaiveExecutor, sink, config),
        KernelKind::Blocked => {
            let executor = BlockedKernel::new(kernel.tile, kernel.workers)?;
            run_pipeline(plan, source, queries, &executor, sink, config)
        }
    }
}
