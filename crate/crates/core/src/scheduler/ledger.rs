// SPDX-License-Identifier: Apache-2.0

use std::io::Write;
use std::time::Duration;

use crate::error::Result;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct BatchTiming {
    pub index: usize,
    pub rows: usize,
    pub stage_in: Duration,
    pub compute: Duration,
    pub stage_out: Duration,
}

/// Staging-buffer allocation events per buffer role over one job.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct AllocationCounts {
    pub queries: usize,
    pub refs: usize,
    pub scores: usize,
}

/// Per-batch phase timings for one pipeline run. Batch 0's stage-in includes
/// staging the resident query panel.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct TimingLedger {
    pub batches: Vec<BatchTiming>,
    pub allocations: AllocationCounts,
    /// Wall-clock time of the whole job.
    pub wall: Duration,
}

impl TimingLedger {
    pub fn stage_in_total(&self) -> Duration {
        self.batches.iter().map(|b| b.stage_in).sum()
    }

    pub fn compute_total(&self) -> Duration {
        self.batches.iter().map(|b| b.compute).sum()
    }

    pub fn stage_out_total(&self) -> Duration {
        self.batches.iter().map(|b| b.stage_out).sum()
    }

    pub fn stage_total(&self) -> Duration {
        self.stage_in_total() + self.stage_out_total()
    }

    /// `batch_index,rows,stage_in_ms,compute_ms,stage_out_ms`, one line per
    /// batch.
    pub fn write_csv<W: Write>(&self, mut out: W) -> Result<()> {
        writeln!(out, "batch_index,rows,stage_in_ms,compute_ms,stage_out_ms")?;
        for b in &self.batches {
            writeln!(
                out,
                "{},{},{:.3},{:.3},{:.3}",
                b.index,
                b.rows,
                ms(b.stage_in),
                ms(b.compute),
                ms(b.stage_out)
            )?;
        }
        Ok(())
    }
}

pub(crate) fn ms(d: Duration) -> f64 {
    d.as_secs_f64() * 1e3
}
