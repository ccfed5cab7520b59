// SPDX-License-Identifier: Apache-2.0

use std::ops::Range;

use super::MemoryBudget;
use crate::error::{Error, Result};
use crate::word::WordWidth;

/// Bytes per score cell in staged output and in the binary score format.
pub const SCORE_CELL_BYTES: u64 = 4;

/// Dimensions of one comparison job and the byte sizes derived from them.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct JobShape {
    pub n_refs: usize,
    pub n_queries: usize,
    pub n_words: usize,
    pub word_width: WordWidth,
}

impl JobShape {
    fn word_bytes(&self) -> u64 {
        self.word_width.bits() as u64 / 8
    }

    /// The whole query panel, resident for every batch.
    pub fn query_bytes(&self) -> u64 {
        self.n_queries as u64 * self.n_words as u64 * self.word_bytes()
    }

    /// One reference row plus its row of scores.
    pub fn bytes_per_ref_row(&self) -> u64 {
        self.n_words as u64 * self.word_bytes() + self.n_queries as u64 * SCORE_CELL_BYTES
    }

    pub fn batch_bytes(&self, rows: usize) -> u64 {
        self.query_bytes() + rows as u64 * self.bytes_per_ref_row()
    }

    /// Smallest budget that admits the queries and one reference row.
    pub fn min_budget(&self) -> u64 {
        self.batch_bytes(1)
    }
}

/// Reference-row ranges processed one after another with the query panel
/// resident throughout.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct BatchPlan {
    shape: JobShape,
    budget: MemoryBudget,
    batches: Vec<Range<usize>>,
}

impl BatchPlan {
    pub fn shape(&self) -> JobShape {
        self.shape
    }

    pub fn budget(&self) -> MemoryBudget {
        self.budget
    }

    pub fn batches(&self) -> &[Range<usize>] {
        &self.batches
    }

    pub fn len(&self) -> usize {
        self.batches.len()
    }

    pub fn is_empty(&self) -> bool {
        self.batches.is_empty()
    }

    pub fn batch_sizes(&self) -> Vec<usize> {
        self.batches.iter().map(|r| r.len()).collect()
    }

    pub fn max_batch_rows(&self) -> usize {
        self.batches.iter().map(|r| r.len()).max().unwrap_or(0)
    }

    pub fn batch_bytes(&self, index: usize) -> u64 {
        self.shape.batch_bytes(self.batches[index].len())
    }

    /// Re-checks every batch against the budget and the range invariants.
    pub fn verify(&self) -> Result<()> {
        let mut next = 0;
        for (index, range) in self.batches.iter().enumerate() {
            if range.start != next || range.is_empty() {
                return Err(Error::MalformedLine(format!(
                    "batch {index} range {range:?} is not contiguous"
                )));
            }
            next = range.end;
            let needed = self.batch_bytes(index);
            if needed > self.budget.bytes() {
                return Err(Error::BatchOverBudget {
                    index,
                    needed,
                    budget: self.budget.bytes(),
                });
            }
        }
        if next != self.shape.n_refs {
            return Err(Error::LengthMismatch {
                expected: self.shape.n_refs,
                found: next,
            });
        }
        Ok(())
    }
}

/// Splits `n_refs` reference rows into the fewest equal-size batches that
/// fit `budget`, the last batch taking the remainder.
pub fn plan_batches(
    n_refs: usize,
    n_queries: usize,
    n_words: usize,
    word_width: WordWidth,
    budget: MemoryBudget,
) -> Result<BatchPlan> {
    let shape = JobShape {
        n_refs,
        n_queries,
        n_words,
        word_width,
    };
    let minimum = shape.min_budget();
    if budget.bytes() < minimum {
        return Err(Error::InfeasiblePlan {
            budget: budget.bytes(),
            minimum,
        });
    }
    let fit = (budget.bytes() - shape.query_bytes()) / shape.bytes_per_ref_row();
    let rows = usize::try_from(fit).unwrap_or(usize::MAX).min(n_refs.max(1));
    let batches = (0..n_refs)
        .step_by(rows)
        .map(|start| start..(start + rows).min(n_refs))
        .collect();
    Ok(BatchPlan { shape, budget, batches })
}
