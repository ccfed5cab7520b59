// SPDX-License-Identifier: Apache-2.0

//! Scores for word pairs, profile pairs and whole panels.
//!
//! [`compare_naive`] is the straightforward triple loop and serves as the
//! oracle for every other kernel. [`compare_blocked`] tiles the output,
//! stages query words into worker-local scratch and spreads row bands across
//! a worker pool.

mod blocked;
mod layout;
mod naive;
mod panel;

pub use blocked::{compare_blocked, BlockedKernel, TileConfig, DEFAULT_CELLS_PER_TASK, SUPPORTED_BLOCK_SIZES};
pub use layout::{relayout_queries, QueryLayout};
pub use naive::compare_naive;
pub(crate) use naive::naive_into;
pub use panel::{Panel, ScoreMatrix};

use crate::codec::PackedProfile;
use crate::error::{Error, Result};
use crate::word::Word;

/// Which panel kernel a job runs.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum KernelKind {
    Naive,
    #[default]
    Blocked,
}

impl std::str::FromStr for KernelKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "naive" => Ok(KernelKind::Naive),
            "blocked" => Ok(KernelKind::Blocked),
            other => Err(Error::MalformedLine(format!("unknown kernel {other:?}"))),
        }
    }
}

/// Kernel choice plus its tuning. The naive kernel ignores `tile` and
/// `workers`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct KernelConfig {
    pub kind: KernelKind,
    pub tile: TileConfig,
    pub workers: usize,
}

impl KernelConfig {
    pub fn naive() -> Self {
        KernelConfig {
            kind: KernelKind::Naive,
            tile: TileConfig::default(),
            workers: 1,
        }
    }

    pub fn blocked(tile: TileConfig, workers: usize) -> Self {
        KernelConfig {
            kind: KernelKind::Blocked,
            tile,
            workers,
        }
    }
}

impl Default for KernelConfig {
    /// Blocked, 64-wide tiles, one worker per available core.
    fn default() -> Self {
        KernelConfig::blocked(TileConfig::default(), host_parallelism())
    }
}

pub fn host_parallelism() -> usize {
    std::thread::available_parallelism().map(|n| n.get()).unwrap_or(1)
}

/// `popcount((r XOR q) AND r)`: bits set in `r` but not in `q`.
#[inline(always)]
pub fn score_word<W: Word>(r: W, q: W) -> u32 {
    ((r ^ q) & r).popcount()
}

/// Score of two equally sized word rows, accumulated word by word.
#[inline]
pub fn score_rows<W: Word>(r: &[W], q: &[W]) -> u32 {
    debug_assert_eq!(r.len(), q.len());
    let mut total = 0u32;
    for k in 0..r.len() {
        total += score_word(r[k], q[k]);
    }
    total
}

pub fn score_profiles<W: Word>(r: &PackedProfile<W>, q: &PackedProfile<W>) -> Result<u32> {
    if r.words.len() != q.words.len() {
        return Err(Error::LengthMismatch {
            expected: r.words.len(),
            found: q.words.len(),
        });
    }
    Ok(score_rows(&r.words, &q.words))
}

/// Shift-and-test bit count. Independent of the hardware popcount path.
pub fn popcount_reference<W: Word>(w: W) -> u32 {
    let mut v = w.to_u64();
    let mut count = 0;
    for _ in 0..W::BITS {
        count += (v & 1) as u32;
        v >>= 1;
    }
    count
}
