// SPDX-License-Identifier: Apache-2.0

//! Cache-blocked, multi-threaded panel comparison.
//!
//! The output is cut into row bands of `block_size` reference rows. A band is
//! the unit of work handed to a worker, so workers own disjoint slices of the
//! output and never synchronize on the hot path. Inside a band the query
//! columns are walked in tiles of `block_size`; each tile's query words are
//! copied once into worker-local scratch (word-index-major, so every word
//! index is one contiguous run) and reused by every reference row of the
//! band. Each reference row then computes `cells_per_task` adjacent cells at
//! once with the accumulators held in registers.

use rayon::prelude::*;

use super::{QueryLayout, ScoreMatrix};
use crate::error::{Error, Result};
use crate::kernel::Panel;
use crate::word::Word;

pub const SUPPORTED_BLOCK_SIZES: [usize; 3] = [16, 32, 64];
pub const DEFAULT_CELLS_PER_TASK: usize = 16;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct TileConfig {
    pub block_size: usize,
    pub cells_per_task: usize,
}

impl TileConfig {
    pub fn new(block_size: usize) -> Result<Self> {
        TileConfig {
            block_size,
            cells_per_task: DEFAULT_CELLS_PER_TASK,
        }
        .validated()
    }

    pub fn with_cells_per_task(self, cells_per_task: usize) -> Result<Self> {
        TileConfig { cells_per_task, ..self }.validated()
    }

    pub fn validated(self) -> Result<Self> {
        if !SUPPORTED_BLOCK_SIZES.contains(&self.block_size) {
            return Err(Error::InvalidBlockSize(self.block_size));
        }
        if !matches!(self.cells_per_task, 4 | 8 | 16) {
            return Err(Error::InvalidCellsPerTask(self.cells_per_task));
        }
        Ok(self)
    }
}

impl Default for TileConfig {
    fn default() -> Self {
        TileConfig {
            block_size: 64,
            cells_per_task: DEFAULT_CELLS_PER_TASK,
        }
    }
}

/// A configured blocked kernel. Holds its worker pool so repeated calls (one
/// per batch in the pipeline) do not respawn threads.
pub struct BlockedKernel {
    tile: TileConfig,
    workers: usize,
    pool: Option<rayon::ThreadPool>,
    simd: bool,
}

impl std::fmt::Debug for BlockedKernel {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("BlockedKernel")
            .field("tile", &self.tile)
            .field("workers", &self.workers)
            .field("simd", &self.simd)
            .finish()
    }
}

impl BlockedKernel {
    pub fn new(tile: TileConfig, workers: usize) -> Result<Self> {
        let tile = tile.validated()?;
        if workers == 0 {
            return Err(Error::ZeroWorkers);
        }
        let pool = if workers > 1 {
            Some(
                rayon::ThreadPoolBuilder::new()
                    .num_threads(workers)
                    .thread_name(|i| format!("fastid-worker-{i}"))
                    .build()
                    .map_err(|e| Error::Io(std::io::Error::other(e)))?,
            )
        } else {
            None
        };
        Ok(BlockedKernel {
            tile,
            workers,
            pool,
            simd: simd_available(),
        })
    }

    /// Forces the portable code path even when wider instructions exist.
    pub fn portable(mut self) -> Self {
        self.simd = false;
        self
    }

    pub fn tile(&self) -> TileConfig {
        self.tile
    }

    pub fn workers(&self) -> usize {
        self.workers
    }

    pub fn compare<W: Word>(&self, refs: &Panel<W>, queries: &QueryLayout<W>) -> Result<ScoreMatrix> {
        if refs.bit_length() != queries.bit_length() {
            return Err(Error::LengthMismatch {
                expected: refs.bit_length(),
                found: queries.bit_length(),
            });
        }
        let mut out = ScoreMatrix::zeros(refs.ids().to_vec(), queries.ids().to_vec());
        self.compute_into(refs.words(), queries, out.scores_mut())?;
        Ok(out)
    }

    /// Scores row-major reference words against `queries` into `out`
    /// (`N_R x N_Q`, row-major).
    pub fn compute_into<W: Word>(&self, refs: &[W], queries: &QueryLayout<W>, out: &mut [u32]) -> Result<()> {
        let n_words = queries.n_words();
        let n_queries = queries.n_queries();
        if !refs.len().is_multiple_of(n_words) {
            return Err(Error::LengthMismatch {
                expected: n_words,
                found: refs.len() % n_words,
            });
        }
        let n_refs = refs.len() / n_words;
        if out.len() != n_refs * n_queries {
            return Err(Error::LengthMismatch {
                expected: n_refs * n_queries,
                found: out.len(),
            });
        }
        if n_refs == 0 || n_queries == 0 {
            return Ok(());
        }

        let block = self.tile.block_size;
        let cells = self.tile.cells_per_task;
        let simd = self.simd;
        let band_cells = block * n_queries;
        let work = |(band, out_band): (usize, &mut [u32])| {
            let rows = out_band.len() / n_queries;
            let band_refs = &refs[band * block * n_words..(band * block + rows) * n_words];
            compute_band(band_refs, queries, block, cells, out_band, simd);
        };
        match &self.pool {
            None => out.chunks_mut(band_cells).enumerate().for_each(work),
            Some(pool) => pool.install(|| out.par_chunks_mut(band_cells).enumerate().for_each(work)),
        }
        Ok(())
    }
}

/// Convenience wrapper that builds a [`BlockedKernel`] for one call.
pub fn compare_blocked<W: Word>(
    refs: &Panel<W>,
    queries: &QueryLayout<W>,
    tile: TileConfig,
    workers: usize,
) -> Result<ScoreMatrix> {
    BlockedKernel::new(tile, workers)?.compare(refs, queries)
}

fn simd_available() -> bool {
    #[cfg(target_arch = "x86_64")]
    {
        std::arch::is_x86_feature_detected!("avx2") && std::arch::is_x86_feature_detected!("popcnt")
    }
    #[cfg(not(target_arch = "x86_64"))]
    {
        false
    }
}

fn compute_band<W: Word>(
    refs: &[W],
    queries: &QueryLayout<W>,
    block: usize,
    cells: usize,
    out: &mut [u32],
    simd: bool,
) {
    #[cfg(target_arch = "x86_64")]
    if simd {
        // SAFETY: `simd` is only set when avx2 and popcnt were detected.
        unsafe { compute_band_avx2(refs, queries, block, cells, out) };
        return;
    }
    let _ = simd;
    compute_band_portable(refs, queries, block, cells, out);
}

#[cfg(target_arch = "x86_64")]
#[target_feature(enable = "avx2,popcnt")]
unsafe fn compute_band_avx2<W: Word>(
    refs: &[W],
    queries: &QueryLayout<W>,
    block: usize,
    cells: usize,
    out: &mut [u32],
) {
    band_body(refs, queries, block, cells, out);
}

fn compute_band_portable<W: Word>(refs: &[W], queries: &QueryLayout<W>, block: usize, cells: usize, out: &mut [u32]) {
    band_body(refs, queries, block, cells, out);
}

#[inline(always)]
fn band_body<W: Word>(refs: &[W], queries: &QueryLayout<W>, block: usize, cells: usize, out: &mut [u32]) {
    let n_words = queries.n_words();
    let n_queries = queries.n_queries();
    let rows = refs.len() / n_words;
    let mut scratch: Vec<W> = Vec::with_capacity(block * n_words);

    for col0 in (0..n_queries).step_by(block) {
        let width = block.min(n_queries - col0);
        scratch.clear();
        for k in 0..n_words {
            scratch.extend_from_slice(queries.word_run(k, col0..col0 + width));
        }
        for i in 0..rows {
            let r = &refs[i * n_words..(i + 1) * n_words];
            let out_row = &mut out[i * n_queries + col0..i * n_queries + col0 + width];
            match cells {
                4 => row_tile::<W, 4>(r, &scratch, width, out_row),
                8 => row_tile::<W, 8>(r, &scratch, width, out_row),
                _ => row_tile::<W, 16>(r, &scratch, width, out_row),
            }
        }
    }
}

/// One reference row against a staged tile of `width` query columns.
#[inline(always)]
fn row_tile<W: Word, const C: usize>(r: &[W], stage: &[W], width: usize, out: &mut [u32]) {
    let full = width - width % C;
    for col in (0..full).step_by(C) {
        let mut acc = [0u32; C];
        for (k, &rw) in r.iter().enumerate() {
            let q: &[W; C] = stage[k * width + col..k * width + col + C].try_into().unwrap();
            for c in 0..C {
                acc[c] += (rw & !q[c]).popcount();
            }
        }
        out[col..col + C].copy_from_slice(&acc);
    }
    for col in full..width {
        let mut acc = 0u32;
        for (k, &rw) in r.iter().enumerate() {
            acc += (rw & !stage[k * width + col]).popcount();
        }
        out[col] = acc;
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::codec::PackedProfile;
    use crate::kernel::{compare_naive, relayout_queries};
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn random_panel<W: Word>(rng: &mut ChaCha8Rng, n: usize, bit_length: usize, prefix: &str) -> Panel<W> {
        let n_words = crate::codec::words_for::<W>(bit_length);
        let tail = (bit_length % W::BITS as usize) as u32;
        let profiles = (0..n)
            .map(|i| {
                let mut words: Vec<W> = (0..n_words).map(|_| W::from_u64(rng.gen())).collect();
                if tail != 0 {
                    let last = words.last_mut().unwrap();
                    *last = *last & W::leading_mask(tail);
                }
                PackedProfile {
                    id: format!("{prefix}{i}"),
                    words,
                }
            })
            .collect();
        Panel::from_profiles(profiles, bit_length).unwrap()
    }

    #[test]
    fn tile_config_validation() {
        assert!(TileConfig::new(16).is_ok());
        assert!(matches!(TileConfig::new(24), Err(Error::InvalidBlockSize(24))));
        assert!(TileConfig::new(32).unwrap().with_cells_per_task(3).is_err());
        assert!(matches!(
            BlockedKernel::new(TileConfig::default(), 0),
            Err(Error::ZeroWorkers)
        ));
    }

    #[test]
    fn degenerate_scheduling_equals_naive() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let refs = random_panel::<u32>(&mut rng, 37, 200, "r");
        let queries = random_panel::<u32>(&mut rng, 21, 200, "q");
        let oracle = compare_naive(&refs, &queries).unwrap();
        let got = compare_blocked(&refs, &relayout_queries(&queries), TileConfig::new(16).unwrap(), 1).unwrap();
        assert_eq!(got, oracle);
    }

    #[test]
    fn sweep_100x100_all_configs() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let refs = random_panel::<u64>(&mut rng, 100, 512, "r");
        let queries = random_panel::<u64>(&mut rng, 100, 512, "q");
        let oracle = compare_naive(&refs, &queries).unwrap();
        let layout = relayout_queries(&queries);
        for block in SUPPORTED_BLOCK_SIZES {
            for workers in [1, 2, 8] {
                let kernel = BlockedKernel::new(TileConfig::new(block).unwrap(), workers).unwrap();
                assert_eq!(
                    kernel.compare(&refs, &layout).unwrap(),
                    oracle,
                    "block {block} workers {workers}"
                );
                let portable = BlockedKernel::new(TileConfig::new(block).unwrap(), workers)
                    .unwrap()
                    .portable();
                assert_eq!(portable.compare(&refs, &layout).unwrap(), oracle);
            }
        }
    }

    #[test]
    fn cells_per_task_variants_agree() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let refs = random_panel::<u32>(&mut rng, 45, 96, "r");
        let queries = random_panel::<u32>(&mut rng, 53, 96, "q");
        let oracle = compare_naive(&refs, &queries).unwrap();
        let layout = relayout_queries(&queries);
        for cells in [4, 8, 16] {
            let tile = TileConfig::new(32).unwrap().with_cells_per_task(cells).unwrap();
            assert_eq!(compare_blocked(&refs, &layout, tile, 2).unwrap(), oracle);
        }
    }

    #[test]
    fn all_ones_row_against_zero_queries() {
        let bits = 64;
        let refs = Panel::from_profiles(
            vec![
                PackedProfile {
                    id: "ones".into(),
                    words: vec![u32::MAX, u32::MAX],
                },
                PackedProfile {
                    id: "zero".into(),
                    words: vec![0, 0],
                },
            ],
            bits,
        )
        .unwrap();
        let queries = Panel::from_profiles(
            (0..20)
                .map(|i| PackedProfile {
                    id: format!("q{i}"),
                    words: vec![0u32, 0],
                })
                .collect(),
            bits,
        )
        .unwrap();
        let m = compare_blocked(&refs, &relayout_queries(&queries), TileConfig::default(), 2).unwrap();
        assert!(m.row(0).iter().all(|&s| s == bits as u32));
        assert!(m.row(1).iter().all(|&s| s == 0));
    }

    #[test]
    fn empty_inputs() {
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let refs = random_panel::<u32>(&mut rng, 5, 32, "r");
        let empty = Panel::<u32>::new(32).unwrap();
        let m = compare_blocked(&refs, &relayout_queries(&empty), TileConfig::default(), 2).unwrap();
        assert_eq!((m.n_rows(), m.n_cols()), (5, 0));
        let m = compare_blocked(&empty, &relayout_queries(&refs), TileConfig::default(), 2).unwrap();
        assert_eq!((m.n_rows(), m.n_cols()), (0, 5));
    }

    #[test]
    fn bit_length_mismatch() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let refs = random_panel::<u32>(&mut rng, 2, 32, "r");
        let queries = random_panel::<u32>(&mut rng, 2, 30, "q");
        assert!(compare_blocked(&refs, &relayout_queries(&queries), TileConfig::default(), 1).is_err());
    }
}
