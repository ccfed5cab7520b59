// SPDX-License-Identifier: Apache-2.0

use std::ops::Range;
use std::str::FromStr;
use std::thread;
use std::time::{Duration, Instant};

use super::{AllocationCounts, BatchPlan, BatchTiming, Executor, RefSource, ScoreSink, TimingLedger};
use crate::error::{Error, Result};
use crate::kernel::Panel;
use crate::word::Word;

/// How staging buffers are allocated over a job.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum BufferPolicy {
    /// Allocated once, sized for the largest batch, reused by every batch.
    #[default]
    Reusable,
    /// Allocated anew for every batch.
    Fresh,
}

impl FromStr for BufferPolicy {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "reusable" => Ok(BufferPolicy::Reusable),
            "fresh" => Ok(BufferPolicy::Fresh),
            other => Err(Error::MalformedLine(format!("unknown buffer policy {other:?}"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct PipelineConfig {
    /// Drain batch `k` while staging batch `k + 1`.
    pub overlap: bool,
    pub buffers: BufferPolicy,
}

/// Runs `plan` and streams every batch's scores to `sink` in reference order.
///
/// On failure the sink is aborted (never finished) and the error reports how
/// many batches were fully drained.
pub fn run_pipeline<W, E, S, K>(
    plan: &BatchPlan,
    source: &mut S,
    queries: &Panel<W>,
    executor: &E,
    sink: &mut K,
    config: PipelineConfig,
) -> Result<TimingLedger>
where
    W: Word,
    E: Executor<W>,
    S: RefSource<W>,
    K: ScoreSink + Send,
{
    let started = Instant::now();
    let shape = plan.shape();
    if shape.word_width.bits() != W::BITS
        || shape.n_refs != source.n_rows()
        || shape.n_queries != queries.len()
        || shape.n_words != source.n_words()
        || shape.n_words != queries.n_words()
    {
        return Err(Error::MalformedLine(format!(
            "plan shape {shape:?} does not match the {} x {} job",
            source.n_rows(),
            queries.len()
        )));
    }
    plan.verify()?;

    match run_batches(plan, source, queries, executor, sink, config) {
        Ok(mut ledger) => {
            sink.finish()?;
            ledger.wall = started.elapsed();
            Ok(ledger)
        }
        Err(e) => {
            sink.abort();
            Err(e)
        }
    }
}

fn aborted(completed: usize, e: Error) -> Error {
    Error::Aborted {
        completed,
        source: Box::new(e),
    }
}

fn run_batches<W, E, S, K>(
    plan: &BatchPlan,
    source: &mut S,
    queries: &Panel<W>,
    executor: &E,
    sink: &mut K,
    config: PipelineConfig,
) -> Result<TimingLedger>
where
    W: Word,
    E: Executor<W>,
    S: RefSource<W>,
    K: ScoreSink + Send,
{
    let shape = plan.shape();
    let (n_queries, n_words) = (shape.n_queries, shape.n_words);
    let batches = plan.batches();
    let mut ledger = TimingLedger::default();

    sink.begin(shape.n_refs, n_queries)?;

    let t = Instant::now();
    let resident = executor.stage_queries(queries)?;
    ledger.allocations.queries = 1;
    let mut ref_buf: Vec<W> = Vec::new();
    let mut score_buf: Vec<u32> = Vec::new();
    if config.buffers == BufferPolicy::Reusable {
        let rows = plan.max_batch_rows();
        ref_buf = vec![W::ZERO; rows * n_words];
        score_buf = vec![0; rows * n_queries];
        ledger.allocations.refs = 1;
        ledger.allocations.scores = 1;
    }
    let resident_stage = t.elapsed();

    let Some(first) = batches.first() else {
        return Ok(ledger);
    };
    let (elapsed, fresh) = stage_in(
        source,
        first.clone(),
        n_words,
        n_queries,
        config.buffers,
        &mut ref_buf,
        &mut ledger.allocations,
    )
    .map_err(|e| aborted(0, e))?;
    if let Some(buf) = fresh {
        score_buf = buf;
    }
    let mut current = BatchTiming {
        index: 0,
        rows: first.len(),
        stage_in: resident_stage + elapsed,
        ..Default::default()
    };

    for (k, range) in batches.iter().enumerate() {
        let rows = range.len();
        let t = Instant::now();
        executor
            .compute(
                &ref_buf[..rows * n_words],
                &resident,
                &mut score_buf[..rows * n_queries],
            )
            .map_err(|e| aborted(k, e))?;
        current.compute = t.elapsed();

        let scores = &score_buf[..rows * n_queries];
        let next = batches.get(k + 1).cloned();
        let mut staged_next = None;
        match next {
            Some(next) if config.overlap => {
                let (drained, loaded) = thread::scope(|s| {
                    let drain = s.spawn(|| timed(|| sink.write_rows(range.start, scores)));
                    let loaded = stage_in(
                        source,
                        next,
                        n_words,
                        n_queries,
                        config.buffers,
                        &mut ref_buf,
                        &mut ledger.allocations,
                    );
                    (drain.join().expect("stage-out thread panicked"), loaded)
                });
                current.stage_out = drained.map_err(|e| aborted(k, e))?;
                staged_next = Some(loaded.map_err(|e| aborted(k + 1, e))?);
            }
            _ => {
                current.stage_out = timed(|| sink.write_rows(range.start, scores)).map_err(|e| aborted(k, e))?;
                if let Some(next) = next {
                    let loaded = stage_in(
                        source,
                        next,
                        n_words,
                        n_queries,
                        config.buffers,
                        &mut ref_buf,
                        &mut ledger.allocations,
                    );
                    staged_next = Some(loaded.map_err(|e| aborted(k + 1, e))?);
                }
            }
        }
        ledger.batches.push(current);

        if let Some((elapsed, fresh)) = staged_next {
            if let Some(buf) = fresh {
                score_buf = buf;
            }
            current = BatchTiming {
                index: k + 1,
                rows: batches[k + 1].len(),
                stage_in: elapsed,
                ..Default::default()
            };
        }
    }
    Ok(ledger)
}

fn timed(f: impl FnOnce() -> Result<()>) -> Result<Duration> {
    let t = Instant::now();
    f()?;
    Ok(t.elapsed())
}

/// Copies `range` of the reference source into `ref_buf`. Under the fresh
/// policy both staging buffers are allocated here, and the new score buffer
/// is returned for the caller to install once the previous batch is drained.
fn stage_in<W: Word, S: RefSource<W>>(
    source: &mut S,
    range: Range<usize>,
    n_words: usize,
    n_queries: usize,
    policy: BufferPolicy,
    ref_buf: &mut Vec<W>,
    allocations: &mut AllocationCounts,
) -> Result<(Duration, Option<Vec<u32>>)> {
    let t = Instant::now();
    let rows = range.len();
    let fresh_scores = match policy {
        BufferPolicy::Reusable => None,
        BufferPolicy::Fresh => {
            *ref_buf = vec![W::ZERO; rows * n_words];
            allocations.refs += 1;
            allocations.scores += 1;
            Some(vec![0u32; rows * n_queries])
        }
    };
    source.read_rows(range, &mut ref_buf[..rows * n_words])?;
    Ok((t.elapsed(), fresh_scores))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::codec::PackedProfile;
    use crate::kernel::{compare_naive, BlockedKernel, TileConfig};
    use crate::scheduler::{plan_batches, MatrixSink, MemoryBudget, NaiveExecutor, PanelSource};
    use crate::word::WordWidth;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn random_panel(rng: &mut ChaCha8Rng, n: usize, n_words: usize, prefix: &str) -> Panel<u32> {
        let profiles = (0..n)
            .map(|i| PackedProfile {
                id: format!("{prefix}{i}"),
                words: (0..n_words).map(|_| rng.gen()).collect(),
            })
            .collect();
        Panel::from_profiles(profiles, n_words * 32).unwrap()
    }

    fn run<E: Executor<u32>>(
        refs: &Panel<u32>,
        queries: &Panel<u32>,
        budget: MemoryBudget,
        executor: &E,
        config: PipelineConfig,
    ) -> (crate::kernel::ScoreMatrix, TimingLedger) {
        let plan = plan_batches(refs.len(), queries.len(), refs.n_words(), WordWidth::W32, budget).unwrap();
        let mut sink = MatrixSink::new(refs.ids().to_vec(), queries.ids().to_vec());
        let ledger = run_pipeline(&plan, &mut PanelSource::new(refs), queries, executor, &mut sink, config).unwrap();
        (sink.into_matrix().unwrap(), ledger)
    }

    fn budget_for_rows(refs: &Panel<u32>, queries: &Panel<u32>, rows: usize) -> MemoryBudget {
        let plan = plan_batches(
            refs.len(),
            queries.len(),
            refs.n_words(),
            WordWidth::W32,
            MemoryBudget::unlimited(),
        )
        .unwrap();
        MemoryBudget::new(plan.shape().batch_bytes(rows)).unwrap()
    }

    #[test]
    fn single_batch_matches_direct_compare() {
        let mut rng = ChaCha8Rng::seed_from_u64(21);
        let refs = random_panel(&mut rng, 50, 4, "r");
        let queries = random_panel(&mut rng, 30, 4, "q");
        let kernel = BlockedKernel::new(TileConfig::new(16).unwrap(), 2).unwrap();
        let (m, ledger) = run(
            &refs,
            &queries,
            MemoryBudget::unlimited(),
            &kernel,
            PipelineConfig::default(),
        );
        assert_eq!(m, compare_naive(&refs, &queries).unwrap());
        assert_eq!(ledger.batches.len(), 1);
        assert_eq!(ledger.batches[0].rows, 50);
    }

    #[test]
    fn four_batches_over_1000x256() {
        let mut rng = ChaCha8Rng::seed_from_u64(22);
        let refs = random_panel(&mut rng, 1000, 8, "r");
        let queries = random_panel(&mut rng, 256, 8, "q");
        let oracle = compare_naive(&refs, &queries).unwrap();
        let budget = budget_for_rows(&refs, &queries, 250);
        let kernel = BlockedKernel::new(TileConfig::default(), 2).unwrap();
        for overlap in [false, true] {
            for buffers in [BufferPolicy::Reusable, BufferPolicy::Fresh] {
                let config = PipelineConfig { overlap, buffers };
                let (m, ledger) = run(&refs, &queries, budget, &kernel, config);
                assert_eq!(m, oracle, "{config:?}");
                assert_eq!(ledger.batches.len(), 4);
                assert!(ledger
                    .batches
                    .iter()
                    .enumerate()
                    .all(|(i, b)| b.index == i && b.rows == 250));
                assert!(ledger.wall >= ledger.compute_total());
                assert!(ledger.wall >= ledger.stage_in_total());
                assert!(ledger.wall >= ledger.stage_out_total());
            }
        }
        let (m, _) = run(&refs, &queries, budget, &NaiveExecutor, PipelineConfig::default());
        assert_eq!(m, oracle);
    }

    #[test]
    fn one_row_batches() {
        let mut rng = ChaCha8Rng::seed_from_u64(23);
        let refs = random_panel(&mut rng, 13, 2, "r");
        let queries = random_panel(&mut rng, 5, 2, "q");
        let budget = budget_for_rows(&refs, &queries, 1);
        let config = PipelineConfig {
            overlap: true,
            buffers: BufferPolicy::Fresh,
        };
        let (m, ledger) = run(&refs, &queries, budget, &NaiveExecutor, config);
        assert_eq!(m, compare_naive(&refs, &queries).unwrap());
        assert_eq!(ledger.batches.len(), 13);
    }

    #[test]
    fn allocation_counts_per_policy() {
        let mut rng = ChaCha8Rng::seed_from_u64(24);
        let refs = random_panel(&mut rng, 40, 2, "r");
        let queries = random_panel(&mut rng, 8, 2, "q");
        let budget = budget_for_rows(&refs, &queries, 10);
        let reusable = PipelineConfig {
            overlap: true,
            buffers: BufferPolicy::Reusable,
        };
        let (_, ledger) = run(&refs, &queries, budget, &NaiveExecutor, reusable);
        assert_eq!(
            ledger.allocations,
            AllocationCounts {
                queries: 1,
                refs: 1,
                scores: 1
            }
        );
        let fresh = PipelineConfig {
            overlap: true,
            buffers: BufferPolicy::Fresh,
        };
        let (_, ledger) = run(&refs, &queries, budget, &NaiveExecutor, fresh);
        assert_eq!(
            ledger.allocations,
            AllocationCounts {
                queries: 1,
                refs: 4,
                scores: 4
            }
        );
    }

    #[test]
    fn empty_reference_panel() {
        let mut rng = ChaCha8Rng::seed_from_u64(25);
        let refs = Panel::<u32>::new(64).unwrap();
        let queries = random_panel(&mut rng, 3, 2, "q");
        let (m, ledger) = run(
            &refs,
            &queries,
            MemoryBudget::unlimited(),
            &NaiveExecutor,
            PipelineConfig::default(),
        );
        assert_eq!((m.n_rows(), m.n_cols()), (0, 3));
        assert!(ledger.batches.is_empty());
    }

    struct FailingSource<'a> {
        inner: PanelSource<'a, u32>,
        fail_at_row: usize,
    }

    impl RefSource<u32> for FailingSource<'_> {
        fn n_rows(&self) -> usize {
            self.inner.n_rows()
        }
        fn n_words(&self) -> usize {
            self.inner.n_words()
        }
        fn read_rows(&mut self, rows: Range<usize>, dst: &mut [u32]) -> Result<()> {
            if rows.contains(&self.fail_at_row) {
                return Err(Error::Source("disk went away".into()));
            }
            self.inner.read_rows(rows, dst)
        }
    }

    #[test]
    fn source_failure_aborts_with_completed_count() {
        let mut rng = ChaCha8Rng::seed_from_u64(26);
        let refs = random_panel(&mut rng, 40, 2, "r");
        let queries = random_panel(&mut rng, 8, 2, "q");
        let budget = budget_for_rows(&refs, &queries, 10);
        let plan = plan_batches(40, 8, 2, WordWidth::W32, budget).unwrap();
        for overlap in [false, true] {
            let mut source = FailingSource {
                inner: PanelSource::new(&refs),
                fail_at_row: 25,
            };
            let mut sink = MatrixSink::new(refs.ids().to_vec(), queries.ids().to_vec());
            let config = PipelineConfig {
                overlap,
                buffers: BufferPolicy::Reusable,
            };
            let err = run_pipeline(&plan, &mut source, &queries, &NaiveExecutor, &mut sink, config).unwrap_err();
            assert!(matches!(err, Error::Aborted { completed: 2, .. }), "{err}");
            assert!(sink.into_matrix().is_none());
        }
    }

    #[test]
    fn mismatched_plan_rejected() {
        let mut rng = ChaCha8Rng::seed_from_u64(27);
        let refs = random_panel(&mut rng, 4, 2, "r");
        let queries = random_panel(&mut rng, 3, 2, "q");
        let plan = plan_batches(5, 3, 2, WordWidth::W32, MemoryBudget::unlimited()).unwrap();
        let mut sink = MatrixSink::new(refs.ids().to_vec(), queries.ids().to_vec());
        let res = run_pipeline(
            &plan,
            &mut PanelSource::new(&refs),
            &queries,
            &NaiveExecutor,
            &mut sink,
            PipelineConfig::default(),
        );
        assert!(res.is_err());
    }
}
