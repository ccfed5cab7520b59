// SPDX-License-Identifier: Apache-2.0

//! Seeded synthetic panels and timing sweeps.
//!
//! Each configuration runs `reps` times through the batch pipeline and every
//! phase is reported as the median over those runs. Score checksums depend
//! only on the seed and the panel size; timings carry no such guarantee.

use std::fmt::Write as _;
use std::io::Write;
use std::str::FromStr;
use std::time::Duration;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use sha2::{Digest, Sha256};

use crate::codec::padding_is_zero;
use crate::error::{Error, Result};
use crate::kernel::{KernelConfig, KernelKind, Panel, ScoreMatrix};
use crate::scheduler::{
    ms, plan_batches, run_job, MatrixSink, MemoryBudget, PanelSource, PipelineConfig, TimingLedger,
};
use crate::word::{Word, WordWidth};

/// Default ceiling on host memory a single bench configuration may use.
pub const DEFAULT_HOST_LIMIT: u64 = 2 << 30;

/// Panel dimensions: references x queries x words per profile.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct BenchSize {
    pub n_refs: usize,
    pub n_queries: usize,
    pub n_words: usize,
}

impl BenchSize {
    pub fn new(n_refs: usize, n_queries: usize, n_words: usize) -> Self {
        BenchSize {
            n_refs,
            n_queries,
            n_words,
        }
    }

    /// Host bytes for both panels plus the full score matrix.
    pub fn host_bytes(&self, word_width: WordWidth) -> u64 {
        let word_bytes = word_width.bits() as u64 / 8;
        let panels = (self.n_refs + self.n_queries) as u64 * self.n_words as u64 * word_bytes;
        panels + self.n_refs as u64 * self.n_queries as u64 * 4
    }
}

/// Parses `RxQxW`, e.g. `100000x1024x16`.
impl FromStr for BenchSize {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let parts: Vec<&str> = s.trim().split(['x', 'X']).collect();
        let bad = || Error::MalformedLine(format!("bench size {s:?} is not <refs>x<queries>x<words>"));
        if parts.len() != 3 {
            return Err(bad());
        }
        let n: Vec<usize> = parts
            .iter()
            .map(|p| p.parse::<usize>().map_err(|_| bad()))
            .collect::<Result<_>>()?;
        if n[2] == 0 {
            return Err(bad());
        }
        Ok(BenchSize::new(n[0], n[1], n[2]))
    }
}

/// Random panel of `n` profiles, `n_words` full words each, ids `{prefix}{i}`.
pub fn synthetic_panel<W: Word>(rng: &mut ChaCha8Rng, n: usize, n_words: usize, prefix: &str) -> Panel<W> {
    let bit_length = n_words * W::BITS as usize;
    let words: Vec<W> = (0..n * n_words).map(|_| W::from_u64(rng.gen())).collect();
    debug_assert!(padding_is_zero(&words, words.len() * W::BITS as usize));
    let ids = (0..n).map(|i| format!("{prefix}{i}")).collect();
    Panel::from_raw(ids, words, bit_length).expect("synthetic ids are unique")
}

/// Reference and query panels for `size`, determined by `seed` alone.
pub fn synthetic_job<W: Word>(size: BenchSize, seed: u64) -> (Panel<W>, Panel<W>) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let refs = synthetic_panel(&mut rng, size.n_refs, size.n_words, "r");
    let queries = synthetic_panel(&mut rng, size.n_queries, size.n_words, "q");
    (refs, queries)
}

/// First 16 hex digits of SHA-256 over the dimensions and little-endian
/// cells.
pub fn score_checksum(m: &ScoreMatrix) -> String {
    let mut h = Sha256::new();
    h.update((m.n_rows() as u64).to_le_bytes());
    h.update((m.n_cols() as u64).to_le_bytes());
    for chunk in m.scores().chunks(1 << 14) {
        let bytes: Vec<u8> = chunk.iter().flat_map(|c| c.to_le_bytes()).collect();
        h.update(&bytes);
    }
    let digest = h.finalize();
    digest[..8].iter().fold(String::new(), |mut s, b| {
        let _ = write!(s, "{b:02x}");
        s
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct PhaseMedians {
    pub stage_in: Duration,
    pub compute: Duration,
    pub stage_out: Duration,
    pub wall: Duration,
}

impl PhaseMedians {
    /// `compute / (stage_in + stage_out)`.
    pub fn compute_stage_ratio(&self) -> f64 {
        self.compute.as_secs_f64() / (self.stage_in + self.stage_out).as_secs_f64()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum RunStatus {
    Ok {
        medians: PhaseMedians,
        checksum: String,
        batches: usize,
    },
    Skipped(String),
}

#[derive(Debug, Clone, PartialEq)]
pub struct BenchRun {
    pub size: BenchSize,
    pub kernel: KernelConfig,
    pub reps: usize,
    pub seed: u64,
    pub status: RunStatus,
}

impl BenchRun {
    pub fn medians(&self) -> Option<&PhaseMedians> {
        match &self.status {
            RunStatus::Ok { medians, .. } => Some(medians),
            RunStatus::Skipped(_) => None,
        }
    }

    pub fn checksum(&self) -> Option<&str> {
        match &self.status {
            RunStatus::Ok { checksum, .. } => Some(checksum),
            RunStatus::Skipped(_) => None,
        }
    }

    /// Comparisons per second of compute time, `N_R * N_Q / compute_s`.
    pub fn throughput(&self) -> Option<f64> {
        self.medians()
            .map(|m| (self.size.n_refs as f64 * self.size.n_queries as f64) / m.compute.as_secs_f64())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct BenchOptions {
    pub reps: usize,
    pub seed: u64,
    pub budget: MemoryBudget,
    pub pipeline: PipelineConfig,
    /// Configurations whose panels and scores exceed this are skipped.
    pub host_limit: u64,
}

impl Default for BenchOptions {
    fn default() -> Self {
        BenchOptions {
            reps: 5,
            seed: 0x5eed,
            budget: MemoryBudget::unlimited(),
            pipeline: PipelineConfig::default(),
            host_limit: DEFAULT_HOST_LIMIT,
        }
    }
}

fn median(mut v: Vec<Duration>) -> Duration {
    v.sort();
    let n = v.len();
    if n % 2 == 1 {
        v[n / 2]
    } else {
        (v[n / 2 - 1] + v[n / 2]) / 2
    }
}

/// Times one configuration.
pub fn run_config<W: Word>(size: BenchSize, kernel: KernelConfig, opts: &BenchOptions) -> Result<BenchRun> {
    let skipped = |reason: String| BenchRun {
        size,
        kernel,
        reps: opts.reps,
        seed: opts.seed,
        status: RunStatus::Skipped(reason),
    };
    let width = WordWidth::from_bits(W::BITS).expect("word width");
    let host = size.host_bytes(width);
    if host > opts.host_limit {
        return Ok(skipped(format!("needs {host} host bytes, limit {}", opts.host_limit)));
    }
    let plan = match plan_batches(size.n_refs, size.n_queries, size.n_words, width, opts.budget) {
        Ok(plan) => plan,
        Err(e @ Error::InfeasiblePlan { .. }) => return Ok(skipped(e.to_string())),
        Err(e) => return Err(e),
    };

    let (refs, queries) = synthetic_job::<W>(size, opts.seed);
    let mut ledgers: Vec<TimingLedger> = Vec::with_capacity(opts.reps);
    let mut checksum: Option<String> = None;
    for _ in 0..opts.reps.max(1) {
        let mut sink = MatrixSink::new(refs.ids().to_vec(), queries.ids().to_vec());
        let ledger = run_job(
            &kernel,
            &plan,
            &mut PanelSource::new(&refs),
            &queries,
            &mut sink,
            opts.pipeline,
        )?;
        let m = sink.into_matrix().expect("finished pipeline yields a matrix");
        let sum = score_checksum(&m);
        match &checksum {
            Some(prev) if *prev != sum => {
                return Err(Error::ScoreFormat(format!("nondeterministic scores: {prev} vs {sum}")));
            }
            _ => checksum = Some(sum),
        }
        ledgers.push(ledger);
    }
    let medians = PhaseMedians {
        stage_in: median(ledgers.iter().map(|l| l.stage_in_total()).collect()),
        compute: median(ledgers.iter().map(|l| l.compute_total()).collect()),
        stage_out: median(ledgers.iter().map(|l| l.stage_out_total()).collect()),
        wall: median(ledgers.iter().map(|l| l.wall).collect()),
    };
    Ok(BenchRun {
        size,
        kernel,
        reps: opts.reps.max(1),
        seed: opts.seed,
        status: RunStatus::Ok {
            medians,
            checksum: checksum.unwrap_or_default(),
            batches: plan.len(),
        },
    })
}

/// Every size against every kernel configuration, one at a time.
pub fn sweep<W: Word>(sizes: &[BenchSize], kernels: &[KernelConfig], opts: &BenchOptions) -> Result<Vec<BenchRun>> {
    let mut runs = Vec::with_capacity(sizes.len() * kernels.len());
    for &size in sizes {
        for &kernel in kernels {
            runs.push(run_config::<W>(size, kernel, opts)?);
        }
    }
    Ok(runs)
}

fn kernel_columns(k: &KernelConfig) -> (String, String, String) {
    match k.kind {
        KernelKind::Naive => ("naive".into(), "-".into(), "1".into()),
        KernelKind::Blocked => ("blocked".into(), k.tile.block_size.to_string(), k.workers.to_string()),
    }
}

pub const REPORT_HEADER: &str = "n_refs,n_queries,n_words,kernel,tile,workers,reps,seed,checksum,batches,\
stage_in_ms,compute_ms,stage_out_ms,wall_ms,comparisons_per_sec,status";

/// One summary row per configuration.
pub fn write_report<Wr: Write>(runs: &[BenchRun], mut out: Wr) -> Result<()> {
    writeln!(out, "{REPORT_HEADER}")?;
    for run in runs {
        let (kernel, tile, workers) = kernel_columns(&run.kernel);
        let s = run.size;
        write!(
            out,
            "{},{},{},{kernel},{tile},{workers},{},{},",
            s.n_refs, s.n_queries, s.n_words, run.reps, run.seed
        )?;
        match &run.status {
            RunStatus::Ok {
                medians,
                checksum,
                batches,
            } => writeln!(
                out,
                "{checksum},{batches},{:.3},{:.3},{:.3},{:.3},{:.0},ok",
                ms(medians.stage_in),
                ms(medians.compute),
                ms(medians.stage_out),
                ms(medians.wall),
                run.throughput().unwrap_or(0.0)
            )?,
            RunStatus::Skipped(reason) => writeln!(out, ",,,,,,,skipped: {}", reason.replace(',', ";"))?,
        }
    }
    Ok(())
}

pub const LONG_HEADER: &str =
    "n_refs,n_queries,n_words,kernel,tile,workers,phase,median_ms,seed,checksum,compute_stage_ratio";

/// Long form: one row per (run, phase), ready for external plotting.
pub fn write_long<Wr: Write>(runs: &[BenchRun], mut out: Wr) -> Result<()> {
    writeln!(out, "{LONG_HEADER}")?;
    for run in runs {
        let (kernel, tile, workers) = kernel_columns(&run.kernel);
        let s = run.size;
        let prefix = format!("{},{},{},{kernel},{tile},{workers}", s.n_refs, s.n_queries, s.n_words);
        match &run.status {
            RunStatus::Ok { medians, checksum, .. } => {
                let ratio = medians.compute_stage_ratio();
                for (phase, d) in [
                    ("stage_in", medians.stage_in),
                    ("compute", medians.compute),
                    ("stage_out", medians.stage_out),
                ] {
                    writeln!(out, "{prefix},{phase},{:.3},{},{checksum},{ratio:.4}", ms(d), run.seed)?;
                }
            }
            RunStatus::Skipped(_) => writeln!(out, "{prefix},skipped,,{},,", run.seed)?,
        }
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::kernel::{compare_naive, TileConfig};

    #[test]
    fn parses_sizes() {
        assert_eq!(
            "100000x1024x16".parse::<BenchSize>().unwrap(),
            BenchSize::new(100_000, 1024, 16)
        );
        assert!("10x10".parse::<BenchSize>().is_err());
        assert!("10x10x0".parse::<BenchSize>().is_err());
        assert!("axbxc".parse::<BenchSize>().is_err());
    }

    #[test]
    fn same_seed_same_checksum() {
        let opts = BenchOptions {
            reps: 2,
            ..Default::default()
        };
        let kernel = KernelConfig::blocked(TileConfig::new(32).unwrap(), 2);
        let a = run_config::<u32>(BenchSize::new(300, 40, 4), kernel, &opts).unwrap();
        let b = run_config::<u32>(BenchSize::new(300, 40, 4), kernel, &opts).unwrap();
        assert_eq!(a.checksum(), b.checksum());
        let naive = run_config::<u32>(BenchSize::new(300, 40, 4), KernelConfig::naive(), &opts).unwrap();
        assert_eq!(a.checksum(), naive.checksum());
        let other = run_config::<u32>(BenchSize::new(300, 40, 4), kernel, &BenchOptions { seed: 99, ..opts }).unwrap();
        assert_ne!(a.checksum(), other.checksum());
    }

    #[test]
    fn checksum_tracks_oracle_scores() {
        let (refs, queries) = synthetic_job::<u64>(BenchSize::new(20, 10, 2), 5);
        let opts = BenchOptions {
            reps: 1,
            seed: 5,
            ..Default::default()
        };
        let run = run_config::<u64>(BenchSize::new(20, 10, 2), KernelConfig::naive(), &opts).unwrap();
        assert_eq!(
            run.checksum().unwrap(),
            score_checksum(&compare_naive(&refs, &queries).unwrap())
        );
    }

    #[test]
    fn infeasible_configs_become_skipped_rows() {
        let opts = BenchOptions {
            reps: 1,
            budget: MemoryBudget::new(64).unwrap(),
            ..Default::default()
        };
        let run = run_config::<u32>(BenchSize::new(10, 100, 4), KernelConfig::naive(), &opts).unwrap();
        assert!(matches!(run.status, RunStatus::Skipped(_)));
        let opts = BenchOptions {
            reps: 1,
            host_limit: 1000,
            ..Default::default()
        };
        let run = run_config::<u32>(BenchSize::new(100, 100, 4), KernelConfig::naive(), &opts).unwrap();
        assert!(matches!(run.status, RunStatus::Skipped(_)));

        let mut out = Vec::new();
        write_report(std::slice::from_ref(&run), &mut out).unwrap();
        let text = String::from_utf8(out).unwrap();
        assert!(text.lines().nth(1).unwrap().contains("skipped"));
        let mut out = Vec::new();
        write_long(&[run], &mut out).unwrap();
        assert_eq!(String::from_utf8(out).unwrap().lines().count(), 2);
    }

    #[test]
    fn throughput_and_ratio_definitions() {
        let run = BenchRun {
            size: BenchSize::new(1000, 500, 4),
            kernel: KernelConfig::naive(),
            reps: 1,
            seed: 1,
            status: RunStatus::Ok {
                medians: PhaseMedians {
                    stage_in: Duration::from_millis(5),
                    compute: Duration::from_millis(250),
                    stage_out: Duration::from_millis(20),
                    wall: Duration::from_millis(280),
                },
                checksum: "00".into(),
                batches: 1,
            },
        };
        assert_eq!(run.throughput().unwrap(), 2_000_000.0);
        assert_eq!(run.medians().unwrap().compute_stage_ratio(), 10.0);

        let mut out = Vec::new();
        write_long(std::slice::from_ref(&run), &mut out).unwrap();
        let text = String::from_utf8(out).unwrap();
        let lines: Vec<&str> = text.lines().collect();
        assert_eq!(lines[0], LONG_HEADER);
        assert_eq!(lines[2], "1000,500,4,naive,-,1,compute,250.000,1,00,10.0000");
        let mut out = Vec::new();
        write_report(&[run], &mut out).unwrap();
        let text = String::from_utf8(out).unwrap();
        assert!(text.lines().nth(1).unwrap().ends_with(",2000000,ok"));
    }

    #[test]
    fn median_of_even_and_odd() {
        let d = Duration::from_millis;
        assert_eq!(median(vec![d(3), d(1), d(2)]), d(2));
        assert_eq!(median(vec![d(4), d(1), d(2), d(3)]), Duration::from_micros(2500));
    }
}
