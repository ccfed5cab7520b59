// SPDX-License-Identifier: Apache-2.0

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use fastid::bench::{BenchOptions, BenchSize};
use fastid::cli::{cmd_bench, cmd_compare, cmd_encode, exit_code, BenchConfig, CompareConfig};
use fastid::io::{ScoreFormat, ScoreOutput};
use fastid::kernel::{host_parallelism, KernelConfig, KernelKind, TileConfig};
use fastid::scheduler::{BufferPolicy, MemoryBudget, PipelineConfig};
use fastid::word::WordWidth;

#[derive(Parser)]
#[command(
    name = "fastid",
    version,
    about = "All-pairs containment scores for bit-packed identity profiles"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Pack `<id>\t<genotypes>` lines into a panel file.
    Encode {
        input: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
    /// Score every reference against every query.
    Compare(CompareArgs),
    /// Time synthetic panels and print a CSV report.
    Bench(BenchArgs),
}

#[derive(Args)]
struct KernelArgs {
    #[arg(long, default_value = "blocked")]
    kernel: KernelKind,
    /// Block size: 16, 32 or 64.
    #[arg(long, default_value_t = 64)]
    tile: usize,
    /// Worker threads; defaults to the host's parallelism.
    #[arg(long)]
    workers: Option<usize>,
    /// Machine word width in bits: 32 or 64.
    #[arg(long, default_value_t = 64)]
    word_bits: u32,
}

impl KernelArgs {
    fn kernel(&self) -> fastid::Result<KernelConfig> {
        let tile = TileConfig::new(self.tile)?;
        Ok(match self.kernel {
            KernelKind::Naive => KernelConfig::naive(),
            KernelKind::Blocked => KernelConfig::blocked(tile, self.workers.unwrap_or_else(host_parallelism)),
        })
    }

    fn word_width(&self) -> fastid::Result<WordWidth> {
        WordWidth::from_bits(self.word_bits)
            .ok_or_else(|| fastid::Error::MalformedLine(format!("word width {} not supported", self.word_bits)))
    }
}

#[derive(Args)]
struct PipelineArgs {
    /// Memory budget in bytes; accepts k/M/G suffixes or `unlimited`.
    #[arg(long, default_value = "unlimited")]
    budget: MemoryBudget,
    /// Overlap draining one batch with staging the next.
    #[arg(long)]
    overlap: bool,
    /// `reusable` or `fresh`.
    #[arg(long, default_value = "reusable")]
    buffers: BufferPolicy,
}

impl PipelineArgs {
    fn config(&self) -> PipelineConfig {
        PipelineConfig {
            overlap: self.overlap,
            buffers: self.buffers,
        }
    }
}

#[derive(Args)]
struct CompareArgs {
    #[arg(long)]
    refs: PathBuf,
    #[arg(long)]
    queries: PathBuf,
    #[arg(long)]
    out: PathBuf,
    /// `csv` or `binary`.
    #[arg(long, default_value = "csv")]
    format: ScoreFormat,
    /// Omit the id header row and column from CSV output.
    #[arg(long)]
    no_ids: bool,
    /// Write the per-batch timing ledger here.
    #[arg(long)]
    ledger: Option<PathBuf>,
    #[command(flatten)]
    kernel: KernelArgs,
    #[command(flatten)]
    pipeline: PipelineArgs,
}

#[derive(Args)]
struct BenchArgs {
    /// Comma-separated `RxQxW` sizes.
    #[arg(long, value_delimiter = ',', default_value = "10000x512x16,20000x512x16")]
    sizes: Vec<BenchSize>,
    #[arg(long, default_value_t = 5)]
    reps: usize,
    #[arg(long, default_value_t = BenchOptions::default().seed)]
    seed: u64,
    /// Also run the naive kernel on every size.
    #[arg(long)]
    with_naive: bool,
    /// One row per phase instead of one per configuration.
    #[arg(long)]
    long: bool,
    /// Write the CSV here instead of stdout.
    #[arg(long)]
    out: Option<PathBuf>,
    #[command(flatten)]
    kernel: KernelArgs,
    #[command(flatten)]
    pipeline: PipelineArgs,
}

fn run(cli: Cli) -> fastid::Result<()> {
    match cli.command {
        Command::Encode { input, out } => {
            let s = cmd_encode(&input, &out)?;
            eprintln!("encoded {} profiles, {} bits each", s.profiles, s.bit_length);
        }
        Command::Compare(args) => {
            let mut output = ScoreOutput::new(args.format, args.out);
            output.include_ids = !args.no_ids;
            let config = CompareConfig {
                budget: args.pipeline.budget,
                kernel: args.kernel.kernel()?,
                pipeline: args.pipeline.config(),
                word_width: args.kernel.word_width()?,
                ledger: args.ledger,
                ..CompareConfig::new(args.refs, args.queries, output)
            };
            let s = cmd_compare(&config)?;
            eprintln!(
                "scored {} x {} in {} batches, {:.3} s",
                s.n_refs,
                s.n_queries,
                s.batches,
                s.ledger.wall.as_secs_f64()
            );
        }
        Command::Bench(args) => {
            let mut kernels = vec![args.kernel.kernel()?];
            if args.with_naive && args.kernel.kernel != KernelKind::Naive {
                kernels.push(KernelConfig::naive());
            }
            let config = BenchConfig {
                sizes: args.sizes,
                kernels,
                options: BenchOptions {
                    reps: args.reps,
                    seed: args.seed,
                    budget: args.pipeline.budget,
                    pipeline: args.pipeline.config(),
                    ..BenchOptions::default()
                },
                word_width: args.kernel.word_width()?,
                long: args.long,
            };
            let runs = match args.out {
                Some(path) => cmd_bench(&config, std::fs::File::create(path)?)?,
                None => cmd_bench(&config, std::io::stdout().lock())?,
            };
            for run in &runs {
                if let fastid::bench::RunStatus::Skipped(reason) = &run.status {
                    eprintln!("warning: skipped {:?}: {reason}", run.size);
                }
            }
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("fastid: {e}");
            ExitCode::from(exit_code(&e) as u8)
        }
    }
}
