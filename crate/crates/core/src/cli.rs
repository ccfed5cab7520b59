// SPDX-License-Identifier: Apache-2.0

//! The encode / compare / bench workflows behind the `fastid` binary.

use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};

use crate::bench::{sweep, write_long, write_report, BenchOptions, BenchRun, BenchSize};
use crate::codec::{encode_genotype, pack, parse_genotypes};
use crate::error::{Error, Result};
use crate::io::{load_panel, save_panel, write_ledger, ScoreFileSink, ScoreOutput};
use crate::kernel::{KernelConfig, Panel};
use crate::scheduler::{plan_batches, run_job, MemoryBudget, PanelSource, PipelineConfig, TimingLedger};
use crate::word::{Word, WordWidth};

pub const EXIT_OK: i32 = 0;
pub const EXIT_FAILURE: i32 = 1;
pub const EXIT_INPUT: i32 = 2;
pub const EXIT_INFEASIBLE: i32 = 3;

/// Process exit code for a failed command.
pub fn exit_code(err: &Error) -> i32 {
    if err.is_infeasible_plan() {
        EXIT_INFEASIBLE
    } else if err.is_input_error() {
        EXIT_INPUT
    } else {
        EXIT_FAILURE
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct EncodeSummary {
    pub profiles: usize,
    pub bit_length: usize,
}

/// Reads `<id>\t<genotype codes>` lines and packs them into a panel. Blank
/// lines and lines starting with `#` are skipped.
pub fn encode_reader<R: BufRead>(input: R) -> Result<Panel<u32>> {
    let mut profiles = Vec::new();
    let mut bit_length: Option<(usize, usize)> = None;
    for (i, line) in input.lines().enumerate() {
        let line_no = i + 1;
        let line = line?;
        let line = line.trim_end_matches('\r');
        if line.trim().is_empty() || line.starts_with('#') {
            continue;
        }
        let (id, codes) = line
            .split_once('\t')
            .ok_or_else(|| Error::MalformedLine("expected `<id>\\t<genotypes>`".into()).at_line(line_no))?;
        let genotypes = parse_genotypes(codes).map_err(|e| e.at_line(line_no))?;
        let bits = encode_genotype(id, &genotypes).map_err(|e| e.at_line(line_no))?;
        match bit_length {
            None => bit_length = Some((bits.len(), line_no)),
            Some((l, first)) if l != bits.len() => {
                return Err(
                    Error::MalformedLine(format!("{} bits, but line {first} has {l}", bits.len())).at_line(line_no),
                );
            }
            Some(_) => {}
        }
        profiles.push(pack::<u32>(&bits));
    }
    let (l, _) = bit_length.ok_or(Error::NoProfiles)?;
    Panel::from_profiles(profiles, l)
}

pub fn cmd_encode(input: &Path, output: &Path) -> Result<EncodeSummary> {
    let panel = encode_reader(BufReader::new(File::open(input)?))?;
    save_panel(&panel, output)?;
    Ok(EncodeSummary {
        profiles: panel.len(),
        bit_length: panel.bit_length(),
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct CompareConfig {
    pub refs: PathBuf,
    pub queries: PathBuf,
    pub output: ScoreOutput,
    pub budget: MemoryBudget,
    pub kernel: KernelConfig,
    pub pipeline: PipelineConfig,
    pub word_width: WordWidth,
    pub ledger: Option<PathBuf>,
}

impl CompareConfig {
    pub fn new(refs: impl Into<PathBuf>, queries: impl Into<PathBuf>, output: ScoreOutput) -> Self {
        CompareConfig {
            refs: refs.into(),
            queries: queries.into(),
            output,
            budget: MemoryBudget::unlimited(),
            kernel: KernelConfig::default(),
            pipeline: PipelineConfig::default(),
            word_width: WordWidth::default(),
            ledger: None,
        }
    }
}

#[derive(Debug, Clone)]
pub struct CompareSummary {
    pub n_refs: usize,
    pub n_queries: usize,
    pub batches: usize,
    pub ledger: TimingLedger,
}

pub fn cmd_compare(config: &CompareConfig) -> Result<CompareSummary> {
    match config.word_width {
        WordWidth::W32 => compare_with::<u32>(config),
        WordWidth::W64 => compare_with::<u64>(config),
    }
}

fn compare_with<W: Word>(config: &CompareConfig) -> Result<CompareSummary> {
    let refs = load_panel::<W>(&config.refs)?;
    let queries = load_panel::<W>(&config.queries)?;
    if refs.bit_length() != queries.bit_length() {
        return Err(Error::LengthMismatch {
            expected: refs.bit_length(),
            found: queries.bit_length(),
        });
    }
    let plan = plan_batches(
        refs.len(),
        queries.len(),
        refs.n_words(),
        config.word_width,
        config.budget,
    )?;
    let mut sink = ScoreFileSink::create(&config.output, refs.ids().to_vec(), queries.ids().to_vec())?;
    let ledger = run_job(
        &config.kernel,
        &plan,
        &mut PanelSource::new(&refs),
        &queries,
        &mut sink,
        config.pipeline,
    )?;
    if let Some(path) = &config.ledger {
        write_ledger(&ledger, path)?;
    }
    Ok(CompareSummary {
        n_refs: refs.len(),
        n_queries: queries.len(),
        batches: plan.len(),
        ledger,
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct BenchConfig {
    pub sizes: Vec<BenchSize>,
    pub kernels: Vec<KernelConfig>,
    pub options: BenchOptions,
    pub word_width: WordWidth,
    /// Emit the long per-phase form instead of the summary report.
    pub long: bool,
}

/// Runs the sweep and writes its CSV to `out`.
pub fn cmd_bench<Wr: Write>(config: &BenchConfig, out: Wr) -> Result<Vec<BenchRun>> {
    let runs = match config.word_width {
        WordWidth::W32 => sweep::<u32>(&config.sizes, &config.kernels, &config.options)?,
        WordWidth::W64 => sweep::<u64>(&config.sizes, &config.kernels, &config.options)?,
    };
    let mut out = BufWriter::new(out);
    if config.long {
        write_long(&runs, &mut out)?;
    } else {
        write_report(&runs, &mut out)?;
    }
    out.flush()?;
    Ok(runs)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::codec::format_hex_bits;
    use crate::io::{read_scores_csv, ScoreFormat};
    use crate::kernel::TileConfig;
    use std::fs;

    fn encode(text: &str) -> Result<Panel<u32>> {
        encode_reader(text.as_bytes())
    }

    #[test]
    fn encodes_slot_bits() {
        let p = encode("S1\tMmmM\n").unwrap();
        assert_eq!(p.bit_length(), 4);
        assert_eq!(format_hex_bits(p.row(0), 4), "60000000");

        let p = encode("S1\tMm mM mM Mm\n").unwrap();
        assert_eq!(p.bit_length(), 8);
        assert_eq!(format_hex_bits(p.row(0), 8), "69000000");
    }

    #[test]
    fn empty_input_has_no_profiles() {
        assert!(matches!(encode(""), Err(Error::NoProfiles)));
        assert!(matches!(encode("# only a comment\n\n"), Err(Error::NoProfiles)));
    }

    #[test]
    fn mixed_lengths_name_first_offending_line() {
        let err = encode("a\tMMmm\nb\tMMmm\nc\tMm\nd\tM\n").unwrap_err();
        assert!(matches!(err, Error::AtLine { line: 3, .. }), "{err}");
        assert_eq!(exit_code(&err), EXIT_INPUT);
    }

    #[test]
    fn bad_codes_carry_line_numbers() {
        let err = encode("a\tMM\nb\tMX\n").unwrap_err();
        assert!(matches!(err, Error::AtLine { line: 2, .. }));
        assert!(matches!(err.root(), Error::UnknownGenotype { .. }));
        assert!(matches!(encode("no tab here\n"), Err(Error::AtLine { line: 1, .. })));
    }

    #[test]
    fn exit_codes_are_distinct() {
        let infeasible = Error::InfeasiblePlan { budget: 1, minimum: 2 };
        let io = Error::Io(std::io::Error::other("x"));
        assert_eq!(exit_code(&infeasible), EXIT_INFEASIBLE);
        assert_eq!(exit_code(&Error::NoProfiles), EXIT_INPUT);
        assert_eq!(exit_code(&io), EXIT_FAILURE);
    }

    #[test]
    fn self_compare_has_zero_diagonal() {
        let dir = tempfile::tempdir().unwrap();
        let genos = dir.path().join("g.tsv");
        fs::write(&genos, "a\tMmmmMM\nb\tmmMMMm\nc\tMMMMMM\n").unwrap();
        let panel = dir.path().join("p.txt");
        let s = cmd_encode(&genos, &panel).unwrap();
        assert_eq!(
            s,
            EncodeSummary {
                profiles: 3,
                bit_length: 6
            }
        );

        let out = dir.path().join("s.csv");
        let mut cfg = CompareConfig::new(&panel, &panel, ScoreOutput::new(ScoreFormat::Csv, &out));
        cfg.kernel = KernelConfig::blocked(TileConfig::new(16).unwrap(), 2);
        cfg.ledger = Some(dir.path().join("ledger.csv"));
        let summary = cmd_compare(&cfg).unwrap();
        assert_eq!(summary.batches, 1);
        let m = read_scores_csv(BufReader::new(File::open(&out).unwrap())).unwrap();
        for i in 0..3 {
            assert_eq!(m.get(i, i), 0);
        }
        // a = 011100, b = 110001, c = 000000
        assert_eq!(m.get(0, 1), 2);
        assert_eq!(m.get(1, 0), 2);
        assert_eq!(m.get(0, 2), 3);
        assert_eq!(m.get(2, 0), 0);
        assert!(fs::read_to_string(dir.path().join("ledger.csv"))
            .unwrap()
            .starts_with("batch_index,"));
    }

    #[test]
    fn infeasible_budget_reports_minimum() {
        let dir = tempfile::tempdir().unwrap();
        let panel = dir.path().join("p.txt");
        fs::write(&panel, "#bits=32\na\tFFFFFFFF\nb\t00000000\n").unwrap();
        let mut cfg = CompareConfig::new(
            &panel,
            &panel,
            ScoreOutput::new(ScoreFormat::Binary, dir.path().join("s")),
        );
        cfg.budget = MemoryBudget::new(4).unwrap();
        let err = cmd_compare(&cfg).unwrap_err();
        assert_eq!(exit_code(&err), EXIT_INFEASIBLE);
        assert!(err.to_string().contains("minimum feasible budget"));
        assert!(!dir.path().join("s").exists());
    }

    #[test]
    fn bench_writes_one_row_per_config() {
        let cfg = BenchConfig {
            sizes: vec![BenchSize::new(50, 10, 2), BenchSize::new(100, 10, 2)],
            kernels: vec![KernelConfig::naive(), KernelConfig::blocked(TileConfig::default(), 1)],
            options: BenchOptions {
                reps: 1,
                ..Default::default()
            },
            word_width: WordWidth::W32,
            long: false,
        };
        let mut out = Vec::new();
        let runs = cmd_bench(&cfg, &mut out).unwrap();
        assert_eq!(runs.len(), 4);
        assert_eq!(String::from_utf8(out).unwrap().lines().count(), 5);
        assert_eq!(runs[0].checksum(), runs[1].checksum());
    }
}
