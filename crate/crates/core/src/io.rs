// SPDX-License-Identifier: Apache-2.0

//! Panel files, score matrices and ledgers on disk.
//!
//! Panel file: UTF-8, one profile per line as `<id><TAB><hex>`. A `#bits=<L>`
//! header must precede the first profile; other `#` lines are comments. The
//! hex field holds the profile's bit string MSB-first, rounded up to whole
//! 32-bit groups, so files do not depend on the in-memory word width.
//!
//! Packed-binary scores: `FIDM`, a version byte, `N_R` and `N_Q` as 8-byte
//! little-endian counts, then `N_R * N_Q` little-endian `u32` cells in
//! row-major order.
//!
//! CSV scores: a header `ref_id,<query ids>` then one `<ref id>,<scores>` row
//! per reference. `,` separators, `\n` line endings, no quoting.

use std::collections::HashSet;
use std::fs::{self, File};
use std::io::{BufRead, BufReader, BufWriter, Read, Write};
use std::path::{Path, PathBuf};
use std::str::FromStr;

use crate::codec::{format_hex_bits, parse_panel_line};
use crate::error::{Error, Result};
use crate::kernel::{Panel, ScoreMatrix};
use crate::scheduler::{ScoreSink, TimingLedger};
use crate::word::Word;

pub const SCORE_MAGIC: &[u8; 4] = b"FIDM";
pub const SCORE_VERSION: u8 = 1;
/// Magic, version and the two counts.
pub const SCORE_HEADER_BYTES: usize = 4 + 1 + 8 + 8;

pub fn read_panel<W: Word, R: BufRead>(reader: R) -> Result<Panel<W>> {
    let mut bit_length = None;
    let mut profiles = Vec::new();
    let mut seen = HashSet::new();
    for (i, line) in reader.lines().enumerate() {
        let line_no = i + 1;
        let line = line?;
        let line = line.trim_end_matches('\r');
        if line.trim().is_empty() {
            continue;
        }
        if let Some(comment) = line.strip_prefix('#') {
            if let Some(value) = comment.trim().strip_prefix("bits=") {
                if bit_length.is_some() {
                    return Err(Error::MalformedLine("repeated `#bits=` header".into()).at_line(line_no));
                }
                let l: usize = value
                    .trim()
                    .parse()
                    .map_err(|_| Error::MalformedLine(format!("bad bit length {value:?}")).at_line(line_no))?;
                crate::codec::check_bit_length(l).map_err(|e| e.at_line(line_no))?;
                bit_length = Some(l);
            }
            continue;
        }
        let l = bit_length.ok_or_else(|| Error::MissingHeader.at_line(line_no))?;
        let profile = parse_panel_line::<W>(line, l).map_err(|e| e.at_line(line_no))?;
        if !seen.insert(profile.id.clone()) {
            return Err(Error::DuplicateId(profile.id).at_line(line_no));
        }
        profiles.push(profile);
    }
    let l = bit_length.ok_or(Error::MissingHeader)?;
    Panel::from_profiles(profiles, l)
}

pub fn load_panel<W: Word>(path: impl AsRef<Path>) -> Result<Panel<W>> {
    read_panel(BufReader::new(File::open(path)?))
}

pub fn write_panel<W: Word, Wr: Write>(panel: &Panel<W>, out: Wr) -> Result<()> {
    let mut out = BufWriter::new(out);
    writeln!(out, "#bits={}", panel.bit_length())?;
    for (i, id) in panel.ids().iter().enumerate() {
        writeln!(out, "{id}\t{}", format_hex_bits(panel.row(i), panel.bit_length()))?;
    }
    out.flush()?;
    Ok(())
}

pub fn save_panel<W: Word>(panel: &Panel<W>, path: impl AsRef<Path>) -> Result<()> {
    write_panel(panel, File::create(path)?)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum ScoreFormat {
    #[default]
    Csv,
    Binary,
}

impl FromStr for ScoreFormat {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "csv" => Ok(ScoreFormat::Csv),
            "binary" | "packed-binary" | "fidm" => Ok(ScoreFormat::Binary),
            other => Err(Error::MalformedLine(format!("unknown score format {other:?}"))),
        }
    }
}

/// Where and how a score matrix is written.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ScoreOutput {
    pub format: ScoreFormat,
    pub path: PathBuf,
    /// CSV only: emit the id header row and leading id column.
    pub include_ids: bool,
}

impl ScoreOutput {
    pub fn new(format: ScoreFormat, path: impl Into<PathBuf>) -> Self {
        ScoreOutput {
            format,
            path: path.into(),
            include_ids: true,
        }
    }
}

pub fn write_scores(matrix: &ScoreMatrix, out: &ScoreOutput) -> Result<()> {
    let mut sink = ScoreFileSink::create(out, matrix.row_ids().to_vec(), matrix.col_ids().to_vec())?;
    sink.begin(matrix.n_rows(), matrix.n_cols())?;
    sink.write_rows(0, matrix.scores())?;
    sink.finish()
}

pub fn write_scores_csv<Wr: Write + Send>(matrix: &ScoreMatrix, out: Wr, include_ids: bool) -> Result<()> {
    let mut w = CsvScoreWriter::new(out, matrix.row_ids().to_vec(), matrix.col_ids().to_vec(), include_ids);
    w.begin(matrix.n_rows(), matrix.n_cols())?;
    w.write_rows(0, matrix.scores())?;
    w.finish()
}

pub fn write_scores_binary<Wr: Write + Send>(matrix: &ScoreMatrix, out: Wr) -> Result<()> {
    let mut w = BinaryScoreWriter::new(out);
    w.begin(matrix.n_rows(), matrix.n_cols())?;
    w.write_rows(0, matrix.scores())?;
    w.finish()
}

/// Dimensions and cells of a packed-binary score file.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RawScores {
    pub n_rows: usize,
    pub n_cols: usize,
    pub cells: Vec<u32>,
}

pub fn read_scores_binary<R: Read>(mut reader: R) -> Result<RawScores> {
    let mut header = [0u8; SCORE_HEADER_BYTES];
    reader
        .read_exact(&mut header)
        .map_err(|_| Error::ScoreFormat("truncated header".into()))?;
    if &header[..4] != SCORE_MAGIC {
        return Err(Error::ScoreFormat("bad magic".into()));
    }
    if header[4] != SCORE_VERSION {
        return Err(Error::ScoreFormat(format!("unsupported version {}", header[4])));
    }
    let count = |b: &[u8]| -> Result<usize> {
        usize::try_from(u64::from_le_bytes(b.try_into().unwrap()))
            .map_err(|_| Error::ScoreFormat("count too large".into()))
    };
    let n_rows = count(&header[5..13])?;
    let n_cols = count(&header[13..21])?;
    let n_cells = n_rows
        .checked_mul(n_cols)
        .ok_or_else(|| Error::ScoreFormat("cell count overflows".into()))?;
    let mut bytes = Vec::new();
    reader.read_to_end(&mut bytes)?;
    if bytes.len() != n_cells * 4 {
        return Err(Error::ScoreFormat(format!(
            "expected {} cell bytes, found {}",
            n_cells * 4,
            bytes.len()
        )));
    }
    let cells = bytes
        .chunks_exact(4)
        .map(|c| u32::from_le_bytes(c.try_into().unwrap()))
        .collect();
    Ok(RawScores { n_rows, n_cols, cells })
}

/// Reads a CSV score file written with ids.
pub fn read_scores_csv<R: BufRead>(reader: R) -> Result<ScoreMatrix> {
    let mut lines = reader.lines();
    let header = lines.next().ok_or_else(|| Error::ScoreFormat("empty file".into()))??;
    let mut fields = header.split(',');
    if fields.next() != Some("ref_id") {
        return Err(Error::ScoreFormat("header must start with `ref_id`".into()));
    }
    let col_ids: Vec<String> = fields.map(str::to_string).collect();
    let mut row_ids = Vec::new();
    let mut scores = Vec::new();
    for (i, line) in lines.enumerate() {
        let line = line?;
        let mut fields = line.split(',');
        row_ids.push(fields.next().unwrap_or_default().to_string());
        let before = scores.len();
        for f in fields {
            let v = f
                .parse::<u32>()
                .map_err(|_| Error::ScoreFormat(format!("bad cell {f:?}")).at_line(i + 2))?;
            scores.push(v);
        }
        if scores.len() - before != col_ids.len() {
            return Err(Error::ScoreFormat("row width differs from header".into()).at_line(i + 2));
        }
    }
    ScoreMatrix::new(row_ids, col_ids, scores)
}

pub fn write_ledger(ledger: &TimingLedger, path: impl AsRef<Path>) -> Result<()> {
    let mut out = BufWriter::new(File::create(path)?);
    ledger.write_csv(&mut out)?;
    out.flush()?;
    Ok(())
}

/// Streams rows in the packed-binary format.
#[derive(Debug)]
pub struct BinaryScoreWriter<Wr: Write> {
    out: BufWriter<Wr>,
    buf: Vec<u8>,
    next_row: usize,
    n_cols: usize,
}

impl<Wr: Write> BinaryScoreWriter<Wr> {
    pub fn new(out: Wr) -> Self {
        BinaryScoreWriter {
            out: BufWriter::with_capacity(1 << 20, out),
            buf: Vec::new(),
            next_row: 0,
            n_cols: 0,
        }
    }

    pub fn into_inner(self) -> Result<Wr> {
        self.out.into_inner().map_err(|e| Error::Io(e.into_error()))
    }
}

impl<Wr: Write + Send> ScoreSink for BinaryScoreWriter<Wr> {
    fn begin(&mut self, n_refs: usize, n_queries: usize) -> Result<()> {
        self.out.write_all(SCORE_MAGIC)?;
        self.out.write_all(&[SCORE_VERSION])?;
        self.out.write_all(&(n_refs as u64).to_le_bytes())?;
        self.out.write_all(&(n_queries as u64).to_le_bytes())?;
        self.n_cols = n_queries;
        self.next_row = 0;
        Ok(())
    }

    fn write_rows(&mut self, first_row: usize, cells: &[u32]) -> Result<()> {
        if self.n_cols == 0 {
            return Ok(());
        }
        check_row_order(self.next_row, first_row)?;
        for chunk in cells.chunks(1 << 16) {
            self.buf.clear();
            self.buf.extend(chunk.iter().flat_map(|c| c.to_le_bytes()));
            self.out.write_all(&self.buf)?;
        }
        self.next_row += cells.len() / self.n_cols;
        Ok(())
    }

    fn finish(&mut self) -> Result<()> {
        self.out.flush()?;
        Ok(())
    }
}

/// Streams rows as CSV.
#[derive(Debug)]
pub struct CsvScoreWriter<Wr: Write> {
    out: BufWriter<Wr>,
    row_ids: Vec<String>,
    col_ids: Vec<String>,
    include_ids: bool,
    next_row: usize,
}

impl<Wr: Write> CsvScoreWriter<Wr> {
    pub fn new(out: Wr, row_ids: Vec<String>, col_ids: Vec<String>, include_ids: bool) -> Self {
        CsvScoreWriter {
            out: BufWriter::with_capacity(1 << 20, out),
            row_ids,
            col_ids,
            include_ids,
            next_row: 0,
        }
    }
}

impl<Wr: Write + Send> ScoreSink for CsvScoreWriter<Wr> {
    fn begin(&mut self, n_refs: usize, n_queries: usize) -> Result<()> {
        if n_refs != self.row_ids.len() || n_queries != self.col_ids.len() {
            return Err(Error::LengthMismatch {
                expected: self.row_ids.len() * self.col_ids.len(),
                found: n_refs * n_queries,
            });
        }
        if self.include_ids {
            self.out.write_all(b"ref_id")?;
            for id in &self.col_ids {
                write!(self.out, ",{id}")?;
            }
            self.out.write_all(b"\n")?;
        }
        self.next_row = 0;
        Ok(())
    }

    fn write_rows(&mut self, first_row: usize, cells: &[u32]) -> Result<()> {
        if self.col_ids.is_empty() {
            // Rows without cells carry only their id; written by `finish`.
            return Ok(());
        }
        check_row_order(self.next_row, first_row)?;
        for (i, row) in cells.chunks_exact(self.col_ids.len()).enumerate() {
            let mut first = true;
            if self.include_ids {
                self.out.write_all(self.row_ids[first_row + i].as_bytes())?;
                first = false;
            }
            for v in row {
                if !first {
                    self.out.write_all(b",")?;
                }
                write!(self.out, "{v}")?;
                first = false;
            }
            self.out.write_all(b"\n")?;
        }
        self.next_row += cells.len() / self.col_ids.len();
        Ok(())
    }

    fn finish(&mut self) -> Result<()> {
        if self.col_ids.is_empty() && self.include_ids {
            for id in &self.row_ids {
                writeln!(self.out, "{id}")?;
            }
        }
        self.out.flush()?;
        Ok(())
    }
}

fn check_row_order(expected: usize, found: usize) -> Result<()> {
    if expected != found {
        return Err(Error::ScoreFormat(format!(
            "rows out of order: expected row {expected}, got {found}"
        )));
    }
    Ok(())
}

enum FileWriter {
    Csv(CsvScoreWriter<File>),
    Binary(BinaryScoreWriter<File>),
}

/// Writes a score file through a `.partial` sibling that is renamed into
/// place on `finish` and removed on `abort`, so a failed job never leaves a
/// final-looking file behind.
pub struct ScoreFileSink {
    writer: Option<FileWriter>,
    partial: PathBuf,
    target: PathBuf,
}

impl ScoreFileSink {
    pub fn create(out: &ScoreOutput, row_ids: Vec<String>, col_ids: Vec<String>) -> Result<Self> {
        let mut partial = out.path.clone().into_os_string();
        partial.push(".partial");
        let partial = PathBuf::from(partial);
        let file = File::create(&partial)?;
        let writer = match out.format {
            ScoreFormat::Csv => FileWriter::Csv(CsvScoreWriter::new(file, row_ids, col_ids, out.include_ids)),
            ScoreFormat::Binary => FileWriter::Binary(BinaryScoreWriter::new(file)),
        };
        Ok(ScoreFileSink {
            writer: Some(writer),
            partial,
            target: out.path.clone(),
        })
    }

    fn writer(&mut self) -> Result<&mut dyn ScoreSink> {
        match self.writer.as_mut() {
            Some(FileWriter::Csv(w)) => Ok(w),
            Some(FileWriter::Binary(w)) => Ok(w),
            None => Err(Error::ScoreFormat("score file already closed".into())),
        }
    }
}

impl ScoreSink for ScoreFileSink {
    fn begin(&mut self, n_refs: usize, n_queries: usize) -> Result<()> {
        self.writer()?.begin(n_refs, n_queries)
    }

    fn write_rows(&mut self, first_row: usize, cells: &[u32]) -> Result<()> {
        self.writer()?.write_rows(first_row, cells)
    }

    fn finish(&mut self) -> Result<()> {
        self.writer()?.finish()?;
        self.writer = None;
        fs::rename(&self.partial, &self.target)?;
        Ok(())
    }

    fn abort(&mut self) {
        self.writer = None;
        let _ = fs::remove_file(&self.partial);
    }
}

impl Drop for ScoreFileSink {
    fn drop(&mut self) {
        if self.writer.is_some() {
            self.abort();
        }
    }
}
