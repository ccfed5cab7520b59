// SPDX-License-Identifier: Apache-2.0

//! Round-trips a panel file and writes scores as CSV and packed binary.
//!
//! ```text
//! cargo run --example file_formats [out-dir]
//! ```

use std::fs::File;
use std::io::BufReader;
use std::path::PathBuf;

use fastid::io::{load_panel, read_panel, read_scores_binary, write_scores, ScoreFormat, ScoreOutput};
use fastid::kernel::compare_naive;

const PANEL: &str = "\
#bits=40
# 40 bits take two 32-bit words; the tail of the second is zero
alpha\tFFFFFFFFFF000000
beta\t0F0F0F0F0F000000
gamma\t0000000000000000
";

fn main() -> fastid::Result<()> {
    let dir: PathBuf = std::env::args()
        .nth(1)
        .map(Into::into)
        .unwrap_or_else(std::env::temp_dir);
    let panel = read_panel::<u32, _>(PANEL.as_bytes())?;
    println!("alpha words: {:08X?}", panel.row(0));

    let panel_path = dir.join("fastid_example_panel.txt");
    fastid::io::save_panel(&panel, &panel_path)?;
    let again = load_panel::<u64>(&panel_path)?;
    println!("reloaded with 64-bit words: {:016X?}", again.row(0));

    let scores = compare_naive(&panel, &panel)?;
    let csv = ScoreOutput::new(ScoreFormat::Csv, dir.join("fastid_example_scores.csv"));
    let bin = ScoreOutput::new(ScoreFormat::Binary, dir.join("fastid_example_scores.fidm"));
    write_scores(&scores, &csv)?;
    write_scores(&scores, &bin)?;

    print!("{}", std::fs::read_to_string(&csv.path)?);
    let raw = read_scores_binary(BufReader::new(File::open(&bin.path)?))?;
    println!("binary: {} x {} cells {:?}", raw.n_rows, raw.n_cols, raw.cells);
    Ok(())
}
