// SPDX-License-Identifier: Apache-2.0

//! Encodes genotype calls into minor-allele bits and writes a panel file.
//!
//! ```text
//! cargo run --example encode_genotypes [genotypes.tsv] [panel.txt]
//! ```
//!
//! Without arguments a small built-in panel is encoded and printed.

use std::io::BufReader;

use fastid::cli::encode_reader;
use fastid::codec::{encode_genotype, parse_genotypes};
use fastid::io::write_panel;

const SAMPLE: &str = "\
# id\tgenotypes (MM, Mm, mM, mm per locus)
S1\tMm mM mM Mm
S2\tMM MM mm Mm
S3\tmm mm mm mm
";

fn main() -> fastid::Result<()> {
    let args: Vec<String> = std::env::args().skip(1).collect();

    let bits = encode_genotype("S1", &parse_genotypes("Mm mM mM Mm")?)?;
    println!("S1 bits: {}", bits.to_bit_string());

    let panel = match args.first() {
        Some(path) => encode_reader(BufReader::new(std::fs::File::open(path)?))?,
        None => encode_reader(SAMPLE.as_bytes())?,
    };
    println!("{} profiles, {} bits each", panel.len(), panel.bit_length());
    match args.get(1) {
        Some(out) => fastid::io::save_panel(&panel, out)?,
        None => write_panel(&panel, std::io::stdout().lock())?,
    }
    Ok(())
}
