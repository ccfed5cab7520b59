// SPDX-License-Identifier: Apache-2.0

//! Scores single 32-bit words and a pair of short profiles.
//!
//! ```text
//! cargo run --example score_words
//! ```

use fastid::codec::parse_hex_line;
use fastid::kernel::{popcount_reference, score_profiles, score_word};

fn main() -> fastid::Result<()> {
    let r = parse_hex_line::<u32>("R\t06001440")?;
    let q = parse_hex_line::<u32>("Q\t00000440")?;
    let w = r.words[0];
    println!("R word: {w} (0x{w:08X}), {} bits set", popcount_reference(w));
    println!("score(R, Q) = {}", score_word(w, q.words[0]));
    println!("score(Q, R) = {}", score_word(q.words[0], w));
    println!("score(R, R) = {}", score_word(w, w));

    let a = parse_hex_line::<u32>("A\tFFFFFFFF00000001")?;
    let b = parse_hex_line::<u32>("B\t0F0F0F0F00000000")?;
    println!("score(A, B) over {} words = {}", a.words.len(), score_profiles(&a, &b)?);
    Ok(())
}
