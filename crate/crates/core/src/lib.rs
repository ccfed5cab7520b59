// SPDX-License-Identifier: Apache-2.0

//! # fastid
//!
//! All-pairs comparison of bit-packed identity profiles, computed as an
//! overloaded dense matrix product. Where an ordinary GEMM multiplies and
//! adds, this one evaluates
//!
//! ```text
//! score(r, q) = popcount((r XOR q) AND r)
//! ```
//!
//! word by word and sums the counts. A score of zero means every bit set in
//! the reference profile `r` is also set in the query `q`.
//!
//! The crate is organized as:
//!
//! - [`codec`]: genotype strings and hex text to packed words and back.
//! - [`kernel`]: the word/profile score, a naive oracle kernel, and a
//!   cache-blocked multi-threaded kernel.
//! - [`scheduler`]: memory-budgeted batch planning and a two-stage
//!   load/compute/drain pipeline with per-phase timing.
//! - [`io`]: panel files, score matrices (CSV and packed binary), ledgers.
//! - [`bench`]: seeded synthetic panels and timing sweeps.
//! - [`cli`]: the `encode` / `compare` / `bench` commands behind the
//!   `fastid` binary.
//!
//! ## Example
//!
//! ```rust
//! use fastid::codec::parse_hex_line;
//! use fastid::kernel::{compare_naive, score_word, Panel};
//!
//! let r = parse_hex_line::<u32>("S1\t06001440").unwrap();
//! assert_eq!(r.words, vec![100_668_480]);
//! assert_eq!(score_word(0x0600_1440u32, 0x0000_0440), 3);
//!
//! let panel = Panel::from_profiles(vec![r], 32).unwrap();
//! let scores = compare_naive(&panel, &panel).unwrap();
//! assert_eq!(scores.get(0, 0), 0);
//! ```

pub mod bench;
pub mod cli;
pub mod codec;
pub mod error;
pub mod io;
pub mod kernel;
pub mod scheduler;
pub mod word;

pub use error::{Error, Result};
pub use word::Word;

/// Largest supported profile bit length. Scores are stored as `u32` cells, so
/// this keeps every accumulator far from overflow.
pub const MAX_BIT_LENGTH: usize = 1 << 20;
