// SPDX-License-Identifier: Apache-2.0

use super::{score_word, Panel, ScoreMatrix};
use crate::error::{Error, Result};
use crate::word::Word;

/// Compares every query with every reference using the plain triple loop.
/// Single-threaded; performs exactly `N_R * N_Q * N_W` word scores.
pub fn compare_naive<W: Word>(refs: &Panel<W>, queries: &Panel<W>) -> Result<ScoreMatrix> {
    if refs.bit_length() != queries.bit_length() {
        return Err(Error::LengthMismatch {
            expected: refs.bit_length(),
            found: queries.bit_length(),
        });
    }
    let mut out = ScoreMatrix::zeros(refs.ids().to_vec(), queries.ids().to_vec());
    naive_into(refs.words(), queries.words(), refs.n_words(), out.scores_mut());
    Ok(out)
}

/// `refs` and `queries` are row-major with `n_words` words per row; `out` is
/// `N_R x N_Q` row-major.
pub(crate) fn naive_into<W: Word>(refs: &[W], queries: &[W], n_words: usize, out: &mut [u32]) {
    let n_refs = refs.len() / n_words;
    let n_queries = queries.len() / n_words;
    debug_assert_eq!(out.len(), n_refs * n_queries);
    for j in 0..n_queries {
        let q = &queries[j * n_words..(j + 1) * n_words];
        for i in 0..n_refs {
            let r = &refs[i * n_words..(i + 1) * n_words];
            let mut count = 0u32;
            for k in 0..n_words {
                count += score_word(r[k], q[k]);
            }
            out[i * n_queries + j] = count;
        }
    }
}
