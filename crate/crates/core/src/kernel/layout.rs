// SPDX-License-Identifier: Apache-2.0

use super::Panel;
use crate::error::Result;
use crate::word::Word;

/// Query panel transposed to word-index-major order: all queries' word 0,
/// then all queries' word 1, and so on. A block of adjacent query columns is
/// then one contiguous run per word index.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct QueryLayout<W> {
    ids: Vec<String>,
    words: Vec<W>,
    n_queries: usize,
    n_words: usize,
    bit_length: usize,
}

impl<W: Word> QueryLayout<W> {
    pub fn n_queries(&self) -> usize {
        self.n_queries
    }

    pub fn n_words(&self) -> usize {
        self.n_words
    }

    pub fn bit_length(&self) -> usize {
        self.bit_length
    }

    pub fn ids(&self) -> &[String] {
        &self.ids
    }

    pub fn words(&self) -> &[W] {
        &self.words
    }

    /// Word `k` of query `j`.
    pub fn get(&self, j: usize, k: usize) -> W {
        self.words[k * self.n_queries + j]
    }

    /// Words `k` of queries `cols`.
    pub fn word_run(&self, k: usize, cols: std::ops::Range<usize>) -> &[W] {
        let base = k * self.n_queries;
        &self.words[base + cols.start..base + cols.end]
    }

    /// Inverse of [`relayout_queries`].
    pub fn to_panel(&self) -> Result<Panel<W>> {
        let mut rows = vec![W::ZERO; self.words.len()];
        for j in 0..self.n_queries {
            for k in 0..self.n_words {
                rows[j * self.n_words + k] = self.get(j, k);
            }
        }
        Panel::from_raw(self.ids.clone(), rows, self.bit_length)
    }

    pub fn byte_len(&self) -> u64 {
        (self.words.len() * W::bytes()) as u64
    }
}

pub fn relayout_queries<W: Word>(queries: &Panel<W>) -> QueryLayout<W> {
    let n_queries = queries.len();
    let n_words = queries.n_words();
    let mut words = vec![W::ZERO; n_queries * n_words];
    for (j, row) in queries.words().chunks_exact(n_words).enumerate() {
        for (k, &w) in row.iter().enumerate() {
            words[k * n_queries + j] = w;
        }
    }
    QueryLayout {
        ids: queries.ids().to_vec(),
        words,
        n_queries,
        n_words,
        bit_length: queries.bit_length(),
    }
}
