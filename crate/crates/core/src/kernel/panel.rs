// SPDX-License-Identifier: Apache-2.0

use std::collections::HashSet;
use std::ops::Range;

use crate::codec::{check_bit_length, padding_is_zero, validate_id, words_for, PackedProfile};
use crate::error::{Error, Result};
use crate::word::Word;

/// Equally sized packed profiles stored as a dense row-major matrix, one row
/// of `n_words` words per profile.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Panel<W> {
    ids: Vec<String>,
    words: Vec<W>,
    n_words: usize,
    bit_length: usize,
}

impl<W: Word> Panel<W> {
    /// An empty panel for profiles of `bit_length` bits.
    pub fn new(bit_length: usize) -> Result<Self> {
        check_bit_length(bit_length)?;
        Ok(Panel {
            ids: Vec::new(),
            words: Vec::new(),
            n_words: words_for::<W>(bit_length),
            bit_length,
        })
    }

    pub fn from_profiles(profiles: Vec<PackedProfile<W>>, bit_length: usize) -> Result<Self> {
        let mut panel = Panel::new(bit_length)?;
        panel.words.reserve(profiles.len() * panel.n_words);
        let mut seen = HashSet::with_capacity(profiles.len());
        for p in profiles {
            if !seen.insert(p.id.clone()) {
                return Err(Error::DuplicateId(p.id));
            }
            panel.push_unchecked_id(p)?;
        }
        Ok(panel)
    }

    /// Builds a panel from row-major words. Ids are validated and must be
    /// unique; every row's padding must be zero.
    pub fn from_raw(ids: Vec<String>, words: Vec<W>, bit_length: usize) -> Result<Self> {
        check_bit_length(bit_length)?;
        let n_words = words_for::<W>(bit_length);
        if words.len() != ids.len() * n_words {
            return Err(Error::LengthMismatch {
                expected: ids.len() * n_words,
                found: words.len(),
            });
        }
        let mut seen = HashSet::with_capacity(ids.len());
        for (id, row) in ids.iter().zip(words.chunks_exact(n_words)) {
            validate_id(id)?;
            if !seen.insert(id.as_str()) {
                return Err(Error::DuplicateId(id.clone()));
            }
            if !padding_is_zero(row, bit_length) {
                return Err(Error::CorruptProfile { id: id.clone() });
            }
        }
        Ok(Panel {
            ids,
            words,
            n_words,
            bit_length,
        })
    }

    /// Appends a profile. Duplicate ids are only detected by the bulk
    /// constructors and the panel reader.
    fn push_unchecked_id(&mut self, p: PackedProfile<W>) -> Result<()> {
        validate_id(&p.id)?;
        if p.words.len() != self.n_words {
            return Err(Error::LengthMismatch {
                expected: self.n_words,
                found: p.words.len(),
            });
        }
        if !padding_is_zero(&p.words, self.bit_length) {
            return Err(Error::CorruptProfile { id: p.id });
        }
        self.words.extend_from_slice(&p.words);
        self.ids.push(p.id);
        Ok(())
    }

    pub fn len(&self) -> usize {
        self.ids.len()
    }

    pub fn is_empty(&self) -> bool {
        self.ids.is_empty()
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

    pub fn row(&self, i: usize) -> &[W] {
        &self.words[i * self.n_words..(i + 1) * self.n_words]
    }

    /// Contiguous words of rows `range`.
    pub fn rows(&self, range: Range<usize>) -> &[W] {
        &self.words[range.start * self.n_words..range.end * self.n_words]
    }

    pub fn profile(&self, i: usize) -> PackedProfile<W> {
        PackedProfile {
            id: self.ids[i].clone(),
            words: self.row(i).to_vec(),
        }
    }

    /// Bytes the packed rows occupy.
    pub fn byte_len(&self) -> u64 {
        (self.words.len() * W::bytes()) as u64
    }
}

/// Dense `n_rows x n_cols` matrix of scores, row-major; rows are reference
/// profiles and columns are queries.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ScoreMatrix {
    row_ids: Vec<String>,
    col_ids: Vec<String>,
    scores: Vec<u32>,
}

impl ScoreMatrix {
    pub fn new(row_ids: Vec<String>, col_ids: Vec<String>, scores: Vec<u32>) -> Result<Self> {
        if scores.len() != row_ids.len() * col_ids.len() {
            return Err(Error::LengthMismatch {
                expected: row_ids.len() * col_ids.len(),
                found: scores.len(),
            });
        }
        Ok(ScoreMatrix {
            row_ids,
            col_ids,
            scores,
        })
    }

    pub fn zeros(row_ids: Vec<String>, col_ids: Vec<String>) -> Self {
        let scores = vec![0; row_ids.len() * col_ids.len()];
        ScoreMatrix {
            row_ids,
            col_ids,
            scores,
        }
    }

    pub fn n_rows(&self) -> usize {
        self.row_ids.len()
    }

    pub fn n_cols(&self) -> usize {
        self.col_ids.len()
    }

    pub fn get(&self, i: usize, j: usize) -> u32 {
        self.scores[i * self.n_cols() + j]
    }

    pub fn row(&self, i: usize) -> &[u32] {
        let n = self.n_cols();
        &self.scores[i * n..(i + 1) * n]
    }

    pub fn row_ids(&self) -> &[String] {
        &self.row_ids
    }

    pub fn col_ids(&self) -> &[String] {
        &self.col_ids
    }

    pub fn scores(&self) -> &[u32] {
        &self.scores
    }

    pub fn scores_mut(&mut self) -> &mut [u32] {
        &mut self.scores
    }

    pub fn into_scores(self) -> Vec<u32> {
        self.scores
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn prof(id: &str, words: Vec<u32>) -> PackedProfile<u32> {
        PackedProfile { id: id.into(), words }
    }

    #[test]
    fn rows_are_contiguous() {
        let p = Panel::from_profiles(vec![prof("a", vec![1, 2]), prof("b", vec![3, 4])], 64).unwrap();
        assert_eq!(p.words(), &[1, 2, 3, 4]);
        assert_eq!(p.row(1), &[3, 4]);
        assert_eq!(p.rows(0..2).len(), 4);
        assert_eq!(p.byte_len(), 16);
    }

    #[test]
    fn duplicate_and_padding_rejected() {
        let dup = Panel::from_profiles(vec![prof("a", vec![0]), prof("a", vec![0])], 32);
        assert!(matches!(dup, Err(Error::DuplicateId(_))));
        let pad = Panel::from_profiles(vec![prof("a", vec![1])], 8);
        assert!(matches!(pad, Err(Error::CorruptProfile { .. })));
        let len = Panel::from_profiles(vec![prof("a", vec![0, 0])], 32);
        assert!(matches!(len, Err(Error::LengthMismatch { .. })));
    }

    #[test]
    fn score_matrix_shape_checked() {
        assert!(ScoreMatrix::new(vec!["r".into()], vec!["q".into()], vec![1, 2]).is_err());
        let m = ScoreMatrix::new(vec!["r".into()], vec!["a".into(), "b".into()], vec![1, 2]).unwrap();
        assert_eq!(m.get(0, 1), 2);
    }
}
