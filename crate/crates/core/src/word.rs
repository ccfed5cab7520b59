// SPDX-License-Identifier: Apache-2.0

//! Machine words that hold packed profile bits.

use std::fmt::Debug;
use std::ops::{BitAnd, BitOr, BitXor, Not};

mod sealed {
    pub trait Sealed {}
    impl Sealed for u32 {}
    impl Sealed for u64 {}
}

/// An unsigned word used as the packing unit. Implemented for `u32` and `u64`.
///
/// Bit position `p` of a profile lives in word `p / BITS` at shift
/// `BITS - 1 - p % BITS`, so the first profile bit is the most significant bit
/// of word 0 and a hex dump reads in profile order.
pub trait Word:
    sealed::Sealed
    + Copy
    + Default
    + Eq
    + Debug
    + Send
    + Sync
    + 'static
    + BitAnd<Output = Self>
    + BitOr<Output = Self>
    + BitXor<Output = Self>
    + Not<Output = Self>
{
    const BITS: u32;
    const ZERO: Self;
    const ONES: Self;

    fn popcount(self) -> u32;
    /// Truncating conversion.
    fn from_u64(v: u64) -> Self;
    fn to_u64(self) -> u64;

    /// Number of bytes one word occupies.
    fn bytes() -> usize {
        Self::BITS as usize / 8
    }

    /// Hex digits needed for one word.
    fn hex_digits() -> usize {
        Self::BITS as usize / 4
    }

    /// Word with only the bit at MSB-first position `pos` set.
    fn msb_bit(pos: u32) -> Self {
        Self::from_u64(1u64 << (Self::BITS - 1 - pos))
    }

    /// Mask of the first `n` MSB-first bit positions. `n <= BITS`.
    fn leading_mask(n: u32) -> Self {
        match n {
            0 => Self::ZERO,
            n if n >= Self::BITS => Self::ONES,
            n => !Self::from_u64(u64::MAX >> (64 - (Self::BITS - n))),
        }
    }
}

macro_rules! impl_word {
    ($t:ty) => {
        impl Word for $t {
            const BITS: u32 = <$t>::BITS;
            const ZERO: Self = 0;
            const ONES: Self = <$t>::MAX;

            #[inline(always)]
            fn popcount(self) -> u32 {
                self.count_ones()
            }

            #[inline(always)]
            fn from_u64(v: u64) -> Self {
                v as $t
            }

            #[inline(always)]
            fn to_u64(self) -> u64 {
                self as u64
            }
        }
    };
}

impl_word!(u32);
impl_word!(u64);

/// Runtime word-width selector for code paths (CLI, benches) that pick the
/// packing unit from a flag.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum WordWidth {
    W32,
    #[default]
    W64,
}

impl WordWidth {
    pub fn bits(self) -> u32 {
        match self {
            WordWidth::W32 => 32,
            WordWidth::W64 => 64,
        }
    }

    pub fn from_bits(bits: u32) -> Option<WordWidth> {
        match bits {
            32 => Some(WordWidth::W32),
            64 => Some(WordWidth::W64),
            _ => None,
        }
    }
}
