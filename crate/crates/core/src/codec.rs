// SPDX-License-Identifier: Apache-2.0

//! Genotype and hex text to packed words, and back.
//!
//! A diploid genotype contributes two bits, one per allele slot, set when the
//! slot carries the minor allele: `MM -> 00`, `Mm -> 01`, `mM -> 10`,
//! `mm -> 11`. Profiles built elsewhere (for example one bit per locus) can be
//! packed directly from [`ProfileBits`]; nothing downstream assumes two bits
//! per locus.
//!
//! Packing is MSB-first: profile bit `i` is stored in word `i / B` at bit
//! `B - 1 - i % B`. Bits past the profile length are padding and must be zero.

use std::fmt::Write as _;
use std::str::FromStr;

use crate::error::{Error, Result};
use crate::word::Word;
use crate::MAX_BIT_LENGTH;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Genotype {
    /// `MM`
    MajorMajor,
    /// `Mm`
    MajorMinor,
    /// `mM`
    MinorMajor,
    /// `mm`
    MinorMinor,
}

impl Genotype {
    /// Minor-allele indicator bits, first slot first.
    pub fn slot_bits(self) -> [bool; 2] {
        match self {
            Genotype::MajorMajor => [false, false],
            Genotype::MajorMinor => [false, true],
            Genotype::MinorMajor => [true, false],
            Genotype::MinorMinor => [true, true],
        }
    }

    pub fn code(self) -> &'static str {
        match self {
            Genotype::MajorMajor => "MM",
            Genotype::MajorMinor => "Mm",
            Genotype::MinorMajor => "mM",
            Genotype::MinorMinor => "mm",
        }
    }
}

impl FromStr for Genotype {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "MM" => Ok(Genotype::MajorMajor),
            "Mm" => Ok(Genotype::MajorMinor),
            "mM" => Ok(Genotype::MinorMajor),
            "mm" => Ok(Genotype::MinorMinor),
            other => Err(Error::UnknownGenotype {
                position: 0,
                code: other.to_string(),
            }),
        }
    }
}

/// Parses a run of two-character genotype codes such as `"MmmMMM"` or
/// `"Mm mM MM"`. Whitespace between codes is ignored.
///
/// Errors report the zero-based index of the offending code.
pub fn parse_genotypes(text: &str) -> Result<Vec<Genotype>> {
    let chars: Vec<char> = text.chars().filter(|c| !c.is_whitespace()).collect();
    chars
        .chunks(2)
        .enumerate()
        .map(|(position, pair)| {
            let code: String = pair.iter().collect();
            code.parse::<Genotype>()
                .map_err(|_| Error::UnknownGenotype { position, code })
        })
        .collect()
}

/// One profile as unpacked bits.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ProfileBits {
    pub id: String,
    pub bits: Vec<bool>,
}

impl ProfileBits {
    pub fn new(id: impl Into<String>, bits: Vec<bool>) -> Result<Self> {
        check_bit_length(bits.len())?;
        Ok(ProfileBits { id: id.into(), bits })
    }

    /// Builds a profile from a string of `0`/`1` characters. Whitespace and
    /// `_` are ignored so that grouped literals like `"0000 0110"` work.
    pub fn from_bit_str(id: impl Into<String>, s: &str) -> Result<Self> {
        let bits = s
            .chars()
            .filter(|c| !c.is_whitespace() && *c != '_')
            .map(|c| match c {
                '0' => Ok(false),
                '1' => Ok(true),
                other => Err(Error::MalformedLine(format!("bad bit character {other:?}"))),
            })
            .collect::<Result<Vec<_>>>()?;
        ProfileBits::new(id, bits)
    }

    pub fn len(&self) -> usize {
        self.bits.len()
    }

    pub fn is_empty(&self) -> bool {
        self.bits.is_empty()
    }

    pub fn to_bit_string(&self) -> String {
        self.bits.iter().map(|&b| if b { '1' } else { '0' }).collect()
    }
}

/// One profile as packed words.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PackedProfile<W> {
    pub id: String,
    pub words: Vec<W>,
}

pub(crate) fn check_bit_length(len: usize) -> Result<()> {
    if len == 0 {
        Err(Error::EmptyProfile)
    } else if len > MAX_BIT_LENGTH {
        Err(Error::BitLengthTooLarge(len))
    } else {
        Ok(())
    }
}

/// Words needed to hold `bit_length` bits.
pub fn words_for<W: Word>(bit_length: usize) -> usize {
    bit_length.div_ceil(W::BITS as usize)
}

/// Hex digits used for a profile of `bit_length` bits in panel files: the bit
/// string rounded up to whole 32-bit groups, independent of the in-memory
/// word width.
pub fn file_hex_digits(bit_length: usize) -> usize {
    bit_length.div_ceil(32) * 8
}

/// True when every bit at position `>= bit_length` is zero.
pub fn padding_is_zero<W: Word>(words: &[W], bit_length: usize) -> bool {
    let full = bit_length / W::BITS as usize;
    let rem = (bit_length % W::BITS as usize) as u32;
    let mut tail = words.iter().skip(full);
    if rem != 0 {
        match tail.next() {
            Some(&w) if w & !W::leading_mask(rem) != W::ZERO => return false,
            _ => {}
        }
    }
    tail.all(|&w| w == W::ZERO)
}

/// Encodes genotypes into minor-allele indicator bits, two per genotype.
pub fn encode_genotype(id: impl Into<String>, genotypes: &[Genotype]) -> Result<ProfileBits> {
    let bits = genotypes.iter().flat_map(|g| g.slot_bits()).collect();
    ProfileBits::new(id, bits)
}

pub fn pack<W: Word>(profile: &ProfileBits) -> PackedProfile<W> {
    let b = W::BITS as usize;
    let mut words = vec![W::ZERO; words_for::<W>(profile.len())];
    for (i, _) in profile.bits.iter().enumerate().filter(|(_, &bit)| bit) {
        words[i / b] = words[i / b] | W::msb_bit((i % b) as u32);
    }
    PackedProfile {
        id: profile.id.clone(),
        words,
    }
}

/// Inverse of [`pack`] for the first `bit_length` bits.
pub fn unpack<W: Word>(profile: &PackedProfile<W>, bit_length: usize) -> Result<ProfileBits> {
    check_bit_length(bit_length)?;
    let b = W::BITS as usize;
    if bit_length > profile.words.len() * b {
        return Err(Error::LengthMismatch {
            expected: words_for::<W>(bit_length),
            found: profile.words.len(),
        });
    }
    if !padding_is_zero(&profile.words, bit_length) {
        return Err(Error::CorruptProfile { id: profile.id.clone() });
    }
    let bits = (0..bit_length)
        .map(|i| profile.words[i / b] & W::msb_bit((i % b) as u32) != W::ZERO)
        .collect();
    Ok(ProfileBits {
        id: profile.id.clone(),
        bits,
    })
}

/// Ids end up unquoted in CSV output and tab-separated panel files.
pub fn validate_id(id: &str) -> Result<()> {
    let bad = id.is_empty() || id.starts_with('#') || id.chars().any(|c| matches!(c, '\t' | '\n' | '\r' | ',' | '"'));
    if bad {
        Err(Error::InvalidId(id.to_string()))
    } else {
        Ok(())
    }
}

fn split_line(line: &str) -> Result<(&str, &str)> {
    let line = line.trim_end_matches(['\n', '\r']);
    let (id, hex) = line
        .split_once('\t')
        .ok_or_else(|| Error::MalformedLine("expected `<id><TAB><hex>`".into()))?;
    validate_id(id)?;
    Ok((id, hex))
}

fn hex_nibbles(hex: &str) -> Result<Vec<u8>> {
    hex.chars()
        .map(|c| {
            c.to_digit(16)
                .map(|d| d as u8)
                .ok_or_else(|| Error::MalformedHex(format!("invalid hex digit {c:?}")))
        })
        .collect()
}

/// Packs a nibble sequence MSB-first into `n_words` words. The caller ensures
/// `nibbles.len() * 4 <= n_words * BITS`.
fn pack_nibbles<W: Word>(nibbles: &[u8], n_words: usize) -> Vec<W> {
    let per_word = W::hex_digits();
    let mut words = vec![W::ZERO; n_words];
    for (n, &v) in nibbles.iter().enumerate() {
        let shift = W::BITS as usize - 4 * (n % per_word + 1);
        words[n / per_word] = words[n / per_word] | W::from_u64((v as u64) << shift);
    }
    words
}

/// Parses `<id><TAB><hex>` where the hex field is a whole number of words.
/// The leftmost digit is the most significant nibble of word 0.
pub fn parse_hex_line<W: Word>(line: &str) -> Result<PackedProfile<W>> {
    let (id, hex) = split_line(line)?;
    if hex.is_empty() || hex.len() % W::hex_digits() != 0 {
        return Err(Error::MalformedHex(format!(
            "{} digits is not a positive multiple of {}",
            hex.len(),
            W::hex_digits()
        )));
    }
    let nibbles = hex_nibbles(hex)?;
    Ok(PackedProfile {
        id: id.to_string(),
        words: pack_nibbles(&nibbles, nibbles.len() / W::hex_digits()),
    })
}

/// Parses a panel-file line for a panel of `bit_length` bits. The hex field
/// must have exactly [`file_hex_digits`] digits and all bits past
/// `bit_length` must be zero.
pub fn parse_panel_line<W: Word>(line: &str, bit_length: usize) -> Result<PackedProfile<W>> {
    let (id, hex) = split_line(line)?;
    let expected = file_hex_digits(bit_length);
    if hex.len() != expected {
        return Err(Error::LengthMismatch {
            expected,
            found: hex.len(),
        });
    }
    let nibbles = hex_nibbles(hex)?;
    // The file field may be wider than the profile (32-bit alignment); any
    // bits it carries beyond `bit_length` are padding.
    let mut field_bits = pack_nibbles::<W>(&nibbles, (expected * 4).div_ceil(W::BITS as usize));
    if !padding_is_zero(&field_bits, bit_length) {
        return Err(Error::CorruptProfile { id: id.to_string() });
    }
    field_bits.truncate(words_for::<W>(bit_length));
    Ok(PackedProfile {
        id: id.to_string(),
        words: field_bits,
    })
}

/// Uppercase hex of every word, word 0 first.
pub fn format_hex<W: Word>(words: &[W]) -> String {
    let mut out = String::with_capacity(words.len() * W::hex_digits());
    for &w in words {
        let _ = write!(out, "{:0width$X}", w.to_u64(), width = W::hex_digits());
    }
    out
}

/// Uppercase hex of the first `bit_length` bits in panel-file form.
pub fn format_hex_bits<W: Word>(words: &[W], bit_length: usize) -> String {
    let mut full = format_hex(words);
    full.truncate(file_hex_digits(bit_length));
    full
}

#[cfg(test)]
mod tests {
    use super::*;

    // Per-character reference encoder: each allele character maps on its own.
    fn reference_encode(codes: &[&str]) -> String {
        codes
            .iter()
            .flat_map(|c| c.chars())
            .map(|c| if c == 'm' { '1' } else { '0' })
            .collect()
    }

    #[test]
    fn genotype_single_codes() {
        let bits = encode_genotype("a", &parse_genotypes("MM").unwrap()).unwrap();
        assert_eq!(bits.to_bit_string(), "00");
        let bits = encode_genotype("a", &parse_genotypes("mm").unwrap()).unwrap();
        assert_eq!(bits.to_bit_string(), "11");
    }

    #[test]
    fn genotype_sequence_matches_reference_encoder() {
        let g = parse_genotypes("Mm mM MM").unwrap();
        let bits = encode_genotype("a", &g).unwrap();
        assert_eq!(bits.to_bit_string(), "011000");
        assert_eq!(bits.to_bit_string(), reference_encode(&["Mm", "mM", "MM"]));
    }

    #[test]
    fn unknown_genotype_reports_position() {
        match parse_genotypes("MMMmXM").unwrap_err() {
            Error::UnknownGenotype { position, code } => {
                assert_eq!(position, 2);
                assert_eq!(code, "XM");
            }
            other => panic!("unexpected {other:?}"),
        }
        // Odd trailing character is an incomplete code.
        assert!(matches!(
            parse_genotypes("MMm").unwrap_err(),
            Error::UnknownGenotype { position: 1, .. }
        ));
    }

    #[test]
    fn empty_genotypes_rejected() {
        assert!(matches!(encode_genotype("a", &[]), Err(Error::EmptyProfile)));
    }

    #[test]
    fn pack_example_word() {
        let bits = ProfileBits::from_bit_str("S1", "0000 0110 0000 0000 0001 0100 0100 0000").unwrap();
        let p = pack::<u32>(&bits);
        assert_eq!(p.words, vec![100_668_480]);
        assert_eq!(p.words, vec![0x0600_1440]);
        assert_eq!(unpack(&p, 32).unwrap(), bits);
    }

    #[test]
    fn pack_all_zero() {
        let bits = ProfileBits::new("z", vec![false; 32]).unwrap();
        assert_eq!(pack::<u32>(&bits).words, vec![0]);
        assert_eq!(
            unpack(
                &PackedProfile {
                    id: "z".into(),
                    words: vec![0u32]
                },
                32
            )
            .unwrap(),
            bits
        );
    }

    #[test]
    fn pack_forty_ones_pads_second_word() {
        let bits = ProfileBits::new("x", vec![true; 40]).unwrap();
        let p = pack::<u32>(&bits);
        assert_eq!(p.words, vec![0xFFFF_FFFF, 0xFF00_0000]);
        let p64 = pack::<u64>(&bits);
        assert_eq!(p64.words, vec![0xFFFF_FFFF_FF00_0000]);
    }

    #[test]
    fn unpack_rejects_nonzero_padding() {
        let p = PackedProfile {
            id: "c".into(),
            words: vec![0xFF00_0001u32],
        };
        assert!(matches!(unpack(&p, 8), Err(Error::CorruptProfile { .. })));
        assert!(unpack(&p, 32).is_ok());
    }

    #[test]
    fn hex_line_examples() {
        let p = parse_hex_line::<u32>("S1\t06001440").unwrap();
        assert_eq!(p.id, "S1");
        assert_eq!(p.words, vec![100_668_480]);

        let z = parse_hex_line::<u32>("Z\t00000000").unwrap();
        assert_eq!(z.words, vec![0]);

        let a = parse_hex_line::<u32>("A\tFFFFFFFF00000001").unwrap();
        assert_eq!(a.words, vec![4_294_967_295, 1]);
        assert_eq!(format_hex(&a.words), "FFFFFFFF00000001");

        let a64 = parse_hex_line::<u64>("A\tffffffff00000001").unwrap();
        assert_eq!(a64.words, vec![0xFFFF_FFFF_0000_0001]);
    }

    #[test]
    fn hex_line_errors() {
        assert!(matches!(
            parse_hex_line::<u32>("S1\t0600144"),
            Err(Error::MalformedHex(_))
        ));
        assert!(matches!(
            parse_hex_line::<u32>("S1\t0600144G"),
            Err(Error::MalformedHex(_))
        ));
        assert!(matches!(
            parse_hex_line::<u32>("S1 06001440"),
            Err(Error::MalformedLine(_))
        ));
        assert!(matches!(
            parse_hex_line::<u32>("a,b\t06001440"),
            Err(Error::InvalidId(_))
        ));
    }

    #[test]
    fn panel_line_is_width_agnostic() {
        let p32 = parse_panel_line::<u32>("S1\t06001440", 32).unwrap();
        let p64 = parse_panel_line::<u64>("S1\t06001440", 32).unwrap();
        assert_eq!(p32.words, vec![0x0600_1440]);
        assert_eq!(p64.words, vec![0x0600_1440_0000_0000]);
        assert_eq!(format_hex_bits(&p64.words, 32), "06001440");

        // 8-bit profile: bits beyond L inside the 32-bit field must be zero.
        assert!(parse_panel_line::<u32>("S\t69000000", 8).is_ok());
        assert!(matches!(
            parse_panel_line::<u32>("S\t69000001", 8),
            Err(Error::CorruptProfile { .. })
        ));
        assert!(matches!(
            parse_panel_line::<u32>("S\t6900", 8),
            Err(Error::LengthMismatch { expected: 8, found: 4 })
        ));
    }

    #[test]
    fn padding_check() {
        assert!(padding_is_zero(&[0xFFu64 << 56], 8));
        assert!(!padding_is_zero(&[0x1FFu64 << 55], 8));
        assert!(padding_is_zero(&[u32::MAX, 0], 32));
        assert!(!padding_is_zero(&[u32::MAX, 1], 32));
    }
}
