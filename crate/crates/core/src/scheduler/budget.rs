// SPDX-License-Identifier: Apache-2.0

use std::fmt;
use std::str::FromStr;

use crate::error::{Error, Result};

/// Bytes the modeled device region may hold for one batch: the resident
/// query panel, one chunk of reference rows and that chunk's score rows.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
pub struct MemoryBudget {
    bytes_total: u64,
}

impl MemoryBudget {
    pub fn new(bytes_total: u64) -> Result<Self> {
        if bytes_total == 0 {
            return Err(Error::InvalidBudget("0".into()));
        }
        Ok(MemoryBudget { bytes_total })
    }

    pub fn unlimited() -> Self {
        MemoryBudget { bytes_total: u64::MAX }
    }

    pub fn bytes(self) -> u64 {
        self.bytes_total
    }

    pub fn is_unlimited(self) -> bool {
        self.bytes_total == u64::MAX
    }
}

/// Accepts plain byte counts or `k`/`M`/`G` suffixes (binary multiples,
/// case-insensitive, optional trailing `B` or `iB`), and `unlimited`.
impl FromStr for MemoryBudget {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let t = s.trim();
        if t.eq_ignore_ascii_case("unlimited") {
            return Ok(MemoryBudget::unlimited());
        }
        let lower = t.to_ascii_lowercase();
        let stripped = lower
            .strip_suffix("ib")
            .or_else(|| lower.strip_suffix('b'))
            .unwrap_or(&lower);
        let (digits, shift) = match stripped.chars().last() {
            Some('k') => (&stripped[..stripped.len() - 1], 10),
            Some('m') => (&stripped[..stripped.len() - 1], 20),
            Some('g') => (&stripped[..stripped.len() - 1], 30),
            _ => (stripped, 0),
        };
        let bad = || Error::InvalidBudget(s.to_string());
        let n: u64 = digits.trim().parse().map_err(|_| bad())?;
        let bytes = n.checked_mul(1u64 << shift).ok_or_else(bad)?;
        MemoryBudget::new(bytes).map_err(|_| bad())
    }
}

impl fmt::Display for MemoryBudget {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.is_unlimited() {
            write!(f, "unlimited")
        } else {
            write!(f, "{}", self.bytes_total)
        }
    }
}
