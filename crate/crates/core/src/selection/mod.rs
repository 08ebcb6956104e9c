//! Selection functions: maps from finite bit strings to care / don't care.
//!
//! A [`SelectionSpec`] names one function from the built-in catalog. Every
//! spec is a pure function of the prefix it is shown; [`evaluate`] works
//! against any [`PrefixView`], so the same rule can be applied to a plain
//! slice of bits or to the constant-size [`PrefixState`] that the streaming
//! construction keeps.

mod config;
mod family;

use std::fmt;
use std::str::FromStr;

use serde::Serialize;

use crate::error::{Error, Result};

pub use config::{parse_family, render_family};
pub use family::{builtin_family, Family, SuffixBinary, TailGenerator, BUILTIN_FAMILIES};

/// Outcome of applying a selection function to a prefix.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize)]
pub enum Decision {
    Care,
    DontCare,
}

impl Decision {
    #[inline]
    pub fn is_care(self) -> bool {
        matches!(self, Decision::Care)
    }

    #[inline]
    fn from_bool(care: bool) -> Self {
        if care {
            Decision::Care
        } else {
            Decision::DontCare
        }
    }
}

/// Longest suffix pattern a [`BitPattern`] can hold.
pub const MAX_PATTERN_LEN: usize = 128;

/// A nonempty bit string of at most [`MAX_PATTERN_LEN`] bits, stored inline.
///
/// The last bit of the pattern sits in the least significant position of
/// `bits`, which lines up with the rolling window in [`PrefixState`].
#[derive(Clone, Copy, PartialEq, Eq, Hash)]
pub struct BitPattern {
    bits: u128,
    len: u8,
}

impl BitPattern {
    pub fn new(bits: &[u8]) -> Result<Self> {
        if bits.is_empty() {
            return Err(invalid("suffix pattern must be nonempty"));
        }
        if bits.len() > MAX_PATTERN_LEN {
            return Err(invalid(format!(
                "suffix pattern longer than {MAX_PATTERN_LEN} bits"
            )));
        }
        let mut packed = 0u128;
        for &b in bits {
            if b > 1 {
                return Err(invalid(format!("pattern bit {b} is not 0 or 1")));
            }
            packed = (packed << 1) | u128::from(b);
        }
        Ok(BitPattern {
            bits: packed,
            len: bits.len() as u8,
        })
    }

    /// Binary digits of `m`, most significant first.
    pub fn binary_of(m: u64) -> Self {
        assert!(m >= 1, "binary_of needs m >= 1");
        let len = 64 - m.leading_zeros();
        BitPattern {
            bits: u128::from(m),
            len: len as u8,
        }
    }

    pub fn len(&self) -> usize {
        usize::from(self.len)
    }

    pub fn is_empty(&self) -> bool {
        self.len == 0
    }

    fn mask(&self) -> u128 {
        if self.len() == MAX_PATTERN_LEN {
            u128::MAX
        } else {
            (1u128 << self.len) - 1
        }
    }

    /// Bits of the pattern in order, first bit first.
    pub fn to_bits(&self) -> Vec<u8> {
        (0..self.len())
            .rev()
            .map(|shift| ((self.bits >> shift) & 1) as u8)
            .collect()
    }
}

impl fmt::Debug for BitPattern {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "BitPattern(\"{self}\")")
    }
}

impl fmt::Display for BitPattern {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for b in self.to_bits() {
            f.write_str(if b == 1 { "1" } else { "0" })?;
        }
        Ok(())
    }
}

impl FromStr for BitPattern {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let bits = s
            .chars()
            .map(|c| match c {
                '0' => Ok(0),
                '1' => Ok(1),
                other => Err(invalid(format!("pattern character {other:?} is not 0 or 1"))),
            })
            .collect::<Result<Vec<u8>>>()?;
        BitPattern::new(&bits)
    }
}

fn invalid(reason: impl Into<String>) -> Error {
    Error::InvalidSpec {
        index: 0,
        reason: reason.into(),
    }
}

/// One entry of the selection-function catalog.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum SelectionSpec {
    /// Cares about every prefix, including the empty one.
    Always,
    /// Cares iff the prefix is nonempty and ends with the given bit.
    LastBit(u8),
    /// Cares iff a 1 appears somewhere in the prefix.
    ContainsOne,
    /// Cares iff the prefix ends with the pattern.
    Suffix(BitPattern),
    /// Cares iff the prefix length is congruent to `residue` mod `modulus`.
    Periodic { modulus: u64, residue: u64 },
    /// Cares iff the prefix ends with at least this many consecutive 0s.
    ZerosRun(u64),
    /// Cares iff the prefix holds strictly more 1s than 0s.
    MajorityOnes,
}

impl SelectionSpec {
    pub fn validate(&self) -> Result<()> {
        match *self {
            SelectionSpec::LastBit(b) if b > 1 => {
                Err(invalid(format!("last_bit argument {b} is not 0 or 1")))
            }
            SelectionSpec::Suffix(p) if p.is_empty() => Err(invalid("suffix pattern must be nonempty")),
            SelectionSpec::Periodic { modulus, residue } if modulus == 0 || residue >= modulus => {
                Err(invalid(format!(
                    "periodic({modulus},{residue}) needs modulus >= 1 and residue < modulus"
                )))
            }
            SelectionSpec::ZerosRun(0) => Err(invalid("zeros_run needs k >= 1")),
            _ => Ok(()),
        }
    }

    /// Catalog name used in family files.
    pub fn name(&self) -> &'static str {
        match self {
            SelectionSpec::Always => "always",
            SelectionSpec::LastBit(_) => "last_bit",
            SelectionSpec::ContainsOne => "contains_one",
            SelectionSpec::Suffix(_) => "suffix",
            SelectionSpec::Periodic { .. } => "periodic",
            SelectionSpec::ZerosRun(_) => "zeros_run",
            SelectionSpec::MajorityOnes => "majority_ones",
        }
    }
}

impl fmt::Display for SelectionSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            SelectionSpec::Always | SelectionSpec::ContainsOne | SelectionSpec::MajorityOnes => {
                f.write_str(self.name())
            }
            SelectionSpec::LastBit(b) => write!(f, "last_bit({b})"),
            SelectionSpec::Suffix(p) => write!(f, "suffix({p})"),
            SelectionSpec::Periodic { modulus, residue } => write!(f, "periodic({modulus},{residue})"),
            SelectionSpec::ZerosRun(k) => write!(f, "zeros_run({k})"),
        }
    }
}

impl FromStr for SelectionSpec {
    type Err = Error;

    /// Parses the family-file syntax, e.g. `last_bit(1)` or `periodic(3,0)`.
    fn from_str(s: &str) -> Result<Self> {
        let s = s.trim();
        let (name, args) = match s.find('(') {
            Some(open) => {
                let close = s
                    .strip_suffix(')')
                    .ok_or_else(|| invalid(format!("missing ')' in {s:?}")))?;
                (s[..open].trim(), Some(&close[open + 1..]))
            }
            None => (s, None),
        };
        let args: Vec<&str> = match args {
            Some(a) if !a.trim().is_empty() => a.split(',').map(str::trim).collect(),
            _ => Vec::new(),
        };
        let int = |raw: &str| -> Result<u64> {
            raw.parse::<u64>()
                .map_err(|_| invalid(format!("expected a nonnegative integer, got {raw:?}")))
        };
        let arity = |n: usize| -> Result<()> {
            if args.len() == n {
                Ok(())
            } else {
                Err(invalid(format!("{name} takes {n} argument(s), got {}", args.len())))
            }
        };
        let spec = match name {
            "always" => {
                arity(0)?;
                SelectionSpec::Always
            }
            "contains_one" => {
                arity(0)?;
                SelectionSpec::ContainsOne
            }
            "majority_ones" => {
                arity(0)?;
                SelectionSpec::MajorityOnes
            }
            "last_bit" => {
                arity(1)?;
                match args[0] {
                    "0" => SelectionSpec::LastBit(0),
                    "1" => SelectionSpec::LastBit(1),
                    other => return Err(invalid(format!("last_bit argument {other:?} is not 0 or 1"))),
                }
            }
            "suffix" => {
                arity(1)?;
                SelectionSpec::Suffix(args[0].parse()?)
            }
            "periodic" => {
                arity(2)?;
                SelectionSpec::Periodic {
                    modulus: int(args[0])?,
                    residue: int(args[1])?,
                }
            }
            "zeros_run" => {
                arity(1)?;
                SelectionSpec::ZerosRun(int(args[0])?)
            }
            other => return Err(invalid(format!("unknown selection function {other:?}"))),
        };
        spec.validate()?;
        Ok(spec)
    }
}

/// Catalog listing: name, parameters, and semantics of every kind.
pub const CATALOG: &[(&str, &str, &str)] = &[
    ("always", "", "cares about every prefix, including the empty one"),
    ("last_bit", "b in {0,1}", "cares iff the prefix is nonempty and its last bit is b"),
    ("contains_one", "", "cares iff 1 appears somewhere in the prefix (the prefix is not a block of 0s)"),
    ("suffix", "p: nonempty bit string", "cares iff the prefix ends with p"),
    ("periodic", "k >= 1, 0 <= r < k", "cares iff the prefix length is r mod k"),
    ("zeros_run", "k >= 1", "cares iff the prefix ends with at least k consecutive 0s"),
    ("majority_ones", "", "cares iff the prefix has strictly more 1s than 0s"),
];

/// Read access to a prefix, enough to decide every catalog kind.
pub trait PrefixView {
    fn bit_len(&self) -> u64;
    fn ones(&self) -> u64;
    fn last_bit(&self) -> Option<u8>;
    fn trailing_zeros(&self) -> u64;
    fn ends_with(&self, pattern: &BitPattern) -> bool;
}

impl PrefixView for [u8] {
    fn bit_len(&self) -> u64 {
        self.len() as u64
    }

    fn ones(&self) -> u64 {
        self.iter().filter(|&&b| b == 1).count() as u64
    }

    fn last_bit(&self) -> Option<u8> {
        self.last().copied()
    }

    fn trailing_zeros(&self) -> u64 {
        self.iter().rev().take_while(|&&b| b == 0).count() as u64
    }

    fn ends_with(&self, pattern: &BitPattern) -> bool {
        <[u8]>::ends_with(self, &pattern.to_bits())
    }
}

/// Constant-size summary of a growing prefix: length, number of ones,
/// trailing zero run, and the last 128 bits.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct PrefixState {
    len: u64,
    ones: u64,
    trailing_zeros: u64,
    window: u128,
}

impl PrefixState {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn push(&mut self, bit: u8) {
        debug_assert!(bit <= 1);
        self.len += 1;
        self.ones += u64::from(bit);
        self.trailing_zeros = if bit == 0 { self.trailing_zeros + 1 } else { 0 };
        self.window = (self.window << 1) | u128::from(bit);
    }
}

impl PrefixView for PrefixState {
    fn bit_len(&self) -> u64 {
        self.len
    }

    fn ones(&self) -> u64 {
        self.ones
    }

    fn last_bit(&self) -> Option<u8> {
        (self.len > 0).then_some((self.window & 1) as u8)
    }

    fn trailing_zeros(&self) -> u64 {
        self.trailing_zeros
    }

    fn ends_with(&self, pattern: &BitPattern) -> bool {
        pattern.len() as u64 <= self.len && (self.window & pattern.mask()) == pattern.bits
    }
}

/// Applies `spec` to `prefix`.
pub fn evaluate<P: PrefixView + ?Sized>(spec: &SelectionSpec, prefix: &P) -> Decision {
    let care = match *spec {
        SelectionSpec::Always => true,
        SelectionSpec::LastBit(b) => prefix.last_bit() == Some(b),
        SelectionSpec::ContainsOne => prefix.ones() > 0,
        SelectionSpec::Suffix(ref p) => prefix.ends_with(p),
        SelectionSpec::Periodic { modulus, residue } => {
            prefix.bit_len().checked_rem(modulus) == Some(residue)
        }
        SelectionSpec::ZerosRun(k) => prefix.trailing_zeros() >= k,
        SelectionSpec::MajorityOnes => {
            let ones = prefix.ones();
            ones > prefix.bit_len() - ones
        }
    };
    Decision::from_bool(care)
}
