use std::fmt;

use crate::error::{Error, Result};

/// A finite prefix q(1), q(2), ..., q(len), packed eight bits per byte with
/// the first bit in the most significant position.
#[derive(Clone, Default, PartialEq, Eq, Hash)]
pub struct BitSequence {
    bytes: Vec<u8>,
    len: u64,
}

impl BitSequence {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn with_capacity(bits: u64) -> Self {
        BitSequence {
            bytes: Vec::with_capacity(bits.div_ceil(8) as usize),
            len: 0,
        }
    }

    pub fn from_bits(bits: &[u8]) -> Self {
        let mut seq = Self::with_capacity(bits.len() as u64);
        for &b in bits {
            seq.push(b);
        }
        seq
    }

    pub fn push(&mut self, bit: u8) {
        assert!(bit <= 1, "bit must be 0 or 1, got {bit}");
        let offset = (self.len % 8) as u32;
        if offset == 0 {
            self.bytes.push(0);
        }
        if bit == 1 {
            *self.bytes.last_mut().expect("byte pushed") |= 0x80 >> offset;
        }
        self.len += 1;
    }

    pub fn len(&self) -> u64 {
        self.len
    }

    pub fn is_empty(&self) -> bool {
        self.len == 0
    }

    /// Bit at 0-based position `i`, i.e. q(i + 1).
    #[inline]
    pub fn get(&self, i: u64) -> u8 {
        assert!(i < self.len, "bit {i} out of range for length {}", self.len);
        (self.bytes[(i / 8) as usize] >> (7 - (i % 8))) & 1
    }

    pub fn iter(&self) -> impl ExactSizeIterator<Item = u8> + '_ {
        (0..self.len as usize).map(move |i| self.get(i as u64))
    }

    pub fn to_vec(&self) -> Vec<u8> {
        self.iter().collect()
    }

    pub fn ones(&self) -> u64 {
        self.bytes.iter().map(|b| u64::from(b.count_ones())).sum()
    }

    /// First `n` bits.
    pub fn truncated(&self, n: u64) -> BitSequence {
        let n = n.min(self.len);
        let mut bytes = self.bytes[..n.div_ceil(8) as usize].to_vec();
        if !n.is_multiple_of(8) {
            if let Some(last) = bytes.last_mut() {
                *last &= 0xFFu8 << (8 - n % 8);
            }
        }
        BitSequence { bytes, len: n }
    }

    /// One `0`/`1` character per bit.
    pub fn to_text(&self) -> String {
        self.iter().map(|b| if b == 1 { '1' } else { '0' }).collect()
    }

    /// Parses `0`/`1` characters; surrounding whitespace and line breaks are ignored.
    pub fn from_text(text: &str) -> Result<Self> {
        let mut seq = BitSequence::new();
        for (i, c) in text.trim().chars().enumerate() {
            match c {
                '0' => seq.push(0),
                '1' => seq.push(1),
                '\n' | '\r' => {}
                other => {
                    return Err(Error::Parse {
                        line: 1,
                        message: format!("character {} is {other:?}, expected 0 or 1", i + 1),
                    })
                }
            }
        }
        Ok(seq)
    }

    /// Packed representation, final byte zero-padded.
    pub fn packed(&self) -> &[u8] {
        &self.bytes
    }

    pub fn from_packed(bytes: &[u8], len: u64) -> Result<Self> {
        if bytes.len() as u64 != len.div_ceil(8) {
            return Err(Error::Parse {
                line: 1,
                message: format!("{} bytes cannot hold exactly {len} bits", bytes.len()),
            });
        }
        let seq = BitSequence {
            bytes: bytes.to_vec(),
            len,
        };
        if seq.truncated(len).bytes != seq.bytes {
            return Err(Error::Parse {
                line: 1,
                message: "padding bits in the final byte must be zero".into(),
            });
        }
        Ok(seq)
    }
}

impl fmt::Debug for BitSequence {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.len <= 64 {
            write!(f, "BitSequence(\"{}\")", self.to_text())
        } else {
            write!(f, "BitSequence(len = {}, ones = {})", self.len, self.ones())
        }
    }
}
