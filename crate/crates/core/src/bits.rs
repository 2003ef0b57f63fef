//! Packed binary words and q-ary symbol strings.

use std::fmt;
use std::str::FromStr;

use crate::error::{Error, Result};

/// A packed, variable-length binary word.
#[derive(Clone, Default, PartialEq, Eq, Hash)]
pub struct BitString {
    words: Vec<u64>,
    len: usize,
}

impl BitString {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn zeros(len: usize) -> Self {
        Self {
            words: vec![0; len.div_ceil(64)],
            len,
        }
    }

    pub fn with_capacity(bits: usize) -> Self {
        Self {
            words: Vec::with_capacity(bits.div_ceil(64)),
            len: 0,
        }
    }

    pub fn from_bools(bits: &[bool]) -> Self {
        bits.iter().copied().collect()
    }

    /// Big-endian binary representation of `value` in exactly `width` bits.
    pub fn from_uint(value: u64, width: usize) -> Self {
        (0..width).rev().map(|s| s < 64 && (value >> s) & 1 == 1).collect()
    }

    pub fn len(&self) -> usize {
        self.len
    }

    pub fn is_empty(&self) -> bool {
        self.len == 0
    }

    /// Checked read.
    pub fn get(&self, i: usize) -> Result<bool> {
        if i >= self.len {
            return Err(Error::IndexOutOfRange { index: i, len: self.len });
        }
        Ok(self.bit(i))
    }

    /// Unchecked-by-`Result` read; panics outside `[0, len)`.
    #[inline]
    pub fn bit(&self, i: usize) -> bool {
        assert!(i < self.len, "bit index {i} out of range for length {}", self.len);
        (self.words[i >> 6] >> (i & 63)) & 1 == 1
    }

    #[inline]
    pub fn set(&mut self, i: usize, value: bool) {
        assert!(i < self.len, "bit index {i} out of range for length {}", self.len);
        let mask = 1u64 << (i & 63);
        if value {
            self.words[i >> 6] |= mask;
        } else {
            self.words[i >> 6] &= !mask;
        }
    }

    pub fn flip(&mut self, i: usize) {
        let b = self.bit(i);
        self.set(i, !b);
    }

    pub fn push(&mut self, value: bool) {
        if self.len % 64 == 0 {
            self.words.push(0);
        }
        self.len += 1;
        self.set(self.len - 1, value);
    }

    pub fn extend_from(&mut self, other: &BitString) {
        for b in other.iter() {
            self.push(b);
        }
    }

    pub fn iter(&self) -> impl ExactSizeIterator<Item = bool> + '_ {
        (0..self.len).map(move |i| self.bit(i))
    }

    pub fn to_bools(&self) -> Vec<bool> {
        self.iter().collect()
    }

    /// Copy of the bits in `start..end`, clamped to the word.
    pub fn slice(&self, start: usize, end: usize) -> BitString {
        let end = end.min(self.len);
        let start = start.min(end);
        (start..end).map(|i| self.bit(i)).collect()
    }

    pub fn count_ones(&self) -> usize {
        self.words.iter().map(|w| w.count_ones() as usize).sum()
    }

    /// Positionwise XOR; lengths must agree.
    pub fn xor(&self, other: &BitString) -> Result<BitString> {
        if self.len != other.len {
            return Err(Error::LengthMismatch { left: self.len, right: other.len });
        }
        Ok(BitString {
            words: self.words.iter().zip(&other.words).map(|(a, b)| a ^ b).collect(),
            len: self.len,
        })
    }

    /// Interpret `start..start+width` as a big-endian unsigned integer.
    pub fn read_uint(&self, start: usize, width: usize) -> u64 {
        (start..start + width).fold(0u64, |acc, i| (acc << 1) | self.bit(i) as u64)
    }

    /// Pack MSB-first into bytes; the final byte is zero-padded.
    pub fn to_bytes(&self) -> Vec<u8> {
        let mut out = vec![0u8; self.len.div_ceil(8)];
        for i in 0..self.len {
            if self.bit(i) {
                out[i / 8] |= 0x80 >> (i % 8);
            }
        }
        out
    }

    /// Inverse of [`BitString::to_bytes`] for a known bit length.
    pub fn from_bytes(bytes: &[u8], len: usize) -> Result<Self> {
        if bytes.len() != len.div_ceil(8) {
            return Err(Error::Format(format!(
                "{} bytes cannot hold exactly {len} bits",
                bytes.len()
            )));
        }
        Ok((0..len).map(|i| bytes[i / 8] & (0x80 >> (i % 8)) != 0).collect())
    }
}

impl FromIterator<bool> for BitString {
    fn from_iter<I: IntoIterator<Item = bool>>(iter: I) -> Self {
        let iter = iter.into_iter();
        let mut out = BitString::with_capacity(iter.size_hint().0);
        for b in iter {
            out.push(b);
        }
        out
    }
}

impl FromStr for BitString {
    type Err = Error;

    /// Parses a string of `'0'`/`'1'` characters; spaces and underscores are ignored.
    fn from_str(s: &str) -> Result<Self> {
        s.chars()
            .filter(|c| !matches!(c, ' ' | '_'))
            .map(|c| match c {
                '0' => Ok(false),
                '1' => Ok(true),
                other => Err(Error::Format(format!("unexpected character {other:?} in bit string"))),
            })
            .collect()
    }
}

impl fmt::Display for BitString {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for b in self.iter() {
            f.write_str(if b { "1" } else { "0" })?;
        }
        Ok(())
    }
}

impl fmt::Debug for BitString {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.len <= 128 {
            write!(f, "BitString(\"{self}\")")
        } else {
            write!(f, "BitString(len={}, ones={})", self.len, self.count_ones())
        }
    }
}

impl serde::Serialize for BitString {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.serialize_str(&self.to_string())
    }
}

impl<'de> serde::Deserialize<'de> for BitString {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let s = String::deserialize(d)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}

/// A string over the alphabet `[0, q)`.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct SymbolString {
    symbols: Vec<u32>,
    q: u32,
}

impl SymbolString {
    pub fn new(symbols: Vec<u32>, q: u32) -> Result<Self> {
        if q < 2 {
            return Err(Error::InvalidParams(format!("alphabet size {q} < 2")));
        }
        if let Some(&bad) = symbols.iter().find(|&&s| s >= q) {
            return Err(Error::SymbolOutOfRange { symbol: bad, q });
        }
        Ok(Self { symbols, q })
    }

    /// Convenience constructor for text fixtures: maps bytes through `byte - base`.
    pub fn from_text(text: &str, base: u8, q: u32) -> Result<Self> {
        Self::new(text.bytes().map(|b| b.wrapping_sub(base) as u32).collect(), q)
    }

    pub fn q(&self) -> u32 {
        self.q
    }

    pub fn len(&self) -> usize {
        self.symbols.len()
    }

    pub fn is_empty(&self) -> bool {
        self.symbols.is_empty()
    }

    pub fn symbols(&self) -> &[u32] {
        &self.symbols
    }

    /// `ceil(log2 q)`, the number of bits per symbol in binary expansion.
    pub fn bits_per_symbol(&self) -> usize {
        bits_per_symbol(self.q)
    }

    /// Big-endian binary expansion, `bits_per_symbol` bits per symbol.
    pub fn binary_expand(&self) -> BitString {
        let width = self.bits_per_symbol();
        let mut out = BitString::with_capacity(width * self.len());
        for &s in &self.symbols {
            for shift in (0..width).rev() {
                out.push((s >> shift) & 1 == 1);
            }
        }
        out
    }

    /// Inverse of [`SymbolString::binary_expand`]; trailing bits beyond whole symbols are dropped.
    pub fn from_binary(bits: &BitString, q: u32) -> Result<Self> {
        let width = bits_per_symbol(q);
        let symbols = (0..bits.len() / width)
            .map(|t| bits.read_uint(t * width, width) as u32)
            .collect();
        Self::new(symbols, q)
    }
}

impl From<&BitString> for SymbolString {
    fn from(bits: &BitString) -> Self {
        SymbolString {
            symbols: bits.iter().map(u32::from).collect(),
            q: 2,
        }
    }
}

pub fn bits_per_symbol(q: u32) -> usize {
    debug_assert!(q >= 2);
    (u32::BITS - (q - 1).leading_zeros()) as usize
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parse_display_roundtrip() {
        let b: BitString = "0110_1".parse().unwrap();
        assert_eq!(b.len(), 5);
        assert_eq!(b.to_string(), "01101");
        assert!("012".parse::<BitString>().is_err());
    }

    #[test]
    fn out_of_range_reads_rejected() {
        let b = BitString::zeros(3);
        assert!(b.get(2).is_ok());
        assert!(matches!(b.get(3), Err(Error::IndexOutOfRange { index: 3, len: 3 })));
    }

    #[test]
    fn byte_packing_is_msb_first() {
        let b: BitString = "1000000011".parse().unwrap();
        assert_eq!(b.to_bytes(), vec![0x80, 0xC0]);
        assert_eq!(BitString::from_bytes(&[0x80, 0xC0], 10).unwrap(), b);
    }

    #[test]
    fn binary_expansion_widths() {
        assert_eq!(bits_per_symbol(2), 1);
        assert_eq!(bits_per_symbol(4), 2);
        assert_eq!(bits_per_symbol(5), 3);
        assert_eq!(bits_per_symbol(26), 5);
        let s = SymbolString::new(vec![3, 0, 2], 4).unwrap();
        assert_eq!(s.binary_expand().to_string(), "110010");
        assert_eq!(SymbolString::from_binary(&s.binary_expand(), 4).unwrap(), s);
    }

    #[test]
    fn symbols_validated() {
        assert!(matches!(
            SymbolString::new(vec![0, 5], 4),
            Err(Error::SymbolOutOfRange { symbol: 5, q: 4 })
        ));
    }

    #[test]
    fn equality_is_over_len_only() {
        let mut a = BitString::zeros(70);
        a.set(69, true);
        let b: BitString = (0..70).map(|i| i == 69).collect();
        assert_eq!(a, b);
        assert_eq!(BitString::from_uint(5, 4).to_string(), "0101");
    }
}
