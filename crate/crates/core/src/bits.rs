//! Explicit-length bit strings.
//!
//! Bits are stored most-significant-bit first: bit index `0` is the high bit of
//! byte `0`. The length is tracked separately from the storage, so a 5-bit string
//! is distinct from an 8-bit one. Padding bits past `len` are always zero.

use std::fmt;

use crate::error::{Error, Result};

#[derive(Clone, PartialEq, Eq, Hash, Default)]
pub struct BitString {
    bytes: Vec<u8>,
    len: usize,
}

impl BitString {
    /// All-zero string of `len` bits.
    pub fn zeros(len: usize) -> Self {
        BitString { bytes: vec![0; len.div_ceil(8)], len }
    }

    /// Takes every bit of `bytes`; the length is `8 * bytes.len()`.
    pub fn from_bytes(bytes: &[u8]) -> Self {
        BitString { bytes: bytes.to_vec(), len: bytes.len() * 8 }
    }

    /// Takes the first `len` bits of `bytes`. Bits past `len` in the final byte must be zero.
    pub fn from_bytes_with_len(bytes: Vec<u8>, len: usize) -> Result<Self> {
        if bytes.len() != len.div_ceil(8) {
            return Err(Error::format(format!(
                "{} bytes cannot hold exactly {len} bits",
                bytes.len()
            )));
        }
        let s = BitString { bytes, len };
        if s.bytes.last().is_some_and(|&b| b & !s.tail_mask() != 0) {
            return Err(Error::format("nonzero padding bits"));
        }
        Ok(s)
    }

    pub fn from_bits(bits: &[bool]) -> Self {
        let mut s = Self::zeros(bits.len());
        for (i, &b) in bits.iter().enumerate() {
            s.set(i, b);
        }
        s
    }

    /// Parses a string of `0`/`1` characters; whitespace and `_` are ignored.
    pub fn parse_binary(text: &str) -> Result<Self> {
        let bits = text
            .chars()
            .filter(|c| !c.is_whitespace() && *c != '_')
            .map(|c| match c {
                '0' => Ok(false),
                '1' => Ok(true),
                other => Err(Error::format(format!("invalid binary digit {other:?}"))),
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(Self::from_bits(&bits))
    }

    /// Parses hex into a string of `len` bits, MSB first.
    pub fn from_hex(text: &str, len: usize) -> Result<Self> {
        let text = text.trim();
        if !text.len().is_multiple_of(2) {
            return Err(Error::format("hex string has odd length"));
        }
        let bytes = (0..text.len())
            .step_by(2)
            .map(|i| {
                u8::from_str_radix(&text[i..i + 2], 16)
                    .map_err(|_| Error::format(format!("invalid hex {:?}", &text[i..i + 2])))
            })
            .collect::<Result<Vec<u8>>>()?;
        Self::from_bytes_with_len(bytes, len)
    }

    #[inline]
    pub fn len(&self) -> usize {
        self.len
    }

    #[inline]
    pub fn is_empty(&self) -> bool {
        self.len == 0
    }

    pub fn as_bytes(&self) -> &[u8] {
        &self.bytes
    }

    pub fn into_bytes(self) -> Vec<u8> {
        self.bytes
    }

    #[inline]
    pub fn get(&self, i: usize) -> bool {
        assert!(i < self.len, "bit index {i} out of range for length {}", self.len);
        self.bytes[i / 8] >> (7 - i % 8) & 1 == 1
    }

    #[inline]
    pub fn set(&mut self, i: usize, value: bool) {
        assert!(i < self.len, "bit index {i} out of range for length {}", self.len);
        let mask = 1u8 << (7 - i % 8);
        if value {
            self.bytes[i / 8] |= mask;
        } else {
            self.bytes[i / 8] &= !mask;
        }
    }

    pub fn flip(&mut self, i: usize) {
        let v = self.get(i);
        self.set(i, !v);
    }

    pub fn iter(&self) -> impl Iterator<Item = bool> + '_ {
        (0..self.len).map(move |i| self.get(i))
    }

    pub fn is_zero(&self) -> bool {
        self.bytes.iter().all(|&b| b == 0)
    }

    pub fn count_ones(&self) -> usize {
        self.bytes.iter().map(|b| b.count_ones() as usize).sum()
    }

    /// Bitwise XOR; defined only for equal lengths.
    pub fn xor(&self, other: &BitString) -> Result<BitString> {
        let mut out = self.clone();
        out.xor_assign(other)?;
        Ok(out)
    }

    pub fn xor_assign(&mut self, other: &BitString) -> Result<()> {
        if self.len != other.len {
            return Err(Error::arg(format!(
                "xor of {}-bit and {}-bit strings",
                self.len, other.len
            )));
        }
        for (a, b) in self.bytes.iter_mut().zip(&other.bytes) {
            *a ^= b;
        }
        Ok(())
    }

    /// `self || other`.
    pub fn concat(&self, other: &BitString) -> BitString {
        if self.len.is_multiple_of(8) {
            let mut bytes = self.bytes.clone();
            bytes.extend_from_slice(&other.bytes);
            return BitString { bytes, len: self.len + other.len };
        }
        let mut out = BitString::zeros(self.len + other.len);
        for i in 0..self.len {
            out.set(i, self.get(i));
        }
        for i in 0..other.len {
            out.set(self.len + i, other.get(i));
        }
        out
    }

    /// Copy of bits `start..start + len`.
    pub fn slice(&self, start: usize, len: usize) -> Result<BitString> {
        if start + len > self.len {
            return Err(Error::arg(format!(
                "slice {start}..{} of a {}-bit string",
                start + len,
                self.len
            )));
        }
        if start.is_multiple_of(8) {
            let mut bytes = self.bytes[start / 8..(start + len).div_ceil(8)].to_vec();
            let mut out = BitString { bytes: std::mem::take(&mut bytes), len };
            out.clear_padding();
            return Ok(out);
        }
        let mut out = BitString::zeros(len);
        for i in 0..len {
            out.set(i, self.get(start + i));
        }
        Ok(out)
    }

    /// Constant-pattern equality: examines every byte regardless of where the first
    /// difference occurs.
    pub fn ct_eq(&self, other: &BitString) -> bool {
        if self.len != other.len {
            return false;
        }
        let diff = self
            .bytes
            .iter()
            .zip(&other.bytes)
            .fold(0u8, |acc, (a, b)| acc | (a ^ b));
        std::hint::black_box(diff) == 0
    }

    pub fn to_hex(&self) -> String {
        self.bytes.iter().map(|b| format!("{b:02x}")).collect()
    }

    pub fn to_binary(&self) -> String {
        self.iter().map(|b| if b { '1' } else { '0' }).collect()
    }

    /// Packs into big-endian `u64` words, bit 0 at the top of word 0.
    pub(crate) fn to_words(&self) -> Vec<u64> {
        let mut words = vec![0u64; self.len.div_ceil(64)];
        for (i, &b) in self.bytes.iter().enumerate() {
            words[i / 8] |= (b as u64) << (56 - 8 * (i % 8));
        }
        words
    }

    pub(crate) fn from_words(words: &[u64], len: usize) -> BitString {
        let mut bytes = Vec::with_capacity(len.div_ceil(8));
        for i in 0..len.div_ceil(8) {
            bytes.push((words[i / 8] >> (56 - 8 * (i % 8))) as u8);
        }
        let mut s = BitString { bytes, len };
        s.clear_padding();
        s
    }

    fn tail_mask(&self) -> u8 {
        match self.len % 8 {
            0 => 0xff,
            r => 0xffu8 << (8 - r),
        }
    }

    fn clear_padding(&mut self) {
        let mask = self.tail_mask();
        if let Some(last) = self.bytes.last_mut() {
            *last &= mask;
        }
    }
}

impl fmt::Debug for BitString {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "BitString({} bits, 0x{})", self.len, self.to_hex())
    }
}

impl fmt::Display for BitString {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.to_binary())
    }
}
