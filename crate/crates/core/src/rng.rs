//! Randomness source standing in for a local quantum random number generator.

use rand::rngs::OsRng;
use rand::{RngCore, SeedableRng};
use rand_chacha::ChaCha20Rng;

use crate::bits::BitString;
use crate::error::{Error, Result};

/// Explicitly passed randomness. `Seeded` reproduces identical streams for identical
/// seeds; `Tape` replays a fixed bit sequence and fails once it runs out.
pub enum QdsRng {
    Os,
    Seeded(Box<ChaCha20Rng>),
    Tape { bits: BitString, pos: usize },
}

impl QdsRng {
    pub fn os() -> Self {
        QdsRng::Os
    }

    pub fn seeded(seed: u64) -> Self {
        QdsRng::Seeded(Box::new(ChaCha20Rng::seed_from_u64(seed)))
    }

    pub fn tape(bits: BitString) -> Self {
        QdsRng::Tape { bits, pos: 0 }
    }

    /// Independent child stream, e.g. one per worker in a parallel experiment.
    /// For the OS source the child is also OS-backed.
    pub fn fork(&mut self, stream: u64) -> Result<QdsRng> {
        match self {
            QdsRng::Os => Ok(QdsRng::Os),
            _ => {
                let base = self.next_u64()?;
                Ok(QdsRng::seeded(base ^ stream.wrapping_mul(0x9e37_79b9_7f4a_7c15)))
            }
        }
    }

    /// Draws `n` bits.
    pub fn next_bits(&mut self, n: usize) -> Result<BitString> {
        match self {
            QdsRng::Os => {
                let mut bytes = vec![0u8; n.div_ceil(8)];
                OsRng.fill_bytes(&mut bytes);
                Ok(mask_tail(bytes, n))
            }
            QdsRng::Seeded(rng) => {
                let mut bytes = vec![0u8; n.div_ceil(8)];
                rng.fill_bytes(&mut bytes);
                Ok(mask_tail(bytes, n))
            }
            QdsRng::Tape { bits, pos } => {
                if *pos + n > bits.len() {
                    return Err(Error::RandomnessExhausted(format!(
                        "tape has {} bits left, {n} requested",
                        bits.len() - *pos
                    )));
                }
                let out = bits.slice(*pos, n)?;
                *pos += n;
                Ok(out)
            }
        }
    }

    pub fn next_u64(&mut self) -> Result<u64> {
        match self {
            QdsRng::Os => Ok(OsRng.next_u64()),
            QdsRng::Seeded(rng) => Ok(rng.next_u64()),
            QdsRng::Tape { .. } => {
                let bits = self.next_bits(64)?;
                Ok(u64::from_be_bytes(bits.as_bytes().try_into().expect("8 bytes")))
            }
        }
    }

    /// Uniform integer in `0..bound` by rejection.
    pub fn below(&mut self, bound: u64) -> Result<u64> {
        if bound == 0 {
            return Err(Error::arg("empty range"));
        }
        let zone = u64::MAX - u64::MAX % bound;
        loop {
            let v = self.next_u64()?;
            if v < zone {
                return Ok(v % bound);
            }
        }
    }

    pub fn next_bytes(&mut self, len: usize) -> Result<Vec<u8>> {
        Ok(self.next_bits(8 * len)?.into_bytes())
    }
}

fn mask_tail(mut bytes: Vec<u8>, n: usize) -> BitString {
    if !n.is_multiple_of(8) {
        if let Some(last) = bytes.last_mut() {
            *last &= 0xffu8 << (8 - n % 8);
        }
    }
    BitString::from_bytes_with_len(bytes, n).expect("masked padding")
}
