//! Shared fixtures for the benchmarks.

use qds_core::gf2::sample_irreducible;
use qds_core::otuh::HashParams;
use qds_core::{BitString, QdsRng};

/// Hash parameters of length `n` drawn from a fixed seed.
pub fn hash_params(n: usize, seed: u64) -> HashParams {
    let mut rng = QdsRng::seeded(seed);
    let (p, _) = sample_irreducible(n, &mut rng).expect("n > 1");
    let init = rng.next_bits(n).expect("bits");
    HashParams::new(p, init).expect("valid parameters")
}

/// A pseudo-random message of `bits` bits.
pub fn message(bits: usize, seed: u64) -> BitString {
    QdsRng::seeded(seed).next_bits(bits).expect("bits")
}
