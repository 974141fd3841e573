//! Toolkit for one-time universal₂ hashing quantum digital signatures.
//!
//! The crate is organised bottom-up:
//!
//! - [`bits`]: explicit-length bit strings, the carrier for keys, digests and documents.
//! - [`gf2`]: polynomial arithmetic over GF(2), irreducibility testing and sampling.
//! - [`otuh`]: LFSR-based Toeplitz hashing, collision bounds and the one-time-pad MAC.
//! - [`keymgr`]: correlated key pre-distribution, key pools with a consumption ledger.
//! - [`netharness`]: in-memory three-party bus with public and authenticated channels.
//! - [`protocol`]: signing and verification state machines, companion tasks and attacks.
//! - [`ratesim`]: asymptotic key-rate models for QKD and QSS protocols.
//! - [`finitekey`]: decoy-state finite-key analysis and the single-bit signature comparison.
//!
//! All randomness flows through [`rng::QdsRng`], which can be seeded for reproducible runs.

pub mod bits;
pub mod error;
pub mod finitekey;
pub mod gf2;
pub mod keymgr;
pub mod netharness;
pub mod otuh;
pub mod protocol;
pub mod ratesim;
pub mod rng;

pub use bits::BitString;
pub use error::{Error, Result};
pub use gf2::Gf2Poly;
pub use keymgr::{KeyBundle, KeyPool, Party, Purpose};
pub use otuh::{AuthParams, CollisionBound, HashParams, OneTimeKey};
pub use protocol::{Document, Signature, Verdict};
pub use rng::QdsRng;

/// Default hash length in bits; one signature consumes `3 * DEFAULT_HASH_BITS` shared key bits.
pub const DEFAULT_HASH_BITS: usize = 128;
