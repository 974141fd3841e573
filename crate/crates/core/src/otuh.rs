//! LFSR-based Toeplitz hashing.
//!
//! A hash instance is fixed by an irreducible polynomial `p` of degree `n` and an
//! `n`-bit initial vector `s`. The Toeplitz matrix `H = (s, s_1, ..., s_{m-1})` is
//! generated column by column: each step shifts the column down one place and puts
//! the inner product `p · s` on top. `H · M` is computed without materializing `H`,
//! so memory stays `O(n)` for any document length `m`.
//!
//! Signatures use [`HashParams`], which refuses a second evaluation. Message
//! authentication between honest parties may keep `(p, s)` fixed across messages,
//! which is what [`AuthParams`] models; there only the pad key is one-time.

use std::fmt;
use std::sync::atomic::{AtomicBool, Ordering};

use crate::bits::BitString;
use crate::error::{Error, Result};
use crate::gf2::{is_irreducible, Gf2Poly};

/// One LFSR shift: the new top element is `p · col` (mod 2) and every other element
/// moves down one place, dropping the last.
pub fn lfsr_step(col: &BitString, p: &Gf2Poly) -> Result<BitString> {
    let taps = p.to_coeff_bits()?;
    if taps.len() != col.len() {
        return Err(Error::arg(format!(
            "column has {} bits, polynomial has degree {}",
            col.len(),
            taps.len()
        )));
    }
    let feedback = (0..col.len()).filter(|&i| taps.get(i) & col.get(i)).count() % 2 == 1;
    let mut next = BitString::zeros(col.len());
    next.set(0, feedback);
    for i in 1..col.len() {
        next.set(i, col.get(i - 1));
    }
    Ok(next)
}

/// Streaming evaluator of `H · M`.
#[derive(Clone)]
pub struct ToeplitzHasher {
    n: usize,
    taps: Vec<u64>,
    column: Vec<u64>,
    acc: Vec<u64>,
    last_mask: u64,
    absorbed: u64,
}

impl ToeplitzHasher {
    pub fn new(p: &Gf2Poly, init: &BitString) -> Result<Self> {
        let taps = p.to_coeff_bits()?;
        let n = taps.len();
        if init.len() != n {
            return Err(Error::arg(format!(
                "initial vector has {} bits, polynomial has degree {n}",
                init.len()
            )));
        }
        let last_mask = match n % 64 {
            0 => u64::MAX,
            r => u64::MAX << (64 - r),
        };
        Ok(ToeplitzHasher {
            n,
            taps: taps.to_words(),
            column: init.to_words(),
            acc: vec![0; n.div_ceil(64)],
            last_mask,
            absorbed: 0,
        })
    }

    #[inline]
    fn step(&mut self) {
        let parity = self
            .taps
            .iter()
            .zip(&self.column)
            .fold(0u32, |acc, (t, c)| acc ^ (t & c).count_ones())
            & 1;
        let mut carry = parity as u64;
        for w in self.column.iter_mut() {
            let out = *w & 1;
            *w = (*w >> 1) | (carry << 63);
            carry = out;
        }
        if let Some(last) = self.column.last_mut() {
            *last &= self.last_mask;
        }
    }

    #[inline]
    fn absorb(&mut self, bit: bool) {
        if bit {
            for (a, c) in self.acc.iter_mut().zip(&self.column) {
                *a ^= c;
            }
        }
        self.step();
        self.absorbed += 1;
    }

    /// Absorbs every bit of `bytes`, MSB first.
    pub fn update(&mut self, bytes: &[u8]) {
        for &b in bytes {
            for k in (0..8).rev() {
                self.absorb(b >> k & 1 == 1);
            }
        }
    }

    pub fn update_bits(&mut self, bits: &BitString) {
        let full = bits.len() / 8;
        self.update(&bits.as_bytes()[..full]);
        for i in 8 * full..bits.len() {
            self.absorb(bits.get(i));
        }
    }

    /// Number of document bits absorbed so far.
    pub fn absorbed(&self) -> u64 {
        self.absorbed
    }

    pub fn finalize(self) -> BitString {
        BitString::from_words(&self.acc, self.n)
    }
}

/// `H · doc` for arbitrary `(p, s)`, without one-time bookkeeping or an irreducibility
/// check. Verifiers use this on decrypted polynomials that may be malformed.
pub fn toeplitz_hash_raw(p: &Gf2Poly, init: &BitString, doc: &BitString) -> Result<BitString> {
    if doc.is_empty() {
        return Err(Error::arg("document must have at least one bit"));
    }
    let mut h = ToeplitzHasher::new(p, init)?;
    h.update_bits(doc);
    Ok(h.finalize())
}

/// One-time hash instance `(p, s)`.
pub struct HashParams {
    poly: Gf2Poly,
    init: BitString,
    used: AtomicBool,
}

impl HashParams {
    /// `poly` must be irreducible with degree equal to the length of `init`.
    pub fn new(poly: Gf2Poly, init: BitString) -> Result<Self> {
        if poly.degree() != Some(init.len()) || init.is_empty() {
            return Err(Error::arg(format!(
                "degree {:?} does not match {}-bit initial vector",
                poly.degree(),
                init.len()
            )));
        }
        if !is_irreducible(&poly) {
            return Err(Error::arg(format!("{poly} is reducible")));
        }
        Ok(HashParams { poly, init, used: AtomicBool::new(false) })
    }

    pub fn n(&self) -> usize {
        self.init.len()
    }

    pub fn poly(&self) -> &Gf2Poly {
        &self.poly
    }

    pub fn init(&self) -> &BitString {
        &self.init
    }

    pub fn is_used(&self) -> bool {
        self.used.load(Ordering::Acquire)
    }

    /// `s = 0` maps every document to zero. It is a legal draw, so callers surface it
    /// rather than reject it.
    pub fn has_zero_init(&self) -> bool {
        self.init.is_zero()
    }

    /// Unused instance with the same `(p, s)`.
    pub fn fresh_copy(&self) -> HashParams {
        HashParams { poly: self.poly.clone(), init: self.init.clone(), used: AtomicBool::new(false) }
    }

    /// Hashes `doc` and retires the instance.
    pub fn toeplitz_hash(&self, doc: &BitString) -> Result<BitString> {
        if doc.is_empty() {
            return Err(Error::arg("document must have at least one bit"));
        }
        self.claim()?;
        toeplitz_hash_raw(&self.poly, &self.init, doc)
    }

    /// Streaming form: returns a hasher and retires the instance.
    pub fn hasher(&self) -> Result<ToeplitzHasher> {
        self.claim()?;
        ToeplitzHasher::new(&self.poly, &self.init)
    }

    fn claim(&self) -> Result<()> {
        self.used
            .compare_exchange(false, true, Ordering::AcqRel, Ordering::Acquire)
            .map(|_| ())
            .map_err(|_| Error::OneTimeViolation("hash parameters already used".into()))
    }
}

impl fmt::Debug for HashParams {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("HashParams")
            .field("n", &self.n())
            .field("used", &self.is_used())
            .finish_non_exhaustive()
    }
}

/// Materialized `n x m` Toeplitz matrix, stored by columns. Test oracle for the
/// streaming hasher.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ToeplitzMatrix {
    pub columns: Vec<BitString>,
}

/// Largest `n * m` accepted by [`naive_toeplitz_matrix`].
pub const MAX_MATRIX_ENTRIES: usize = 1 << 16;

/// Builds `H = (s, s_1, ..., s_{m-1})` column by column with [`lfsr_step`]. Does not
/// retire `params`.
pub fn naive_toeplitz_matrix(params: &HashParams, m: usize) -> Result<ToeplitzMatrix> {
    if m == 0 || params.n() * m > MAX_MATRIX_ENTRIES {
        return Err(Error::arg(format!(
            "matrix size {}x{m} outside 1..={MAX_MATRIX_ENTRIES} entries",
            params.n()
        )));
    }
    let mut columns = Vec::with_capacity(m);
    let mut col = params.init.clone();
    for _ in 0..m {
        let next = lfsr_step(&col, &params.poly)?;
        columns.push(std::mem::replace(&mut col, next));
    }
    Ok(ToeplitzMatrix { columns })
}

impl ToeplitzMatrix {
    pub fn rows(&self) -> usize {
        self.columns.first().map_or(0, BitString::len)
    }

    pub fn get(&self, row: usize, col: usize) -> bool {
        self.columns[col].get(row)
    }

    /// Row-by-row product `H · v`.
    pub fn mul_vec(&self, v: &BitString) -> Result<BitString> {
        if v.len() != self.columns.len() {
            return Err(Error::arg("vector length does not match column count"));
        }
        let mut out = BitString::zeros(self.rows());
        for r in 0..self.rows() {
            let bit = (0..v.len()).filter(|&c| self.get(r, c) & v.get(c)).count() % 2 == 1;
            out.set(r, bit);
        }
        Ok(out)
    }
}

/// Collision / forgery bound `m / 2^(n-1)`, held exactly as a dyadic rational.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct CollisionBound {
    pub m: u128,
    pub n: u32,
}

pub fn collision_bound(m: u128, n: u32) -> Result<CollisionBound> {
    if m == 0 || n < 2 {
        return Err(Error::arg("collision bound needs m >= 1 and n >= 2"));
    }
    Ok(CollisionBound { m, n })
}

impl CollisionBound {
    pub fn numerator(&self) -> u128 {
        self.m
    }

    pub fn denominator_log2(&self) -> u32 {
        self.n - 1
    }

    pub fn probability(&self) -> f64 {
        self.m as f64 * 2f64.powi(-(self.n as i32 - 1))
    }

    /// `max{1/(2^n - 1), m/2^(n-1)}`. The second term always dominates for `m >= 1`.
    pub fn epsilon_aut(&self) -> f64 {
        let bijective_case = 1.0 / (2f64.powi(self.n as i32) - 1.0);
        bijective_case.max(self.probability())
    }

    /// Exact comparison `m / 2^(n-1) <= num / 2^k`.
    pub fn at_most(&self, num: u128, k: u32) -> bool {
        // m * 2^k <= num * 2^(n-1), compared via shifts where they fit.
        let (lhs_shift, rhs_shift) = if k >= self.n - 1 { (k - (self.n - 1), 0) } else { (0, self.n - 1 - k) };
        let lhs = self.m.checked_shl(lhs_shift).filter(|v| v >> lhs_shift == self.m);
        let rhs = num.checked_shl(rhs_shift).filter(|v| v >> rhs_shift == num);
        match (lhs, rhs) {
            (Some(l), Some(r)) => l <= r,
            (None, Some(_)) => false,
            (Some(_), None) => true,
            (None, None) => self.probability() <= num as f64 * 2f64.powi(-(k as i32)),
        }
    }
}

impl fmt::Display for CollisionBound {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}/2^{} ≈ {:.3e}", self.m, self.n - 1, self.probability())
    }
}

/// Key material that may be used exactly once. Not `Clone`: using it moves it.
pub struct OneTimeKey(BitString);

impl OneTimeKey {
    pub fn new(bits: BitString) -> Self {
        OneTimeKey(bits)
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub(crate) fn into_bits(self) -> BitString {
        self.0
    }
}

impl fmt::Debug for OneTimeKey {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "OneTimeKey({} bits)", self.0.len())
    }
}

/// Fixed authentication hash `(p, s)` shared by two honest endpoints.
#[derive(Clone, PartialEq, Eq)]
pub struct AuthParams {
    poly: Gf2Poly,
    init: BitString,
}

impl AuthParams {
    pub fn new(poly: Gf2Poly, init: BitString) -> Result<Self> {
        // Same validation as the one-time form.
        let checked = HashParams::new(poly, init)?;
        Ok(AuthParams { poly: checked.poly, init: checked.init })
    }

    pub fn n(&self) -> usize {
        self.init.len()
    }

    pub fn poly(&self) -> &Gf2Poly {
        &self.poly
    }

    pub fn init(&self) -> &BitString {
        &self.init
    }

    fn hash(&self, msg: &BitString) -> Result<BitString> {
        toeplitz_hash_raw(&self.poly, &self.init, msg)
    }
}

impl fmt::Debug for AuthParams {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "AuthParams(n = {})", self.n())
    }
}

/// `tag = h_{p,s}(msg) XOR key`.
pub fn mac_tag(msg: &BitString, params: &AuthParams, key: OneTimeKey) -> Result<BitString> {
    if key.len() != params.n() {
        return Err(Error::arg(format!("MAC key has {} bits, expected {}", key.len(), params.n())));
    }
    params.hash(msg)?.xor(&key.into_bits())
}

/// Recomputes the tag and compares over its full length.
pub fn mac_verify(msg: &BitString, tag: &BitString, params: &AuthParams, key: OneTimeKey) -> Result<bool> {
    if tag.len() != params.n() {
        return Err(Error::arg(format!("tag has {} bits, expected {}", tag.len(), params.n())));
    }
    let expected = mac_tag(msg, params, key)?;
    Ok(expected.ct_eq(tag))
}
