//! Polynomial arithmetic over GF(2) and irreducibility testing.
//!
//! Polynomials are dense little-endian limb vectors: bit `i` of the vector is the
//! coefficient of `x^i`. The serialized form of a monic degree-`n` polynomial
//! `x^n + a_{n-1}x^{n-1} + ... + a_1 x + a_0` is the `n`-bit string
//! `(a_{n-1}, ..., a_1, a_0)`, with bit 1 holding `a_{n-1}` and the leading
//! coefficient left implicit. Signatures embed this layout, so it is frozen.

use std::fmt;

use crate::bits::BitString;
use crate::error::{Error, Result};
use crate::rng::QdsRng;

#[derive(Clone, PartialEq, Eq, Hash, Default)]
pub struct Gf2Poly {
    limbs: Vec<u64>,
}

impl Gf2Poly {
    pub fn zero() -> Self {
        Gf2Poly { limbs: Vec::new() }
    }

    pub fn one() -> Self {
        Gf2Poly { limbs: vec![1] }
    }

    pub fn x() -> Self {
        Gf2Poly { limbs: vec![2] }
    }

    pub fn monomial(k: usize) -> Self {
        let mut limbs = vec![0u64; k / 64 + 1];
        limbs[k / 64] = 1 << (k % 64);
        Gf2Poly { limbs }
    }

    /// Polynomial whose coefficient of `x^i` is bit `i` of `v`.
    pub fn from_u64(v: u64) -> Self {
        Self::from_limbs(vec![v])
    }

    pub fn from_limbs(limbs: Vec<u64>) -> Self {
        let mut p = Gf2Poly { limbs };
        p.normalize();
        p
    }

    /// Sum of `x^e` over the given exponents (repeated exponents cancel).
    pub fn from_exponents(exps: &[usize]) -> Self {
        let mut p = Gf2Poly::zero();
        for &e in exps {
            p.toggle(e);
        }
        p
    }

    /// Monic polynomial of degree `bits.len()` from its coefficient string
    /// `(a_{n-1}, ..., a_0)`.
    pub fn from_coeff_bits(bits: &BitString) -> Self {
        let n = bits.len();
        let mut p = Gf2Poly::monomial(n);
        for (idx, bit) in bits.iter().enumerate() {
            if bit {
                p.toggle(n - 1 - idx);
            }
        }
        p
    }

    /// The `n`-bit coefficient string `(a_{n-1}, ..., a_0)` of this degree-`n` polynomial.
    pub fn to_coeff_bits(&self) -> Result<BitString> {
        let n = self
            .degree()
            .filter(|&d| d >= 1)
            .ok_or_else(|| Error::arg("coefficient string needs degree >= 1"))?;
        let mut bits = BitString::zeros(n);
        for i in 0..n {
            if self.coeff(i) {
                bits.set(n - 1 - i, true);
            }
        }
        Ok(bits)
    }

    /// Big-endian hex of the coefficient string, leading 1 omitted.
    pub fn to_hex(&self) -> Result<String> {
        Ok(self.to_coeff_bits()?.to_hex())
    }

    pub fn from_hex(degree: usize, hex: &str) -> Result<Self> {
        Ok(Self::from_coeff_bits(&BitString::from_hex(hex, degree)?))
    }

    pub fn degree(&self) -> Option<usize> {
        let top = *self.limbs.last()?;
        Some(64 * (self.limbs.len() - 1) + 63 - top.leading_zeros() as usize)
    }

    pub fn is_zero(&self) -> bool {
        self.limbs.is_empty()
    }

    pub fn is_one(&self) -> bool {
        self.limbs == [1]
    }

    pub fn coeff(&self, i: usize) -> bool {
        self.limbs.get(i / 64).is_some_and(|l| l >> (i % 64) & 1 == 1)
    }

    pub fn limbs(&self) -> &[u64] {
        &self.limbs
    }

    fn toggle(&mut self, i: usize) {
        if self.limbs.len() <= i / 64 {
            self.limbs.resize(i / 64 + 1, 0);
        }
        self.limbs[i / 64] ^= 1 << (i % 64);
        self.normalize();
    }

    fn normalize(&mut self) {
        while self.limbs.last() == Some(&0) {
            self.limbs.pop();
        }
    }

    pub fn add(&self, other: &Gf2Poly) -> Gf2Poly {
        let (long, short) = if self.limbs.len() >= other.limbs.len() {
            (self, other)
        } else {
            (other, self)
        };
        let mut limbs = long.limbs.clone();
        for (a, b) in limbs.iter_mut().zip(&short.limbs) {
            *a ^= b;
        }
        Gf2Poly::from_limbs(limbs)
    }

    pub fn mul(&self, other: &Gf2Poly) -> Gf2Poly {
        if self.is_zero() || other.is_zero() {
            return Gf2Poly::zero();
        }
        let mut out = vec![0u64; self.limbs.len() + other.limbs.len()];
        for (i, &a) in self.limbs.iter().enumerate() {
            for (j, &b) in other.limbs.iter().enumerate() {
                let (lo, hi) = clmul64(a, b);
                out[i + j] ^= lo;
                out[i + j + 1] ^= hi;
            }
        }
        Gf2Poly::from_limbs(out)
    }

    pub fn square(&self) -> Gf2Poly {
        let mut out = vec![0u64; 2 * self.limbs.len()];
        square_into(&self.limbs, &mut out);
        Gf2Poly::from_limbs(out)
    }

    /// Quotient and remainder of division by a nonzero `divisor`.
    pub fn div_rem(&self, divisor: &Gf2Poly) -> Result<(Gf2Poly, Gf2Poly)> {
        let d = divisor
            .degree()
            .ok_or_else(|| Error::arg("division by the zero polynomial"))?;
        let mut rem = self.limbs.clone();
        let mut quot = vec![0u64; self.limbs.len()];
        let top = match self.degree() {
            Some(t) if t >= d => t,
            _ => return Ok((Gf2Poly::zero(), self.clone())),
        };
        for i in (d..=top).rev() {
            if rem[i / 64] >> (i % 64) & 1 == 1 {
                xor_shifted(&mut rem, &divisor.limbs, i - d);
                quot[(i - d) / 64] |= 1 << ((i - d) % 64);
            }
        }
        Ok((Gf2Poly::from_limbs(quot), Gf2Poly::from_limbs(rem)))
    }

    pub fn rem(&self, divisor: &Gf2Poly) -> Result<Gf2Poly> {
        Ok(self.div_rem(divisor)?.1)
    }

    /// Evaluates at `x = 1`.
    fn eval_one(&self) -> bool {
        self.limbs.iter().map(|l| l.count_ones()).sum::<u32>() % 2 == 1
    }
}

impl fmt::Display for Gf2Poly {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let Some(deg) = self.degree() else {
            return f.write_str("0");
        };
        let terms: Vec<String> = (0..=deg)
            .rev()
            .filter(|&i| self.coeff(i))
            .map(|i| match i {
                0 => "1".to_string(),
                1 => "x".to_string(),
                _ => format!("x^{i}"),
            })
            .collect();
        f.write_str(&terms.join(" + "))
    }
}

impl fmt::Debug for Gf2Poly {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "Gf2Poly({self})")
    }
}

/// Carry-less 64x64 -> 128-bit product, returned as (low, high).
#[inline]
fn clmul64(a: u64, b: u64) -> (u64, u64) {
    let (mut lo, mut hi) = (0u64, 0u64);
    let mut b = b;
    while b != 0 {
        let i = b.trailing_zeros();
        lo ^= a << i;
        if i > 0 {
            hi ^= a >> (64 - i);
        }
        b &= b - 1;
    }
    (lo, hi)
}

/// Spreads the 32 bits of `v` to the even bit positions of a `u64`.
#[inline]
fn spread32(v: u32) -> u64 {
    let mut x = v as u64;
    x = (x | (x << 16)) & 0x0000_ffff_0000_ffff;
    x = (x | (x << 8)) & 0x00ff_00ff_00ff_00ff;
    x = (x | (x << 4)) & 0x0f0f_0f0f_0f0f_0f0f;
    x = (x | (x << 2)) & 0x3333_3333_3333_3333;
    (x | (x << 1)) & 0x5555_5555_5555_5555
}

fn square_into(src: &[u64], out: &mut [u64]) {
    for (i, &l) in src.iter().enumerate() {
        out[2 * i] = spread32(l as u32);
        out[2 * i + 1] = spread32((l >> 32) as u32);
    }
}

/// `buf ^= p << shift`.
#[inline]
fn xor_shifted(buf: &mut [u64], p: &[u64], shift: usize) {
    let (wo, bo) = (shift / 64, shift % 64);
    for (j, &w) in p.iter().enumerate() {
        buf[j + wo] ^= w << bo;
        if bo > 0 && j + wo + 1 < buf.len() {
            buf[j + wo + 1] ^= w >> (64 - bo);
        }
    }
}

/// Reusable modular-arithmetic workspace for a fixed modulus.
struct ModCtx<'a> {
    p: &'a [u64],
    n: usize,
    scratch: Vec<u64>,
}

impl<'a> ModCtx<'a> {
    fn new(p: &'a Gf2Poly) -> Self {
        let n = p.degree().expect("nonzero modulus");
        ModCtx { p: &p.limbs, n, scratch: vec![0; 2 * p.limbs.len() + 1] }
    }

    fn reduce(&mut self, top_bit: usize) {
        for i in (self.n..=top_bit).rev() {
            if self.scratch[i / 64] >> (i % 64) & 1 == 1 {
                xor_shifted(&mut self.scratch, self.p, i - self.n);
            }
        }
    }

    /// `r <- r^2 mod p` for a residue stored in `p.limbs.len()` limbs.
    fn square_in_place(&mut self, r: &mut [u64]) {
        self.scratch.iter_mut().for_each(|w| *w = 0);
        square_into(r, &mut self.scratch[..2 * r.len()]);
        if self.n > 0 {
            self.reduce(2 * (64 * r.len()) - 1);
        }
        r.copy_from_slice(&self.scratch[..r.len()]);
    }
}

fn residue_limbs(a: &Gf2Poly, len: usize) -> Vec<u64> {
    let mut v = a.limbs.clone();
    v.resize(len, 0);
    v
}

fn require_modulus(p: &Gf2Poly) -> Result<usize> {
    match p.degree() {
        Some(d) if d >= 1 => Ok(d),
        _ => Err(Error::arg("modulus must have degree >= 1")),
    }
}

/// `a * b mod p` for residues `a`, `b` of degree below `deg p`.
pub fn poly_mul_mod(a: &Gf2Poly, b: &Gf2Poly, p: &Gf2Poly) -> Result<Gf2Poly> {
    let n = require_modulus(p)?;
    for (name, v) in [("a", a), ("b", b)] {
        if v.degree().is_some_and(|d| d >= n) {
            return Err(Error::arg(format!("{name} has degree >= deg p = {n}")));
        }
    }
    a.mul(b).rem(p)
}

/// Monic greatest common divisor. Over GF(2) every nonzero polynomial is monic.
pub fn poly_gcd(f: &Gf2Poly, g: &Gf2Poly) -> Result<Gf2Poly> {
    if f.is_zero() && g.is_zero() {
        return Err(Error::arg("gcd(0, 0) is undefined"));
    }
    let (mut a, mut b) = (f.clone(), g.clone());
    while !b.is_zero() {
        let r = a.rem(&b)?;
        a = b;
        b = r;
    }
    Ok(a)
}

/// `x^(2^k) mod p` by `k` successive modular squarings.
pub fn frobenius_power(k: u64, p: &Gf2Poly) -> Result<Gf2Poly> {
    require_modulus(p)?;
    let len = p.limbs.len();
    let mut r = residue_limbs(&Gf2Poly::x().rem(p)?, len);
    let mut ctx = ModCtx::new(p);
    for _ in 0..k {
        ctx.square_in_place(&mut r);
    }
    Ok(Gf2Poly::from_limbs(r))
}

/// Distinct prime factors by trial division.
pub fn prime_factors(mut n: usize) -> Vec<usize> {
    let mut out = Vec::new();
    let mut d = 2;
    while d * d <= n {
        if n.is_multiple_of(d) {
            out.push(d);
            while n.is_multiple_of(d) {
                n /= d;
            }
        }
        d += 1;
    }
    if n > 1 {
        out.push(n);
    }
    out
}

/// Rabin's test: `p` of degree `n` is irreducible iff `x^(2^n) = x mod p` and
/// `gcd(x^(2^(n/d)) - x, p) = 1` for every prime `d | n`.
pub fn is_irreducible(p: &Gf2Poly) -> bool {
    let n = match p.degree() {
        Some(n) if n >= 1 => n,
        _ => return false,
    };
    if n == 1 {
        return true;
    }
    // Cheap filters for the linear factors x and x + 1.
    if !p.coeff(0) || !p.eval_one() {
        return false;
    }

    let len = p.limbs.len();
    let x = residue_limbs(&Gf2Poly::x(), len);
    let mut checkpoints: Vec<usize> = prime_factors(n).into_iter().map(|d| n / d).collect();
    checkpoints.sort_unstable();

    let mut ctx = ModCtx::new(p);
    let mut r = x.clone();
    let mut next = checkpoints.iter().peekable();
    for step in 1..=n {
        ctx.square_in_place(&mut r);
        while next.peek() == Some(&&step) {
            next.next();
            let diff: Vec<u64> = r.iter().zip(&x).map(|(a, b)| a ^ b).collect();
            let g = poly_gcd(&Gf2Poly::from_limbs(diff), p).expect("p is nonzero");
            if !g.is_one() {
                return false;
            }
        }
    }
    r == x
}

/// Draws candidates `(a_{n-1}, ..., a_1, 1)` from `rng` until one is irreducible.
/// Returns the polynomial and the number of candidates tested.
pub fn sample_irreducible(n: usize, rng: &mut QdsRng) -> Result<(Gf2Poly, u64)> {
    if n < 2 {
        return Err(Error::arg("irreducible sampling needs degree >= 2"));
    }
    let mut trials = 0;
    loop {
        let high = rng.next_bits(n - 1)?;
        let coeffs = high.concat(&BitString::from_bits(&[true]));
        let p = Gf2Poly::from_coeff_bits(&coeffs);
        trials += 1;
        if is_irreducible(&p) {
            return Ok((p, trials));
        }
    }
}

/// Largest degree accepted by [`enumerate_irreducibles`].
pub const MAX_ENUMERATION_DEGREE: usize = 20;

/// All monic irreducible polynomials of degree `n`, found by sieving out every
/// product of lower-degree monic polynomials.
pub fn enumerate_irreducibles(n: usize) -> Result<Vec<Gf2Poly>> {
    if n == 0 || n > MAX_ENUMERATION_DEGREE {
        return Err(Error::arg(format!(
            "exhaustive enumeration supports 1 <= n <= {MAX_ENUMERATION_DEGREE}"
        )));
    }
    let mut reducible = vec![false; 1 << n];
    for k in 1..=n / 2 {
        for a_low in 0u64..1 << k {
            let a = (1u64 << k) | a_low;
            for b_low in 0u64..1 << (n - k) {
                let b = (1u64 << (n - k)) | b_low;
                let (prod, _) = clmul64(a, b);
                reducible[(prod & ((1u64 << n) - 1)) as usize] = true;
            }
        }
    }
    Ok(reducible
        .iter()
        .enumerate()
        .filter(|(_, &r)| !r)
        .map(|(low, _)| Gf2Poly::from_u64((1u64 << n) | low as u64))
        .collect())
}

/// Exact number of monic irreducible polynomials of degree `n <= 16`.
pub fn count_irreducibles(n: usize) -> Result<usize> {
    if n > 16 {
        return Err(Error::arg("count_irreducibles supports n <= 16"));
    }
    Ok(enumerate_irreducibles(n)?.len())
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn p(exps: &[usize]) -> Gf2Poly {
        Gf2Poly::from_exponents(exps)
    }

    // Independent oracle: schoolbook arithmetic on coefficient vectors.
    fn naive_mul(a: &[bool], b: &[bool]) -> Vec<bool> {
        if a.is_empty() || b.is_empty() {
            return vec![];
        }
        let mut out = vec![false; a.len() + b.len() - 1];
        for (i, &x) in a.iter().enumerate() {
            for (j, &y) in b.iter().enumerate() {
                out[i + j] ^= x & y;
            }
        }
        out
    }

    fn naive_rem(a: &[bool], m: &[bool]) -> Vec<bool> {
        let mut r = a.to_vec();
        let dm = m.iter().rposition(|&b| b).unwrap();
        while let Some(dr) = r.iter().rposition(|&b| b) {
            if dr < dm {
                break;
            }
            for (i, &c) in m.iter().enumerate().take(dm + 1) {
                r[dr - dm + i] ^= c;
            }
        }
        r.truncate(dm);
        r
    }

    fn coeffs(q: &Gf2Poly) -> Vec<bool> {
        match q.degree() {
            None => vec![],
            Some(d) => (0..=d).map(|i| q.coeff(i)).collect(),
        }
    }

    fn from_coeffs(c: &[bool]) -> Gf2Poly {
        let exps: Vec<usize> = c.iter().enumerate().filter(|(_, &b)| b).map(|(i, _)| i).collect();
        p(&exps)
    }

    fn brute_force_irreducible(q: u64, n: usize) -> bool {
        // Trial division by every polynomial of degree 1..=n/2.
        for d in 1..=n / 2 {
            for low in 0u64..1 << d {
                let div = from_coeffs(&(0..=d).map(|i| ((1u64 << d | low) >> i) & 1 == 1).collect::<Vec<_>>());
                let r = naive_rem(&(0..=n).map(|i| (q >> i) & 1 == 1).collect::<Vec<_>>(), &coeffs(&div));
                if r.iter().all(|&b| !b) {
                    return false;
                }
            }
        }
        true
    }

    #[test]
    fn mul_mod_examples() {
        let m = p(&[2, 1, 0]);
        assert_eq!(poly_mul_mod(&Gf2Poly::x(), &Gf2Poly::x(), &m).unwrap(), p(&[1, 0]));
        let q = p(&[1]);
        assert_eq!(poly_mul_mod(&Gf2Poly::one(), &q, &m).unwrap(), q);
        assert!(poly_mul_mod(&Gf2Poly::zero(), &q, &m).unwrap().is_zero());
        assert!(poly_mul_mod(&p(&[2]), &q, &m).is_err());
    }

    #[test]
    fn gcd_examples() {
        assert_eq!(poly_gcd(&p(&[2, 0]), &p(&[1, 0])).unwrap(), p(&[1, 0]));
        let f = p(&[3, 1, 0]);
        assert_eq!(poly_gcd(&f, &Gf2Poly::zero()).unwrap(), f);
        assert!(poly_gcd(&f, &p(&[2, 1, 0])).unwrap().is_one());
        assert!(poly_gcd(&Gf2Poly::zero(), &Gf2Poly::zero()).is_err());
    }

    #[test]
    fn frobenius_examples() {
        assert_eq!(frobenius_power(0, &p(&[2, 1, 0])).unwrap(), Gf2Poly::x());
        assert_eq!(frobenius_power(0, &p(&[5, 2, 0])).unwrap(), Gf2Poly::x());
        assert_eq!(frobenius_power(1, &p(&[2, 1, 0])).unwrap(), p(&[1, 0]));
        assert_eq!(frobenius_power(3, &p(&[3, 1, 0])).unwrap(), Gf2Poly::x());
    }

    #[test]
    fn irreducibility_examples() {
        assert!(!is_irreducible(&p(&[2, 0])));
        assert!(is_irreducible(&p(&[2, 1, 0])));
        assert!(is_irreducible(&p(&[1])));
        assert!(is_irreducible(&p(&[1, 0])));
        assert!(!is_irreducible(&Gf2Poly::one()));
        assert!(is_irreducible(&p(&[128, 29, 27, 2, 0])));
        assert!(!is_irreducible(&p(&[128, 29, 25, 1, 0])));
        assert!(!is_irreducible(&p(&[128, 50, 27, 2, 0])));
    }

    #[test]
    fn rabin_agrees_with_trial_division_up_to_degree_12() {
        for n in 1..=12usize {
            for low in 0u64..1 << n {
                let q = (1u64 << n) | low;
                assert_eq!(
                    is_irreducible(&Gf2Poly::from_u64(q)),
                    brute_force_irreducible(q, n),
                    "degree {n}, poly {q:#b}"
                );
            }
        }
    }

    #[test]
    fn irreducible_counts() {
        assert_eq!(count_irreducibles(2).unwrap(), 1);
        assert_eq!(count_irreducibles(3).unwrap(), 2);
        assert_eq!(count_irreducibles(8).unwrap(), 30);
        // Necklace formula values.
        assert_eq!(count_irreducibles(12).unwrap(), 335);
        assert_eq!(count_irreducibles(16).unwrap(), 4080);
        for n in 2..=16 {
            let c = count_irreducibles(n).unwrap() as f64;
            let lower = 2f64.powi(n as i32 - 1) / n as f64;
            let upper = 2f64.powi(n as i32) / n as f64;
            assert!(lower <= c && c <= upper, "n={n}: {c}");
        }
        assert!(count_irreducibles(17).is_err());
    }

    #[test]
    fn degree_two_sampling_is_forced() {
        let mut rng = QdsRng::seeded(3);
        for _ in 0..50 {
            let (q, _) = sample_irreducible(2, &mut rng).unwrap();
            assert_eq!(q, p(&[2, 1, 0]));
        }
        assert!(sample_irreducible(1, &mut rng).is_err());
    }

    #[test]
    fn degree_eight_samples_are_enumerated_irreducibles() {
        let all = enumerate_irreducibles(8).unwrap();
        let mut rng = QdsRng::seeded(11);
        for _ in 0..200 {
            let (q, trials) = sample_irreducible(8, &mut rng).unwrap();
            assert!(trials >= 1);
            assert!(all.contains(&q));
        }
    }

    #[test]
    fn tape_exhaustion_propagates() {
        // x^3 + 1 candidates only: (a2, a1) = (0, 0) is reducible forever.
        let mut rng = QdsRng::tape(BitString::zeros(6));
        assert!(matches!(sample_irreducible(3, &mut rng), Err(Error::RandomnessExhausted(_))));
    }

    #[test]
    fn coefficient_string_layout() {
        let q = p(&[128, 29, 27, 2, 0]);
        let bits = q.to_coeff_bits().unwrap();
        assert_eq!(bits.len(), 128);
        assert!(bits.get(127) && bits.get(125) && bits.get(100) && bits.get(98));
        assert_eq!(bits.count_ones(), 4);
        assert_eq!(Gf2Poly::from_coeff_bits(&bits), q);
        let hex = q.to_hex().unwrap();
        assert_eq!(hex, "00000000000000000000000028000005");
        assert_eq!(Gf2Poly::from_hex(128, &hex).unwrap(), q);
        assert_eq!(q.to_string(), "x^128 + x^29 + x^27 + x^2 + 1");
    }

    #[test]
    fn gcd_is_greatest_common_divisor_up_to_degree_8() {
        let polys: Vec<Gf2Poly> = (1u64..1 << 6).map(Gf2Poly::from_u64).collect();
        let divisors: Vec<Gf2Poly> = (1u64..1 << 9).map(Gf2Poly::from_u64).collect();
        for f in polys.iter().step_by(3) {
            for g in polys.iter().step_by(5) {
                let d = poly_gcd(f, g).unwrap();
                assert!(f.rem(&d).unwrap().is_zero() && g.rem(&d).unwrap().is_zero());
                for c in &divisors {
                    if f.rem(c).unwrap().is_zero() && g.rem(c).unwrap().is_zero() {
                        assert!(d.rem(c).unwrap().is_zero(), "{c} divides {f} and {g} but not {d}");
                    }
                }
            }
        }
    }

    proptest! {
        #[test]
        fn frobenius_matches_naive_squaring(low in any::<u64>(), deg in 1usize..=64, k in 0u64..=64) {
            let modulus = Gf2Poly::monomial(deg).add(&Gf2Poly::from_u64(if deg == 64 { low } else { low & ((1 << deg) - 1) }));
            let m = coeffs(&modulus);
            let mut r = naive_rem(&[false, true], &m);
            for _ in 0..k {
                r = naive_rem(&naive_mul(&r, &r), &m);
            }
            prop_assert_eq!(frobenius_power(k, &modulus).unwrap(), from_coeffs(&r));
        }

        #[test]
        fn mul_div_roundtrip(a in proptest::collection::vec(any::<u64>(), 0..4),
                             b in proptest::collection::vec(any::<u64>(), 1..3)) {
            let a = Gf2Poly::from_limbs(a);
            let b = Gf2Poly::from_limbs(b);
            prop_assume!(!b.is_zero());
            let (q, r) = a.div_rem(&b).unwrap();
            prop_assert!(r.degree().is_none_or(|d| d < b.degree().unwrap()));
            prop_assert_eq!(q.mul(&b).add(&r), a.clone());
            prop_assert_eq!(a.square(), a.mul(&a));
        }
    }
}
