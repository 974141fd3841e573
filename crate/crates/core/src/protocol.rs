//! Three-party signing and verification, companion tasks and attack experiments.
//!
//! Alice hashes the document with `(p_a, X_a)` where `p_a` is a fresh local
//! irreducible polynomial, forms `Dig = Hash || p_a` and sends `Sig = Dig ⊕ Y_a`.
//! Bob and Charlie swap their key shares over an authenticated channel, recover
//! `K_X = X_b ⊕ X_c` and `K_Y = Y_b ⊕ Y_c`, decrypt the expected digest and
//! recompute the hash. Both verifiers run the same function on the same inputs,
//! which is why their verdicts cannot diverge.

use std::fmt;

use rayon::prelude::*;

use crate::bits::BitString;
use crate::error::{Error, Result};
use crate::gf2::{enumerate_irreducibles, is_irreducible, sample_irreducible, Gf2Poly, MAX_ENUMERATION_DEGREE};
use crate::keymgr::{
    draw_mac_key, draw_signing_keys, link_pools, predistribute_via_qkd, KeyBundle, KeyPool, MacKeyMode, Party,
    Purpose, Role,
};
use crate::netharness::{Adversary, Bus, Passive, Transcript};
use crate::otuh::{collision_bound, toeplitz_hash_raw, AuthParams, HashParams, OneTimeKey};
use crate::rng::QdsRng;

/// Non-empty byte document; `m = 8 * len` bits.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Document {
    bytes: Vec<u8>,
}

impl Document {
    pub fn new(bytes: Vec<u8>) -> Result<Self> {
        if bytes.is_empty() {
            return Err(Error::arg("document must not be empty"));
        }
        Ok(Document { bytes })
    }

    pub fn m(&self) -> u64 {
        8 * self.bytes.len() as u64
    }

    pub fn bytes(&self) -> &[u8] {
        &self.bytes
    }

    pub fn bits(&self) -> BitString {
        BitString::from_bytes(&self.bytes)
    }
}

/// `hash || poly`, `2n` bits.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Digest {
    pub hash: BitString,
    pub poly: BitString,
}

impl Digest {
    pub fn to_bits(&self) -> BitString {
        self.hash.concat(&self.poly)
    }

    pub fn from_bits(bits: &BitString) -> Result<Self> {
        if !bits.len().is_multiple_of(2) || bits.is_empty() {
            return Err(Error::arg("digest length must be even and positive"));
        }
        let n = bits.len() / 2;
        Ok(Digest { hash: bits.slice(0, n)?, poly: bits.slice(n, n)? })
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Signature(BitString);

impl Signature {
    pub fn from_bits(bits: BitString) -> Result<Self> {
        if !bits.len().is_multiple_of(2) || bits.is_empty() {
            return Err(Error::arg("signature length must be even and positive"));
        }
        Ok(Signature(bits))
    }

    pub fn n(&self) -> usize {
        self.0.len() / 2
    }

    pub fn bits(&self) -> &BitString {
        &self.0
    }

    pub fn to_hex(&self) -> String {
        self.0.to_hex()
    }
}

/// What Alice's signer did, for diagnostics and tests.
#[derive(Debug, Clone)]
pub struct AuditRecord {
    pub poly: Gf2Poly,
    pub irreducible_trials: u64,
    pub digest: Digest,
    pub key_offset: u64,
    /// The drawn initial vector was all zero. Allowed, since the key accounting draws
    /// `s` uniformly, but the hash is then identically zero.
    pub zero_init: bool,
}

/// Signs `doc`, consuming `keys`.
pub fn sign(doc: &Document, keys: KeyBundle, rng: &mut QdsRng) -> Result<(Signature, AuditRecord)> {
    let n = keys.n();
    let key_offset = keys.offset();
    let (x, y) = keys.into_parts();
    let (poly, trials) = sample_irreducible(n, rng)?;
    let params = HashParams::new(poly.clone(), x)?;
    let zero_init = params.has_zero_init();
    let hash = params.toeplitz_hash(&doc.bits())?;
    let digest = Digest { hash, poly: poly.to_coeff_bits()? };
    let sig = Signature(digest.to_bits().xor(&y)?);
    Ok((sig, AuditRecord { poly, irreducible_trials: trials, digest, key_offset, zero_init }))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Reason {
    Accepted,
    HashMismatch,
    /// The decrypted polynomial is not irreducible.
    MalformedPoly,
}

impl Reason {
    pub fn code(self) -> &'static str {
        match self {
            Reason::Accepted => "accepted",
            Reason::HashMismatch => "hash-mismatch",
            Reason::MalformedPoly => "malformed-poly",
        }
    }

    fn id(self) -> u8 {
        match self {
            Reason::Accepted => 0,
            Reason::HashMismatch => 1,
            Reason::MalformedPoly => 2,
        }
    }

    fn from_id(id: u8) -> Result<Self> {
        match id {
            0 => Ok(Reason::Accepted),
            1 => Ok(Reason::HashMismatch),
            2 => Ok(Reason::MalformedPoly),
            _ => Err(Error::format("unknown verdict reason")),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Verdict {
    pub accepted: bool,
    pub reason: Reason,
    /// `Sig ⊕ K_Y`.
    pub expected_digest: BitString,
    /// Recomputed `hash || poly`, absent when the polynomial check failed first.
    pub actual_digest: Option<BitString>,
}

impl fmt::Display for Verdict {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{} ({})", if self.accepted { "accept" } else { "reject" }, self.reason.code())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct VerifierConfig {
    /// Reject decrypted polynomials that are not irreducible before hashing. With this
    /// off, verification is a pure digest comparison.
    pub check_irreducible: bool,
}

impl Default for VerifierConfig {
    fn default() -> Self {
        VerifierConfig { check_irreducible: true }
    }
}

/// Shared verification core for both verifiers.
pub fn verify_with_keys(
    sig: &Signature,
    doc: &Document,
    k_x: &BitString,
    k_y: &BitString,
    cfg: VerifierConfig,
) -> Result<Verdict> {
    let n = sig.n();
    if k_x.len() != n || k_y.len() != 2 * n {
        return Err(Error::arg(format!(
            "key lengths {} and {} do not match a {}-bit signature",
            k_x.len(),
            k_y.len(),
            2 * n
        )));
    }
    let expected_digest = sig.0.xor(k_y)?;
    let expected = Digest::from_bits(&expected_digest)?;
    let poly = Gf2Poly::from_coeff_bits(&expected.poly);
    if cfg.check_irreducible && !is_irreducible(&poly) {
        return Ok(Verdict { accepted: false, reason: Reason::MalformedPoly, expected_digest, actual_digest: None });
    }
    let actual_hash = toeplitz_hash_raw(&poly, k_x, &doc.bits())?;
    let accepted = actual_hash.ct_eq(&expected.hash);
    Ok(Verdict {
        accepted,
        reason: if accepted { Reason::Accepted } else { Reason::HashMismatch },
        expected_digest,
        actual_digest: Some(actual_hash.concat(&expected.poly)),
    })
}

fn combine(a: (&BitString, &BitString), b: (&BitString, &BitString)) -> Result<(BitString, BitString)> {
    Ok((a.0.xor(b.0)?, a.1.xor(b.1)?))
}

/// Bob's check with his own bundle and Charlie's shares `(X_c, Y_c)`.
pub fn bob_verify(
    sig: &Signature,
    doc: &Document,
    own: &KeyBundle,
    charlie: (&BitString, &BitString),
    cfg: VerifierConfig,
) -> Result<Verdict> {
    let (k_x, k_y) = combine((own.x(), own.y()), charlie)?;
    verify_with_keys(sig, doc, &k_x, &k_y, cfg)
}

/// Charlie's check with Bob's forwarded shares `(X_b, Y_b)` and his own bundle.
pub fn charlie_verify(
    sig: &Signature,
    doc: &Document,
    bob: (&BitString, &BitString),
    own: &KeyBundle,
    cfg: VerifierConfig,
) -> Result<Verdict> {
    let (k_x, k_y) = combine(bob, (own.x(), own.y()))?;
    verify_with_keys(sig, doc, &k_x, &k_y, cfg)
}

// Message payloads. The first byte names the message.
const MSG_SIGNED: u8 = 0x01;
const MSG_FORWARD: u8 = 0x02;
const MSG_SHARES: u8 = 0x03;
const MSG_ANNOUNCE: u8 = 0x04;

fn put_bits(out: &mut Vec<u8>, bits: &BitString) {
    out.extend_from_slice(&(bits.len() as u32).to_be_bytes());
    out.extend_from_slice(bits.as_bytes());
}

fn get_bits(buf: &[u8], pos: &mut usize) -> Result<BitString> {
    let header = buf.get(*pos..*pos + 4).ok_or_else(|| Error::format("truncated payload"))?;
    let len = u32::from_be_bytes(header.try_into().unwrap()) as usize;
    let start = *pos + 4;
    let end = start + len.div_ceil(8);
    let bytes = buf.get(start..end).ok_or_else(|| Error::format("truncated payload"))?;
    *pos = end;
    BitString::from_bytes_with_len(bytes.to_vec(), len)
}

fn expect_type(buf: &[u8], ty: u8) -> Result<()> {
    if buf.first() != Some(&ty) {
        return Err(Error::format(format!("expected message type {ty:#04x}")));
    }
    Ok(())
}

fn encode_signed(sig: &Signature, doc: &Document) -> Vec<u8> {
    let mut out = vec![MSG_SIGNED];
    put_bits(&mut out, &sig.0);
    out.extend_from_slice(&doc.bytes);
    out
}

fn decode_signed(buf: &[u8]) -> Result<(Signature, Document)> {
    expect_type(buf, MSG_SIGNED)?;
    let mut pos = 1;
    let sig = Signature::from_bits(get_bits(buf, &mut pos)?).map_err(|e| Error::format(e.to_string()))?;
    let doc = Document::new(buf[pos..].to_vec()).map_err(|e| Error::format(e.to_string()))?;
    Ok((sig, doc))
}

fn encode_forward(sig: &Signature, x_b: &BitString, y_b: &BitString, doc: &Document) -> Vec<u8> {
    let mut out = vec![MSG_FORWARD];
    put_bits(&mut out, &sig.0);
    put_bits(&mut out, x_b);
    put_bits(&mut out, y_b);
    out.extend_from_slice(&doc.bytes);
    out
}

struct Forward {
    sig: Signature,
    x_b: BitString,
    y_b: BitString,
    doc: Document,
}

fn decode_forward(buf: &[u8]) -> Result<Forward> {
    expect_type(buf, MSG_FORWARD)?;
    let mut pos = 1;
    let sig = Signature::from_bits(get_bits(buf, &mut pos)?)?;
    let x_b = get_bits(buf, &mut pos)?;
    let y_b = get_bits(buf, &mut pos)?;
    let doc = Document::new(buf[pos..].to_vec())?;
    Ok(Forward { sig, x_b, y_b, doc })
}

fn encode_shares(x_c: &BitString, y_c: &BitString) -> Vec<u8> {
    let mut out = vec![MSG_SHARES];
    put_bits(&mut out, x_c);
    put_bits(&mut out, y_c);
    out
}

fn decode_shares(buf: &[u8]) -> Result<(BitString, BitString)> {
    expect_type(buf, MSG_SHARES)?;
    let mut pos = 1;
    Ok((get_bits(buf, &mut pos)?, get_bits(buf, &mut pos)?))
}

fn encode_announce(v: &Verdict) -> Vec<u8> {
    vec![MSG_ANNOUNCE, v.accepted as u8, v.reason.id()]
}

fn decode_announce(buf: &[u8]) -> Result<(bool, Reason)> {
    expect_type(buf, MSG_ANNOUNCE)?;
    match buf {
        [_, a, r] => Ok((*a == 1, Reason::from_id(*r)?)),
        _ => Err(Error::format("bad announcement")),
    }
}

/// What Alice puts on the wire given an honest request to sign `doc`.
pub trait SignerBehavior {
    fn produce(&mut self, doc: &Document, keys: KeyBundle, rng: &mut QdsRng) -> Result<(Signature, Document)>;
}

pub struct HonestSigner;

impl SignerBehavior for HonestSigner {
    fn produce(&mut self, doc: &Document, keys: KeyBundle, rng: &mut QdsRng) -> Result<(Signature, Document)> {
        Ok((sign(doc, keys, rng)?.0, doc.clone()))
    }
}

/// Dishonest Alice: each round picks one of several misbehaviours at random.
pub struct RandomMisbehavior;

impl SignerBehavior for RandomMisbehavior {
    fn produce(&mut self, doc: &Document, keys: KeyBundle, rng: &mut QdsRng) -> Result<(Signature, Document)> {
        let n = keys.n();
        let x_a = keys.x().clone();
        let y_a = keys.y().clone();
        Ok(match rng.below(5)? {
            0 => (Signature(rng.next_bits(2 * n)?), doc.clone()),
            1 => {
                let (sig, _) = sign(doc, keys, rng)?;
                let other = Document::new(rng.next_bytes(doc.bytes.len())?)?;
                (sig, other)
            }
            2 => {
                let (mut sig, _) = sign(doc, keys, rng)?;
                let bit = rng.below(2 * n as u64)? as usize;
                sig.0.flip(bit);
                (sig, doc.clone())
            }
            3 => {
                // Correct structure with a reducible polynomial.
                let poly_bits = loop {
                    let cand = rng.next_bits(n)?;
                    if !is_irreducible(&Gf2Poly::from_coeff_bits(&cand)) {
                        break cand;
                    }
                };
                let hash = toeplitz_hash_raw(&Gf2Poly::from_coeff_bits(&poly_bits), &x_a, &doc.bits())?;
                (Signature(hash.concat(&poly_bits).xor(&y_a)?), doc.clone())
            }
            _ => (sign(doc, keys, rng)?.0, doc.clone()),
        })
    }
}

/// Everything a simulated deployment needs: three correlated pools and the
/// Bob–Charlie authentication link.
pub struct Harness {
    pub alice: KeyPool,
    pub bob: KeyPool,
    pub charlie: KeyPool,
    pub link_bob: KeyPool,
    pub link_charlie: KeyPool,
    pub mac_params: AuthParams,
    pub mac_mode: MacKeyMode,
    pub verifier: VerifierConfig,
    /// Let Charlie verify even when Bob rejected. Test mode only.
    pub force_charlie: bool,
    pub seed: Option<u64>,
    rounds: u64,
}

/// Authenticated messages per round: forward, shares, announcement.
pub const MACS_PER_ROUND: usize = 3;

impl Harness {
    /// Pre-distributes enough material for `rounds` signatures.
    pub fn simulated(n: usize, rounds: usize, rng: &mut QdsRng, seed: Option<u64>) -> Result<Self> {
        let sig_bits = 3 * n * rounds;
        let ab = rng.next_bits(sig_bits)?;
        let ac = rng.next_bits(sig_bits)?;
        let d = predistribute_via_qkd(&ab, &ac, n)?;
        let link_bits = n + 20 * n * (n - 1) + MACS_PER_ROUND * MacKeyMode::PadAndInit.bits_per_message(n) * rounds;
        let link = rng.next_bits(link_bits)?;
        Harness::from_pools(d.alice, d.bob, d.charlie, link_pools(Party::BobCharlieLink, &link, n)?, seed)
    }

    pub fn from_pools(
        alice: KeyPool,
        bob: KeyPool,
        charlie: KeyPool,
        link: (KeyPool, KeyPool),
        seed: Option<u64>,
    ) -> Result<Self> {
        let (mut link_bob, mut link_charlie) = link;
        let mac_params = link_bob.establish_mac_params()?;
        if link_charlie.establish_mac_params()? != mac_params {
            return Err(Error::arg("link copies disagree on MAC parameters"));
        }
        Ok(Harness {
            alice,
            bob,
            charlie,
            link_bob,
            link_charlie,
            mac_params,
            mac_mode: MacKeyMode::Pad,
            verifier: VerifierConfig::default(),
            force_charlie: false,
            seed,
            rounds: 0,
        })
    }

    pub fn n(&self) -> usize {
        self.alice.n()
    }
}

#[derive(Debug)]
pub struct RoundOutcome {
    pub bob: Verdict,
    /// `None` when Bob rejected and Charlie was not asked.
    pub charlie: Option<Verdict>,
    pub signature: Signature,
    pub transcript: Transcript,
    /// MAC key bits consumed on the Bob–Charlie link, reported apart from the `3n` signing cost.
    pub mac_bits: u64,
}

/// Honest round on a passive bus.
pub fn run_signature_round(h: &mut Harness, doc: &Document, rng: &mut QdsRng) -> Result<RoundOutcome> {
    run_round_with(h, doc, rng, &mut HonestSigner, Box::new(Passive))
}

/// Full exchange: Alice → Bob (public), Bob → Charlie forward, Charlie → Bob shares,
/// Bob → Charlie announcement (all authenticated). An authentication failure aborts
/// the round with [`Error::AuthenticationFailed`].
pub fn run_round_with<'a>(
    h: &mut Harness,
    doc: &Document,
    rng: &mut QdsRng,
    signer: &mut dyn SignerBehavior,
    adversary: Box<dyn Adversary + 'a>,
) -> Result<RoundOutcome> {
    let n = h.n();
    let timestamp = match h.seed {
        Some(_) => 0,
        None => std::time::SystemTime::now().duration_since(std::time::UNIX_EPOCH).map_or(0, |d| d.as_secs()),
    };
    let mut bus = Bus::new(adversary).with_header(h.rounds, h.seed.unwrap_or(0), n as u16, timestamp);
    h.rounds += 1;
    let link_before = h.link_bob.consumed();

    // (i) Alice signs and publishes.
    let keys_a = draw_signing_keys(&mut h.alice)?;
    let (sig, sent_doc) = signer.produce(doc, keys_a, rng)?;
    bus.send_public(Party::Alice, Party::Bob, encode_signed(&sig, &sent_doc));

    let keys_b = draw_signing_keys(&mut h.bob)?;
    let keys_c = draw_signing_keys(&mut h.charlie)?;

    // (ii) Bob forwards with his shares; Charlie returns his.
    let env = bus.receive(Party::Bob, Party::Alice).ok_or_else(|| Error::format("no signed document for Bob"))?;
    let (sig_b, doc_b) = decode_signed(&env.payload)?;
    let key = draw_mac_key(&mut h.link_bob, h.mac_mode)?;
    bus.send_authenticated(Party::Bob, Party::Charlie, encode_forward(&sig_b, keys_b.x(), keys_b.y(), &doc_b), &h.mac_params, key)?;

    let key = draw_mac_key(&mut h.link_charlie, h.mac_mode)?;
    let fwd = decode_forward(&bus.receive_authenticated(Party::Charlie, Party::Bob, &h.mac_params, key)?)?;
    let key = draw_mac_key(&mut h.link_charlie, h.mac_mode)?;
    bus.send_authenticated(Party::Charlie, Party::Bob, encode_shares(keys_c.x(), keys_c.y()), &h.mac_params, key)?;

    let key = draw_mac_key(&mut h.link_bob, h.mac_mode)?;
    let (x_c, y_c) = decode_shares(&bus.receive_authenticated(Party::Bob, Party::Charlie, &h.mac_params, key)?)?;
    let bob = bob_verify(&sig_b, &doc_b, &keys_b, (&x_c, &y_c), h.verifier)?;

    let key = draw_mac_key(&mut h.link_bob, h.mac_mode)?;
    bus.send_authenticated(Party::Bob, Party::Charlie, encode_announce(&bob), &h.mac_params, key)?;

    // (iii) Charlie verifies once Bob has accepted.
    let key = draw_mac_key(&mut h.link_charlie, h.mac_mode)?;
    let (bob_accepted, _) = decode_announce(&bus.receive_authenticated(Party::Charlie, Party::Bob, &h.mac_params, key)?)?;
    let charlie = if bob_accepted || h.force_charlie {
        Some(charlie_verify(&fwd.sig, &fwd.doc, (&fwd.x_b, &fwd.y_b), &keys_c, h.verifier)?)
    } else {
        None
    };

    Ok(RoundOutcome {
        bob,
        charlie,
        signature: sig_b,
        transcript: bus.into_transcript(),
        mac_bits: h.link_bob.consumed() - link_before,
    })
}

/// Recomputes both verdicts from a recorded transcript alone.
pub fn verdicts_from_transcript(t: &Transcript, cfg: VerifierConfig, force_charlie: bool) -> Result<(Verdict, Option<Verdict>)> {
    let find = |from: Party, to: Party, ty: u8| {
        t.envelopes
            .iter()
            .find(|e| e.from == from && e.to == to && e.payload.first() == Some(&ty))
            .map(|e| e.payload.as_slice())
            .ok_or_else(|| Error::format(format!("transcript lacks message {ty:#04x}")))
    };
    let fwd = decode_forward(find(Party::Bob, Party::Charlie, MSG_FORWARD)?)?;
    let (x_c, y_c) = decode_shares(find(Party::Charlie, Party::Bob, MSG_SHARES)?)?;
    let (k_x, k_y) = combine((&fwd.x_b, &fwd.y_b), (&x_c, &y_c))?;
    let bob = verify_with_keys(&fwd.sig, &fwd.doc, &k_x, &k_y, cfg)?;
    let (announced, _) = decode_announce(find(Party::Bob, Party::Charlie, MSG_ANNOUNCE)?)?;
    let charlie = if announced || force_charlie { Some(verify_with_keys(&fwd.sig, &fwd.doc, &k_x, &k_y, cfg)?) } else { None };
    Ok((bob, charlie))
}

/// What a forging Bob knows after one honest exchange.
#[derive(Debug, Clone)]
pub struct ForgeryView {
    pub n: usize,
    pub doc: BitString,
    pub sig: BitString,
    pub x_b: BitString,
    pub y_b: BitString,
}

/// What Bob forwards to Charlie instead.
#[derive(Debug, Clone)]
pub struct ForgeryAttempt {
    pub doc: BitString,
    pub sig: BitString,
    pub x_b: BitString,
    pub y_b: BitString,
}

/// Pluggable forging strategy. Implementations make no optimality claim.
pub trait ForgeryStrategy: Sync {
    fn name(&self) -> &str;
    fn forge(&self, view: &ForgeryView, rng: &mut QdsRng) -> Result<ForgeryAttempt>;
}

/// Exploits linearity: if `p_a` divides the difference polynomial `Δ(x)`, then
/// `h(Doc ⊕ Δ) = h(Doc)` for every initial vector, so the signature can be reused.
/// Bob packs as many distinct degree-`n` irreducibles into `Δ` as the document length
/// allows. When not even one fits, he flips document bits and guesses the hash offset.
pub struct LinearityForger {
    n: usize,
    irreducibles: Vec<Gf2Poly>,
}

impl LinearityForger {
    pub fn new(n: usize) -> Result<Self> {
        if n > MAX_ENUMERATION_DEGREE {
            return Err(Error::arg(format!("linearity forger enumerates candidates; n must be <= {MAX_ENUMERATION_DEGREE}")));
        }
        Ok(LinearityForger { n, irreducibles: enumerate_irreducibles(n)? })
    }

    /// Number of candidate polynomials covered per attempt for an `m`-bit document.
    pub fn guesses(&self, m: usize) -> usize {
        ((m - 1) / self.n).min(self.irreducibles.len())
    }
}

impl ForgeryStrategy for LinearityForger {
    fn name(&self) -> &str {
        "linearity"
    }

    fn forge(&self, view: &ForgeryView, rng: &mut QdsRng) -> Result<ForgeryAttempt> {
        let m = view.doc.len();
        let k = self.guesses(m);
        let mut doc = view.doc.clone();
        let mut sig = view.sig.clone();
        if k >= 1 {
            // Partial Fisher-Yates to pick k distinct candidates.
            let mut idx: Vec<usize> = (0..self.irreducibles.len()).collect();
            let mut delta = Gf2Poly::one();
            for i in 0..k {
                let j = i + rng.below((idx.len() - i) as u64)? as usize;
                idx.swap(i, j);
                delta = delta.mul(&self.irreducibles[idx[i]]);
            }
            // Document bit i carries the coefficient of x^i.
            for i in 0..m {
                if delta.coeff(i) {
                    doc.flip(i);
                }
            }
        } else {
            let mut delta = BitString::zeros(m);
            while delta.is_zero() {
                delta = rng.next_bits(m)?;
            }
            doc.xor_assign(&delta)?;
            let mut t = BitString::zeros(self.n);
            while t.is_zero() {
                t = rng.next_bits(self.n)?;
            }
            sig.xor_assign(&t.concat(&BitString::zeros(self.n)))?;
        }
        Ok(ForgeryAttempt { doc, sig, x_b: view.x_b.clone(), y_b: view.y_b.clone() })
    }
}

/// Ignores the observed signature and sends a random one for a fresh document.
pub struct BlindGuess;

impl ForgeryStrategy for BlindGuess {
    fn name(&self) -> &str {
        "blind-guess"
    }

    fn forge(&self, view: &ForgeryView, rng: &mut QdsRng) -> Result<ForgeryAttempt> {
        let mut doc = rng.next_bits(view.doc.len())?;
        if doc == view.doc {
            doc.flip(0);
        }
        Ok(ForgeryAttempt { doc, sig: rng.next_bits(2 * view.n)?, x_b: view.x_b.clone(), y_b: view.y_b.clone() })
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ForgeryStats {
    pub trials: u64,
    pub successes: u64,
    pub rate: f64,
    /// `m / 2^(n-1)`.
    pub bound: f64,
    /// Binomial standard deviation at the bound.
    pub sigma: f64,
}

impl ForgeryStats {
    pub fn within_bound(&self, sigmas: f64) -> bool {
        self.rate <= self.bound + sigmas * self.sigma
    }
}

/// One honest signing followed by one forgery attempt, judged by Charlie.
fn forgery_trial(n: usize, m: usize, strategy: &dyn ForgeryStrategy, rng: &mut QdsRng) -> Result<bool> {
    let x_b = rng.next_bits(n)?;
    let x_c = rng.next_bits(n)?;
    let y_b = rng.next_bits(2 * n)?;
    let y_c = rng.next_bits(2 * n)?;
    let keys_a = KeyBundle::from_parts(x_b.xor(&x_c)?, y_b.xor(&y_c)?, Role::Signer, 0)?;
    let doc_bits = rng.next_bits(m)?;
    let (sig, _) = sign_bits(&doc_bits, keys_a, rng)?;
    let view = ForgeryView { n, doc: doc_bits.clone(), sig: sig.0.clone(), x_b, y_b };
    let attempt = strategy.forge(&view, rng)?;
    if attempt.doc == doc_bits {
        return Ok(false);
    }
    let (k_x, k_y) = combine((&attempt.x_b, &attempt.y_b), (&x_c, &y_c))?;
    let sig = Signature::from_bits(attempt.sig)?;
    let expected = Digest::from_bits(&sig.0.xor(&k_y)?)?;
    let poly = Gf2Poly::from_coeff_bits(&expected.poly);
    if !is_irreducible(&poly) {
        return Ok(false);
    }
    Ok(toeplitz_hash_raw(&poly, &k_x, &attempt.doc)? == expected.hash)
}

/// [`sign`] over an arbitrary bit-length document.
fn sign_bits(doc: &BitString, keys: KeyBundle, rng: &mut QdsRng) -> Result<(Signature, Gf2Poly)> {
    let (x, y) = keys.into_parts();
    let (poly, _) = sample_irreducible(x.len(), rng)?;
    let hash = HashParams::new(poly.clone(), x)?.toeplitz_hash(doc)?;
    Ok((Signature(hash.concat(&poly.to_coeff_bits()?).xor(&y)?), poly))
}

/// Monte Carlo forgery rate against Charlie. Trials run in parallel over fixed chunks,
/// each with its own stream derived from `seed`, so results do not depend on scheduling.
pub fn forgery_experiment(n: usize, m: usize, trials: u64, strategy: &dyn ForgeryStrategy, seed: u64) -> Result<ForgeryStats> {
    if !(2..=16).contains(&n) || m == 0 || trials == 0 {
        return Err(Error::arg("forgery experiment needs 2 <= n <= 16, m >= 1, trials >= 1"));
    }
    const CHUNKS: u64 = 256;
    let successes = (0..CHUNKS)
        .into_par_iter()
        .map(|chunk| -> Result<u64> {
            let mut rng = QdsRng::seeded(seed).fork(chunk)?;
            let count = trials / CHUNKS + u64::from(chunk < trials % CHUNKS);
            let mut hits = 0;
            for _ in 0..count {
                hits += forgery_trial(n, m, strategy, &mut rng)? as u64;
            }
            Ok(hits)
        })
        .collect::<Result<Vec<_>>>()?
        .into_iter()
        .sum::<u64>();
    let bound = collision_bound(m as u128, n as u32)?.probability();
    let p = bound.min(1.0);
    Ok(ForgeryStats {
        trials,
        successes,
        rate: successes as f64 / trials as f64,
        bound,
        sigma: (p * (1.0 - p) / trials as f64).sqrt(),
    })
}

/// One-time pad. The key must match the message length and is consumed.
pub fn otp_encrypt(plain: &[u8], key: OneTimeKey) -> Result<Vec<u8>> {
    if key.len() != 8 * plain.len() {
        return Err(Error::arg(format!("pad has {} bits for a {}-bit message", key.len(), 8 * plain.len())));
    }
    Ok(plain.iter().zip(key.into_bits().as_bytes()).map(|(p, k)| p ^ k).collect())
}

pub fn otp_decrypt(cipher: &[u8], key: OneTimeKey) -> Result<Vec<u8>> {
    otp_encrypt(cipher, key)
}

/// `share_b ⊕ share_c`.
pub fn secret_share_reconstruct(share_b: &BitString, share_c: &BitString) -> Result<BitString> {
    share_b.xor(share_c)
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ConferenceKeys {
    pub alice: BitString,
    pub bob: BitString,
    pub charlie: BitString,
    /// `S_ba ⊕ S_ca`, announced by Alice.
    pub published: BitString,
}

/// Turns the two QKD links into one key shared by all three parties. Alice publishes
/// `S_ba ⊕ S_ca`; Charlie XORs it into his `S_ca` and ends up with `S_ba`.
pub fn conference_key_establish(
    alice_ab: &mut KeyPool,
    alice_ac: &mut KeyPool,
    bob_ab: &mut KeyPool,
    charlie_ac: &mut KeyPool,
    len: usize,
) -> Result<ConferenceKeys> {
    let needed = len as u64;
    for pool in [&*alice_ab, &*alice_ac, &*bob_ab, &*charlie_ac] {
        if pool.remaining() < needed {
            return Err(Error::InsufficientKey { needed, available: pool.remaining() });
        }
    }
    let s_ba = alice_ab.draw(Purpose::Conference, len)?;
    let s_ca = alice_ac.draw(Purpose::Conference, len)?;
    let published = s_ba.xor(&s_ca)?;
    let bob = bob_ab.draw(Purpose::Conference, len)?;
    let charlie = charlie_ac.draw(Purpose::Conference, len)?.xor(&published)?;
    Ok(ConferenceKeys { alice: s_ba, bob, charlie, published })
}

const QDSS_MAGIC: &[u8; 4] = b"QDSS";
const QDSS_VERSION: u8 = 1;

/// On-disk signature. The trailer records where in the pools the signing keys started,
/// so that verifiers can align, plus a free-form note (e.g. a document hash).
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SignatureFile {
    pub m: u64,
    pub signature: Signature,
    pub key_offset: Option<u64>,
    pub note: String,
}

impl SignatureFile {
    pub fn to_bytes(&self) -> Vec<u8> {
        let mut out = Vec::new();
        out.extend_from_slice(QDSS_MAGIC);
        out.push(QDSS_VERSION);
        out.extend_from_slice(&(self.signature.n() as u16).to_be_bytes());
        out.extend_from_slice(&self.m.to_be_bytes());
        out.extend_from_slice(self.signature.0.as_bytes());
        out.push(self.key_offset.is_some() as u8);
        out.extend_from_slice(&self.key_offset.unwrap_or(0).to_be_bytes());
        let note = &self.note.as_bytes()[..self.note.len().min(u16::MAX as usize)];
        out.extend_from_slice(&(note.len() as u16).to_be_bytes());
        out.extend_from_slice(note);
        out
    }

    pub fn from_bytes(buf: &[u8]) -> Result<Self> {
        let trunc = || Error::format("truncated signature file");
        if buf.get(..4) != Some(QDSS_MAGIC.as_slice()) {
            return Err(Error::format("not a signature file"));
        }
        if buf.get(4) != Some(&QDSS_VERSION) {
            return Err(Error::format("unsupported signature file version"));
        }
        let n = u16::from_be_bytes(buf.get(5..7).ok_or_else(trunc)?.try_into().unwrap()) as usize;
        let m = u64::from_be_bytes(buf.get(7..15).ok_or_else(trunc)?.try_into().unwrap());
        let sig_end = 15 + (2 * n).div_ceil(8);
        let sig = BitString::from_bytes_with_len(buf.get(15..sig_end).ok_or_else(trunc)?.to_vec(), 2 * n)?;
        let signature = Signature::from_bits(sig).map_err(|e| Error::format(e.to_string()))?;
        let mut key_offset = None;
        let mut note = String::new();
        if buf.len() > sig_end {
            let flag = buf[sig_end];
            let off = u64::from_be_bytes(buf.get(sig_end + 1..sig_end + 9).ok_or_else(trunc)?.try_into().unwrap());
            key_offset = (flag & 1 == 1).then_some(off);
            let nl = u16::from_be_bytes(buf.get(sig_end + 9..sig_end + 11).ok_or_else(trunc)?.try_into().unwrap()) as usize;
            let bytes = buf.get(sig_end + 11..sig_end + 11 + nl).ok_or_else(trunc)?;
            note = String::from_utf8(bytes.to_vec()).map_err(|_| Error::format("note is not UTF-8"))?;
        }
        Ok(SignatureFile { m, signature, key_offset, note })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::netharness::{contains_bits, Envelope};
    use crate::otuh::naive_toeplitz_matrix;

    fn bundle(x: BitString, y: BitString) -> KeyBundle {
        KeyBundle::from_parts(x, y, Role::Signer, 0).unwrap()
    }

    #[test]
    fn zero_pad_signature_is_the_digest() {
        let mut rng = QdsRng::seeded(1);
        let doc = Document::new(b"hello".to_vec()).unwrap();
        let x = rng.next_bits(16).unwrap();
        let (sig, audit) = sign(&doc, bundle(x, BitString::zeros(32)), &mut rng).unwrap();
        assert_eq!(sig.bits(), &audit.digest.to_bits());
        assert_eq!(sig.n(), 16);
    }

    #[test]
    fn zero_document_signs_to_masked_poly() {
        let mut rng = QdsRng::seeded(2);
        let doc = Document::new(vec![0; 12]).unwrap();
        let x = rng.next_bits(16).unwrap();
        let y = rng.next_bits(32).unwrap();
        let (sig, audit) = sign(&doc, bundle(x, y.clone()), &mut rng).unwrap();
        let expected = BitString::zeros(16).concat(&audit.poly.to_coeff_bits().unwrap()).xor(&y).unwrap();
        assert_eq!(sig.bits(), &expected);
        assert!(Document::new(vec![]).is_err());
    }

    #[test]
    fn zero_initial_vector_is_flagged_not_refused() {
        let mut rng = QdsRng::seeded(4);
        let doc = Document::new(b"abc".to_vec()).unwrap();
        let y = rng.next_bits(32).unwrap();
        let (sig, audit) = sign(&doc, bundle(BitString::zeros(16), y.clone()), &mut rng).unwrap();
        assert!(audit.zero_init);
        assert_eq!(sig.bits().slice(0, 16).unwrap(), y.slice(0, 16).unwrap());
        let (_, audit) = sign(&doc, bundle(rng.next_bits(16).unwrap(), y), &mut rng).unwrap();
        assert!(!audit.zero_init);
    }

    #[test]
    fn toy_instance_against_stepwise_oracle() {
        // n = 8, document 3 bytes. Each step recomputed by hand from primitives.
        let mut rng = QdsRng::seeded(3);
        let x_a = rng.next_bits(8).unwrap();
        let y_a = rng.next_bits(16).unwrap();
        let doc = Document::new(vec![0xa5, 0x3c, 0x01]).unwrap();
        let mut oracle_rng = QdsRng::seeded(99);
        let mut rng = QdsRng::seeded(99);
        let (sig, _) = sign(&doc, bundle(x_a.clone(), y_a.clone()), &mut rng).unwrap();

        // 1. polynomial: first irreducible candidate (a7..a1, 1) from the same stream.
        let p = loop {
            let c = oracle_rng.next_bits(7).unwrap().concat(&BitString::parse_binary("1").unwrap());
            let p = Gf2Poly::from_coeff_bits(&c);
            if (1..=4).all(|d| {
                // no factor of degree d: test every monic polynomial of degree d
                (0u64..1 << d).all(|low| p.rem(&Gf2Poly::from_u64((1 << d) | low)).map(|r| !r.is_zero()).unwrap())
            }) {
                break p;
            }
        };
        // 2-3. Toeplitz matrix from the LFSR and its product with the document.
        let params = HashParams::new(p.clone(), x_a).unwrap();
        let h = naive_toeplitz_matrix(&params, 24).unwrap();
        let hash = h.mul_vec(&doc.bits()).unwrap();
        // 4-5. digest and one-time pad.
        let digest: Vec<bool> = hash.iter().chain(p.to_coeff_bits().unwrap().iter()).collect();
        let expected: Vec<bool> = digest.iter().zip(y_a.iter()).map(|(d, y)| d ^ y).collect();
        assert_eq!(sig.bits(), &BitString::from_bits(&expected));
    }

    fn honest_setup(n: usize, m_bytes: usize, seed: u64) -> (Signature, Document, KeyBundle, KeyBundle) {
        let mut rng = QdsRng::seeded(seed);
        let mut d = crate::keymgr::simulate_predistribution(3 * n, n, &mut rng).unwrap();
        let ka = draw_signing_keys(&mut d.alice).unwrap();
        let kb = draw_signing_keys(&mut d.bob).unwrap();
        let kc = draw_signing_keys(&mut d.charlie).unwrap();
        let doc = Document::new(rng.next_bytes(m_bytes).unwrap()).unwrap();
        let (sig, _) = sign(&doc, ka, &mut rng).unwrap();
        (sig, doc, kb, kc)
    }

    #[test]
    fn honest_signature_accepted_by_both() {
        let cfg = VerifierConfig::default();
        for seed in 0..50 {
            let (sig, doc, kb, kc) = honest_setup(32, 20, seed);
            let vb = bob_verify(&sig, &doc, &kb, (kc.x(), kc.y()), cfg).unwrap();
            let vc = charlie_verify(&sig, &doc, (kb.x(), kb.y()), &kc, cfg).unwrap();
            assert!(vb.accepted && vc.accepted);
            assert_eq!(vb, vc);
            assert_eq!(vb.actual_digest.as_ref(), Some(&vb.expected_digest));
        }
    }

    #[test]
    fn every_single_bit_flip_rejected() {
        let (sig, doc, kb, kc) = honest_setup(8, 4, 7);
        let k_x = kb.x().xor(kc.x()).unwrap();
        assert!(!k_x.is_zero(), "seed must give a nonzero initial vector");
        for cfg in [VerifierConfig { check_irreducible: true }, VerifierConfig { check_irreducible: false }] {
            for i in 0..32 {
                let mut bytes = doc.bytes().to_vec();
                bytes[i / 8] ^= 0x80 >> (i % 8);
                let forged = Document::new(bytes).unwrap();
                let v = bob_verify(&sig, &forged, &kb, (kc.x(), kc.y()), cfg).unwrap();
                assert!(!v.accepted, "flip {i} accepted");
                assert_eq!(v.reason, Reason::HashMismatch);
            }
        }
    }

    #[test]
    fn tampered_share_rejected() {
        let (sig, doc, kb, kc) = honest_setup(16, 8, 9);
        let mut y_c = kc.y().clone();
        y_c.flip(3);
        let v = bob_verify(&sig, &doc, &kb, (kc.x(), &y_c), VerifierConfig::default()).unwrap();
        assert!(!v.accepted);
        let mut y_c = kc.y().clone();
        y_c.flip(20); // polynomial half
        let v = bob_verify(&sig, &doc, &kb, (kc.x(), &y_c), VerifierConfig::default()).unwrap();
        assert!(!v.accepted);
        assert!(bob_verify(&sig, &doc, &kb, (kc.x(), &BitString::zeros(8)), VerifierConfig::default()).is_err());
    }

    #[test]
    fn malformed_poly_reason_depends_on_tripwire() {
        // Sig encrypts a digest whose polynomial is x^8 + 1 = (x + 1)^8.
        let mut rng = QdsRng::seeded(10);
        let k_x = rng.next_bits(8).unwrap();
        let k_y = rng.next_bits(16).unwrap();
        let doc = Document::new(vec![0x42]).unwrap();
        let poly_bits = BitString::parse_binary("00000001").unwrap();
        let hash = toeplitz_hash_raw(&Gf2Poly::from_coeff_bits(&poly_bits), &k_x, &doc.bits()).unwrap();
        let sig = Signature::from_bits(hash.concat(&poly_bits).xor(&k_y).unwrap()).unwrap();
        let strict = verify_with_keys(&sig, &doc, &k_x, &k_y, VerifierConfig::default()).unwrap();
        assert_eq!((strict.accepted, strict.reason), (false, Reason::MalformedPoly));
        let loose = verify_with_keys(&sig, &doc, &k_x, &k_y, VerifierConfig { check_irreducible: false }).unwrap();
        assert_eq!((loose.accepted, loose.reason), (true, Reason::Accepted));
    }

    #[test]
    fn honest_rounds_always_accept() {
        let mut rng = QdsRng::seeded(11);
        let rounds = 10_000;
        let mut h = Harness::simulated(16, rounds, &mut rng, Some(11)).unwrap();
        for _ in 0..rounds {
            let len = 1 + rng.below(64).unwrap() as usize;
            let doc = Document::new(rng.next_bytes(len).unwrap()).unwrap();
            let out = run_signature_round(&mut h, &doc, &mut rng).unwrap();
            assert!(out.bob.accepted);
            assert!(out.charlie.as_ref().unwrap().accepted);
            assert_eq!(out.mac_bits, 3 * 16);
        }
        assert_eq!(h.alice.consumed(), 48 * rounds as u64);
        assert_eq!(h.bob.consumed(), h.alice.consumed());
        assert!(h.alice.remaining() == 0 && matches!(draw_signing_keys(&mut h.alice), Err(Error::InsufficientKey { .. })));
    }

    #[test]
    fn repudiation_verdicts_always_agree() {
        let mut rng = QdsRng::seeded(12);
        let rounds = 2000;
        let mut h = Harness::simulated(16, rounds, &mut rng, Some(12)).unwrap();
        h.force_charlie = true;
        let (mut accepted, mut rejected) = (0, 0);
        for _ in 0..rounds {
            let doc = Document::new(rng.next_bytes(16).unwrap()).unwrap();
            let out = run_round_with(&mut h, &doc, &mut rng, &mut RandomMisbehavior, Box::new(Passive)).unwrap();
            let c = out.charlie.unwrap();
            assert_eq!(out.bob.accepted, c.accepted);
            assert_eq!(out.bob, c);
            if c.accepted { accepted += 1 } else { rejected += 1 }
        }
        assert!(accepted > 0 && rejected > 0);
    }

    #[test]
    fn charlie_skips_after_bob_rejects() {
        struct Garbage;
        impl SignerBehavior for Garbage {
            fn produce(&mut self, doc: &Document, keys: KeyBundle, rng: &mut QdsRng) -> Result<(Signature, Document)> {
                Ok((Signature(rng.next_bits(2 * keys.n())?), doc.clone()))
            }
        }
        let mut rng = QdsRng::seeded(13);
        let mut h = Harness::simulated(16, 1, &mut rng, Some(13)).unwrap();
        let doc = Document::new(b"x".to_vec()).unwrap();
        let out = run_round_with(&mut h, &doc, &mut rng, &mut Garbage, Box::new(Passive)).unwrap();
        assert!(!out.bob.accepted);
        assert!(out.charlie.is_none());
    }

    #[test]
    fn public_tampering_is_rejected_not_aborted() {
        struct FlipDoc;
        impl Adversary for FlipDoc {
            fn tamper_public(&mut self, env: &mut Envelope) {
                let last = env.payload.len() - 1;
                env.payload[last] ^= 1;
            }
        }
        let mut rng = QdsRng::seeded(14);
        let mut h = Harness::simulated(16, 1, &mut rng, Some(14)).unwrap();
        let doc = Document::new(b"pay 10".to_vec()).unwrap();
        let out = run_round_with(&mut h, &doc, &mut rng, &mut HonestSigner, Box::new(FlipDoc)).unwrap();
        assert!(!out.bob.accepted);
    }

    #[test]
    fn authenticated_tampering_aborts() {
        struct FlipAuth;
        impl Adversary for FlipAuth {
            fn tamper_authenticated(&mut self, env: &mut Envelope) {
                env.payload[1] ^= 4;
            }
        }
        let mut rng = QdsRng::seeded(15);
        let mut h = Harness::simulated(32, 1, &mut rng, Some(15)).unwrap();
        let doc = Document::new(b"doc".to_vec()).unwrap();
        let r = run_round_with(&mut h, &doc, &mut rng, &mut HonestSigner, Box::new(FlipAuth));
        assert!(matches!(r, Err(Error::AuthenticationFailed(_))));
    }

    fn seeded_round(seed: u64) -> RoundOutcome {
        let mut rng = QdsRng::seeded(seed);
        let mut h = Harness::simulated(32, 1, &mut rng, Some(seed)).unwrap();
        let doc = Document::new(b"deterministic".to_vec()).unwrap();
        run_signature_round(&mut h, &doc, &mut rng).unwrap()
    }

    #[test]
    fn transcripts_are_deterministic_and_replayable() {
        let a = seeded_round(21);
        let b = seeded_round(21);
        assert_eq!(a.transcript.to_bytes(), b.transcript.to_bytes());
        assert_eq!(a.transcript.sha256_hex(), b.transcript.sha256_hex());
        assert_ne!(a.transcript.sha256_hex(), seeded_round(22).transcript.sha256_hex());
        let parsed = Transcript::from_bytes(&a.transcript.to_bytes()).unwrap();
        let (vb, vc) = verdicts_from_transcript(&parsed, VerifierConfig::default(), false).unwrap();
        assert_eq!(vb, a.bob);
        assert_eq!(vc, a.charlie);
    }

    #[test]
    fn public_channel_never_carries_alice_keys() {
        for seed in 0..200 {
            let mut rng = QdsRng::seeded(seed);
            let mut h = Harness::simulated(32, 1, &mut rng, Some(seed)).unwrap();
            let x_a = h.alice.raw_stream().slice(0, 32).unwrap();
            let y_a = h.alice.raw_stream().slice(32, 64).unwrap();
            let doc = Document::new(rng.next_bytes(24).unwrap()).unwrap();
            let out = run_signature_round(&mut h, &doc, &mut rng).unwrap();
            for payload in out.transcript.public_payloads() {
                assert!(!contains_bits(payload, &x_a), "X_a leaked (seed {seed})");
                assert!(!contains_bits(payload, &y_a), "Y_a leaked (seed {seed})");
            }
        }
    }

    #[test]
    fn linearity_forgery_n10_m64() {
        let forger = LinearityForger::new(10).unwrap();
        assert_eq!(forger.guesses(64), 6);
        let stats = forgery_experiment(10, 64, 200_000, &forger, 1).unwrap();
        assert!(stats.within_bound(3.0), "{stats:?}");
        // The attack succeeds exactly when p_a is among the 6 of 99 guessed polynomials.
        let expected: f64 = 6.0 / 99.0;
        let sd: f64 = (expected * (1.0 - expected) / 200_000.0f64).sqrt();
        assert!((stats.rate - expected).abs() < 5.0 * sd, "{stats:?}");
    }

    #[test]
    fn fallback_forgery_n8_m8() {
        let forger = LinearityForger::new(8).unwrap();
        assert_eq!(forger.guesses(8), 0);
        let stats = forgery_experiment(8, 8, 100_000, &forger, 2).unwrap();
        assert!(stats.within_bound(3.0), "{stats:?}");
        assert!(stats.rate < 0.02);
    }

    #[test]
    fn blind_guess_far_below_bound() {
        let stats = forgery_experiment(10, 64, 100_000, &BlindGuess, 3).unwrap();
        assert!(stats.rate < stats.bound / 10.0, "{stats:?}");
    }

    #[test]
    fn forgery_experiment_is_reproducible() {
        let f = LinearityForger::new(8).unwrap();
        let a = forgery_experiment(8, 40, 5000, &f, 9).unwrap();
        let b = forgery_experiment(8, 40, 5000, &f, 9).unwrap();
        assert_eq!(a, b);
        assert!(forgery_experiment(17, 40, 10, &f, 9).is_err());
    }

    #[test]
    fn otp_properties() {
        let mut rng = QdsRng::seeded(30);
        let msg = b"attack at dawn".to_vec();
        let key = rng.next_bits(8 * msg.len()).unwrap();
        let ct = otp_encrypt(&msg, OneTimeKey::new(key.clone())).unwrap();
        assert_eq!(otp_decrypt(&ct, OneTimeKey::new(key.clone())).unwrap(), msg);
        let recovered: Vec<u8> = ct.iter().zip(&msg).map(|(c, p)| c ^ p).collect();
        assert_eq!(recovered, key.as_bytes());
        assert_eq!(otp_encrypt(&msg, OneTimeKey::new(BitString::zeros(8 * msg.len()))).unwrap(), msg);
        assert!(otp_encrypt(&msg, OneTimeKey::new(BitString::zeros(8))).is_err());
    }

    #[test]
    fn secret_sharing() {
        let a = BitString::parse_binary("1100").unwrap();
        let b = BitString::parse_binary("1010").unwrap();
        assert_eq!(secret_share_reconstruct(&b, &a.xor(&b).unwrap()).unwrap(), a);
        assert!(secret_share_reconstruct(&a, &BitString::zeros(3)).is_err());

        let mut rng = QdsRng::seeded(31);
        let mut d = crate::keymgr::simulate_predistribution(1_000_000, 8, &mut rng).unwrap();
        let secret = d.alice.draw(Purpose::SecretShare, 1_000_000).unwrap();
        let sb = d.bob.draw(Purpose::SecretShare, 1_000_000).unwrap();
        let sc = d.charlie.draw(Purpose::SecretShare, 1_000_000).unwrap();
        assert_eq!(secret_share_reconstruct(&sb, &sc).unwrap(), secret);
        // A single share carries no bias.
        let ones = sb.count_ones() as f64;
        let sigma = (1_000_000.0f64 * 0.25).sqrt();
        assert!((ones - 500_000.0).abs() < 3.0 * sigma);
        // Nor does it correlate with the secret.
        let agree = 1_000_000 - secret.xor(&sb).unwrap().count_ones();
        assert!((agree as f64 - 500_000.0).abs() < 3.0 * sigma);
    }

    #[test]
    fn conference_key_agreement() {
        let mut rng = QdsRng::seeded(32);
        let s_ba = rng.next_bits(512).unwrap();
        let s_ca = rng.next_bits(512).unwrap();
        let (mut a_ab, mut b_ab) = link_pools(Party::AliceBobLink, &s_ba, 8).unwrap();
        let (mut a_ac, mut c_ac) = link_pools(Party::AliceCharlieLink, &s_ca, 8).unwrap();
        let keys = conference_key_establish(&mut a_ab, &mut a_ac, &mut b_ab, &mut c_ac, 256).unwrap();
        assert_eq!(keys.alice, keys.bob);
        assert_eq!(keys.bob, keys.charlie);
        assert_eq!(keys.published.xor(&s_ca.slice(0, 256).unwrap()).unwrap(), keys.bob);

        let msg = rng.next_bytes(32).unwrap();
        let ct = otp_encrypt(&msg, OneTimeKey::new(keys.alice.clone())).unwrap();
        assert_eq!(otp_decrypt(&ct, OneTimeKey::new(keys.charlie.clone())).unwrap(), msg);

        assert!(conference_key_establish(&mut a_ab, &mut a_ac, &mut b_ab, &mut c_ac, 512).is_err());
        assert_eq!(a_ab.consumed(), 256);
    }

    #[test]
    fn signature_file_round_trip() {
        let mut rng = QdsRng::seeded(40);
        let sig = Signature::from_bits(rng.next_bits(256).unwrap()).unwrap();
        let f = SignatureFile { m: 1_042_000, signature: sig, key_offset: Some(384), note: "sha256:abc".into() };
        let bytes = f.to_bytes();
        assert_eq!(&bytes[..4], b"QDSS");
        assert_eq!(u16::from_be_bytes([bytes[5], bytes[6]]), 128);
        assert_eq!(SignatureFile::from_bytes(&bytes).unwrap(), f);
        // Without trailer.
        let bare = SignatureFile::from_bytes(&bytes[..15 + 32]).unwrap();
        assert_eq!((bare.key_offset, bare.note.as_str()), (None, ""));
        assert!(SignatureFile::from_bytes(&bytes[..20]).is_err());
    }
}
