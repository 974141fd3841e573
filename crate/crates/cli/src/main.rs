//! `qds`: key pre-distribution, signing and verification of files, companion demos,
//! rate simulation, finite-key analysis and attack experiments.

use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context};
use clap::{Args, Parser, Subcommand, ValueEnum};

use qds_core::finitekey::Dataset;
use qds_core::keymgr::{
    link_pools, predistribute_via_qss, simulate_predistribution, KeyBundle, KeyPool, MacKeyMode,
    Party, Purpose, Role,
};
use qds_core::otuh::{collision_bound, mac_tag, mac_verify, AuthParams, OneTimeKey};
use qds_core::protocol::{
    bob_verify, charlie_verify, conference_key_establish, forgery_experiment, otp_decrypt, otp_encrypt,
    run_round_with, run_signature_round, secret_share_reconstruct, Harness, LinearityForger, RandomMisbehavior,
    SignatureFile, MACS_PER_ROUND,
};
use qds_core::gf2::sample_irreducible;
use qds_core::netharness::Passive;
use qds_core::ratesim::{self, Protocol, SimConfig};
use qds_core::{BitString, Document, Error, QdsRng, DEFAULT_HASH_BITS};

const EXIT_REJECT: u8 = 1;
const EXIT_ABORT: u8 = 2;
const EXIT_KEYS: u8 = 3;
const EXIT_RUNTIME: u8 = 4;
const EXIT_USAGE: u8 = 64;

const EXIT_CODES: &str = "Exit codes:
  0   success / signature accepted
  1   signature rejected
  2   protocol aborted (authentication failure)
  3   key material exhausted or reused
  4   runtime error (I/O, malformed files, numerical domain)
  64  usage error

QDS_SEED, when set, overrides --seed.";

#[derive(Parser, Debug)]
#[command(name = "qds", version, about = "One-time universal hashing quantum digital signatures", after_help = EXIT_CODES)]
struct Cli {
    /// Seed for every random choice; makes runs reproducible.
    #[arg(long, global = true)]
    seed: Option<u64>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Simulate key pre-distribution and write the key pools.
    Keygen(KeygenArgs),
    /// Sign a document in a full three-party round.
    Sign(SignArgs),
    /// Verify a signature as Bob or Charlie.
    Verify(VerifyArgs),
    /// Companion cryptographic tasks over the same key infrastructure.
    #[command(subcommand)]
    Demo(Demo),
    /// Optimized key and signature rates against distance.
    Simulate(SimulateArgs),
    /// Finite-key analysis of decoy-state link data.
    Analyze(AnalyzeArgs),
    /// Security experiments.
    Attack(AttackArgs),
}

#[derive(Args, Debug)]
struct KeygenArgs {
    /// Number of parties; only 3 is supported.
    #[arg(long, default_value_t = 3)]
    parties: u32,
    /// Total shared signing bits across the three pools (a multiple of 24).
    #[arg(long)]
    bits: u64,
    /// Hash length n.
    #[arg(long, default_value_t = DEFAULT_HASH_BITS)]
    n: usize,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args, Debug)]
struct SignArgs {
    #[arg(long)]
    doc: PathBuf,
    /// Directory written by `keygen`.
    #[arg(long)]
    keys: PathBuf,
    #[arg(long)]
    out: PathBuf,
    /// Where to write the round transcript (default: `--out` with its extension replaced by `.transcript`).
    #[arg(long)]
    transcript: Option<PathBuf>,
    /// Sign with the keys starting at this offset instead of the next unused ones.
    #[arg(long)]
    key_offset: Option<u64>,
}

#[derive(ValueEnum, Clone, Copy, Debug)]
enum Verifier {
    Bob,
    Charlie,
}

#[derive(Args, Debug)]
struct VerifyArgs {
    #[arg(long)]
    doc: PathBuf,
    #[arg(long)]
    sig: PathBuf,
    #[arg(long)]
    keys: PathBuf,
    #[arg(long = "as", value_enum, default_value_t = Verifier::Bob)]
    verifier: Verifier,
}

#[derive(Subcommand, Debug)]
enum Demo {
    /// One-time-pad a file between Alice and Bob.
    Encrypt {
        #[arg(long = "in")]
        input: PathBuf,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Alice shares a secret that Bob and Charlie can only open together.
    SecretShare {
        #[arg(long = "in")]
        input: PathBuf,
    },
    /// Establish a key common to all three parties.
    Conference {
        #[arg(long, default_value_t = 256)]
        bits: usize,
    },
}

#[derive(Args, Debug)]
struct SimulateArgs {
    /// Protocol id, or `all`.
    #[arg(long, default_value = "all")]
    protocol: String,
    /// TOML file with optional `[channel]` and `[grid]` sections.
    #[arg(long)]
    config: Option<PathBuf>,
    /// CSV output; a gnuplot script is written next to it.
    #[arg(long)]
    out: PathBuf,
    #[arg(long, default_value_t = DEFAULT_HASH_BITS)]
    n: usize,
}

#[derive(Args, Debug)]
struct AnalyzeArgs {
    /// Link data as TOML or CSV (default: the bundled two-link dataset).
    #[arg(long)]
    table1: Option<PathBuf>,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(ValueEnum, Clone, Copy, Debug)]
enum AttackMode {
    Forgery,
    Repudiation,
    MacTamper,
}

#[derive(Args, Debug)]
struct AttackArgs {
    #[arg(long, value_enum)]
    mode: AttackMode,
    #[arg(long, default_value_t = 10)]
    n: usize,
    /// Message length in bits.
    #[arg(long, default_value_t = 64)]
    m: usize,
    #[arg(long, default_value_t = 100_000)]
    trials: u64,
}

/// Failure carrying the exit code it maps to.
#[derive(Debug)]
struct Exit(u8, String);

impl std::fmt::Display for Exit {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(&self.1)
    }
}

impl std::error::Error for Exit {}

fn exit_code(err: &anyhow::Error) -> u8 {
    if let Some(Exit(code, _)) = err.downcast_ref::<Exit>() {
        return *code;
    }
    match err.chain().find_map(|e| e.downcast_ref::<Error>()) {
        Some(Error::InsufficientKey { .. } | Error::KeyReuse { .. } | Error::OneTimeViolation(_)) => EXIT_KEYS,
        Some(Error::AuthenticationFailed(_)) => EXIT_ABORT,
        Some(Error::InvalidArgument(_) | Error::Config(_)) => EXIT_USAGE,
        _ => EXIT_RUNTIME,
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { EXIT_USAGE } else { 0 });
        }
    };
    let seed = match std::env::var("QDS_SEED") {
        Ok(s) if !s.is_empty() => match s.parse() {
            Ok(v) => Some(v),
            Err(_) => {
                eprintln!("error: QDS_SEED={s:?} is not an unsigned integer");
                return ExitCode::from(EXIT_USAGE);
            }
        },
        _ => cli.seed,
    };
    let mut rng = seed.map_or_else(QdsRng::os, QdsRng::seeded);
    let result = match cli.command {
        Command::Keygen(a) => keygen(a, &mut rng),
        Command::Sign(a) => sign(a, &mut rng, seed),
        Command::Verify(a) => verify(a),
        Command::Demo(d) => demo(d, &mut rng),
        Command::Simulate(a) => simulate(a),
        Command::Analyze(a) => analyze(a),
        Command::Attack(a) => attack(a, &mut rng, seed),
    };
    match result {
        Ok(code) => ExitCode::from(code),
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(exit_code(&e))
        }
    }
}

fn usage(msg: impl Into<String>) -> anyhow::Error {
    Exit(EXIT_USAGE, msg.into()).into()
}

const POOL_FILES: [&str; 5] = ["alice.qdsk", "bob.qdsk", "charlie.qdsk", "link_bob.qdsk", "link_charlie.qdsk"];

/// Bits for the Bob–Charlie link: MAC parameters plus three tag pads per round.
fn link_bits(n: usize, rounds: usize) -> usize {
    let bits = n + 20 * n * (n - 1) + MACS_PER_ROUND * MacKeyMode::Pad.bits_per_message(n) * rounds;
    bits.div_ceil(8) * 8
}

fn keygen(a: KeygenArgs, rng: &mut QdsRng) -> anyhow::Result<u8> {
    if a.parties != 3 {
        return Err(usage(format!("--parties {}: the scheme has exactly three parties", a.parties)));
    }
    if a.n < 2 || a.n > u16::MAX as usize {
        return Err(usage(format!("--n {} out of range", a.n)));
    }
    if a.bits == 0 || !a.bits.is_multiple_of(24) {
        return Err(usage(format!("--bits {} must be a positive multiple of 24 (three byte-aligned pools)", a.bits)));
    }
    let per_party = (a.bits / 3) as usize;
    let rounds = per_party / (3 * a.n);
    let d = simulate_predistribution(per_party, a.n, rng)?;
    let link = rng.next_bits(link_bits(a.n, rounds))?;
    let (link_b, link_c) = link_pools(Party::BobCharlieLink, &link, a.n)?;
    fs::create_dir_all(&a.out).with_context(|| format!("creating {}", a.out.display()))?;
    let mut pools = [d.alice, d.bob, d.charlie, link_b, link_c];
    for (pool, name) in pools.iter_mut().zip(POOL_FILES) {
        pool.save(&a.out.join(name))?;
    }
    println!("n = {}, {per_party} signing bits per party, enough for {rounds} signature(s)", a.n);
    for (pool, name) in pools.iter().zip(POOL_FILES) {
        println!("  {name:<18} {:<16} {:>8} bits", pool.party().name(), pool.len());
    }
    Ok(0)
}

fn open_pools(dir: &Path) -> anyhow::Result<[KeyPool; 5]> {
    let open = |name: &str| KeyPool::open(&dir.join(name)).with_context(|| format!("opening {}", dir.join(name).display()));
    Ok([open(POOL_FILES[0])?, open(POOL_FILES[1])?, open(POOL_FILES[2])?, open(POOL_FILES[3])?, open(POOL_FILES[4])?])
}

fn read_document(path: &Path) -> anyhow::Result<Document> {
    let bytes = fs::read(path).with_context(|| format!("reading {}", path.display()))?;
    Document::new(bytes).map_err(|e| usage(format!("{}: {e}", path.display())))
}

fn sign(a: SignArgs, rng: &mut QdsRng, seed: Option<u64>) -> anyhow::Result<u8> {
    let doc = read_document(&a.doc)?;
    let [mut alice, mut bob, mut charlie, link_b, link_c] = open_pools(&a.keys)?;
    if let Some(off) = a.key_offset {
        for p in [&mut alice, &mut bob, &mut charlie] {
            p.skip_to(off)?;
        }
    }
    let offset = alice.consumed();
    let mut h = Harness::from_pools(alice, bob, charlie, (link_b, link_c), seed)?;
    let n = h.n();
    let out = run_signature_round(&mut h, &doc, rng)?;
    let file = SignatureFile { m: doc.m(), signature: out.signature.clone(), key_offset: Some(offset), note: String::new() };
    fs::write(&a.out, file.to_bytes()).with_context(|| format!("writing {}", a.out.display()))?;
    let tpath = a.transcript.unwrap_or_else(|| a.out.with_extension("transcript"));
    out.transcript.save(&tpath)?;

    let bound = collision_bound(doc.m() as u128, n as u32)?;
    println!("document: {} bits", doc.m());
    println!("signature: {}", out.signature.to_hex());
    println!("key bits consumed per party: {}", 3 * n);
    println!("MAC key bits on the Bob-Charlie link: {}", out.mac_bits);
    println!("forgery bound m/2^(n-1): {bound}");
    println!("Bob: {}", out.bob);
    match &out.charlie {
        Some(v) => println!("Charlie: {v}"),
        None => println!("Charlie: not asked"),
    }
    println!("transcript: {} (sha256 {})", tpath.display(), out.transcript.sha256_hex());
    let accepted = out.bob.accepted && out.charlie.as_ref().is_some_and(|v| v.accepted);
    Ok(if accepted { 0 } else { EXIT_REJECT })
}

fn verify(a: VerifyArgs) -> anyhow::Result<u8> {
    let doc = read_document(&a.doc)?;
    let bytes = fs::read(&a.sig).with_context(|| format!("reading {}", a.sig.display()))?;
    let file = SignatureFile::from_bytes(&bytes)?;
    let offset = file.key_offset.ok_or_else(|| Exit(EXIT_RUNTIME, "signature file has no key offset".into()))?;
    let n = file.signature.n();
    let [_, bob, charlie, _, _] = open_pools(&a.keys)?;
    if bob.n() != n || charlie.n() != n {
        return Err(usage(format!("pools use n = {}, signature has n = {n}", bob.n())));
    }
    let bundle = |pool: &KeyPool| -> anyhow::Result<KeyBundle> {
        let issued = pool.ledger().iter().any(|e| e.purpose == Purpose::Signature && e.offset == offset);
        if !issued {
            bail!(Exit(EXIT_RUNTIME, format!("{}: no signature keys were issued at offset {offset}", pool.party())));
        }
        let bits = pool.raw_stream().slice(offset as usize, 3 * n)?;
        Ok(KeyBundle::from_parts(bits.slice(0, n)?, bits.slice(n, 2 * n)?, Role::for_party(pool.party()), offset)?)
    };
    let (kb, kc) = (bundle(&bob)?, bundle(&charlie)?);
    let verdict = match a.verifier {
        Verifier::Bob => bob_verify(&file.signature, &doc, &kb, (kc.x(), kc.y()), Default::default())?,
        Verifier::Charlie => charlie_verify(&file.signature, &doc, (kb.x(), kb.y()), &kc, Default::default())?,
    };
    println!("{verdict}");
    Ok(if verdict.accepted { 0 } else { EXIT_REJECT })
}

fn preview(bytes: &[u8]) -> String {
    let shown: String = bytes.iter().take(24).map(|b| format!("{b:02x}")).collect();
    if bytes.len() > 24 {
        format!("{shown}... ({} bytes)", bytes.len())
    } else {
        shown
    }
}

fn demo(d: Demo, rng: &mut QdsRng) -> anyhow::Result<u8> {
    match d {
        Demo::Encrypt { input, out } => {
            let plain = fs::read(&input).with_context(|| format!("reading {}", input.display()))?;
            if plain.is_empty() {
                return Err(usage("nothing to encrypt"));
            }
            let stream = rng.next_bits(8 * plain.len())?;
            let (mut at_alice, mut at_bob) = link_pools(Party::AliceBobLink, &stream, DEFAULT_HASH_BITS)?;
            let cipher = otp_encrypt(&plain, OneTimeKey::new(at_alice.draw(Purpose::Otp, 8 * plain.len())?))?;
            let back = otp_decrypt(&cipher, OneTimeKey::new(at_bob.draw(Purpose::Otp, 8 * plain.len())?))?;
            println!("plaintext : {}", preview(&plain));
            println!("ciphertext: {}", preview(&cipher));
            println!("decrypted : {}", preview(&back));
            if let Some(out) = out {
                fs::write(&out, &cipher).with_context(|| format!("writing {}", out.display()))?;
            }
            if back != plain {
                bail!(Exit(EXIT_RUNTIME, "decryption mismatch".into()));
            }
            println!("Bob recovers the file: yes");
        }
        Demo::SecretShare { input } => {
            let secret = fs::read(&input).with_context(|| format!("reading {}", input.display()))?;
            if secret.is_empty() {
                return Err(usage("nothing to share"));
            }
            let len = 8 * secret.len();
            let dealer = rng.next_bits(len)?;
            let player_b = rng.next_bits(len)?;
            let mut d = predistribute_via_qss(&dealer, &player_b, DEFAULT_HASH_BITS)?;
            let pad = d.alice.draw(Purpose::SecretShare, len)?;
            let cipher = otp_encrypt(&secret, OneTimeKey::new(pad))?;
            let share_b = d.bob.draw(Purpose::SecretShare, len)?;
            let share_c = d.charlie.draw(Purpose::SecretShare, len)?;
            let alone = otp_decrypt(&cipher, OneTimeKey::new(share_b.clone()))?;
            let joint = otp_decrypt(&cipher, OneTimeKey::new(secret_share_reconstruct(&share_b, &share_c)?))?;
            println!("secret        : {}", preview(&secret));
            println!("broadcast     : {}", preview(&cipher));
            println!("Bob alone     : {}", preview(&alone));
            println!("Bob + Charlie : {}", preview(&joint));
            if joint != secret {
                bail!(Exit(EXIT_RUNTIME, "reconstruction mismatch".into()));
            }
            println!("recovered only jointly: {}", if alone != secret { "yes" } else { "no" });
        }
        Demo::Conference { bits } => {
            if bits == 0 || bits % 8 != 0 {
                return Err(usage("--bits must be a positive multiple of 8"));
            }
            let ab = rng.next_bits(bits)?;
            let ac = rng.next_bits(bits)?;
            let (mut a_ab, mut b_ab) = link_pools(Party::AliceBobLink, &ab, DEFAULT_HASH_BITS)?;
            let (mut a_ac, mut c_ac) = link_pools(Party::AliceCharlieLink, &ac, DEFAULT_HASH_BITS)?;
            let k = conference_key_establish(&mut a_ab, &mut a_ac, &mut b_ab, &mut c_ac, bits)?;
            println!("published : {}", preview(k.published.as_bytes()));
            println!("Alice     : {}", preview(k.alice.as_bytes()));
            println!("Bob       : {}", preview(k.bob.as_bytes()));
            println!("Charlie   : {}", preview(k.charlie.as_bytes()));
            if !(k.alice == k.bob && k.bob == k.charlie) {
                bail!(Exit(EXIT_RUNTIME, "conference keys differ".into()));
            }
            println!("all three hold the same {bits}-bit key: yes");
        }
    }
    Ok(0)
}

fn simulate(a: SimulateArgs) -> anyhow::Result<u8> {
    let protocols: Vec<Protocol> = if a.protocol == "all" {
        Protocol::ALL.to_vec()
    } else {
        vec![Protocol::from_id(&a.protocol).map_err(|e| usage(e.to_string()))?]
    };
    let cfg = match &a.config {
        Some(p) => SimConfig::from_toml(&fs::read_to_string(p).with_context(|| format!("reading {}", p.display()))?)?,
        None => SimConfig::default(),
    };
    if a.n == 0 {
        return Err(usage("--n must be positive"));
    }
    let dir = match a.out.parent() {
        Some(p) if !p.as_os_str().is_empty() => p.to_path_buf(),
        _ => PathBuf::from("."),
    };
    let stem = a.out.file_stem().and_then(|s| s.to_str()).ok_or_else(|| usage("--out needs a file name"))?;
    fs::create_dir_all(&dir).with_context(|| format!("creating {}", dir.display()))?;
    let results = ratesim::sweep_and_emit(&protocols, &cfg.channel, &cfg.grid, a.n, &dir, stem)?;
    println!("{:<10}{:>8}{:>14}{:>14}  params", "protocol", "L (km)", "bits/pulse", "tps");
    for r in &results {
        println!(
            "{:<10}{:>8}{:>14.4e}{:>14.4e}  {}",
            r.protocol.id(),
            r.distance_km,
            r.rate_per_pulse,
            r.tps(a.n),
            r.params_string()
        );
    }
    println!("wrote {} and {}", dir.join(format!("{stem}.csv")).display(), dir.join(format!("{stem}.gp")).display());
    Ok(0)
}

fn analyze(a: AnalyzeArgs) -> anyhow::Result<u8> {
    let data = match &a.table1 {
        Some(p) => Dataset::load(p).with_context(|| format!("loading {}", p.display()))?,
        None => Dataset::sample(),
    };
    let report = data.analyze()?.to_string();
    print!("{report}");
    if let Some(out) = a.out {
        fs::write(&out, &report).with_context(|| format!("writing {}", out.display()))?;
    }
    Ok(0)
}

fn attack(a: AttackArgs, rng: &mut QdsRng, seed: Option<u64>) -> anyhow::Result<u8> {
    if a.trials == 0 {
        return Err(usage("--trials must be positive"));
    }
    match a.mode {
        AttackMode::Forgery => {
            let forger = LinearityForger::new(a.n)?;
            let s = forgery_experiment(a.n, a.m, a.trials, &forger, rng.next_u64()?)?;
            println!("forgery by hash linearity: n = {}, m = {}, {} guesses per attempt", a.n, a.m, forger.guesses(a.m));
            println!("trials {}  successes {}  rate {:.3e}", s.trials, s.successes, s.rate);
            println!("bound m/2^(n-1) {:.3e}  (3 sigma margin {:.3e})", s.bound, 3.0 * s.sigma);
            println!("within bound: {}", if s.within_bound(3.0) { "yes" } else { "no" });
            Ok(if s.within_bound(3.0) { 0 } else { EXIT_REJECT })
        }
        AttackMode::Repudiation => {
            let rounds = a.trials as usize;
            let mut h = Harness::simulated(a.n, rounds, rng, seed)?;
            h.force_charlie = true;
            let doc = Document::new(vec![0x5a; a.m.div_ceil(8).max(1)])?;
            let (mut divergent, mut accepted) = (0u64, 0u64);
            for _ in 0..rounds {
                let out = run_round_with(&mut h, &doc, rng, &mut RandomMisbehavior, Box::new(Passive))?;
                let c = out.charlie.expect("forced Charlie verdict");
                divergent += (out.bob.accepted != c.accepted) as u64;
                accepted += out.bob.accepted as u64;
            }
            println!("repudiation: {rounds} rounds with a misbehaving signer, n = {}", a.n);
            println!("accepted by Bob {accepted}, divergent verdicts {divergent}");
            Ok(if divergent == 0 { 0 } else { EXIT_REJECT })
        }
        AttackMode::MacTamper => {
            if a.n < 2 || a.m == 0 {
                return Err(usage("need n >= 2 and m >= 1"));
            }
            let mut detected = 0u64;
            for _ in 0..a.trials {
                let (poly, _) = sample_irreducible(a.n, rng)?;
                let params = AuthParams::new(poly, rng.next_bits(a.n)?)?;
                let msg = rng.next_bits(a.m)?;
                let pad = rng.next_bits(a.n)?;
                let tag = mac_tag(&msg, &params, OneTimeKey::new(pad.clone()))?;
                let mut forged = msg.clone();
                let flips = 1 + rng.below(a.m as u64)? as usize;
                for _ in 0..flips {
                    forged.flip(rng.below(a.m as u64)? as usize);
                }
                let mut forged_tag: BitString = tag.clone();
                if forged == msg {
                    forged_tag.flip(0);
                }
                if !mac_verify(&forged, &forged_tag, &params, OneTimeKey::new(pad))? {
                    detected += 1;
                }
            }
            let eps = collision_bound(a.m as u128, a.n as u32)?.epsilon_aut();
            let rate = detected as f64 / a.trials as f64;
            println!("MAC tampering: n = {}, m = {}, {} trials", a.n, a.m, a.trials);
            println!("detected {detected}  rate {rate:.6}  required >= 1 - eps_aut = {:.6}", 1.0 - eps);
            Ok(if rate >= 1.0 - eps { 0 } else { EXIT_REJECT })
        }
    }
}
