//! Finite-size decoy-state key lengths for a four-intensity BB84 link, and the raw-key
//! budget a single-bit signature scheme would need on the same data.
//!
//! The pipeline per link: Chernoff-type bounds turn each observed count into an expected
//! value, the decoy bounds give expected vacuum and single-photon counts, and those are
//! projected back to observed lower bounds before entering the key length.

use std::f64::consts::{LN_2, PI};
use std::fmt;
use std::path::Path;

use serde::Deserialize;

use crate::error::{Error, Result};
use crate::otuh::collision_bound;

/// The two-link dataset shipped with the crate.
pub const SAMPLE_DATASET: &str = include_str!("../data/two_links.toml");

/// Event counts of one link.
#[derive(Debug, Clone, Copy, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DecoyObservations {
    pub n_mu_z: u64,
    pub n_nu_z: u64,
    pub n_omega_z: u64,
    pub n_0_z: u64,
    pub n_mu_x: u64,
    pub n_nu_x: u64,
    pub n_omega_x: u64,
    pub n_0_x: u64,
    /// Bit errors counted for the phase estimate.
    pub m_omega_z: u64,
    /// Accumulation time in seconds.
    #[serde(rename = "Lambda")]
    pub lambda_s: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct DecoyIntensities {
    pub mu: f64,
    pub nu: f64,
    pub omega: f64,
    pub p_mu: f64,
    pub p_nu: f64,
    pub p_omega: f64,
    pub p_0: f64,
}

impl Default for DecoyIntensities {
    fn default() -> Self {
        DecoyIntensities { mu: 0.35, nu: 0.15, omega: 0.3, p_mu: 0.78, p_nu: 0.1, p_omega: 0.08, p_0: 0.04 }
    }
}

impl DecoyIntensities {
    pub fn validate(&self) -> Result<()> {
        if !(self.mu > self.nu && self.nu > 0.0 && self.omega > 0.0) {
            return Err(Error::arg(format!("need mu > nu > 0 and omega > 0, got {self:?}")));
        }
        let ps = [self.p_mu, self.p_nu, self.p_omega, self.p_0];
        if ps.iter().any(|&p| p <= 0.0) || (ps.iter().sum::<f64>() - 1.0).abs() > 1e-9 {
            return Err(Error::arg(format!("intensity probabilities must be positive and sum to 1: {ps:?}")));
        }
        Ok(())
    }
}

/// Logarithm used for the Chernoff parameter `beta = log(22 / eps_sec)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum BetaConvention {
    /// Base 2; reproduces the reference key lengths of the bundled dataset.
    #[default]
    Log2,
    Ln,
}

#[derive(Debug, Clone, Copy, PartialEq, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SecurityParams {
    pub eps_sec: f64,
    pub eps_cor: f64,
    #[serde(rename = "beta")]
    pub beta_convention: BetaConvention,
}

impl Default for SecurityParams {
    fn default() -> Self {
        SecurityParams { eps_sec: 1e-10, eps_cor: 1e-15, beta_convention: BetaConvention::Log2 }
    }
}

impl SecurityParams {
    pub fn validate(&self) -> Result<()> {
        for (name, e) in [("eps_sec", self.eps_sec), ("eps_cor", self.eps_cor)] {
            if !(e > 0.0 && e < 1.0) {
                return Err(Error::arg(format!("{name} = {e} outside (0, 1)")));
            }
        }
        Ok(())
    }

    pub fn beta(&self) -> f64 {
        let x = 22.0 / self.eps_sec;
        match self.beta_convention {
            BetaConvention::Log2 => x.log2(),
            BetaConvention::Ln => x.ln(),
        }
    }
}

/// `(upper, lower)` bounds on the expected value behind an observed count `x`.
/// The lower bound is floored at zero.
pub fn chernoff_expected_bounds(x: f64, beta: f64) -> (f64, f64) {
    let upper = x + beta + (2.0 * beta * x + beta * beta).sqrt();
    let lower = x - beta / 2.0 - (2.0 * beta * x + beta * beta / 4.0).sqrt();
    (upper, lower.max(0.0))
}

/// `(upper, lower)` bounds on the observed count given an expected value `x_star`.
pub fn observed_bounds_from_expected(x_star: f64, beta: f64) -> (f64, f64) {
    let x_star = x_star.max(0.0);
    let upper = x_star + beta / 2.0 + (2.0 * beta * x_star + beta * beta / 4.0).sqrt();
    let lower = x_star - (2.0 * beta * x_star).sqrt();
    (upper, lower.max(0.0))
}

fn upper_star(x: u64, beta: f64) -> f64 {
    chernoff_expected_bounds(x as f64, beta).0
}

fn lower_star(x: u64, beta: f64) -> f64 {
    chernoff_expected_bounds(x as f64, beta).1
}

fn lower_observed(x_star: f64, beta: f64) -> f64 {
    observed_bounds_from_expected(x_star, beta).1
}

/// Expected vacuum events in the Z basis.
pub fn s0_expected(obs: &DecoyObservations, int: &DecoyIntensities, beta: f64) -> f64 {
    ((-int.mu).exp() * int.p_mu + (-int.nu).exp() * int.p_nu) * lower_star(obs.n_0_z, beta) / int.p_0
}

/// Observed lower bound on vacuum events in the Z basis.
pub fn s0_bound(obs: &DecoyObservations, int: &DecoyIntensities, beta: f64) -> f64 {
    lower_observed(s0_expected(obs, int, beta), beta)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Basis {
    Z,
    X,
}

/// Expected single-photon events, floored at zero.
pub fn s1_expected(obs: &DecoyObservations, int: &DecoyIntensities, beta: f64, basis: Basis) -> Result<f64> {
    let (mu, nu) = (int.mu, int.nu);
    let denom = mu * nu - nu * nu;
    if denom <= 0.0 {
        return Err(Error::arg(format!("decoy bound needs mu > nu > 0, got mu = {mu}, nu = {nu}")));
    }
    let (prefactor, n_mu, n_nu, n_0) = match basis {
        Basis::Z => (
            (mu * mu * (-mu).exp() * int.p_mu + mu * nu * (-nu).exp() * int.p_nu) / denom,
            obs.n_mu_z,
            obs.n_nu_z,
            obs.n_0_z,
        ),
        Basis::X => (mu * int.omega * (-int.omega).exp() * int.p_omega / denom, obs.n_mu_x, obs.n_nu_x, obs.n_0_x),
    };
    let bracket = nu.exp() * lower_star(n_nu, beta) / int.p_nu
        - nu * nu / (mu * mu) * mu.exp() * upper_star(n_mu, beta) / int.p_mu
        - (mu * mu - nu * nu) / (mu * mu) * upper_star(n_0, beta) / int.p_0;
    Ok((prefactor * bracket).max(0.0))
}

/// Observed lower bound on single-photon events in `basis`.
pub fn s1_bound(obs: &DecoyObservations, int: &DecoyIntensities, beta: f64, basis: Basis) -> Result<f64> {
    Ok(lower_observed(s1_expected(obs, int, beta, basis)?, beta))
}

/// Deviation term for sampling without replacement: the phase error of `n` events
/// exceeds `lambda` (measured on `k` others) by more than this with probability at most
/// `eps`.
pub fn gamma_u(n: f64, k: f64, lambda: f64, eps: f64) -> Result<f64> {
    if !(n > 0.0 && k > 0.0 && lambda > 0.0 && lambda < 1.0 && eps > 0.0) {
        return Err(Error::NumericalDomain(format!("gamma_u({n}, {k}, {lambda}, {eps})")));
    }
    let a = n.max(k);
    let nk = n + k;
    let g = nk / (n * k) * (nk / (2.0 * PI * n * k * lambda * (1.0 - lambda) * eps * eps)).ln();
    // The tail bound is already below eps with no deviation.
    if g <= 0.0 {
        return Ok(0.0);
    }
    let num = (1.0 - 2.0 * lambda) * a * g / nk + (a * a * g * g / (nk * nk) + 4.0 * lambda * (1.0 - lambda) * g).sqrt();
    Ok(num / (2.0 + 2.0 * a * a * g / (nk * nk)))
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PhaseError {
    /// Single-photon events in the X basis (observed lower bound).
    pub s1x: f64,
    /// Vacuum errors in the X basis (observed lower bound).
    pub t0x: f64,
    /// Single-photon error rate measured in X.
    pub lambda: f64,
    pub gamma: f64,
    /// Upper bound on the Z-basis phase error rate.
    pub phi: f64,
}

/// Phase-error upper bound for the Z-basis single-photon events.
pub fn phase_error(obs: &DecoyObservations, int: &DecoyIntensities, sec: &SecurityParams) -> Result<PhaseError> {
    let beta = sec.beta();
    let s1z = s1_bound(obs, int, beta, Basis::Z)?;
    let s1x = s1_bound(obs, int, beta, Basis::X)?;
    if s1x <= 0.0 || s1z <= 0.0 {
        return Err(Error::NumericalDomain("no single-photon events survive the decoy bounds".into()));
    }
    let t0x_star = (-int.omega).exp() * int.p_omega / (2.0 * int.p_0) * lower_star(obs.n_0_x, beta);
    let t0x = lower_observed(t0x_star, beta);
    let lambda = (obs.m_omega_z as f64 - t0x) / s1x;
    if !(lambda > 0.0 && lambda <= 0.5) {
        return Err(Error::NumericalDomain(format!("measured single-photon error rate {lambda} outside (0, 0.5]")));
    }
    let gamma = gamma_u(s1z, s1x, lambda, sec.eps_sec / 22.0)?;
    Ok(PhaseError { s1x, t0x, lambda, gamma, phi: lambda + gamma })
}

fn entropy_capped(x: f64) -> f64 {
    if x >= 0.5 {
        1.0
    } else if x <= 0.0 {
        0.0
    } else {
        -x * x.log2() - (1.0 - x) * (1.0 - x).log2()
    }
}

/// Unclamped key length; may be negative.
pub fn key_length_raw(s0: f64, s1z: f64, phi: f64, lambda_ec: f64, sec: &SecurityParams) -> f64 {
    s0 + s1z * (1.0 - entropy_capped(phi)) - lambda_ec - (2.0 / sec.eps_cor).log2() - 6.0 * (22.0 / sec.eps_sec).log2()
}

/// Final key length, clamped at zero.
pub fn key_length(s0: f64, s1z: f64, phi: f64, lambda_ec: f64, sec: &SecurityParams) -> f64 {
    key_length_raw(s0, s1z, phi, lambda_ec, sec).max(0.0)
}

/// Error-correction leakage estimate `f n_Z h(E_Z)`, for what-if studies.
pub fn estimate_lambda_ec(f: f64, n_z: u64, e_z: f64) -> Result<f64> {
    if !(0.0..=0.5).contains(&e_z) || f < 1.0 {
        return Err(Error::arg(format!("need f >= 1 and E_Z in [0, 0.5], got f = {f}, E_Z = {e_z}")));
    }
    Ok(f * n_z as f64 * entropy_capped(e_z))
}

#[derive(Debug, Clone, PartialEq)]
pub struct FiniteKeyResult {
    pub s0: f64,
    pub s1z: f64,
    pub phase: PhaseError,
    pub lambda_ec: f64,
    /// Key length in bits, clamped at zero.
    pub ell: f64,
    pub clamped: bool,
    /// `ell / Lambda`, bits per second.
    pub rate: f64,
}

impl FiniteKeyResult {
    pub fn phi(&self) -> f64 {
        self.phase.phi
    }
}

pub fn analyze_link(
    obs: &DecoyObservations,
    lambda_ec: f64,
    int: &DecoyIntensities,
    sec: &SecurityParams,
) -> Result<FiniteKeyResult> {
    int.validate()?;
    sec.validate()?;
    if obs.lambda_s.is_nan() || obs.lambda_s <= 0.0 {
        return Err(Error::arg(format!("accumulation time {} s", obs.lambda_s)));
    }
    if lambda_ec.is_nan() || lambda_ec < 0.0 {
        return Err(Error::arg(format!("error-correction leakage {lambda_ec}")));
    }
    let beta = sec.beta();
    let s0 = s0_bound(obs, int, beta);
    let s1z = s1_bound(obs, int, beta, Basis::Z)?;
    let phase = phase_error(obs, int, sec)?;
    let raw = key_length_raw(s0, s1z, phase.phi, lambda_ec, sec);
    let ell = raw.max(0.0);
    Ok(FiniteKeyResult { s0, s1z, phase, lambda_ec, ell, clamped: raw < 0.0, rate: ell / obs.lambda_s })
}

/// Solves `h(p) = target` on `p <= 1/2` by bisection over `[1e-6, 1/2 - 1e-6]`.
pub fn solve_entropy_inverse(target: f64) -> Result<f64> {
    let (mut lo, mut hi) = (1e-6, 0.5 - 1e-6);
    if !(target > entropy_capped(lo) && target < entropy_capped(hi)) {
        return Err(Error::NumericalDomain(format!("h(p) = {target} has no root in (0, 0.5)")));
    }
    while hi - lo > 1e-15 {
        let mid = 0.5 * (lo + hi);
        if entropy_capped(mid) < target {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok(0.5 * (lo + hi))
}

/// Inputs of the single-bit signature comparison.
#[derive(Debug, Clone, Copy, PartialEq, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ComparisonParams {
    /// Upper bound on the signal bit error rate (worst link).
    #[serde(rename = "E_bar")]
    pub e_bar: f64,
    /// Target for each of honest abort, repudiation and forgery, per signed bit.
    pub eps_signature: f64,
    pub document_bits: u64,
    /// Hash length of the hashing-based scheme being compared against.
    pub hash_bits: u32,
}

impl Default for ComparisonParams {
    fn default() -> Self {
        ComparisonParams { e_bar: 0.0324, eps_signature: 1e-38, document_bits: 1_000_000, hash_bits: 128 }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SingleBitComparison {
    /// Per-link `p_e`, in link order.
    pub p_e_per_link: Vec<f64>,
    /// Minimum over links.
    pub p_e: f64,
    pub e_bar: f64,
    pub s_a: f64,
    pub s_v: f64,
    pub delta: f64,
    /// Raw key bits `2L` per signed bit.
    pub two_l: f64,
    /// Minimum over links of `n_mu_z / Lambda`.
    pub raw_key_rate: f64,
    pub keys_per_document: f64,
    pub single_bit_tps: f64,
    /// Minimum over links of the final key rate.
    pub hashed_key_rate: f64,
    pub hashed_keys_per_document: u64,
    pub hashed_tps: f64,
    pub improvement: f64,
    /// `log10` of the whole-document bound of the single-bit scheme.
    pub single_bit_security_log10: f64,
    pub hashed_security: f64,
}

/// `2 L` such that `2 exp(-delta^2 L) = eps`, with `ln(2/eps)` formed in the log domain.
pub fn required_two_l(delta: f64, eps: f64) -> Result<f64> {
    if !(delta > 0.0 && eps > 0.0 && eps < 1.0) {
        return Err(Error::arg(format!("need delta > 0 and eps in (0, 1), got {delta}, {eps}")));
    }
    Ok(2.0 * (LN_2 - eps.ln()) / (delta * delta))
}

pub fn single_bit_qds_analysis(
    links: &[(DecoyObservations, FiniteKeyResult)],
    cmp: &ComparisonParams,
) -> Result<SingleBitComparison> {
    if links.is_empty() {
        return Err(Error::arg("no links"));
    }
    let p_e_per_link = links
        .iter()
        .map(|(obs, r)| {
            let n = obs.n_mu_z as f64;
            solve_entropy_inverse(r.s0 / n + r.s1z / n * (1.0 - entropy_capped(r.phi())))
        })
        .collect::<Result<Vec<_>>>()?;
    let p_e = p_e_per_link.iter().copied().fold(f64::INFINITY, f64::min);
    let e_bar = cmp.e_bar;
    if !(e_bar >= 0.0 && e_bar < p_e) {
        return Err(Error::NumericalDomain(format!("E_bar = {e_bar} must be below p_e = {p_e}")));
    }
    let delta = (p_e - e_bar) / 3.0;
    let two_l = required_two_l(delta, cmp.eps_signature)?;
    let raw_key_rate = links.iter().map(|(o, _)| o.n_mu_z as f64 / o.lambda_s).fold(f64::INFINITY, f64::min);
    let keys_per_document = two_l * cmp.document_bits as f64;
    let single_bit_tps = raw_key_rate / keys_per_document;
    let hashed_key_rate = links.iter().map(|(_, r)| r.rate).fold(f64::INFINITY, f64::min);
    let hashed_keys_per_document = 3 * cmp.hash_bits as u64;
    let hashed_tps = hashed_key_rate / hashed_keys_per_document as f64;
    let hashed_security = collision_bound(cmp.document_bits as u128, cmp.hash_bits)?.epsilon_aut();
    Ok(SingleBitComparison {
        p_e_per_link,
        p_e,
        e_bar,
        s_a: e_bar + delta,
        s_v: e_bar + 2.0 * delta,
        delta,
        two_l,
        raw_key_rate,
        keys_per_document,
        single_bit_tps,
        hashed_key_rate,
        hashed_keys_per_document,
        hashed_tps,
        improvement: hashed_tps / single_bit_tps,
        single_bit_security_log10: (cmp.document_bits as f64).log10() + cmp.eps_signature.log10(),
        hashed_security,
    })
}

/// One link as read from a dataset.
#[derive(Debug, Clone, PartialEq, Deserialize)]
pub struct LinkRecord {
    #[serde(default)]
    pub name: String,
    #[serde(flatten)]
    pub obs: DecoyObservations,
    #[serde(rename = "lambda_EC")]
    pub lambda_ec: f64,
}

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Dataset {
    #[serde(default)]
    pub intensities: DecoyIntensities,
    #[serde(default)]
    pub security: SecurityParams,
    #[serde(default)]
    pub comparison: ComparisonParams,
    #[serde(rename = "link")]
    pub links: Vec<LinkRecord>,
}

impl Dataset {
    pub fn sample() -> Self {
        Dataset::from_toml(SAMPLE_DATASET).expect("bundled dataset parses")
    }

    pub fn from_toml(text: &str) -> Result<Self> {
        let d: Dataset = toml::from_str(text).map_err(|e| Error::Config(e.to_string()))?;
        d.check()?;
        Ok(d)
    }

    /// One row per link; header `name,n_mu_z,...,m_omega_z,Lambda,lambda_EC`. Intensity,
    /// security and comparison settings take their defaults.
    pub fn from_csv(text: &str) -> Result<Self> {
        let links = csv::Reader::from_reader(text.as_bytes())
            .deserialize::<CsvLink>()
            .map(|r| r.map(LinkRecord::from))
            .collect::<std::result::Result<Vec<_>, _>>()
            .map_err(|e| Error::format(e.to_string()))?;
        let d = Dataset {
            intensities: DecoyIntensities::default(),
            security: SecurityParams::default(),
            comparison: ComparisonParams::default(),
            links,
        };
        d.check()?;
        Ok(d)
    }

    /// Picks the format from the extension: `.csv` or anything else as TOML.
    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)?;
        if path.extension().is_some_and(|e| e.eq_ignore_ascii_case("csv")) {
            Dataset::from_csv(&text)
        } else {
            Dataset::from_toml(&text)
        }
    }

    fn check(&self) -> Result<()> {
        if self.links.is_empty() {
            return Err(Error::Config("dataset has no links".into()));
        }
        self.intensities.validate()?;
        self.security.validate()
    }

    pub fn analyze(&self) -> Result<Report> {
        let results = self
            .links
            .iter()
            .map(|l| analyze_link(&l.obs, l.lambda_ec, &self.intensities, &self.security))
            .collect::<Result<Vec<_>>>()?;
        let pairs: Vec<_> = self.links.iter().map(|l| l.obs).zip(results.iter().cloned()).collect();
        let comparison = single_bit_qds_analysis(&pairs, &self.comparison)?;
        Ok(Report {
            names: self.links.iter().map(|l| l.name.clone()).collect(),
            lambdas: self.links.iter().map(|l| l.obs.lambda_s).collect(),
            eps_sec: self.security.eps_sec,
            results,
            comparison,
            document_bits: self.comparison.document_bits,
        })
    }
}

// The csv crate cannot deserialize through `flatten`, so rows go through a flat struct.
#[derive(Deserialize)]
struct CsvLink {
    #[serde(default)]
    name: String,
    n_mu_z: u64,
    n_nu_z: u64,
    n_omega_z: u64,
    n_0_z: u64,
    n_mu_x: u64,
    n_nu_x: u64,
    n_omega_x: u64,
    n_0_x: u64,
    m_omega_z: u64,
    #[serde(rename = "Lambda")]
    lambda_s: f64,
    #[serde(rename = "lambda_EC")]
    lambda_ec: f64,
}

impl From<CsvLink> for LinkRecord {
    fn from(c: CsvLink) -> Self {
        LinkRecord {
            name: c.name,
            obs: DecoyObservations {
                n_mu_z: c.n_mu_z,
                n_nu_z: c.n_nu_z,
                n_omega_z: c.n_omega_z,
                n_0_z: c.n_0_z,
                n_mu_x: c.n_mu_x,
                n_nu_x: c.n_nu_x,
                n_omega_x: c.n_omega_x,
                n_0_x: c.n_0_x,
                m_omega_z: c.m_omega_z,
                lambda_s: c.lambda_s,
            },
            lambda_ec: c.lambda_ec,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Report {
    pub names: Vec<String>,
    pub lambdas: Vec<f64>,
    pub eps_sec: f64,
    pub results: Vec<FiniteKeyResult>,
    pub comparison: SingleBitComparison,
    pub document_bits: u64,
}

impl fmt::Display for Report {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let row = |f: &mut fmt::Formatter<'_>, label: &str, cells: Vec<String>| -> fmt::Result {
            write!(f, "{label:<14}")?;
            for c in cells {
                write!(f, "{c:>16}")?;
            }
            writeln!(f)
        };
        let rs = &self.results;
        row(f, "", self.names.clone())?;
        row(f, "R_QKD (bps)", rs.iter().map(|r| format!("{:.0}", r.rate)).collect())?;
        row(f, "Lambda (s)", self.lambdas.iter().map(|l| format!("{l}")).collect())?;
        row(f, "s_0^zz", rs.iter().map(|r| format!("{:.0}", r.s0)).collect())?;
        row(f, "s_1^zz", rs.iter().map(|r| format!("{:.0}", r.s1z)).collect())?;
        row(f, "lambda_EC", rs.iter().map(|r| format!("{:.0}", r.lambda_ec)).collect())?;
        row(f, "ell", rs.iter().map(|r| format!("{:.0}", r.ell)).collect())?;
        row(f, "phi_1^zz", rs.iter().map(|r| format!("{:.2}%", 100.0 * r.phi())).collect())?;
        row(f, "eps_sec", rs.iter().map(|_| format!("{:e}", self.eps_sec)).collect())?;
        let c = &self.comparison;
        writeln!(f)?;
        writeln!(
            f,
            "single-bit scheme: p_e = {:.2}%, s_v = {:.2}%, s_a = {:.2}%, E_bar = {:.2}%",
            100.0 * c.p_e,
            100.0 * c.s_v,
            100.0 * c.s_a,
            100.0 * c.e_bar
        )?;
        writeln!(f, "{:<34}{:>20}{:>20}", format!("document of {} bits", self.document_bits), "single-bit", "hashed")?;
        writeln!(f, "{:<34}{:>20.3e}{:>20}", "keys consumption (bit)", c.keys_per_document, c.hashed_keys_per_document)?;
        writeln!(f, "{:<34}{:>20.0}{:>20.0}", "valid keys per second (bit)", c.raw_key_rate, c.hashed_key_rate)?;
        writeln!(f, "{:<34}{:>20.3e}{:>20.3}", "signature rate (tps)", c.single_bit_tps, c.hashed_tps)?;
        writeln!(
            f,
            "{:<34}{:>20}{:>20.3e}",
            "security bound",
            format!("1e{:.0}", c.single_bit_security_log10),
            c.hashed_security
        )?;
        writeln!(f, "improvement: {:.3e}", c.improvement)
    }
}
