//! Asymptotic key rates for the QKD and QSS protocols that can feed the signature
//! scheme, a grid optimizer, and conversion to signatures per second.
//!
//! Every `rate_*` function returns the raw formula value in bits per pulse, which may be
//! negative; [`evaluate`] clamps it to zero and flags the clamp. Upper bounds on error
//! rates that reach 1/2 are treated as carrying no information (`h = 1`), and decoy
//! lower bounds on yields are floored at zero, so that the optimizer cannot exploit
//! unphysical regions of the closed forms.

pub mod special;

use std::f64::consts::{E, PI};
use std::fmt;
use std::io::Write;
use std::path::Path;

use rayon::prelude::*;
use serde::Deserialize;

use crate::error::{Error, Result};
use special::{bessel_i0, erf, erfi};

/// Shannon entropy of a bit, `h(0) = h(1) = 0`.
pub fn binary_entropy(x: f64) -> Result<f64> {
    if !(0.0..=1.0).contains(&x) {
        return Err(Error::arg(format!("binary entropy undefined at {x}")));
    }
    if x == 0.0 || x == 1.0 {
        return Ok(0.0);
    }
    Ok(-x * x.log2() - (1.0 - x) * (1.0 - x).log2())
}

/// Entropy of an error-rate upper bound: anything at or past 1/2 is a coin flip.
fn h_bound(e: f64) -> f64 {
    if e.is_nan() || e >= 0.5 {
        1.0
    } else if e <= 0.0 {
        0.0
    } else {
        -e * e.log2() - (1.0 - e) * (1.0 - e).log2()
    }
}

/// Signatures per second: each one consumes `3n` key bits.
pub fn signature_rate(rate_per_second: f64, n: usize) -> f64 {
    rate_per_second / (3 * n) as f64
}

/// Channel and device parameters, plus the protocol-specific constants.
#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ChannelModel {
    /// Detector efficiency.
    pub eta_d: f64,
    /// Dark count probability per gate.
    pub p_d: f64,
    /// Misalignment error.
    pub e_d: f64,
    /// Fiber attenuation, dB/km.
    pub alpha: f64,
    /// Error-correction inefficiency.
    pub f: f64,
    /// Pulses per second.
    pub clock: f64,
    /// SNS-TF phase slice width.
    pub delta: f64,
    /// PM phase-slice count `D`.
    pub pm_slices: f64,
    /// Error-correction inefficiency used by DPS QSS.
    pub f_dps: f64,
    pub cv_beta: f64,
    /// Homodyne detection efficiency for CV.
    pub cv_eta: f64,
    pub cv_v_el: f64,
    pub cv_xi: f64,
}

impl Default for ChannelModel {
    fn default() -> Self {
        ChannelModel {
            eta_d: 0.85,
            p_d: 1e-8,
            e_d: 0.02,
            alpha: 0.167,
            f: 1.1,
            clock: 1e9,
            delta: PI / 16.0,
            pm_slices: 16.0,
            f_dps: 1.16,
            cv_beta: 0.95,
            cv_eta: 0.85,
            cv_v_el: 0.0,
            cv_xi: 0.01,
        }
    }
}

impl ChannelModel {
    pub fn validate(&self) -> Result<()> {
        let checks = [
            (self.eta_d > 0.0 && self.eta_d <= 1.0, "eta_d must be in (0, 1]"),
            ((0.0..1.0).contains(&self.p_d), "p_d must be in [0, 1)"),
            ((0.0..0.5).contains(&self.e_d), "e_d must be in [0, 0.5)"),
            (self.alpha > 0.0, "alpha must be positive"),
            (self.f >= 1.0 && self.f_dps >= 1.0, "f must be at least 1"),
            (self.clock > 0.0, "clock must be positive"),
            (self.delta > 0.0 && self.delta <= 2.0 * PI, "delta must be in (0, 2 pi]"),
            (self.pm_slices >= 2.0, "pm_slices must be at least 2"),
            (self.cv_beta > 0.0 && self.cv_beta <= 1.0, "cv_beta must be in (0, 1]"),
            (self.cv_eta > 0.0 && self.cv_eta <= 1.0, "cv_eta must be in (0, 1]"),
            (self.cv_v_el >= 0.0 && self.cv_xi >= 0.0, "CV noise terms must be non-negative"),
        ];
        match checks.iter().find(|(ok, _)| !ok) {
            Some((_, msg)) => Err(Error::Config(msg.to_string())),
            None => Ok(()),
        }
    }

    /// `10^(-alpha L / 10)`.
    fn loss(&self, l_km: f64) -> f64 {
        10f64.powf(-self.alpha * l_km / 10.0)
    }
}

fn check_distance(l_km: f64) -> Result<()> {
    if l_km.is_finite() && l_km >= 0.0 {
        Ok(())
    } else {
        Err(Error::arg(format!("distance {l_km} km")))
    }
}

fn check_decoys(mu: f64, nu: f64) -> Result<()> {
    if nu > 0.0 && nu < mu && mu.is_finite() {
        Ok(())
    } else {
        Err(Error::arg(format!("need 0 < nu < mu, got mu = {mu}, nu = {nu}")))
    }
}

/// Intermediate quantities of the SNS-TF rate, for diagnostics.
#[derive(Debug, Clone, Copy)]
pub struct SnsTerms {
    pub y1: f64,
    pub e1: f64,
    pub q_z: f64,
    pub e_z: f64,
    pub q_c: f64,
    pub q_e: f64,
}

/// Sending-or-not-sending twin-field QKD.
pub fn rate_sns_tf(ch: &ChannelModel, l_km: f64, mu: f64, nu: f64, t: f64) -> Result<f64> {
    Ok(sns_tf_terms(ch, l_km, mu, nu, t)?.0)
}

pub fn sns_tf_terms(ch: &ChannelModel, l_km: f64, mu: f64, nu: f64, t: f64) -> Result<(f64, SnsTerms)> {
    check_distance(l_km)?;
    check_decoys(mu, nu)?;
    if !(t > 0.0 && t < 1.0) {
        return Err(Error::arg(format!("sending probability {t} outside (0, 1)")));
    }
    let pd = ch.p_d;
    let sqrt_eta = ch.eta_d * ch.loss(l_km).sqrt();
    let gain = |ka: f64, kb: f64| {
        let damp = (-(ka + kb) / 2.0 * sqrt_eta).exp();
        2.0 * (1.0 - pd) * damp * (bessel_i0((ka * kb).sqrt() * sqrt_eta) - (1.0 - pd) * damp)
    };
    let q00 = gain(0.0, 0.0);
    let qn0 = gain(nu, 0.0);
    let qm0 = gain(mu, 0.0);
    let qmm = gain(mu, mu);

    let a = nu * sqrt_eta;
    let arg = (a / 2.0).sqrt() * ch.delta;
    let pre = (1.0 - pd) / ch.delta * (PI / (2.0 * a)).sqrt();
    let background = (1.0 - pd).powi(2) * (-2.0 * a).exp();
    let q_c = pre * erf(arg) - background;
    let q_e = pre * (-2.0 * a).exp() * erfi(arg) - background;
    let q_pm = q_c + q_e;
    let e_pm = (ch.e_d * q_c + (1.0 - ch.e_d) * q_e) / q_pm;

    let y1 = (mu / 2.0 / (mu * nu - nu * nu)
        * (nu.exp() * 2.0 * qn0 - nu * nu / (mu * mu) * mu.exp() * 2.0 * qm0 - 2.0 * (mu * mu - nu * nu) / (mu * mu) * q00))
        .max(0.0);
    let e1 = if y1 > 0.0 { ((2.0 * nu).exp() * e_pm * q_pm - q00 / 2.0) / (2.0 * nu * y1) } else { 0.5 };
    let s = 1.0 - t;
    let q_z = s * s * q00 + 2.0 * t * s * qm0 + t * t * qmm;
    let e_z = (s * s * q00 + t * t * qmm) / (s * s * q00 + t * s * 2.0 * qm0 + t * t * qmm);
    let rate = 2.0 * t * s * mu * (-mu).exp() * y1 * (1.0 - h_bound(e1)) - q_z * ch.f * h_bound(e_z);
    Ok((rate, SnsTerms { y1, e1, q_z, e_z, q_c, q_e }))
}

/// Phase-matching QKD. Returns the rate and `q_1`.
pub fn pm_terms(ch: &ChannelModel, l_km: f64, mu: f64, nu: f64) -> Result<(f64, f64)> {
    check_distance(l_km)?;
    check_decoys(mu, nu)?;
    let eta = ch.eta_d * 10f64.powf(-ch.alpha * l_km / 20.0);
    let gain = |k: f64| 1.0 - (1.0 - 2.0 * ch.p_d) * (-k * eta).exp();
    let (q_mu, q_nu, q_0) = (gain(mu), gain(nu), gain(0.0));
    let y1 = (mu / (mu * nu - nu * nu)
        * (q_nu * nu.exp() - q_mu * mu.exp() * nu * nu / (mu * mu) - (mu * mu - nu * nu) / (mu * mu) * q_0))
        .max(0.0);
    let q1 = (mu * (-mu).exp() * y1 / q_mu).min(1.0);
    let e_delta = (PI / ch.pm_slices).sin().powi(2);
    let e_b = (ch.p_d + eta * mu * (e_delta + ch.e_d)) * (-eta * mu).exp() / q_mu;
    let e_ph = 1.0 - q1;
    let rate = 2.0 / ch.pm_slices * q_mu * (1.0 - h_bound(e_ph) - ch.f * h_bound(e_b));
    Ok((rate, q1))
}

pub fn rate_pm(ch: &ChannelModel, l_km: f64, mu: f64, nu: f64) -> Result<f64> {
    Ok(pm_terms(ch, l_km, mu, nu)?.0)
}

/// `G(x) = (x+1) log2(x+1) - x log2 x`.
pub fn holevo_g(x: f64) -> f64 {
    if x <= 0.0 {
        return 0.0;
    }
    (x + 1.0) * (x + 1.0).log2() - x * x.log2()
}

/// Tolerance below 1 accepted for symplectic eigenvalues.
pub const EIGENVALUE_TOLERANCE: f64 = 1e-9;

/// Gaussian-modulated CV QKD with reverse reconciliation. Returns the rate and the
/// four symplectic eigenvalues.
pub fn cv_gauss_terms(ch: &ChannelModel, l_km: f64, v: f64) -> Result<(f64, [f64; 4])> {
    check_distance(l_km)?;
    if v <= 1.0 || !v.is_finite() {
        return Err(Error::arg(format!("variance V = {v} must exceed 1")));
    }
    let t = ch.loss(l_km);
    let chi_line = 1.0 / t - 1.0 + ch.cv_xi;
    let chi_hom = (1.0 + ch.cv_v_el) / ch.cv_eta - 1.0;
    let chi_tot = chi_line + chi_hom / t;
    let i_ab = 0.5 * ((v + chi_tot) / (1.0 + chi_tot)).log2();

    let a = v * v * (1.0 - 2.0 * t) + 2.0 * t + t * t * (v + chi_line).powi(2);
    let b = (t * (v * chi_line + 1.0)).powi(2);
    let c = (v * b.sqrt() + t * (v + chi_line) + a * chi_hom) / (t * (v + chi_tot));
    let d = b.sqrt() * (v + b.sqrt() * chi_hom) / (t * (v + chi_tot));
    let pair = |s: f64, p: f64| -> Result<(f64, f64)> {
        let disc = s * s - 4.0 * p;
        if disc < -1e-12 * s * s {
            return Err(Error::NumericalDomain(format!("complex symplectic eigenvalues at L = {l_km}")));
        }
        let r = disc.max(0.0).sqrt();
        Ok((((s + r) / 2.0).sqrt(), ((s - r) / 2.0).max(0.0).sqrt()))
    };
    let (l1, l2) = pair(a, b)?;
    let (l3, l4) = pair(c, d)?;
    let lambdas = [l1, l2, l3, l4];
    if let Some(bad) = lambdas.iter().find(|&&l| l < 1.0 - EIGENVALUE_TOLERANCE) {
        return Err(Error::NumericalDomain(format!("symplectic eigenvalue {bad} < 1 at L = {l_km}, V = {v}")));
    }
    let g = |l: f64| holevo_g((l - 1.0) / 2.0);
    let chi_be = g(l1) + g(l2) - g(l3) - g(l4);
    Ok((ch.cv_beta * i_ab - chi_be, lambdas))
}

pub fn rate_cv_gauss(ch: &ChannelModel, l_km: f64, v: f64) -> Result<f64> {
    Ok(cv_gauss_terms(ch, l_km, v)?.0)
}

/// Idealized MDI QKD: `eta^2 / (2 e^2)`.
pub fn rate_mdi(ch: &ChannelModel, l_km: f64) -> Result<f64> {
    check_distance(l_km)?;
    let eta = ch.eta_d * 10f64.powf(-ch.alpha * l_km / 20.0);
    Ok(eta * eta / (2.0 * E * E))
}

/// Prepare-and-measure QSS, loss only: `eta^2`.
pub fn rate_qss_pm(ch: &ChannelModel, l_km: f64) -> Result<f64> {
    check_distance(l_km)?;
    let eta = ch.eta_d * ch.loss(l_km);
    Ok(eta * eta)
}

/// MDI QSS with postselected GHZ states: `eta_d eta^2 / 4`.
pub fn rate_qss_mdi(ch: &ChannelModel, l_km: f64) -> Result<f64> {
    check_distance(l_km)?;
    let eta = ch.eta_d * ch.loss(l_km);
    Ok(ch.eta_d * eta * eta / 4.0)
}

/// `P(n > n_th)` for a Poisson photon number of mean `mu`, summed over the tail
/// directly to avoid cancellation.
pub fn poisson_tail(mu: f64, n_th: u32) -> f64 {
    let mut term = (-mu).exp();
    for n in 1..=n_th {
        term *= mu / n as f64;
    }
    let mut sum = 0.0;
    let mut n = n_th + 1;
    loop {
        term *= mu / n as f64;
        sum += term;
        if term <= sum * 1e-17 || term == 0.0 {
            return sum;
        }
        n += 1;
    }
}

/// Round-robin QSS with a twin field. Returns the rate and the phase-error bound.
pub fn qss_rr_terms(ch: &ChannelModel, l_km: f64, mu: f64, d: u32, n_th: u32) -> Result<(f64, f64)> {
    check_distance(l_km)?;
    if d < 2 || mu <= 0.0 {
        return Err(Error::arg(format!("need d >= 2 and mu > 0, got d = {d}, mu = {mu}")));
    }
    let df = d as f64;
    let eta = ch.eta_d * ch.loss(l_km);
    let decay = (-2.0 * mu * eta).exp();
    let click = 1.0 - (1.0 - df * ch.p_d) * decay;
    let q = 0.5 * click;
    let e_b = (ch.e_d * (1.0 - decay) + df * ch.p_d * decay / 2.0) / click;
    let q_hat = q / 2.0;
    let e_src = poisson_tail(mu, n_th);
    // Past this point the bound is no longer a mixture of the two error sources.
    if e_src >= q_hat {
        return Ok((0.0, 1.0));
    }
    let e_p = e_src / q_hat + (1.0 - e_src / q_hat) * n_th as f64 / (df - 1.0);
    if e_p >= 0.5 {
        return Ok((0.0, e_p));
    }
    Ok(((q_hat * (1.0 - h_bound(e_p)) - q * ch.f * h_bound(e_b)) / df, e_p))
}

pub fn rate_qss_rr(ch: &ChannelModel, l_km: f64, mu: f64, d: u32, n_th: u32) -> Result<f64> {
    Ok(qss_rr_terms(ch, l_km, mu, d, n_th)?.0)
}

/// Single-qubit QSS over the full `2L` path.
pub fn rate_qss_sq(ch: &ChannelModel, l_km: f64, mu: f64) -> Result<f64> {
    check_distance(l_km)?;
    if mu <= 0.0 {
        return Err(Error::arg("mu must be positive"));
    }
    let eta = ch.eta_d * ch.loss(2.0 * l_km);
    let q1 = mu * (-mu).exp() * (2.0 * ch.p_d + eta - 2.0 * ch.p_d * eta);
    let e = ch.p_d * (1.0 - 2.0 * ch.e_d) / q1 + ch.e_d;
    Ok(q1 * (1.0 - h_bound(e) - ch.f * h_bound(e)))
}

/// Gain and error rate of DPS QSS.
pub fn qss_dps_gain_error(ch: &ChannelModel, l_km: f64, mu: f64) -> (f64, f64) {
    let eta = ch.eta_d * ch.loss(l_km);
    let decay = (-mu * eta).exp();
    let q = 1.0 - (1.0 - 2.0 * ch.p_d) * decay;
    let e = (ch.e_d * q + (0.5 - ch.e_d) * 2.0 * ch.p_d * decay) / q;
    (q, e)
}

/// Differential-phase-shift QSS under individual attacks.
pub fn rate_qss_dps(ch: &ChannelModel, l_km: f64, mu: f64) -> Result<f64> {
    check_distance(l_km)?;
    if mu <= 0.0 {
        return Err(Error::arg("mu must be positive"));
    }
    let (q, e) = qss_dps_gain_error(ch, l_km, mu);
    if e >= 0.5 {
        return Ok(0.0);
    }
    // The collision probability of a bit is at least 1/2; the closed form drops below
    // that once e > 6/19 and would otherwise report a growing secret fraction.
    let p_co = (1.0 - e * e - (1.0 - 6.0 * e).powi(2) / 2.0).clamp(0.5, 1.0);
    Ok(q * (-(1.0 - 2.0 * mu) * p_co.log2() - ch.f_dps * h_bound(e)))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Protocol {
    SnsTf,
    Pm,
    CvGauss,
    Mdi,
    QssPm,
    QssMdi,
    QssRr,
    QssSq,
    QssDps,
}

impl Protocol {
    pub const ALL: [Protocol; 9] = [
        Protocol::SnsTf,
        Protocol::Pm,
        Protocol::CvGauss,
        Protocol::Mdi,
        Protocol::QssPm,
        Protocol::QssMdi,
        Protocol::QssRr,
        Protocol::QssSq,
        Protocol::QssDps,
    ];

    pub fn id(self) -> &'static str {
        match self {
            Protocol::SnsTf => "sns-tf",
            Protocol::Pm => "pm",
            Protocol::CvGauss => "cv-gauss",
            Protocol::Mdi => "mdi",
            Protocol::QssPm => "qss-pm",
            Protocol::QssMdi => "qss-mdi",
            Protocol::QssRr => "qss-rr",
            Protocol::QssSq => "qss-sq",
            Protocol::QssDps => "qss-dps",
        }
    }

    pub fn from_id(id: &str) -> Result<Self> {
        Protocol::ALL
            .into_iter()
            .find(|p| p.id() == id)
            .ok_or_else(|| Error::arg(format!("unknown protocol {id:?}")))
    }

    /// Key distribution (as opposed to secret sharing).
    pub fn is_qkd(self) -> bool {
        matches!(self, Protocol::SnsTf | Protocol::Pm | Protocol::CvGauss | Protocol::Mdi)
    }

    /// Search space for the optimizer.
    pub fn dims(self, grid: &GridConfig) -> Vec<Dim> {
        let c = grid.coarse_step;
        let intensity = |name, hi| Dim::continuous(name, 0.01, hi, c);
        match self {
            Protocol::SnsTf => vec![intensity("mu", 1.0), intensity("nu", 1.0), Dim::continuous("t", 0.01, 0.99, c)],
            Protocol::Pm => vec![intensity("mu", 3.0), intensity("nu", 3.0)],
            Protocol::CvGauss => vec![Dim { name: "V", lo: 1.5, hi: 100.0, coarse: 0.5, integer: false }],
            Protocol::Mdi | Protocol::QssPm | Protocol::QssMdi => vec![],
            Protocol::QssRr => vec![
                intensity("mu", 1.0),
                Dim::integer("d", 2.0, grid.rr_max_d as f64),
                Dim::integer("n_th", 0.0, grid.rr_max_n_th as f64),
            ],
            Protocol::QssSq => vec![intensity("mu", 2.0)],
            Protocol::QssDps => vec![intensity("mu", 0.49)],
        }
    }

    /// Raw rate at `args` (in [`dims`](Self::dims) order). Invalid argument
    /// combinations such as `nu >= mu` are errors.
    pub fn raw_rate(self, ch: &ChannelModel, l_km: f64, args: &[f64]) -> Result<f64> {
        let need = |k: usize| {
            if args.len() == k {
                Ok(())
            } else {
                Err(Error::arg(format!("{} takes {k} parameters, got {}", self.id(), args.len())))
            }
        };
        match self {
            Protocol::SnsTf => need(3).and_then(|_| rate_sns_tf(ch, l_km, args[0], args[1], args[2])),
            Protocol::Pm => need(2).and_then(|_| rate_pm(ch, l_km, args[0], args[1])),
            Protocol::CvGauss => need(1).and_then(|_| rate_cv_gauss(ch, l_km, args[0])),
            Protocol::Mdi => need(0).and_then(|_| rate_mdi(ch, l_km)),
            Protocol::QssPm => need(0).and_then(|_| rate_qss_pm(ch, l_km)),
            Protocol::QssMdi => need(0).and_then(|_| rate_qss_mdi(ch, l_km)),
            Protocol::QssRr => need(3).and_then(|_| rate_qss_rr(ch, l_km, args[0], args[1] as u32, args[2] as u32)),
            Protocol::QssSq => need(1).and_then(|_| rate_qss_sq(ch, l_km, args[0])),
            Protocol::QssDps => need(1).and_then(|_| rate_qss_dps(ch, l_km, args[0])),
        }
    }
}

impl fmt::Display for Protocol {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.id())
    }
}

/// One optimizer coordinate.
#[derive(Debug, Clone, PartialEq)]
pub struct Dim {
    pub name: &'static str,
    pub lo: f64,
    pub hi: f64,
    /// Coarse step; integer dimensions are always enumerated with step 1.
    pub coarse: f64,
    pub integer: bool,
}

impl Dim {
    fn continuous(name: &'static str, lo: f64, hi: f64, coarse: f64) -> Self {
        Dim { name, lo, hi, coarse, integer: false }
    }

    fn integer(name: &'static str, lo: f64, hi: f64) -> Self {
        Dim { name, lo, hi, coarse: 1.0, integer: true }
    }
}

/// Points `lo, lo + step, ...` up to `hi`, computed by index to avoid drift.
fn grid_points(lo: f64, hi: f64, step: f64) -> Vec<f64> {
    let count = ((hi - lo) / step + 1e-9).floor() as usize + 1;
    (0..count).map(|k| ((lo + k as f64 * step) * 1e9).round() / 1e9).collect()
}

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct GridConfig {
    pub coarse_step: f64,
    pub fine_step: f64,
    pub rr_max_d: u32,
    pub rr_max_n_th: u32,
    pub l_min: f64,
    pub l_max: f64,
    pub l_step: f64,
}

impl Default for GridConfig {
    fn default() -> Self {
        GridConfig { coarse_step: 0.05, fine_step: 0.01, rr_max_d: 128, rr_max_n_th: 20, l_min: 0.0, l_max: 500.0, l_step: 10.0 }
    }
}

impl GridConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.fine_step > 0.0 && self.coarse_step >= self.fine_step) {
            return Err(Error::Config("need 0 < fine_step <= coarse_step".into()));
        }
        if !(self.l_step > 0.0 && self.l_min >= 0.0 && self.l_max >= self.l_min) {
            return Err(Error::Config("distance grid must satisfy 0 <= l_min <= l_max, l_step > 0".into()));
        }
        if self.rr_max_d < 2 {
            return Err(Error::Config("rr_max_d must be at least 2".into()));
        }
        Ok(())
    }

    pub fn distances(&self) -> Vec<f64> {
        grid_points(self.l_min, self.l_max, self.l_step)
    }
}

/// `[channel]` and `[grid]` sections of a simulation config file.
#[derive(Debug, Clone, PartialEq, Default, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SimConfig {
    pub channel: ChannelModel,
    pub grid: GridConfig,
}

impl SimConfig {
    pub fn from_toml(text: &str) -> Result<Self> {
        let c: SimConfig = toml::from_str(text).map_err(|e| Error::Config(e.to_string()))?;
        c.channel.validate()?;
        c.grid.validate()?;
        Ok(c)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RateResult {
    pub protocol: Protocol,
    pub distance_km: f64,
    /// Bits per pulse, at least zero.
    pub rate_per_pulse: f64,
    pub rate_per_second: f64,
    /// The formula was negative and has been clamped.
    pub clamped: bool,
    pub params: Vec<(&'static str, f64)>,
}

impl RateResult {
    pub fn tps(&self, n: usize) -> f64 {
        signature_rate(self.rate_per_second, n)
    }

    /// `name=value` pairs joined with `;`.
    pub fn params_string(&self) -> String {
        self.params.iter().map(|(k, v)| format!("{k}={v}")).collect::<Vec<_>>().join(";")
    }
}

/// Clamped rate at explicit parameters.
pub fn evaluate(protocol: Protocol, ch: &ChannelModel, l_km: f64, args: &[f64], grid: &GridConfig) -> Result<RateResult> {
    ch.validate()?;
    let raw = protocol.raw_rate(ch, l_km, args)?;
    let dims = protocol.dims(grid);
    Ok(RateResult {
        protocol,
        distance_km: l_km,
        rate_per_pulse: raw.max(0.0),
        rate_per_second: raw.max(0.0) * ch.clock,
        clamped: raw < 0.0,
        params: dims.iter().map(|d| d.name).zip(args.iter().copied()).collect(),
    })
}

/// Strictly better, or equal and lexicographically smaller arguments.
fn improves(value: f64, args: &[f64], best: &Option<(f64, Vec<f64>)>) -> bool {
    match best {
        None => true,
        Some((bv, ba)) => value > *bv || (value == *bv && args.partial_cmp(ba.as_slice()) == Some(std::cmp::Ordering::Less)),
    }
}

fn scan(
    protocol: Protocol,
    ch: &ChannelModel,
    l_km: f64,
    axes: &[Vec<f64>],
    best: &mut Option<(f64, Vec<f64>)>,
) {
    let total: usize = axes.iter().map(Vec::len).product();
    let mut args = vec![0.0; axes.len()];
    for flat in 0..total {
        let mut rem = flat;
        for (i, axis) in axes.iter().enumerate().rev() {
            args[i] = axis[rem % axis.len()];
            rem /= axis.len();
        }
        // Invalid combinations (e.g. nu >= mu) are skipped.
        if let Ok(v) = protocol.raw_rate(ch, l_km, &args) {
            if v.is_finite() && improves(v, &args, best) {
                *best = Some((v, args.clone()));
            }
        }
    }
}

/// Coarse grid over every coordinate, then a fine grid of `fine_step` within one
/// coarse step of the coarse optimum. Integer coordinates are enumerated exhaustively
/// and held at their coarse optimum during refinement. Ties go to the
/// lexicographically smallest argument tuple.
pub fn optimize(protocol: Protocol, ch: &ChannelModel, l_km: f64, grid: &GridConfig) -> Result<RateResult> {
    ch.validate()?;
    grid.validate()?;
    check_distance(l_km)?;
    let dims = protocol.dims(grid);
    let coarse: Vec<Vec<f64>> = dims.iter().map(|d| grid_points(d.lo, d.hi, d.coarse)).collect();
    let mut best = None;
    scan(protocol, ch, l_km, &coarse, &mut best);
    let (_, center) = best.clone().ok_or_else(|| Error::NumericalDomain(format!("{protocol}: no valid grid point")))?;
    let fine: Vec<Vec<f64>> = dims
        .iter()
        .zip(&center)
        .map(|(d, &c)| {
            if d.integer {
                vec![c]
            } else {
                let lo = (c - d.coarse).max(d.lo);
                let hi = (c + d.coarse).min(d.hi);
                grid_points(lo, hi, grid.fine_step)
            }
        })
        .collect();
    scan(protocol, ch, l_km, &fine, &mut best);
    let (_, args) = best.expect("coarse scan found a point");
    evaluate(protocol, ch, l_km, &args, grid)
}

/// Optimized rates over the distance grid.
///
/// Each distance is optimized independently, then every distance is re-evaluated at
/// the union of all optima found and keeps the best. For parameters whose rate does
/// not grow with distance this makes the curve non-increasing by construction.
pub fn sweep(protocol: Protocol, ch: &ChannelModel, grid: &GridConfig) -> Result<Vec<RateResult>> {
    let distances = grid.distances();
    let first: Vec<RateResult> =
        distances.par_iter().map(|&l| optimize(protocol, ch, l, grid)).collect::<Result<Vec<_>>>()?;
    let mut candidates: Vec<Vec<f64>> = first.iter().map(|r| r.params.iter().map(|p| p.1).collect()).collect();
    candidates.sort_by(|a, b| a.partial_cmp(b).unwrap());
    candidates.dedup();
    distances
        .par_iter()
        .zip(first.par_iter())
        .map(|(&l, own)| {
            let mut best: Option<(f64, Vec<f64>)> = None;
            for args in &candidates {
                if let Ok(v) = protocol.raw_rate(ch, l, args) {
                    if v.is_finite() && improves(v, args, &best) {
                        best = Some((v, args.clone()));
                    }
                }
            }
            match best {
                Some((v, args)) if v > own.rate_per_pulse || own.clamped => evaluate(protocol, ch, l, &args, grid),
                _ => Ok(own.clone()),
            }
        })
        .collect()
}

pub const CSV_HEADER: [&str; 6] = ["protocol_id", "L_km", "rate_per_pulse", "rate_per_second", "tps", "opt_params"];

/// Writes `results` as CSV with [`CSV_HEADER`].
pub fn write_csv<W: Write>(out: W, results: &[RateResult], n: usize) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    let csv_err = |e: csv::Error| Error::format(e.to_string());
    w.write_record(CSV_HEADER).map_err(csv_err)?;
    for r in results {
        w.write_record([
            r.protocol.id().to_string(),
            format!("{}", r.distance_km),
            format!("{:e}", r.rate_per_pulse),
            format!("{:e}", r.rate_per_second),
            format!("{:e}", r.tps(n)),
            r.params_string(),
        ])
        .map_err(csv_err)?;
    }
    w.flush()?;
    Ok(())
}

/// One CSV row read back.
#[derive(Debug, Clone, PartialEq, Deserialize)]
pub struct CsvRow {
    pub protocol_id: String,
    #[serde(rename = "L_km")]
    pub l_km: f64,
    pub rate_per_pulse: f64,
    pub rate_per_second: f64,
    pub tps: f64,
    pub opt_params: String,
}

pub fn read_csv<R: std::io::Read>(input: R) -> Result<Vec<CsvRow>> {
    csv::Reader::from_reader(input)
        .deserialize()
        .collect::<std::result::Result<Vec<CsvRow>, _>>()
        .map_err(|e| Error::format(e.to_string()))
}

/// Gnuplot script plotting `tps` against distance, one series per protocol, from `csv_name`.
pub fn gnuplot_script(csv_name: &str, protocols: &[Protocol]) -> String {
    let mut s = String::from(
        "set datafile separator ','\nset logscale y\nset xlabel 'Distance (km)'\nset ylabel 'Signature rate (tps)'\nset key outside\n",
    );
    let series: Vec<String> = protocols
        .iter()
        .map(|p| {
            format!("'{csv_name}' using (strcol(1) eq '{id}' ? $2 : 1/0):($5 > 0 ? $5 : 1/0) with lines title '{id}'", id = p.id())
        })
        .collect();
    s.push_str("plot ");
    s.push_str(&series.join(", \\\n     "));
    s.push('\n');
    s
}

/// Sweeps each protocol and writes `<stem>.csv` and `<stem>.gp` into `dir`.
pub fn sweep_and_emit(
    protocols: &[Protocol],
    ch: &ChannelModel,
    grid: &GridConfig,
    n: usize,
    dir: &Path,
    stem: &str,
) -> Result<Vec<RateResult>> {
    let mut all = Vec::new();
    for &p in protocols {
        all.extend(sweep(p, ch, grid)?);
    }
    let csv_name = format!("{stem}.csv");
    write_csv(std::fs::File::create(dir.join(&csv_name))?, &all, n)?;
    std::fs::write(dir.join(format!("{stem}.gp")), gnuplot_script(&csv_name, protocols))?;
    Ok(all)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn ch() -> ChannelModel {
        ChannelModel::default()
    }

    fn rel(a: f64, b: f64) -> f64 {
        ((a - b) / b).abs()
    }

    #[test]
    fn entropy() {
        assert_eq!(binary_entropy(0.5).unwrap(), 1.0);
        assert_eq!(binary_entropy(0.0).unwrap(), 0.0);
        assert_eq!(binary_entropy(1.0).unwrap(), 0.0);
        assert!((binary_entropy(0.0483).unwrap() - 0.279_131_112_617_692_7).abs() < 1e-12);
        assert!(binary_entropy(-0.1).is_err() && binary_entropy(1.5).is_err() && binary_entropy(f64::NAN).is_err());
    }

    #[test]
    fn signature_rate_conversion() {
        assert!((signature_rate(470.0, 128) - 470.0 / 384.0).abs() < 1e-15);
        assert_eq!(signature_rate(0.0, 128), 0.0);
        assert!((signature_rate(9314.0, 128) * 384.0 - 9314.0).abs() < 1e-9);
        assert!((signature_rate(2.0, 128) - 2.0 * signature_rate(1.0, 128)).abs() < 1e-15);
        assert!((signature_rate(1.0, 64) - 2.0 * signature_rate(1.0, 128)).abs() < 1e-15);
    }

    #[test]
    fn mdi_closed_form() {
        let r0 = rate_mdi(&ch(), 0.0).unwrap();
        assert!((r0 - 0.85f64.powi(2) / (2.0 * E * E)).abs() < 1e-15);
        assert!((r0 - 0.048_889_871_069_226_334).abs() < 1e-12);
        let eta100 = 0.85 * 10f64.powf(-0.167 * 100.0 / 20.0);
        assert!((rate_mdi(&ch(), 100.0).unwrap() - eta100 * eta100 / (2.0 * E * E)).abs() < 1e-12);
        let half = ChannelModel { eta_d: 0.425, ..ch() };
        assert!(rel(rate_mdi(&half, 30.0).unwrap(), rate_mdi(&ch(), 30.0).unwrap() / 4.0) < 1e-12);
    }

    #[test]
    fn qss_loss_only_models() {
        let unit = ChannelModel { eta_d: 1.0, ..ch() };
        assert!((rate_qss_pm(&unit, 0.0).unwrap() - 1.0).abs() < 1e-15);
        assert!(rate_qss_pm(&ch(), 5000.0).unwrap() < 1e-100);
        assert!(rel(rate_qss_pm(&ch(), 50.0).unwrap(), 0.015_446_776_096_653_63) < 1e-10);
        assert!(rel(rate_qss_mdi(&ch(), 50.0).unwrap(), 0.003_282_439_920_538_896_3) < 1e-10);
        let eta = 0.85 * 10f64.powf(-0.167 * 20.0 / 10.0);
        assert!(rel(rate_qss_mdi(&ch(), 20.0).unwrap(), 0.85 * eta * eta / 4.0) < 1e-14);
    }

    #[test]
    fn reference_values_from_independent_model() {
        // Values from a separate implementation built on library special functions.
        let c = ch();
        assert!(rel(rate_sns_tf(&c, 100.0, 0.46, 0.01, 0.05).unwrap(), 0.001_180_905_345_045_644_7) < 1e-8);
        assert!(rel(rate_sns_tf(&c, 0.0, 0.5, 0.1, 0.1).unwrap(), 0.010_339_191_293_164_289) < 1e-8);
        let (_, t) = sns_tf_terms(&c, 100.0, 0.46, 0.01, 0.05).unwrap();
        assert!(rel(t.y1, 0.124_012_699_965_233_24) < 1e-8);
        assert!(rel(t.e1, 0.023_569_015_383_111_81) < 1e-8);
        assert!(rel(t.q_e, 7.976_172_249_124_502e-6) < 1e-6);
        let (r, l) = cv_gauss_terms(&c, 10.0, 5.0).unwrap();
        assert!(rel(r, 0.382_535_697_898_761_4) < 1e-10);
        assert!(rel(l[2], 1.786_693_915_609_165) < 1e-10);
        assert!(rel(rate_cv_gauss(&c, 50.0, 20.0).unwrap(), 0.039_361_963_103_070_16) < 1e-9);
        assert!(rel(rate_qss_rr(&c, 10.0, 0.05, 20, 2).unwrap(), 0.000_140_149_441_793_525) < 1e-8);
        assert!(rel(rate_qss_rr(&c, 20.0, 0.02, 30, 1).unwrap(), 3.585_948_144_559_934e-5) < 1e-8);
        assert!(rel(rate_qss_sq(&c, 10.0, 0.5).unwrap(), 0.083_980_974_816_244_64) < 1e-10);
        assert!(rel(rate_qss_sq(&c, 0.0, 0.8).unwrap(), 0.214_789_424_405_966_7) < 1e-10);
        assert!(rel(rate_qss_dps(&c, 50.0, 0.2).unwrap(), 0.006_392_887_153_819_92) < 1e-10);
        assert!(rel(rate_qss_dps(&c, 0.0, 0.1).unwrap(), 0.032_749_125_523_746_994) < 1e-10);
    }

    #[test]
    fn holevo_and_eigenvalues() {
        assert_eq!(holevo_g(0.0), 0.0);
        assert!((holevo_g(1.0) - 2.0).abs() < 1e-15);
        let c = ch();
        for l in grid_points(0.0, 500.0, 10.0) {
            for v in [1.5, 2.0, 5.0, 20.0, 100.0] {
                let (_, lambdas) = cv_gauss_terms(&c, l, v).unwrap();
                assert!(lambdas.iter().all(|&x| x >= 1.0 - EIGENVALUE_TOLERANCE), "L={l} V={v}: {lambdas:?}");
            }
        }
        assert!(rate_cv_gauss(&c, 10.0, 5.0).unwrap() > 0.0);
        assert!(rate_cv_gauss(&c, 10.0, 1.0).is_err());
    }

    #[test]
    fn poisson_tail_properties() {
        assert!(poisson_tail(0.3, 60) < 1e-100);
        let direct = 1.0 - (-0.3f64).exp() * (1.0 + 0.3);
        assert!(rel(poisson_tail(0.3, 1), direct) < 1e-12);
        assert!(rel(poisson_tail(2.0, 0), 1.0 - (-2.0f64).exp()) < 1e-14);
        // The phase-error bound is at least e_src / Q_hat.
        let c = ch();
        let (_, e_p) = qss_rr_terms(&c, 10.0, 0.05, 20, 2).unwrap();
        let eta = c.eta_d * c.loss(10.0);
        let q_hat = 0.25 * (1.0 - (1.0 - 20.0 * c.p_d) * (-0.1 * eta).exp());
        assert!(e_p >= poisson_tail(0.05, 2) / q_hat);
    }

    #[test]
    fn pm_single_photon_fraction_is_a_probability() {
        let c = ch();
        for l in [0.0, 100.0, 300.0] {
            for (mu, nu) in [(0.1, 0.01), (1.0, 0.5), (3.0, 2.9)] {
                let (_, q1) = pm_terms(&c, l, mu, nu).unwrap();
                assert!((0.0..=1.0).contains(&q1));
            }
        }
    }

    #[test]
    fn unphysical_regions_give_zero() {
        let c = ch();
        // Source term exceeds the detected fraction far out.
        let (r, e_p) = qss_rr_terms(&c, 60.0, 1.0, 2, 2).unwrap();
        assert_eq!((r, e_p), (0.0, 1.0));
        // Error rate past 6/19 at long range.
        let (_, e) = qss_dps_gain_error(&c, 427.0, 0.1178);
        assert!(e > 6.0 / 19.0 && e < 0.5);
        assert!(rate_qss_dps(&c, 427.0, 0.1178).unwrap() <= 0.0);
    }

    #[test]
    fn dps_error_tends_to_misalignment() {
        let c = ChannelModel { p_d: 1e-15, ..ch() };
        let (_, e) = qss_dps_gain_error(&c, 0.0, 5.0);
        assert!((e - c.e_d).abs() < 1e-9);
    }

    #[test]
    fn argument_errors() {
        let c = ch();
        assert!(rate_sns_tf(&c, 10.0, 0.1, 0.2, 0.5).is_err());
        assert!(rate_sns_tf(&c, 10.0, 0.3, 0.1, 1.0).is_err());
        assert!(rate_pm(&c, -1.0, 0.3, 0.1).is_err());
        assert!(rate_qss_rr(&c, 10.0, 0.1, 1, 0).is_err());
        assert!(ChannelModel { f: 0.9, ..ch() }.validate().is_err());
        assert!(ChannelModel { e_d: 0.5, ..ch() }.validate().is_err());
        assert!(Protocol::from_id("bb84").is_err());
        assert_eq!(Protocol::from_id("qss-rr").unwrap(), Protocol::QssRr);
    }

    #[test]
    fn clamping() {
        let r = evaluate(Protocol::QssSq, &ch(), 400.0, &[0.5], &GridConfig::default()).unwrap();
        assert!(r.clamped);
        assert_eq!(r.rate_per_pulse, 0.0);
        let r = evaluate(Protocol::SnsTf, &ch(), 0.0, &[0.3, 0.1, 0.2], &GridConfig::default()).unwrap();
        assert!(r.clamped && r.rate_per_pulse == 0.0);
    }

    #[test]
    fn optimizer_reproduces_its_rate_and_beats_fixed_points() {
        let c = ch();
        let g = GridConfig::default();
        for p in Protocol::ALL {
            for l in [0.0, 50.0, 150.0] {
                let r = optimize(p, &c, l, &g).unwrap();
                let args: Vec<f64> = r.params.iter().map(|x| x.1).collect();
                let again = p.raw_rate(&c, l, &args).unwrap().max(0.0);
                assert_eq!(again, r.rate_per_pulse, "{p} at {l}");
                assert!(r.rate_per_pulse >= 0.0);
                // Continuous-variable pulses can carry more than one bit.
                if p != Protocol::CvGauss {
                    assert!(r.rate_per_pulse <= 1.0, "{p} at {l}: {r:?}");
                }
            }
        }
        let opt = optimize(Protocol::QssSq, &c, 20.0, &g).unwrap();
        assert!(opt.rate_per_pulse >= rate_qss_sq(&c, 20.0, 0.5).unwrap());
        assert!(opt.rate_per_pulse > rate_qss_sq(&c, 20.0, 0.5).unwrap() * (1.0 + 1e-6));
    }

    #[test]
    fn config_file() {
        let c = SimConfig::from_toml("[channel]\np_d = 1e-7\nclock = 2e8\n[grid]\nl_max = 100\n").unwrap();
        assert_eq!(c.channel.p_d, 1e-7);
        assert_eq!(c.channel.e_d, 0.02);
        assert_eq!(c.grid.distances().len(), 11);
        assert_eq!(SimConfig::from_toml("").unwrap(), SimConfig::default());
        assert!(SimConfig::from_toml("[channel]\nbogus = 1\n").is_err());
        assert!(SimConfig::from_toml("[channel]\neta_d = 1.5\n").is_err());
    }

    #[test]
    fn grid_points_are_exact() {
        let p = grid_points(0.01, 1.0, 0.05);
        assert_eq!(p.first(), Some(&0.01));
        assert_eq!(p.len(), 20);
        assert_eq!(p[3], 0.16);
        assert_eq!(grid_points(0.0, 500.0, 10.0).len(), 51);
    }

    #[test]
    fn csv_round_trip_and_plot_script() {
        let g = GridConfig { l_max: 40.0, ..GridConfig::default() };
        let dir = tempfile::tempdir().unwrap();
        let ps = [Protocol::Mdi, Protocol::QssDps];
        let results = sweep_and_emit(&ps, &ch(), &g, 128, dir.path(), "rates").unwrap();
        let rows = read_csv(std::fs::File::open(dir.path().join("rates.csv")).unwrap()).unwrap();
        assert_eq!(rows.len(), results.len());
        for (row, r) in rows.iter().zip(&results) {
            assert_eq!(row.protocol_id, r.protocol.id());
            assert_eq!(row.l_km, r.distance_km);
            assert_eq!(row.rate_per_pulse, r.rate_per_pulse);
            assert_eq!(row.opt_params, r.params_string());
            assert!((row.tps - r.tps(128)).abs() <= 1e-12 * row.tps.abs());
        }
        let script = std::fs::read_to_string(dir.path().join("rates.gp")).unwrap();
        assert!(script.contains("'qss-dps'") && script.contains("rates.csv"));
    }

    #[test]
    fn swept_curves_are_non_increasing() {
        let g = GridConfig::default();
        for p in Protocol::ALL {
            let curve = sweep(p, &ch(), &g).unwrap();
            assert_eq!(curve.len(), 51);
            for w in curve.windows(2) {
                assert!(w[1].rate_per_pulse <= w[0].rate_per_pulse, "{p}: {:?} then {:?}", w[0], w[1]);
            }
        }
    }

    #[test]
    fn some_key_distribution_exceeds_ten_thousand_signatures_per_second_at_50_km() {
        let g = GridConfig::default();
        let best = [Protocol::SnsTf, Protocol::Pm, Protocol::CvGauss, Protocol::Mdi]
            .into_iter()
            .map(|p| optimize(p, &ch(), 50.0, &g).unwrap().tps(128))
            .fold(0.0, f64::max);
        assert!(best > 1e4, "best {best}");
    }

    proptest::proptest! {
        #[test]
        fn fixed_parameter_rates_fall_with_distance(
            l in 0.0f64..400.0, dl in 0.0f64..100.0,
            mu in 0.02f64..1.0, frac in 0.01f64..0.99, t in 0.01f64..0.99,
            v in 1.5f64..100.0, d in 2u32..128, n_th in 0u32..20,
        ) {
            let c = ch();
            let nu = mu * frac;
            let pairs: [(Protocol, Vec<f64>); 9] = [
                (Protocol::SnsTf, vec![mu, nu, t]),
                (Protocol::Pm, vec![mu, nu]),
                (Protocol::CvGauss, vec![v]),
                (Protocol::Mdi, vec![]),
                (Protocol::QssPm, vec![]),
                (Protocol::QssMdi, vec![]),
                (Protocol::QssRr, vec![mu, d as f64, n_th as f64]),
                (Protocol::QssSq, vec![mu]),
                (Protocol::QssDps, vec![mu.min(0.49)]),
            ];
            for (p, args) in pairs {
                let near = p.raw_rate(&c, l, &args).unwrap().max(0.0);
                let far = p.raw_rate(&c, l + dl, &args).unwrap().max(0.0);
                proptest::prop_assert!(far <= near * (1.0 + 1e-9) + 1e-300, "{} {:?}: {} -> {}", p, args, near, far);
            }
        }
    }
}
