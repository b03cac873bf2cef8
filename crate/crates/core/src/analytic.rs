//! Closed-form secrecy outage probability for sub-optimal (SS) and optimal
//! (OS) transmitter selection, with backhaul activity unknown (KU) or known
//! (KA) at selection time, plus the high-SNR floors.
//!
//! Every multiplicative term is assembled in log space and exponentiated once.
//! The only sign-alternating sum is the outer sum over the number `k` of
//! transmitters in the inclusion-exclusion expansion of `F^K`; it runs through
//! a Neumaier accumulator and reports loss of significance.
//!
//! With `r = A_E / A_D = b / a`, the generic selection-combining term reads
//!
//! ```text
//! C(β1,q) Γ(N+q)/Γ(N) · (ρ r)^q · ((ρ-1)/A_D)^{β1-q} / (1 + kρr)^{N+q}
//! ```
//!
//! which is the `(1/A_D)^{β1} … / (kρ/A_D + 1/A_E)^{N+q}` kernel with the
//! `A_E^N` normalisation folded in. It stays finite for any SNR and makes the
//! surviving `q = β1` term at high SNR explicit.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::channel::SystemConfig;
use crate::error::{Result, SopError};
use crate::numerics::{
    binomial, enumerate_weak_compositions, ln_binomial, ln_factorial, log_gamma, NeumaierSum,
};

/// Pre-clamp values outside `[-INTEGRITY_SLACK, 1 + INTEGRITY_SLACK]` are errors.
pub const INTEGRITY_SLACK: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Scheme {
    /// Maximize destination SNR only.
    Ss,
    /// Maximize the per-transmitter secrecy capacity.
    Os,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Scenario {
    /// Backhaul activity unknown at selection.
    Ku,
    /// Selection restricted to transmitters with active backhaul.
    Ka,
}

impl Scheme {
    pub const ALL: [Scheme; 2] = [Scheme::Ss, Scheme::Os];

    pub fn as_str(self) -> &'static str {
        match self {
            Scheme::Ss => "ss",
            Scheme::Os => "os",
        }
    }
}

impl Scenario {
    pub const ALL: [Scenario; 2] = [Scenario::Ku, Scenario::Ka];

    pub fn as_str(self) -> &'static str {
        match self {
            Scenario::Ku => "ku",
            Scenario::Ka => "ka",
        }
    }
}

impl fmt::Display for Scheme {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl fmt::Display for Scenario {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Scheme {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "ss" => Ok(Scheme::Ss),
            "os" => Ok(Scheme::Os),
            other => Err(format!("unknown scheme '{other}' (expected ss|os)")),
        }
    }
}

impl FromStr for Scenario {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "ku" => Ok(Scenario::Ku),
            "ka" => Ok(Scenario::Ka),
            other => Err(format!("unknown scenario '{other}' (expected ku|ka)")),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SopQuery {
    pub cfg: SystemConfig,
    pub scheme: Scheme,
    pub scenario: Scenario,
}

impl SopQuery {
    pub fn new(cfg: SystemConfig, scheme: Scheme, scenario: Scenario) -> Self {
        SopQuery {
            cfg,
            scheme,
            scenario,
        }
    }
}

impl fmt::Display for SopQuery {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let c = &self.cfg;
        write!(
            f,
            "{}-{} K={} zeta={} r_th={} snr_db={:.4} M={} N={} a={} b={}",
            self.scheme,
            self.scenario,
            c.transmitters,
            c.zeta,
            c.r_th,
            10.0 * c.snr.log10(),
            c.dest_paths,
            c.eve_paths,
            c.a,
            c.b
        )
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ClosedForm {
    Analytic,
    Asymptotic,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SopValue {
    pub value: f64,
    pub pre_clamp: f64,
    pub method: ClosedForm,
    /// Raised when the alternating sum lost significance.
    pub significance_flag: bool,
}

fn finalize(pre_clamp: f64, method: ClosedForm, significance_flag: bool) -> Result<SopValue> {
    if !(pre_clamp >= -INTEGRITY_SLACK && pre_clamp <= 1.0 + INTEGRITY_SLACK) {
        return Err(SopError::NumericalIntegrity { value: pre_clamp });
    }
    Ok(SopValue {
        value: pre_clamp.clamp(0.0, 1.0),
        pre_clamp,
        method,
        significance_flag,
    })
}

fn checked_exp(ln: f64, what: &'static str) -> Result<f64> {
    let v = ln.exp();
    if v.is_finite() {
        Ok(v)
    } else {
        Err(SopError::Overflow(what))
    }
}

/// `ln x^p` with the convention `0^0 = 1`; `None` for a zero factor.
fn ln_pow(ln_x: f64, p: usize) -> Option<f64> {
    if p == 0 {
        Some(0.0)
    } else if ln_x == f64::NEG_INFINITY {
        None
    } else {
        Some(p as f64 * ln_x)
    }
}

/// Quantities shared by every term of the exact expansions.
struct Kernel {
    n: usize,
    ln_gamma_n: f64,
    /// `ln((ρ-1)/A_D)`, `-inf` when `ρ = 1`.
    ln_offset: f64,
    /// `(ρ-1)/A_D`
    offset: f64,
    /// `ln(ρ A_E / A_D)`
    ln_rho_r: f64,
    rho_r: f64,
}

impl Kernel {
    fn new(cfg: &SystemConfig) -> Result<Self> {
        let rho = cfg.rho();
        let n = cfg.eve_paths as usize;
        let offset = (rho - 1.0) / cfg.a_d();
        let rho_r = rho * cfg.a_e() / cfg.a_d();
        Ok(Kernel {
            n,
            ln_gamma_n: log_gamma(n as f64)?,
            ln_offset: offset.ln(),
            offset,
            ln_rho_r: rho_r.ln(),
            rho_r,
        })
    }

    /// `Σ_q C(β1,q) Γ(N+q)/Γ(N) (ρr)^q ((ρ-1)/A_D)^{β1-q} / (1+kρr)^{N+q}`
    /// returned as a logarithm (`-inf` for an empty sum).
    fn ln_inner(&self, k: usize, beta1: usize, ln_binom_row: &[f64], ln_gamma_nq: &[f64]) -> f64 {
        let ln_denominator = (k as f64 * self.rho_r).ln_1p();
        let mut terms = Vec::with_capacity(beta1 + 1);
        for q in 0..=beta1 {
            let Some(ln_off) = ln_pow(self.ln_offset, beta1 - q) else {
                continue;
            };
            terms.push(
                ln_binom_row[q] + ln_gamma_nq[q] - self.ln_gamma_n
                    + q as f64 * self.ln_rho_r
                    + ln_off
                    - (self.n + q) as f64 * ln_denominator,
            );
        }
        log_sum_exp(&terms)
    }
}

fn log_sum_exp(terms: &[f64]) -> f64 {
    let max = terms.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if max == f64::NEG_INFINITY {
        return max;
    }
    max + terms.iter().map(|t| (t - max).exp()).sum::<f64>().ln()
}

/// Exact `ln C(n, q)` rows for `n ≤ max`.
fn ln_binomial_table(max: usize) -> Vec<Vec<f64>> {
    (0..=max)
        .map(|n| {
            (0..=n)
                .map(|q| match binomial(n as u64, q as u64) {
                    Some(c) => (c as f64).ln(),
                    None => ln_binomial(n as u64, q as u64),
                })
                .collect()
        })
        .collect()
}

/// Secrecy outage probability of one transmitter with an active backhaul.
pub fn sop_single(cfg: &SystemConfig) -> Result<f64> {
    cfg.validate()?;
    let kernel = Kernel::new(cfg)?;
    let m_max = cfg.dest_paths as usize - 1;
    let binom = ln_binomial_table(m_max);
    let ln_gamma_nq = ln_gamma_table(kernel.n, m_max)?;
    let ln_denominator = kernel.rho_r.ln_1p();
    let mut success = 0.0;
    for m in 0..=m_max {
        for q in 0..=m {
            let Some(ln_off) = ln_pow(kernel.ln_offset, m - q) else {
                continue;
            };
            let ln_term = -kernel.offset - ln_factorial(m)
                + binom[m][q]
                + ln_gamma_nq[q]
                - kernel.ln_gamma_n
                + q as f64 * kernel.ln_rho_r
                + ln_off
                - (kernel.n + q) as f64 * ln_denominator;
            success += checked_exp(ln_term, "single-transmitter series")?;
        }
    }
    Ok(finalize(1.0 - success, ClosedForm::Analytic, false)?.value)
}

fn ln_gamma_table(n: usize, q_max: usize) -> Result<Vec<f64>> {
    (0..=q_max).map(|q| log_gamma((n + q) as f64)).collect()
}

/// `1 + Σ_{k=1}^{K} C(K,k) w_k T_k` with `T_k` the selection-combining term
/// for `k` transmitters. Returns the compensated sum.
fn selection_series(cfg: &SystemConfig, weight: impl Fn(usize) -> f64) -> Result<(f64, bool)> {
    let kernel = Kernel::new(cfg)?;
    let big_k = cfg.transmitters;
    let m = cfg.dest_paths as usize;
    let beta_max = big_k * (m - 1);
    let binom = ln_binomial_table(beta_max.max(big_k));
    let ln_gamma_nq = ln_gamma_table(kernel.n, beta_max)?;

    let mut acc = NeumaierSum::new();
    acc.add(1.0);
    let mut by_beta1 = vec![0.0f64; beta_max + 1];
    for k in 1..=big_k {
        let w = weight(k);
        if w == 0.0 {
            continue;
        }
        // polynomial coefficients of (Σ_m x^m/m!)^k, grouped by β1
        by_beta1.iter_mut().for_each(|c| *c = 0.0);
        for comp in enumerate_weak_compositions(k, m)? {
            by_beta1[comp.beta1] += (comp.ln_multinomial_coeff + comp.ln_inv_factorial_product).exp();
        }
        let mut terms = Vec::with_capacity(beta_max + 1);
        for (beta1, &coeff) in by_beta1.iter().enumerate().take(k * (m - 1) + 1) {
            if coeff > 0.0 {
                terms.push(coeff.ln() + kernel.ln_inner(k, beta1, &binom[beta1], &ln_gamma_nq));
            }
        }
        let ln_t = log_sum_exp(&terms) - k as f64 * kernel.offset + binom[big_k][k];
        acc.add(w * checked_exp(ln_t, "selection-combining series")?);
    }
    let s = acc.finish();
    Ok((s.sum, s.lost_significance()))
}

fn alternating(k: usize) -> f64 {
    if k % 2 == 0 {
        1.0
    } else {
        -1.0
    }
}

/// SS selection, backhaul unknown: `(1-ζ) + ζ·P[max_k γ_Dk < λ]`.
pub fn sop_ss_ku(cfg: &SystemConfig) -> Result<SopValue> {
    cfg.validate()?;
    let z = cfg.zeta;
    if z == 0.0 {
        return finalize(1.0, ClosedForm::Analytic, false);
    }
    let (inner, flag) = selection_series(cfg, alternating)?;
    finalize((1.0 - z) + z * inner, ClosedForm::Analytic, flag)
}

/// OS selection, backhaul unknown: `(1-ζ) + ζ·P_single^K`.
pub fn sop_os_ku(cfg: &SystemConfig) -> Result<SopValue> {
    cfg.validate()?;
    let single = sop_single(cfg)?;
    let z = cfg.zeta;
    finalize(
        (1.0 - z) + z * single.powi(cfg.transmitters as i32),
        ClosedForm::Analytic,
        false,
    )
}

/// SS selection among transmitters with active backhaul; `(-ζ)^k` weights.
pub fn sop_ss_ka(cfg: &SystemConfig) -> Result<SopValue> {
    cfg.validate()?;
    let z = cfg.zeta;
    if z == 0.0 {
        return finalize(1.0, ClosedForm::Analytic, false);
    }
    let (value, flag) = selection_series(cfg, |k| alternating(k) * z.powi(k as i32))?;
    finalize(value, ClosedForm::Analytic, flag)
}

/// OS selection among transmitters with active backhaul: `(1 - ζ(1 - P_single))^K`.
pub fn sop_os_ka(cfg: &SystemConfig) -> Result<SopValue> {
    cfg.validate()?;
    let single = sop_single(cfg)?;
    let per_tx = 1.0 - cfg.zeta * (1.0 - single);
    finalize(
        per_tx.powi(cfg.transmitters as i32),
        ClosedForm::Analytic,
        false,
    )
}

/// Exact closed form for any scheme/scenario pair.
pub fn sop(query: &SopQuery) -> Result<SopValue> {
    match (query.scheme, query.scenario) {
        (Scheme::Ss, Scenario::Ku) => sop_ss_ku(&query.cfg),
        (Scheme::Os, Scenario::Ku) => sop_os_ku(&query.cfg),
        (Scheme::Ss, Scenario::Ka) => sop_ss_ka(&query.cfg),
        (Scheme::Os, Scenario::Ka) => sop_os_ka(&query.cfg),
    }
}

/// High-SNR limit of the single-transmitter SOP; independent of the SNR.
pub fn asymptotic_single(cfg: &SystemConfig) -> Result<f64> {
    cfg.validate()?;
    let n = cfg.eve_paths as f64;
    let rho_b = cfg.rho() * cfg.b;
    let ln_total = (rho_b + cfg.a).ln();
    let ln_prefactor = n * cfg.a.ln() - log_gamma(n)?;
    let mut success = 0.0;
    for m in 0..cfg.dest_paths as usize {
        let mf = m as f64;
        let ln_term = ln_prefactor - ln_factorial(m) + mf * rho_b.ln() + log_gamma(n + mf)?
            - (n + mf) * ln_total;
        success += ln_term.exp();
    }
    Ok(finalize(1.0 - success, ClosedForm::Asymptotic, false)?.value)
}

/// `1 + Σ_k C(K,k) w_k (a^N/Γ(N)) Σ_comp coeff (ρb)^{β1} Γ(N+β1)/(kρb+a)^{N+β1}`
fn asymptotic_selection_series(
    cfg: &SystemConfig,
    weight: impl Fn(usize) -> f64,
) -> Result<(f64, bool)> {
    let n = cfg.eve_paths as f64;
    let m = cfg.dest_paths as usize;
    let rho_b = cfg.rho() * cfg.b;
    let ln_prefactor = n * cfg.a.ln() - log_gamma(n)?;
    let mut acc = NeumaierSum::new();
    acc.add(1.0);
    for k in 1..=cfg.transmitters {
        let w = weight(k);
        if w == 0.0 {
            continue;
        }
        let ln_total = (k as f64 * rho_b + cfg.a).ln();
        let ln_ck = ln_binomial(cfg.transmitters as u64, k as u64);
        let mut inner = NeumaierSum::new();
        for comp in enumerate_weak_compositions(k, m)? {
            let b1 = comp.beta1 as f64;
            let ln_term = ln_ck
                + ln_prefactor
                + comp.ln_multinomial_coeff
                + comp.ln_inv_factorial_product
                + b1 * rho_b.ln()
                + log_gamma(n + b1)?
                - (n + b1) * ln_total;
            inner.add(checked_exp(ln_term, "asymptotic series")?);
        }
        acc.add(w * inner.finish().sum);
    }
    let s = acc.finish();
    Ok((s.sum, s.lost_significance()))
}

/// SNR-independent SOP floor for any scheme/scenario pair.
pub fn asymptotic_sop(query: &SopQuery) -> Result<SopValue> {
    let cfg = &query.cfg;
    cfg.validate()?;
    let z = cfg.zeta;
    let big_k = cfg.transmitters as i32;
    if z == 0.0 {
        return finalize(1.0, ClosedForm::Asymptotic, false);
    }
    match (query.scheme, query.scenario) {
        (Scheme::Ss, Scenario::Ku) => {
            let (inner, flag) = asymptotic_selection_series(cfg, alternating)?;
            finalize((1.0 - z) + z * inner, ClosedForm::Asymptotic, flag)
        }
        (Scheme::Ss, Scenario::Ka) => {
            let (v, flag) =
                asymptotic_selection_series(cfg, |k| alternating(k) * z.powi(k as i32))?;
            finalize(v, ClosedForm::Asymptotic, flag)
        }
        (Scheme::Os, Scenario::Ku) => {
            let single = asymptotic_single(cfg)?;
            finalize((1.0 - z) + z * single.powi(big_k), ClosedForm::Asymptotic, false)
        }
        (Scheme::Os, Scenario::Ka) => {
            let single = asymptotic_single(cfg)?;
            finalize(
                (1.0 - z * (1.0 - single)).powi(big_k),
                ClosedForm::Asymptotic,
                false,
            )
        }
    }
}

/// Two readings of the term-by-term multinomial expansion of the OS floors.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ExpansionReading {
    /// Sum from `k = 0` with the extra leading `1`, product over `m ≥ 1`, and
    /// the free `Γ(N+m)/(ρb+a)^{N+m}` factor taken at `m = M-1` and raised to `β2`.
    Literal,
    /// The multinomial expansion of the composed form: the per-path factor
    /// `Γ(N+m)/(ρb+a)^{N+m}` sits inside the product over `m ≥ 0`, raised to `k_m`,
    /// and the `k = 0` term replaces the leading constant.
    Corrected,
}

/// Expanded OS floor, kept as a diagnostic cross-check of [`asymptotic_sop`].
pub fn os_floor_expanded(query: &SopQuery, reading: ExpansionReading) -> Result<f64> {
    let cfg = &query.cfg;
    cfg.validate()?;
    let z = cfg.zeta;
    let n = cfg.eve_paths as f64;
    let m = cfg.dest_paths as usize;
    let rho_b = cfg.rho() * cfg.b;
    let ln_total = (rho_b + cfg.a).ln();
    let ln_prefactor = n * cfg.a.ln() - log_gamma(n)?;
    let ln_path: Vec<f64> = (0..m)
        .map(|j| Ok(log_gamma(n + j as f64)? - (n + j as f64) * ln_total))
        .collect::<Result<_>>()?;
    let mut acc = NeumaierSum::new();
    for k in 0..=cfg.transmitters {
        let w = match query.scenario {
            Scenario::Ku => alternating(k),
            Scenario::Ka => alternating(k) * z.powi(k as i32),
        };
        let mut inner = 0.0;
        for comp in enumerate_weak_compositions(k, m)? {
            let mut ln_term = k as f64 * ln_prefactor
                + comp.ln_multinomial_coeff
                + comp.beta1 as f64 * rho_b.ln();
            match reading {
                ExpansionReading::Literal => {
                    ln_term += comp
                        .parts
                        .iter()
                        .enumerate()
                        .skip(1)
                        .map(|(j, &kj)| -(kj as f64) * ln_factorial(j))
                        .sum::<f64>();
                    ln_term += comp.beta2 as f64 * ln_path[m - 1];
                }
                ExpansionReading::Corrected => {
                    ln_term += comp.ln_inv_factorial_product;
                    ln_term += comp
                        .parts
                        .iter()
                        .enumerate()
                        .map(|(j, &kj)| kj as f64 * ln_path[j])
                        .sum::<f64>();
                }
            }
            inner += ln_term.exp();
        }
        acc.add(ln_binomial(cfg.transmitters as u64, k as u64).exp() * w * inner);
    }
    let sum = acc.finish().sum;
    Ok(match (reading, query.scenario) {
        (ExpansionReading::Literal, Scenario::Ku) => 1.0 + z * sum,
        (ExpansionReading::Literal, Scenario::Ka) => 1.0 + sum,
        (ExpansionReading::Corrected, Scenario::Ku) => (1.0 - z) + z * sum,
        (ExpansionReading::Corrected, Scenario::Ka) => sum,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn base(k: usize, zeta: f64, snr_db: f64) -> SystemConfig {
        SystemConfig::reference(k, zeta, snr_db)
    }

    /// Composite Simpson over a truncated range for `∫ F(λ(y)) f_E(y) dy`.
    fn simpson_oracle(cfg: &SystemConfig, dest_cdf: impl Fn(f64) -> f64) -> f64 {
        let e = cfg.eavesdropper();
        let upper = e.scale * (f64::from(e.shape) + 60.0);
        let n = 400_000;
        let h = upper / n as f64;
        let rho = cfg.rho();
        let g = |y: f64| dest_cdf((1.0 + y) * rho - 1.0) * crate::channel::snr_pdf(e, y).unwrap();
        let mut acc = g(0.0) + g(upper);
        for i in 1..n {
            let w = if i % 2 == 1 { 4.0 } else { 2.0 };
            acc += w * g(i as f64 * h);
        }
        acc * h / 3.0
    }

    fn reg_cdf(cfg: &SystemConfig) -> impl Fn(f64) -> f64 + '_ {
        move |x| crate::channel::snr_cdf(cfg.destination(), x).unwrap()
    }

    #[test]
    fn single_rayleigh_reduces_to_known_form() {
        for &snr_db in &[-5.0, 0.0, 10.0, 25.0] {
            let mut cfg = base(1, 1.0, snr_db);
            cfg.dest_paths = 1;
            cfg.eve_paths = 1;
            let (rho, ad, ae) = (cfg.rho(), cfg.a_d(), cfg.a_e());
            let expected = 1.0 - (-(rho - 1.0) / ad).exp() * ad / (rho * ae + ad);
            assert!((sop_single(&cfg).unwrap() - expected).abs() < 1e-14);
        }
    }

    #[test]
    fn single_matches_simpson_oracle() {
        let cfg = base(1, 1.0, 10.0);
        let oracle = simpson_oracle(&cfg, reg_cdf(&cfg));
        let got = sop_single(&cfg).unwrap();
        assert!((got - oracle).abs() < 1e-10, "{got} vs {oracle}");
    }

    #[test]
    fn single_approaches_floor() {
        let cfg = base(1, 1.0, 200.0);
        let exact = sop_single(&cfg).unwrap();
        let floor = asymptotic_single(&cfg).unwrap();
        assert!((exact - floor).abs() / floor <= 1e-4);
    }

    #[test]
    fn asymptotic_single_limits() {
        let mut cfg = base(1, 1.0, 10.0);
        cfg.dest_paths = 1;
        cfg.eve_paths = 1;
        let expected = 1.0 - cfg.a / (cfg.rho() * cfg.b + cfg.a);
        assert!((asymptotic_single(&cfg).unwrap() - expected).abs() < 1e-15);
        let mut cfg = base(1, 1.0, 10.0);
        cfg.b = 1e9;
        assert!((asymptotic_single(&cfg).unwrap() - 1.0).abs() < 1e-6);
    }

    #[test]
    fn zero_reliability_is_certain_outage() {
        for scheme in Scheme::ALL {
            for scenario in Scenario::ALL {
                let q = SopQuery::new(base(3, 0.0, 10.0), scheme, scenario);
                assert_eq!(sop(&q).unwrap().value, 1.0);
                assert_eq!(asymptotic_sop(&q).unwrap().value, 1.0);
            }
        }
    }

    #[test]
    fn single_transmitter_coincidence() {
        for &zeta in &[0.3, 0.9, 1.0] {
            let cfg = base(1, zeta, 10.0);
            let single = sop_single(&cfg).unwrap();
            let mixture = (1.0 - zeta) + zeta * single;
            for v in [
                sop_ss_ku(&cfg).unwrap().value,
                sop_os_ku(&cfg).unwrap().value,
                sop_ss_ka(&cfg).unwrap().value,
                sop_os_ka(&cfg).unwrap().value,
            ] {
                assert!((v - mixture).abs() < 1e-12, "{v} vs {mixture}");
            }
        }
    }

    #[test]
    fn ss_ku_matches_simpson_oracle() {
        let cfg = base(2, 0.99, 10.0);
        let k = cfg.transmitters as i32;
        let f = reg_cdf(&cfg);
        let oracle = (1.0 - cfg.zeta) + cfg.zeta * simpson_oracle(&cfg, |x| f(x).powi(k));
        let got = sop_ss_ku(&cfg).unwrap().value;
        assert!((got - oracle).abs() < 1e-10, "{got} vs {oracle}");
    }

    #[test]
    fn ss_ka_matches_simpson_oracle() {
        let cfg = base(2, 0.9, 10.0);
        let k = cfg.transmitters as i32;
        let z = cfg.zeta;
        let f = reg_cdf(&cfg);
        let oracle = simpson_oracle(&cfg, |x| ((1.0 - z) + z * f(x)).powi(k));
        let got = sop_ss_ka(&cfg).unwrap().value;
        assert!((got - oracle).abs() < 1e-10, "{got} vs {oracle}");
    }

    #[test]
    fn full_reliability_scenarios_coincide() {
        for k in [1, 2, 5] {
            let cfg = base(k, 1.0, 15.0);
            let a = sop_ss_ku(&cfg).unwrap().value;
            let b = sop_ss_ka(&cfg).unwrap().value;
            assert!((a - b).abs() < 1e-12);
            let single = sop_single(&cfg).unwrap();
            let os_ka = sop_os_ka(&cfg).unwrap().value;
            assert!((os_ka - single.powi(k as i32)).abs() < 1e-15);
            assert!((os_ka - sop_os_ku(&cfg).unwrap().value).abs() < 1e-12);
        }
    }

    #[test]
    fn zero_rate_threshold_is_supported() {
        let mut cfg = base(3, 0.9, 10.0);
        cfg.r_th = 0.0;
        let f = reg_cdf(&cfg);
        let k = cfg.transmitters as i32;
        let oracle = (1.0 - cfg.zeta) + cfg.zeta * simpson_oracle(&cfg, |x| f(x).powi(k));
        let got = sop_ss_ku(&cfg).unwrap().value;
        assert!((got - oracle).abs() < 1e-9, "{got} vs {oracle}");
        let single_oracle = simpson_oracle(&cfg, &f);
        assert!((sop_single(&cfg).unwrap() - single_oracle).abs() < 1e-9);
    }

    #[test]
    fn floors_match_high_snr_exact_values() {
        for k in [1, 2, 3, 5] {
            for zeta in [0.9, 0.99] {
                for scheme in Scheme::ALL {
                    for scenario in Scenario::ALL {
                        let q = SopQuery::new(base(k, zeta, 200.0), scheme, scenario);
                        let exact = sop(&q).unwrap().value;
                        let floor = asymptotic_sop(&q).unwrap().value;
                        assert!((exact - floor).abs() / floor <= 1e-4, "{q}: {exact} vs {floor}");
                    }
                }
            }
        }
    }

    #[test]
    fn ku_floor_never_below_inactive_probability() {
        for k in [1, 2, 5] {
            let zeta = 0.9;
            for scheme in Scheme::ALL {
                let q = SopQuery::new(base(k, zeta, 30.0), scheme, Scenario::Ku);
                assert!(asymptotic_sop(&q).unwrap().value >= 1.0 - zeta - 1e-12);
            }
        }
    }

    #[test]
    fn corrected_expansion_matches_compact_os_floor() {
        for k in [1, 2, 3, 5] {
            for zeta in [0.5, 0.9, 1.0] {
                for scenario in Scenario::ALL {
                    let q = SopQuery::new(base(k, zeta, 20.0), Scheme::Os, scenario);
                    let compact = asymptotic_sop(&q).unwrap().value;
                    let expanded = os_floor_expanded(&q, ExpansionReading::Corrected).unwrap();
                    assert!((compact - expanded).abs() < 1e-12, "{q}");
                }
            }
        }
    }

    #[test]
    fn literal_expansion_does_not_match() {
        for scenario in Scenario::ALL {
            let q = SopQuery::new(base(2, 0.9, 20.0), Scheme::Os, scenario);
            let compact = asymptotic_sop(&q).unwrap().value;
            let literal = os_floor_expanded(&q, ExpansionReading::Literal).unwrap();
            assert!((compact - literal).abs() > 1e-3, "{literal} vs {compact}");
        }
    }

    #[test]
    fn integrity_guard() {
        assert!(finalize(1.0 + 1e-12, ClosedForm::Analytic, false).unwrap().value == 1.0);
        assert!(finalize(-1e-12, ClosedForm::Analytic, false).unwrap().value == 0.0);
        assert!(matches!(
            finalize(1.01, ClosedForm::Analytic, false),
            Err(SopError::NumericalIntegrity { .. })
        ));
        assert!(finalize(f64::NAN, ClosedForm::Analytic, false).is_err());
    }

    #[test]
    fn invalid_config_rejected() {
        let cfg = SystemConfig {
            zeta: 2.0,
            ..base(2, 0.9, 10.0)
        };
        assert!(sop_ss_ku(&cfg).is_err());
        assert!(sop_single(&cfg).is_err());
    }
}
