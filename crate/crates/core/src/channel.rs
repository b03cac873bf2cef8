//! System parameterization, SNR distributions and channel sampling.

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Result, SopError};
use crate::numerics::{ln_factorial, log_gamma, regularized_lower_gamma};

/// Convert a dB quantity to linear scale.
pub fn db_to_linear(db: f64) -> f64 {
    10f64.powf(db / 10.0)
}

/// Scenario parameters. SNR is linear `P_T / σ²`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SystemConfig {
    /// Number of candidate transmitters `K`.
    pub transmitters: usize,
    /// Backhaul reliability, probability a link is active.
    pub zeta: f64,
    /// Secrecy rate threshold in bits.
    pub r_th: f64,
    pub snr: f64,
    /// Multipath components towards the destination (`M`).
    pub dest_paths: u32,
    /// Multipath components towards the eavesdropper (`N`).
    pub eve_paths: u32,
    /// Destination path-loss factor.
    pub a: f64,
    /// Eavesdropper path-loss factor.
    pub b: f64,
}

impl SystemConfig {
    /// The parameter set used throughout the numerical results: `M=6, N=4,
    /// a=0.5, b=0.2, R_th=1`.
    pub fn reference(transmitters: usize, zeta: f64, snr_db: f64) -> Self {
        SystemConfig {
            transmitters,
            zeta,
            r_th: 1.0,
            snr: db_to_linear(snr_db),
            dest_paths: 6,
            eve_paths: 4,
            a: 0.5,
            b: 0.2,
        }
    }

    pub fn with_snr_db(mut self, snr_db: f64) -> Self {
        self.snr = db_to_linear(snr_db);
        self
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(SopError::InvalidConfig(msg));
        if self.transmitters < 1 {
            return bad(format!("K must be >= 1, got {}", self.transmitters));
        }
        if !(0.0..=1.0).contains(&self.zeta) {
            return bad(format!("zeta must lie in [0, 1], got {}", self.zeta));
        }
        if !(self.r_th >= 0.0) || !self.r_th.is_finite() {
            return bad(format!("R_th must be a finite value >= 0, got {}", self.r_th));
        }
        if !(self.snr > 0.0) || !self.snr.is_finite() {
            return bad(format!("SNR must be finite and > 0, got {}", self.snr));
        }
        if self.dest_paths < 1 || self.eve_paths < 1 {
            return bad(format!(
                "path counts must be >= 1, got M={} N={}",
                self.dest_paths, self.eve_paths
            ));
        }
        if !(self.a > 0.0) || !self.a.is_finite() || !(self.b > 0.0) || !self.b.is_finite() {
            return bad(format!(
                "path-loss factors must be finite and > 0, got a={} b={}",
                self.a, self.b
            ));
        }
        Ok(())
    }

    /// `ρ = 2^{R_th}`
    pub fn rho(&self) -> f64 {
        self.r_th.exp2()
    }

    /// Average destination SNR scale `A_D = a·snr`.
    pub fn a_d(&self) -> f64 {
        self.a * self.snr
    }

    /// Average eavesdropper SNR scale `A_E = b·snr`.
    pub fn a_e(&self) -> f64 {
        self.b * self.snr
    }

    pub fn destination(&self) -> GammaSnr {
        GammaSnr {
            shape: self.dest_paths,
            scale: self.a_d(),
        }
    }

    pub fn eavesdropper(&self) -> GammaSnr {
        GammaSnr {
            shape: self.eve_paths,
            scale: self.a_e(),
        }
    }
}

/// Gamma law with integer shape, the SNR after SC-CP combining of `shape`
/// Rayleigh paths.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GammaSnr {
    pub shape: u32,
    pub scale: f64,
}

impl GammaSnr {
    pub fn mean(&self) -> f64 {
        f64::from(self.shape) * self.scale
    }
}

fn check_arg(x: f64) -> Result<()> {
    if x >= 0.0 {
        Ok(())
    } else {
        Err(SopError::Domain {
            what: "SNR argument",
            value: x,
        })
    }
}

pub fn snr_pdf(dist: GammaSnr, x: f64) -> Result<f64> {
    check_arg(x)?;
    let shape = f64::from(dist.shape);
    if x == 0.0 {
        return Ok(if dist.shape == 1 { 1.0 / dist.scale } else { 0.0 });
    }
    if x.is_infinite() {
        return Ok(0.0);
    }
    let ln = (shape - 1.0) * x.ln() - x / dist.scale - log_gamma(shape)? - shape * dist.scale.ln();
    Ok(ln.exp())
}

/// CDF through the regularized incomplete gamma function.
pub fn snr_cdf(dist: GammaSnr, x: f64) -> Result<f64> {
    check_arg(x)?;
    regularized_lower_gamma(f64::from(dist.shape), x / dist.scale)
}

/// Complementary CDF via the finite sum `e^{-u} Σ_{m<M} u^m / m!`, `u = x/scale`.
pub fn snr_ccdf_finite_sum(dist: GammaSnr, x: f64) -> Result<f64> {
    check_arg(x)?;
    let u = x / dist.scale;
    if u == 0.0 {
        return Ok(1.0);
    }
    let ln_u = u.ln();
    let tail: f64 = (0..dist.shape as usize)
        .map(|m| (m as f64 * ln_u - u - ln_factorial(m)).exp())
        .sum();
    Ok(tail.min(1.0))
}

/// CDF via the integer-shape finite sum.
pub fn snr_cdf_finite_sum(dist: GammaSnr, x: f64) -> Result<f64> {
    Ok(1.0 - snr_ccdf_finite_sum(dist, x)?)
}

/// CDF of the backhaul mixture: atom `1 - ζ` at zero plus `ζ` times the Gamma law.
pub fn mixture_cdf(dist: GammaSnr, zeta: f64, x: f64) -> Result<f64> {
    Ok((1.0 - zeta) + zeta * snr_cdf(dist, x)?)
}

/// The same mixture written as `1 - ζ e^{-u} Σ u^m/m!`.
pub fn mixture_cdf_finite_sum(dist: GammaSnr, zeta: f64, x: f64) -> Result<f64> {
    Ok(1.0 - zeta * snr_ccdf_finite_sum(dist, x)?)
}

/// One Monte Carlo draw over all `K` transmitters.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct ChannelSample {
    pub gamma_d: Vec<f64>,
    pub gamma_e: Vec<f64>,
    pub backhaul: Vec<bool>,
}

impl ChannelSample {
    pub fn with_capacity(k: usize) -> Self {
        ChannelSample {
            gamma_d: Vec::with_capacity(k),
            gamma_e: Vec::with_capacity(k),
            backhaul: Vec::with_capacity(k),
        }
    }
}

/// `Gamma(shape, 1)` as a sum of `shape` unit exponentials, `-ln ∏ U_i`
/// with `U_i` uniform on `(0, 1]`.
fn unit_gamma<R: Rng + ?Sized>(shape: u32, rng: &mut R) -> f64 {
    let mut prod = 1.0_f64;
    for _ in 0..shape {
        prod *= 1.0 - rng.gen::<f64>();
    }
    -prod.ln()
}

pub fn sample_channel<R: Rng + ?Sized>(cfg: &SystemConfig, rng: &mut R) -> ChannelSample {
    let mut out = ChannelSample::with_capacity(cfg.transmitters);
    sample_channel_into(cfg, rng, &mut out);
    out
}

/// Refill `out` in place. Per transmitter the draw order is destination gain,
/// eavesdropper gain, backhaul indicator.
pub fn sample_channel_into<R: Rng + ?Sized>(cfg: &SystemConfig, rng: &mut R, out: &mut ChannelSample) {
    let (a_d, a_e) = (cfg.a_d(), cfg.a_e());
    out.gamma_d.clear();
    out.gamma_e.clear();
    out.backhaul.clear();
    for _ in 0..cfg.transmitters {
        out.gamma_d.push(a_d * unit_gamma(cfg.dest_paths, rng));
        out.gamma_e.push(a_e * unit_gamma(cfg.eve_paths, rng));
        out.backhaul.push(rng.gen::<f64>() < cfg.zeta);
    }
}
