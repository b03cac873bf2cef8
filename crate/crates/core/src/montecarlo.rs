//! Direct simulation of the four selection rules.
//!
//! The sample index space is cut into fixed-size chunks. Chunk `i` draws from
//! ChaCha8 stream `i` keyed by the user seed, so the per-chunk outage counts
//! and therefore the integer totals do not depend on how chunks are scheduled
//! across workers.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use statrs::distribution::{ContinuousCDF, Normal};

use crate::analytic::{Scenario, Scheme, SopQuery};
use crate::channel::{sample_channel_into, ChannelSample, SystemConfig};
use crate::error::{Result, SopError};

/// Samples per RNG substream.
pub const CHUNK_SIZE: u64 = 1 << 16;

/// Below this many outage (or non-outage) events the normal CI is flagged.
const LOW_CONFIDENCE_EVENTS: u64 = 10;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct McSettings {
    pub n_samples: u64,
    pub seed: u64,
    /// Two-sided confidence level of the reported interval.
    pub confidence: f64,
    /// Worker threads; `None` uses the global rayon pool. Never affects results.
    pub workers: Option<usize>,
}

impl Default for McSettings {
    fn default() -> Self {
        McSettings {
            n_samples: 1_000_000,
            seed: 0x5EC2_E7A1,
            confidence: 0.99,
            workers: None,
        }
    }
}

impl McSettings {
    pub fn validate(&self) -> Result<()> {
        if self.n_samples < 1 {
            return Err(SopError::InvalidConfig("n_samples must be >= 1".into()));
        }
        if !(self.confidence > 0.0 && self.confidence < 1.0) {
            return Err(SopError::InvalidConfig(format!(
                "confidence must lie in (0, 1), got {}",
                self.confidence
            )));
        }
        if self.workers == Some(0) {
            return Err(SopError::InvalidConfig("workers must be >= 1".into()));
        }
        Ok(())
    }

    /// Two-sided normal quantile for the configured confidence.
    pub fn z(&self) -> f64 {
        let normal = Normal::new(0.0, 1.0).expect("standard normal");
        normal.inverse_cdf(1.0 - (1.0 - self.confidence) / 2.0)
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SopEstimate {
    pub p_hat: f64,
    pub ci_half_width: f64,
    pub n_samples: u64,
    pub seed: u64,
    pub outages: u64,
    /// Fewer than ten outage or non-outage events; the normal CI is unreliable.
    pub low_confidence: bool,
}

impl SopEstimate {
    fn from_count(outages: u64, mc: &McSettings) -> Self {
        let n = mc.n_samples as f64;
        let p_hat = outages as f64 / n;
        SopEstimate {
            p_hat,
            ci_half_width: mc.z() * (p_hat * (1.0 - p_hat) / n).sqrt(),
            n_samples: mc.n_samples,
            seed: mc.seed,
            outages,
            low_confidence: outages < LOW_CONFIDENCE_EVENTS
                || mc.n_samples - outages < LOW_CONFIDENCE_EVENTS,
        }
    }
}

/// True iff `(1 + γ_D) / (1 + γ_E) < ρ`.
#[inline]
pub fn secrecy_outage_indicator(gamma_d: f64, gamma_e: f64, rho: f64) -> bool {
    1.0 + gamma_d < rho * (1.0 + gamma_e)
}

fn slot(scheme: Scheme, scenario: Scenario) -> usize {
    let s = match scheme {
        Scheme::Ss => 0,
        Scheme::Os => 1,
    };
    let c = match scenario {
        Scenario::Ku => 0,
        Scenario::Ka => 1,
    };
    2 * s + c
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
struct Counts {
    outages: [u64; 4],
    empty_active: u64,
}

impl Counts {
    fn merge(mut self, other: Counts) -> Counts {
        for (a, b) in self.outages.iter_mut().zip(other.outages) {
            *a += b;
        }
        self.empty_active += other.empty_active;
        self
    }
}

/// Index of the first maximum of `key` over the candidates.
fn argmax(candidates: impl Iterator<Item = usize>, key: impl Fn(usize) -> f64) -> Option<usize> {
    let mut best: Option<(usize, f64)> = None;
    for k in candidates {
        let v = key(k);
        match best {
            Some((_, bv)) if v <= bv => {}
            _ => best = Some((k, v)),
        }
    }
    best.map(|(k, _)| k)
}

/// Per-sample outcome of all four rules on a common channel draw.
fn classify(s: &ChannelSample, rho: f64) -> ([bool; 4], bool) {
    let k_all = s.gamma_d.len();
    let ratio = |k: usize| (1.0 + s.gamma_d[k]) / (1.0 + s.gamma_e[k]);
    let dest = |k: usize| s.gamma_d[k];

    // KU: select ignoring backhaul; an inactive selected link yields γ̂_D = 0,
    // which counts as outage even when ρ = 1 (the atom belongs to the CDF).
    let ku = |k: usize| !s.backhaul[k] || secrecy_outage_indicator(s.gamma_d[k], s.gamma_e[k], rho);
    let ss_ku = ku(argmax(0..k_all, dest).expect("K >= 1"));
    let os_ku = ku(argmax(0..k_all, ratio).expect("K >= 1"));

    let active = || (0..k_all).filter(|&k| s.backhaul[k]);
    let ka = |sel: Option<usize>| match sel {
        None => true,
        Some(k) => secrecy_outage_indicator(s.gamma_d[k], s.gamma_e[k], rho),
    };
    let ss_sel = argmax(active(), dest);
    let empty = ss_sel.is_none();
    let ss_ka = ka(ss_sel);
    let os_ka = ka(argmax(active(), ratio));

    let mut out = [false; 4];
    out[slot(Scheme::Ss, Scenario::Ku)] = ss_ku;
    out[slot(Scheme::Os, Scenario::Ku)] = os_ku;
    out[slot(Scheme::Ss, Scenario::Ka)] = ss_ka;
    out[slot(Scheme::Os, Scenario::Ka)] = os_ka;
    (out, empty)
}

fn run_chunk(cfg: &SystemConfig, seed: u64, chunk: u64, len: u64) -> Counts {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(chunk);
    let rho = cfg.rho();
    let mut sample = ChannelSample::with_capacity(cfg.transmitters);
    let mut counts = Counts::default();
    for _ in 0..len {
        sample_channel_into(cfg, &mut rng, &mut sample);
        let (out, empty) = classify(&sample, rho);
        for (c, o) in counts.outages.iter_mut().zip(out) {
            *c += u64::from(o);
        }
        counts.empty_active += u64::from(empty);
    }
    counts
}

/// Outage counts of all four rules, simulated on common channel draws.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct McReport {
    pub settings: McSettings,
    counts: Counts,
}

impl McReport {
    pub fn estimate(&self, scheme: Scheme, scenario: Scenario) -> SopEstimate {
        SopEstimate::from_count(self.counts.outages[slot(scheme, scenario)], &self.settings)
    }

    /// Number of samples in which no transmitter had an active backhaul.
    pub fn empty_active_count(&self) -> u64 {
        self.counts.empty_active
    }

    pub fn empty_active_frequency(&self) -> f64 {
        self.counts.empty_active as f64 / self.settings.n_samples as f64
    }
}

pub fn simulate_all(cfg: &SystemConfig, mc: &McSettings) -> Result<McReport> {
    cfg.validate()?;
    mc.validate()?;
    let n_chunks = mc.n_samples.div_ceil(CHUNK_SIZE);
    let work = || {
        (0..n_chunks)
            .into_par_iter()
            .map(|i| {
                let len = CHUNK_SIZE.min(mc.n_samples - i * CHUNK_SIZE);
                run_chunk(cfg, mc.seed, i, len)
            })
            .reduce(Counts::default, Counts::merge)
    };
    let counts = match mc.workers {
        None => work(),
        Some(w) => rayon::ThreadPoolBuilder::new()
            .num_threads(w)
            .build()
            .map_err(|e| SopError::InvalidConfig(format!("thread pool: {e}")))?
            .install(work),
    };
    Ok(McReport {
        settings: *mc,
        counts,
    })
}

pub fn simulate_sop(query: &SopQuery, mc: &McSettings) -> Result<SopEstimate> {
    Ok(simulate_all(&query.cfg, mc)?.estimate(query.scheme, query.scenario))
}
