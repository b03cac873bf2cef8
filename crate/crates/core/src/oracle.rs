//! Adaptive quadrature of the defining outage integral
//! `∫_0^∞ F_D(λ(y)) f_E(y) dy`, `λ(y) = (1+y)ρ - 1`.
//!
//! This path shares nothing with the closed forms beyond the distribution
//! definitions: destination CDFs go through the regularized incomplete gamma
//! function, not the finite-sum expansion.

use std::collections::BinaryHeap;
use std::cmp::Ordering;

use crate::analytic::{Scenario, Scheme, SopQuery};
use crate::channel::{mixture_cdf, snr_cdf, snr_pdf, GammaSnr};
use crate::error::{Result, SopError};

// Gauss–Kronrod 7/15 abscissae and weights on [-1, 1].
const XGK: [f64; 8] = [
    0.991_455_371_120_812_6,
    0.949_107_912_342_758_5,
    0.864_864_423_359_769_1,
    0.741_531_185_599_394_4,
    0.586_087_235_467_691_1,
    0.405_845_151_377_397_2,
    0.207_784_955_007_898_5,
    0.0,
];
const WGK: [f64; 8] = [
    0.022_935_322_010_529_22,
    0.063_092_092_629_978_55,
    0.104_790_010_322_250_18,
    0.140_653_259_715_525_92,
    0.169_004_726_639_267_9,
    0.190_350_578_064_785_4,
    0.204_432_940_075_298_9,
    0.209_482_141_084_727_83,
];
const WG: [f64; 4] = [
    0.129_484_966_168_869_7,
    0.279_705_391_489_276_7,
    0.381_830_050_505_118_94,
    0.417_959_183_673_469_4,
];

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QuadratureOptions {
    pub abs_tol: f64,
    pub rel_tol: f64,
    /// Equal-width panels on `(0, 1)` before adaptive refinement.
    pub initial_intervals: usize,
    pub max_intervals: usize,
}

impl Default for QuadratureOptions {
    fn default() -> Self {
        QuadratureOptions {
            abs_tol: 1e-10,
            rel_tol: 1e-10,
            initial_intervals: 4,
            max_intervals: 50_000,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QuadratureResult {
    pub value: f64,
    pub error_estimate: f64,
    pub intervals: usize,
}

#[derive(Debug, Clone, Copy)]
struct Panel {
    lo: f64,
    hi: f64,
    value: f64,
    error: f64,
}

impl PartialEq for Panel {
    fn eq(&self, other: &Self) -> bool {
        self.error == other.error
    }
}
impl Eq for Panel {}
impl PartialOrd for Panel {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}
impl Ord for Panel {
    fn cmp(&self, other: &Self) -> Ordering {
        self.error.total_cmp(&other.error)
    }
}

fn gauss_kronrod(f: &impl Fn(f64) -> f64, lo: f64, hi: f64) -> Panel {
    let center = 0.5 * (lo + hi);
    let half = 0.5 * (hi - lo);
    let fc = f(center);
    let mut kronrod = WGK[7] * fc;
    let mut gauss = WG[3] * fc;
    for (j, (&x, &w)) in XGK.iter().zip(WGK.iter()).take(7).enumerate() {
        let pair = f(center - half * x) + f(center + half * x);
        kronrod += w * pair;
        if j % 2 == 1 {
            gauss += WG[j / 2] * pair;
        }
    }
    Panel {
        lo,
        hi,
        value: kronrod * half,
        error: ((kronrod - gauss) * half).abs(),
    }
}

/// Globally adaptive G7/K15 on a finite interval, bisecting the panel with
/// the largest error estimate.
pub fn integrate_finite(
    f: impl Fn(f64) -> f64,
    lo: f64,
    hi: f64,
    opts: &QuadratureOptions,
) -> Result<QuadratureResult> {
    let n0 = opts.initial_intervals.max(1);
    let width = (hi - lo) / n0 as f64;
    let mut heap: BinaryHeap<Panel> = (0..n0)
        .map(|i| {
            let a = lo + i as f64 * width;
            let b = if i + 1 == n0 { hi } else { a + width };
            gauss_kronrod(&f, a, b)
        })
        .collect();
    loop {
        let value: f64 = heap.iter().map(|p| p.value).sum();
        let error: f64 = heap.iter().map(|p| p.error).sum();
        if !value.is_finite() || !error.is_finite() {
            return Err(SopError::NonConvergence {
                what: "adaptive quadrature (non-finite integrand)",
                error_estimate: error,
            });
        }
        if error <= opts.abs_tol.max(opts.rel_tol * value.abs()) {
            return Ok(QuadratureResult {
                value,
                error_estimate: error,
                intervals: heap.len(),
            });
        }
        if heap.len() >= opts.max_intervals {
            return Err(SopError::NonConvergence {
                what: "adaptive quadrature",
                error_estimate: error,
            });
        }
        let worst = heap.pop().expect("non-empty");
        let mid = 0.5 * (worst.lo + worst.hi);
        heap.push(gauss_kronrod(&f, worst.lo, mid));
        heap.push(gauss_kronrod(&f, mid, worst.hi));
    }
}

/// The outage integrand `F_D(λ(y)) f_E(y)`.
pub struct Integrand<'a> {
    pub destination_cdf: Box<dyn Fn(f64) -> f64 + Sync + 'a>,
    pub eavesdropper: GammaSnr,
    pub rho: f64,
}

impl<'a> Integrand<'a> {
    /// `λ(y) = (1+y)ρ - 1`, the destination SNR at which the secrecy rate
    /// equals the threshold for eavesdropper SNR `y`.
    pub fn lambda(&self, y: f64) -> f64 {
        (1.0 + y) * self.rho - 1.0
    }

    pub fn eval(&self, y: f64) -> f64 {
        (self.destination_cdf)(self.lambda(y)) * snr_pdf(self.eavesdropper, y).unwrap_or(f64::NAN)
    }

    /// Integrate over `[0, ∞)` via `y = A_E t / (1 - t)`.
    pub fn integrate(&self, opts: &QuadratureOptions) -> Result<QuadratureResult> {
        let unit = GammaSnr {
            shape: self.eavesdropper.shape,
            scale: 1.0,
        };
        let scale = self.eavesdropper.scale;
        let g = |t: f64| {
            let one_minus = 1.0 - t;
            let u = t / one_minus;
            let density = snr_pdf(unit, u).unwrap_or(f64::NAN);
            if density == 0.0 {
                return 0.0;
            }
            (self.destination_cdf)(self.lambda(scale * u)) * density / (one_minus * one_minus)
        };
        integrate_finite(g, 0.0, 1.0, opts)
    }
}

/// Outage probability by direct quadrature, default tolerances.
pub fn quadrature_sop(query: &SopQuery) -> Result<f64> {
    Ok(quadrature_sop_with(query, &QuadratureOptions::default())?.value)
}

pub fn quadrature_sop_with(query: &SopQuery, opts: &QuadratureOptions) -> Result<QuadratureResult> {
    let cfg = query.cfg;
    cfg.validate()?;
    let z = cfg.zeta;
    let k = cfg.transmitters as i32;
    let dest = cfg.destination();
    let cdf = move |x: f64| snr_cdf(dest, x).unwrap_or(f64::NAN);
    let mix = move |x: f64| mixture_cdf(dest, z, x).unwrap_or(f64::NAN);
    let integrand = |f: Box<dyn Fn(f64) -> f64 + Sync>| Integrand {
        destination_cdf: f,
        eavesdropper: cfg.eavesdropper(),
        rho: cfg.rho(),
    };
    let (inner, outer): (Integrand, Box<dyn Fn(f64) -> f64>) = match (query.scheme, query.scenario) {
        (Scheme::Ss, Scenario::Ku) => (
            integrand(Box::new(move |x| cdf(x).powi(k))),
            Box::new(move |i| (1.0 - z) + z * i),
        ),
        (Scheme::Ss, Scenario::Ka) => (
            integrand(Box::new(move |x| mix(x).powi(k))),
            Box::new(|i| i),
        ),
        (Scheme::Os, Scenario::Ku) => (
            integrand(Box::new(cdf)),
            Box::new(move |i: f64| (1.0 - z) + z * i.powi(k)),
        ),
        (Scheme::Os, Scenario::Ka) => (
            integrand(Box::new(mix)),
            Box::new(move |i: f64| i.powi(k)),
        ),
    };
    let res = inner.integrate(opts)?;
    Ok(QuadratureResult {
        value: outer(res.value).clamp(0.0, 1.0),
        ..res
    })
}
