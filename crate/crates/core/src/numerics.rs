//! Special functions and combinatorial machinery shared by the closed forms.
//!
//! Everything here is pure and allocation-light. Products that span many
//! orders of magnitude are handled in log space by the callers; the helpers
//! below expose both the linear and logarithmic views where that matters.

use crate::error::{Result, SopError};

/// Default ceiling on the number of weak compositions enumerated for one `(k, M)`.
pub const DEFAULT_COMPOSITION_CAP: u128 = 10_000_000;

/// Ratio `|sum| / max|term|` below which an alternating sum is flagged.
pub const SIGNIFICANCE_THRESHOLD: f64 = 1e-10;

const HALF_LN_2PI: f64 = 0.918_938_533_204_672_8;

/// Natural logarithm of the Gamma function for `x > 0`.
///
/// Arguments below 10 are shifted up with the recurrence, then the Stirling
/// series is evaluated with seven correction terms.
pub fn log_gamma(x: f64) -> Result<f64> {
    if !(x > 0.0) || !x.is_finite() {
        return Err(SopError::Domain {
            what: "log_gamma argument",
            value: x,
        });
    }
    if x <= 21.0 && x.fract() == 0.0 {
        return Ok(ln_factorial(x as usize - 1));
    }
    let mut shift = 0.0;
    let mut z = x;
    let mut prod = 1.0;
    while z < 10.0 {
        prod *= z;
        z += 1.0;
        // keep the running product away from underflow for tiny x
        if prod < 1e-200 {
            shift += prod.ln();
            prod = 1.0;
        }
    }
    shift += prod.ln();
    Ok(stirling_ln_gamma(z) - shift)
}

fn stirling_ln_gamma(z: f64) -> f64 {
    let inv = 1.0 / z;
    let inv2 = inv * inv;
    let series = inv
        * (1.0 / 12.0
            + inv2
                * (-1.0 / 360.0
                    + inv2
                        * (1.0 / 1260.0
                            + inv2
                                * (-1.0 / 1680.0
                                    + inv2
                                        * (1.0 / 1188.0
                                            + inv2 * (-691.0 / 360_360.0 + inv2 / 156.0))))));
    (z - 0.5) * z.ln() - z + HALF_LN_2PI + series
}

/// `ln(n!)`, exact to double precision for the small arguments used here.
pub fn ln_factorial(n: usize) -> f64 {
    // 0! .. 20! are exact in f64
    if n <= 20 {
        let mut acc = 1.0_f64;
        for i in 2..=n {
            acc *= i as f64;
        }
        acc.ln()
    } else {
        log_gamma(n as f64 + 1.0).expect("positive argument")
    }
}

/// Exact binomial coefficient, `None` on u128 overflow.
pub fn binomial(n: u64, k: u64) -> Option<u128> {
    if k > n {
        return Some(0);
    }
    let k = k.min(n - k);
    let mut acc: u128 = 1;
    for i in 0..k {
        // acc * (n - i) is divisible by (i + 1) after the multiply
        acc = acc.checked_mul(u128::from(n - i))? / u128::from(i + 1);
    }
    Some(acc)
}

/// `ln C(n, k)`; exact integer route where it fits, log-gamma otherwise.
pub fn ln_binomial(n: u64, k: u64) -> f64 {
    match binomial(n, k) {
        Some(0) => f64::NEG_INFINITY,
        Some(c) => (c as f64).ln(),
        None => ln_factorial(n as usize) - ln_factorial(k as usize) - ln_factorial((n - k) as usize),
    }
}

/// Regularized lower incomplete gamma `P(s, x) = γ(s, x) / Γ(s)`.
///
/// Power series for `x < s + 1`, modified Lentz continued fraction for the
/// complement otherwise.
pub fn regularized_lower_gamma(s: f64, x: f64) -> Result<f64> {
    if !(s > 0.0) || !s.is_finite() {
        return Err(SopError::Domain {
            what: "incomplete gamma shape",
            value: s,
        });
    }
    if !(x >= 0.0) {
        return Err(SopError::Domain {
            what: "incomplete gamma argument",
            value: x,
        });
    }
    if x == 0.0 {
        return Ok(0.0);
    }
    if x.is_infinite() {
        return Ok(1.0);
    }
    let log_prefactor = s * x.ln() - x - log_gamma(s)?;
    if x < s + 1.0 {
        let mut term = 1.0 / s;
        let mut sum = term;
        let mut denom = s;
        for _ in 0..100_000 {
            denom += 1.0;
            term *= x / denom;
            sum += term;
            if term.abs() < sum.abs() * 1e-17 {
                return Ok((log_prefactor.exp() * sum).clamp(0.0, 1.0));
            }
        }
        Err(SopError::NonConvergence {
            what: "incomplete gamma series",
            error_estimate: term.abs(),
        })
    } else {
        const TINY: f64 = 1e-300;
        let mut b = x + 1.0 - s;
        let mut c = 1.0 / TINY;
        let mut d = 1.0 / b;
        let mut h = d;
        for i in 1..100_000 {
            let an = -(i as f64) * (i as f64 - s);
            b += 2.0;
            d = an * d + b;
            if d.abs() < TINY {
                d = TINY;
            }
            c = b + an / c;
            if c.abs() < TINY {
                c = TINY;
            }
            d = 1.0 / d;
            let delta = d * c;
            h *= delta;
            if (delta - 1.0).abs() < 1e-16 {
                let upper = log_prefactor.exp() * h;
                return Ok((1.0 - upper).clamp(0.0, 1.0));
            }
        }
        Err(SopError::NonConvergence {
            what: "incomplete gamma continued fraction",
            error_estimate: f64::NAN,
        })
    }
}

/// One term `(k_0, …, k_{M-1})` of the multinomial expansion of
/// `(Σ_m x^m / m!)^k`.
#[derive(Debug, Clone, PartialEq)]
pub struct WeakComposition {
    pub parts: Vec<usize>,
    /// `k! / (k_0! ⋯ k_{M-1}!)`
    pub multinomial_coeff: f64,
    pub ln_multinomial_coeff: f64,
    /// `∏_m (1/m!)^{k_m}`
    pub inv_factorial_product: f64,
    pub ln_inv_factorial_product: f64,
    /// `Σ_m m·k_m`
    pub beta1: usize,
    /// `Σ_m k_m`
    pub beta2: usize,
}

impl WeakComposition {
    fn from_parts(parts: &[usize], ln_fact: &[f64]) -> Self {
        let k: usize = parts.iter().sum();
        let mut ln_coeff = ln_fact[k];
        let mut ln_inv = 0.0;
        let mut beta1 = 0;
        let mut exact: Option<u128> = Some(1);
        let mut running = 0u64;
        for (m, &km) in parts.iter().enumerate() {
            ln_coeff -= ln_fact[km];
            ln_inv -= km as f64 * ln_fact[m];
            beta1 += m * km;
            running += km as u64;
            exact = exact.and_then(|e| binomial(running, km as u64).and_then(|b| e.checked_mul(b)));
        }
        let multinomial_coeff = match exact {
            Some(e) => e as f64,
            None => ln_coeff.exp(),
        };
        if exact.is_some() {
            ln_coeff = multinomial_coeff.ln();
        }
        WeakComposition {
            parts: parts.to_vec(),
            multinomial_coeff,
            ln_multinomial_coeff: ln_coeff,
            inv_factorial_product: ln_inv.exp(),
            ln_inv_factorial_product: ln_inv,
            beta1,
            beta2: k,
        }
    }
}

/// Number of weak compositions of `k` into `parts` parts, `C(k+M-1, M-1)`.
pub fn composition_count(k: usize, parts: usize) -> u128 {
    if parts == 0 {
        return u128::from(k == 0);
    }
    binomial((k + parts - 1) as u64, (parts - 1) as u64).unwrap_or(u128::MAX)
}

/// Odometer over all weak compositions of `k` into `M` parts, starting at
/// `(k, 0, …, 0)` and ending at `(0, …, 0, k)`.
#[derive(Debug, Clone)]
pub struct Compositions {
    state: Vec<usize>,
    ln_fact: Vec<f64>,
    done: bool,
}

impl Iterator for Compositions {
    type Item = WeakComposition;

    fn next(&mut self) -> Option<Self::Item> {
        if self.done {
            return None;
        }
        let out = WeakComposition::from_parts(&self.state, &self.ln_fact);
        let m = self.state.len();
        let last = self.state[m - 1];
        self.state[m - 1] = 0;
        match (0..m - 1).rev().find(|&j| self.state[j] > 0) {
            Some(j) => {
                self.state[j] -= 1;
                self.state[j + 1] = last + 1;
            }
            None => self.done = true,
        }
        Some(out)
    }
}

/// Enumerate weak compositions with the default cap.
pub fn enumerate_weak_compositions(k: usize, parts: usize) -> Result<Compositions> {
    enumerate_weak_compositions_capped(k, parts, DEFAULT_COMPOSITION_CAP)
}

pub fn enumerate_weak_compositions_capped(k: usize, parts: usize, cap: u128) -> Result<Compositions> {
    if parts == 0 {
        return Err(SopError::InvalidConfig(
            "compositions need at least one part".into(),
        ));
    }
    let count = composition_count(k, parts);
    if count > cap {
        return Err(SopError::CompositionCap {
            k,
            parts,
            count,
            cap,
        });
    }
    let top = k.max(parts);
    let ln_fact = (0..=top).map(ln_factorial).collect();
    let mut state = vec![0; parts];
    state[0] = k;
    Ok(Compositions {
        state,
        ln_fact,
        done: false,
    })
}

/// Result of a compensated summation.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CompensatedSum {
    pub sum: f64,
    pub max_abs_term: f64,
}

impl CompensatedSum {
    /// True when the result is tiny relative to the largest term that fed it.
    pub fn lost_significance(&self) -> bool {
        self.max_abs_term > 0.0 && self.sum.abs() / self.max_abs_term < SIGNIFICANCE_THRESHOLD
    }
}

/// Neumaier accumulator.
#[derive(Debug, Clone, Copy, Default)]
pub struct NeumaierSum {
    sum: f64,
    compensation: f64,
    max_abs: f64,
}

impl NeumaierSum {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn add(&mut self, x: f64) {
        let t = self.sum + x;
        if self.sum.abs() >= x.abs() {
            self.compensation += (self.sum - t) + x;
        } else {
            self.compensation += (x - t) + self.sum;
        }
        self.sum = t;
        if x.abs() > self.max_abs || x.is_nan() {
            self.max_abs = x.abs();
        }
    }

    pub fn finish(&self) -> CompensatedSum {
        CompensatedSum {
            sum: self.sum + self.compensation,
            max_abs_term: self.max_abs,
        }
    }
}

pub fn compensated_sum<I: IntoIterator<Item = f64>>(terms: I) -> CompensatedSum {
    let mut acc = NeumaierSum::new();
    for t in terms {
        acc.add(t);
    }
    acc.finish()
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn log_gamma_small_integers() {
        assert!(log_gamma(1.0).unwrap().abs() < 1e-15);
        assert!(log_gamma(2.0).unwrap().abs() < 1e-15);
        // factorial oracle
        let four_fact: f64 = (1..=4).map(|i| i as f64).product();
        let expected = four_fact.ln();
        assert!((log_gamma(5.0).unwrap() - expected).abs() <= 1e-14 * expected);
        assert!((expected - 3.178_053_830_347_945_6).abs() < 1e-15);
    }

    #[test]
    fn log_gamma_against_factorials_and_half_integers() {
        let mut fact = 1.0_f64;
        for n in 1..=170usize {
            fact *= n as f64;
            let lg = log_gamma(n as f64 + 1.0).unwrap();
            assert!((lg - fact.ln()).abs() <= 1e-12 * fact.ln().abs().max(1.0), "n={n}");
        }
        // Γ(1/2) = √π
        let half = log_gamma(0.5).unwrap();
        assert!((half - 0.5 * std::f64::consts::PI.ln()).abs() < 1e-14);
    }

    #[test]
    fn log_gamma_large_argument_matches_statrs() {
        for &x in &[0.75, 3.3, 17.5, 123.25, 1e3, 5e4, 1e6] {
            let ours = log_gamma(x).unwrap();
            let theirs = statrs::function::gamma::ln_gamma(x);
            assert!((ours - theirs).abs() <= 1e-12 * theirs.abs().max(1.0), "x={x}");
        }
    }

    #[test]
    fn log_gamma_rejects_non_positive() {
        assert!(matches!(log_gamma(0.0), Err(SopError::Domain { .. })));
        assert!(matches!(log_gamma(-1.5), Err(SopError::Domain { .. })));
    }

    #[test]
    fn incomplete_gamma_trivial_cases() {
        assert_eq!(regularized_lower_gamma(3.0, 0.0).unwrap(), 0.0);
        for &x in &[0.01, 0.5, 1.0, 2.0, 7.5, 30.0] {
            let expected = 1.0 - (-x as f64).exp();
            assert!((regularized_lower_gamma(1.0, x).unwrap() - expected).abs() < 1e-15);
        }
    }

    #[test]
    fn incomplete_gamma_two_one() {
        // Simpson oracle for ∫_0^1 t e^{-t} dt
        let n = 20_000;
        let h = 1.0 / n as f64;
        let f = |t: f64| t * (-t).exp();
        let mut acc = f(0.0) + f(1.0);
        for i in 1..n {
            let w = if i % 2 == 1 { 4.0 } else { 2.0 };
            acc += w * f(i as f64 * h);
        }
        let oracle = acc * h / 3.0;
        assert!((oracle - 0.264_241_117_657_115_3).abs() < 1e-13);
        let got = regularized_lower_gamma(2.0, 1.0).unwrap();
        assert!((got - 0.264_241_117_657_115_3).abs() < 1e-15);
    }

    #[test]
    fn incomplete_gamma_domain_errors() {
        assert!(regularized_lower_gamma(0.0, 1.0).is_err());
        assert!(regularized_lower_gamma(-2.0, 1.0).is_err());
        assert!(regularized_lower_gamma(2.0, -0.1).is_err());
    }

    #[test]
    fn incomplete_gamma_monotone_grid() {
        let shapes = [0.5, 1.0, 2.0, 4.0, 6.0, 10.0, 25.0];
        let xs: Vec<f64> = (0..200).map(|i| i as f64 * 0.25).collect();
        for &s in &shapes {
            let mut prev = 0.0;
            for &x in &xs {
                let p = regularized_lower_gamma(s, x).unwrap();
                assert!(p >= prev - 1e-15, "s={s} x={x}");
                prev = p;
            }
            assert!(prev > 0.99);
        }
        for &x in &xs {
            let mut prev = 1.0;
            for &s in &shapes {
                let p = regularized_lower_gamma(s, x).unwrap();
                assert!(p <= prev + 1e-15, "s={s} x={x}");
                prev = p;
            }
        }
    }

    #[test]
    fn incomplete_gamma_matches_statrs() {
        for &s in &[0.5, 1.0, 3.0, 6.0, 8.0, 40.0] {
            for &x in &[0.01, 0.3, 1.0, 5.0, 6.0, 7.0, 20.0, 60.0] {
                let ours = regularized_lower_gamma(s, x).unwrap();
                let theirs = statrs::function::gamma::gamma_lr(s, x);
                assert!((ours - theirs).abs() < 1e-13, "s={s} x={x}");
            }
        }
    }

    #[test]
    fn compositions_two_into_two() {
        let all: Vec<_> = enumerate_weak_compositions(2, 2).unwrap().collect();
        let parts: Vec<_> = all.iter().map(|c| c.parts.clone()).collect();
        assert_eq!(parts, vec![vec![2, 0], vec![1, 1], vec![0, 2]]);
        let coeffs: Vec<_> = all.iter().map(|c| c.multinomial_coeff).collect();
        assert_eq!(coeffs, vec![1.0, 2.0, 1.0]);
        assert_eq!(all.iter().map(|c| c.beta1).collect::<Vec<_>>(), vec![0, 1, 2]);
    }

    #[test]
    fn compositions_zero_into_five() {
        let all: Vec<_> = enumerate_weak_compositions(0, 5).unwrap().collect();
        assert_eq!(all.len(), 1);
        assert_eq!(all[0].parts, vec![0; 5]);
        assert_eq!(all[0].multinomial_coeff, 1.0);
        assert_eq!(all[0].beta1, 0);
        assert_eq!(all[0].beta2, 0);
    }

    fn brute_force(k: usize, m: usize) -> Vec<Vec<usize>> {
        // all tuples in [0, k]^m with the right sum
        let mut out = Vec::new();
        let total = (k + 1).pow(m as u32);
        for mut code in 0..total {
            let mut t = Vec::with_capacity(m);
            for _ in 0..m {
                t.push(code % (k + 1));
                code /= k + 1;
            }
            if t.iter().sum::<usize>() == k {
                out.push(t);
            }
        }
        out
    }

    #[test]
    fn compositions_three_into_three() {
        let all: Vec<_> = enumerate_weak_compositions(3, 3).unwrap().collect();
        let mut brute = brute_force(3, 3);
        assert_eq!(brute.len(), 10);
        let mut ours: Vec<_> = all.iter().map(|c| c.parts.clone()).collect();
        ours.sort();
        brute.sort();
        assert_eq!(ours, brute);
        let total: f64 = all.iter().map(|c| c.multinomial_coeff).sum();
        assert_eq!(total, 27.0);
    }

    #[test]
    fn compositions_count_and_order() {
        for k in 0..=8 {
            for m in 1..=8 {
                let all: Vec<_> = enumerate_weak_compositions(k, m).unwrap().collect();
                assert_eq!(all.len() as u128, composition_count(k, m));
                if k <= 5 && m <= 5 {
                    assert_eq!(all.len(), brute_force(k, m).len());
                }
                for w in all.windows(2) {
                    assert!(w[0].parts > w[1].parts, "descending lexicographic order");
                }
                for c in &all {
                    assert_eq!(c.parts.iter().sum::<usize>(), k);
                    assert_eq!(c.beta2, k);
                    assert!(c.multinomial_coeff >= 1.0);
                }
                let total: f64 = all.iter().map(|c| c.multinomial_coeff).sum();
                assert_eq!(total, (m as f64).powi(k as i32));
            }
        }
    }

    #[test]
    fn composition_cap_is_an_error() {
        let err = enumerate_weak_compositions_capped(10, 10, 1000).unwrap_err();
        match err {
            SopError::CompositionCap { k, parts, count, .. } => {
                assert_eq!((k, parts), (10, 10));
                assert_eq!(count, 92_378);
            }
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn compensated_sum_examples() {
        let s = compensated_sum([1.0, -1.0, 1e-20]);
        assert_eq!(s.sum, 1e-20);
        let s = compensated_sum(std::iter::repeat(0.1).take(10));
        assert!((s.sum - 1.0).abs() <= f64::EPSILON);
        // Σ (-1)^k C(30, k) = (1 - 1)^30 = 0
        let s = compensated_sum((0..=30).map(|k| {
            let c = binomial(30, k).unwrap() as f64;
            if k % 2 == 0 {
                c
            } else {
                -c
            }
        }));
        assert!(s.sum.abs() < 1e-6);
        assert!(s.lost_significance());
        assert_eq!(s.max_abs_term, binomial(30, 15).unwrap() as f64);
    }

    #[test]
    fn compensated_sum_propagates_nan() {
        assert!(compensated_sum([1.0, f64::NAN, 2.0]).sum.is_nan());
    }

    #[test]
    fn binomial_exact() {
        assert_eq!(binomial(5, 2), Some(10));
        assert_eq!(binomial(60, 30), Some(118_264_581_564_861_424));
        assert_eq!(binomial(3, 5), Some(0));
        assert!((ln_binomial(200, 100) - 135.753_236_081_278_5).abs() < 1e-10);
    }

    proptest! {
        #[test]
        fn multinomial_expansion_identity(x in 0.001f64..=2.0, k in 0usize..=6, m in 1usize..=8) {
            let base: f64 = (0..m).map(|j| x.powi(j as i32) / (ln_factorial(j).exp())).sum();
            let expected = base.powi(k as i32);
            let got: f64 = enumerate_weak_compositions(k, m)
                .unwrap()
                .map(|c| c.multinomial_coeff * c.inv_factorial_product * x.powi(c.beta1 as i32))
                .sum();
            prop_assert!((got - expected).abs() <= 1e-10 * expected.abs());
        }
    }
}
