//! Self-consistency suite: closed forms against quadrature and simulation,
//! floors, orderings, parameter trends, identities and determinism.
//!
//! The exact-value evaluator is injectable so a deliberately corrupted
//! formula can be shown to trip the suite.

use std::fmt;

use crate::analytic::{self, Scenario, Scheme, SopQuery};
use crate::channel::{snr_cdf, snr_cdf_finite_sum, GammaSnr, SystemConfig};
use crate::error::Result;
use crate::montecarlo::{simulate_all, McReport, McSettings};
use crate::numerics::{enumerate_weak_compositions, ln_factorial};
use crate::oracle;

pub type Evaluator<'a> = &'a (dyn Fn(&SopQuery) -> Result<f64> + Sync);

/// The shipped closed forms.
pub fn closed_form(query: &SopQuery) -> Result<f64> {
    Ok(analytic::sop(query)?.value)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum GridSize {
    /// A few cells per check, for smoke runs.
    Quick,
    /// The full acceptance grid.
    Full,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ValidationOptions {
    pub grid: GridSize,
    pub mc: McSettings,
}

impl Default for ValidationOptions {
    fn default() -> Self {
        ValidationOptions {
            grid: GridSize::Full,
            mc: McSettings::default(),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct CheckOutcome {
    pub id: u8,
    pub name: &'static str,
    pub cells: usize,
    /// Offending cells, in grid order.
    pub failures: Vec<String>,
}

impl CheckOutcome {
    fn new(id: u8, name: &'static str) -> Self {
        CheckOutcome {
            id,
            name,
            cells: 0,
            failures: Vec::new(),
        }
    }

    fn record(&mut self, ok: bool, describe: impl FnOnce() -> String) {
        self.cells += 1;
        if !ok {
            self.failures.push(describe());
        }
    }

    pub fn passed(&self) -> bool {
        self.failures.is_empty() && self.cells > 0
    }
}

impl fmt::Display for CheckOutcome {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let status = if self.passed() { "PASS" } else { "FAIL" };
        write!(
            f,
            "{status} [{}] {} ({} cells, {} failed)",
            self.id,
            self.name,
            self.cells,
            self.failures.len()
        )?;
        for cell in self.failures.iter().take(5) {
            write!(f, "\n    {cell}")?;
        }
        if self.failures.len() > 5 {
            write!(f, "\n    ... {} more", self.failures.len() - 5)?;
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct ValidationReport {
    pub checks: Vec<CheckOutcome>,
}

impl ValidationReport {
    pub fn all_passed(&self) -> bool {
        self.checks.iter().all(CheckOutcome::passed)
    }

    pub fn check(&self, id: u8) -> Option<&CheckOutcome> {
        self.checks.iter().find(|c| c.id == id)
    }
}

impl fmt::Display for ValidationReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for c in &self.checks {
            writeln!(f, "{c}")?;
        }
        let passed = self.checks.iter().filter(|c| c.passed()).count();
        write!(f, "{passed}/{} checks passed", self.checks.len())
    }
}

struct Grid {
    transmitters: Vec<usize>,
    zetas: Vec<f64>,
    snr_db: Vec<f64>,
    floor_transmitters: Vec<usize>,
    floor_zetas: Vec<f64>,
}

impl Grid {
    fn new(size: GridSize) -> Self {
        match size {
            GridSize::Full => Grid {
                transmitters: vec![1, 2, 5],
                zetas: vec![0.9, 0.99, 1.0],
                snr_db: vec![0.0, 10.0, 20.0, 30.0],
                floor_transmitters: vec![1, 2, 3, 5],
                floor_zetas: vec![0.9, 0.99],
            },
            GridSize::Quick => Grid {
                transmitters: vec![1, 3],
                zetas: vec![0.9, 1.0],
                snr_db: vec![0.0, 20.0],
                floor_transmitters: vec![1, 3],
                floor_zetas: vec![0.9],
            },
        }
    }

    fn cells(&self) -> Vec<SystemConfig> {
        let mut out = Vec::new();
        for &k in &self.transmitters {
            for &z in &self.zetas {
                for &s in &self.snr_db {
                    out.push(SystemConfig::reference(k, z, s));
                }
            }
        }
        out
    }
}

fn cases() -> impl Iterator<Item = (Scheme, Scenario)> {
    Scheme::ALL
        .into_iter()
        .flat_map(|s| Scenario::ALL.into_iter().map(move |c| (s, c)))
}

/// Evaluated values for one grid cell.
struct Cell {
    cfg: SystemConfig,
    exact: [f64; 4],
    report: McReport,
}

impl Cell {
    fn get(&self, scheme: Scheme, scenario: Scenario) -> f64 {
        self.exact[case_index(scheme, scenario)]
    }
}

fn case_index(scheme: Scheme, scenario: Scenario) -> usize {
    2 * (scheme == Scheme::Os) as usize + (scenario == Scenario::Ka) as usize
}

fn label(q: &SopQuery) -> String {
    q.to_string()
}

/// Run checks 1 to 8 with the shipped closed forms.
pub fn run_validation(opts: &ValidationOptions) -> Result<ValidationReport> {
    run_validation_with(opts, &closed_form)
}

pub fn run_validation_with(opts: &ValidationOptions, exact: Evaluator<'_>) -> Result<ValidationReport> {
    opts.mc.validate()?;
    let grid = Grid::new(opts.grid);
    let mut cells = Vec::new();
    for cfg in grid.cells() {
        let mut values = [0.0; 4];
        for (scheme, scenario) in cases() {
            values[case_index(scheme, scenario)] = exact(&SopQuery::new(cfg, scheme, scenario))?;
        }
        cells.push(Cell {
            cfg,
            exact: values,
            report: simulate_all(&cfg, &opts.mc)?,
        });
    }
    Ok(ValidationReport {
        checks: vec![
            check_agreement(&cells)?,
            check_floors(&grid, exact)?,
            check_orderings(&cells),
            check_backhaul_floors(&cells),
            check_multipath(exact)?,
            check_path_loss(exact)?,
            check_identities(exact)?,
            check_determinism(&opts.mc)?,
        ],
    })
}

fn check_agreement(cells: &[Cell]) -> Result<CheckOutcome> {
    let mut out = CheckOutcome::new(1, "closed form vs quadrature (1e-8) and Monte Carlo (max(3 CI, 1e-3))");
    for cell in cells {
        for (scheme, scenario) in cases() {
            let q = SopQuery::new(cell.cfg, scheme, scenario);
            let exact = cell.get(scheme, scenario);
            let quad = oracle::quadrature_sop(&q)?;
            out.record((exact - quad).abs() <= 1e-8, || {
                format!("{}: closed form {exact:e} vs quadrature {quad:e}", label(&q))
            });
            let est = cell.report.estimate(scheme, scenario);
            let tol = (3.0 * est.ci_half_width).max(1e-3);
            out.record((exact - est.p_hat).abs() <= tol, || {
                format!(
                    "{}: closed form {exact:e} vs simulation {:e} (tolerance {tol:e})",
                    label(&q),
                    est.p_hat
                )
            });
        }
    }
    Ok(out)
}

fn check_floors(grid: &Grid, exact: Evaluator<'_>) -> Result<CheckOutcome> {
    let mut out = CheckOutcome::new(2, "high-SNR floor within 1e-4 relative at 200 dB");
    for &k in &grid.floor_transmitters {
        for &z in &grid.floor_zetas {
            for (scheme, scenario) in cases() {
                let q = SopQuery::new(SystemConfig::reference(k, z, 200.0), scheme, scenario);
                let floor = analytic::asymptotic_sop(&q)?.value;
                let value = exact(&q)?;
                let rel = (floor - value).abs() / value.abs();
                out.record(rel <= 1e-4, || {
                    format!("{}: floor {floor:e} vs exact {value:e} (relative {rel:e})", label(&q))
                });
            }
        }
    }
    Ok(out)
}


fn check_orderings(cells: &[Cell]) -> CheckOutcome {
    let mut out = CheckOutcome::new(3, "OS <= SS and KA <= KU, strict when zeta < 1 and K >= 2");
    for cell in cells {
        let strict = cell.cfg.zeta < 1.0 && cell.cfg.transmitters >= 2;
        let tag = SopQuery::new(cell.cfg, Scheme::Ss, Scenario::Ku).to_string();
        let mut pair = |lo: f64, hi: f64, what: &str| {
            let ok = if strict { hi - lo >= 1e-12 } else { lo <= hi + 1e-12 };
            out.record(ok, || format!("{tag}: {what} violated ({lo:e} vs {hi:e})"));
        };
        for scenario in Scenario::ALL {
            pair(cell.get(Scheme::Os, scenario), cell.get(Scheme::Ss, scenario), &format!("OS <= SS under {scenario}"));
        }
        for scheme in Scheme::ALL {
            pair(cell.get(scheme, Scenario::Ka), cell.get(scheme, Scenario::Ku), &format!("KA <= KU under {scheme}"));
        }
    }
    out
}

fn check_backhaul_floors(cells: &[Cell]) -> CheckOutcome {
    let mut out = CheckOutcome::new(4, "backhaul floors KU >= 1-zeta, KA >= (1-zeta)^K, empty active set within 3 sigma");
    for cell in cells {
        let z = cell.cfg.zeta;
        let k = cell.cfg.transmitters as i32;
        let empty = (1.0 - z).powi(k);
        for scheme in Scheme::ALL {
            let ku = cell.get(scheme, Scenario::Ku);
            let ka = cell.get(scheme, Scenario::Ka);
            let q = SopQuery::new(cell.cfg, scheme, Scenario::Ku);
            out.record(ku >= (1.0 - z) - 1e-12, || format!("{q}: {ku:e} below 1-zeta"));
            let q = SopQuery::new(cell.cfg, scheme, Scenario::Ka);
            out.record(ka >= empty - 1e-12, || format!("{q}: {ka:e} below (1-zeta)^K = {empty:e}"));
        }
        let n = cell.report.settings.n_samples as f64;
        let freq = cell.report.empty_active_frequency();
        let sigma = (empty * (1.0 - empty) / n).sqrt();
        out.record((freq - empty).abs() <= 3.0 * sigma, || {
            format!(
                "K={} zeta={}: empty active frequency {freq:e} vs {empty:e} (3 sigma {:e})",
                cell.cfg.transmitters,
                z,
                3.0 * sigma
            )
        });
    }
    out
}

fn strictly_monotone(values: &[f64], decreasing: bool) -> bool {
    values
        .windows(2)
        .all(|w| if decreasing { w[1] < w[0] } else { w[1] > w[0] })
}

fn check_multipath(exact: Evaluator<'_>) -> Result<CheckOutcome> {
    let mut out = CheckOutcome::new(5, "SOP falls with M and rises with N (K=5, zeta=0.9, 20 dB)");
    let base = SystemConfig::reference(5, 0.9, 20.0);
    for (scheme, scenario) in cases() {
        let mut by_m = Vec::new();
        let mut by_n = Vec::new();
        for p in [2u32, 4, 6] {
            let cfg = SystemConfig { dest_paths: p, eve_paths: 4, ..base };
            by_m.push(exact(&SopQuery::new(cfg, scheme, scenario))?);
            let cfg = SystemConfig { dest_paths: 4, eve_paths: p, ..base };
            by_n.push(exact(&SopQuery::new(cfg, scheme, scenario))?);
        }
        out.record(strictly_monotone(&by_m, true), || {
            format!("{scheme}-{scenario}: M=2,4,6 with N=4 gives {by_m:?}")
        });
        out.record(strictly_monotone(&by_n, false), || {
            format!("{scheme}-{scenario}: N=2,4,6 with M=4 gives {by_n:?}")
        });
    }
    Ok(out)
}

fn check_path_loss(exact: Evaluator<'_>) -> Result<CheckOutcome> {
    let mut out = CheckOutcome::new(6, "SOP falls as a/b grows over 1, 2.5, 5 (b=0.2, 20 dB)");
    let base = SystemConfig::reference(5, 0.9, 20.0);
    for (scheme, scenario) in cases() {
        let mut values = Vec::new();
        for ratio in [1.0, 2.5, 5.0] {
            let cfg = SystemConfig { a: ratio * 0.2, b: 0.2, ..base };
            values.push(exact(&SopQuery::new(cfg, scheme, scenario))?);
        }
        out.record(strictly_monotone(&values, true), || {
            format!("{scheme}-{scenario}: a/b=1,2.5,5 gives {values:?}")
        });
    }
    Ok(out)
}

fn check_identities(exact: Evaluator<'_>) -> Result<CheckOutcome> {
    let mut out = CheckOutcome::new(7, "finite-sum CDF, multinomial expansion, zeta=1 and K=1 coincidences");
    for m in 1..=8u32 {
        let dist = GammaSnr { shape: m, scale: 1.0 };
        for x in [0.01, 0.1, 0.5, 1.0, 2.0, 5.0, 10.0, 20.0, 50.0] {
            let a = snr_cdf_finite_sum(dist, x)?;
            let b = snr_cdf(dist, x)?;
            out.record((a - b).abs() <= 1e-12, || {
                format!("CDF M={m} x={x}: finite sum {a:e} vs regularized {b:e}")
            });
        }
    }
    for k in 0..=6usize {
        for m in 1..=8usize {
            for x in [0.001f64, 0.1, 0.5, 1.0, 2.0] {
                let base: f64 = (0..m).map(|j| x.powi(j as i32) / ln_factorial(j).exp()).sum();
                let expected = base.powi(k as i32);
                let got: f64 = enumerate_weak_compositions(k, m)?
                    .map(|c| c.multinomial_coeff * c.inv_factorial_product * x.powi(c.beta1 as i32))
                    .sum();
                out.record((got - expected).abs() <= 1e-10 * expected.abs(), || {
                    format!("multinomial k={k} M={m} x={x}: {got:e} vs {expected:e}")
                });
            }
        }
    }
    for k in [1, 2, 5] {
        for snr in [0.0, 10.0, 20.0, 30.0] {
            let cfg = SystemConfig::reference(k, 1.0, snr);
            for scheme in Scheme::ALL {
                let ku = exact(&SopQuery::new(cfg, scheme, Scenario::Ku))?;
                let ka = exact(&SopQuery::new(cfg, scheme, Scenario::Ka))?;
                out.record((ku - ka).abs() <= 1e-12, || {
                    format!("{}: KU {ku:e} vs KA {ka:e}", SopQuery::new(cfg, scheme, Scenario::Ku))
                });
            }
        }
    }
    for z in [0.5, 0.9, 1.0] {
        for snr in [0.0, 20.0] {
            let cfg = SystemConfig::reference(1, z, snr);
            for scenario in Scenario::ALL {
                let ss = exact(&SopQuery::new(cfg, Scheme::Ss, scenario))?;
                let os = exact(&SopQuery::new(cfg, Scheme::Os, scenario))?;
                out.record((ss - os).abs() <= 1e-12, || {
                    format!("{}: SS {ss:e} vs OS {os:e}", SopQuery::new(cfg, Scheme::Ss, scenario))
                });
            }
        }
    }
    Ok(out)
}

fn check_determinism(mc: &McSettings) -> Result<CheckOutcome> {
    let mut out = CheckOutcome::new(8, "Monte Carlo identical across worker counts");
    let cfg = SystemConfig::reference(5, 0.9, 10.0);
    let base = McSettings {
        n_samples: mc.n_samples.min(300_000),
        ..*mc
    };
    let render = |r: &McReport| {
        cases()
            .map(|(s, c)| {
                let e = r.estimate(s, c);
                format!("{s},{c},{},{:?},{:?}", e.outages, e.p_hat, e.ci_half_width)
            })
            .chain(std::iter::once(r.empty_active_count().to_string()))
            .collect::<Vec<_>>()
            .join("\n")
    };
    let reference = simulate_all(&cfg, &McSettings { workers: Some(1), ..base })?;
    for workers in [Some(2), Some(4), None] {
        let again = simulate_all(&cfg, &McSettings { workers, ..base })?;
        let same = render(&again) == render(&reference);
        out.record(same, || format!("workers={workers:?} differs from workers=1 (seed {})", base.seed));
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::error::SopError;

    fn quick() -> ValidationOptions {
        ValidationOptions {
            grid: GridSize::Quick,
            mc: McSettings {
                n_samples: 200_000,
                ..McSettings::default()
            },
        }
    }

    #[test]
    fn quick_suite_passes() {
        let report = run_validation(&quick()).unwrap();
        assert_eq!(report.checks.len(), 8);
        assert!(report.all_passed(), "{report}");
    }

    #[test]
    fn corrupted_formula_is_caught_and_named() {
        let corrupt = |q: &SopQuery| -> Result<f64> {
            let v = closed_form(q)?;
            if q.scheme == Scheme::Os && q.scenario == Scenario::Ka && q.cfg.transmitters >= 2 {
                Ok((v * 1.01).min(1.0))
            } else {
                Ok(v)
            }
        };
        let report = run_validation_with(&quick(), &corrupt).unwrap();
        assert!(!report.all_passed());
        let c1 = report.check(1).unwrap();
        assert!(!c1.passed());
        assert!(c1.failures.iter().all(|f| f.contains("os-ka")), "{c1}");
        assert!(c1.to_string().contains("FAIL [1]"));
    }

    #[test]
    fn evaluator_errors_propagate() {
        let failing = |_: &SopQuery| -> Result<f64> { Err(SopError::Overflow("injected")) };
        assert!(run_validation_with(&quick(), &failing).is_err());
    }

    #[test]
    fn monotone_helper() {
        assert!(strictly_monotone(&[3.0, 2.0, 1.0], true));
        assert!(!strictly_monotone(&[3.0, 3.0, 1.0], true));
        assert!(strictly_monotone(&[1.0, 2.0], false));
    }
}
