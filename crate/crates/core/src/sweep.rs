//! SNR sweeps, figure presets and their CSV / plot-description outputs.

use std::fmt;
use std::fs::File;
use std::io::{BufWriter, Read, Write};
use std::path::Path;
use std::str::FromStr;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::analytic::{self, Scenario, Scheme, SopQuery};
use crate::channel::SystemConfig;
use crate::error::{Result, SopError};
use crate::montecarlo::{simulate_all, McSettings};
use crate::oracle;

pub const CSV_HEADER: [&str; 7] = [
    "snr_db",
    "scheme",
    "scenario",
    "method",
    "sop",
    "ci_half_width",
    "flags",
];

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Method {
    Analytic,
    Asymptotic,
    Mc,
    Quadrature,
}

impl Method {
    pub const ALL: [Method; 4] = [
        Method::Analytic,
        Method::Asymptotic,
        Method::Mc,
        Method::Quadrature,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            Method::Analytic => "analytic",
            Method::Asymptotic => "asymptotic",
            Method::Mc => "mc",
            Method::Quadrature => "quadrature",
        }
    }
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Method {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "analytic" => Ok(Method::Analytic),
            "asymptotic" => Ok(Method::Asymptotic),
            "mc" => Ok(Method::Mc),
            "quadrature" => Ok(Method::Quadrature),
            other => Err(format!(
                "unknown method '{other}' (expected analytic|asymptotic|mc|quadrature)"
            )),
        }
    }
}

/// One evaluated SOP.
#[derive(Debug, Clone, PartialEq)]
pub struct Evaluation {
    pub sop: f64,
    pub ci_half_width: Option<f64>,
    pub flags: Vec<&'static str>,
}

/// Evaluate one query by one method. MC settings are required for [`Method::Mc`].
pub fn evaluate(query: &SopQuery, method: Method, mc: Option<&McSettings>) -> Result<Evaluation> {
    match method {
        Method::Analytic | Method::Asymptotic => {
            let v = if method == Method::Analytic {
                analytic::sop(query)?
            } else {
                analytic::asymptotic_sop(query)?
            };
            Ok(Evaluation {
                sop: v.value,
                ci_half_width: None,
                flags: if v.significance_flag {
                    vec!["significance"]
                } else {
                    vec![]
                },
            })
        }
        Method::Quadrature => Ok(Evaluation {
            sop: oracle::quadrature_sop(query)?,
            ci_half_width: None,
            flags: vec![],
        }),
        Method::Mc => {
            let mc = mc.ok_or_else(|| SopError::InvalidConfig("mc method needs settings".into()))?;
            let est = crate::montecarlo::simulate_sop(query, mc)?;
            Ok(mc_evaluation(&est))
        }
    }
}

fn mc_evaluation(est: &crate::montecarlo::SopEstimate) -> Evaluation {
    Evaluation {
        sop: est.p_hat,
        ci_half_width: Some(est.ci_half_width),
        flags: if est.low_confidence {
            vec!["low-confidence"]
        } else {
            vec![]
        },
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepSpec {
    /// The `snr` field is overwritten at every sweep point.
    pub base: SystemConfig,
    pub snr_db_start: f64,
    pub snr_db_stop: f64,
    pub snr_db_step: f64,
    pub schemes: Vec<Scheme>,
    pub scenarios: Vec<Scenario>,
    pub methods: Vec<Method>,
    pub mc: Option<McSettings>,
}

impl SweepSpec {
    pub fn validate(&self) -> Result<()> {
        let bad = |m: &str| Err(SopError::InvalidConfig(m.to_string()));
        if !(self.snr_db_step > 0.0) || !self.snr_db_step.is_finite() {
            return bad("snr step must be > 0");
        }
        if !(self.snr_db_start <= self.snr_db_stop) {
            return bad("snr start must not exceed snr stop");
        }
        if self.schemes.is_empty() || self.scenarios.is_empty() || self.methods.is_empty() {
            return bad("at least one scheme, scenario and method is required");
        }
        if self.methods.contains(&Method::Mc) {
            match &self.mc {
                Some(mc) => mc.validate()?,
                None => return bad("mc method requested without mc settings"),
            }
        }
        self.base.with_snr_db(self.snr_db_start).validate()
    }

    pub fn snr_points(&self) -> Vec<f64> {
        let span = (self.snr_db_stop - self.snr_db_start) / self.snr_db_step;
        let count = (span + 1e-9).floor() as usize + 1;
        (0..count)
            .map(|i| self.snr_db_start + i as f64 * self.snr_db_step)
            .collect()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepRow {
    pub snr_db: f64,
    pub scheme: Scheme,
    pub scenario: Scenario,
    pub method: Method,
    pub sop: f64,
    pub ci_half_width: Option<f64>,
    pub flags: Vec<String>,
}

impl SweepRow {
    fn sort_key(&self) -> (f64, Scheme, Scenario, Method) {
        (self.snr_db, self.scheme, self.scenario, self.method)
    }
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct SweepResult {
    pub rows: Vec<SweepRow>,
    /// MC settings used, recorded in the CSV trailer.
    pub mc: Option<McSettings>,
}

pub fn run_sweep(spec: &SweepSpec) -> Result<SweepResult> {
    spec.validate()?;
    let mut floors = Vec::new();
    if spec.methods.contains(&Method::Asymptotic) {
        for &scheme in &spec.schemes {
            for &scenario in &spec.scenarios {
                let q = SopQuery::new(spec.base.with_snr_db(spec.snr_db_start), scheme, scenario);
                floors.push(((scheme, scenario), evaluate(&q, Method::Asymptotic, None)?));
            }
        }
    }
    let per_point: Vec<Result<Vec<SweepRow>>> = spec
        .snr_points()
        .into_par_iter()
        .map(|snr_db| {
            let cfg = spec.base.with_snr_db(snr_db);
            let mc_report = match (&spec.mc, spec.methods.contains(&Method::Mc)) {
                (Some(mc), true) => Some(simulate_all(&cfg, mc)?),
                _ => None,
            };
            let mut rows = Vec::new();
            for &scheme in &spec.schemes {
                for &scenario in &spec.scenarios {
                    let q = SopQuery::new(cfg, scheme, scenario);
                    for &method in &spec.methods {
                        let ev = match method {
                            Method::Asymptotic => floors
                                .iter()
                                .find(|(key, _)| *key == (scheme, scenario))
                                .map(|(_, ev)| ev.clone())
                                .expect("floor computed"),
                            Method::Mc => mc_evaluation(
                                &mc_report.as_ref().expect("mc ran").estimate(scheme, scenario),
                            ),
                            _ => evaluate(&q, method, None)?,
                        };
                        rows.push(SweepRow {
                            snr_db,
                            scheme,
                            scenario,
                            method,
                            sop: ev.sop,
                            ci_half_width: ev.ci_half_width,
                            flags: ev.flags.iter().map(|s| s.to_string()).collect(),
                        });
                    }
                }
            }
            Ok(rows)
        })
        .collect();
    let mut rows = Vec::new();
    for r in per_point {
        rows.extend(r?);
    }
    rows.sort_by(|a, b| a.sort_key().partial_cmp(&b.sort_key()).expect("finite snr"));
    rows.dedup_by(|a, b| a.sort_key() == b.sort_key());
    Ok(SweepResult {
        rows,
        mc: spec.mc.filter(|_| spec.methods.contains(&Method::Mc)),
    })
}

/// Shortest decimal that round-trips to the same `f64`.
pub fn format_float(x: f64) -> String {
    format!("{x:?}")
}

fn mc_trailer(mc: &McSettings) -> String {
    format!(
        "# mc seed={} samples={} confidence={}",
        mc.seed,
        mc.n_samples,
        format_float(mc.confidence)
    )
}

fn csv_writer<W: Write>(out: W) -> csv::Writer<W> {
    csv::WriterBuilder::new()
        .terminator(csv::Terminator::Any(b'\n'))
        .from_writer(out)
}

fn row_fields(row: &SweepRow) -> [String; 7] {
    [
        format_float(row.snr_db),
        row.scheme.to_string(),
        row.scenario.to_string(),
        row.method.to_string(),
        format_float(row.sop),
        row.ci_half_width.map(format_float).unwrap_or_default(),
        row.flags.join(";"),
    ]
}

impl SweepResult {
    pub fn write_csv<W: Write>(&self, mut out: W) -> Result<()> {
        {
            let mut w = csv_writer(&mut out);
            w.write_record(CSV_HEADER)?;
            for row in &self.rows {
                w.write_record(row_fields(row))?;
            }
            w.flush().map_err(csv::Error::from)?;
        }
        if let Some(mc) = &self.mc {
            writeln!(out, "{}", mc_trailer(mc)).map_err(|e| csv::Error::from(e))?;
        }
        Ok(())
    }

    pub fn to_csv_string(&self) -> String {
        let mut buf = Vec::new();
        self.write_csv(&mut buf).expect("in-memory write");
        String::from_utf8(buf).expect("utf-8")
    }

    pub fn save_csv(&self, path: &Path) -> Result<()> {
        let io = |source| SopError::Io {
            path: path.to_path_buf(),
            source,
        };
        let file = File::create(path).map_err(io)?;
        let mut w = BufWriter::new(file);
        self.write_csv(&mut w)?;
        w.flush().map_err(io)
    }

    /// Parse a CSV produced by [`SweepResult::write_csv`]. Comment lines are skipped.
    pub fn read_csv<R: Read>(input: R) -> Result<Vec<SweepRow>> {
        let mut rdr = csv::ReaderBuilder::new()
            .comment(Some(b'#'))
            .from_reader(input);
        let parse_err = |msg: String| SopError::InvalidConfig(format!("malformed sweep CSV: {msg}"));
        let mut rows = Vec::new();
        for rec in rdr.records() {
            let rec = rec?;
            let field = |i: usize| rec.get(i).unwrap_or("");
            let num = |i: usize| field(i).parse::<f64>().map_err(|e| parse_err(format!("{e}")));
            rows.push(SweepRow {
                snr_db: num(0)?,
                scheme: field(1).parse().map_err(parse_err)?,
                scenario: field(2).parse().map_err(parse_err)?,
                method: field(3).parse().map_err(parse_err)?,
                sop: num(4)?,
                ci_half_width: if field(5).is_empty() { None } else { Some(num(5)?) },
                flags: field(6)
                    .split(';')
                    .filter(|s| !s.is_empty())
                    .map(str::to_string)
                    .collect(),
            });
        }
        Ok(rows)
    }
}

// ---------------------------------------------------------------------------
// Figure presets
// ---------------------------------------------------------------------------

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Figure {
    /// Effect of `K` and `ζ`, both scenarios.
    Fig2,
    /// Destination multipath `M ∈ {2,4,6}` with `N = 4`.
    Fig3,
    /// Eavesdropper multipath `N ∈ {2,4,6}` with `M = 4`.
    Fig4,
    /// Path-loss ratio `a/b ∈ {1, 2.5, 5}` with `b = 0.2`.
    Fig5,
}

impl FromStr for Figure {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "fig2" => Ok(Figure::Fig2),
            "fig3" => Ok(Figure::Fig3),
            "fig4" => Ok(Figure::Fig4),
            "fig5" => Ok(Figure::Fig5),
            other => Err(format!("unknown figure '{other}' (expected fig2..fig5)")),
        }
    }
}

impl fmt::Display for Figure {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            Figure::Fig2 => "fig2",
            Figure::Fig3 => "fig3",
            Figure::Fig4 => "fig4",
            Figure::Fig5 => "fig5",
        };
        f.write_str(s)
    }
}

/// Optional replacements for a preset's transmitter counts, reliabilities
/// and rate threshold.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct FigureOverrides {
    pub transmitters: Option<Vec<usize>>,
    pub zetas: Option<Vec<f64>>,
    pub r_th: Option<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Curve {
    pub label: String,
    pub base: SystemConfig,
}

#[derive(Debug, Clone, PartialEq)]
pub struct FigurePreset {
    pub figure: Figure,
    pub title: String,
    pub curves: Vec<Curve>,
    pub snr_db_start: f64,
    pub snr_db_stop: f64,
    pub snr_db_step: f64,
    pub schemes: Vec<Scheme>,
    pub scenarios: Vec<Scenario>,
    pub methods: Vec<Method>,
}

fn cfg(k: usize, zeta: f64, m: u32, n: u32, a: f64, b: f64) -> SystemConfig {
    SystemConfig {
        transmitters: k,
        zeta,
        r_th: 1.0,
        snr: 1.0,
        dest_paths: m,
        eve_paths: n,
        a,
        b,
    }
}

pub fn figure_preset(figure: Figure, overrides: &FigureOverrides) -> FigurePreset {
    let ks = |default: &[usize]| overrides.transmitters.clone().unwrap_or_else(|| default.to_vec());
    let zs = |default: &[f64]| overrides.zetas.clone().unwrap_or_else(|| default.to_vec());
    let mut curves = Vec::new();
    let title;
    match figure {
        Figure::Fig2 => {
            title = "SOP vs SNR, effect of K and zeta".to_string();
            for k in ks(&[2, 5]) {
                for z in zs(&[0.99, 0.9]) {
                    curves.push(Curve {
                        label: format!("K={k} zeta={z}"),
                        base: cfg(k, z, 6, 4, 0.5, 0.2),
                    });
                }
            }
        }
        Figure::Fig3 | Figure::Fig4 => {
            title = if figure == Figure::Fig3 {
                "SOP vs SNR, destination multipath M (N=4)".to_string()
            } else {
                "SOP vs SNR, eavesdropper multipath N (M=4)".to_string()
            };
            for k in ks(&[5]) {
                for z in zs(&[0.9]) {
                    for p in [2u32, 4, 6] {
                        let (m, n, label) = if figure == Figure::Fig3 {
                            (p, 4, format!("M={p}"))
                        } else {
                            (4, p, format!("N={p}"))
                        };
                        curves.push(Curve {
                            label: format!("{label} K={k} zeta={z}"),
                            base: cfg(k, z, m, n, 0.5, 0.2),
                        });
                    }
                }
            }
        }
        Figure::Fig5 => {
            title = "SOP vs SNR, path-loss ratio a/b (b=0.2)".to_string();
            for k in ks(&[5]) {
                for z in zs(&[0.9]) {
                    for ratio in [1.0, 2.5, 5.0] {
                        curves.push(Curve {
                            label: format!("a/b={ratio} K={k} zeta={z}"),
                            base: cfg(k, z, 6, 4, ratio * 0.2, 0.2),
                        });
                    }
                }
            }
        }
    }
    if let Some(r) = overrides.r_th {
        for c in &mut curves {
            c.base.r_th = r;
        }
    }
    FigurePreset {
        figure,
        title,
        curves,
        snr_db_start: -10.0,
        snr_db_stop: 40.0,
        snr_db_step: 2.0,
        schemes: Scheme::ALL.to_vec(),
        scenarios: Scenario::ALL.to_vec(),
        methods: vec![Method::Analytic, Method::Asymptotic, Method::Mc],
    }
}

impl FigurePreset {
    pub fn snr_points_len(&self) -> usize {
        ((self.snr_db_stop - self.snr_db_start) / self.snr_db_step + 1e-9).floor() as usize + 1
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct FigureRow {
    pub curve: String,
    pub cfg: SystemConfig,
    pub row: SweepRow,
}

#[derive(Debug, Clone, PartialEq)]
pub struct FigureResult {
    pub preset: FigurePreset,
    pub rows: Vec<FigureRow>,
    pub mc: Option<McSettings>,
}

pub const FIGURE_CSV_HEADER: [&str; 15] = [
    "curve",
    "K",
    "zeta",
    "M",
    "N",
    "a",
    "b",
    "r_th",
    "snr_db",
    "scheme",
    "scenario",
    "method",
    "sop",
    "ci_half_width",
    "flags",
];

pub fn run_figure(preset: &FigurePreset, mc: Option<McSettings>) -> Result<FigureResult> {
    let mut rows = Vec::new();
    for curve in &preset.curves {
        let spec = SweepSpec {
            base: curve.base,
            snr_db_start: preset.snr_db_start,
            snr_db_stop: preset.snr_db_stop,
            snr_db_step: preset.snr_db_step,
            schemes: preset.schemes.clone(),
            scenarios: preset.scenarios.clone(),
            methods: preset.methods.clone(),
            mc,
        };
        let res = run_sweep(&spec)?;
        rows.extend(res.rows.into_iter().map(|row| FigureRow {
            curve: curve.label.clone(),
            cfg: curve.base.with_snr_db(row.snr_db),
            row,
        }));
    }
    Ok(FigureResult {
        preset: preset.clone(),
        rows,
        mc: mc.filter(|_| preset.methods.contains(&Method::Mc)),
    })
}

/// Declarative plot description: one series per curve/scheme/scenario/method.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PlotDescription {
    pub title: String,
    pub x_label: String,
    pub y_label: String,
    pub y_scale: String,
    pub series: Vec<PlotSeries>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PlotSeries {
    pub label: String,
    pub curve: String,
    pub scheme: Scheme,
    pub scenario: Scenario,
    pub method: Method,
    /// `line+marker` for closed forms, `marker` for simulation, `hline` for floors.
    pub style: String,
    pub x: Vec<f64>,
    pub y: Vec<f64>,
}

impl FigureResult {
    pub fn write_csv<W: Write>(&self, mut out: W) -> Result<()> {
        {
            let mut w = csv_writer(&mut out);
            w.write_record(FIGURE_CSV_HEADER)?;
            for r in &self.rows {
                let c = &r.cfg;
                let mut rec = vec![
                    r.curve.clone(),
                    c.transmitters.to_string(),
                    format_float(c.zeta),
                    c.dest_paths.to_string(),
                    c.eve_paths.to_string(),
                    format_float(c.a),
                    format_float(c.b),
                    format_float(c.r_th),
                ];
                rec.extend(row_fields(&r.row));
                w.write_record(&rec)?;
            }
            w.flush().map_err(csv::Error::from)?;
        }
        if let Some(mc) = &self.mc {
            writeln!(out, "{}", mc_trailer(mc)).map_err(|e| csv::Error::from(e))?;
        }
        Ok(())
    }

    pub fn save_csv(&self, path: &Path) -> Result<()> {
        let io = |source| SopError::Io {
            path: path.to_path_buf(),
            source,
        };
        let mut w = BufWriter::new(File::create(path).map_err(io)?);
        self.write_csv(&mut w)?;
        w.flush().map_err(io)
    }

    pub fn plot_description(&self) -> PlotDescription {
        let mut series: Vec<PlotSeries> = Vec::new();
        for r in &self.rows {
            let key = (&r.curve, r.row.scheme, r.row.scenario, r.row.method);
            let existing = series
                .iter_mut()
                .find(|s| (&s.curve, s.scheme, s.scenario, s.method) == key);
            let s = match existing {
                Some(s) => s,
                None => {
                    series.push(PlotSeries {
                        label: format!(
                            "{} {}-{} {}",
                            r.curve,
                            r.row.scheme.as_str().to_uppercase(),
                            r.row.scenario.as_str().to_uppercase(),
                            r.row.method
                        ),
                        curve: r.curve.clone(),
                        scheme: r.row.scheme,
                        scenario: r.row.scenario,
                        method: r.row.method,
                        style: match r.row.method {
                            Method::Mc => "marker",
                            Method::Asymptotic => "hline",
                            _ => "line+marker",
                        }
                        .to_string(),
                        x: vec![],
                        y: vec![],
                    });
                    series.last_mut().expect("just pushed")
                }
            };
            s.x.push(r.row.snr_db);
            s.y.push(r.row.sop);
        }
        PlotDescription {
            title: self.preset.title.clone(),
            x_label: "P_T/sigma^2 (dB)".to_string(),
            y_label: "Secrecy outage probability".to_string(),
            y_scale: "log".to_string(),
            series,
        }
    }

    pub fn save_plot_description(&self, path: &Path) -> Result<()> {
        let io = |source| SopError::Io {
            path: path.to_path_buf(),
            source,
        };
        let file = File::create(path).map_err(io)?;
        serde_json::to_writer_pretty(BufWriter::new(file), &self.plot_description())?;
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn spec(methods: Vec<Method>) -> SweepSpec {
        SweepSpec {
            base: SystemConfig::reference(2, 0.9, 0.0),
            snr_db_start: 0.0,
            snr_db_stop: 20.0,
            snr_db_step: 5.0,
            schemes: vec![Scheme::Ss],
            scenarios: vec![Scenario::Ka],
            methods,
            mc: Some(McSettings {
                n_samples: 100_000,
                ..McSettings::default()
            }),
        }
    }

    #[test]
    fn row_count_contract() {
        let s = spec(vec![Method::Analytic, Method::Asymptotic]);
        assert_eq!(s.snr_points().len(), 5);
        let res = run_sweep(&s).unwrap();
        assert_eq!(res.rows.len(), 10);
        let csv = res.to_csv_string();
        assert_eq!(csv.lines().count(), 11);
        assert!(csv.starts_with("snr_db,scheme,scenario,method,sop,ci_half_width,flags\n"));
        assert!(!csv.contains('\r'));
        // asymptotic rows repeat the same floor
        let floors: Vec<f64> = res
            .rows
            .iter()
            .filter(|r| r.method == Method::Asymptotic)
            .map(|r| r.sop)
            .collect();
        assert!(floors.windows(2).all(|w| w[0] == w[1]));
    }

    #[test]
    fn rows_sorted_and_analytic_monotone() {
        let mut s = spec(vec![Method::Quadrature, Method::Analytic]);
        s.schemes = Scheme::ALL.to_vec();
        s.scenarios = Scenario::ALL.to_vec();
        let res = run_sweep(&s).unwrap();
        assert_eq!(res.rows.len(), 5 * 2 * 2 * 2);
        for w in res.rows.windows(2) {
            assert!(w[0].sort_key() < w[1].sort_key());
        }
        for scheme in Scheme::ALL {
            for scenario in Scenario::ALL {
                let col: Vec<f64> = res
                    .rows
                    .iter()
                    .filter(|r| r.scheme == scheme && r.scenario == scenario && r.method == Method::Analytic)
                    .map(|r| r.sop)
                    .collect();
                assert!(col.windows(2).all(|w| w[1] <= w[0] + 1e-12));
            }
        }
    }

    #[test]
    fn mc_column_tracks_analytic() {
        let res = run_sweep(&spec(vec![Method::Analytic, Method::Mc])).unwrap();
        for pair in res.rows.chunks(2) {
            let (a, m) = (&pair[0], &pair[1]);
            assert_eq!(a.method, Method::Analytic);
            let tol = (3.0 * m.ci_half_width.unwrap()).max(1e-3);
            assert!((a.sop - m.sop).abs() <= tol, "{a:?} {m:?}");
        }
        let csv = res.to_csv_string();
        assert!(csv.trim_end().lines().last().unwrap().starts_with("# mc seed="));
    }

    #[test]
    fn csv_round_trip_reproduces_analytic_values() {
        let s = spec(vec![Method::Analytic, Method::Asymptotic]);
        let res = run_sweep(&s).unwrap();
        let parsed = SweepResult::read_csv(res.to_csv_string().as_bytes()).unwrap();
        assert_eq!(parsed, res.rows);
        for row in parsed.iter().filter(|r| r.method == Method::Analytic) {
            let q = SopQuery::new(s.base.with_snr_db(row.snr_db), row.scheme, row.scenario);
            assert_eq!(analytic::sop(&q).unwrap().value.to_bits(), row.sop.to_bits());
        }
    }

    #[test]
    fn spec_validation() {
        let mut s = spec(vec![Method::Analytic]);
        s.snr_db_step = 0.0;
        assert!(s.validate().is_err());
        let mut s = spec(vec![Method::Analytic]);
        s.snr_db_start = 30.0;
        assert!(s.validate().is_err());
        assert!(spec(vec![]).validate().is_err());
        let mut s = spec(vec![Method::Mc]);
        s.mc = None;
        assert!(s.validate().is_err());
        let mut s = spec(vec![Method::Analytic]);
        s.base.zeta = 1.2;
        assert!(s.validate().is_err());
    }

    #[test]
    fn float_format_round_trips() {
        for x in [1.0, 0.1, 1e-20, 0.123_456_789_012_345_67, 3.0e300, 2.5] {
            assert_eq!(format_float(x).parse::<f64>().unwrap(), x);
        }
        assert_eq!(format_float(1.0), "1.0");
    }

    #[test]
    fn figure_presets_encode_parameters() {
        let p = figure_preset(Figure::Fig2, &FigureOverrides::default());
        assert_eq!(p.curves.len(), 4);
        for c in &p.curves {
            let b = c.base;
            assert_eq!((b.dest_paths, b.eve_paths, b.a, b.b, b.r_th), (6, 4, 0.5, 0.2, 1.0));
            assert!([2, 5].contains(&b.transmitters));
            assert!([0.99, 0.9].contains(&b.zeta));
        }
        assert_eq!(p.snr_points_len(), 26);
        let p = figure_preset(Figure::Fig3, &FigureOverrides::default());
        let ms: Vec<u32> = p.curves.iter().map(|c| c.base.dest_paths).collect();
        assert_eq!(ms, vec![2, 4, 6]);
        assert!(p.curves.iter().all(|c| c.base.eve_paths == 4 && c.base.transmitters == 5));
        let p = figure_preset(Figure::Fig4, &FigureOverrides::default());
        let ns: Vec<u32> = p.curves.iter().map(|c| c.base.eve_paths).collect();
        assert_eq!(ns, vec![2, 4, 6]);
        assert!(p.curves.iter().all(|c| c.base.dest_paths == 4 && c.base.zeta == 0.9));
        let p = figure_preset(
            Figure::Fig5,
            &FigureOverrides {
                transmitters: Some(vec![3]),
                ..FigureOverrides::default()
            },
        );
        let ratios: Vec<f64> = p.curves.iter().map(|c| c.base.a / c.base.b).collect();
        assert_eq!(ratios, vec![1.0, 2.5, 5.0]);
        assert!(p.curves.iter().all(|c| c.base.transmitters == 3));
    }

    #[test]
    fn fig5_larger_ratio_lowers_sop() {
        let mut p = figure_preset(Figure::Fig5, &FigureOverrides::default());
        p.methods = vec![Method::Analytic];
        let res = run_figure(&p, None).unwrap();
        let snrs = p.snr_points_len();
        let per_curve = snrs * 4;
        for i in 0..per_curve {
            let v: Vec<f64> = (0..3).map(|c| res.rows[c * per_curve + i].row.sop).collect();
            assert!(v[0] > v[1] && v[1] > v[2], "row {i}: {v:?}");
        }
        let plot = res.plot_description();
        assert_eq!(plot.y_scale, "log");
        assert_eq!(plot.series.len(), 3 * 4);
        assert!(plot.series.iter().all(|s| s.x.len() == snrs));
    }
}
