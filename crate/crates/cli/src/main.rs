//! `sopsim`: single evaluations, SNR sweeps, figure presets and the
//! validation suite.
//!
//! Exit codes: 0 success, 1 validation or evaluation failure, 2 usage error
//! or invalid parameters.

use std::io::{self, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use sop_core::analytic::{self, ExpansionReading, Scenario, Scheme, SopQuery};
use sop_core::channel::SystemConfig;
use sop_core::montecarlo::McSettings;
use sop_core::sweep::{
    evaluate, figure_preset, format_float, run_figure, run_sweep, Figure, FigureOverrides,
    Method, SweepSpec,
};
use sop_core::validate::{closed_form, run_validation_with, GridSize, ValidationOptions};
use sop_core::SopError;

#[derive(Parser)]
#[command(name = "sopsim", version, about = "Secrecy outage probability with unreliable backhaul")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Evaluate one SOP value.
    Sop(SopArgs),
    /// Sweep SNR and write CSV.
    Sweep(SweepArgs),
    /// Run a figure preset and write CSV (plus a plot description with --plot).
    Figure(FigureArgs),
    /// Run the cross-check suite.
    Validate(ValidateArgs),
}

#[derive(Args)]
struct SystemArgs {
    /// Number of transmitters.
    #[arg(long = "K", value_name = "K", default_value_t = 2)]
    k: usize,
    /// Backhaul reliability.
    #[arg(long, default_value_t = 0.9)]
    zeta: f64,
    /// Secrecy rate threshold in bits/s/Hz.
    #[arg(long, default_value_t = 1.0)]
    rth: f64,
    /// Destination channel paths.
    #[arg(long = "M", value_name = "M", default_value_t = 6)]
    m: u32,
    /// Eavesdropper channel paths.
    #[arg(long = "N", value_name = "N", default_value_t = 4)]
    n: u32,
    /// Destination path-loss factor.
    #[arg(long, default_value_t = 0.5)]
    a: f64,
    /// Eavesdropper path-loss factor.
    #[arg(long, default_value_t = 0.2)]
    b: f64,
}

impl SystemArgs {
    fn config(&self, snr_db: f64) -> SystemConfig {
        SystemConfig {
            transmitters: self.k,
            zeta: self.zeta,
            r_th: self.rth,
            snr: 1.0,
            dest_paths: self.m,
            eve_paths: self.n,
            a: self.a,
            b: self.b,
        }
        .with_snr_db(snr_db)
    }
}

#[derive(Args)]
struct McArgs {
    /// Monte Carlo sample count.
    #[arg(long, default_value_t = 1_000_000)]
    samples: u64,
    /// Monte Carlo seed.
    #[arg(long, default_value_t = McSettings::default().seed)]
    seed: u64,
    /// Confidence level of the reported interval.
    #[arg(long, default_value_t = 0.99)]
    confidence: f64,
    /// Worker threads (defaults to all cores; results do not depend on it).
    #[arg(long)]
    workers: Option<usize>,
}

impl McArgs {
    fn settings(&self) -> McSettings {
        McSettings {
            n_samples: self.samples,
            seed: self.seed,
            confidence: self.confidence,
            workers: self.workers,
        }
    }
}

#[derive(Clone, Copy, ValueEnum)]
enum SchemeArg {
    Ss,
    Os,
}

impl From<SchemeArg> for Scheme {
    fn from(s: SchemeArg) -> Self {
        match s {
            SchemeArg::Ss => Scheme::Ss,
            SchemeArg::Os => Scheme::Os,
        }
    }
}

#[derive(Clone, Copy, ValueEnum)]
enum ScenarioArg {
    Ku,
    Ka,
}

impl From<ScenarioArg> for Scenario {
    fn from(s: ScenarioArg) -> Self {
        match s {
            ScenarioArg::Ku => Scenario::Ku,
            ScenarioArg::Ka => Scenario::Ka,
        }
    }
}

#[derive(Clone, Copy, ValueEnum)]
enum MethodArg {
    Analytic,
    Asymptotic,
    Mc,
    Quadrature,
}

impl From<MethodArg> for Method {
    fn from(m: MethodArg) -> Self {
        match m {
            MethodArg::Analytic => Method::Analytic,
            MethodArg::Asymptotic => Method::Asymptotic,
            MethodArg::Mc => Method::Mc,
            MethodArg::Quadrature => Method::Quadrature,
        }
    }
}

#[derive(Clone, Copy, ValueEnum)]
enum FigureArg {
    Fig2,
    Fig3,
    Fig4,
    Fig5,
}

impl From<FigureArg> for Figure {
    fn from(f: FigureArg) -> Self {
        match f {
            FigureArg::Fig2 => Figure::Fig2,
            FigureArg::Fig3 => Figure::Fig3,
            FigureArg::Fig4 => Figure::Fig4,
            FigureArg::Fig5 => Figure::Fig5,
        }
    }
}

#[derive(Clone, Copy, ValueEnum)]
enum GridArg {
    Quick,
    Full,
}

#[derive(Args)]
struct SopArgs {
    #[command(flatten)]
    system: SystemArgs,
    /// Transmit SNR P_T/sigma^2 in dB.
    #[arg(long, allow_negative_numbers = true)]
    snr_db: f64,
    #[arg(long, value_enum, default_value = "ss")]
    scheme: SchemeArg,
    #[arg(long, value_enum, default_value = "ku")]
    scenario: ScenarioArg,
    #[arg(long, value_enum, default_value = "analytic")]
    method: MethodArg,
    #[command(flatten)]
    mc: McArgs,
}

#[derive(Args)]
struct SweepArgs {
    #[command(flatten)]
    system: SystemArgs,
    #[arg(long, allow_negative_numbers = true, default_value_t = -10.0)]
    snr_start: f64,
    #[arg(long, allow_negative_numbers = true, default_value_t = 40.0)]
    snr_stop: f64,
    #[arg(long, allow_negative_numbers = true, default_value_t = 2.0)]
    snr_step: f64,
    /// Comma-separated; defaults to both.
    #[arg(long, value_enum, value_delimiter = ',')]
    scheme: Vec<SchemeArg>,
    /// Comma-separated; defaults to both.
    #[arg(long, value_enum, value_delimiter = ',')]
    scenario: Vec<ScenarioArg>,
    /// Comma-separated.
    #[arg(long, value_enum, value_delimiter = ',', default_value = "analytic")]
    method: Vec<MethodArg>,
    #[command(flatten)]
    mc: McArgs,
    /// Output CSV path; stdout when absent.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct FigureArgs {
    #[arg(value_enum)]
    name: FigureArg,
    /// Replace the preset's transmitter counts (comma-separated).
    #[arg(long = "K", value_name = "K", value_delimiter = ',')]
    k: Option<Vec<usize>>,
    /// Replace the preset's backhaul reliabilities (comma-separated).
    #[arg(long, value_delimiter = ',')]
    zeta: Option<Vec<f64>>,
    #[arg(long)]
    rth: Option<f64>,
    /// Restrict schemes (comma-separated).
    #[arg(long, value_enum, value_delimiter = ',')]
    scheme: Vec<SchemeArg>,
    /// Restrict scenarios (comma-separated).
    #[arg(long, value_enum, value_delimiter = ',')]
    scenario: Vec<ScenarioArg>,
    /// Replace the preset's methods (comma-separated).
    #[arg(long, value_enum, value_delimiter = ',')]
    method: Vec<MethodArg>,
    #[command(flatten)]
    mc: McArgs,
    /// Output CSV path; stdout when absent.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Also write a JSON plot description, by default next to --out.
    #[arg(long, num_args = 0..=1, value_name = "PATH")]
    plot: Option<Option<PathBuf>>,
}

#[derive(Args)]
struct ValidateArgs {
    #[arg(long, value_enum, default_value = "full")]
    grid: GridArg,
    #[command(flatten)]
    mc: McArgs,
    /// Also print the term-by-term floor expansions next to the compact forms.
    #[arg(long)]
    expanded_floors: bool,
    /// Test fixture: scale one closed form (e.g. `os-ka`) by 1.01 when K >= 2.
    #[arg(long, hide = true)]
    inject_fault: Option<String>,
}

enum Failure {
    Usage(String),
    Runtime(String),
    Validation,
}

impl From<SopError> for Failure {
    fn from(e: SopError) -> Self {
        match e {
            SopError::Domain { .. } | SopError::InvalidConfig(_) | SopError::CompositionCap { .. } => {
                Failure::Usage(e.to_string())
            }
            other => Failure::Runtime(other.to_string()),
        }
    }
}

impl From<io::Error> for Failure {
    fn from(e: io::Error) -> Self {
        Failure::Runtime(e.to_string())
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Sop(args) => cmd_sop(&args),
        Command::Sweep(args) => cmd_sweep(&args),
        Command::Figure(args) => cmd_figure(&args),
        Command::Validate(args) => cmd_validate(&args),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Validation) => ExitCode::from(1),
        Err(Failure::Runtime(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(1)
        }
        Err(Failure::Usage(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(2)
        }
    }
}

fn cmd_sop(args: &SopArgs) -> Result<(), Failure> {
    let cfg = args.system.config(args.snr_db);
    cfg.validate()?;
    let query = SopQuery::new(cfg, args.scheme.into(), args.scenario.into());
    let method: Method = args.method.into();
    let mc = args.mc.settings();
    if method == Method::Mc {
        mc.validate()?;
    }
    let ev = evaluate(&query, method, Some(&mc))?;
    let mut line = format!("sop={}", format_float(ev.sop));
    if let Some(ci) = ev.ci_half_width {
        line += &format!(
            " ci_half_width={} samples={} seed={} confidence={}",
            format_float(ci),
            mc.n_samples,
            mc.seed,
            format_float(mc.confidence)
        );
    }
    line += &format!(
        " scheme={} scenario={} method={} snr_db={}",
        query.scheme,
        query.scenario,
        method,
        format_float(args.snr_db)
    );
    if !ev.flags.is_empty() {
        line += &format!(" flags={}", ev.flags.join(";"));
    }
    println!("{line}");
    Ok(())
}

fn or_all<A: Copy + Into<T>, T: Copy>(chosen: &[A], all: &[T]) -> Vec<T> {
    if chosen.is_empty() {
        all.to_vec()
    } else {
        chosen.iter().map(|&a| a.into()).collect()
    }
}

fn write_output(out: Option<&Path>, write: impl FnOnce(&mut dyn Write) -> sop_core::Result<()>) -> Result<(), Failure> {
    match out {
        Some(path) => {
            let mut file = io::BufWriter::new(std::fs::File::create(path).map_err(|source| SopError::Io {
                path: path.to_path_buf(),
                source,
            })?);
            write(&mut file)?;
            file.flush().map_err(|source| SopError::Io {
                path: path.to_path_buf(),
                source,
            })?;
            eprintln!("wrote {}", path.display());
        }
        None => {
            let stdout = io::stdout();
            let mut lock = stdout.lock();
            write(&mut lock)?;
        }
    }
    Ok(())
}

fn cmd_sweep(args: &SweepArgs) -> Result<(), Failure> {
    let methods: Vec<Method> = args.method.iter().map(|&m| m.into()).collect();
    let spec = SweepSpec {
        base: args.system.config(args.snr_start),
        snr_db_start: args.snr_start,
        snr_db_stop: args.snr_stop,
        snr_db_step: args.snr_step,
        schemes: or_all(&args.scheme, &Scheme::ALL),
        scenarios: or_all(&args.scenario, &Scenario::ALL),
        mc: methods.contains(&Method::Mc).then(|| args.mc.settings()),
        methods,
    };
    let result = run_sweep(&spec)?;
    write_output(args.out.as_deref(), |w| result.write_csv(w))
}

fn cmd_figure(args: &FigureArgs) -> Result<(), Failure> {
    let overrides = FigureOverrides {
        transmitters: args.k.clone(),
        zetas: args.zeta.clone(),
        r_th: args.rth,
    };
    let mut preset = figure_preset(args.name.into(), &overrides);
    preset.schemes = or_all(&args.scheme, &preset.schemes);
    preset.scenarios = or_all(&args.scenario, &preset.scenarios);
    preset.methods = or_all(&args.method, &preset.methods);
    let plot_path = match &args.plot {
        None => None,
        Some(Some(p)) => Some(p.clone()),
        Some(None) => match &args.out {
            Some(out) => Some(out.with_extension("plot.json")),
            None => return Err(Failure::Usage("--plot without a path needs --out".into())),
        },
    };
    let mc = preset.methods.contains(&Method::Mc).then(|| args.mc.settings());
    for curve in &preset.curves {
        curve.base.validate()?;
    }
    let result = run_figure(&preset, mc)?;
    write_output(args.out.as_deref(), |w| result.write_csv(w))?;
    if let Some(path) = plot_path {
        result.save_plot_description(&path)?;
        eprintln!("wrote {}", path.display());
    }
    Ok(())
}

fn parse_case(s: &str) -> Result<(Scheme, Scenario), Failure> {
    let (a, b) = s
        .split_once('-')
        .ok_or_else(|| Failure::Usage(format!("expected <scheme>-<scenario>, got '{s}'")))?;
    let scheme = a.parse().map_err(Failure::Usage)?;
    let scenario = b.parse().map_err(Failure::Usage)?;
    Ok((scheme, scenario))
}

fn cmd_validate(args: &ValidateArgs) -> Result<(), Failure> {
    let opts = ValidationOptions {
        grid: match args.grid {
            GridArg::Quick => GridSize::Quick,
            GridArg::Full => GridSize::Full,
        },
        mc: args.mc.settings(),
    };
    let fault = args.inject_fault.as_deref().map(parse_case).transpose()?;
    let evaluator = move |q: &SopQuery| -> sop_core::Result<f64> {
        let v = closed_form(q)?;
        match fault {
            Some(case) if case == (q.scheme, q.scenario) && q.cfg.transmitters >= 2 => Ok((v * 1.01).min(1.0)),
            _ => Ok(v),
        }
    };
    let report = run_validation_with(&opts, &evaluator)?;
    println!("{report}");
    if args.expanded_floors {
        print_expanded_floors()?;
    }
    if report.all_passed() {
        Ok(())
    } else {
        Err(Failure::Validation)
    }
}

fn print_expanded_floors() -> Result<(), Failure> {
    println!("OS floor expansions vs compact form (diagnostic):");
    for k in [2usize, 5] {
        for zeta in [0.9, 0.99] {
            let cfg = SystemConfig::reference(k, zeta, 200.0);
            for scenario in Scenario::ALL {
                let q = SopQuery::new(cfg, Scheme::Os, scenario);
                let compact = analytic::asymptotic_sop(&q)?.value;
                let corrected = analytic::os_floor_expanded(&q, ExpansionReading::Corrected)?;
                let literal = analytic::os_floor_expanded(&q, ExpansionReading::Literal)?;
                println!(
                    "  os-{scenario} K={k} zeta={zeta}: compact={} corrected={} literal={}",
                    format_float(compact),
                    format_float(corrected),
                    format_float(literal)
                );
            }
        }
    }
    Ok(())
}

