//! Command-line front end. `run` parses arguments, performs the computation
//! and writes the artifact; it returns the process exit code.

use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;

use crate::distributions::{
    fit_correction_orders, grid, log_axis, scaled_deviation, uniform_axis, DistributionGrid, Ensemble, GridSpec,
    Kind,
};
use crate::fredholm::janossy_nystrom;
use crate::kernel::CueParams;
use crate::mc::{compare_hist, empirical_distributions, Comparison};
use crate::ode::Dop853;
use crate::output::{write_csv, write_json, Format, Metadata, Table};
use crate::quadrature::Interval;
use crate::selftest::{self, SelfTestConfig};
use crate::tw::janossy_tw_with;
use crate::zeta::{self, ZeroFormat};
use crate::{Error, Result};

/// Environment variable overriding the worker thread count.
pub const THREADS_ENV: &str = "CUE_JANOSSY_THREADS";

pub const EXIT_OK: i32 = 0;
pub const EXIT_USAGE: i32 = 2;
pub const EXIT_NUMERICAL: i32 = 3;
pub const EXIT_IO: i32 = 4;

#[derive(Debug, Parser, Serialize)]
#[command(name = "cue-janossy", version, about = "Jánossy densities, spacing and gap-ratio distributions of CUE_N")]
pub struct Cli {
    #[command(flatten)]
    pub global: Global,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Args, Serialize)]
pub struct Global {
    /// Output format
    #[arg(long, global = true, value_enum, default_value_t = OutFormat::Csv)]
    pub format: OutFormat,
    /// Output file; standard output if absent
    #[arg(long, short, global = true)]
    pub output: Option<PathBuf>,
    /// Print the resolved configuration and exit
    #[arg(long, global = true)]
    pub dry_run: bool,
    /// Leave the timestamp out of the metadata header
    #[arg(long, global = true)]
    pub no_timestamp: bool,
    /// ODE relative tolerance
    #[arg(long, global = true, default_value_t = 1e-12)]
    pub rtol: f64,
    /// ODE absolute tolerance
    #[arg(long, global = true, default_value_t = 1e-14)]
    pub atol: f64,
}

#[derive(Debug, Clone, Copy, ValueEnum, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum OutFormat {
    Csv,
    Json,
}

#[derive(Debug, Clone, Copy, ValueEnum, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum KindArg {
    Pnn,
    Pc,
    Pr,
}

impl From<KindArg> for Kind {
    fn from(k: KindArg) -> Self {
        match k {
            KindArg::Pnn => Kind::Pnn,
            KindArg::Pc => Kind::Pc,
            KindArg::Pr => Kind::Pr,
        }
    }
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct GridArgs {
    /// Largest spacing t, a, b in unit mean spacings
    #[arg(long, default_value_t = 4.0)]
    pub upper: f64,
    /// Points on each spacing axis
    #[arg(long, default_value_t = 200)]
    pub points: usize,
    #[arg(long, default_value_t = 0.01)]
    pub r_min: f64,
    #[arg(long, default_value_t = 4.0)]
    pub r_max: f64,
    /// Log-spaced points on the ratio axis
    #[arg(long, default_value_t = 160)]
    pub r_points: usize,
}

impl GridArgs {
    fn spec(&self) -> Result<GridSpec> {
        if !(self.upper > 0.0 && self.points > 0 && self.r_points > 0 && 0.0 < self.r_min && self.r_min <= self.r_max)
        {
            return Err(Error::InvalidParameter("grid bounds and sizes must be positive".into()));
        }
        let s = uniform_axis(self.upper, self.points);
        Ok(GridSpec { t: s.clone(), a: s.clone(), b: s, r: log_axis(self.r_min, self.r_max, self.r_points) })
    }
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct CurveArgs {
    /// Comma-separated list of ranks N ≥ 2
    #[arg(long, value_delimiter = ',', required = true)]
    pub n: Vec<usize>,
    /// Emit N^p (P_N - P_∞) instead of P_N
    #[arg(long)]
    pub deviation_power: Option<i32>,
    #[command(flatten)]
    pub grid: GridArgs,
}

#[derive(Debug, Subcommand, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Command {
    /// J̃₁ on intervals [a1, a2] (raw eigenphase), from the endpoint flow
    Janossy {
        #[arg(long)]
        n: f64,
        /// Left endpoints; comma-separated, or one value for all
        #[arg(long, value_delimiter = ',', allow_hyphen_values = true, required = true)]
        a1: Vec<f64>,
        #[arg(long, value_delimiter = ',', required = true)]
        a2: Vec<f64>,
        /// Also evaluate the Nyström determinant and report the relative deviation
        #[arg(long)]
        check_nystrom: bool,
        /// Quadrature order for the Nyström check
        #[arg(long, default_value_t = 256)]
        order: usize,
    },
    /// Nearest-neighbour spacing distribution
    Pnn(CurveArgs),
    /// Joint distribution of two consecutive spacings
    Pc(CurveArgs),
    /// Gap-ratio distribution
    Pr(CurveArgs),
    /// Sine-kernel limit of one distribution
    SineLimit {
        #[arg(long, value_enum)]
        kind: KindArg,
        #[command(flatten)]
        grid: GridArgs,
    },
    /// Scaled deviations N^p (P_N - P_∞)
    Deviation {
        #[arg(long, value_enum)]
        kind: KindArg,
        #[arg(long, value_delimiter = ',', required = true)]
        n: Vec<usize>,
        /// Defaults to 2 for pnn and pc, 4 for pr
        #[arg(long)]
        power: Option<i32>,
        #[command(flatten)]
        grid: GridArgs,
    },
    /// Pointwise fit P_N - P_∞ ≈ c2/N² + c4/N⁴
    FitOrders {
        #[arg(long, value_enum)]
        kind: KindArg,
        #[arg(long, value_delimiter = ',', required = true)]
        n: Vec<usize>,
        #[command(flatten)]
        grid: GridArgs,
    },
    /// Monte-Carlo histograms from Haar-random unitaries
    Mc {
        #[arg(long)]
        n: usize,
        #[arg(long, default_value_t = 100_000)]
        samples: u64,
        #[arg(long, default_value_t = 1)]
        seed: u64,
        /// Histogram written to the output
        #[arg(long, value_enum, default_value_t = KindArg::Pnn)]
        kind: KindArg,
        /// Compare against the analytic curve; summary on standard error
        #[arg(long)]
        compare: bool,
        /// With --compare, exit with status 3 if more than 1% of bins lie beyond 3σ
        #[arg(long)]
        strict: bool,
    },
    /// Riemann zero statistics
    Zeta {
        #[command(subcommand)]
        action: ZetaCommand,
    },
    /// Invariant suite
    Selftest {
        #[arg(long, default_value_t = 10)]
        n: usize,
        /// Random points per check
        #[arg(long, default_value_t = 6)]
        points: usize,
        #[arg(long, default_value_t = 1)]
        seed: u64,
    },
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct ZeroSource {
    /// Zero table (optionally gzip-compressed)
    #[arg(long)]
    pub input: PathBuf,
    #[arg(long, value_parser = parse_zero_format, default_value = "plain_lines")]
    pub zero_format: ZeroFormat,
    /// Zeros to skip at the start of the file
    #[arg(long, default_value_t = 0)]
    pub skip: usize,
    /// Zeros to read after skipping
    #[arg(long)]
    pub limit: Option<usize>,
}

fn parse_zero_format(s: &str) -> std::result::Result<ZeroFormat, String> {
    s.parse::<ZeroFormat>().map_err(|e| e.to_string())
}

/// `start:length` in dataset positions.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct WindowArg {
    pub start: usize,
    pub length: usize,
}

fn parse_window(s: &str) -> std::result::Result<WindowArg, String> {
    let (a, b) = s.split_once(':').ok_or_else(|| format!("window {s:?} is not start:length"))?;
    Ok(WindowArg {
        start: a.trim().parse().map_err(|e| format!("{s:?}: {e}"))?,
        length: b.trim().parse().map_err(|e| format!("{s:?}: {e}"))?,
    })
}

#[derive(Debug, Subcommand, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum ZetaCommand {
    /// Validate a table and report its size, first index and hash
    Ingest {
        #[command(flatten)]
        source: ZeroSource,
    },
    /// Mean r̃ per window with its deviation from the sine-kernel value
    Analyze {
        #[command(flatten)]
        source: ZeroSource,
        #[arg(long, value_delimiter = ',', value_parser = parse_window, required = true)]
        windows: Vec<WindowArg>,
        /// Add the CUE prediction at N = N_e
        #[arg(long)]
        cue: bool,
        /// Write a provenance manifest here
        #[arg(long)]
        manifest: Option<PathBuf>,
    },
    /// Power-law fit of the mean-r̃ deviation against N_e
    Fit {
        #[command(flatten)]
        source: ZeroSource,
        #[arg(long, value_delimiter = ',', value_parser = parse_window, required = true)]
        windows: Vec<WindowArg>,
    },
    /// Histogram of r̃ or of consecutive spacing pairs in one window
    Histogram {
        #[command(flatten)]
        source: ZeroSource,
        #[arg(long, value_parser = parse_window)]
        window: WindowArg,
        /// pr for r̃, pc for (a, b)
        #[arg(long, value_enum, default_value_t = KindArg::Pr)]
        kind: KindArg,
        /// Upper spacing for pc
        #[arg(long, default_value_t = 4.0)]
        upper: f64,
        /// Bins per axis for pc
        #[arg(long, default_value_t = 40)]
        bins: usize,
    },
}

impl Command {
    fn name(&self) -> String {
        match self {
            Command::Janossy { .. } => "janossy".into(),
            Command::Pnn(_) => "pnn".into(),
            Command::Pc(_) => "pc".into(),
            Command::Pr(_) => "pr".into(),
            Command::SineLimit { .. } => "sine-limit".into(),
            Command::Deviation { .. } => "deviation".into(),
            Command::FitOrders { .. } => "fit-orders".into(),
            Command::Mc { .. } => "mc".into(),
            Command::Zeta { action } => match action {
                ZetaCommand::Ingest { .. } => "zeta ingest".into(),
                ZetaCommand::Analyze { .. } => "zeta analyze".into(),
                ZetaCommand::Fit { .. } => "zeta fit".into(),
                ZetaCommand::Histogram { .. } => "zeta histogram".into(),
            },
            Command::Selftest { .. } => "selftest".into(),
        }
    }
}

fn exit_code(e: &Error) -> i32 {
    if e.is_numerical() {
        EXIT_NUMERICAL
    } else if e.is_io() {
        EXIT_IO
    } else {
        EXIT_USAGE
    }
}

/// Installs the global thread pool from the environment, once.
fn configure_threads() -> Result<()> {
    if let Ok(v) = std::env::var(THREADS_ENV) {
        let n: usize = v
            .parse()
            .map_err(|_| Error::InvalidParameter(format!("{THREADS_ENV}={v:?} is not a thread count")))?;
        // a second call in the same process keeps the first pool
        let _ = rayon::ThreadPoolBuilder::new().num_threads(n).build_global();
    }
    Ok(())
}

/// Parses `argv` (including the program name) and runs the command.
pub fn run<I, T>(argv: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(argv) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { EXIT_USAGE } else { EXIT_OK };
        }
    };
    match execute(&cli) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            exit_code(&e)
        }
    }
}

/// What a command produced: a table for CSV and a serializable value for JSON.
struct Artifact {
    table: Table,
    json: serde_json::Value,
}

impl Artifact {
    fn table(table: Table) -> Result<Self> {
        let json = serde_json::to_value(&table)?;
        Ok(Self { table, json })
    }
}

fn settings(g: &Global) -> Result<Dop853> {
    Dop853::with_tolerances(g.rtol, g.atol)
}

fn check_ranks(n: &[usize]) -> Result<()> {
    match n.iter().find(|&&n| n < 2) {
        Some(n) => Err(Error::InvalidParameter(format!("rank N must be at least 2, got {n}"))),
        None => Ok(()),
    }
}

fn default_power(kind: Kind) -> i32 {
    if kind == Kind::Pr {
        4
    } else {
        2
    }
}

fn curves(kind: Kind, n: &[usize], power: Option<i32>, spec: &GridSpec, s: Dop853) -> Result<Artifact> {
    check_ranks(n)?;
    let limit = match power {
        Some(_) => Some(grid(kind, &Ensemble::Sine, spec, s)?),
        None => None,
    };
    let mut grids: Vec<DistributionGrid> = Vec::with_capacity(n.len());
    for &n in n {
        let g = grid(kind, &Ensemble::cue(n)?, spec, s)?;
        grids.push(match (&limit, power) {
            (Some(l), Some(p)) => scaled_deviation(&g, l, p)?,
            _ => g,
        });
    }
    let mut table = Table::from_grid(&grids[0]);
    for g in &grids[1..] {
        table.extend(Table::from_grid(g))?;
    }
    Ok(Artifact { table, json: serde_json::to_value(&grids)? })
}

fn windows(ds: &zeta::ZeroDataset, w: &[WindowArg]) -> Result<Vec<zeta::Window>> {
    w.iter().map(|w| ds.window(w.start, w.length)).collect()
}

fn execute(cli: &Cli) -> Result<i32> {
    let g = &cli.global;
    if g.dry_run {
        println!("{}", serde_json::to_string_pretty(cli)?);
        return Ok(EXIT_OK);
    }
    configure_threads()?;
    let s = settings(g)?;
    let mut code = EXIT_OK;
    let artifact = match &cli.command {
        Command::Janossy { n, a1, a2, check_nystrom, order } => {
            let params = CueParams::real(*n)?;
            let k = a1.len().max(a2.len());
            if !(a1.len() == k || a1.len() == 1) || !(a2.len() == k || a2.len() == 1) {
                return Err(Error::InvalidParameter("--a1 and --a2 lists differ in length".into()));
            }
            let pick = |v: &[f64], i: usize| if v.len() == 1 { v[0] } else { v[i] };
            let mut table = if *check_nystrom {
                Table::new(&["a1", "a2", "tw", "nystrom", "rel_dev"])
            } else {
                Table::new(&["a1", "a2", "tw"])
            };
            for i in 0..k {
                let (x, y) = (pick(a1, i), pick(a2, i));
                let tw = janossy_tw_with(x, y, &params, s)?;
                if *check_nystrom {
                    let ny = janossy_nystrom(Interval::janossy(x, y)?, &params, *order)?;
                    table.push(vec![x, y, tw, ny, (tw - ny).abs() / ny.abs()]);
                } else {
                    table.push(vec![x, y, tw]);
                }
            }
            Artifact::table(table)?
        }
        Command::Pnn(c) => curves(Kind::Pnn, &c.n, c.deviation_power, &c.grid.spec()?, s)?,
        Command::Pc(c) => curves(Kind::Pc, &c.n, c.deviation_power, &c.grid.spec()?, s)?,
        Command::Pr(c) => curves(Kind::Pr, &c.n, c.deviation_power, &c.grid.spec()?, s)?,
        Command::SineLimit { kind, grid: ga } => {
            let gr = grid((*kind).into(), &Ensemble::Sine, &ga.spec()?, s)?;
            Artifact { table: Table::from_grid(&gr), json: serde_json::to_value(&gr)? }
        }
        Command::Deviation { kind, n, power, grid: ga } => {
            let kind: Kind = (*kind).into();
            curves(kind, n, Some(power.unwrap_or(default_power(kind))), &ga.spec()?, s)?
        }
        Command::FitOrders { kind, n, grid: ga } => {
            check_ranks(n)?;
            let fit = fit_correction_orders((*kind).into(), n, &ga.spec()?, s)?;
            Artifact { table: Table::from_fit(&fit), json: serde_json::to_value(&fit)? }
        }
        Command::Mc { n, samples, seed, kind, compare, strict } => {
            check_ranks(&[*n])?;
            let params = CueParams::new(*n)?;
            let emp = empirical_distributions(&params, *samples, *seed)?;
            let hist = match kind {
                KindArg::Pnn => &emp.pnn,
                KindArg::Pc => &emp.pc,
                KindArg::Pr => &emp.r_tilde,
            };
            eprintln!("mean r̃ = {} ± {}", emp.mean_r_tilde, emp.mean_r_tilde_stderr);
            let mut cmp: Option<Comparison> = None;
            if *compare {
                let spec = GridSpec {
                    t: uniform_axis(4.0, 800),
                    a: uniform_axis(6.0, 240),
                    b: uniform_axis(6.0, 240),
                    r: uniform_axis(1.0, 400),
                };
                let analytic = grid((*kind).into(), &Ensemble::Cue(params), &spec, s)?;
                let c = compare_hist(&analytic, hist)?;
                eprintln!(
                    "bins used {}, beyond 3σ {:.4}, max |z| {:.3}",
                    c.bins_used, c.fraction_beyond_3, c.max_abs_z
                );
                if *strict && c.fraction_beyond_3 > 0.01 {
                    code = EXIT_NUMERICAL;
                }
                cmp = Some(c);
            }
            #[derive(Serialize)]
            struct McOut<'a> {
                n: usize,
                matrices: u64,
                seed: u64,
                mean_r_tilde: f64,
                mean_r_tilde_stderr: f64,
                histogram: &'a crate::mc::Histogram,
                comparison: Option<Comparison>,
            }
            let json = serde_json::to_value(McOut {
                n: emp.n,
                matrices: emp.matrices,
                seed: emp.seed,
                mean_r_tilde: emp.mean_r_tilde,
                mean_r_tilde_stderr: emp.mean_r_tilde_stderr,
                histogram: hist,
                comparison: cmp,
            })?;
            Artifact { table: Table::from_histogram(hist), json }
        }
        Command::Zeta { action } => zeta_command(action)?,
        Command::Selftest { n, points, seed } => {
            let report = selftest::run(&SelfTestConfig { n: *n, points: *points, seed: *seed, ..Default::default() })?;
            for c in &report.checks {
                eprintln!(
                    "{} {} worst {:.3e} tolerance {:.1e}",
                    if c.passed { "PASS" } else { "FAIL" },
                    c.name,
                    c.worst,
                    c.tolerance
                );
            }
            eprintln!("{:.1} s", report.seconds);
            if !report.passed() {
                code = EXIT_NUMERICAL;
            }
            let mut table = Table::new(&["check", "worst", "tolerance", "passed"]);
            for (k, c) in report.checks.iter().enumerate() {
                table.push(vec![k as f64, c.worst, c.tolerance, if c.passed { 1.0 } else { 0.0 }]);
            }
            Artifact { table, json: serde_json::to_value(&report)? }
        }
    };
    emit(cli, &artifact)?;
    Ok(code)
}

fn zeta_command(action: &ZetaCommand) -> Result<Artifact> {
    let open = |src: &ZeroSource| zeta::ingest_zeros(&src.input, src.zero_format, src.skip, src.limit);
    match action {
        ZetaCommand::Ingest { source } => {
            let ds = open(source)?;
            let manifest = zeta::Manifest::build(&ds, &[])?;
            eprintln!("{} zeros, first index {:?}, sha256 {}", ds.count, ds.first_index, manifest.sha256);
            let mut table = Table::new(&["count", "first_index", "skip"]);
            table.push(vec![ds.count as f64, ds.first_index.map_or(f64::NAN, |i| i as f64), ds.skip as f64]);
            Ok(Artifact { table, json: serde_json::to_value(&manifest)? })
        }
        ZetaCommand::Analyze { source, windows: w, cue, manifest } => {
            let ds = open(source)?;
            let ws = windows(&ds, w)?;
            let reports = zeta::analyze_windows(&ds, &ws, *cue)?;
            if let Some(path) = manifest {
                let m = zeta::Manifest::build(&ds, &ws)?;
                let f = File::create(path)?;
                serde_json::to_writer_pretty(BufWriter::new(f), &m)?;
            }
            let mut table = Table::new(&[
                "start", "length", "height", "n_e", "mean_r_tilde", "stderr", "deviation", "cue_mean_r_tilde",
            ]);
            for r in &reports {
                let w = &r.window;
                table.push(vec![
                    w.start as f64,
                    w.length as f64,
                    w.height,
                    w.n_e,
                    r.mean_r_tilde,
                    r.stderr,
                    r.deviation,
                    r.cue_mean_r_tilde.unwrap_or(f64::NAN),
                ]);
            }
            Ok(Artifact { table, json: serde_json::to_value(&reports)? })
        }
        ZetaCommand::Fit { source, windows: w } => {
            let ds = open(source)?;
            let ws = windows(&ds, w)?;
            let reports = zeta::analyze_windows(&ds, &ws, false)?;
            let pts: Vec<(f64, f64)> = reports.iter().map(|r| (r.window.n_e, r.deviation)).collect();
            let fit = zeta::scaling_fit(&pts)?;
            if !fit.skipped.is_empty() {
                eprintln!("{} window(s) with non-positive deviation left out", fit.skipped.len());
            }
            let mut table = Table::new(&["amplitude", "exponent", "points_used"]);
            table.push(vec![fit.amplitude, fit.exponent, fit.points_used as f64]);
            Ok(Artifact { table, json: serde_json::to_value(&fit)? })
        }
        ZetaCommand::Histogram { source, window, kind, upper, bins } => {
            let ds = open(source)?;
            let w = ds.window(window.start, window.length)?;
            let h = match kind {
                KindArg::Pc => zeta::consecutive_spacing_stats(&ds, &w, *upper, *bins)?,
                KindArg::Pr => zeta::gap_ratio_stats(&ds, &w)?.r_tilde,
                KindArg::Pnn => {
                    return Err(Error::InvalidParameter("zeta histogram supports pr and pc".into()));
                }
            };
            Ok(Artifact { table: Table::from_histogram(&h), json: serde_json::to_value(&h)? })
        }
    }
}

fn emit(cli: &Cli, a: &Artifact) -> Result<()> {
    let g = &cli.global;
    let meta = Metadata::new(&cli.command.name(), cli, !g.no_timestamp)?;
    let mut out: Box<dyn Write> = match &g.output {
        Some(p) => Box::new(BufWriter::new(File::create(p)?)),
        None => Box::new(BufWriter::new(io::stdout().lock())),
    };
    match Format::from(g.format) {
        Format::Csv => write_csv(&mut out, &meta, &a.table)?,
        Format::Json => write_json(&mut out, &meta, &a.json)?,
    }
    out.flush()?;
    Ok(())
}

impl From<OutFormat> for Format {
    fn from(f: OutFormat) -> Self {
        match f {
            OutFormat::Csv => Format::Csv,
            OutFormat::Json => Format::Json,
        }
    }
}
