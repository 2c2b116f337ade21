//! Command-line front end.
//!
//! Settings are resolved flag first, then the matching section of the
//! `--config` TOML file, then built-in defaults. The worker count falls back
//! to `WASSREG_WORKERS` and then to the number of CPUs.

use std::ffi::OsString;
use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};
use serde::Deserialize;

use crate::deconv::{deconvolve_cdf_with, select_bandwidth, BandwidthRule, DeconvSettings, GridSpec, DEFAULT_GRID_POINTS};
use crate::dist1d::EmpiricalMeasure;
use crate::experiments::{
    conjecture_sweep, fit_loglog_slope, log_grid, rate_sweep, summarize, ConjectureConfig, Problem,
    RateSweepConfig, RatePreset, SigmaRule,
};
use crate::io::{read_dataset, write_conjecture, write_dataset, write_fit, write_records, write_tabulated, ObservedData};
use crate::plot::render_plot;
use crate::regress::{fit_shuffled, fit_unlinked_with, FitConfig};
use crate::synth::{sample_dataset, DatasetSpec, LinkSpec, Mode, NoiseSpec};
use crate::{selftest, Error};

/// Seed used when neither a flag nor the config file gives one.
pub const DEFAULT_SEED: u64 = 1;

/// Environment variable holding the default worker count.
pub const WORKERS_ENV: &str = "WASSREG_WORKERS";

#[derive(Debug, Parser)]
#[command(name = "wassreg", version, about = "Shuffled and unlinked monotone regression, Wasserstein deconvolution")]
struct Cli {
    /// TOML file with optional top-level `seed`, `workers`, `out` and one
    /// table per subcommand.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Output directory (created if missing).
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Worker threads [default: $WASSREG_WORKERS, else all CPUs].
    #[arg(long, global = true)]
    workers: Option<usize>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Monte-Carlo mean of the multinomial occupancy product over a log grid of n.
    Conjecture(ConjectureArgs),
    /// Risk of an estimator over a grid of sample sizes.
    Rates(RatesArgs),
    /// Fit one dataset read from CSV.
    Estimate(EstimateArgs),
    /// Write a synthetic dataset as CSV.
    Simulate(SimulateArgs),
    /// Run the reduced-scale invariant checks.
    Selftest,
}

#[derive(Debug, Args)]
struct ConjectureArgs {
    /// Exponent constant c.
    #[arg(long)]
    c: Option<f64>,
    /// Prefactors C, comma separated.
    #[arg(long = "big-c", value_delimiter = ',')]
    big_c: Option<Vec<f64>>,
    #[arg(long)]
    reps: Option<usize>,
    #[arg(long)]
    n_min: Option<usize>,
    #[arg(long)]
    n_max: Option<usize>,
    #[arg(long)]
    grid_points: Option<usize>,
    /// Skip the SVG charts.
    #[arg(long)]
    no_plot: bool,
}

#[derive(Debug, Args)]
struct RatesArgs {
    /// shuffled, unlinked or deconv.
    #[arg(long)]
    problem: Option<Problem>,
    /// Sample sizes, comma separated [default: 5 log-spaced sizes in 100..=10000].
    #[arg(long, value_delimiter = ',')]
    n_grid: Option<Vec<usize>>,
    /// const:S, power:SCALE,KAPPA or preset:NAME [default: preset:below-root].
    #[arg(long)]
    sigma_rule: Option<SigmaRule>,
    #[arg(long)]
    reps: Option<usize>,
    /// identity, cube, affine:S,B, step:K/V,... or tail:EPS,A,C,N.
    #[arg(long)]
    link: Option<LinkSpec>,
    /// Points of the deconvolution grid (power of two).
    #[arg(long)]
    grid_points: Option<usize>,
    #[arg(long)]
    moment_bound: Option<f64>,
}

#[derive(Debug, Args)]
struct EstimateArgs {
    /// Dataset CSV with columns mode,index,x,y.
    #[arg(long)]
    input: Option<PathBuf>,
    /// Known noise level.
    #[arg(long)]
    sigma: Option<f64>,
    #[arg(long)]
    grid_points: Option<usize>,
    #[arg(long)]
    moment_bound: Option<f64>,
}

#[derive(Debug, Args)]
struct SimulateArgs {
    #[arg(long)]
    mode: Option<Mode>,
    #[arg(long)]
    n: Option<usize>,
    #[arg(long)]
    link: Option<LinkSpec>,
    #[arg(long)]
    sigma: Option<f64>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct FileConfig {
    seed: Option<u64>,
    workers: Option<usize>,
    out: Option<PathBuf>,
    #[serde(default)]
    conjecture: ConjectureSection,
    #[serde(default)]
    rates: RatesSection,
    #[serde(default)]
    estimate: EstimateSection,
    #[serde(default)]
    simulate: SimulateSection,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct ConjectureSection {
    c: Option<f64>,
    big_c: Option<Vec<f64>>,
    reps: Option<usize>,
    n_min: Option<usize>,
    n_max: Option<usize>,
    grid_points: Option<usize>,
    plot: Option<bool>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct RatesSection {
    problem: Option<String>,
    n_grid: Option<Vec<usize>>,
    sigma_rule: Option<String>,
    reps: Option<usize>,
    link: Option<String>,
    grid_points: Option<usize>,
    moment_bound: Option<f64>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct EstimateSection {
    input: Option<PathBuf>,
    sigma: Option<f64>,
    grid_points: Option<usize>,
    moment_bound: Option<f64>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct SimulateSection {
    mode: Option<String>,
    n: Option<usize>,
    link: Option<String>,
    sigma: Option<f64>,
}

enum Failure {
    Usage(String),
    Runtime(Error),
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        Failure::Runtime(e)
    }
}

type Outcome<T> = std::result::Result<T, Failure>;

/// Flag value, else parsed config value, else `None`.
fn pick<T: std::str::FromStr>(flag: Option<T>, file: Option<&str>, key: &str) -> Outcome<Option<T>> {
    match (flag, file) {
        (Some(v), _) => Ok(Some(v)),
        (None, Some(s)) => s
            .parse()
            .map(Some)
            .map_err(|_| Failure::Usage(format!("config: invalid value {s:?} for {key}"))),
        (None, None) => Ok(None),
    }
}

/// Runs the command line `argv` (program name first) and returns the process
/// exit code: 0 on success, 2 on usage errors, 1 on runtime failure.
pub fn run<I, T>(argv: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(argv) {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 2 } else { 0 };
            let _ = e.print();
            return code;
        }
    };
    match execute(cli) {
        Ok(code) => code,
        Err(Failure::Usage(msg)) => {
            eprintln!("error: {msg}");
            eprintln!("run `wassreg --help` for usage");
            2
        }
        Err(Failure::Runtime(e)) => {
            eprintln!("error: {e}");
            1
        }
    }
}

fn load_config(path: Option<&Path>) -> Outcome<FileConfig> {
    let Some(path) = path else {
        return Ok(FileConfig::default());
    };
    let text = std::fs::read_to_string(path).map_err(|e| Failure::Runtime(Error::io(path, e)))?;
    toml::from_str(&text).map_err(|e| Failure::Usage(format!("{}: {e}", path.display())))
}

fn workers_from_env() -> Outcome<Option<usize>> {
    match std::env::var(WORKERS_ENV) {
        Ok(v) => v
            .trim()
            .parse()
            .map(Some)
            .map_err(|_| Failure::Usage(format!("{WORKERS_ENV}={v:?} is not a worker count"))),
        Err(_) => Ok(None),
    }
}

fn execute(cli: Cli) -> Outcome<i32> {
    let file = load_config(cli.config.as_deref())?;
    let seed = cli.seed.or(file.seed).unwrap_or(DEFAULT_SEED);
    let out = cli.out.clone().or(file.out.clone()).unwrap_or_else(|| PathBuf::from("."));
    let workers = match cli.workers.or(file.workers) {
        Some(w) => Some(w),
        None => workers_from_env()?,
    };
    if workers == Some(0) {
        return Err(Failure::Usage("worker count must be positive".into()));
    }
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(workers.unwrap_or(0))
        .build()
        .map_err(|e| Failure::Usage(format!("thread pool: {e}")))?;

    if !matches!(cli.command, Command::Selftest) {
        std::fs::create_dir_all(&out).map_err(|e| Failure::Runtime(Error::io(&out, e)))?;
    }
    pool.install(|| match cli.command {
        Command::Conjecture(args) => conjecture(args, &file.conjecture, seed, &out),
        Command::Rates(args) => rates(args, &file.rates, seed, &out),
        Command::Estimate(args) => estimate(args, &file.estimate, &out),
        Command::Simulate(args) => simulate(args, &file.simulate, seed, &out),
        Command::Selftest => Ok(run_selftest()),
    })
}

fn conjecture(args: ConjectureArgs, sec: &ConjectureSection, seed: u64, out: &Path) -> Outcome<i32> {
    let d = ConjectureConfig::default();
    let cfg = ConjectureConfig {
        n_min: args.n_min.or(sec.n_min).unwrap_or(d.n_min),
        n_max: args.n_max.or(sec.n_max).unwrap_or(d.n_max),
        grid_points: args.grid_points.or(sec.grid_points).unwrap_or(d.grid_points),
        reps: args.reps.or(sec.reps).unwrap_or(d.reps),
        c: args.c.or(sec.c).unwrap_or(d.c),
        c_list: args.big_c.or_else(|| sec.big_c.clone()).unwrap_or(d.c_list),
        seed,
    };
    cfg.validate().map_err(|e| Failure::Usage(e.to_string()))?;
    let rows = conjecture_sweep(&cfg)?;
    let table = out.join("conjecture.csv");
    write_conjecture(&table, &rows)?;
    println!("wrote {} rows to {}", rows.len(), table.display());
    if !args.no_plot && sec.plot.unwrap_or(true) {
        let charts = render_plot(&rows, out)?;
        println!("wrote {} charts to {}", charts.len(), out.display());
    }
    let floor = rows.iter().map(|r| r.mean).fold(f64::INFINITY, f64::min);
    println!("smallest mean over the grid: {floor:.6}");
    Ok(0)
}

fn rates(args: RatesArgs, sec: &RatesSection, seed: u64, out: &Path) -> Outcome<i32> {
    let problem = pick(args.problem, sec.problem.as_deref(), "problem")?
        .ok_or_else(|| Failure::Usage("rates needs --problem".into()))?;
    let sigma_rule = pick(args.sigma_rule, sec.sigma_rule.as_deref(), "sigma_rule")?
        .unwrap_or(SigmaRule::Preset(RatePreset::BelowRoot));
    let n_grid = args
        .n_grid
        .or_else(|| sec.n_grid.clone())
        .unwrap_or_else(|| log_grid(100, 10_000, 5));
    let reps = args.reps.or(sec.reps).unwrap_or(30);
    let mut cfg = RateSweepConfig::new(problem, n_grid, sigma_rule, reps, seed);
    if let Some(link) = pick(args.link, sec.link.as_deref(), "link")? {
        cfg.link = link;
    }
    if let Some(g) = args.grid_points.or(sec.grid_points) {
        cfg.grid_points = g;
    }
    if let Some(m) = args.moment_bound.or(sec.moment_bound) {
        cfg.fit.moment_bound = m;
    }
    cfg.validate().map_err(|e| Failure::Usage(e.to_string()))?;
    let records = rate_sweep(&cfg)?;
    let table = out.join("risks.csv");
    write_records(&table, &records)?;
    println!("wrote {} records to {}", records.len(), table.display());
    let mut stdout = std::io::stdout().lock();
    for &kind in &cfg.risks {
        let summary = summarize(&records, kind);
        for (n, mean, se) in &summary {
            let _ = writeln!(stdout, "{kind} n={n} mean={mean:.6e} stderr={se:.2e}");
        }
        let pts: Vec<(f64, f64)> = summary.iter().map(|&(n, m, _)| (n as f64, m)).collect();
        if let Ok(fit) = fit_loglog_slope(&pts) {
            let _ = writeln!(stdout, "{kind} log-log slope {:.4} (r^2 {:.4})", fit.slope, fit.r_squared);
        }
    }
    Ok(0)
}

fn estimate(args: EstimateArgs, sec: &EstimateSection, out: &Path) -> Outcome<i32> {
    let input = args
        .input
        .or_else(|| sec.input.clone())
        .ok_or_else(|| Failure::Usage("estimate needs --input".into()))?;
    let sigma = args
        .sigma
        .or(sec.sigma)
        .ok_or_else(|| Failure::Usage("estimate needs --sigma".into()))?;
    let grid_points = args.grid_points.or(sec.grid_points).unwrap_or(DEFAULT_GRID_POINTS);
    let mut fit_cfg = FitConfig::default();
    if let Some(m) = args.moment_bound.or(sec.moment_bound) {
        fit_cfg.moment_bound = m;
    }
    let data = read_dataset(&input)?;
    let noise = NoiseSpec::gaussian();
    let rule = BandwidthRule::default();
    let settings = DeconvSettings::default();
    let ys = EmpiricalMeasure::new(data.y.clone())?;
    let fit = match (data.mode, &data.x) {
        (Mode::Deconv, _) | (_, None) => {
            let h = select_bandwidth(ys.len(), sigma, &noise, &rule)?.h;
            let grid = GridSpec::covering(&ys, sigma, grid_points)?;
            let cdf = deconvolve_cdf_with(&ys, &noise, sigma, h, &grid, &settings)?;
            let path = out.join("deconv_cdf.csv");
            write_tabulated(&path, &cdf)?;
            println!("bandwidth {h:.6}; wrote {}", path.display());
            return Ok(0);
        }
        (Mode::Shuffled, Some(x)) => {
            let mut x = x.clone();
            x.sort_by(f64::total_cmp);
            fit_shuffled(&x, &data.y, sigma, &fit_cfg)?
        }
        (Mode::Unlinked, Some(x)) => {
            let grid = GridSpec::covering(&ys, sigma, grid_points)?;
            let fit = fit_unlinked_with(x, &data.y, &noise, sigma, &fit_cfg, &grid, &rule, &settings)?;
            let path = out.join("signal_cdf.csv");
            write_tabulated(&path, &fit.signal)?;
            println!("bandwidth {:.6}; wrote {}", fit.bandwidth.h, path.display());
            fit.fit
        }
    };
    let path = out.join("fit.csv");
    write_fit(&path, &fit)?;
    println!("projection active: {}; wrote {}", fit.projected, path.display());
    Ok(0)
}

fn simulate(args: SimulateArgs, sec: &SimulateSection, seed: u64, out: &Path) -> Outcome<i32> {
    let mode = pick(args.mode, sec.mode.as_deref(), "mode")?.unwrap_or(Mode::Shuffled);
    let link = pick(args.link, sec.link.as_deref(), "link")?.unwrap_or(LinkSpec::Identity);
    let n = args.n.or(sec.n).unwrap_or(1000);
    let sigma = args.sigma.or(sec.sigma).unwrap_or(0.1);
    let ds = sample_dataset(&DatasetSpec::new(mode, n, link, sigma), seed)
        .map_err(|e| Failure::Usage(e.to_string()))?;
    let path = out.join("dataset.csv");
    write_dataset(
        &path,
        &ObservedData {
            mode,
            x: ds.x_ordered,
            y: ds.y,
        },
    )?;
    println!("wrote {n} observations to {}", path.display());
    Ok(0)
}

fn run_selftest() -> i32 {
    let checks = selftest::run_all();
    for c in &checks {
        println!("[{}] {} ({})", if c.passed { "PASS" } else { "FAIL" }, c.name, c.detail);
    }
    if checks.iter().all(|c| c.passed) {
        0
    } else {
        1
    }
}
