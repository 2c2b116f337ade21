//! Monte-Carlo studies: the multinomial occupancy product, risk evaluation
//! and rate sweeps over `(n, sigma_n)`.
//!
//! Every replication draws from its own stream keyed by `(seed, n, rep)`, and
//! results are merged in task order, so a sweep produces the same table
//! whatever the number of worker threads.

use std::fmt;
use std::str::FromStr;
use std::sync::OnceLock;

use rand::{RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::deconv::{
    deconvolve_cdf_with, select_bandwidth, BandwidthRule, DeconvSettings, GridSpec,
    DEFAULT_GRID_POINTS,
};
use crate::dist1d::{w1_tabulated, EmpiricalMeasure, MonotoneStepFn, TabulatedDistribution};
use crate::regress::{fit_shuffled, fit_unlinked_with, FitConfig};
use crate::synth::{
    derive_seed, sample_dataset, CovariateLaw, DatasetSpec, LinkSpec, Mode, NoiseSpec, Stream,
};
use crate::{Error, Result};

#[derive(Debug, Clone, PartialEq)]
pub struct ConjectureConfig {
    pub n_min: usize,
    pub n_max: usize,
    pub grid_points: usize,
    pub reps: usize,
    /// Exponent constant `c`.
    pub c: f64,
    /// Values of the prefactor `C`.
    pub c_list: Vec<f64>,
    pub seed: u64,
}

impl Default for ConjectureConfig {
    fn default() -> Self {
        Self {
            n_min: 100,
            n_max: 1_000_000,
            grid_points: 30,
            reps: 500,
            c: 20.0,
            c_list: vec![1.0, 2.0, 5.0, 10.0, 100.0, 200.0, 500.0, 1000.0],
            seed: 1,
        }
    }
}

impl ConjectureConfig {
    pub fn validate(&self) -> Result<()> {
        if self.n_min < 1 || self.n_max < self.n_min || self.grid_points < 1 || self.reps < 1 {
            return Err(Error::InvalidParameter(format!(
                "conjecture grid [{}, {}] x {} points with {} reps",
                self.n_min, self.n_max, self.grid_points, self.reps
            )));
        }
        if !(self.c > 0.0) || self.c_list.is_empty() || self.c_list.iter().any(|&x| !(x > 0.0)) {
            return Err(Error::InvalidParameter(
                "c and every C must be positive".into(),
            ));
        }
        Ok(())
    }

    pub fn n_grid(&self) -> Vec<usize> {
        log_grid(self.n_min, self.n_max, self.grid_points)
    }
}

/// `points` sizes equispaced in `log10` between `lo` and `hi`, rounded to the
/// nearest integer and deduplicated.
pub fn log_grid(lo: usize, hi: usize, points: usize) -> Vec<usize> {
    if points == 1 {
        return vec![lo];
    }
    let (a, b) = ((lo as f64).log10(), (hi as f64).log10());
    let mut grid: Vec<usize> = (0..points)
        .map(|i| {
            if i == 0 {
                lo
            } else if i + 1 == points {
                hi
            } else {
                10f64.powf(a + (b - a) * i as f64 / (points - 1) as f64).round() as usize
            }
        })
        .collect();
    grid.dedup();
    grid
}

fn log_abs_factor(count: u64, n: usize, big_c: f64, c: f64) -> Option<f64> {
    let e = big_c * (-c * (n as f64).ln() / count as f64).exp();
    let f = 1.0 - e;
    if f == 0.0 {
        None
    } else if e < 0.5 {
        Some((-e).ln_1p())
    } else {
        Some(f.abs().ln())
    }
}

/// `prod_{j : n_j > 0} (1 - C exp(-c log(n) / n_j))^2`, accumulated in log
/// space. Natural logarithm.
pub fn conjecture_product(counts: &[u64], n: usize, big_c: f64, c: f64) -> f64 {
    let mut log_sum = 0.0;
    for &k in counts.iter().filter(|&&k| k > 0) {
        match log_abs_factor(k, n, big_c, c) {
            Some(l) => log_sum += 2.0 * l,
            None => return 0.0,
        }
    }
    log_sum.exp()
}

/// Same product from the occupancy histogram `occ[k] = #{j : n_j = k}`.
pub fn conjecture_product_from_occupancy(occ: &[u64], n: usize, big_c: f64, c: f64) -> f64 {
    let mut log_sum = 0.0;
    for (k, &cells) in occ.iter().enumerate().skip(1).filter(|(_, &m)| m > 0) {
        match log_abs_factor(k as u64, n, big_c, c) {
            Some(l) => log_sum += 2.0 * cells as f64 * l,
            None => return 0.0,
        }
    }
    log_sum.exp()
}

/// Multinomial`(n; 1/n, ..., 1/n)` counts from binning `n` uniform draws.
pub fn multinomial_counts<R: RngCore + ?Sized>(n: usize, rng: &mut R) -> Vec<u32> {
    let mut counts = vec![0u32; n];
    for _ in 0..n {
        // multiply-shift maps a 64-bit draw onto [0, n)
        let cell = ((rng.next_u64() as u128 * n as u128) >> 64) as usize;
        counts[cell] += 1;
    }
    counts
}

/// `occ[k]` = number of cells holding exactly `k` balls.
pub fn occupancy(counts: &[u32]) -> Vec<u64> {
    let mut occ = vec![0u64; 16];
    for &k in counts {
        let k = k as usize;
        if k >= occ.len() {
            occ.resize(k + 1, 0);
        }
        occ[k] += 1;
    }
    while occ.len() > 1 && occ[occ.len() - 1] == 0 {
        occ.pop();
    }
    occ
}

/// The RNG for one `(seed, n, rep)` multinomial draw.
pub fn replication_rng(seed: u64, n: usize, rep: usize) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(derive_seed(seed, &[n as u64, rep as u64]));
    rng.set_stream(Stream::Multinomial as u64);
    rng
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ConjectureRow {
    pub n: usize,
    pub big_c: f64,
    pub mean: f64,
    pub stderr: f64,
}

/// Mean and standard error of the occupancy product for every `(n, C)`.
/// All values of `C` are evaluated on the same multinomial draws.
pub fn conjecture_sweep(cfg: &ConjectureConfig) -> Result<Vec<ConjectureRow>> {
    cfg.validate()?;
    let mut rows = Vec::new();
    for n in cfg.n_grid() {
        let per_rep: Vec<Vec<f64>> = (0..cfg.reps)
            .into_par_iter()
            .map(|rep| {
                let counts = multinomial_counts(n, &mut replication_rng(cfg.seed, n, rep));
                let occ = occupancy(&counts);
                cfg.c_list
                    .iter()
                    .map(|&big_c| conjecture_product_from_occupancy(&occ, n, big_c, cfg.c))
                    .collect()
            })
            .collect();
        for (ci, &big_c) in cfg.c_list.iter().enumerate() {
            let (mean, stderr) = mean_stderr(per_rep.iter().map(|r| r[ci]));
            rows.push(ConjectureRow {
                n,
                big_c,
                mean,
                stderr,
            });
        }
    }
    Ok(rows)
}

/// Sample mean and standard error of the mean.
pub fn mean_stderr(values: impl Iterator<Item = f64> + Clone) -> (f64, f64) {
    let n = values.clone().count();
    if n == 0 {
        return (f64::NAN, f64::NAN);
    }
    let mean = values.clone().sum::<f64>() / n as f64;
    if n == 1 {
        return (mean, 0.0);
    }
    let var = values.map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1) as f64;
    (mean, (var / n as f64).sqrt())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Problem {
    Shuffled,
    Unlinked,
    Deconv,
}

impl Problem {
    pub fn as_str(&self) -> &'static str {
        match self {
            Problem::Shuffled => "shuffled",
            Problem::Unlinked => "unlinked",
            Problem::Deconv => "deconv",
        }
    }

    fn mode(&self) -> Mode {
        match self {
            Problem::Shuffled => Mode::Shuffled,
            Problem::Unlinked => Mode::Unlinked,
            Problem::Deconv => Mode::Deconv,
        }
    }

    pub fn supports(&self, kind: RiskKind) -> bool {
        matches!(
            (self, kind),
            (Problem::Deconv, RiskKind::W1Measure)
                | (
                    Problem::Shuffled | Problem::Unlinked,
                    RiskKind::EmpiricalL1 | RiskKind::PopulationL1
                )
        )
    }
}

impl fmt::Display for Problem {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Problem {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "shuffled" => Ok(Problem::Shuffled),
            "unlinked" => Ok(Problem::Unlinked),
            "deconv" => Ok(Problem::Deconv),
            _ => Err(Error::InvalidParameter(format!("unknown problem {s:?}"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum RiskKind {
    EmpiricalL1,
    PopulationL1,
    W1Measure,
}

impl RiskKind {
    pub fn as_str(&self) -> &'static str {
        match self {
            RiskKind::EmpiricalL1 => "empirical_L1",
            RiskKind::PopulationL1 => "population_L1",
            RiskKind::W1Measure => "W1_measure",
        }
    }
}

impl fmt::Display for RiskKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for RiskKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "empirical_L1" => Ok(RiskKind::EmpiricalL1),
            "population_L1" => Ok(RiskKind::PopulationL1),
            "W1_measure" => Ok(RiskKind::W1Measure),
            _ => Err(Error::InvalidParameter(format!("unknown risk kind {s:?}"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RiskRecord {
    pub problem: Problem,
    pub n: usize,
    pub sigma: f64,
    /// Seed of the dataset this value was measured on.
    pub seed: u64,
    pub risk_kind: RiskKind,
    pub value: f64,
}

/// `(1/n) sum |mhat(x_i) - m0(x_i)|`.
pub fn risk_empirical(mhat: &MonotoneStepFn, m0: &LinkSpec, xs: &[f64]) -> Result<f64> {
    if xs.is_empty() {
        return Err(Error::EmptySample);
    }
    let mut total = 0.0;
    for &x in xs {
        total += (mhat.eval(x) - m0.eval(x)?).abs();
    }
    Ok(total / xs.len() as f64)
}

const GL_ORDER: usize = 16;
const GL_PANELS: usize = 4;

/// Gauss-Legendre nodes and weights on `[-1, 1]`.
fn gauss_legendre() -> &'static [(f64, f64); GL_ORDER] {
    static RULE: OnceLock<[(f64, f64); GL_ORDER]> = OnceLock::new();
    RULE.get_or_init(|| {
        let n = GL_ORDER;
        let mut rule = [(0.0, 0.0); GL_ORDER];
        for (i, slot) in rule.iter_mut().enumerate() {
            let mut x = (std::f64::consts::PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
            let mut dp = 0.0;
            for _ in 0..100 {
                let (mut p0, mut p1) = (1.0, x);
                for k in 2..=n {
                    let p2 = ((2 * k - 1) as f64 * x * p1 - (k - 1) as f64 * p0) / k as f64;
                    p0 = p1;
                    p1 = p2;
                }
                dp = n as f64 * (x * p1 - p0) / (x * x - 1.0);
                let dx = p1 / dp;
                x -= dx;
                if dx.abs() < 1e-16 {
                    break;
                }
            }
            *slot = (x, 2.0 / ((1.0 - x * x) * dp * dp));
        }
        rule
    })
}

/// `int_a^b f` by `GL_PANELS` panels of `GL_ORDER`-point Gauss-Legendre.
fn composite_gl(a: f64, b: f64, f: impl Fn(f64) -> f64) -> f64 {
    let rule = gauss_legendre();
    let width = (b - a) / GL_PANELS as f64;
    (0..GL_PANELS)
        .map(|p| {
            let (lo, half) = (a + p as f64 * width, 0.5 * width);
            let mid = lo + half;
            half * rule.iter().map(|&(x, w)| w * f(mid + half * x)).sum::<f64>()
        })
        .sum()
}

/// `int_0^1 |mhat - m0| d mu_X`.
///
/// The unit interval is split at the knots of `mhat`, at the jumps of `m0`
/// and at every point where `m0` crosses the constant value of `mhat`, so the
/// integrand is smooth on every piece.
pub fn risk_population(mhat: &MonotoneStepFn, m0: &LinkSpec, mu_x: &CovariateLaw) -> f64 {
    let mut cuts = vec![0.0, 1.0];
    let knots = mhat.knots();
    for (i, &v) in mhat.values().iter().enumerate() {
        let left = if i == 0 { 0.0 } else { knots[i - 1] };
        let right = if i + 1 == knots.len() { 1.0 } else { knots[i] };
        let cross = m0.generalized_inverse(v);
        if cross > left && cross < right {
            cuts.push(cross);
        }
    }
    cuts.extend(knots.iter().copied().filter(|&k| k > 0.0 && k < 1.0));
    cuts.extend(m0.breakpoints().into_iter().filter(|&k| k > 0.0 && k < 1.0));
    cuts.sort_by(f64::total_cmp);
    cuts.dedup();
    cuts.windows(2)
        .filter(|w| w[1] > w[0])
        .map(|w| {
            let level = mhat.eval(0.5 * (w[0] + w[1]));
            composite_gl(w[0], w[1], |x| {
                (level - m0.value(x)).abs() * mu_x.density(x)
            })
        })
        .sum()
}

use crate::dist1d::Monotone;

/// Noise level as a function of the sample size.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum SigmaRule {
    Constant(f64),
    /// `scale * n^{-kappa}`
    Power { scale: f64, kappa: f64 },
    Preset(RatePreset),
}

/// One representative noise path inside each row of the deconvolution rate
/// table, with `r = n^{-1/2}`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RatePreset {
    /// `0.1 n^{-0.6}` in `(0, r]`
    BelowRoot,
    /// `r (log n)^{eta/2}` in `(r, r (log n)^eta]`
    AboveRoot,
    /// `r (log n)^{(eta + 1/beta)/2}` in `(r (log n)^eta, r (log n)^{1/beta}]`
    LogWindow,
    /// `r ((log n)^{1/beta} n^eta)^{1/2}` in `(r (log n)^{1/beta}, n^{-1/2+eta}]`
    PolyWindow,
    /// `n^{(-1/2+eta)/2}` in `(n^{-1/2+eta}, 1]`
    Large,
}

impl RatePreset {
    pub const ALL: [RatePreset; 5] = [
        RatePreset::BelowRoot,
        RatePreset::AboveRoot,
        RatePreset::LogWindow,
        RatePreset::PolyWindow,
        RatePreset::Large,
    ];

    pub fn as_str(&self) -> &'static str {
        match self {
            RatePreset::BelowRoot => "below-root",
            RatePreset::AboveRoot => "above-root",
            RatePreset::LogWindow => "log-window",
            RatePreset::PolyWindow => "poly-window",
            RatePreset::Large => "large",
        }
    }

    /// The row's interval `(lower, upper]` at sample size `n`.
    pub fn range(&self, n: usize, eta: f64, beta: f64) -> (f64, f64) {
        let nf = n as f64;
        let r = nf.sqrt().recip();
        let ln = nf.ln();
        match self {
            RatePreset::BelowRoot => (0.0, r),
            RatePreset::AboveRoot => (r, r * ln.powf(eta)),
            RatePreset::LogWindow => (r * ln.powf(eta), r * ln.powf(1.0 / beta)),
            RatePreset::PolyWindow => (r * ln.powf(1.0 / beta), nf.powf(-0.5 + eta)),
            RatePreset::Large => (nf.powf(-0.5 + eta), 1.0),
        }
    }

    fn raw_sigma(&self, n: usize, eta: f64, beta: f64) -> f64 {
        let nf = n as f64;
        let r = nf.sqrt().recip();
        let ln = nf.ln();
        match self {
            RatePreset::BelowRoot => 0.1 * nf.powf(-0.6),
            RatePreset::AboveRoot => r * ln.powf(0.5 * eta),
            RatePreset::LogWindow => r * ln.powf(0.5 * (eta + 1.0 / beta)),
            RatePreset::PolyWindow => r * (ln.powf(1.0 / beta) * nf.powf(eta)).sqrt(),
            RatePreset::Large => nf.powf(0.5 * (-0.5 + eta)),
        }
    }

    /// Noise level at `n`, checked to lie inside the row's range.
    pub fn sigma(&self, n: usize, eta: f64, beta: f64) -> Result<f64> {
        let (lo, hi) = self.range(n, eta, beta);
        let s = self.raw_sigma(n, eta, beta);
        if n >= 2 && lo < hi && s > lo && s <= hi {
            Ok(s)
        } else {
            Err(Error::InvalidSigmaRule {
                rule: self.as_str().into(),
                n,
                reason: format!("sigma {s} not in ({lo}, {hi}]"),
            })
        }
    }
}

impl FromStr for RatePreset {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        RatePreset::ALL
            .into_iter()
            .find(|p| p.as_str() == s)
            .ok_or_else(|| Error::InvalidParameter(format!("unknown preset {s:?}")))
    }
}

impl SigmaRule {
    pub fn sigma(&self, n: usize, eta: f64, beta: f64) -> Result<f64> {
        let s = match *self {
            SigmaRule::Constant(s) => s,
            SigmaRule::Power { scale, kappa } => scale * (n as f64).powf(-kappa),
            SigmaRule::Preset(p) => return p.sigma(n, eta, beta),
        };
        if s >= 0.0 && s.is_finite() {
            Ok(s)
        } else {
            Err(Error::InvalidSigmaRule {
                rule: self.to_string(),
                n,
                reason: format!("sigma {s} is negative or not finite"),
            })
        }
    }
}

impl fmt::Display for SigmaRule {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            SigmaRule::Constant(s) => write!(f, "const:{s}"),
            SigmaRule::Power { scale, kappa } => write!(f, "power:{scale},{kappa}"),
            SigmaRule::Preset(p) => write!(f, "preset:{}", p.as_str()),
        }
    }
}

impl FromStr for SigmaRule {
    type Err = Error;

    /// `const:S`, `power:SCALE,KAPPA` or `preset:NAME`.
    fn from_str(s: &str) -> Result<Self> {
        let bad = || Error::InvalidParameter(format!("unrecognised sigma rule {s:?}"));
        let (head, rest) = s.split_once(':').ok_or_else(bad)?;
        match head {
            "const" => Ok(SigmaRule::Constant(rest.trim().parse().map_err(|_| bad())?)),
            "power" => {
                let (a, b) = rest.split_once(',').ok_or_else(bad)?;
                Ok(SigmaRule::Power {
                    scale: a.trim().parse().map_err(|_| bad())?,
                    kappa: b.trim().parse().map_err(|_| bad())?,
                })
            }
            "preset" => Ok(SigmaRule::Preset(rest.trim().parse()?)),
            _ => Err(bad()),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RateSweepConfig {
    pub problem: Problem,
    pub n_grid: Vec<usize>,
    pub sigma_rule: SigmaRule,
    pub reps: usize,
    pub seed: u64,
    pub link: LinkSpec,
    pub risks: Vec<RiskKind>,
    pub fit: FitConfig,
    pub noise: NoiseSpec,
    pub bandwidth: BandwidthRule,
    pub covariate: CovariateLaw,
    pub grid_points: usize,
    pub deconv: DeconvSettings,
}

impl RateSweepConfig {
    pub fn new(problem: Problem, n_grid: Vec<usize>, sigma_rule: SigmaRule, reps: usize, seed: u64) -> Self {
        let risks = match problem {
            Problem::Deconv => vec![RiskKind::W1Measure],
            _ => vec![RiskKind::EmpiricalL1, RiskKind::PopulationL1],
        };
        Self {
            problem,
            n_grid,
            sigma_rule,
            reps,
            seed,
            link: LinkSpec::Identity,
            risks,
            fit: FitConfig::default(),
            noise: NoiseSpec::gaussian(),
            bandwidth: BandwidthRule::default(),
            covariate: CovariateLaw::Uniform,
            grid_points: DEFAULT_GRID_POINTS,
            deconv: DeconvSettings::default(),
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.n_grid.is_empty() || self.reps == 0 {
            return Err(Error::InvalidParameter("empty sweep".into()));
        }
        for &kind in &self.risks {
            if !self.problem.supports(kind) {
                return Err(Error::IncompatibleRisk {
                    problem: self.problem.to_string(),
                    kind: kind.to_string(),
                });
            }
        }
        for &n in &self.n_grid {
            self.sigma_rule.sigma(n, self.bandwidth.eta, self.noise.beta)?;
        }
        self.fit.validate()?;
        self.bandwidth.validate()?;
        self.link.validate()?;
        self.covariate.validate()
    }
}

/// CDF of `m0(X)`: `F_X(m0^{-1}(z))`.
pub fn signal_cdf(link: &LinkSpec, law: &CovariateLaw, z: f64) -> f64 {
    law.cdf(link.generalized_inverse(z))
}

/// One measurement per `(n, rep, risk kind)`, in that nesting order.
pub fn rate_sweep(cfg: &RateSweepConfig) -> Result<Vec<RiskRecord>> {
    cfg.validate()?;
    let tasks: Vec<(usize, usize)> = cfg
        .n_grid
        .iter()
        .flat_map(|&n| (0..cfg.reps).map(move |rep| (n, rep)))
        .collect();
    let nested: Vec<Vec<RiskRecord>> = tasks
        .par_iter()
        .map(|&(n, rep)| replicate(cfg, n, rep))
        .collect::<Result<_>>()?;
    Ok(nested.into_iter().flatten().collect())
}

fn replicate(cfg: &RateSweepConfig, n: usize, rep: usize) -> Result<Vec<RiskRecord>> {
    let sigma = cfg.sigma_rule.sigma(n, cfg.bandwidth.eta, cfg.noise.beta)?;
    let seed = derive_seed(cfg.seed, &[n as u64, rep as u64]);
    let spec = DatasetSpec {
        mode: cfg.problem.mode(),
        n,
        link: cfg.link.clone(),
        noise: cfg.noise,
        sigma,
        covariate: cfg.covariate,
    };
    let ds = sample_dataset(&spec, seed)?;
    let record = |kind: RiskKind, value: f64| RiskRecord {
        problem: cfg.problem,
        n,
        sigma,
        seed,
        risk_kind: kind,
        value,
    };

    if cfg.problem == Problem::Deconv {
        let ys = EmpiricalMeasure::new(ds.y.clone())?;
        let h = select_bandwidth(n, sigma, &cfg.noise, &cfg.bandwidth)?.h;
        let grid = GridSpec::covering(&ys, sigma, cfg.grid_points)?;
        let est = deconvolve_cdf_with(&ys, &cfg.noise, sigma, h, &grid, &cfg.deconv)?;
        let truth = TabulatedDistribution::from_fn(grid.lo, grid.hi, grid.points, |z| {
            signal_cdf(&cfg.link, &cfg.covariate, z)
        })?;
        let w1 = w1_tabulated(&est, &truth);
        return Ok(cfg.risks.iter().map(|&k| record(k, w1)).collect());
    }

    let x = ds.x_ordered.as_deref().expect("covariates present outside deconv mode");
    let mhat = match cfg.problem {
        Problem::Shuffled => fit_shuffled(x, &ds.y, sigma, &cfg.fit)?.link,
        Problem::Unlinked => {
            let ys = EmpiricalMeasure::new(ds.y.clone())?;
            let grid = GridSpec::covering(&ys, sigma, cfg.grid_points)?;
            fit_unlinked_with(x, &ds.y, &cfg.noise, sigma, &cfg.fit, &grid, &cfg.bandwidth, &cfg.deconv)?
                .fit
                .link
        }
        Problem::Deconv => unreachable!(),
    };
    cfg.risks
        .iter()
        .map(|&kind| {
            let value = match kind {
                RiskKind::EmpiricalL1 => risk_empirical(&mhat, &cfg.link, x)?,
                RiskKind::PopulationL1 => risk_population(&mhat, &cfg.link, &cfg.covariate),
                RiskKind::W1Measure => unreachable!("validated"),
            };
            Ok(record(kind, value))
        })
        .collect()
}

/// Mean and standard error of one risk kind at each sample size, in grid
/// order.
pub fn summarize(records: &[RiskRecord], kind: RiskKind) -> Vec<(usize, f64, f64)> {
    let mut ns: Vec<usize> = records.iter().map(|r| r.n).collect();
    ns.dedup();
    let mut seen = Vec::new();
    for n in ns {
        if seen.contains(&n) {
            continue;
        }
        seen.push(n);
    }
    seen.into_iter()
        .map(|n| {
            let vals = records
                .iter()
                .filter(move |r| r.n == n && r.risk_kind == kind)
                .map(|r| r.value);
            let (mean, se) = mean_stderr(vals);
            (n, mean, se)
        })
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LogLogFit {
    pub slope: f64,
    pub intercept: f64,
    pub r_squared: f64,
}

/// Least squares of `log(value)` on `log(x)`.
pub fn fit_loglog_slope(points: &[(f64, f64)]) -> Result<LogLogFit> {
    if let Some(&(_, v)) = points.iter().find(|p| !(p.1 > 0.0)) {
        return Err(Error::NonPositive(v));
    }
    if let Some(&(x, _)) = points.iter().find(|p| !(p.0 > 0.0)) {
        return Err(Error::NonPositive(x));
    }
    let lx: Vec<f64> = points.iter().map(|p| p.0.ln()).collect();
    let ly: Vec<f64> = points.iter().map(|p| p.1.ln()).collect();
    let m = points.len() as f64;
    let mx = lx.iter().sum::<f64>() / m;
    let my = ly.iter().sum::<f64>() / m;
    let sxx: f64 = lx.iter().map(|x| (x - mx).powi(2)).sum();
    if points.len() < 2 || sxx <= 0.0 {
        return Err(Error::InvalidParameter(
            "log-log fit needs at least two distinct abscissae".into(),
        ));
    }
    let sxy: f64 = lx.iter().zip(&ly).map(|(x, y)| (x - mx) * (y - my)).sum();
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let ss_tot: f64 = ly.iter().map(|y| (y - my).powi(2)).sum();
    let ss_res: f64 = lx
        .iter()
        .zip(&ly)
        .map(|(x, y)| (y - intercept - slope * x).powi(2))
        .sum();
    let r_squared = if ss_tot <= f64::EPSILON * ss_res.max(1.0) {
        1.0
    } else {
        1.0 - ss_res / ss_tot
    };
    Ok(LogLogFit {
        slope,
        intercept,
        r_squared,
    })
}
