//! Data generation for the three observation schemes sharing the model
//! `Y = m0(X) + sigma * delta`.
//!
//! * shuffled: `X` and `Y` come from the same units, but `Y` is returned in
//!   a uniformly random order;
//! * unlinked: the covariate sample and the response sample are drawn from
//!   independent units;
//! * deconv: only `Y = Z + sigma * delta` with `Z = m0(X)` is observed.
//!
//! Every random draw comes from a ChaCha stream keyed by `(seed, purpose)`, so
//! a dataset is a pure function of its spec and seed, and the covariate and
//! response draws of different modes line up by construction.

use std::fmt;
use std::str::FromStr;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use crate::dist1d::{Monotone, MonotoneStepFn};
use crate::{Error, Result};

/// Purpose tags for independent random streams.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
#[repr(u64)]
pub enum Stream {
    Covariate = 1,
    Response = 2,
    Noise = 3,
    Permutation = 4,
    Multinomial = 5,
}

/// The RNG for one `(seed, purpose)` pair.
pub fn stream_rng(seed: u64, stream: Stream) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream as u64);
    rng
}

fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// Mixes a base seed with integer coordinates (sample size, replication, ...)
/// into a child seed.
pub fn derive_seed(seed: u64, coords: &[u64]) -> u64 {
    coords
        .iter()
        .fold(splitmix64(seed), |acc, &c| splitmix64(acc ^ splitmix64(c)))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum NoiseFamily {
    Gaussian,
}

/// Supersmooth noise law of `delta`.
///
/// `beta`, `gamma1`, `c1` and `beta_tilde` bound the decay of the
/// characteristic function from above; `gamma2`, `c2` bound the growth of its
/// reciprocal and first two derivatives.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NoiseSpec {
    pub family: NoiseFamily,
    pub beta: f64,
    pub gamma1: f64,
    pub gamma2: f64,
    pub c1: f64,
    pub c2: f64,
    pub beta_tilde: f64,
}

impl NoiseSpec {
    /// Standard normal noise: `exp(-t^2/2)` decays with `beta = 2`,
    /// `gamma1 = 2`, and `1/phi` together with its derivatives `t e^{t^2/2}`,
    /// `(1 + t^2) e^{t^2/2}` stays below `(1 + |t|^2) e^{t^2/2}`.
    pub fn gaussian() -> Self {
        Self {
            family: NoiseFamily::Gaussian,
            beta: 2.0,
            gamma1: 2.0,
            gamma2: 2.0,
            c1: 1.0,
            c2: 1.0,
            beta_tilde: 2.0,
        }
    }

    pub fn charfn(&self, t: f64) -> f64 {
        match self.family {
            NoiseFamily::Gaussian => (-0.5 * t * t).exp(),
        }
    }

    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        match self.family {
            NoiseFamily::Gaussian => rng.sample(StandardNormal),
        }
    }

    /// Upper bound on `1 / phi(sigma t)` over `|t| <= 1/h`.
    pub fn amplification_bound(&self, sigma: f64, h: f64) -> f64 {
        let s = sigma / h;
        self.c2 * (1.0 + s.powf(self.beta_tilde)) * (s.powf(self.beta) / self.gamma2).exp()
    }
}

impl Default for NoiseSpec {
    fn default() -> Self {
        Self::gaussian()
    }
}

/// Characteristic function of the standardized noise.
pub fn noise_charfn(spec: &NoiseSpec, t: f64) -> f64 {
    spec.charfn(t)
}

/// Catalog of nondecreasing left-continuous links on `[0, 1]`.
#[derive(Debug, Clone, PartialEq)]
pub enum LinkSpec {
    Identity,
    Affine { slope: f64, intercept: f64 },
    /// `x^3`
    Cube,
    Step(MonotoneStepFn),
    /// `-(x log^{1+eps}(1/x))^{-1/(a+2)}` on `(0, c/n]`, zero on `(c/n, 1]`.
    /// It has an unbounded negative spike at the origin and still satisfies
    /// the `(a+2)`-moment bound.
    UnboundedTail { eps: f64, a: f64, c: f64, n: usize },
}

impl LinkSpec {
    pub fn validate(&self) -> Result<()> {
        match self {
            LinkSpec::Affine { slope, intercept } => {
                if !(slope.is_finite() && *slope >= 0.0 && intercept.is_finite()) {
                    return Err(Error::InvalidParameter(format!(
                        "affine link needs a finite nonnegative slope, got {slope}"
                    )));
                }
            }
            LinkSpec::UnboundedTail { eps, a, c, n } => {
                if !(*eps > 0.0 && *a > 0.0 && *c > 0.0 && *n >= 1) {
                    return Err(Error::InvalidParameter(
                        "unbounded tail needs eps, a, c > 0 and n >= 1".into(),
                    ));
                }
                // x log^{1+eps}(1/x) is increasing only below e^{-(1+eps)}
                if c / *n as f64 >= (-(1.0 + eps)).exp() {
                    return Err(Error::InvalidParameter(format!(
                        "unbounded tail cut-off c/n = {} is outside the monotone region",
                        c / *n as f64
                    )));
                }
            }
            LinkSpec::Identity | LinkSpec::Cube | LinkSpec::Step(_) => {}
        }
        Ok(())
    }

    /// Value at `x`, which must lie in `[0, 1]`.
    pub fn eval(&self, x: f64) -> Result<f64> {
        if !(0.0..=1.0).contains(&x) {
            return Err(Error::OutOfUnitInterval { value: x });
        }
        Ok(self.eval_unchecked(x))
    }

    fn eval_unchecked(&self, x: f64) -> f64 {
        match self {
            LinkSpec::Identity => x,
            LinkSpec::Affine { slope, intercept } => slope * x + intercept,
            LinkSpec::Cube => x * x * x,
            LinkSpec::Step(m) => m.eval(x),
            LinkSpec::UnboundedTail { eps, a, c, n } => {
                if x > c / *n as f64 {
                    0.0
                } else {
                    // the spike is infinite at 0 itself
                    let x = x.max(f64::MIN_POSITIVE);
                    let l = (1.0 / x).ln();
                    -(x * l.powf(1.0 + eps)).powf(-1.0 / (a + 2.0))
                }
            }
        }
    }

    /// Points where the link jumps.
    pub fn breakpoints(&self) -> Vec<f64> {
        match self {
            LinkSpec::Step(m) => m.knots().iter().copied().filter(|&k| k < 1.0).collect(),
            LinkSpec::UnboundedTail { c, n, .. } => vec![c / *n as f64],
            _ => Vec::new(),
        }
    }

    /// `sup { t in [0, 1] : m(t) <= z }`, 0 when empty.
    pub fn generalized_inverse(&self, z: f64) -> f64 {
        match self {
            LinkSpec::Identity => z.clamp(0.0, 1.0),
            LinkSpec::Affine { slope, intercept } => {
                if *slope == 0.0 {
                    if z >= *intercept {
                        1.0
                    } else {
                        0.0
                    }
                } else {
                    ((z - intercept) / slope).clamp(0.0, 1.0)
                }
            }
            LinkSpec::Cube => z.cbrt().clamp(0.0, 1.0),
            LinkSpec::Step(m) => m.generalized_inverse(z),
            LinkSpec::UnboundedTail { .. } => {
                if z >= 0.0 {
                    return 1.0;
                }
                let (mut lo, mut hi) = (0.0, self.breakpoints()[0]);
                if self.eval_unchecked(lo) > z {
                    return 0.0;
                }
                for _ in 0..200 {
                    let mid = 0.5 * (lo + hi);
                    if self.eval_unchecked(mid) <= z {
                        lo = mid;
                    } else {
                        hi = mid;
                    }
                }
                lo
            }
        }
    }

    /// `int_0^1 |m(x)|^p dx` against the uniform law.
    pub fn moment_integral(&self, p: f64) -> f64 {
        match self {
            LinkSpec::Identity => 1.0 / (p + 1.0),
            LinkSpec::Cube => 1.0 / (3.0 * p + 1.0),
            LinkSpec::Affine { slope, intercept } => {
                if *slope == 0.0 {
                    intercept.abs().powf(p)
                } else {
                    let antideriv = |u: f64| u * u.abs().powf(p) / (p + 1.0);
                    (antideriv(slope + intercept) - antideriv(*intercept)) / slope
                }
            }
            LinkSpec::Step(m) => {
                let mut prev = 0.0;
                let mut total = 0.0;
                for (i, (&k, &v)) in m.knots().iter().zip(m.values()).enumerate() {
                    let right = if i + 1 == m.len() { 1.0 } else { k };
                    total += v.abs().powf(p) * (right - prev);
                    prev = right;
                }
                total
            }
            LinkSpec::UnboundedTail { eps, a, c, n } => {
                // exact when p = a + 2: substitute u = log(1/x)
                if (p - (a + 2.0)).abs() < 1e-12 {
                    (*n as f64 / c).ln().powf(-eps) / eps
                } else {
                    f64::NAN
                }
            }
        }
    }

    pub fn name(&self) -> String {
        match self {
            LinkSpec::Identity => "identity".into(),
            LinkSpec::Affine { slope, intercept } => format!("affine:{slope},{intercept}"),
            LinkSpec::Cube => "cube".into(),
            LinkSpec::Step(m) => {
                let pairs: Vec<String> = m
                    .knots()
                    .iter()
                    .zip(m.values())
                    .map(|(k, v)| format!("{k}/{v}"))
                    .collect();
                format!("step:{}", pairs.join(","))
            }
            LinkSpec::UnboundedTail { eps, a, c, n } => format!("tail:{eps},{a},{c},{n}"),
        }
    }

    /// The standard catalog used by tests and sweeps. `n` sizes the spike of
    /// the unbounded member.
    pub fn catalog(n: usize) -> Vec<LinkSpec> {
        vec![
            LinkSpec::Identity,
            LinkSpec::Affine {
                slope: 2.0,
                intercept: -1.0,
            },
            LinkSpec::Cube,
            LinkSpec::Step(
                MonotoneStepFn::new(vec![0.25, 0.5, 0.75, 1.0], vec![-1.0, 0.0, 0.5, 2.0])
                    .expect("static step link"),
            ),
            LinkSpec::UnboundedTail {
                eps: 0.1,
                a: 1.0,
                c: 0.5,
                n: n.max(2),
            },
        ]
    }
}

impl Monotone for LinkSpec {
    fn value(&self, x: f64) -> f64 {
        self.eval_unchecked(x.clamp(0.0, 1.0))
    }
}

impl fmt::Display for LinkSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.name())
    }
}

impl FromStr for LinkSpec {
    type Err = Error;

    /// Parses `identity`, `cube`, `affine:SLOPE,INTERCEPT`,
    /// `step:KNOT/VALUE,...` and `tail:EPS,A,C,N`.
    fn from_str(s: &str) -> Result<Self> {
        let bad = || Error::InvalidParameter(format!("unrecognised link {s:?}"));
        let nums = |rest: &str| -> Result<Vec<f64>> {
            rest.split(',')
                .map(|p| p.trim().parse::<f64>().map_err(|_| bad()))
                .collect()
        };
        let (head, rest) = s.split_once(':').unwrap_or((s, ""));
        let link = match head {
            "identity" => LinkSpec::Identity,
            "cube" => LinkSpec::Cube,
            "affine" => match nums(rest)?[..] {
                [slope, intercept] => LinkSpec::Affine { slope, intercept },
                _ => return Err(bad()),
            },
            "tail" => match nums(rest)?[..] {
                [eps, a, c, n] if n >= 1.0 && n.fract() == 0.0 => LinkSpec::UnboundedTail {
                    eps,
                    a,
                    c,
                    n: n as usize,
                },
                _ => return Err(bad()),
            },
            "step" => {
                let mut knots = Vec::new();
                let mut values = Vec::new();
                for pair in rest.split(',') {
                    let (k, v) = pair.split_once('/').ok_or_else(bad)?;
                    knots.push(k.trim().parse().map_err(|_| bad())?);
                    values.push(v.trim().parse().map_err(|_| bad())?);
                }
                LinkSpec::Step(MonotoneStepFn::new(knots, values)?)
            }
            _ => return Err(bad()),
        };
        link.validate()?;
        Ok(link)
    }
}

/// Law of the covariate on `[0, 1]`, sampled by inverse CDF.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub enum CovariateLaw {
    #[default]
    Uniform,
    /// Density `1 + tilt (x - 1/2)` with `|tilt| < 2`.
    Linear { tilt: f64 },
}

impl CovariateLaw {
    pub fn validate(&self) -> Result<()> {
        match self {
            CovariateLaw::Uniform => Ok(()),
            CovariateLaw::Linear { tilt } if tilt.abs() < 2.0 => Ok(()),
            CovariateLaw::Linear { tilt } => Err(Error::InvalidParameter(format!(
                "density tilt {tilt} must satisfy |tilt| < 2"
            ))),
        }
    }

    pub fn density(&self, x: f64) -> f64 {
        if !(0.0..=1.0).contains(&x) {
            return 0.0;
        }
        match self {
            CovariateLaw::Uniform => 1.0,
            CovariateLaw::Linear { tilt } => 1.0 + tilt * (x - 0.5),
        }
    }

    pub fn cdf(&self, x: f64) -> f64 {
        let x = x.clamp(0.0, 1.0);
        match self {
            CovariateLaw::Uniform => x,
            CovariateLaw::Linear { tilt } => x + 0.5 * tilt * (x * x - x),
        }
    }

    pub fn inverse_cdf(&self, u: f64) -> f64 {
        match self {
            CovariateLaw::Uniform => u,
            CovariateLaw::Linear { tilt } => {
                // root of (tilt/2) x^2 + (1 - tilt/2) x - u in the
                // cancellation-free form
                let b = 1.0 - 0.5 * tilt;
                (2.0 * u / (b + (b * b + 2.0 * tilt * u).sqrt())).clamp(0.0, 1.0)
            }
        }
    }

    /// Lower and upper density bounds `(c_X, C_X)`.
    pub fn density_bounds(&self) -> (f64, f64) {
        match self {
            CovariateLaw::Uniform => (1.0, 1.0),
            CovariateLaw::Linear { tilt } => (1.0 - tilt.abs() / 2.0, 1.0 + tilt.abs() / 2.0),
        }
    }

    pub fn sample_n<R: Rng + ?Sized>(&self, rng: &mut R, n: usize) -> Vec<f64> {
        (0..n).map(|_| self.inverse_cdf(rng.random::<f64>())).collect()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Mode {
    Shuffled,
    Unlinked,
    Deconv,
}

impl Mode {
    pub fn as_str(&self) -> &'static str {
        match self {
            Mode::Shuffled => "shuffled",
            Mode::Unlinked => "unlinked",
            Mode::Deconv => "deconv",
        }
    }
}

impl fmt::Display for Mode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Mode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "shuffled" => Ok(Mode::Shuffled),
            "unlinked" => Ok(Mode::Unlinked),
            "deconv" => Ok(Mode::Deconv),
            _ => Err(Error::InvalidParameter(format!("unknown mode {s:?}"))),
        }
    }
}

/// Everything that determines a dataset except the seed.
#[derive(Debug, Clone, PartialEq)]
pub struct DatasetSpec {
    pub mode: Mode,
    pub n: usize,
    pub link: LinkSpec,
    pub noise: NoiseSpec,
    pub sigma: f64,
    pub covariate: CovariateLaw,
}

impl DatasetSpec {
    pub fn new(mode: Mode, n: usize, link: LinkSpec, sigma: f64) -> Self {
        Self {
            mode,
            n,
            link,
            noise: NoiseSpec::gaussian(),
            sigma,
            covariate: CovariateLaw::Uniform,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    pub mode: Mode,
    /// Sorted covariates; `None` in deconvolution mode.
    pub x_ordered: Option<Vec<f64>>,
    pub y: Vec<f64>,
    pub sigma: f64,
    pub seed: u64,
    pub truth: LinkSpec,
    pub covariate: CovariateLaw,
    /// Standardized noise draws. In shuffled mode `deltas[i]` belongs to the
    /// unit at `x_ordered[i]`; otherwise it is in generation order. Ground
    /// truth for simulation checks, never serialized.
    pub deltas: Vec<f64>,
}

impl Dataset {
    pub fn n(&self) -> usize {
        self.y.len()
    }
}

/// Draws one dataset. Bit-reproducible in `(spec, seed)`.
pub fn sample_dataset(spec: &DatasetSpec, seed: u64) -> Result<Dataset> {
    if spec.n == 0 {
        return Err(Error::EmptySample);
    }
    if !(spec.sigma >= 0.0 && spec.sigma.is_finite()) {
        return Err(Error::InvalidParameter(format!(
            "noise level {} must be finite and nonnegative",
            spec.sigma
        )));
    }
    spec.link.validate()?;
    spec.covariate.validate()?;
    let n = spec.n;
    let link = &spec.link;
    let mut noise_rng = stream_rng(seed, Stream::Noise);
    let deltas: Vec<f64> = (0..n).map(|_| spec.noise.sample(&mut noise_rng)).collect();

    let (x_ordered, y) = match spec.mode {
        Mode::Shuffled => {
            let mut x = spec
                .covariate
                .sample_n(&mut stream_rng(seed, Stream::Covariate), n);
            let mut order: Vec<usize> = (0..n).collect();
            order.sort_by(|&i, &j| x[i].total_cmp(&x[j]));
            let deltas_sorted: Vec<f64> = order.iter().map(|&i| deltas[i]).collect();
            x.sort_by(f64::total_cmp);
            let mut y: Vec<f64> = x
                .iter()
                .zip(&deltas_sorted)
                .map(|(&xi, &d)| link.value(xi) + spec.sigma * d)
                .collect();
            y.shuffle(&mut stream_rng(seed, Stream::Permutation));
            return Ok(Dataset {
                mode: spec.mode,
                x_ordered: Some(x),
                y,
                sigma: spec.sigma,
                seed,
                truth: link.clone(),
                covariate: spec.covariate,
                deltas: deltas_sorted,
            });
        }
        Mode::Unlinked => {
            let mut x = spec
                .covariate
                .sample_n(&mut stream_rng(seed, Stream::Covariate), n);
            x.sort_by(f64::total_cmp);
            (Some(x), responses(spec, seed, &deltas))
        }
        Mode::Deconv => (None, responses(spec, seed, &deltas)),
    };
    Ok(Dataset {
        mode: spec.mode,
        x_ordered,
        y,
        sigma: spec.sigma,
        seed,
        truth: link.clone(),
        covariate: spec.covariate,
        deltas,
    })
}

/// `m0(X') + sigma * delta` for covariates `X'` drawn from the response
/// stream, independent of the covariate stream.
fn responses(spec: &DatasetSpec, seed: u64, deltas: &[f64]) -> Vec<f64> {
    let xs = spec
        .covariate
        .sample_n(&mut stream_rng(seed, Stream::Response), spec.n);
    xs.iter()
        .zip(deltas)
        .map(|(&x, &d)| spec.link.value(x) + spec.sigma * d)
        .collect()
}
