//! Deconvolution estimate of the signal CDF from `Y = Z + sigma * delta`.
//!
//! The density estimate is the usual Fourier-inversion kernel estimator
//!
//! ```text
//! f(x) = 1/(2 pi) int exp(-i t x) K*(h t) phi_Y(t) / phi_delta(sigma t) dt
//! ```
//!
//! with `phi_Y` the empirical characteristic function and `K*(t) = (1 - t^2)^3`
//! on `[-1, 1]`. Because `K*` vanishes outside `[-1, 1]` the frequency integral
//! is exactly truncated at `|t| <= 1/h`. The integral over the frequency grid
//! is evaluated at every spatial grid point at once with a chirp-z transform,
//! and the CDF is the cumulative trapezoid of the density followed by a
//! monotone projection.

use std::f64::consts::PI;

use rustfft::num_complex::Complex64;
use rustfft::FftPlanner;

use crate::dist1d::{EmpiricalMeasure, TabulatedDistribution};
use crate::synth::NoiseSpec;
use crate::{Error, Result};

/// Free constants of the bandwidth rule.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BandwidthRule {
    pub c_const: f64,
    pub eta: f64,
}

impl BandwidthRule {
    pub fn new(c_const: f64, eta: f64) -> Result<Self> {
        let rule = Self { c_const, eta };
        rule.validate()?;
        Ok(rule)
    }

    pub fn validate(&self) -> Result<()> {
        let (c, eta) = (self.c_const, self.eta);
        if !(c > 0.0 && c < 0.5) {
            return Err(Error::InvalidParameter(format!(
                "bandwidth constant {c} must lie in (0, 1/2)"
            )));
        }
        if !(eta > c / (1.0 - 2.0 * c)) {
            return Err(Error::InvalidParameter(format!(
                "eta {eta} must exceed C/(1-2C) = {}",
                c / (1.0 - 2.0 * c)
            )));
        }
        Ok(())
    }
}

impl Default for BandwidthRule {
    fn default() -> Self {
        Self {
            c_const: 0.1,
            eta: 0.2,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Bandwidth {
    pub h: f64,
    /// `sigma >= n^{-1/2}`: the logarithmic rule was used.
    pub large_noise: bool,
    /// The logarithmic rule was requested but its inner logarithm was not
    /// positive, so `n^{-1/2}` was used instead.
    pub fell_back: bool,
}

/// Bandwidth for `n` observations at noise level `sigma`.
///
/// For `sigma >= n^{-1/2}`: `h = sigma (C gamma2 log(n sigma^2 log n))^{-1/beta}`,
/// otherwise `h = n^{-1/2}`. The result is capped at 1.
pub fn select_bandwidth(
    n: usize,
    sigma: f64,
    noise: &NoiseSpec,
    rule: &BandwidthRule,
) -> Result<Bandwidth> {
    if n < 2 {
        return Err(Error::InvalidParameter(format!(
            "bandwidth needs at least two observations, got {n}"
        )));
    }
    if !(sigma >= 0.0 && sigma.is_finite()) {
        return Err(Error::InvalidParameter(format!("noise level {sigma}")));
    }
    rule.validate()?;
    let nf = n as f64;
    let root = nf.sqrt().recip();
    let mut out = Bandwidth {
        h: root,
        large_noise: false,
        fell_back: false,
    };
    if sigma >= root {
        out.large_noise = true;
        let log_inner = (nf * sigma * sigma * nf.ln()).ln();
        if log_inner > 0.0 {
            out.h = sigma * (rule.c_const * noise.gamma2 * log_inner).powf(-1.0 / noise.beta);
        } else {
            out.fell_back = true;
        }
    }
    out.h = out.h.min(1.0);
    Ok(out)
}

/// Which branch of the upper rate `v_n` applies.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RateRegime {
    /// `sigma >= n^{-1/2} (log n)^eta`
    LargeNoise,
    /// `n^{-1/2} < sigma < n^{-1/2} (log n)^eta`
    Intermediate,
    /// `sigma <= n^{-1/2}`
    RootN,
}

pub fn rate_regime(n: usize, sigma: f64, eta: f64) -> RateRegime {
    let nf = n as f64;
    let root = nf.sqrt().recip();
    if sigma <= root {
        RateRegime::RootN
    } else if sigma >= root * nf.ln().powf(eta) {
        RateRegime::LargeNoise
    } else {
        RateRegime::Intermediate
    }
}

/// The upper rate `v_n` of the deconvolution risk.
pub fn rate_bound(n: usize, sigma: f64, beta: f64, eta: f64) -> f64 {
    let nf = n as f64;
    let ln = nf.ln();
    match rate_regime(n, sigma, eta) {
        RateRegime::LargeNoise => sigma * (nf * sigma * sigma * ln).ln().powf(-1.0 / beta),
        RateRegime::Intermediate => nf.sqrt().recip() * ln.ln().powf(-1.0 / beta) * ln.powf(eta),
        RateRegime::RootN => nf.sqrt().recip(),
    }
}

/// Uniform spatial grid for the estimated CDF.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GridSpec {
    pub lo: f64,
    pub hi: f64,
    pub points: usize,
}

pub const DEFAULT_GRID_POINTS: usize = 1 << 14;
pub const DEFAULT_FREQ_POINTS: usize = 1 << 12;

impl GridSpec {
    pub fn new(lo: f64, hi: f64, points: usize) -> Result<Self> {
        let grid = Self { lo, hi, points };
        grid.validate()?;
        Ok(grid)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.lo.is_finite() && self.hi.is_finite() && self.lo < self.hi)
            || self.points < 2
            || !self.points.is_power_of_two()
        {
            return Err(Error::DegenerateGrid {
                lo: self.lo,
                hi: self.hi,
                points: self.points,
            });
        }
        Ok(())
    }

    /// The data range padded by `6 (1 + sigma)` on both sides.
    pub fn covering(ys: &EmpiricalMeasure, sigma: f64, points: usize) -> Result<Self> {
        let pad = padding(sigma);
        let atoms = ys.atoms();
        Self::new(atoms[0] - pad, atoms[atoms.len() - 1] + pad, points)
    }

    pub fn step(&self) -> f64 {
        (self.hi - self.lo) / (self.points - 1) as f64
    }
}

fn padding(sigma: f64) -> f64 {
    6.0 * (1.0 + sigma)
}

/// Fourier transform of the smoothing kernel.
pub fn kernel_ft(t: f64) -> f64 {
    if t.abs() >= 1.0 {
        0.0
    } else {
        let s = 1.0 - t * t;
        s * s * s
    }
}

/// Largest value of `1 / phi_delta(sigma t)` over `|t| <= 1/h`.
pub fn max_amplification(noise: &NoiseSpec, sigma: f64, h: f64) -> f64 {
    1.0 / noise.charfn(sigma / h)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DeconvSettings {
    /// Trapezoid nodes on `[-1/h, 1/h]`; must be even.
    pub freq_points: usize,
}

impl Default for DeconvSettings {
    fn default() -> Self {
        Self {
            freq_points: DEFAULT_FREQ_POINTS,
        }
    }
}

/// Estimated CDF of the signal `Z` on `grid`.
pub fn deconvolve_cdf(
    ys: &EmpiricalMeasure,
    noise: &NoiseSpec,
    sigma: f64,
    h: f64,
    grid: &GridSpec,
) -> Result<TabulatedDistribution> {
    deconvolve_cdf_with(ys, noise, sigma, h, grid, &DeconvSettings::default())
}

pub fn deconvolve_cdf_with(
    ys: &EmpiricalMeasure,
    noise: &NoiseSpec,
    sigma: f64,
    h: f64,
    grid: &GridSpec,
    settings: &DeconvSettings,
) -> Result<TabulatedDistribution> {
    let density = deconvolved_density(ys, noise, sigma, h, grid, settings)?;
    let dx = grid.step();
    let mut raw = Vec::with_capacity(density.len());
    let mut acc = 0.0;
    raw.push(0.0);
    for w in density.windows(2) {
        acc += 0.5 * dx * (w[0] + w[1]);
        raw.push(acc);
    }
    TabulatedDistribution::new(grid.lo, grid.hi, isotonize_cdf(&raw))
}

/// Density estimate on the grid, before integration and projection. The
/// values may be negative in places.
pub fn deconvolved_density(
    ys: &EmpiricalMeasure,
    noise: &NoiseSpec,
    sigma: f64,
    h: f64,
    grid: &GridSpec,
    settings: &DeconvSettings,
) -> Result<Vec<f64>> {
    grid.validate()?;
    if !(h > 0.0 && h <= 1.0) {
        return Err(Error::InvalidParameter(format!("bandwidth {h} outside (0, 1]")));
    }
    if !(sigma >= 0.0 && sigma.is_finite()) {
        return Err(Error::InvalidParameter(format!("noise level {sigma}")));
    }
    let nt = settings.freq_points;
    if nt < 4 || !nt.is_multiple_of(2) {
        return Err(Error::InvalidParameter(format!(
            "frequency grid needs an even number of nodes, got {nt}"
        )));
    }
    let atoms = ys.atoms();
    let pad = padding(sigma);
    let (need_lo, need_hi) = (atoms[0] - pad, atoms[atoms.len() - 1] + pad);
    let tol = 1e-9 * (1.0 + pad);
    if grid.lo > need_lo + tol || grid.hi < need_hi - tol {
        return Err(Error::GridTooNarrow {
            lo: grid.lo,
            hi: grid.hi,
            need_lo,
            need_hi,
        });
    }
    let amp = max_amplification(noise, sigma, h);
    if !amp.is_finite() {
        return Err(Error::InvalidParameter(format!(
            "noise inversion overflows at sigma/h = {}",
            sigma / h
        )));
    }

    // Symmetric frequency nodes t_j = (j - (nt-1)/2) dt, spanning [-1/h, 1/h].
    let tmax = 1.0 / h;
    let dt = 2.0 * tmax / (nt - 1) as f64;
    let t_at = |j: usize| (j as f64 - 0.5 * (nt - 1) as f64) * dt;

    let ecf = empirical_charfn(atoms, nt, dt);
    let weights: Vec<Complex64> = (0..nt)
        .map(|j| {
            let t = t_at(j);
            let trap = if j == 0 || j + 1 == nt { 0.5 } else { 1.0 };
            ecf[j] * (trap * dt * kernel_ft(h * t) / noise.charfn(sigma * t))
        })
        .collect();

    let values = chirp_sum(&weights, t_at(0), dt, grid.lo, grid.step(), grid.points);
    Ok(values.into_iter().map(|v| v.re / (2.0 * PI)).collect())
}

/// `(1/n) sum_k exp(i t_j y_k)` on the symmetric frequency grid. Only the
/// nonnegative half is computed; the other half is its conjugate.
fn empirical_charfn(ys: &[f64], nt: usize, dt: f64) -> Vec<Complex64> {
    const RESEED: usize = 512;
    let half = nt / 2;
    let mut upper = vec![Complex64::new(0.0, 0.0); half];
    for &y in ys {
        let step = Complex64::from_polar(1.0, dt * y);
        for start in (0..half).step_by(RESEED) {
            // t for upper[m] is (m + 1/2) dt
            let mut z = Complex64::from_polar(1.0, (start as f64 + 0.5) * dt * y);
            for acc in &mut upper[start..(start + RESEED).min(half)] {
                *acc += z;
                z *= step;
            }
        }
    }
    let inv_n = 1.0 / ys.len() as f64;
    let mut out = vec![Complex64::new(0.0, 0.0); nt];
    for (m, v) in upper.into_iter().enumerate() {
        let v = v * inv_n;
        out[half + m] = v;
        out[half - 1 - m] = v.conj();
    }
    out
}

/// `out_k = sum_j w_j exp(-i (t0 + j dt)(x0 + k dx))` for `k < nx`, through
/// the chirp-z identity `jk = (j^2 + k^2 - (k - j)^2) / 2`.
fn chirp_sum(w: &[Complex64], t0: f64, dt: f64, x0: f64, dx: f64, nx: usize) -> Vec<Complex64> {
    let nt = w.len();
    let len = (nt + nx - 1).next_power_of_two();
    let theta = dt * dx;
    let chirp = |m: i64| {
        let m = m as f64;
        Complex64::from_polar(1.0, 0.5 * theta * m * m)
    };

    let mut a = vec![Complex64::new(0.0, 0.0); len];
    for (j, (slot, &wj)) in a.iter_mut().zip(w).enumerate() {
        let jf = j as f64;
        *slot = wj * Complex64::from_polar(1.0, -(jf * dt * x0) - 0.5 * theta * jf * jf);
    }
    let mut b = vec![Complex64::new(0.0, 0.0); len];
    for m in 0..nx as i64 {
        b[m as usize] = chirp(m);
    }
    for m in 1..nt as i64 {
        b[len - m as usize] = chirp(-m);
    }

    let mut planner = FftPlanner::<f64>::new();
    let forward = planner.plan_fft_forward(len);
    let inverse = planner.plan_fft_inverse(len);
    forward.process(&mut a);
    forward.process(&mut b);
    for (p, q) in a.iter_mut().zip(&b) {
        *p *= q;
    }
    inverse.process(&mut a);

    let scale = 1.0 / len as f64;
    (0..nx)
        .map(|k| {
            let kf = k as f64;
            let x = x0 + kf * dx;
            a[k] * scale * Complex64::from_polar(1.0, -(t0 * x) - 0.5 * theta * kf * kf)
        })
        .collect()
}

/// Running maximum followed by clipping to `[0, 1]`.
pub fn isotonize_cdf(raw: &[f64]) -> Vec<f64> {
    let mut running = f64::NEG_INFINITY;
    raw.iter()
        .map(|&v| {
            running = running.max(v);
            running.clamp(0.0, 1.0)
        })
        .collect()
}
