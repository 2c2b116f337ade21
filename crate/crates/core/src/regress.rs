//! Minimum-contrast estimators of a nondecreasing link.
//!
//! Both estimators pick values at the covariate order statistics that bring
//! the induced empirical measure close to a target measure, project the
//! values onto the moment ball, and extend them to a left-continuous step
//! function on `[0, 1]`.
//!
//! * Shuffled data: the target is the empirical law of `Y` under `W2`. Sorted
//!   matching attains the infimum exactly.
//! * Unlinked data: the target is the deconvolved law of `m0(X)` under `W1`;
//!   each order statistic receives the mid-level quantile of its mass cell.

use crate::deconv::{
    deconvolve_cdf_with, select_bandwidth, Bandwidth, BandwidthRule, DeconvSettings, GridSpec,
    DEFAULT_GRID_POINTS,
};
use crate::dist1d::{w1_tabulated_empirical, w2_empirical, EmpiricalMeasure, MonotoneStepFn, TabulatedDistribution};
use crate::synth::NoiseSpec;
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum EtaMode {
    /// slack `sigma^2`
    Shuffled,
    /// slack `n^{-1/2}`
    Unlinked,
}

impl EtaMode {
    pub fn slack(&self, n: usize, sigma: f64) -> f64 {
        match self {
            EtaMode::Shuffled => sigma * sigma,
            EtaMode::Unlinked => (n as f64).sqrt().recip(),
        }
    }
}

/// Parameters of the moment class: links with `int |m|^{a+2} dmu_X <= M`.
/// `c_x` is the known lower bound on the covariate density.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FitConfig {
    pub moment_bound: f64,
    pub a: f64,
    pub c_x: f64,
}

impl Default for FitConfig {
    fn default() -> Self {
        Self {
            moment_bound: 20.0,
            a: 1.0,
            c_x: 1.0,
        }
    }
}

impl FitConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.moment_bound > 0.0 && self.a > 0.0 && self.c_x > 0.0) {
            return Err(Error::InvalidParameter(format!(
                "moment class needs M, a, c_X > 0, got {self:?}"
            )));
        }
        Ok(())
    }

    /// Bound on the empirical `(a+2)`-moment of fitted values.
    pub fn empirical_budget(&self) -> f64 {
        self.moment_bound / self.c_x
    }

    pub fn power(&self) -> f64 {
        self.a + 2.0
    }
}

/// A fitted link together with the metadata written next to it.
#[derive(Debug, Clone, PartialEq)]
pub struct Fit {
    pub link: MonotoneStepFn,
    pub n: usize,
    pub sigma: f64,
    pub eta: f64,
    /// The moment projection changed the values.
    pub projected: bool,
}

impl Fit {
    /// Fitted values at the order statistics.
    pub fn values(&self) -> &[f64] {
        self.link.values()
    }
}

/// Shuffled-data estimator: `sorted(y)` assigned to `x_ordered` in order.
pub fn fit_shuffled(x_ordered: &[f64], y: &[f64], sigma: f64, cfg: &FitConfig) -> Result<Fit> {
    if x_ordered.len() != y.len() {
        return Err(Error::SizeMismatch {
            left: x_ordered.len(),
            right: y.len(),
        });
    }
    if y.is_empty() {
        return Err(Error::EmptySample);
    }
    cfg.validate()?;
    let sorted = EmpiricalMeasure::new(y.to_vec())?.into_atoms();
    let (values, projected) = project_moment(&sorted, cfg.empirical_budget(), cfg.power());
    Ok(Fit {
        link: extend_piecewise(x_ordered, &values)?,
        n: y.len(),
        sigma,
        eta: EtaMode::Shuffled.slack(y.len(), sigma),
        projected,
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct UnlinkedFit {
    pub fit: Fit,
    /// Deconvolved law of `m0(X)`.
    pub signal: TabulatedDistribution,
    pub bandwidth: Bandwidth,
}

/// Unlinked-data estimator.
pub fn fit_unlinked(
    x: &[f64],
    y: &[f64],
    noise: &NoiseSpec,
    sigma: f64,
    cfg: &FitConfig,
    grid: &GridSpec,
) -> Result<UnlinkedFit> {
    fit_unlinked_with(
        x,
        y,
        noise,
        sigma,
        cfg,
        grid,
        &BandwidthRule::default(),
        &DeconvSettings::default(),
    )
}

#[allow(clippy::too_many_arguments)]
pub fn fit_unlinked_with(
    x: &[f64],
    y: &[f64],
    noise: &NoiseSpec,
    sigma: f64,
    cfg: &FitConfig,
    grid: &GridSpec,
    rule: &BandwidthRule,
    settings: &DeconvSettings,
) -> Result<UnlinkedFit> {
    if x.len() != y.len() {
        return Err(Error::SizeMismatch {
            left: x.len(),
            right: y.len(),
        });
    }
    cfg.validate()?;
    if let Some(&bad) = x.iter().find(|v| !(0.0..=1.0).contains(*v)) {
        return Err(Error::OutOfUnitInterval { value: bad });
    }
    let xs = EmpiricalMeasure::new(x.to_vec())?;
    let ys = EmpiricalMeasure::new(y.to_vec())?;
    let n = ys.len();
    let bandwidth = select_bandwidth(n, sigma, noise, rule)?;
    let signal = deconvolve_cdf_with(&ys, noise, sigma, bandwidth.h, grid, settings)?;
    let raw = mid_cell_quantiles(&signal, n)?;
    let (values, projected) = project_moment(&raw, cfg.empirical_budget(), cfg.power());
    Ok(UnlinkedFit {
        fit: Fit {
            link: extend_piecewise(xs.atoms(), &values)?,
            n,
            sigma,
            eta: EtaMode::Unlinked.slack(n, sigma),
            projected,
        },
        signal,
        bandwidth,
    })
}

/// [`fit_unlinked`] on the default grid covering the responses.
pub fn fit_unlinked_auto(
    x: &[f64],
    y: &[f64],
    noise: &NoiseSpec,
    sigma: f64,
    cfg: &FitConfig,
) -> Result<UnlinkedFit> {
    let grid = GridSpec::covering(&EmpiricalMeasure::new(y.to_vec())?, sigma, DEFAULT_GRID_POINTS)?;
    fit_unlinked(x, y, noise, sigma, cfg, &grid)
}

/// Quantiles at levels `(2i - 1) / (2n)`, `i = 1..n`.
pub fn mid_cell_quantiles(dist: &TabulatedDistribution, n: usize) -> Result<Vec<f64>> {
    (1..=n)
        .map(|i| dist.quantile((2 * i - 1) as f64 / (2 * n) as f64))
        .collect()
}

/// Symmetric winsorization onto `{ v : (1/n) sum |v_i|^p <= bound }`.
///
/// Returns the (possibly clipped) values and whether clipping happened. The
/// threshold is found by bisection; clipping preserves the order.
pub fn project_moment(values: &[f64], bound: f64, p: f64) -> (Vec<f64>, bool) {
    let n = values.len() as f64;
    let moment = |tau: f64| {
        values
            .iter()
            .map(|v| v.abs().min(tau).powf(p))
            .sum::<f64>()
            / n
    };
    let top = values.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    if moment(top) <= bound {
        return (values.to_vec(), false);
    }
    if bound <= 0.0 {
        return (vec![0.0; values.len()], true);
    }
    let (mut lo, mut hi) = (0.0, top);
    for _ in 0..2000 {
        let mid = 0.5 * (lo + hi);
        if moment(mid) <= bound {
            lo = mid;
        } else {
            hi = mid;
        }
        if hi - lo <= 1e-15 * hi {
            break;
        }
    }
    let tau = lo;
    (values.iter().map(|v| v.clamp(-tau, tau)).collect(), true)
}

/// Step function equal to `values[i]` on `(x_(i-1), x_(i)]`, to `values[0]`
/// on `[0, x_(1)]` and to `values[n-1]` on `(x_(n), 1]`.
pub fn extend_piecewise(x_ordered: &[f64], values: &[f64]) -> Result<MonotoneStepFn> {
    MonotoneStepFn::new(x_ordered.to_vec(), values.to_vec())
}

/// `W2` between the response sample and the fitted values.
pub fn shuffled_contrast(y: &[f64], values: &[f64]) -> Result<f64> {
    w2_empirical(
        &EmpiricalMeasure::new(y.to_vec())?,
        &EmpiricalMeasure::new(values.to_vec())?,
    )
}

/// `W1` between the deconvolved signal law and the fitted values.
pub fn unlinked_contrast(signal: &TabulatedDistribution, values: &[f64]) -> Result<f64> {
    Ok(w1_tabulated_empirical(
        signal,
        &EmpiricalMeasure::new(values.to_vec())?,
    ))
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn shuffled_noiseless_recovers_values() {
        let x = vec![0.1, 0.3, 0.35, 0.8];
        let truth: Vec<f64> = x.iter().map(|v: &f64| v.powi(3)).collect();
        let y = vec![truth[2], truth[0], truth[3], truth[1]];
        let fit = fit_shuffled(&x, &y, 0.0, &FitConfig::default()).unwrap();
        assert_eq!(fit.values(), &truth[..]);
        assert!(!fit.projected);
        assert_eq!(fit.eta, 0.0);
        assert!(fit_shuffled(&x, &y[..3], 0.0, &FitConfig::default()).is_err());
    }

    fn permutations(n: usize) -> Vec<Vec<usize>> {
        if n == 0 {
            return vec![vec![]];
        }
        let mut out = Vec::new();
        for p in permutations(n - 1) {
            for pos in 0..=p.len() {
                let mut q = p.clone();
                q.insert(pos, n - 1);
                out.push(q);
            }
        }
        out
    }

    proptest! {
        #[test]
        fn sorted_assignment_is_optimal(
            (y, mut cand) in (1usize..=6).prop_flat_map(|n| (
                prop::collection::vec(-3.0f64..3.0, n),
                prop::collection::vec(-3.0f64..3.0, n),
            )),
        ) {
            let n = y.len();
            cand.sort_by(f64::total_cmp);
            let x: Vec<f64> = (1..=n).map(|i| i as f64 / (n + 1) as f64).collect();
            let cfg = FitConfig { moment_bound: 1e6, ..FitConfig::default() };
            let fit = fit_shuffled(&x, &y, 0.1, &cfg).unwrap();
            let cost = |v: &[f64], p: &[usize]| (0..n).map(|i| (v[i] - y[p[i]]).powi(2)).sum::<f64>();
            let perms = permutations(n);
            let brute = |v: &[f64]| perms.iter().map(|p| cost(v, p)).fold(f64::INFINITY, f64::min);
            let mut order: Vec<usize> = (0..n).collect();
            order.sort_by(|&i, &j| y[i].total_cmp(&y[j]));
            // sorted matching attains the brute-force minimum for any
            // monotone candidate, and the fit is the global minimizer
            prop_assert!((cost(&cand, &order) - brute(&cand)).abs() < 1e-12);
            prop_assert!(brute(fit.values()) <= 1e-24);
            prop_assert!(brute(fit.values()) <= brute(&cand));
        }

        #[test]
        fn permutation_invariance(
            y in prop::collection::vec(-3.0f64..3.0, 2..40),
            seed in any::<u64>(),
        ) {
            use rand::seq::SliceRandom;
            use rand::SeedableRng;
            let n = y.len();
            let x: Vec<f64> = (1..=n).map(|i| i as f64 / (n + 1) as f64).collect();
            let mut shuffled = y.clone();
            shuffled.shuffle(&mut rand_chacha::ChaCha8Rng::seed_from_u64(seed));
            let cfg = FitConfig::default();
            prop_assert_eq!(
                fit_shuffled(&x, &y, 0.2, &cfg).unwrap(),
                fit_shuffled(&x, &shuffled, 0.2, &cfg).unwrap()
            );
        }

        #[test]
        fn projection_meets_bound(
            mut v in prop::collection::vec(-50.0f64..50.0, 1..60),
            bound in 0.0f64..100.0,
            p in 0.5f64..4.0,
        ) {
            v.sort_by(f64::total_cmp);
            let (out, active) = project_moment(&v, bound, p);
            prop_assert!(out.windows(2).all(|w| w[0] <= w[1]));
            let m = out.iter().map(|x| x.abs().powf(p)).sum::<f64>() / out.len() as f64;
            prop_assert!(m <= bound * (1.0 + 1e-12) + 1e-300);
            if active && bound > 0.0 {
                prop_assert!((m - bound).abs() <= 1e-12 * bound);
            }
            if !active {
                prop_assert_eq!(out, v);
            }
        }
    }

    #[test]
    fn projection_examples() {
        let (v, active) = project_moment(&[0.5, 1.0], 10.0, 2.0);
        assert_eq!(v, vec![0.5, 1.0]);
        assert!(!active);
        let (v, active) = project_moment(&[10.0; 5], 1.0, 2.0);
        assert!(active);
        // tau = bound^{1/p}
        for x in v {
            assert!((x - 1.0).abs() < 1e-12);
        }
        assert_eq!(project_moment(&[0.0; 3], 1.0, 3.0), (vec![0.0; 3], false));
        assert_eq!(project_moment(&[-1.0, 2.0], 0.0, 3.0), (vec![0.0; 2], true));
    }

    #[test]
    fn piecewise_extension_intervals() {
        let x = [0.2, 0.5, 0.7];
        let m = extend_piecewise(&x, &[1.0, 2.0, 3.0]).unwrap();
        assert_eq!(m.eval(0.0), 1.0);
        assert_eq!(m.eval(0.1), 1.0);
        assert_eq!(m.eval(0.2), 1.0);
        assert_eq!(m.eval(0.3), 2.0);
        assert_eq!(m.eval(0.5), 2.0);
        assert_eq!(m.eval(0.6), 3.0);
        assert_eq!(m.eval(0.9), 3.0);
        assert!(matches!(
            extend_piecewise(&[0.2, 0.2], &[1.0, 2.0]),
            Err(Error::DuplicateKnot(_))
        ));
    }

    #[test]
    fn unlinked_output_is_monotone_and_in_class() {
        use crate::synth::{sample_dataset, DatasetSpec, LinkSpec, Mode};
        let ds = sample_dataset(&DatasetSpec::new(Mode::Unlinked, 500, LinkSpec::Cube, 0.2), 3)
            .unwrap();
        let cfg = FitConfig::default();
        let fit = fit_unlinked_auto(
            ds.x_ordered.as_ref().unwrap(),
            &ds.y,
            &NoiseSpec::gaussian(),
            0.2,
            &cfg,
        )
        .unwrap();
        let v = fit.fit.values();
        assert!(v.windows(2).all(|w| w[0] <= w[1]));
        let m = v.iter().map(|x| x.abs().powf(cfg.power())).sum::<f64>() / v.len() as f64;
        assert!(m <= cfg.empirical_budget());
        assert!(fit.bandwidth.large_noise);
        assert_eq!(fit.fit.eta, 500f64.sqrt().recip());
    }

    #[test]
    fn unlinked_rejects_bad_input() {
        let g = NoiseSpec::gaussian();
        let cfg = FitConfig::default();
        assert!(fit_unlinked_auto(&[0.1, 0.2], &[0.0], &g, 0.1, &cfg).is_err());
        assert!(fit_unlinked_auto(&[0.1, 1.2], &[0.0, 0.3], &g, 0.1, &cfg).is_err());
    }
}
