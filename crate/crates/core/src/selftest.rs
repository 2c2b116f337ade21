//! Reduced-scale invariant checks behind the `selftest` subcommand.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::deconv::{deconvolve_cdf, select_bandwidth, BandwidthRule, GridSpec};
use crate::dist1d::{w1_cdf_area, w1_empirical, w2_empirical, EmpiricalMeasure};
use crate::experiments::{conjecture_product, multinomial_counts, replication_rng, risk_empirical};
use crate::regress::{fit_shuffled, FitConfig};
use crate::synth::{sample_dataset, DatasetSpec, LinkSpec, Mode, NoiseSpec};
use crate::Result;

#[derive(Debug, Clone, PartialEq)]
pub struct Check {
    pub name: &'static str,
    pub passed: bool,
    pub detail: String,
}

fn check(name: &'static str, outcome: Result<(bool, String)>) -> Check {
    match outcome {
        Ok((passed, detail)) => Check { name, passed, detail },
        Err(e) => Check {
            name,
            passed: false,
            detail: format!("error: {e}"),
        },
    }
}

fn random_measure(rng: &mut ChaCha8Rng, len: usize) -> Result<EmpiricalMeasure> {
    EmpiricalMeasure::new((0..len).map(|_| rng.random_range(-3.0..3.0)).collect())
}

fn w1_duality() -> Result<(bool, String)> {
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    let mut worst = 0.0f64;
    let mut ordered = true;
    for _ in 0..200 {
        let n = rng.random_range(1..40);
        let a = random_measure(&mut rng, n)?;
        let b = random_measure(&mut rng, n)?;
        let w1 = w1_empirical(&a, &b);
        worst = worst.max((w1 - w1_cdf_area(&a, &b)).abs());
        ordered &= w2_empirical(&a, &b)? >= w1 - 1e-12;
    }
    Ok((worst < 1e-9 && ordered, format!("max gap {worst:.3e}")))
}

fn noiseless_recovery() -> Result<(bool, String)> {
    let mut worst = 0.0f64;
    for link in LinkSpec::catalog(200) {
        let ds = sample_dataset(&DatasetSpec::new(Mode::Shuffled, 200, link.clone(), 0.0), 5)?;
        let x = ds.x_ordered.as_deref().unwrap_or_default();
        let fit = fit_shuffled(x, &ds.y, 0.0, &FitConfig::default())?;
        worst = worst.max(risk_empirical(&fit.link, &link, x)?);
    }
    Ok((worst < 1e-12, format!("max risk {worst:.3e}")))
}

fn bandwidth_rule() -> Result<(bool, String)> {
    let h = select_bandwidth(10_000, 0.5, &NoiseSpec::gaussian(), &BandwidthRule::default())?.h;
    let n = 1e4f64;
    let expected = 0.5 * (0.2 * (n * 0.25 * n.ln()).ln()).powf(-0.5);
    Ok(((h - expected).abs() < 1e-12, format!("h = {h:.6}")))
}

fn deconv_point_mass() -> Result<(bool, String)> {
    let n = 4000;
    let sigma = 0.2;
    let ds = sample_dataset(&DatasetSpec::new(Mode::Deconv, n, LinkSpec::Affine { slope: 0.0, intercept: 0.5 }, sigma), 3)?;
    let ys = EmpiricalMeasure::new(ds.y)?;
    let h = select_bandwidth(n, sigma, &NoiseSpec::gaussian(), &BandwidthRule::default())?.h;
    let grid = GridSpec::covering(&ys, sigma, 1 << 12)?;
    let est = deconvolve_cdf(&ys, &NoiseSpec::gaussian(), sigma, h, &grid)?;
    let median = est.quantile(0.5)?;
    Ok(((median - 0.5).abs() <= 2.0 * h, format!("median {median:.4}, h {h:.4}")))
}

fn occupancy_product() -> Result<(bool, String)> {
    let mut ok = conjecture_product(&[1], 1, 1.0, 3.0) == 0.0;
    for rep in 0..20 {
        let counts = multinomial_counts(1000, &mut replication_rng(7, 1000, rep));
        ok &= counts.iter().map(|&c| c as usize).sum::<usize>() == 1000;
        let wide: Vec<u64> = counts.into_iter().map(u64::from).collect();
        let p = conjecture_product(&wide, 1000, 10.0, 20.0);
        ok &= p.is_finite() && (0.0..=1.0).contains(&p);
    }
    Ok((ok, "counts sum to n, products in [0, 1]".into()))
}

/// Runs every suite.
pub fn run_all() -> Vec<Check> {
    vec![
        check("dist1d: W1 dual formulas agree", w1_duality()),
        check("regress: noiseless shuffled recovery", noiseless_recovery()),
        check("deconv: bandwidth closed form", bandwidth_rule()),
        check("deconv: point mass located", deconv_point_mass()),
        check("experiments: occupancy product", occupancy_product()),
    ]
}

#[cfg(test)]
mod tests {
    #[test]
    fn all_suites_pass() {
        for c in super::run_all() {
            assert!(c.passed, "{}: {}", c.name, c.detail);
        }
    }
}
