//! Distributions on the real line and the optimal transport distances between
//! them.
//!
//! Three representations are used throughout the crate:
//!
//! * [`EmpiricalMeasure`]: a sorted sample where each atom carries mass `1/n`.
//! * [`TabulatedDistribution`]: CDF values on a uniform grid, linearly
//!   interpolated between grid points.
//! * [`MonotoneStepFn`]: a left-continuous nondecreasing step function on
//!   `[0, 1]`, the representation of every fitted link.
//!
//! In one dimension the optimal coupling is the monotone one, so `W1` and `W2`
//! between equal-size samples reduce to sorted matching. `W1` additionally
//! equals the area between the two CDFs, which is what the tabulated routines
//! integrate.

use crate::{Error, Result};

/// A sorted sample with equal atom masses.
#[derive(Debug, Clone, PartialEq)]
pub struct EmpiricalMeasure {
    atoms: Vec<f64>,
}

impl EmpiricalMeasure {
    /// Builds the measure from an arbitrary sample; the values are sorted with
    /// a stable sort so equal atoms keep their input order.
    pub fn new(mut values: Vec<f64>) -> Result<Self> {
        if values.is_empty() {
            return Err(Error::EmptySample);
        }
        if values.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite);
        }
        values.sort_by(f64::total_cmp);
        Ok(Self { atoms: values })
    }

    pub fn atoms(&self) -> &[f64] {
        &self.atoms
    }

    pub fn len(&self) -> usize {
        self.atoms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.atoms.is_empty()
    }

    pub fn into_atoms(self) -> Vec<f64> {
        self.atoms
    }

    /// Quantile at level `u`; levels in `((i-1)/n, i/n]` map to the `i`-th atom.
    pub fn quantile(&self, u: f64) -> Result<f64> {
        if !(u > 0.0 && u <= 1.0) {
            return Err(Error::LevelOutOfRange(u));
        }
        let n = self.atoms.len();
        let idx = ((u * n as f64).ceil() as usize).clamp(1, n) - 1;
        Ok(self.atoms[idx])
    }

    /// Fraction of atoms `<= x`.
    pub fn cdf(&self, x: f64) -> f64 {
        self.atoms.partition_point(|&a| a <= x) as f64 / self.atoms.len() as f64
    }

    pub fn mean(&self) -> f64 {
        self.atoms.iter().sum::<f64>() / self.atoms.len() as f64
    }

    pub fn shifted(&self, c: f64) -> Self {
        Self {
            atoms: self.atoms.iter().map(|a| a + c).collect(),
        }
    }
}

/// CDF values on a uniform grid over `[lo, hi]`.
///
/// Below `lo` the CDF is 0 and above `hi` it is 1; inside the grid it is the
/// piecewise-linear interpolant of the stored values.
#[derive(Debug, Clone, PartialEq)]
pub struct TabulatedDistribution {
    lo: f64,
    hi: f64,
    cdf: Vec<f64>,
}

/// Mass allowed to sit outside the tabulated range on either side.
pub const COVERAGE_SLACK: f64 = 0.01;

impl TabulatedDistribution {
    pub fn new(lo: f64, hi: f64, cdf: Vec<f64>) -> Result<Self> {
        if !(lo.is_finite() && hi.is_finite() && lo < hi && cdf.len() >= 2) {
            return Err(Error::DegenerateGrid {
                lo,
                hi,
                points: cdf.len(),
            });
        }
        if let Some(k) = cdf.iter().position(|&c| !(0.0..=1.0).contains(&c)) {
            return Err(Error::InvalidTable(format!(
                "value {} at index {k} outside [0, 1]",
                cdf[k]
            )));
        }
        if let Some(k) = cdf.windows(2).position(|w| w[1] < w[0]) {
            return Err(Error::InvalidTable(format!(
                "decreasing at index {}",
                k + 1
            )));
        }
        let (first, last) = (cdf[0], cdf[cdf.len() - 1]);
        if first > COVERAGE_SLACK || last < 1.0 - COVERAGE_SLACK {
            return Err(Error::InvalidTable(format!(
                "grid misses mass: cdf starts at {first} and ends at {last}"
            )));
        }
        Ok(Self { lo, hi, cdf })
    }

    /// Tabulates `f` at `points` equispaced nodes of `[lo, hi]`.
    pub fn from_fn(lo: f64, hi: f64, points: usize, f: impl Fn(f64) -> f64) -> Result<Self> {
        if points < 2 || !(lo < hi) {
            return Err(Error::DegenerateGrid { lo, hi, points });
        }
        let step = (hi - lo) / (points - 1) as f64;
        let cdf = (0..points).map(|k| f(lo + k as f64 * step)).collect();
        Self::new(lo, hi, cdf)
    }

    pub fn lo(&self) -> f64 {
        self.lo
    }

    pub fn hi(&self) -> f64 {
        self.hi
    }

    pub fn values(&self) -> &[f64] {
        &self.cdf
    }

    pub fn len(&self) -> usize {
        self.cdf.len()
    }

    pub fn is_empty(&self) -> bool {
        self.cdf.is_empty()
    }

    pub fn step(&self) -> f64 {
        (self.hi - self.lo) / (self.cdf.len() - 1) as f64
    }

    pub fn point(&self, k: usize) -> f64 {
        if k + 1 == self.cdf.len() {
            self.hi
        } else {
            self.lo + k as f64 * self.step()
        }
    }

    pub fn points(&self) -> impl Iterator<Item = f64> + '_ {
        (0..self.cdf.len()).map(|k| self.point(k))
    }

    /// Right-continuous CDF value at `x`.
    pub fn cdf_at(&self, x: f64) -> f64 {
        self.cdf_side(x, true)
    }

    fn cdf_side(&self, x: f64, right: bool) -> f64 {
        if x < self.lo || (x == self.lo && !right) {
            return 0.0;
        }
        if x > self.hi || (x == self.hi && right) {
            return 1.0;
        }
        let pos = (x - self.lo) / self.step();
        let k = (pos.floor() as usize).min(self.cdf.len() - 2);
        let frac = (pos - k as f64).clamp(0.0, 1.0);
        self.cdf[k] + frac * (self.cdf[k + 1] - self.cdf[k])
    }

    /// Smallest `t` with `cdf(t) >= u`, interpolating linearly inside the
    /// bracketing grid cell.
    pub fn quantile(&self, u: f64) -> Result<f64> {
        if !(u > 0.0 && u < 1.0) {
            return Err(Error::LevelOutOfRange(u));
        }
        let k = self.cdf.partition_point(|&c| c < u);
        if k == 0 {
            return Ok(self.lo);
        }
        if k == self.cdf.len() {
            return Ok(self.hi);
        }
        let (c0, c1) = (self.cdf[k - 1], self.cdf[k]);
        let frac = (u - c0) / (c1 - c0);
        Ok(self.point(k - 1) + frac * self.step())
    }
}

/// A CDF that is linear between consecutive breakpoints.
trait PiecewiseLinearCdf {
    fn breakpoints(&self) -> Vec<f64>;
    fn limit(&self, x: f64, right: bool) -> f64;
}

impl PiecewiseLinearCdf for TabulatedDistribution {
    fn breakpoints(&self) -> Vec<f64> {
        self.points().collect()
    }

    fn limit(&self, x: f64, right: bool) -> f64 {
        self.cdf_side(x, right)
    }
}

impl PiecewiseLinearCdf for EmpiricalMeasure {
    fn breakpoints(&self) -> Vec<f64> {
        let mut b = self.atoms.clone();
        b.dedup();
        b
    }

    fn limit(&self, x: f64, right: bool) -> f64 {
        let count = if right {
            self.atoms.partition_point(|&a| a <= x)
        } else {
            self.atoms.partition_point(|&a| a < x)
        };
        count as f64 / self.atoms.len() as f64
    }
}

/// Exact integral over `[0, w]` of `|d0 + (d1 - d0) s / w|`.
fn abs_linear_integral(d0: f64, d1: f64, w: f64) -> f64 {
    if d0 * d1 >= 0.0 {
        0.5 * (d0.abs() + d1.abs()) * w
    } else {
        0.5 * (d0 * d0 + d1 * d1) / (d0.abs() + d1.abs()) * w
    }
}

/// Area between two piecewise-linear CDFs, integrated exactly cell by cell on
/// the merged breakpoint set.
fn cdf_area<A: PiecewiseLinearCdf, B: PiecewiseLinearCdf>(a: &A, b: &B) -> f64 {
    let mut pts = a.breakpoints();
    pts.extend(b.breakpoints());
    pts.sort_by(f64::total_cmp);
    pts.dedup();
    pts.windows(2)
        .map(|w| {
            let d0 = a.limit(w[0], true) - b.limit(w[0], true);
            let d1 = a.limit(w[1], false) - b.limit(w[1], false);
            abs_linear_integral(d0, d1, w[1] - w[0])
        })
        .sum()
}

/// `W1` between two empirical measures. Equal sizes use sorted matching,
/// unequal sizes the area between the CDFs.
pub fn w1_empirical(a: &EmpiricalMeasure, b: &EmpiricalMeasure) -> f64 {
    if a.len() == b.len() {
        sorted_matching_cost(a.atoms(), b.atoms(), |d| d.abs())
    } else {
        w1_cdf_area(a, b)
    }
}

/// `W1` as the area between two empirical CDFs, for any sample sizes.
pub fn w1_cdf_area(a: &EmpiricalMeasure, b: &EmpiricalMeasure) -> f64 {
    let (xa, xb) = (a.atoms(), b.atoms());
    let (na, nb) = (xa.len() as f64, xb.len() as f64);
    let (mut i, mut j) = (0, 0);
    let mut prev = xa[0].min(xb[0]);
    let mut area = 0.0;
    while i < xa.len() || j < xb.len() {
        let next = match (xa.get(i), xb.get(j)) {
            (Some(&p), Some(&q)) => p.min(q),
            (Some(&p), None) => p,
            (None, Some(&q)) => q,
            (None, None) => unreachable!(),
        };
        area += (i as f64 / na - j as f64 / nb).abs() * (next - prev);
        prev = next;
        while i < xa.len() && xa[i] == next {
            i += 1;
        }
        while j < xb.len() && xb[j] == next {
            j += 1;
        }
    }
    area
}

/// `W2` between equal-size empirical measures by sorted matching.
pub fn w2_empirical(a: &EmpiricalMeasure, b: &EmpiricalMeasure) -> Result<f64> {
    if a.len() != b.len() {
        return Err(Error::SizeMismatch {
            left: a.len(),
            right: b.len(),
        });
    }
    Ok(sorted_matching_cost(a.atoms(), b.atoms(), |d| d * d).sqrt())
}

fn sorted_matching_cost(a: &[f64], b: &[f64], cost: impl Fn(f64) -> f64) -> f64 {
    a.iter().zip(b).map(|(p, q)| cost(p - q)).sum::<f64>() / a.len() as f64
}

/// `W1` between two tabulated distributions on the merged grid.
///
/// Grids are validated at construction, so this cannot fail.
pub fn w1_tabulated(a: &TabulatedDistribution, b: &TabulatedDistribution) -> f64 {
    cdf_area(a, b)
}

/// `W1` between a tabulated distribution and an empirical measure.
pub fn w1_tabulated_empirical(a: &TabulatedDistribution, b: &EmpiricalMeasure) -> f64 {
    cdf_area(a, b)
}

/// Nondecreasing maps of `[0, 1]` into the line.
pub trait Monotone {
    fn value(&self, x: f64) -> f64;
}

/// Left-continuous nondecreasing step function on `[0, 1]`.
///
/// `values[0]` holds on `[0, knots[0]]`, `values[i]` on
/// `(knots[i-1], knots[i]]`, and the last value continues up to 1.
#[derive(Debug, Clone, PartialEq)]
pub struct MonotoneStepFn {
    knots: Vec<f64>,
    values: Vec<f64>,
}

impl MonotoneStepFn {
    pub fn new(knots: Vec<f64>, values: Vec<f64>) -> Result<Self> {
        if knots.is_empty() {
            return Err(Error::InvalidStepFn("no knots".into()));
        }
        if knots.len() != values.len() {
            return Err(Error::SizeMismatch {
                left: knots.len(),
                right: values.len(),
            });
        }
        if knots.iter().chain(&values).any(|v| !v.is_finite()) {
            return Err(Error::NonFinite);
        }
        if let Some(&k) = knots.iter().find(|k| !(0.0..=1.0).contains(*k)) {
            return Err(Error::OutOfUnitInterval { value: k });
        }
        if let Some(w) = knots.windows(2).find(|w| w[1] <= w[0]) {
            return Err(if w[1] == w[0] {
                Error::DuplicateKnot(w[0])
            } else {
                Error::InvalidStepFn("knots not increasing".into())
            });
        }
        if values.windows(2).any(|w| w[1] < w[0]) {
            return Err(Error::InvalidStepFn("values not nondecreasing".into()));
        }
        Ok(Self { knots, values })
    }

    pub fn knots(&self) -> &[f64] {
        &self.knots
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn len(&self) -> usize {
        self.knots.len()
    }

    pub fn is_empty(&self) -> bool {
        self.knots.is_empty()
    }

    pub fn eval(&self, x: f64) -> f64 {
        let idx = self.knots.partition_point(|&k| k < x);
        self.values[idx.min(self.values.len() - 1)]
    }

    /// `sup { t in [0, 1] : m(t) <= x }`, or 0 when no such `t` exists.
    pub fn generalized_inverse(&self, x: f64) -> f64 {
        let below = self.values.partition_point(|&v| v <= x);
        if below == 0 {
            0.0
        } else if below == self.values.len() {
            1.0
        } else {
            self.knots[below - 1]
        }
    }
}

impl Monotone for MonotoneStepFn {
    fn value(&self, x: f64) -> f64 {
        self.eval(x)
    }
}

/// See [`MonotoneStepFn::generalized_inverse`].
pub fn generalized_inverse(m: &MonotoneStepFn, x: f64) -> f64 {
    m.generalized_inverse(x)
}

/// Image of the sample `xs` under `m`, each image point keeping mass `1/n`.
pub fn pushforward<M: Monotone + ?Sized>(m: &M, xs: &EmpiricalMeasure) -> EmpiricalMeasure {
    // m is nondecreasing, so images of sorted atoms are already sorted; the
    // constructor re-sorts anyway in case the map is only monotone up to
    // rounding.
    EmpiricalMeasure::new(xs.atoms().iter().map(|&x| m.value(x)).collect())
        .expect("pushforward of a finite sample under a finite map")
}

/// `(1/n) sum |a_i|^p`.
pub fn empirical_moment(a: &EmpiricalMeasure, p: f64) -> f64 {
    a.atoms().iter().map(|v| v.abs().powf(p)).sum::<f64>() / a.len() as f64
}
