//! Estimators and simulation tooling for monotone regression from shuffled or
//! unlinked samples, and for Wasserstein deconvolution when the noise level
//! shrinks with the sample size.
//!
//! The crate is organised bottom-up:
//!
//! * [`dist1d`]: empirical and tabulated distributions on the line, monotone
//!   step functions, generalized inverses and Wasserstein distances.
//! * [`synth`]: noise and link catalogs, seeded data generation.
//! * [`deconv`]: Fourier-inversion estimate of the signal CDF with the
//!   noise-dependent bandwidth rule.
//! * [`regress`]: minimum-contrast fits for shuffled and unlinked data.
//! * [`experiments`]: risk evaluation, rate sweeps, and the multinomial
//!   occupancy study.
//! * [`cli`]: command-line front end, CSV persistence and SVG charts.

// NaN-rejecting checks are written as `!(x > 0.0)` on purpose.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod cli;
pub mod deconv;
pub mod dist1d;
mod error;
pub mod experiments;
pub mod io;
pub mod plot;
pub mod regress;
pub mod selftest;
pub mod synth;

pub use error::{Error, Result};
