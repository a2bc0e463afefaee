//! Active beam tracking for a mmWave receive array under stochastic mobility.
//!
//! The receiver tracks the angle of arrival (AoA) of a single line-of-sight
//! path with a discrete Bayesian posterior over an angular grid. Each
//! beamforming slot it selects a beam from a hierarchical codebook by
//! posterior matching (the beam whose coverage probability is closest to
//! one half), decides between a pilot and a data transmission by trading
//! mutual information against spectral efficiency, updates the posterior
//! with the resulting observation, and pushes the belief through the
//! mobility model's one-step prediction kernel.
//!
//! The crate also ships three reference trackers (EKF tracking, dynamic
//! pilot insertion, and local neighborhood scanning, all backed by a shared
//! exhaustive-search estimator), a seeded Monte Carlo episode runner, and a
//! small CLI for experiment sweeps, CSV/JSON output, and SVG plots.
//!
//! Most capabilities have a runnable demo under `examples/`.

pub mod baselines;
pub mod cli;
pub mod codebook;
pub mod config;
pub mod geometry;
mod linalg;
pub mod mobility;
pub mod output;
pub mod policy;
pub mod posterior;
pub mod sim;
pub mod special;
pub mod svg;

use thiserror::Error as ThisError;

/// Crate-wide error type.
#[derive(Debug, ThisError)]
pub enum Error {
    #[error("angle {aoa_deg}° outside tracked range [{min_deg}°, {max_deg}°]")]
    AngleOutOfRange {
        aoa_deg: f64,
        min_deg: f64,
        max_deg: f64,
    },

    #[error("beamforming vector is not unit norm (‖w‖ = {norm})")]
    UnnormalizedBeam { norm: f64 },

    #[error("invalid {what}: {why}")]
    InvalidParameter { what: &'static str, why: String },

    #[error("quadrature did not converge (residual {residual} after refinement)")]
    QuadratureNonConvergence { residual: f64 },

    #[error("config error in `{field}`: {message}")]
    Config { field: String, message: String },

    #[error("mutual-information table mismatch: {0}")]
    TableMismatch(String),

    #[error("malformed input: {0}")]
    Malformed(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
