//! Discrete Bayesian belief over the AoA grid: likelihood evaluation for
//! pilot and data observations, the Bayes update, and point estimates.
//!
//! Updates run in the log domain with max-subtraction before normalizing;
//! at 20 dB operating SNR the per-bin likelihood ratios overflow doubles
//! well within an episode if multiplied out linearly. Densities are floored
//! at 1e-300 so an extreme observation cannot zero the whole posterior.

use num_complex::Complex64;

use crate::codebook::{AngularGrid, Beam};
use crate::geometry::Observation;
use crate::special::ln_bessel_i0;
use crate::{Error, Result};

/// Linear-domain floor applied to likelihoods before normalization.
pub const LIKELIHOOD_FLOOR: f64 = 1e-300;
const LN_FLOOR: f64 = -690.775527898214; // ln(1e-300)

/// Which side of the predict/update cycle a belief vector is on.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Phase {
    /// One-step prediction π(t|t-1).
    Predicted,
    /// Measurement-updated π(t|t).
    Filtered,
}

/// Probability vector over the angular grid.
#[derive(Debug, Clone)]
pub struct Posterior {
    probs: Vec<f64>,
    phase: Phase,
}

impl Posterior {
    /// Uniform belief, the episode prior.
    pub fn uniform(n_bins: usize) -> Self {
        Self {
            probs: vec![1.0 / n_bins as f64; n_bins],
            phase: Phase::Predicted,
        }
    }

    /// Build from raw probabilities; entries must be non-negative and sum
    /// to 1 within 1e-6 (then renormalized exactly).
    pub fn from_probs(probs: Vec<f64>) -> Result<Self> {
        if probs.is_empty() {
            return Err(Error::InvalidParameter {
                what: "posterior",
                why: "empty probability vector".into(),
            });
        }
        if probs.iter().any(|&p| p.is_nan() || p < 0.0) {
            return Err(Error::InvalidParameter {
                what: "posterior",
                why: "negative or NaN entry".into(),
            });
        }
        let sum: f64 = probs.iter().sum();
        if (sum - 1.0).abs() > 1e-6 {
            return Err(Error::InvalidParameter {
                what: "posterior",
                why: format!("probabilities sum to {sum}"),
            });
        }
        let mut post = Self {
            probs,
            phase: Phase::Predicted,
        };
        post.normalize_mut();
        Ok(post)
    }

    pub(crate) fn from_raw(probs: Vec<f64>, phase: Phase) -> Self {
        Self { probs, phase }
    }

    pub fn probs(&self) -> &[f64] {
        &self.probs
    }

    pub fn len(&self) -> usize {
        self.probs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.probs.is_empty()
    }

    pub fn phase(&self) -> Phase {
        self.phase
    }

    pub(crate) fn set_phase(&mut self, phase: Phase) {
        self.phase = phase;
    }

    pub fn normalize_mut(&mut self) {
        let sum: f64 = self.probs.iter().sum();
        if sum > 0.0 {
            self.probs.iter_mut().for_each(|p| *p /= sum);
        }
    }

    /// Shannon entropy in nats.
    pub fn entropy(&self) -> f64 {
        -self
            .probs
            .iter()
            .filter(|&&p| p > 0.0)
            .map(|&p| p * p.ln())
            .sum::<f64>()
    }
}

/// Complex-Gaussian pilot density `g(ξ; G) = exp(-|ξ-G|²/σ²)/(πσ²)`,
/// floored at [`LIKELIHOOD_FLOOR`].
pub fn pilot_likelihood(xi: Complex64, bin_gain: Complex64, sigma_sq: f64) -> f64 {
    log_pilot_likelihood(xi, bin_gain, sigma_sq)
        .exp()
        .max(LIKELIHOOD_FLOOR)
}

pub fn log_pilot_likelihood(xi: Complex64, bin_gain: Complex64, sigma_sq: f64) -> f64 {
    -(std::f64::consts::PI * sigma_sq).ln() - (xi - bin_gain).norm_sqr() / sigma_sq
}

/// Scaled non-central chi-squared data-power density with 2 degrees of
/// freedom and non-centrality `λ = 2|G|²/σ²`:
/// `c_λ(ξ) = exp(-(ξ/σ² + λ/2))/σ² · I0(2√(ξλ/(2σ²)))`, floored.
pub fn data_likelihood(xi: f64, bin_gain: Complex64, sigma_sq: f64) -> f64 {
    log_data_likelihood(xi, bin_gain, sigma_sq)
        .exp()
        .max(LIKELIHOOD_FLOOR)
}

pub fn log_data_likelihood(xi: f64, bin_gain: Complex64, sigma_sq: f64) -> f64 {
    let xi = xi.max(0.0);
    let lambda = 2.0 * bin_gain.norm_sqr() / sigma_sq;
    let u = xi * lambda / (2.0 * sigma_sq);
    -sigma_sq.ln() - xi / sigma_sq - 0.5 * lambda + ln_bessel_i0(2.0 * u.sqrt())
}

/// Bayes update of a predicted belief with one observation through `beam`,
/// using the beam's per-bin gains. Log-domain with max subtraction.
pub fn bayes_update(post: &Posterior, obs: &Observation, beam: &Beam, sigma_sq: f64) -> Posterior {
    assert_eq!(post.len(), beam.bin_gains.len(), "posterior/grid mismatch");
    let log_lik: Vec<f64> = beam
        .bin_gains
        .iter()
        .map(|&g| {
            let ll = match obs {
                Observation::Pilot { value } => log_pilot_likelihood(*value, g, sigma_sq),
                Observation::Data { power } => log_data_likelihood(*power, g, sigma_sq),
            };
            ll.max(LN_FLOOR)
        })
        .collect();
    let m = log_lik.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let mut probs: Vec<f64> = post
        .probs()
        .iter()
        .zip(&log_lik)
        .map(|(&p, &ll)| p * (ll - m).exp())
        .collect();
    let sum: f64 = probs.iter().sum();
    if sum > 0.0 {
        probs.iter_mut().for_each(|p| *p /= sum);
        Posterior::from_raw(probs, Phase::Filtered)
    } else {
        // Unreachable with floored likelihoods; keep the prior rather than
        // emit an invalid belief.
        eprintln!("beamtrack: all-zero Bayes numerator, keeping prior");
        let mut kept = post.clone();
        kept.set_phase(Phase::Filtered);
        kept
    }
}

/// Maximum a-posteriori bin center; ties break toward the lowest index.
pub fn map_estimate(post: &Posterior, grid: &AngularGrid) -> f64 {
    let mut best = 0usize;
    for (i, &p) in post.probs().iter().enumerate() {
        if p > post.probs()[best] {
            best = i;
        }
    }
    grid.bin_center(best)
}
