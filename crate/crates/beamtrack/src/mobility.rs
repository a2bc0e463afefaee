//! Stochastic AoA trajectory models and the matching one-step posterior
//! prediction kernels.
//!
//! Three increment processes: a known constant angular velocity, zero-mean
//! Gaussian drift, and rare Bernoulli jumps of a known size. Prediction
//! kernels act circularly on the grid (mass wraps around the range edges),
//! which keeps them exactly mass-conserving and doubly stochastic; the
//! trajectory boundary behavior is configurable (wrap by default).

use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::codebook::AngularGrid;
use crate::posterior::{Phase, Posterior};
use crate::{Error, Result};

/// AoA increment process. Angular quantities are in units of the grid
/// resolution δ where noted.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "model", rename_all = "kebab-case")]
pub enum MobilityModel {
    /// Constant angular velocity of `nu` bins (ν·δ degrees) per slot.
    Predictable { nu: f64 },
    /// Zero-mean Gaussian increments with variance `sigma_phi_sq` deg².
    Gaussian { sigma_phi_sq: f64 },
    /// With probability `p`, jump by `beta` bins (β·δ degrees); else stay.
    BernoulliJump { beta: i64, p: f64 },
}

impl MobilityModel {
    pub fn validate(&self) -> Result<()> {
        match *self {
            MobilityModel::Gaussian { sigma_phi_sq } if sigma_phi_sq < 0.0 => {
                Err(Error::InvalidParameter {
                    what: "mobility.sigma_phi_sq",
                    why: format!("must be ≥ 0, got {sigma_phi_sq}"),
                })
            }
            MobilityModel::BernoulliJump { p, .. } if !(0.0..=1.0).contains(&p) => {
                Err(Error::InvalidParameter {
                    what: "mobility.p",
                    why: format!("must be in [0, 1], got {p}"),
                })
            }
            _ => Ok(()),
        }
    }

    /// Mean drift per slot in degrees (what a velocity-based tracker uses).
    pub fn mean_drift_deg(&self, grid: &AngularGrid) -> f64 {
        match *self {
            MobilityModel::Predictable { nu } => nu * grid.delta_deg(),
            MobilityModel::Gaussian { .. } => 0.0,
            MobilityModel::BernoulliJump { beta, p } => beta as f64 * grid.delta_deg() * p,
        }
    }

    /// Increment variance per slot in deg² (EKF process noise).
    pub fn variance_deg_sq(&self, grid: &AngularGrid) -> f64 {
        match *self {
            MobilityModel::Predictable { .. } => 0.0,
            MobilityModel::Gaussian { sigma_phi_sq } => sigma_phi_sq,
            MobilityModel::BernoulliJump { beta, p } => {
                let b = beta as f64 * grid.delta_deg();
                b * b * p * (1.0 - p)
            }
        }
    }
}

/// Trajectory behavior at the range edges.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Boundary {
    #[default]
    Wrap,
    Reflect,
}

/// One trajectory step.
#[derive(Debug, Clone, Copy)]
pub struct StepOutcome {
    pub phi_deg: f64,
    /// True when a Bernoulli jump fired on this transition.
    pub jumped: bool,
}

/// Advance the true AoA one slot.
pub fn step_aoa<R: Rng + ?Sized>(
    model: &MobilityModel,
    grid: &AngularGrid,
    phi_deg: f64,
    boundary: Boundary,
    rng: &mut R,
) -> StepOutcome {
    let (raw, jumped) = match *model {
        MobilityModel::Predictable { nu } => (phi_deg + nu * grid.delta_deg(), false),
        MobilityModel::Gaussian { sigma_phi_sq } => {
            let r: f64 = rng.sample(StandardNormal);
            (phi_deg + sigma_phi_sq.sqrt() * r, false)
        }
        MobilityModel::BernoulliJump { beta, p } => {
            if rng.gen::<f64>() < p {
                (phi_deg + beta as f64 * grid.delta_deg(), true)
            } else {
                (phi_deg, false)
            }
        }
    };
    let phi = match boundary {
        Boundary::Wrap => grid.wrap(raw),
        Boundary::Reflect => reflect(grid, raw),
    };
    StepOutcome {
        phi_deg: phi,
        jumped,
    }
}

fn reflect(grid: &AngularGrid, phi: f64) -> f64 {
    let w = grid.width_deg();
    let x = (phi - grid.min_deg).rem_euclid(2.0 * w);
    grid.min_deg + if x > w { 2.0 * w - x } else { x }
}

/// One-step prediction dispatch for the model.
pub fn predict(model: &MobilityModel, post: &Posterior, grid: &AngularGrid) -> Posterior {
    match *model {
        MobilityModel::Predictable { nu } => predict_predictable(post, nu),
        MobilityModel::Gaussian { sigma_phi_sq } => predict_gaussian(post, sigma_phi_sq, grid),
        MobilityModel::BernoulliJump { beta, p } => predict_bernoulli(post, beta, p),
    }
}

/// Circular shift of the belief by `shift` bins (mass moves forward for
/// positive shifts: out[i] = in[i - shift]).
fn shifted(probs: &[f64], shift: i64) -> Vec<f64> {
    let n = probs.len() as i64;
    (0..n)
        .map(|i| probs[(i - shift).rem_euclid(n) as usize])
        .collect()
}

/// Prediction for constant velocity: integer part is a pure circular shift,
/// the fractional remainder splits each bin's mass with its forward
/// neighbor, `out[i] = (1-f)·in[i] + f·in[i - sign]`.
pub fn predict_predictable(post: &Posterior, nu: f64) -> Posterior {
    let whole = nu.trunc() as i64;
    let frac = nu.fract();
    let mut probs = shifted(post.probs(), whole);
    if frac != 0.0 {
        let f = frac.abs();
        let sign = if frac > 0.0 { 1i64 } else { -1i64 };
        let base = probs;
        let moved = shifted(&base, sign);
        probs = base
            .iter()
            .zip(&moved)
            .map(|(&stay, &incoming)| (1.0 - f) * stay + f * incoming)
            .collect();
    }
    let mut out = Posterior::from_raw(probs, Phase::Predicted);
    out.normalize_mut();
    out
}

/// Prediction for Gaussian drift: circular convolution with the δ-quantized
/// zero-mean Gaussian, truncated at ±6σ and renormalized to sum 1.
pub fn predict_gaussian(post: &Posterior, sigma_phi_sq: f64, grid: &AngularGrid) -> Posterior {
    if sigma_phi_sq == 0.0 {
        let mut out = post.clone();
        out.set_phase(Phase::Predicted);
        return out;
    }
    let kernel = gaussian_kernel(sigma_phi_sq, grid);
    let half = (kernel.len() - 1) / 2;
    let n = post.len() as i64;
    let p = post.probs();
    let probs: Vec<f64> = (0..n)
        .map(|i| {
            kernel
                .iter()
                .enumerate()
                .map(|(j, &w)| {
                    let m = j as i64 - half as i64;
                    w * p[(i - m).rem_euclid(n) as usize]
                })
                .sum()
        })
        .collect();
    let mut out = Posterior::from_raw(probs, Phase::Predicted);
    out.normalize_mut();
    out
}

/// δ-quantized Gaussian step kernel: weight of offset `m` is the probability
/// a N(0, σ_φ²) increment lands in bin `m`'s cell, support capped at ±6σ_φ,
/// renormalized. Returned as a vector of length 2·half+1 centered at `half`.
pub fn gaussian_kernel(sigma_phi_sq: f64, grid: &AngularGrid) -> Vec<f64> {
    let sigma = sigma_phi_sq.sqrt();
    let delta = grid.delta_deg();
    let half = ((6.0 * sigma / delta).ceil() as usize).max(1);
    let half = half.min(grid.n_bins / 2); // circular support cannot exceed the grid
    let denom = sigma * std::f64::consts::SQRT_2;
    let cdf = |x: f64| 0.5 * (1.0 + libm::erf(x / denom));
    let mut w: Vec<f64> = (-(half as i64)..=half as i64)
        .map(|m| {
            let lo = (m as f64 - 0.5) * delta;
            let hi = (m as f64 + 0.5) * delta;
            cdf(hi) - cdf(lo)
        })
        .collect();
    let sum: f64 = w.iter().sum();
    w.iter_mut().for_each(|x| *x /= sum);
    w
}

/// Prediction for Bernoulli jumps: mixture of staying and a β-bin shift,
/// `out[i] = (1-p)·in[i] + p·in[i-β]`.
pub fn predict_bernoulli(post: &Posterior, beta: i64, p: f64) -> Posterior {
    let moved = shifted(post.probs(), beta);
    let probs: Vec<f64> = post
        .probs()
        .iter()
        .zip(&moved)
        .map(|(&stay, &jumped)| (1.0 - p) * stay + p * jumped)
        .collect();
    let mut out = Posterior::from_raw(probs, Phase::Predicted);
    out.normalize_mut();
    out
}
