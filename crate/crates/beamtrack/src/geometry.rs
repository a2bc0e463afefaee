//! Array manifold, channel state, and noisy observation synthesis for a
//! half-wavelength uniform linear array.
//!
//! Angles are in degrees throughout. The steering phase uses `cos φ`, which
//! sweeps the directional-cosine interval [-1, 1] injectively over the
//! default range [-180°, 0°], so there is no front/back ambiguity inside the
//! tracked range.

use num_complex::Complex64;
use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::{Error, Result};

/// Tolerance on `‖w‖ = 1` accepted by the observation synthesizers.
pub const UNIT_NORM_TOL: f64 = 1e-9;

/// Receive array description.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ArrayConfig {
    /// Number of antenna elements (≥ 2).
    pub n_antennas: usize,
    /// Element spacing in wavelengths, d/λ.
    pub spacing_ratio: f64,
    /// Lower edge of the tracked angular range, degrees.
    pub angle_min_deg: f64,
    /// Upper edge of the tracked angular range, degrees.
    pub angle_max_deg: f64,
}

impl Default for ArrayConfig {
    fn default() -> Self {
        Self {
            n_antennas: 32,
            spacing_ratio: 0.5,
            angle_min_deg: -180.0,
            angle_max_deg: 0.0,
        }
    }
}

impl ArrayConfig {
    pub fn validate(&self) -> Result<()> {
        if self.n_antennas < 2 {
            return Err(Error::InvalidParameter {
                what: "array.n_antennas",
                why: format!("need at least 2 elements, got {}", self.n_antennas),
            });
        }
        if self.spacing_ratio.is_nan() || self.spacing_ratio <= 0.0 {
            return Err(Error::InvalidParameter {
                what: "array.spacing_ratio",
                why: format!("must be positive, got {}", self.spacing_ratio),
            });
        }
        if self.angle_min_deg.is_nan()
            || self.angle_max_deg.is_nan()
            || self.angle_min_deg >= self.angle_max_deg
        {
            return Err(Error::InvalidParameter {
                what: "array.angle_range",
                why: format!(
                    "need angle_min_deg < angle_max_deg, got [{}, {}]",
                    self.angle_min_deg, self.angle_max_deg
                ),
            });
        }
        Ok(())
    }

    /// Whether `aoa_deg` lies inside the tracked range (inclusive).
    pub fn contains(&self, aoa_deg: f64) -> bool {
        aoa_deg >= self.angle_min_deg && aoa_deg <= self.angle_max_deg
    }

    fn check_in_range(&self, aoa_deg: f64) -> Result<()> {
        if self.contains(aoa_deg) {
            Ok(())
        } else {
            Err(Error::AngleOutOfRange {
                aoa_deg,
                min_deg: self.angle_min_deg,
                max_deg: self.angle_max_deg,
            })
        }
    }
}

/// Instantaneous channel seen by the receiver.
///
/// The shipped configurations fix `path_gain = 1` and `tx_power = 1`; the
/// operating SNR is then `1/noise_var`, the SNR a perfectly aligned
/// finest beam would deliver.
#[derive(Debug, Clone)]
pub struct ChannelState {
    /// True angle of arrival, degrees.
    pub aoa_deg: f64,
    /// Complex path gain α (fixed at 1 + 0i here).
    pub path_gain: Complex64,
    /// Transmit power (fixed at 1).
    pub tx_power: f64,
    /// Complex noise variance σ² (> 0, split σ²/2 per real dimension).
    pub noise_var: f64,
}

impl ChannelState {
    pub fn new(aoa_deg: f64, noise_var: f64) -> Self {
        Self {
            aoa_deg,
            path_gain: Complex64::new(1.0, 0.0),
            tx_power: 1.0,
            noise_var,
        }
    }

    /// Operating SNR, `tx_power / noise_var`.
    pub fn snr(&self) -> f64 {
        self.tx_power / self.noise_var
    }
}

/// One received beamforming-slot observation.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Observation {
    /// Pilot slot: matched-filtered complex sample `w^H a(φ) + η`.
    Pilot { value: Complex64 },
    /// Data slot: received power `‖w^H a(φ) x + η‖²` with unknown symbol `x`.
    Data { power: f64 },
}

impl Observation {
    pub fn is_pilot(&self) -> bool {
        matches!(self, Observation::Pilot { .. })
    }
}

/// Unit-norm steering vector `a(φ)` with entries
/// `(1/√N) · exp(j·2π·(d/λ)·n·cos φ)`, `n = 0..N-1`.
pub fn steering_vector(cfg: &ArrayConfig, aoa_deg: f64) -> Result<Vec<Complex64>> {
    cfg.check_in_range(aoa_deg)?;
    Ok(steering_unchecked(cfg, aoa_deg))
}

pub(crate) fn steering_unchecked(cfg: &ArrayConfig, aoa_deg: f64) -> Vec<Complex64> {
    let n = cfg.n_antennas;
    let scale = 1.0 / (n as f64).sqrt();
    let step = 2.0 * std::f64::consts::PI * cfg.spacing_ratio * aoa_deg.to_radians().cos();
    (0..n)
        .map(|i| Complex64::from_polar(scale, step * i as f64))
        .collect()
}

/// Beam response `w^H a(φ)` for an explicit weight vector.
pub fn array_response(cfg: &ArrayConfig, w: &[Complex64], aoa_deg: f64) -> Result<Complex64> {
    cfg.check_in_range(aoa_deg)?;
    Ok(dot_conj(w, &steering_unchecked(cfg, aoa_deg)))
}

/// `w^H v`.
pub(crate) fn dot_conj(w: &[Complex64], v: &[Complex64]) -> Complex64 {
    w.iter().zip(v).map(|(wi, vi)| wi.conj() * vi).sum()
}

fn check_unit_norm(w: &[Complex64]) -> Result<()> {
    let norm = w.iter().map(|c| c.norm_sqr()).sum::<f64>().sqrt();
    if (norm - 1.0).abs() > UNIT_NORM_TOL {
        return Err(Error::UnnormalizedBeam { norm });
    }
    Ok(())
}

/// Circularly symmetric complex Gaussian with variance `noise_var`
/// (σ²/2 per real dimension).
pub(crate) fn complex_gaussian<R: Rng + ?Sized>(noise_var: f64, rng: &mut R) -> Complex64 {
    let s = (noise_var / 2.0).sqrt();
    let re: f64 = rng.sample(StandardNormal);
    let im: f64 = rng.sample(StandardNormal);
    Complex64::new(s * re, s * im)
}

/// Random unit-modulus QPSK symbol.
pub(crate) fn qpsk_symbol<R: Rng + ?Sized>(rng: &mut R) -> Complex64 {
    match rng.gen_range(0..4u8) {
        0 => Complex64::new(1.0, 0.0),
        1 => Complex64::new(0.0, 1.0),
        2 => Complex64::new(-1.0, 0.0),
        _ => Complex64::new(0.0, -1.0),
    }
}

/// Pilot observation through a beam with known scalar response to the
/// current channel: `ξ = g + η`, `η ~ CN(0, σ²)`.
pub fn pilot_observation_from_gain<R: Rng + ?Sized>(
    gain: Complex64,
    noise_var: f64,
    rng: &mut R,
) -> Observation {
    Observation::Pilot {
        value: gain + complex_gaussian(noise_var, rng),
    }
}

/// Data observation through a beam with known scalar response:
/// `ξ = ‖g·x + η‖²` with a random QPSK symbol `x`, `|x| = 1`.
pub fn data_observation_from_gain<R: Rng + ?Sized>(
    gain: Complex64,
    noise_var: f64,
    rng: &mut R,
) -> Observation {
    let x = qpsk_symbol(rng);
    let y = gain * x + complex_gaussian(noise_var, rng);
    Observation::Data {
        power: y.norm_sqr(),
    }
}

/// Synthesize the matched-filtered pilot sample `ξ = √P_T α w^H a(φ) + η`.
pub fn synthesize_pilot_observation<R: Rng + ?Sized>(
    cfg: &ArrayConfig,
    ch: &ChannelState,
    w: &[Complex64],
    rng: &mut R,
) -> Result<Observation> {
    check_unit_norm(w)?;
    let g = ch.tx_power.sqrt() * ch.path_gain * array_response(cfg, w, ch.aoa_deg)?;
    Ok(pilot_observation_from_gain(g, ch.noise_var, rng))
}

/// Synthesize the received data power `ξ = ‖√P_T α w^H a(φ) x + η‖²`.
pub fn synthesize_data_observation<R: Rng + ?Sized>(
    cfg: &ArrayConfig,
    ch: &ChannelState,
    w: &[Complex64],
    rng: &mut R,
) -> Result<Observation> {
    check_unit_norm(w)?;
    let g = ch.tx_power.sqrt() * ch.path_gain * array_response(cfg, w, ch.aoa_deg)?;
    Ok(data_observation_from_gain(g, ch.noise_var, rng))
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn cfg(n: usize) -> ArrayConfig {
        ArrayConfig {
            n_antennas: n,
            ..ArrayConfig::default()
        }
    }

    #[test]
    fn two_element_broadside_has_zero_phase() {
        // cos(-90°) = 0, so every entry is 1/√2.
        let a = steering_vector(&cfg(2), -90.0).unwrap();
        for e in &a {
            assert!((e.re - 1.0 / 2f64.sqrt()).abs() < 1e-12);
            assert!(e.im.abs() < 1e-12);
        }
    }

    #[test]
    fn entry_phase_matches_formula() {
        let a = steering_vector(&cfg(32), -45.0).unwrap();
        let want = std::f64::consts::PI * (-45f64).to_radians().cos();
        assert!(
            (a[1].arg() - want).abs() < 1e-12,
            "{} vs {want}",
            a[1].arg()
        );
    }

    #[test]
    fn steering_vectors_are_unit_norm() {
        let c = cfg(32);
        for k in 0..=100 {
            let phi = -180.0 + 1.8 * k as f64;
            let a = steering_vector(&c, phi).unwrap();
            let norm: f64 = a.iter().map(|e| e.norm_sqr()).sum();
            assert!((norm - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn out_of_range_aoa_is_rejected() {
        assert!(matches!(
            steering_vector(&cfg(8), 10.0),
            Err(Error::AngleOutOfRange { .. })
        ));
    }

    #[test]
    fn unnormalized_beam_is_rejected() {
        let c = cfg(4);
        let ch = ChannelState::new(-90.0, 1.0);
        let w = vec![Complex64::new(1.0, 0.0); 4]; // norm 2
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        assert!(matches!(
            synthesize_pilot_observation(&c, &ch, &w, &mut rng),
            Err(Error::UnnormalizedBeam { .. })
        ));
    }

    #[test]
    fn noiseless_aligned_pilot_is_unity() {
        let c = cfg(16);
        let ch = ChannelState::new(-60.0, 0.0);
        let w = steering_vector(&c, -60.0).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        match synthesize_pilot_observation(&c, &ch, &w, &mut rng).unwrap() {
            Observation::Pilot { value } => {
                assert!((value - Complex64::new(1.0, 0.0)).norm() < 1e-12);
            }
            _ => unreachable!(),
        }
    }

    #[test]
    fn noiseless_orthogonal_pilot_is_zero() {
        let c = cfg(2);
        let ch = ChannelState::new(-90.0, 0.0);
        // a(-90°) = (1/√2)[1, 1]; w = (1/√2)[1, -1] is orthogonal to it.
        let s = 1.0 / 2f64.sqrt();
        let w = vec![Complex64::new(s, 0.0), Complex64::new(-s, 0.0)];
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        match synthesize_pilot_observation(&c, &ch, &w, &mut rng).unwrap() {
            Observation::Pilot { value } => assert!(value.norm() < 1e-12),
            _ => unreachable!(),
        }
    }

    #[test]
    fn noiseless_data_power_is_symbol_invariant() {
        let c = cfg(8);
        let ch = ChannelState::new(-120.0, 0.0);
        let w = steering_vector(&c, -120.0).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for _ in 0..32 {
            match synthesize_data_observation(&c, &ch, &w, &mut rng).unwrap() {
                Observation::Data { power } => assert!((power - 1.0).abs() < 1e-12),
                _ => unreachable!(),
            }
        }
    }

    #[test]
    fn pilot_noise_moments_match_monte_carlo() {
        let c = cfg(8);
        let ch = ChannelState::new(-100.0, 1.0);
        let w = steering_vector(&c, -77.0).unwrap();
        let expect = array_response(&c, &w, -100.0).unwrap();
        let n = 100_000usize;
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let mut sum = Complex64::new(0.0, 0.0);
        let mut samples = Vec::with_capacity(n);
        for _ in 0..n {
            let Observation::Pilot { value } =
                synthesize_pilot_observation(&c, &ch, &w, &mut rng).unwrap()
            else {
                unreachable!()
            };
            sum += value;
            samples.push(value);
        }
        let mean = sum / n as f64;
        assert!(
            (mean - expect).norm() <= 3.0 / (n as f64).sqrt(),
            "sample mean off: {mean} vs {expect}"
        );
        // Total complex variance → σ² = 1 within 2%, and per-dimension
        // covariance → σ²/2 within 3 standard errors.
        let var: f64 = samples.iter().map(|v| (v - mean).norm_sqr()).sum::<f64>() / n as f64;
        assert!((var - 1.0).abs() < 0.02, "sample variance {var}");
        let se = (2.0f64 / n as f64).sqrt() * 0.5; // se of a χ²-mean estimate of σ²/2
        for dim in 0..2 {
            let v: f64 = samples
                .iter()
                .map(|s| {
                    let d = s - expect;
                    let x = if dim == 0 { d.re } else { d.im };
                    x * x
                })
                .sum::<f64>()
                / n as f64;
            assert!((v - 0.5).abs() <= 3.0 * se, "per-dim variance {v}");
        }
    }

    #[test]
    fn orthogonal_data_power_is_exponential() {
        // w ⟂ a(φ): power is |η|², exponential with mean σ². Kolmogorov-Smirnov
        // against Exp(1) at p > 0.01.
        let c = cfg(2);
        let ch = ChannelState::new(-90.0, 1.0);
        let s = 1.0 / 2f64.sqrt();
        let w = vec![Complex64::new(s, 0.0), Complex64::new(-s, 0.0)];
        let n = 100_000usize;
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let mut xs: Vec<f64> = (0..n)
            .map(
                |_| match synthesize_data_observation(&c, &ch, &w, &mut rng).unwrap() {
                    Observation::Data { power } => power,
                    _ => unreachable!(),
                },
            )
            .collect();
        xs.sort_by(|a, b| a.partial_cmp(b).unwrap());
        let mut d: f64 = 0.0;
        for (i, x) in xs.iter().enumerate() {
            let f = 1.0 - (-x).exp();
            let lo = i as f64 / n as f64;
            let hi = (i + 1) as f64 / n as f64;
            d = d.max((f - lo).abs()).max((f - hi).abs());
        }
        // Asymptotic Kolmogorov distribution tail.
        let lambda = (n as f64).sqrt() * d;
        let p: f64 = 2.0
            * (1..100)
                .map(|k| {
                    let k = k as f64;
                    (-1f64).powi(k as i32 - 1) * (-2.0 * k * k * lambda * lambda).exp()
                })
                .sum::<f64>();
        assert!(p > 0.01, "KS statistic {d}, p ≈ {p}");
    }
}
