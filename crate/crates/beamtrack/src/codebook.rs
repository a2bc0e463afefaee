//! Hierarchical multi-resolution beamforming codebook over a discrete
//! angular grid.
//!
//! Level `l` holds `2^l` beams that partition the grid into contiguous
//! blocks of `Δ/2^l` bins each; the finest level has one beam per bin.
//! Two gain models are supported:
//!
//! * `PseudoInverse` — physical weights solving the least-squares design
//!   `w ∝ (A Aᴴ)⁺ A g` against the 0/1 coverage target `g`, evaluated on
//!   the grid for the per-bin gains actually used in Bayes updates.
//! * `Ideal` — the constant-gain abstraction: gain `G_l` everywhere inside
//!   the covered sector, zero outside, with `|G_l|² = 2^(l-S)` anchored so
//!   a finest aligned beam has unit power gain.

use std::ops::Range;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::geometry::{steering_unchecked, ArrayConfig};
use crate::linalg::{hermitian_pinv, CMatrix};
use crate::posterior::Posterior;
use crate::{Error, Result};

/// Relative eigenvalue cutoff for the pseudo-inverse (A Aᴴ is close to
/// rank-deficient when the grid is finer than the array).
const PINV_TOL: f64 = 1e-8;

/// Uniform binning of the tracked angular range into Δ bins with centers
/// `θ_i = θ_min + (i + 1/2)·δ` (0-based `i`).
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct AngularGrid {
    pub n_bins: usize,
    pub min_deg: f64,
    pub max_deg: f64,
}

impl Default for AngularGrid {
    fn default() -> Self {
        Self {
            n_bins: 64,
            min_deg: -180.0,
            max_deg: 0.0,
        }
    }
}

impl AngularGrid {
    pub fn new(n_bins: usize, min_deg: f64, max_deg: f64) -> Result<Self> {
        let grid = Self {
            n_bins,
            min_deg,
            max_deg,
        };
        grid.validate()?;
        Ok(grid)
    }

    pub fn validate(&self) -> Result<()> {
        if self.n_bins < 2 {
            return Err(Error::InvalidParameter {
                what: "grid.n_bins",
                why: format!("need at least 2 bins, got {}", self.n_bins),
            });
        }
        if self.min_deg.is_nan() || self.max_deg.is_nan() || self.min_deg >= self.max_deg {
            return Err(Error::InvalidParameter {
                what: "grid.range",
                why: format!("need min < max, got [{}, {}]", self.min_deg, self.max_deg),
            });
        }
        Ok(())
    }

    /// Derive the grid range from the array's tracked range.
    pub fn for_array(cfg: &ArrayConfig, n_bins: usize) -> Result<Self> {
        Self::new(n_bins, cfg.angle_min_deg, cfg.angle_max_deg)
    }

    /// Bin width δ in degrees.
    pub fn delta_deg(&self) -> f64 {
        (self.max_deg - self.min_deg) / self.n_bins as f64
    }

    pub fn width_deg(&self) -> f64 {
        self.max_deg - self.min_deg
    }

    /// Center of bin `i` (0-based).
    pub fn bin_center(&self, i: usize) -> f64 {
        self.min_deg + (i as f64 + 0.5) * self.delta_deg()
    }

    /// Bin containing `phi_deg`, clamped to the grid.
    pub fn bin_of(&self, phi_deg: f64) -> usize {
        let raw = ((phi_deg - self.min_deg) / self.delta_deg()).floor();
        (raw.max(0.0) as usize).min(self.n_bins - 1)
    }

    /// Wrap an angle into [min, max) circularly.
    pub fn wrap(&self, phi_deg: f64) -> f64 {
        let w = self.width_deg();
        self.min_deg + (phi_deg - self.min_deg).rem_euclid(w)
    }

    pub fn centers(&self) -> Vec<f64> {
        (0..self.n_bins).map(|i| self.bin_center(i)).collect()
    }
}

/// Gain model used when building and evaluating beams.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum CodebookMode {
    Ideal,
    PseudoInverse,
}

/// One codebook entry.
#[derive(Debug, Clone)]
pub struct Beam {
    /// Level, 1-based (1 = widest).
    pub level: usize,
    /// Index within the level, 0-based.
    pub index: usize,
    /// Unit-norm antenna weights (physical design; in `Ideal` mode these
    /// are kept for reference but the per-bin gains below are idealized).
    pub weights: Vec<Complex64>,
    /// Covered bins, a contiguous block.
    pub bins: Range<usize>,
    /// Complex gain at every bin center, length Δ.
    pub bin_gains: Vec<Complex64>,
    /// In-coverage gain magnitude G_l of the ideal-beam abstraction.
    pub ideal_gain: f64,
}

impl Beam {
    pub fn covers_bin(&self, i: usize) -> bool {
        self.bins.contains(&i)
    }

    pub fn n_covered(&self) -> usize {
        self.bins.len()
    }

    /// 0/1 coverage mask over the grid.
    pub fn coverage_mask(&self) -> Vec<f64> {
        (0..self.bin_gains.len())
            .map(|i| if self.covers_bin(i) { 1.0 } else { 0.0 })
            .collect()
    }
}

/// Immutable hierarchical codebook; levels 1..=S, `2^l` beams per level.
#[derive(Debug, Clone)]
pub struct Codebook {
    pub levels: usize,
    pub mode: CodebookMode,
    /// Condition number of A Aᴴ seen by the pseudo-inverse (1 for Ideal).
    pub condition_number: f64,
    grid: AngularGrid,
    array: ArrayConfig,
    beams: Vec<Beam>,
    level_offset: Vec<usize>,
}

impl Codebook {
    pub fn grid(&self) -> &AngularGrid {
        &self.grid
    }

    pub fn array(&self) -> &ArrayConfig {
        &self.array
    }

    pub fn n_beams(&self) -> usize {
        self.beams.len()
    }

    pub fn beams(&self) -> &[Beam] {
        &self.beams
    }

    /// Beam `index` (0-based) of `level` (1-based).
    pub fn beam(&self, level: usize, index: usize) -> &Beam {
        &self.beams[self.level_offset[level - 1] + index]
    }

    pub fn n_beams_in_level(&self, level: usize) -> usize {
        1 << level
    }

    /// Finest-level beam covering `phi_deg`.
    pub fn finest_beam_at(&self, phi_deg: f64) -> &Beam {
        let bin = self.grid.bin_of(phi_deg);
        let per = self.grid.n_bins >> self.levels; // bins per finest beam (=1)
        self.beam(self.levels, bin / per.max(1))
    }

    /// Main-lobe pointing direction: center of the covered sector.
    pub fn pointing_deg(&self, beam: &Beam) -> f64 {
        let width = self.grid.width_deg() / (1 << beam.level) as f64;
        self.grid.min_deg + (beam.index as f64 + 0.5) * width
    }

    /// Complex response of a beam to an arrival from `phi_deg` (any angle in
    /// range, not just bin centers). Ideal mode: `G_l` inside the covered
    /// sector, 0 outside. Pseudo-inverse mode: `wᴴ a(φ)`.
    pub fn response(&self, beam: &Beam, phi_deg: f64) -> Complex64 {
        match self.mode {
            CodebookMode::Ideal => {
                let width = self.grid.width_deg() / (1 << beam.level) as f64;
                let lo = self.grid.min_deg + beam.index as f64 * width;
                let hi = lo + width;
                // Closed on the top edge of the last sector so the range
                // endpoint belongs to the final beam.
                let inside = phi_deg >= lo
                    && (phi_deg < hi || (phi_deg == hi && phi_deg == self.grid.max_deg));
                if inside {
                    Complex64::new(beam.ideal_gain, 0.0)
                } else {
                    Complex64::new(0.0, 0.0)
                }
            }
            CodebookMode::PseudoInverse => {
                crate::geometry::dot_conj(&beam.weights, &steering_unchecked(&self.array, phi_deg))
            }
        }
    }
}

/// In-coverage gain magnitude `G_l` of the ideal-beam abstraction.
///
/// Anchored so a finest aligned beam delivers the operating SNR exactly:
/// `|G_S|² = 1`, and the power gain halves per level below, `|G_l|² = 2^(l-S)`.
pub fn ideal_gain(level: usize, grid: &AngularGrid) -> f64 {
    let s = grid.n_bins.trailing_zeros() as i32;
    (2.0_f64).powi(level as i32 - s).sqrt()
}

/// Probability mass the posterior places inside a beam's covered sector.
pub fn coverage_probability(post: &Posterior, beam: &Beam) -> f64 {
    let p = post.probs();
    beam.bins.clone().map(|i| p[i]).sum()
}

/// Build the full codebook for a grid with a power-of-two bin count.
pub fn build_codebook(
    cfg: &ArrayConfig,
    grid: &AngularGrid,
    mode: CodebookMode,
) -> Result<Codebook> {
    cfg.validate()?;
    grid.validate()?;
    if !grid.n_bins.is_power_of_two() {
        return Err(Error::InvalidParameter {
            what: "grid.n_bins",
            why: format!("codebook needs a power of two, got {}", grid.n_bins),
        });
    }
    let s = grid.n_bins.trailing_zeros() as usize;
    let delta = grid.n_bins;

    // Steering vectors at every bin center and the Gram matrix A Aᴴ.
    let steerings: Vec<Vec<Complex64>> = grid
        .centers()
        .iter()
        .map(|&c| steering_unchecked(cfg, c))
        .collect();
    let n = cfg.n_antennas;
    let (pinv, condition_number) = match mode {
        CodebookMode::Ideal => (None, 1.0),
        CodebookMode::PseudoInverse => {
            let mut gram = CMatrix::zeros(n, n);
            for a in &steerings {
                for i in 0..n {
                    for j in 0..n {
                        let v = gram.at(i, j) + a[i] * a[j].conj();
                        gram.set(i, j, v);
                    }
                }
            }
            let (p, cond) = hermitian_pinv(&gram, PINV_TOL);
            (Some(p), cond)
        }
    };

    let mut beams = Vec::new();
    let mut level_offset = Vec::with_capacity(s);
    for level in 1..=s {
        level_offset.push(beams.len());
        let per = delta >> level;
        let g_l = ideal_gain(level, grid);
        for index in 0..(1usize << level) {
            let bins = (index * per)..((index + 1) * per);

            // Least-squares weights against the 0/1 coverage target.
            let target_sum: Vec<Complex64> = (0..n)
                .map(|r| bins.clone().map(|i| steerings[i][r]).sum())
                .collect();
            let mut weights = match &pinv {
                Some(p) => p.mul_vec(&target_sum),
                None => target_sum,
            };
            let norm = weights.iter().map(|c| c.norm_sqr()).sum::<f64>().sqrt();
            if norm == 0.0 {
                return Err(Error::InvalidParameter {
                    what: "codebook",
                    why: format!("degenerate beam at level {level} index {index}"),
                });
            }
            for w in &mut weights {
                *w /= norm;
            }

            let bin_gains: Vec<Complex64> = match mode {
                CodebookMode::Ideal => (0..delta)
                    .map(|i| {
                        if bins.contains(&i) {
                            Complex64::new(g_l, 0.0)
                        } else {
                            Complex64::new(0.0, 0.0)
                        }
                    })
                    .collect(),
                CodebookMode::PseudoInverse => steerings
                    .iter()
                    .map(|a| crate::geometry::dot_conj(&weights, a))
                    .collect(),
            };

            beams.push(Beam {
                level,
                index,
                weights,
                bins,
                bin_gains,
                ideal_gain: g_l,
            });
        }
    }

    Ok(Codebook {
        levels: s,
        mode,
        condition_number,
        grid: grid.clone(),
        array: cfg.clone(),
        beams,
        level_offset,
    })
}
