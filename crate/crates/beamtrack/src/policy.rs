//! Decision layer: posterior-matched beam selection, mutual-information and
//! spectral-efficiency rewards, the pilot/data action rule, and the offline
//! mutual-information table.
//!
//! Beam selection picks the codebook entry whose posterior coverage
//! probability is closest to one half. The pilot/data decision maximizes
//! `I(Φ; Z(e) | w, π) + γ·S(e | w, π)` where the information terms assume
//! ideal in-coverage gains so they depend only on the beam level and the
//! coverage probability — which is what makes the offline table possible.
//! All scores are in nats; spectral efficiency is reported in bits/s/Hz.

use std::io::{BufRead, BufReader, Read, Write};

use serde::{Deserialize, Serialize};

use crate::codebook::{coverage_probability, Beam, Codebook};
use crate::posterior::Posterior;
use crate::special::binary_entropy;
use crate::{Error, Result};

/// Slot usage: pilot (known symbol) or data (unknown symbol).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Action {
    Pilot,
    Data,
}

impl std::fmt::Display for Action {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Action::Pilot => write!(f, "P"),
            Action::Data => write!(f, "D"),
        }
    }
}

/// Outcome of the pilot/data trade-off for one slot.
#[derive(Debug, Clone, Copy)]
pub struct ActionDecision {
    pub action: Action,
    pub level: usize,
    pub index: usize,
    /// Mutual information of the chosen action, nats.
    pub mi_nats: f64,
    /// Expected spectral efficiency of the chosen action, bits/s/Hz.
    pub se_bits: f64,
    /// Pilot score I_P, nats.
    pub score_pilot: f64,
    /// Data score I_D + γ·S_D, nats.
    pub score_data: f64,
}

/// Which beams the posterior-matching argmin ranges over.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum SelectionScope {
    /// Every beam of every level (the default).
    #[default]
    AllLevels,
    /// Only the previous level and the one below it (restricted descent,
    /// kept for ablation).
    TwoLevel,
}

/// Posterior-matched beam selection over the whole codebook.
///
/// Returns `(level, index)` (level 1-based, index 0-based) minimizing
/// `|π_w - 1/2|` over normalized coverage probabilities. Ties break toward
/// the finer level, then toward larger coverage, then toward the lower
/// index; the coverage key keeps the choice pointed at the belief mass when
/// a fully concentrated posterior ties every beam at distance 1/2.
pub fn select_beam_hiepm(post: &Posterior, cb: &Codebook) -> (usize, usize) {
    select_beam_scoped(post, cb, SelectionScope::AllLevels, 1)
}

/// Scoped variant of [`select_beam_hiepm`]; `prev_level` seeds the
/// `TwoLevel` window and is ignored for `AllLevels`.
pub fn select_beam_scoped(
    post: &Posterior,
    cb: &Codebook,
    scope: SelectionScope,
    prev_level: usize,
) -> (usize, usize) {
    let total: f64 = post.probs().iter().sum::<f64>().max(f64::MIN_POSITIVE);

    let level_range = match scope {
        SelectionScope::AllLevels => 1..=cb.levels,
        SelectionScope::TwoLevel => prev_level..=(prev_level + 1).min(cb.levels),
    };

    let mut best: Option<(f64, usize, f64, usize)> = None;
    for level in level_range {
        for index in 0..cb.n_beams_in_level(level) {
            let beam = cb.beam(level, index);
            // Same summation as coverage_probability so the selection and
            // the action rule see bit-identical coverage values.
            let cov = coverage_probability(post, beam) / total;
            let dist = (cov - 0.5).abs();
            let take = match best {
                None => true,
                Some((bd, bl, bc, _)) => {
                    dist < bd || (dist == bd && (level > bl || (level == bl && cov > bc)))
                }
            };
            if take {
                best = Some((dist, level, cov, index));
            }
        }
    }
    let (_, level, _, index) = best.expect("codebook has no beams");
    (level, index)
}

/// Per-beam SNR `|G|²/σ²` beyond which the mixture components no longer
/// overlap in f64 and both information terms equal the binary-entropy limit
/// `h_b(π)` to within e^{-s/2}; the fixed quadrature grids also stop
/// resolving the σ²-wide component there.
const DEGENERATE_SNR: f64 = 300.0;

/// Quadrature refinement must move the result less than this (nats).
const QUAD_GATE_NATS: f64 = 1e-3;

const PILOT_QUAD_POINTS: usize = 801;
const DATA_QUAD_POINTS: usize = 4001;

/// Mutual information between the AoA and a pilot observation through an
/// ideal level beam with in-coverage gain `gain`, as a function of the
/// coverage probability `pi_w`. Nats, clamped at zero.
pub fn mi_pilot(pi_w: f64, gain: f64, sigma_sq: f64) -> Result<f64> {
    let pi_w = pi_w.clamp(0.0, 1.0);
    if pi_w == 0.0 || pi_w == 1.0 {
        return Ok(0.0);
    }
    let g = gain.abs();
    if g * g / sigma_sq >= DEGENERATE_SNR {
        return Ok(binary_entropy(pi_w));
    }
    let base = pilot_marginal_entropy(pi_w, g, sigma_sq, PILOT_QUAD_POINTS);
    let refined = pilot_marginal_entropy(pi_w, g, sigma_sq, 2 * PILOT_QUAD_POINTS - 1);
    let residual = (refined - base).abs();
    if residual >= QUAD_GATE_NATS {
        return Err(Error::QuadratureNonConvergence { residual });
    }
    let noise_entropy = (std::f64::consts::PI * std::f64::consts::E * sigma_sq).ln();
    Ok((refined - noise_entropy).max(0.0))
}

/// Differential entropy of the two-component complex-Gaussian mixture on
/// the square [-(g+8σ), g+8σ]², tensor-grid trapezoid with `n` points per
/// axis. The integrand is separable, `f(x,y) = m(x)·q(y)`, so the tensor
/// sum is accumulated in factored form.
fn pilot_marginal_entropy(pi_w: f64, g: f64, sigma_sq: f64, n: usize) -> f64 {
    let sigma = sigma_sq.sqrt();
    let l = g + 8.0 * sigma;
    let h = 2.0 * l / (n - 1) as f64;
    let norm1d = 1.0 / (std::f64::consts::PI * sigma_sq).sqrt();

    // Trapezoid sums along each axis: Σ w·v and Σ w·v·ln v.
    let mut sx0 = 0.0; // ∫ m
    let mut sx1 = 0.0; // ∫ m ln m
    let mut sy0 = 0.0; // ∫ q
    let mut sy1 = 0.0; // ∫ q ln q
    for j in 0..n {
        let w = if j == 0 || j == n - 1 { 0.5 } else { 1.0 };
        let x = -l + h * j as f64;
        let q = norm1d * (-(x * x) / sigma_sq).exp();
        let m = pi_w * norm1d * (-((x - g) * (x - g)) / sigma_sq).exp() + (1.0 - pi_w) * q;
        if q > 1e-300 {
            sy0 += w * q;
            sy1 += w * q * q.ln();
        }
        if m > 1e-300 {
            sx0 += w * m;
            sx1 += w * m * m.ln();
        }
    }
    // -∬ f ln f = -(∫q · ∫m ln m + ∫q ln q · ∫m)
    -(sy0 * sx1 + sy1 * sx0) * h * h
}

/// Mutual information between the AoA and a data-power observation through
/// an ideal level beam; same conventions as [`mi_pilot`].
pub fn mi_data(pi_w: f64, gain: f64, sigma_sq: f64) -> Result<f64> {
    let pi_w = pi_w.clamp(0.0, 1.0);
    if pi_w == 0.0 || pi_w == 1.0 {
        return Ok(0.0);
    }
    let g = gain.abs();
    if g == 0.0 {
        // identical mixture components carry no information
        return Ok(0.0);
    }
    if g * g / sigma_sq >= DEGENERATE_SNR {
        return Ok(binary_entropy(pi_w));
    }
    let base = data_mi_at(pi_w, g, sigma_sq, DATA_QUAD_POINTS);
    let refined = data_mi_at(pi_w, g, sigma_sq, 2 * DATA_QUAD_POINTS - 1);
    let residual = (refined - base).abs();
    if residual >= QUAD_GATE_NATS {
        return Err(Error::QuadratureNonConvergence { residual });
    }
    Ok(refined.max(0.0))
}

/// `I = h(Z) - h(Z|Φ)` for the scaled non-central χ² mixture on [0, U],
/// U = σ²(λ/2 + 40), trapezoid with `n` points; marginal and conditional
/// entropies share the grid so their truncation bias cancels.
fn data_mi_at(pi_w: f64, g: f64, sigma_sq: f64, n: usize) -> f64 {
    let lambda = 2.0 * g * g / sigma_sq;
    let upper = sigma_sq * (lambda / 2.0 + 40.0);
    let h = upper / (n - 1) as f64;
    let gain = num_complex::Complex64::new(g, 0.0);

    let mut h_marg = 0.0;
    let mut h_in = 0.0; // component entropy, in coverage
    let mut h_out = 0.0; // component entropy, out of coverage
    for j in 0..n {
        let w = if j == 0 || j == n - 1 { 0.5 } else { 1.0 };
        let x = h * j as f64;
        let c1 = crate::posterior::log_data_likelihood(x, gain, sigma_sq).exp();
        let c0 = (-x / sigma_sq).exp() / sigma_sq;
        let f = pi_w * c1 + (1.0 - pi_w) * c0;
        if c1 > 1e-300 {
            h_in -= w * c1 * c1.ln();
        }
        if c0 > 1e-300 {
            h_out -= w * c0 * c0.ln();
        }
        if f > 1e-300 {
            h_marg -= w * f * f.ln();
        }
    }
    (h_marg - (pi_w * h_in + (1.0 - pi_w) * h_out)) * h
}

/// Expected spectral efficiency of an action, bits/s/Hz:
/// `π_w · log₂(1 + |G|²/σ²)` on data slots, zero on pilots.
pub fn spectral_efficiency(pi_w: f64, gain: f64, sigma_sq: f64, action: Action) -> f64 {
    match action {
        Action::Pilot => 0.0,
        Action::Data => pi_w * (1.0 + gain * gain / sigma_sq).log2(),
    }
}

/// Pilot/data decision for the already-selected beam, scored from the
/// interpolated table. Ties go to data (exploit).
pub fn decide_action(post: &Posterior, beam: &Beam, gamma: f64, table: &MiTable) -> ActionDecision {
    let pi_w = coverage_probability(post, beam);
    let gain = table.gain(beam.level);
    let i_p = table.lookup(Action::Pilot, beam.level, pi_w);
    let i_d = table.lookup(Action::Data, beam.level, pi_w);
    decision_from_scores(beam, pi_w, gain, table.sigma_sq, gamma, i_p, i_d)
}

/// Slow path evaluating the information terms by quadrature instead of the
/// table; used for validation.
pub fn decide_action_exact(
    post: &Posterior,
    beam: &Beam,
    gamma: f64,
    gain: f64,
    sigma_sq: f64,
) -> Result<ActionDecision> {
    let pi_w = coverage_probability(post, beam);
    let i_p = mi_pilot(pi_w, gain, sigma_sq)?;
    let i_d = mi_data(pi_w, gain, sigma_sq)?;
    Ok(decision_from_scores(
        beam, pi_w, gain, sigma_sq, gamma, i_p, i_d,
    ))
}

fn decision_from_scores(
    beam: &Beam,
    pi_w: f64,
    gain: f64,
    sigma_sq: f64,
    gamma: f64,
    i_p: f64,
    i_d: f64,
) -> ActionDecision {
    let se_nats = pi_w * (1.0 + gain * gain / sigma_sq).ln();
    let score_pilot = i_p;
    let score_data = i_d + gamma * se_nats;
    let action = if score_data >= score_pilot {
        Action::Data
    } else {
        Action::Pilot
    };
    ActionDecision {
        action,
        level: beam.level,
        index: beam.index,
        mi_nats: match action {
            Action::Pilot => i_p,
            Action::Data => i_d,
        },
        se_bits: spectral_efficiency(pi_w, gain, sigma_sq, action),
        score_pilot,
        score_data,
    }
}

/// Offline mutual-information table: one row of `n_points` uniformly spaced
/// coverage probabilities per (observation kind, level), evaluated at the
/// ideal level gains; lookups interpolate linearly.
#[derive(Debug, Clone)]
pub struct MiTable {
    pub n_antennas: usize,
    pub n_bins: usize,
    pub sigma_sq: f64,
    pub n_points: usize,
    pub levels: usize,
    gains: Vec<f64>,
    pilot: Vec<Vec<f64>>,
    data: Vec<Vec<f64>>,
}

impl MiTable {
    pub fn build(cb: &Codebook, sigma_sq: f64, n_points: usize) -> Result<Self> {
        if n_points < 11 {
            return Err(Error::InvalidParameter {
                what: "mitable.n_points",
                why: format!("need at least 11 grid points, got {n_points}"),
            });
        }
        let levels = cb.levels;
        let gains: Vec<f64> = (1..=levels)
            .map(|l| crate::codebook::ideal_gain(l, cb.grid()))
            .collect();
        let mut pilot = Vec::with_capacity(levels);
        let mut data = Vec::with_capacity(levels);
        for &g in &gains {
            let mut row_p = Vec::with_capacity(n_points);
            let mut row_d = Vec::with_capacity(n_points);
            for i in 0..n_points {
                let pi = i as f64 / (n_points - 1) as f64;
                row_p.push(mi_pilot(pi, g, sigma_sq)?);
                row_d.push(mi_data(pi, g, sigma_sq)?);
            }
            pilot.push(row_p);
            data.push(row_d);
        }

        Ok(Self {
            n_antennas: cb.array().n_antennas,
            n_bins: cb.grid().n_bins,
            sigma_sq,
            n_points,
            levels,
            gains,
            pilot,
            data,
        })
    }

    /// Ideal in-coverage gain for a level.
    pub fn gain(&self, level: usize) -> f64 {
        self.gains[level - 1]
    }

    /// Linearly interpolated lookup; `pi` is clamped to [0, 1].
    pub fn lookup(&self, kind: Action, level: usize, pi: f64) -> f64 {
        let row = match kind {
            Action::Pilot => &self.pilot[level - 1],
            Action::Data => &self.data[level - 1],
        };
        let pi = pi.clamp(0.0, 1.0);
        let pos = pi * (self.n_points - 1) as f64;
        let j = (pos.floor() as usize).min(self.n_points - 2);
        let frac = pos - j as f64;
        row[j] * (1.0 - frac) + row[j + 1] * frac
    }

    /// Whether this table was built for the given configuration key.
    pub fn matches(
        &self,
        n_antennas: usize,
        n_bins: usize,
        sigma_sq: f64,
        n_points: usize,
    ) -> bool {
        self.n_antennas == n_antennas
            && self.n_bins == n_bins
            && self.sigma_sq == sigma_sq
            && self.n_points == n_points
    }

    /// Serialize as CSV with a key header; columns kind,level,pi,mi_nats.
    pub fn write_csv<W: Write>(&self, mut w: W) -> Result<()> {
        writeln!(w, "# beamtrack mutual-information table")?;
        writeln!(
            w,
            "# n_antennas={} n_bins={} sigma_sq={:e} n_points={} levels={}",
            self.n_antennas, self.n_bins, self.sigma_sq, self.n_points, self.levels
        )?;
        writeln!(w, "kind,level,pi,mi_nats")?;
        for (kind, rows) in [("P", &self.pilot), ("D", &self.data)] {
            for (l, row) in rows.iter().enumerate() {
                for (i, v) in row.iter().enumerate() {
                    let pi = i as f64 / (self.n_points - 1) as f64;
                    writeln!(w, "{kind},{},{pi:e},{v:e}", l + 1)?;
                }
            }
        }
        Ok(())
    }

    /// Parse a table written by [`MiTable::write_csv`].
    pub fn read_csv<R: Read>(r: R) -> Result<Self> {
        let reader = BufReader::new(r);
        let mut key: Option<(usize, usize, f64, usize, usize)> = None;
        let mut pilot: Vec<Vec<f64>> = Vec::new();
        let mut data: Vec<Vec<f64>> = Vec::new();
        for line in reader.lines() {
            let line = line?;
            let line = line.trim();
            if line.is_empty() || line == "kind,level,pi,mi_nats" {
                continue;
            }
            if let Some(rest) = line.strip_prefix('#') {
                if let Some(k) = parse_key(rest) {
                    key = Some(k);
                }
                continue;
            }
            let mut parts = line.split(',');
            let kind = parts.next().ok_or_else(|| malformed(line))?;
            let level: usize = parts
                .next()
                .and_then(|s| s.parse().ok())
                .ok_or_else(|| malformed(line))?;
            let _pi = parts.next().ok_or_else(|| malformed(line))?;
            let v: f64 = parts
                .next()
                .and_then(|s| s.parse().ok())
                .ok_or_else(|| malformed(line))?;
            let rows = match kind {
                "P" => &mut pilot,
                "D" => &mut data,
                _ => return Err(malformed(line)),
            };
            if rows.len() < level {
                rows.resize(level, Vec::new());
            }
            rows[level - 1].push(v);
        }
        let (n_antennas, n_bins, sigma_sq, n_points, levels) =
            key.ok_or_else(|| Error::TableMismatch("missing key header".into()))?;
        if pilot.len() != levels || data.len() != levels {
            return Err(Error::TableMismatch(format!(
                "expected {levels} levels, found {} pilot / {} data rows",
                pilot.len(),
                data.len()
            )));
        }
        for row in pilot.iter().chain(&data) {
            if row.len() != n_points {
                return Err(Error::TableMismatch(format!(
                    "expected {n_points} entries per row, found {}",
                    row.len()
                )));
            }
        }
        let grid = crate::codebook::AngularGrid::new(n_bins, 0.0, 1.0)?;
        let gains = (1..=levels)
            .map(|l| crate::codebook::ideal_gain(l, &grid))
            .collect();
        Ok(Self {
            n_antennas,
            n_bins,
            sigma_sq,
            n_points,
            levels,
            gains,
            pilot,
            data,
        })
    }
}

fn malformed(line: &str) -> Error {
    Error::Malformed(format!("bad mi-table line: {line}"))
}

fn parse_key(rest: &str) -> Option<(usize, usize, f64, usize, usize)> {
    let mut n_antennas = None;
    let mut n_bins = None;
    let mut sigma_sq = None;
    let mut n_points = None;
    let mut levels = None;
    for tok in rest.split_whitespace() {
        let (k, v) = tok.split_once('=')?;
        match k {
            "n_antennas" => n_antennas = v.parse().ok(),
            "n_bins" => n_bins = v.parse().ok(),
            "sigma_sq" => sigma_sq = v.parse().ok(),
            "n_points" => n_points = v.parse().ok(),
            "levels" => levels = v.parse().ok(),
            _ => {}
        }
    }
    Some((n_antennas?, n_bins?, sigma_sq?, n_points?, levels?))
}
