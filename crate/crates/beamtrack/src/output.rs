//! CSV and JSON emission with embedded reproducibility headers, plus the
//! readers used by the plot subcommand.
//!
//! Every data file starts with `#`-prefixed comment lines carrying the
//! fully resolved configuration (and seed), so any output can be
//! regenerated exactly. Nothing here embeds timestamps: identical inputs
//! produce byte-identical files.

use std::io::Write;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::config::ExperimentConfig;
use crate::policy::Action;
use crate::sim::{EpisodeLog, McSummary};
use crate::Result;

/// The resolved config as `# `-prefixed comment lines.
pub fn config_header(cfg: &ExperimentConfig) -> String {
    let mut out = String::from("# beamtrack output; resolved configuration follows\n");
    for line in cfg.resolved_toml().lines() {
        out.push_str("# ");
        out.push_str(line);
        out.push('\n');
    }
    out
}

/// One row of an episode CSV (also the shape the reader returns).
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct EpisodeRow {
    pub algorithm: String,
    pub episode: u64,
    pub t: usize,
    pub action: String,
    pub level: usize,
    pub beam: usize,
    pub phi_true_deg: f64,
    pub phi_est_deg: f64,
    pub map_est_deg: Option<f64>,
    pub gain_norm: f64,
    pub se_realized_bits: f64,
    pub se_expected_bits: f64,
    pub obs_re: f64,
    pub obs_im: f64,
    pub jumped: bool,
}

/// Write per-slot logs (one row per slot, RFC-4180 via the csv crate).
pub fn write_episode_csv<W: Write>(
    mut w: W,
    cfg: &ExperimentConfig,
    logs: &[EpisodeLog],
) -> Result<()> {
    w.write_all(config_header(cfg).as_bytes())?;
    let mut csv = csv::Writer::from_writer(w);
    for log in logs {
        for r in &log.records {
            csv.serialize(EpisodeRow {
                algorithm: log.algorithm.label().to_string(),
                episode: log.episode,
                t: r.t,
                action: match r.action {
                    Action::Pilot => "P".into(),
                    Action::Data => "D".into(),
                },
                level: r.level,
                beam: r.index,
                phi_true_deg: r.phi_true_deg,
                phi_est_deg: r.phi_est_deg,
                map_est_deg: r.map_est_deg,
                gain_norm: r.gain_norm,
                se_realized_bits: r.se_realized_bits,
                se_expected_bits: r.se_expected_bits,
                obs_re: r.obs_re,
                obs_im: r.obs_im,
                jumped: r.jumped,
            })?;
        }
    }
    csv.flush()?;
    Ok(())
}

pub fn read_episode_csv(path: &Path) -> Result<Vec<EpisodeRow>> {
    let mut reader = csv::ReaderBuilder::new()
        .comment(Some(b'#'))
        .from_path(path)?;
    let mut rows = Vec::new();
    for row in reader.deserialize() {
        rows.push(row?);
    }
    Ok(rows)
}

/// One aggregated row of a sweep CSV.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SweepRow {
    pub axis: String,
    pub value: f64,
    pub algorithm: String,
    pub pilot_overhead_mean: f64,
    pub pilot_overhead_se: f64,
    pub gain_mean: f64,
    pub gain_se: f64,
    pub se_mean: f64,
    pub se_se: f64,
    pub time_to_first_data_mean: f64,
    pub time_to_first_data_se: f64,
    pub n_episodes: usize,
}

impl SweepRow {
    pub fn from_summary(axis: &str, value: f64, s: &McSummary) -> Self {
        Self {
            axis: axis.to_string(),
            value,
            algorithm: s.algorithm.label().to_string(),
            pilot_overhead_mean: s.pilot_overhead.mean,
            pilot_overhead_se: s.pilot_overhead.se,
            gain_mean: s.mean_normalized_gain.mean,
            gain_se: s.mean_normalized_gain.se,
            se_mean: s.mean_se_bits.mean,
            se_se: s.mean_se_bits.se,
            time_to_first_data_mean: s.time_to_first_data.mean,
            time_to_first_data_se: s.time_to_first_data.se,
            n_episodes: s.n_episodes,
        }
    }
}

pub fn write_sweep_csv<W: Write>(
    mut w: W,
    cfg: &ExperimentConfig,
    rows: &[SweepRow],
) -> Result<()> {
    w.write_all(config_header(cfg).as_bytes())?;
    let mut csv = csv::Writer::from_writer(w);
    for row in rows {
        csv.serialize(row)?;
    }
    csv.flush()?;
    Ok(())
}

pub fn read_sweep_csv(path: &Path) -> Result<Vec<SweepRow>> {
    let mut reader = csv::ReaderBuilder::new()
        .comment(Some(b'#'))
        .from_path(path)?;
    let mut rows = Vec::new();
    for row in reader.deserialize() {
        rows.push(row?);
    }
    Ok(rows)
}

/// Metrics JSON: the resolved config echoed structurally plus one summary
/// per algorithm.
pub fn write_metrics_json<W: Write>(
    mut w: W,
    cfg: &ExperimentConfig,
    summaries: &[McSummary],
) -> Result<()> {
    let doc = serde_json::json!({
        "config": cfg,
        "seed": cfg.run.seed,
        "results": summaries,
    });
    let text = serde_json::to_string_pretty(&doc)
        .map_err(|e| crate::Error::Malformed(format!("metrics serialization failed: {e}")))?;
    w.write_all(text.as_bytes())?;
    w.write_all(b"\n")?;
    Ok(())
}

/// Per-slot belief snapshots (long format: one row per grid bin).
pub fn write_posterior_trace_csv<W: Write>(
    mut w: W,
    cfg: &ExperimentConfig,
    traces: &[(u64, crate::sim::PosteriorTrace)],
) -> Result<()> {
    w.write_all(config_header(cfg).as_bytes())?;
    writeln!(w, "episode,t,bin,prob")?;
    for (episode, trace) in traces {
        for (t, probs) in trace {
            for (bin, p) in probs.iter().enumerate() {
                writeln!(w, "{episode},{t},{bin},{p:e}")?;
            }
        }
    }
    Ok(())
}

/// Same columns the codebook subcommand exports.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct BeamPatternRow {
    pub level: usize,
    pub index: usize,
    pub bin: usize,
    pub gain_sq: f64,
    pub phase_rad: f64,
}

pub fn write_codebook_csv<W: Write>(
    mut w: W,
    cfg: &ExperimentConfig,
    cb: &crate::codebook::Codebook,
) -> Result<()> {
    w.write_all(config_header(cfg).as_bytes())?;
    writeln!(w, "# condition_number={:e}", cb.condition_number)?;
    let mut csv = csv::Writer::from_writer(w);
    for beam in cb.beams() {
        for (bin, g) in beam.bin_gains.iter().enumerate() {
            csv.serialize(BeamPatternRow {
                level: beam.level,
                index: beam.index,
                bin,
                gain_sq: g.norm_sqr(),
                phase_rad: g.arg(),
            })?;
        }
    }
    csv.flush()?;
    Ok(())
}
