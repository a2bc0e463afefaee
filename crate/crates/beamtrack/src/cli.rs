//! Command-line interface: `simulate`, `sweep`, `codebook`, `mitable`,
//! and `plot`.
//!
//! All subcommands share `--config`, `--out`, repeatable `--set key=value`
//! overrides, `--seed`, `--episodes`, and `--quiet`. Outputs embed the
//! resolved configuration, and identical invocations write identical bytes.

use std::collections::BTreeMap;
use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use anyhow::{bail, Context};
use clap::{Args, Parser, Subcommand};

use crate::config::ExperimentConfig;
use crate::output;
use crate::policy::MiTable;
use crate::sim::{run_episode_as, run_monte_carlo_as, Algorithm, SimContext};
use crate::svg::{Figure, Series};

#[derive(Debug, Parser)]
#[command(name = "beamtrack", version, about = "Active beam tracking simulator")]
pub struct Cli {
    #[command(subcommand)]
    command: Command,
    /// Suppress progress messages.
    #[arg(long, global = true)]
    quiet: bool,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Run Monte Carlo episodes and write per-slot CSV plus metrics JSON.
    Simulate(RunArgs),
    /// Re-run the experiment over several values of one config key
    /// (episode seeds aligned across values) and write an aggregate CSV.
    Sweep(SweepArgs),
    /// Export per-beam gain patterns of the configured codebook as CSV.
    Codebook(CommonArgs),
    /// Build the offline mutual-information table cache, or inspect one.
    Mitable(MitableArgs),
    /// Render SVG figures from simulate/sweep CSV files.
    Plot(PlotArgs),
}

#[derive(Debug, Args)]
struct CommonArgs {
    /// TOML experiment config; built-in defaults when omitted.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Output directory.
    #[arg(long, default_value = "out")]
    out: PathBuf,
    /// Override a config key, e.g. --set policy.gamma=0.005 (repeatable).
    #[arg(long = "set", value_name = "KEY=VALUE")]
    set: Vec<String>,
    /// Shorthand for --set run.seed=…
    #[arg(long)]
    seed: Option<u64>,
    /// Shorthand for --set run.episodes=…
    #[arg(long)]
    episodes: Option<usize>,
}

impl CommonArgs {
    fn load(&self) -> crate::Result<ExperimentConfig> {
        let mut overrides = self.set.clone();
        if let Some(seed) = self.seed {
            overrides.push(format!("run.seed={seed}"));
        }
        if let Some(eps) = self.episodes {
            overrides.push(format!("run.episodes={eps}"));
        }
        ExperimentConfig::load(self.config.as_deref(), &overrides)
    }
}

#[derive(Debug, Args)]
struct RunArgs {
    #[command(flatten)]
    common: CommonArgs,
    /// Reuse a mutual-information table cache written by `mitable`.
    #[arg(long)]
    mitable: Option<PathBuf>,
    /// Also write per-slot belief snapshots to posterior_trace.csv
    /// (proposed tracker only; one row per grid bin per slot).
    #[arg(long)]
    trace_posterior: bool,
}

#[derive(Debug, Args)]
struct SweepArgs {
    #[command(flatten)]
    common: CommonArgs,
    /// Config key to sweep; `gamma` and `snr` are shorthands for
    /// policy.gamma and channel.snr_db.
    #[arg(long)]
    axis: String,
    /// Comma-separated numeric values, e.g. 0.001,0.01,0.1.
    #[arg(long)]
    values: String,
    /// Comma-separated algorithms to run per value (default: configured
    /// one). Known: proposed, ekf, pilot-insertion, scan-narrow, scan-wide.
    #[arg(long)]
    algorithms: Option<String>,
}

#[derive(Debug, Args)]
struct MitableArgs {
    #[command(flatten)]
    common: CommonArgs,
    /// Print the key and per-level maxima of an existing cache instead of
    /// building one.
    #[arg(long)]
    inspect: Option<PathBuf>,
}

#[derive(Debug, Args)]
struct PlotArgs {
    /// CSV files produced by simulate or sweep.
    inputs: Vec<PathBuf>,
    #[arg(long, default_value = "out")]
    out: PathBuf,
}

pub fn run() -> anyhow::Result<()> {
    let cli = Cli::parse();
    match cli.command {
        Command::Simulate(args) => simulate(args, cli.quiet),
        Command::Sweep(args) => sweep(args, cli.quiet),
        Command::Codebook(args) => codebook(args, cli.quiet),
        Command::Mitable(args) => mitable(args, cli.quiet),
        Command::Plot(args) => plot(args, cli.quiet),
    }
}

fn create(path: &Path) -> anyhow::Result<BufWriter<File>> {
    if let Some(dir) = path.parent() {
        std::fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))?;
    }
    Ok(BufWriter::new(
        File::create(path).with_context(|| format!("creating {}", path.display()))?,
    ))
}

fn simulate(args: RunArgs, quiet: bool) -> anyhow::Result<()> {
    let cfg = args.common.load()?;
    let ctx = match &args.mitable {
        Some(path) => {
            let table = MiTable::read_csv(
                File::open(path).with_context(|| format!("opening mi-table {}", path.display()))?,
            )?;
            SimContext::with_table(cfg, table)?
        }
        None => {
            if !quiet {
                eprintln!(
                    "building mutual-information table (n={}); pass --mitable to reuse a cache",
                    cfg.policy.mi_table_points
                );
            }
            SimContext::new(cfg)?
        }
    };
    let algorithm = ctx.cfg.run.algorithm;
    let mut logs = Vec::new();
    let mut traces = Vec::new();
    for i in 0..ctx.cfg.run.episodes as u64 {
        if args.trace_posterior {
            let (log, trace) = crate::sim::run_episode_traced(&ctx, algorithm, i);
            logs.push(log);
            traces.push((i, trace));
        } else {
            logs.push(run_episode_as(&ctx, algorithm, i));
        }
    }
    let metrics: Vec<_> = logs.iter().map(crate::sim::episode_metrics).collect();
    let summary = crate::sim::summarize(algorithm, &metrics, ctx.cfg.run.horizon);

    let episodes_path = args.common.out.join("episodes.csv");
    output::write_episode_csv(create(&episodes_path)?, &ctx.cfg, &logs)?;
    let metrics_path = args.common.out.join("metrics.json");
    output::write_metrics_json(create(&metrics_path)?, &ctx.cfg, &[summary])?;
    if args.trace_posterior {
        let trace_path = args.common.out.join("posterior_trace.csv");
        output::write_posterior_trace_csv(create(&trace_path)?, &ctx.cfg, &traces)?;
        if !quiet {
            eprintln!("wrote {}", trace_path.display());
        }
    }
    if !quiet {
        eprintln!(
            "wrote {} and {}",
            episodes_path.display(),
            metrics_path.display()
        );
    }
    Ok(())
}

fn axis_key(axis: &str) -> &str {
    match axis {
        "gamma" => "policy.gamma",
        "snr" => "channel.snr_db",
        other => other,
    }
}

fn sweep(args: SweepArgs, quiet: bool) -> anyhow::Result<()> {
    let values: Vec<f64> = args
        .values
        .split(',')
        .map(|v| {
            v.trim()
                .parse::<f64>()
                .with_context(|| format!("bad sweep value `{v}`"))
        })
        .collect::<anyhow::Result<_>>()?;
    if values.len() < 2 {
        bail!("need at least 2 sweep values, got {}", values.len());
    }
    let base_cfg = args.common.load()?;
    let algorithms: Vec<Algorithm> = match &args.algorithms {
        None => vec![base_cfg.run.algorithm],
        Some(list) => list
            .split(',')
            .map(|s| {
                Algorithm::parse(s.trim()).ok_or_else(|| anyhow::anyhow!("unknown algorithm `{s}`"))
            })
            .collect::<anyhow::Result<_>>()?,
    };
    let key = axis_key(&args.axis);

    let mut rows = Vec::new();
    for &value in &values {
        let mut overrides = args.common.set.clone();
        if let Some(seed) = args.common.seed {
            overrides.push(format!("run.seed={seed}"));
        }
        if let Some(eps) = args.common.episodes {
            overrides.push(format!("run.episodes={eps}"));
        }
        overrides.push(format!("{key}={value}"));
        let cfg = ExperimentConfig::load(args.common.config.as_deref(), &overrides)?;
        let ctx = SimContext::new(cfg)?;
        for &alg in &algorithms {
            let (_, summary) = run_monte_carlo_as(&ctx, alg);
            rows.push(output::SweepRow::from_summary(key, value, &summary));
            if !quiet {
                eprintln!(
                    "{key}={value} {}: overhead {:.1}, gain {:.3}",
                    alg.label(),
                    rows.last().unwrap().pilot_overhead_mean,
                    rows.last().unwrap().gain_mean
                );
            }
        }
    }
    let path = args.common.out.join("sweep.csv");
    output::write_sweep_csv(create(&path)?, &base_cfg, &rows)?;
    if !quiet {
        eprintln!("wrote {}", path.display());
    }
    Ok(())
}

fn codebook(args: CommonArgs, quiet: bool) -> anyhow::Result<()> {
    let cfg = args.load()?;
    let grid = cfg.angular_grid()?;
    let cb = crate::codebook::build_codebook(&cfg.array, &grid, cfg.codebook.mode)?;
    let path = args.out.join("codebook.csv");
    output::write_codebook_csv(create(&path)?, &cfg, &cb)?;
    if !quiet {
        eprintln!(
            "wrote {} ({} beams, condition number {:.3e})",
            path.display(),
            cb.n_beams(),
            cb.condition_number
        );
    }
    Ok(())
}

fn mitable(args: MitableArgs, quiet: bool) -> anyhow::Result<()> {
    if let Some(path) = &args.inspect {
        let table = MiTable::read_csv(File::open(path)?)?;
        println!(
            "mi-table: N={} Δ={} σ²={:e} n={} levels={}",
            table.n_antennas, table.n_bins, table.sigma_sq, table.n_points, table.levels
        );
        for level in 1..=table.levels {
            let mut max_p: f64 = 0.0;
            let mut max_d: f64 = 0.0;
            for i in 0..table.n_points {
                let pi = i as f64 / (table.n_points - 1) as f64;
                max_p = max_p.max(table.lookup(crate::policy::Action::Pilot, level, pi));
                max_d = max_d.max(table.lookup(crate::policy::Action::Data, level, pi));
            }
            println!("level {level}: max I_P {max_p:.4} nats, max I_D {max_d:.4} nats");
        }
        return Ok(());
    }
    let cfg = args.common.load()?;
    let grid = cfg.angular_grid()?;
    let cb = crate::codebook::build_codebook(&cfg.array, &grid, cfg.codebook.mode)?;
    let table = MiTable::build(&cb, cfg.sigma_sq(), cfg.policy.mi_table_points)?;
    let path = args.common.out.join("mitable.csv");
    table.write_csv(create(&path)?)?;
    if !quiet {
        eprintln!("wrote {}", path.display());
    }
    Ok(())
}

fn plot(args: PlotArgs, quiet: bool) -> anyhow::Result<()> {
    if args.inputs.is_empty() {
        bail!("no input CSV files given");
    }
    for input in &args.inputs {
        let kind = sniff_csv(input)?;
        let stem = input
            .file_stem()
            .and_then(|s| s.to_str())
            .unwrap_or("figure");
        match kind {
            CsvKind::Episode => {
                let rows = output::read_episode_csv(input)?;
                if rows.is_empty() {
                    bail!("{}: no data rows", input.display());
                }
                let figs = episode_figures(&rows);
                for (suffix, fig) in figs {
                    let path = args.out.join(format!("{stem}_{suffix}.svg"));
                    write_svg(&path, &fig)?;
                    if !quiet {
                        eprintln!("wrote {}", path.display());
                    }
                }
            }
            CsvKind::Sweep => {
                let rows = output::read_sweep_csv(input)?;
                if rows.is_empty() {
                    bail!("{}: no data rows", input.display());
                }
                for (suffix, fig) in sweep_figures(&rows) {
                    let path = args.out.join(format!("{stem}_{suffix}.svg"));
                    write_svg(&path, &fig)?;
                    if !quiet {
                        eprintln!("wrote {}", path.display());
                    }
                }
            }
        }
    }
    Ok(())
}

enum CsvKind {
    Episode,
    Sweep,
}

fn sniff_csv(path: &Path) -> anyhow::Result<CsvKind> {
    let text =
        std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    let header = text
        .lines()
        .find(|l| !l.starts_with('#') && !l.trim().is_empty())
        .ok_or_else(|| anyhow::anyhow!("{}: empty CSV", path.display()))?;
    if header.contains("phi_true_deg") {
        Ok(CsvKind::Episode)
    } else if header.contains("pilot_overhead_mean") {
        Ok(CsvKind::Sweep)
    } else {
        bail!("{}: unrecognized CSV header", path.display())
    }
}

fn write_svg(path: &Path, fig: &Figure) -> anyhow::Result<()> {
    let mut w = create(path)?;
    w.write_all(fig.render().as_bytes())?;
    Ok(())
}

/// Gain-over-time and AoA-trace panels from the first logged episode of
/// each algorithm in the file.
fn episode_figures(rows: &[output::EpisodeRow]) -> Vec<(&'static str, Figure)> {
    // take each algorithm's first episode
    let mut first_episode: BTreeMap<&str, u64> = BTreeMap::new();
    for r in rows {
        first_episode
            .entry(r.algorithm.as_str())
            .or_insert(r.episode);
    }
    let selected: Vec<&output::EpisodeRow> = rows
        .iter()
        .filter(|r| first_episode[r.algorithm.as_str()] == r.episode)
        .collect();

    let mut gain = Figure::new(
        "normalized beamforming gain over time",
        "beamforming slot",
        "normalized gain",
    );
    for alg in first_episode.keys() {
        let pts: Vec<(f64, f64)> = selected
            .iter()
            .filter(|r| r.algorithm == *alg)
            .map(|r| (r.t as f64, r.gain_norm))
            .collect();
        gain.push(Series::line(alg.to_string(), pts));
    }

    let mut trace = Figure::new(
        "AoA trace, estimates, and pilot slots",
        "beamforming slot",
        "angle (deg)",
    );
    // the true trajectory is common; take it from the first algorithm
    if let Some((alg0, _)) = first_episode.iter().next() {
        let truth: Vec<(f64, f64)> = selected
            .iter()
            .filter(|r| r.algorithm == *alg0)
            .map(|r| (r.t as f64, r.phi_true_deg))
            .collect();
        trace.push(Series::line("true AoA", truth));
    }
    for alg in first_episode.keys() {
        let est: Vec<(f64, f64)> = selected
            .iter()
            .filter(|r| r.algorithm == *alg)
            .map(|r| (r.t as f64, r.phi_est_deg))
            .collect();
        trace.push(Series::line(format!("{alg} estimate"), est));
        let pilots: Vec<(f64, f64)> = selected
            .iter()
            .filter(|r| r.algorithm == *alg && r.action == "P")
            .map(|r| (r.t as f64, r.phi_est_deg))
            .collect();
        trace.push(Series::markers(format!("{alg} pilot slots"), pilots));
    }
    vec![("gain", gain), ("trace", trace)]
}

/// Overhead / gain / spectral-efficiency curves against the swept value.
fn sweep_figures(rows: &[output::SweepRow]) -> Vec<(&'static str, Figure)> {
    let axis = rows[0].axis.clone();
    // log-x when values span decades
    let min = rows.iter().map(|r| r.value).fold(f64::INFINITY, f64::min);
    let max = rows.iter().map(|r| r.value).fold(0.0f64, f64::max);
    let log_x = min > 0.0 && max / min >= 50.0;
    let xlabel = if log_x {
        format!("log10({axis})")
    } else {
        axis.clone()
    };
    let tx = |v: f64| if log_x { v.log10() } else { v };

    let mut algorithms: Vec<String> = Vec::new();
    for r in rows {
        if !algorithms.contains(&r.algorithm) {
            algorithms.push(r.algorithm.clone());
        }
    }

    let build = |title: &str, ylabel: &str, get: &dyn Fn(&output::SweepRow) -> f64| {
        let mut fig = Figure::new(title, xlabel.as_str(), ylabel);
        for alg in &algorithms {
            let mut pts: Vec<(f64, f64)> = rows
                .iter()
                .filter(|r| &r.algorithm == alg)
                .map(|r| (tx(r.value), get(r)))
                .collect();
            pts.sort_by(|a, b| a.0.partial_cmp(&b.0).unwrap());
            fig.push(Series::line(alg.clone(), pts));
        }
        fig
    };

    vec![
        (
            "overhead",
            build("pilot overhead", "pilot slots per episode", &|r| {
                r.pilot_overhead_mean
            }),
        ),
        (
            "gain",
            build("mean normalized gain", "normalized gain", &|r| r.gain_mean),
        ),
        (
            "se",
            build("mean spectral efficiency", "bits/s/Hz", &|r| r.se_mean),
        ),
    ]
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::config::ExperimentConfig;
    use crate::sim::{run_episode_as, SimContext};

    #[test]
    fn episode_figures_label_every_algorithm_in_the_file() {
        let mut cfg = ExperimentConfig::default();
        cfg.policy.mi_table_points = 21;
        cfg.run.horizon = 20;
        let ctx = SimContext::new(cfg).unwrap();
        let logs = vec![
            run_episode_as(&ctx, Algorithm::Proposed, 0),
            run_episode_as(&ctx, Algorithm::ScanWide, 0),
        ];
        let mut buf = Vec::new();
        output::write_episode_csv(&mut buf, &ctx.cfg, &logs).unwrap();
        let dir = std::env::temp_dir().join("beamtrack_cli_unit");
        std::fs::create_dir_all(&dir).unwrap();
        let path = dir.join("two_algs.csv");
        std::fs::write(&path, &buf).unwrap();

        let rows = output::read_episode_csv(&path).unwrap();
        let figs = episode_figures(&rows);
        assert_eq!(figs.len(), 2);
        for (_, fig) in figs {
            let svg = fig.render();
            assert!(svg.contains("proposed"), "missing proposed series");
            assert!(svg.contains("scan-wide"), "missing scan-wide series");
        }
    }
}
