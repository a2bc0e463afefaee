//! Render the gain-over-time and AoA-trace figures for one episode of the
//! proposed tracker and the EKF reference, straight to SVG.
//!
//!     cargo run --release --example plot_episode
//!
//! Writes out/examples/episode_gain.svg and out/examples/episode_trace.svg.

use beamtrack::config::ExperimentConfig;
use beamtrack::policy::Action;
use beamtrack::sim::{run_episode_as, Algorithm, SimContext};
use beamtrack::svg::{Figure, Series};

fn main() {
    let mut cfg = ExperimentConfig::default();
    cfg.run.horizon = 300;
    let ctx = SimContext::new(cfg).unwrap();

    let mut gain = Figure::new(
        "normalized beamforming gain, gaussian mobility at 10 dB",
        "beamforming slot",
        "normalized gain",
    );
    let mut trace = Figure::new(
        "AoA trace with pilot slots marked",
        "beamforming slot",
        "angle (deg)",
    );
    gain.comment = ctx.cfg.resolved_toml();
    trace.comment = gain.comment.clone();

    let mut truth_added = false;
    for alg in [Algorithm::Proposed, Algorithm::Ekf] {
        let log = run_episode_as(&ctx, alg, 0);
        gain.push(Series::line(
            alg.label(),
            log.records
                .iter()
                .map(|r| (r.t as f64, r.gain_norm))
                .collect(),
        ));
        if !truth_added {
            trace.push(Series::line(
                "true AoA",
                log.records
                    .iter()
                    .map(|r| (r.t as f64, r.phi_true_deg))
                    .collect(),
            ));
            truth_added = true;
        }
        trace.push(Series::line(
            format!("{} estimate", alg.label()),
            log.records
                .iter()
                .map(|r| (r.t as f64, r.phi_est_deg))
                .collect(),
        ));
        trace.push(Series::markers(
            format!("{} pilots", alg.label()),
            log.records
                .iter()
                .filter(|r| r.action == Action::Pilot)
                .map(|r| (r.t as f64, r.phi_est_deg))
                .collect(),
        ));
    }

    std::fs::create_dir_all("out/examples").unwrap();
    std::fs::write("out/examples/episode_gain.svg", gain.render()).unwrap();
    std::fs::write("out/examples/episode_trace.svg", trace.render()).unwrap();
    println!("wrote out/examples/episode_gain.svg and out/examples/episode_trace.svg");
}
