//! Proposed tracker versus the reference trackers under all three mobility
//! models (common random numbers: identical AoA trajectories per episode).
//!
//!     cargo run --release --example compare_trackers

use beamtrack::config::{ExperimentConfig, MobilityKind};
use beamtrack::sim::{run_monte_carlo_as, Algorithm, SimContext};

fn main() {
    let mut base = ExperimentConfig::default();
    base.run.episodes = 50;

    for (name, adjust) in [
        (
            "predictable velocity ν = 0.1",
            Box::new(|c: &mut ExperimentConfig| {
                c.mobility.model = MobilityKind::Predictable;
            }) as Box<dyn Fn(&mut ExperimentConfig)>,
        ),
        (
            "gaussian drift σ_φ² = 0.75 deg²",
            Box::new(|c: &mut ExperimentConfig| {
                c.mobility.model = MobilityKind::Gaussian;
            }),
        ),
        (
            "bernoulli jumps β = 2 bins, p = 0.01",
            Box::new(|c: &mut ExperimentConfig| {
                c.mobility.model = MobilityKind::BernoulliJump;
            }),
        ),
    ] {
        let mut cfg = base.clone();
        adjust(&mut cfg);
        let ctx = SimContext::new(cfg).unwrap();
        println!("== {name} (10 dB, γ = 0.03, T = 500, 50 episodes) ==");
        println!("algorithm         pilot slots   mean gain        mean SE   first data");
        for alg in Algorithm::ALL {
            let (_, s) = run_monte_carlo_as(&ctx, alg);
            println!(
                "{:<16}  {:7.1}       {:.3} ± {:.3}   {:6.3}      {:6.1}",
                alg.label(),
                s.pilot_overhead.mean,
                s.mean_normalized_gain.mean,
                s.mean_normalized_gain.se,
                s.mean_se_bits.mean,
                s.time_to_first_data.mean
            );
        }
        println!();
    }
}
