//! Recovery from sudden angular jumps.
//!
//! Under Bernoulli jumps the prediction kernel parks a little belief mass
//! at the jump target every slot, so when a jump fires the tracker only
//! needs a couple of observations to move over — no re-estimation sweep.
//!
//!     cargo run --release --example jump_recovery

use beamtrack::config::{ExperimentConfig, MobilityKind};
use beamtrack::sim::{run_episode_as, Algorithm, SimContext};

fn recovery_slots(log: &beamtrack::sim::EpisodeLog) -> Vec<usize> {
    let mut out = Vec::new();
    let records = &log.records;
    for (i, r) in records.iter().enumerate() {
        if r.jumped {
            let rec = records[i..]
                .iter()
                .position(|x| x.gain_norm > 0.5)
                .unwrap_or(records.len() - i);
            out.push(rec);
        }
    }
    out
}

fn main() {
    let mut cfg = ExperimentConfig::default();
    cfg.mobility.model = MobilityKind::BernoulliJump; // β = 2 bins, p = 0.01
    cfg.run.episodes = 40;
    let ctx = SimContext::new(cfg).unwrap();

    println!("slots until normalized gain recovers above 0.5 after each jump");
    println!("(β = 2 bins ≈ 5.6°, p = 0.01, 10 dB, 40 episodes of 500 slots)\n");
    for alg in Algorithm::ALL {
        let mut recoveries = Vec::new();
        for ep in 0..ctx.cfg.run.episodes as u64 {
            recoveries.extend(recovery_slots(&run_episode_as(&ctx, alg, ep)));
        }
        recoveries.sort_unstable();
        if recoveries.is_empty() {
            println!("{:<16} no jumps observed", alg.label());
            continue;
        }
        let median = recoveries[recoveries.len() / 2];
        let p90 = recoveries[(recoveries.len() * 9) / 10];
        println!(
            "{:<16} {} jumps, median {median:3} slots, p90 {p90:3} slots",
            alg.label(),
            recoveries.len()
        );
    }
}
