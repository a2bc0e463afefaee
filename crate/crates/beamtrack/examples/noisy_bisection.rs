//! Posterior-matching bisection on a static AoA.
//!
//! With an ideal codebook and negligible noise, every slot halves the set
//! of candidate bins: the belief walks down the hierarchy until it is a
//! point mass on the true bin.
//!
//!     cargo run --example noisy_bisection

use beamtrack::codebook::{build_codebook, coverage_probability, AngularGrid, CodebookMode};
use beamtrack::geometry::{pilot_observation_from_gain, ArrayConfig};
use beamtrack::policy::select_beam_hiepm;
use beamtrack::posterior::{bayes_update, map_estimate, Posterior};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn main() {
    let cfg = ArrayConfig::default();
    let grid = AngularGrid::default();
    let cb = build_codebook(&cfg, &grid, CodebookMode::Ideal).unwrap();
    let sigma_sq = 1e-9;
    let true_phi = -118.7;
    let true_bin = grid.bin_of(true_phi);
    let mut rng = ChaCha8Rng::seed_from_u64(42);

    println!("true AoA {true_phi}° (bin {true_bin}); pilots through posterior-matched beams\n");
    let mut belief = Posterior::uniform(grid.n_bins);
    for t in 1..=10 {
        let (level, index) = select_beam_hiepm(&belief, &cb);
        let beam = cb.beam(level, index);
        let pi_w = coverage_probability(&belief, beam);
        let obs = pilot_observation_from_gain(cb.response(beam, true_phi), sigma_sq, &mut rng);
        belief = bayes_update(&belief, &obs, beam, sigma_sq);
        let support = belief.probs().iter().filter(|&&p| p > 1e-6).count();
        println!(
            "slot {t:2}: beam (l={level}, k={index:2}), coverage {pi_w:.3} → \
             {support:2} candidate bins, MAP {:+8.2}°, true-bin mass {:.4}",
            map_estimate(&belief, &grid),
            belief.probs()[true_bin]
        );
        if belief.probs()[true_bin] > 0.999 {
            println!(
                "\nconverged after {t} slots (log₂ Δ = {} is the floor)",
                cb.levels
            );
            break;
        }
    }
}
