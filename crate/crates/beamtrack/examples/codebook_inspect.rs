//! Hierarchy and gain statistics of the beamforming codebook.
//!
//!     cargo run --example codebook_inspect

use beamtrack::codebook::{build_codebook, ideal_gain, AngularGrid, CodebookMode};
use beamtrack::geometry::ArrayConfig;

fn main() {
    let cfg = ArrayConfig::default();
    let grid = AngularGrid::default();
    let cb = build_codebook(&cfg, &grid, CodebookMode::PseudoInverse).unwrap();

    println!(
        "codebook: {} levels, {} beams, grid Δ={} over [{}, {}] deg",
        cb.levels,
        cb.n_beams(),
        grid.n_bins,
        grid.min_deg,
        grid.max_deg
    );
    println!("condition number of A Aᴴ: {:.3e}\n", cb.condition_number);
    println!("level  beams  bins/beam  |G_l|² ideal   mean in-cov |g|²   in/out power ratio");
    for level in 1..=cb.levels {
        let mut mean_in = 0.0;
        let mut mean_out = 0.0;
        for k in 0..cb.n_beams_in_level(level) {
            let beam = cb.beam(level, k);
            let (mut i_sum, mut o_sum) = (0.0, 0.0);
            for (i, g) in beam.bin_gains.iter().enumerate() {
                if beam.covers_bin(i) {
                    i_sum += g.norm_sqr();
                } else {
                    o_sum += g.norm_sqr();
                }
            }
            mean_in += i_sum / beam.n_covered() as f64;
            mean_out += o_sum / (grid.n_bins - beam.n_covered()) as f64;
        }
        let n = cb.n_beams_in_level(level) as f64;
        println!(
            "{level:>5}  {:>5}  {:>9}  {:>12.5}  {:>16.5}  {:>18.1}",
            cb.n_beams_in_level(level),
            grid.n_bins >> level,
            ideal_gain(level, &grid).powi(2),
            mean_in / n,
            (mean_in / n) / (mean_out / n)
        );
    }
}
