//! Steering vectors and beam responses of the half-wavelength ULA.
//!
//! Prints the response pattern of one pseudo-inverse beam across the grid
//! and contrasts it with the ideal constant-gain abstraction.
//!
//!     cargo run --example steering_patterns

use beamtrack::codebook::{build_codebook, AngularGrid, CodebookMode};
use beamtrack::geometry::{steering_vector, ArrayConfig};

fn main() {
    let cfg = ArrayConfig::default();
    let grid = AngularGrid::default();

    let a = steering_vector(&cfg, -45.0).unwrap();
    let norm: f64 = a.iter().map(|c| c.norm_sqr()).sum();
    println!(
        "steering vector at -45°: {} elements, ‖a‖² = {norm:.12}, first entries:",
        a.len()
    );
    for (n, e) in a.iter().take(4).enumerate() {
        println!(
            "  n={n}: {:+.4} {:+.4}i  (phase {:+.4} rad)",
            e.re,
            e.im,
            e.arg()
        );
    }

    let pinv = build_codebook(&cfg, &grid, CodebookMode::PseudoInverse).unwrap();
    let ideal = build_codebook(&cfg, &grid, CodebookMode::Ideal).unwrap();
    let beam = pinv.beam(3, 4); // covers bins 32..40
    let ideal_beam = ideal.beam(3, 4);
    println!(
        "\nlevel-3 beam #4 ({} bins covered), power gain per bin (| = covered):",
        beam.n_covered()
    );
    for bin in 0..grid.n_bins {
        let g = beam.bin_gains[bin].norm_sqr();
        let gi = ideal_beam.bin_gains[bin].norm_sqr();
        let bar = "#".repeat((g * 200.0).round() as usize);
        let mark = if beam.covers_bin(bin) { '|' } else { ' ' };
        println!(
            "  bin {bin:2} ({:7.2}°) {mark} {g:.4} vs ideal {gi:.4} {bar}",
            grid.bin_center(bin)
        );
    }
    println!(
        "\ncondition number of the design Gram matrix: {:.3e}",
        pinv.condition_number
    );
}
