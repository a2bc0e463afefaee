//! One-step posterior prediction kernels of the three mobility models.
//!
//!     cargo run --example mobility_kernels

use beamtrack::codebook::AngularGrid;
use beamtrack::mobility::{
    gaussian_kernel, predict_bernoulli, predict_gaussian, predict_predictable,
};
use beamtrack::posterior::Posterior;

fn show(label: &str, post: &Posterior, around: usize) {
    let lo = around.saturating_sub(4);
    let hi = (around + 5).min(post.len());
    print!("{label:<26}");
    for i in lo..hi {
        print!(" {:5.3}", post.probs()[i]);
    }
    println!("   Σ = {:.12}", post.probs().iter().sum::<f64>());
}

fn main() {
    let grid = AngularGrid::default();
    let mut probs = vec![0.0; 64];
    probs[30] = 1.0;
    let point = Posterior::from_probs(probs).unwrap();

    println!("point mass at bin 30, bins 26..34 after one prediction step:\n");
    show("identity (ν = 0)", &predict_predictable(&point, 0.0), 30);
    show("velocity ν = 1", &predict_predictable(&point, 1.0), 30);
    show("velocity ν = 0.1", &predict_predictable(&point, 0.1), 30);
    show("velocity ν = -1.6", &predict_predictable(&point, -1.6), 30);
    show(
        "gaussian σ_φ² = 0.75 deg²",
        &predict_gaussian(&point, 0.75, &grid),
        30,
    );
    show(
        "jump β = 2, p = 0.01",
        &predict_bernoulli(&point, 2, 0.01),
        30,
    );

    let k = gaussian_kernel(0.75, &grid);
    println!(
        "\nquantized gaussian step kernel (σ_φ ≈ {:.3}°, δ = {:.4}°):",
        0.75f64.sqrt(),
        grid.delta_deg()
    );
    let half = (k.len() - 1) / 2;
    for (j, w) in k.iter().enumerate() {
        println!("  offset {:+}: {w:.6}", j as i64 - half as i64);
    }
    println!("\nevery kernel conserves probability mass exactly (circular wrap).");
}
