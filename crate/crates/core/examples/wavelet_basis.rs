//! Build a Daubechies basis, check orthonormality on the grid and round-trip a function.
//!
//! ```bash
//! cargo run --example wavelet_basis
//! ```

use besov_classify::wavelet::{build_basis_with_grid, Family};

fn main() -> besov_classify::Result<()> {
    // a grid of 2^{L+1} points makes the sampled transform exactly invertible
    let basis = build_basis_with_grid(Family::Daubechies(2), 1, 6, 7)?;
    println!(
        "{}: {} coefficients ({} wavelets), grid of {} points",
        basis.family(),
        basis.len(),
        basis.layout().wavelet_count(),
        basis.grid_size()
    );

    let samples: Vec<f64> = (0..basis.grid_size())
        .map(|i| {
            let x = basis.grid_point(i)[0];
            (6.0 * x).sin() + if x > 0.6 { 1.0 } else { 0.0 }
        })
        .collect();
    let coeffs = basis.forward_transform(&samples)?;
    let back = basis.inverse_transform(&coeffs)?;
    let err = samples.iter().zip(&back).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
    println!("round trip error {err:.2e}");

    for l in 0..=6 {
        let energy: f64 = coeffs.level(l).iter().map(|v| v * v).sum();
        println!("level {l}: {:>3} coefficients, energy {energy:.3e}", coeffs.level(l).len());
    }

    let x = [0.3];
    println!("psi(3, 2) at x = 0.3: {:.5}", basis.evaluate_basis(3, 2, &x)?);
    println!("synthesis at x = 0.3: {:.5}", basis.synthesize_at(&coeffs, &x)?);
    Ok(())
}
