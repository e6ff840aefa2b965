//! Monte Carlo small-ball probabilities of the non-rescaled prior.
//!
//! ```bash
//! cargo run --release --example small_ball
//! ```

use besov_classify::prior::{small_ball_curve, PriorSpec};
use besov_classify::wavelet::{build_basis, Family};

fn main() -> besov_classify::Result<()> {
    let alpha = 2.0;
    let spec = PriorSpec::laplace(alpha, 1, 1, 8)?;
    let basis = build_basis(Family::Haar, 1, 8)?;
    let eps = [0.5, 1.0, 2.0, 4.0];
    let curve = small_ball_curve(&spec, &basis, &eps, 100_000, 3)?;
    // -log p should grow like eps^{-d/(alpha-d)}
    for e in &curve {
        println!(
            "eps {:>4}: p {:.5} +- {:.5}, -log p {:>7.3}, eps^-1 {:.3}",
            e.epsilon,
            e.p_hat,
            e.stderr,
            -e.p_hat.ln(),
            e.epsilon.powf(-1.0 / (alpha - 1.0))
        );
    }
    Ok(())
}
