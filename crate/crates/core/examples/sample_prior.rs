//! Draw from the rescaled Besov-Laplace prior and its Gaussian counterpart.
//!
//! ```bash
//! cargo run --example sample_prior -- 2.0 1024
//! ```

use besov_classify::prior::{besov_norm, prior_scales, sample_prior, BesovNormQuery, PriorFamily, PriorSpec};
use besov_classify::wavelet::{build_basis, Family};

fn main() -> besov_classify::Result<()> {
    let mut args = std::env::args().skip(1);
    let alpha: f64 = args.next().and_then(|a| a.parse().ok()).unwrap_or(1.5);
    let n: usize = args.next().and_then(|a| a.parse().ok()).unwrap_or(1024);
    let level = PriorSpec::default_level(n, 1);
    let basis = build_basis(Family::Haar, 1, level)?;

    for family in [PriorFamily::Laplace, PriorFamily::Gaussian] {
        let spec = PriorSpec::new(family, alpha, 1, n, level)?;
        let draw = sample_prior(&spec, &basis, 7)?;
        let grid = basis.inverse_transform(&draw)?;
        let sup = grid.iter().fold(0.0f64, |m, v| m.max(v.abs()));
        let q = BesovNormQuery::new(alpha - 1.0 - 0.25, 1.0, 1.0, 1);
        println!(
            "{family:?}: L={level}, rescaling {:.4}, sup norm {sup:.4}, B^{:.2}_11 norm {:.4}",
            spec.rescaling(),
            q.alpha,
            besov_norm(&draw, &q)?
        );
    }

    let spec = PriorSpec::laplace(alpha, 1, n, level)?;
    let scales = prior_scales(&spec)?;
    let layout = spec.layout()?;
    for l in 0..=level.min(5) {
        println!("scale at level {l}: {:.5}", scales[layout.offset(l)]);
    }
    Ok(())
}
