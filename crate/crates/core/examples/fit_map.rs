//! MAP estimate under the Laplace prior, i.e. weighted l1 logistic regression.
//!
//! ```bash
//! cargo run --release --example fit_map
//! ```

use besov_classify::experiment::l2_error;
use besov_classify::inference::{map_estimate, MapOptions};
use besov_classify::link::logistic;
use besov_classify::model::{make_truth, midpoints, simulate, DesignCache, MuSpec, TruthName, TruthParams};
use besov_classify::prior::PriorSpec;
use besov_classify::wavelet::{build_basis, Family};

fn main() -> besov_classify::Result<()> {
    let truth = make_truth(TruthName::SpikyPiecewiseLinear, &TruthParams::default_for(1))?;
    let points = midpoints(1, 12);
    let f0: Vec<f64> = points.iter().map(|x| truth.prob(x)).collect::<Result<_, _>>()?;

    for n in [256, 1024, 4096, 16384] {
        let data = simulate(&truth, &MuSpec::Uniform, n, 3)?;
        let level = PriorSpec::default_level(n, 1);
        let basis = build_basis(Family::Daubechies(2), 1, level)?;
        let cache = DesignCache::build(&basis, &data)?;
        let prior = PriorSpec::laplace(1.5, 1, n, level)?;
        let fit = map_estimate(&data, &cache, &prior, &MapOptions::default())?;
        let nonzero = fit.coeffs.values().iter().filter(|v| **v != 0.0).count();
        let f_hat: Vec<f64> = points
            .iter()
            .map(|x| basis.synthesize_at(&fit.coeffs, x).map(logistic))
            .collect::<Result<_, _>>()?;
        println!(
            "n={n:>5}: {} iterations, {nonzero}/{} nonzero, L2 error {:.4}",
            fit.iterations,
            basis.len(),
            l2_error(&f_hat, &f0, 12, 1)?
        );
    }
    Ok(())
}
