//! Laplace versus Gaussian priors on the spiky truth, same data for both.
//!
//! ```bash
//! cargo run --release --example compare_priors
//! ```

use besov_classify::experiment::{compare_priors, Estimator, RateStudyConfig};
use besov_classify::model::{make_truth, TruthName, TruthParams};

fn main() -> besov_classify::Result<()> {
    let truth = make_truth(TruthName::SpikyPiecewiseLinear, &TruthParams::default_for(1))?;
    let cfg = RateStudyConfig {
        n_grid: vec![256, 1024, 4096],
        replicates: 5,
        estimator: Estimator::Map,
        ..RateStudyConfig::new(truth)
    };
    let cmp = compare_priors(&cfg)?;
    for row in &cmp.rows {
        println!("n={:>5} {:<9?} median {:.5}", row.n, row.family, row.median);
    }
    let (laplace, gaussian) = cmp.slopes();
    println!("slopes: Laplace {laplace:.3}, Gaussian {gaussian:.3}");
    Ok(())
}
