//! A reduced contraction-rate study with the MAP estimator.
//!
//! Swap in `Estimator::PosteriorMean` and the default grid for the full study.
//!
//! ```bash
//! cargo run --release --example rate_study
//! ```

use besov_classify::experiment::{reference_slope, run_rate_study, Estimator, RateStudyConfig};
use besov_classify::model::{make_truth, TruthName, TruthParams};

fn main() -> besov_classify::Result<()> {
    let truth = make_truth(TruthName::SpikyPiecewiseLinear, &TruthParams::default_for(1))?;
    let cfg = RateStudyConfig {
        n_grid: vec![256, 1024, 4096, 16384],
        replicates: 5,
        estimator: Estimator::Map,
        ..RateStudyConfig::new(truth)
    };
    let study = run_rate_study(&cfg)?;
    println!("{:>6} {:>9} {:>9} {:>7}", "n", "median", "rate", "ratio");
    for s in &study.summary {
        println!("{:>6} {:>9.5} {:>9.5} {:>7.3}", s.n, s.median, s.rate_ref, s.ratio);
    }
    println!(
        "fitted slope {:.3} (R^2 {:.3}), reference {}",
        study.fit.slope,
        study.fit.r2,
        reference_slope(cfg.alpha, 1)
    );
    Ok(())
}
