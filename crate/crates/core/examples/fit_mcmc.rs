//! Whitened pCN posterior sampling and the posterior-mean estimate.
//!
//! ```bash
//! cargo run --release --example fit_mcmc
//! ```

use besov_classify::inference::{posterior_mean, run_pcn, ChainOptions};
use besov_classify::model::{make_truth, simulate, DesignCache, MuSpec, TruthName, TruthParams};
use besov_classify::prior::PriorSpec;
use besov_classify::wavelet::{build_basis, Family};

fn main() -> besov_classify::Result<()> {
    let truth = make_truth(TruthName::SpikyPiecewiseLinear, &TruthParams::default_for(1))?;
    let n = 1024;
    let data = simulate(&truth, &MuSpec::Uniform, n, 5)?;
    let level = PriorSpec::default_level(n, 1);
    let basis = build_basis(Family::Daubechies(2), 1, level)?;
    let cache = DesignCache::build(&basis, &data)?;
    let prior = PriorSpec::laplace(1.5, 1, n, level)?;

    let opts = ChainOptions {
        n_iters: 20_000,
        burn_in: 5_000,
        seed: 1,
        ..ChainOptions::default()
    };
    let chain = run_pcn(&data, &cache, &prior, &opts)?;
    println!(
        "{} draws, acceptance {:.3}, step {:.4}, started at MAP: {}",
        chain.n_draws, chain.acceptance_rate, chain.step, chain.started_at_map
    );

    let pm = posterior_mean(&chain, &basis)?;
    for k in 0..=10 {
        let x = k as f64 / 10.0;
        let i = ((x * basis.grid_size() as f64) as usize).min(basis.grid_size() - 1);
        println!("x={x:.1}: posterior mean {:.3}, truth {:.3}", pm.grid[i], truth.prob(&[x])?);
    }
    Ok(())
}
