use rand::Rng as _;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use super::map::solve;
use super::{transport, transport_inverse, MapOptions, Target};
use crate::error::{Error, Result};
use crate::link::logistic;
use crate::model::{Dataset, DesignCache};
use crate::prior::PriorSpec;
use crate::rng::rng_for;
use crate::wavelet::{CoefficientVector, WaveletBasis};

const STEP_MIN: f64 = 1e-6;
const STEP_MAX: f64 = 0.999;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ChainStart {
    /// Posterior mode, or zero when the optimiser does not converge.
    Map,
    Zero,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ChainOptions {
    pub n_iters: usize,
    pub burn_in: usize,
    pub thin: usize,
    /// Proposal size in `(0, 1)`.
    pub step: f64,
    /// Tune the step toward `target_accept` during burn-in, then freeze it.
    pub adapt: bool,
    pub target_accept: f64,
    pub seed: u64,
    pub start: ChainStart,
    /// Optimiser settings for [`ChainStart::Map`].
    pub map: MapOptions,
    /// Keep every thinned draw; otherwise only the running mean is stored.
    pub keep_draws: bool,
}

impl Default for ChainOptions {
    fn default() -> Self {
        ChainOptions {
            n_iters: 50_000,
            burn_in: 10_000,
            thin: 10,
            step: 0.2,
            adapt: true,
            target_accept: 0.3,
            seed: 0,
            start: ChainStart::Map,
            map: MapOptions::default(),
            keep_draws: true,
        }
    }
}

impl ChainOptions {
    pub fn validate(&self) -> Result<()> {
        if !(self.step > 0.0 && self.step < 1.0) {
            return Err(Error::config(
                "inference",
                "step",
                format!("must lie in (0, 1), got {}", self.step),
            ));
        }
        if self.burn_in >= self.n_iters {
            return Err(Error::config(
                "inference",
                "burn_in",
                format!("must be below n_iters ({} >= {})", self.burn_in, self.n_iters),
            ));
        }
        if self.thin == 0 {
            return Err(Error::config("inference", "thin", "must be at least 1"));
        }
        if !(self.target_accept > 0.0 && self.target_accept < 1.0) {
            return Err(Error::config("inference", "target_accept", "must lie in (0, 1)"));
        }
        self.map.validate()
    }
}

#[derive(Clone, Debug)]
pub struct ChainResult {
    /// Thinned post-burn-in draws; empty unless `keep_draws` was set.
    pub draws: Vec<CoefficientVector>,
    pub n_draws: usize,
    /// Coefficient-wise average of the thinned draws.
    pub mean: CoefficientVector,
    /// Acceptance rate after burn-in.
    pub acceptance_rate: f64,
    pub burn_in_acceptance: f64,
    /// Proposal size used after burn-in.
    pub step: f64,
    /// Log posterior density at each thinned draw.
    pub log_posterior: Vec<f64>,
    /// No proposal was accepted after burn-in.
    pub all_rejected: bool,
    /// Whether the chain started from a converged MAP estimate.
    pub started_at_map: bool,
}

impl ChainResult {
    pub fn is_empty(&self) -> bool {
        self.n_draws == 0
    }
}

/// Whitened pCN chain, started as `opts.start` requests.
pub fn run_pcn(data: &Dataset, cache: &DesignCache, prior: &PriorSpec, opts: &ChainOptions) -> Result<ChainResult> {
    opts.validate()?;
    let target = Target::new(data, cache, prior)?;
    let (start, at_map) = match opts.start {
        ChainStart::Zero => (vec![0.0; target.dim()], false),
        ChainStart::Map => {
            let solved = solve(&target, &opts.map, vec![0.0; target.dim()]);
            if solved.converged {
                (solved.beta, true)
            } else {
                (vec![0.0; target.dim()], false)
            }
        }
    };
    chain(&target, cache, prior, opts, start, at_map)
}

/// Whitened pCN chain from an explicit starting point; `opts.start` is ignored.
pub fn run_pcn_from(
    data: &Dataset,
    cache: &DesignCache,
    prior: &PriorSpec,
    opts: &ChainOptions,
    start: &CoefficientVector,
) -> Result<ChainResult> {
    opts.validate()?;
    let target = Target::new(data, cache, prior)?;
    if start.layout() != cache.layout() {
        return Err(Error::shape(
            "inference",
            "start matching the design cache",
            "a different layout",
        ));
    }
    chain(&target, cache, prior, opts, cache.gather(start), false)
}

fn chain(
    target: &Target<'_>,
    cache: &DesignCache,
    prior: &PriorSpec,
    opts: &ChainOptions,
    start: Vec<f64>,
    started_at_map: bool,
) -> Result<ChainResult> {
    let m = target.dim();
    let n = target.n_obs();
    let family = target.family;
    let scales = &target.scales;
    let mut rng = rng_for(opts.seed, 0);

    let mut xi: Vec<f64> = start
        .iter()
        .zip(scales)
        .map(|(&b, &s)| transport_inverse(family, b / s))
        .collect();
    let mut beta: Vec<f64> = xi.iter().zip(scales).map(|(&x, &s)| s * transport(family, x)).collect();
    let mut w = vec![0.0; n];
    let mut ll = target.loglik(&beta, &mut w);
    let log_norm = target.log_prior_norm();

    let mut xi_new = vec![0.0; m];
    let mut beta_new = vec![0.0; m];
    let mut w_new = vec![0.0; n];
    let mut sum = vec![0.0; m];
    let mut draws = Vec::new();
    let mut log_posterior = Vec::new();
    let mut n_draws = 0;
    let mut accepted_burn = 0usize;
    let mut accepted_main = 0usize;
    let mut step = opts.step;

    for it in 0..opts.n_iters {
        let rho = (1.0 - step * step).sqrt();
        for j in 0..m {
            let z: f64 = rng.sample(StandardNormal);
            xi_new[j] = rho * xi[j] + step * z;
            beta_new[j] = scales[j] * transport(family, xi_new[j]);
        }
        let ll_new = target.loglik(&beta_new, &mut w_new);
        let log_ratio = ll_new - ll;
        let u: f64 = rng.random();
        let accept = log_ratio >= 0.0 || u < log_ratio.exp();
        if accept {
            std::mem::swap(&mut xi, &mut xi_new);
            std::mem::swap(&mut beta, &mut beta_new);
            std::mem::swap(&mut w, &mut w_new);
            ll = ll_new;
        }
        if it < opts.burn_in {
            accepted_burn += usize::from(accept);
            if opts.adapt {
                let gain = 1.0 / ((it + 1) as f64).powf(0.6);
                let a = if accept { 1.0 } else { 0.0 };
                step = (step.ln() + gain * (a - opts.target_accept))
                    .exp()
                    .clamp(STEP_MIN, STEP_MAX);
            }
            continue;
        }
        accepted_main += usize::from(accept);
        if (it - opts.burn_in + 1) % opts.thin == 0 {
            n_draws += 1;
            for (s, b) in sum.iter_mut().zip(&beta) {
                *s += b;
            }
            log_posterior.push(ll - target.penalty(&beta) + log_norm);
            if opts.keep_draws {
                draws.push(cache.scatter(&beta)?.with_alpha(prior.alpha));
            }
        }
    }

    let main_iters = opts.n_iters - opts.burn_in;
    let mean_active: Vec<f64> = if n_draws == 0 {
        vec![0.0; m]
    } else {
        sum.iter().map(|s| s / n_draws as f64).collect()
    };
    Ok(ChainResult {
        draws,
        n_draws,
        mean: cache.scatter(&mean_active)?.with_alpha(prior.alpha),
        acceptance_rate: accepted_main as f64 / main_iters as f64,
        burn_in_acceptance: if opts.burn_in == 0 {
            0.0
        } else {
            accepted_burn as f64 / opts.burn_in as f64
        },
        step,
        log_posterior,
        all_rejected: accepted_main == 0,
        started_at_map,
    })
}

/// Posterior-mean estimate: the averaged latent coefficients and the link
/// applied to their synthesis on the basis grid.
#[derive(Clone, Debug)]
pub struct PosteriorMean {
    pub coefficients: CoefficientVector,
    /// `H(sum_lr mean_lr psi_lr)` at every basis grid point.
    pub grid: Vec<f64>,
}

pub fn posterior_mean(chain: &ChainResult, basis: &WaveletBasis) -> Result<PosteriorMean> {
    if chain.is_empty() {
        return Err(Error::usage("inference", "posterior mean of an empty chain"));
    }
    let latent = basis.inverse_transform(&chain.mean)?;
    Ok(PosteriorMean {
        coefficients: chain.mean.clone(),
        grid: latent.into_iter().map(logistic).collect(),
    })
}
