//! Posterior inference for the logistic wavelet model.
//!
//! * [`map_estimate`]: posterior mode, a weighted-l1 (Laplace) or weighted
//!   ridge (Gaussian) penalised logistic regression solved by proximal
//!   gradient with optional momentum, finished by a Newton step on the
//!   support.
//! * [`run_pcn`]: preconditioned Crank-Nicolson on the whitened latent
//!   `xi`, where `beta_lr = s_lr G(xi_lr)` and `G` transports N(0,1) onto
//!   the standard prior law. The prior is then the image of a standard
//!   Gaussian, so pCN proposals are prior-reversible and only the
//!   likelihood enters the acceptance ratio.

mod map;
mod pcn;

pub use map::{map_estimate, MapOptions, MapResult, StepPolicy};
pub use pcn::{posterior_mean, run_pcn, run_pcn_from, ChainOptions, ChainResult, ChainStart, PosteriorMean};

use statrs::function::erf::{erf, erf_inv, erfc, erfc_inv};

use crate::error::{Error, Result};
use crate::link::logistic;
use crate::model::{loglik_from_latent, Dataset, DesignCache};
use crate::prior::{prior_scales, PriorFamily, PriorSpec};
use crate::wavelet::CoefficientVector;

/// `sign(x) max(|x| - t, 0)`; ties `|x| = t` map to zero.
pub fn soft_threshold(x: f64, t: f64) -> f64 {
    debug_assert!(t >= 0.0);
    if x > t {
        x - t
    } else if x < -t {
        x + t
    } else {
        0.0
    }
}

/// `-ln erfc(x)` for `x >= 0`, with an asymptotic tail where erfc underflows.
fn neg_ln_erfc(x: f64) -> f64 {
    if x < 0.5 {
        -(-erf(x)).ln_1p()
    } else if x < 26.0 {
        -erfc(x).ln()
    } else {
        let x2 = x * x;
        x2 + (x * std::f64::consts::PI.sqrt()).ln() - (1.0 - 0.5 / x2 + 0.75 / (x2 * x2)).ln()
    }
}

/// Laplace transport `G = F_Laplace^{-1} o Phi`, written to stay accurate
/// in both tails: `G(xi) = sign(xi) (-ln erfc(|xi| / sqrt 2))`.
pub fn laplace_transport(xi: f64) -> f64 {
    let v = neg_ln_erfc(xi.abs() * std::f64::consts::FRAC_1_SQRT_2);
    if xi < 0.0 {
        -v
    } else {
        v
    }
}

/// Inverse of [`laplace_transport`].
pub fn laplace_transport_inverse(b: f64) -> f64 {
    let a = b.abs();
    let x = if a < 0.5 {
        erf_inv(-(-a).exp_m1())
    } else if a < 700.0 {
        erfc_inv((-a).exp())
    } else {
        // Newton on the asymptotic branch of neg_ln_erfc
        let mut x = a.sqrt();
        for _ in 0..50 {
            let f = neg_ln_erfc(x) - a;
            let df = 2.0 * x + 1.0 / x;
            let step = f / df;
            x -= step;
            if step.abs() < 1e-15 * x {
                break;
            }
        }
        x
    };
    let xi = x * std::f64::consts::SQRT_2;
    if b < 0.0 {
        -xi
    } else {
        xi
    }
}

fn transport(family: PriorFamily, xi: f64) -> f64 {
    match family {
        PriorFamily::Laplace => laplace_transport(xi),
        PriorFamily::Gaussian => xi,
    }
}

fn transport_inverse(family: PriorFamily, b: f64) -> f64 {
    match family {
        PriorFamily::Laplace => laplace_transport_inverse(b),
        PriorFamily::Gaussian => b,
    }
}

/// Whitened latent `xi` with `beta = s G(xi)`; returned in the coefficient layout.
pub fn whiten(coeffs: &CoefficientVector, prior: &PriorSpec) -> Result<CoefficientVector> {
    let scales = checked_scales(coeffs, prior)?;
    let xi = coeffs
        .values()
        .iter()
        .zip(&scales)
        .map(|(&b, &s)| transport_inverse(prior.family, b / s))
        .collect();
    CoefficientVector::new(coeffs.layout(), xi)
}

/// Inverse of [`whiten`]: `beta_lr = s_lr G(xi_lr)`.
pub fn unwhiten(xi: &CoefficientVector, prior: &PriorSpec) -> Result<CoefficientVector> {
    let scales = checked_scales(xi, prior)?;
    let beta = xi
        .values()
        .iter()
        .zip(&scales)
        .map(|(&x, &s)| s * transport(prior.family, x))
        .collect();
    Ok(CoefficientVector::new(xi.layout(), beta)?.with_alpha(prior.alpha))
}

fn checked_scales(coeffs: &CoefficientVector, prior: &PriorSpec) -> Result<Vec<f64>> {
    if coeffs.layout() != prior.layout()? {
        return Err(Error::shape(
            "inference",
            format!("coefficients with d={} L={}", prior.dim, prior.max_level),
            format!("d={} L={}", coeffs.dim(), coeffs.max_level()),
        ));
    }
    prior_scales(prior)
}

/// Log-posterior restricted to the active columns of a design cache.
pub(crate) struct Target<'a> {
    cache: &'a DesignCache,
    labels: &'a [u8],
    family: PriorFamily,
    scales: Vec<f64>,
}

impl<'a> Target<'a> {
    pub(crate) fn new(data: &'a Dataset, cache: &'a DesignCache, prior: &PriorSpec) -> Result<Self> {
        prior.validate()?;
        if cache.layout() != prior.layout()? {
            return Err(Error::shape(
                "inference",
                format!("design cache with d={} L={}", prior.dim, prior.max_level),
                format!("d={} L={}", cache.layout().dim(), cache.layout().max_level()),
            ));
        }
        if cache.n_rows() != data.n() {
            return Err(Error::shape(
                "inference",
                format!("dataset of {} observations", cache.n_rows()),
                data.n(),
            ));
        }
        let all = prior_scales(prior)?;
        let scales = cache.columns().iter().map(|&i| all[i]).collect();
        Ok(Target {
            cache,
            labels: data.labels(),
            family: prior.family,
            scales,
        })
    }

    pub(crate) fn dim(&self) -> usize {
        self.scales.len()
    }

    pub(crate) fn n_obs(&self) -> usize {
        self.labels.len()
    }

    pub(crate) fn loglik(&self, beta: &[f64], w: &mut [f64]) -> f64 {
        if self.labels.is_empty() {
            return 0.0;
        }
        self.cache.latent(beta, w);
        loglik_from_latent(self.labels, w)
    }

    /// `-loglik(beta)` and its gradient `Psi^T (H(w) - y)`.
    pub(crate) fn neg_loglik_grad(&self, beta: &[f64], w: &mut [f64], resid: &mut [f64], grad: &mut [f64]) -> f64 {
        if self.labels.is_empty() {
            grad.fill(0.0);
            return 0.0;
        }
        self.cache.latent(beta, w);
        let ll = loglik_from_latent(self.labels, w);
        for ((r, &wi), &y) in resid.iter_mut().zip(w.iter()).zip(self.labels) {
            *r = logistic(wi) - y as f64;
        }
        self.cache.transpose_mul(resid, grad);
        -ll
    }

    /// Negative log prior density up to its normalising constant.
    pub(crate) fn penalty(&self, beta: &[f64]) -> f64 {
        match self.family {
            PriorFamily::Laplace => beta.iter().zip(&self.scales).map(|(b, s)| b.abs() / s).sum(),
            PriorFamily::Gaussian => beta.iter().zip(&self.scales).map(|(b, s)| 0.5 * (b / s).powi(2)).sum(),
        }
    }

    /// Log normalising constant of the prior density.
    pub(crate) fn log_prior_norm(&self) -> f64 {
        match self.family {
            PriorFamily::Laplace => -self.scales.iter().map(|s| (2.0 * s).ln()).sum::<f64>(),
            PriorFamily::Gaussian => -self
                .scales
                .iter()
                .map(|s| 0.5 * (2.0 * std::f64::consts::PI * s * s).ln())
                .sum::<f64>(),
        }
    }
}
