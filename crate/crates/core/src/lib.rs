//! Nonparametric Bayesian binary classification with Besov-Laplace priors.
//!
//! The latent surface `w` is a truncated wavelet series with independent,
//! level-scaled Laplace coefficients, and class probabilities are
//! `f = H(w)` for the logistic link `H`. The crate provides
//!
//! * [`wavelet`]: periodised Haar / Daubechies bases on `[0,1]^d`, fast
//!   transforms and pointwise synthesis;
//! * [`prior`]: rescaled Laplace and Gaussian series priors, Besov norms and
//!   small-ball diagnostics;
//! * [`link`]: the logistic link;
//! * [`model`]: ground truths, data simulation, log-likelihood and gradient;
//! * [`inference`]: MAP estimation by proximal gradient and posterior sampling
//!   by whitened preconditioned Crank-Nicolson;
//! * [`experiment`]: contraction-rate studies and prior comparisons;
//! * [`cli`]: the JSON-configured batch runner behind the `besov` binary.

pub mod cli;
pub mod error;
pub mod experiment;
pub mod inference;
pub mod io;
pub mod link;
pub mod model;
pub mod plot;
pub mod prior;
pub mod rng;
pub mod wavelet;

pub use error::{Error, Result};
