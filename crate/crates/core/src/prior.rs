//! Rescaled Besov-Laplace and Gaussian wavelet-series priors.
//!
//! A draw is `beta_lr = s_l * Z_lr` with `Z_lr` iid standard Laplace
//! (density `e^{-|z|}/2`) or standard Gaussian, and
//! `s_l = n^{-d/(2 alpha + d)} * 2^{-l (alpha - d/2)}`. The coarse block
//! (level 0 in [`Layout`]) shares the level-1 scale.

use std::fmt;
use std::str::FromStr;

use rand_distr::{Distribution, StandardNormal};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::rng::{open_unit, rng_for, Rng};
use crate::wavelet::{CoefficientVector, Layout, WaveletBasis};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum PriorFamily {
    Laplace,
    Gaussian,
}

impl fmt::Display for PriorFamily {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            PriorFamily::Laplace => write!(f, "laplace"),
            PriorFamily::Gaussian => write!(f, "gaussian"),
        }
    }
}

impl FromStr for PriorFamily {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "laplace" => Ok(PriorFamily::Laplace),
            "gaussian" => Ok(PriorFamily::Gaussian),
            other => Err(Error::config(
                "prior",
                "family",
                format!("unknown prior family '{other}'"),
            )),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct PriorSpec {
    pub family: PriorFamily,
    pub alpha: f64,
    pub dim: usize,
    /// Sample size driving the rescaling; `n = 1` disables it.
    pub n: usize,
    pub max_level: usize,
}

/// Hard cap on the default truncation level.
pub const MAX_DEFAULT_LEVEL: usize = 12;

impl PriorSpec {
    pub fn new(family: PriorFamily, alpha: f64, dim: usize, n: usize, max_level: usize) -> Result<Self> {
        let spec = PriorSpec {
            family,
            alpha,
            dim,
            n,
            max_level,
        };
        spec.validate()?;
        Ok(spec)
    }

    pub fn laplace(alpha: f64, dim: usize, n: usize, max_level: usize) -> Result<Self> {
        Self::new(PriorFamily::Laplace, alpha, dim, n, max_level)
    }

    pub fn validate(&self) -> Result<()> {
        if !(1..=2).contains(&self.dim) {
            return Err(Error::config("prior", "d", format!("must be 1 or 2, got {}", self.dim)));
        }
        if !self.alpha.is_finite() || self.alpha <= self.dim as f64 {
            return Err(Error::config(
                "prior",
                "alpha",
                format!("alpha must exceed d (alpha={}, d={})", self.alpha, self.dim),
            ));
        }
        if self.n == 0 {
            return Err(Error::config("prior", "n", "must be at least 1"));
        }
        if self.max_level == 0 {
            return Err(Error::config("prior", "L", "must be at least 1"));
        }
        Ok(())
    }

    /// `min(ceil(log2(n) / d), 12)`, at least 1.
    pub fn default_level(n: usize, dim: usize) -> usize {
        let lg = (n.max(2) as f64).log2() / dim as f64;
        (lg.ceil() as usize).clamp(1, MAX_DEFAULT_LEVEL)
    }

    /// `n^{-d/(2 alpha + d)}`, equal to `1 / (n eps_n^2)` for `eps_n = n^{-alpha/(2 alpha + d)}`.
    pub fn rescaling(&self) -> f64 {
        let d = self.dim as f64;
        (self.n as f64).powf(-d / (2.0 * self.alpha + d))
    }

    /// Scale `s_l`; level 0 (coarse block) uses the level-1 weight.
    pub fn level_scale(&self, level: usize) -> f64 {
        self.rescaling() * self.level_weight(level)
    }

    /// `2^{-l (alpha - d/2)}` without the sample-size rescaling.
    pub fn level_weight(&self, level: usize) -> f64 {
        let l = level.max(1) as f64;
        (-l * (self.alpha - self.dim as f64 / 2.0)).exp2()
    }

    pub fn layout(&self) -> Result<Layout> {
        Layout::new(self.dim, self.max_level)
    }

    pub fn with_family(mut self, family: PriorFamily) -> Self {
        self.family = family;
        self
    }

    pub fn unrescaled(mut self) -> Self {
        self.n = 1;
        self
    }
}

/// Per-index scales `s_lr` in flat coefficient order.
pub fn prior_scales(spec: &PriorSpec) -> Result<Vec<f64>> {
    spec.validate()?;
    let layout = spec.layout()?;
    let r = spec.rescaling();
    Ok(layout.levels().into_iter().map(|l| r * spec.level_weight(l)).collect())
}

/// Standard Laplace inverse CDF.
pub fn laplace_quantile(u: f64) -> Result<f64> {
    if !(u > 0.0 && u < 1.0) {
        return Err(Error::domain(
            "prior",
            format!("laplace quantile needs u in (0,1), got {u}"),
        ));
    }
    Ok(if u < 0.5 {
        (2.0 * u).ln()
    } else {
        -(2.0 * (1.0 - u)).ln()
    })
}

pub(crate) fn standard_draw(family: PriorFamily, rng: &mut Rng) -> f64 {
    match family {
        PriorFamily::Laplace => {
            let u = open_unit(rng);
            if u < 0.5 {
                (2.0 * u).ln()
            } else {
                -(2.0 * (1.0 - u)).ln()
            }
        }
        PriorFamily::Gaussian => StandardNormal.sample(rng),
    }
}

pub(crate) fn draw_with(spec: &PriorSpec, scales: &[f64], rng: &mut Rng) -> Vec<f64> {
    scales.iter().map(|&s| s * standard_draw(spec.family, rng)).collect()
}

/// One prior draw, deterministic in `seed`.
pub fn sample_prior(spec: &PriorSpec, basis: &WaveletBasis, seed: u64) -> Result<CoefficientVector> {
    let layout = spec.layout()?;
    if basis.layout() != layout {
        return Err(Error::shape(
            "prior",
            format!("basis with L={}", spec.max_level),
            format!("L={}", basis.max_level()),
        ));
    }
    let scales = prior_scales(spec)?;
    let mut rng = rng_for(seed, 0);
    let values = draw_with(spec, &scales, &mut rng);
    Ok(CoefficientVector::new(layout, values)?.with_alpha(spec.alpha))
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct BesovNormQuery {
    pub alpha: f64,
    /// `f64::INFINITY` selects the sup over positions.
    pub p: f64,
    /// `f64::INFINITY` selects the sup over levels.
    pub q: f64,
    pub dim: usize,
}

impl BesovNormQuery {
    pub fn new(alpha: f64, p: f64, q: f64, dim: usize) -> Self {
        BesovNormQuery { alpha, p, q, dim }
    }
}

/// Truncated Besov norm of a coefficient vector:
/// `( sum_l 2^{q l (alpha - d/p + d/2)} (sum_r |beta_lr|^p)^{q/p} )^{1/q}`
/// over the levels present (the coarse block counts as level 1).
pub fn besov_norm(coeffs: &CoefficientVector, query: &BesovNormQuery) -> Result<f64> {
    if query.p.is_nan() || query.p < 1.0 {
        return Err(Error::config("prior", "p", format!("must be >= 1, got {}", query.p)));
    }
    if query.q.is_nan() || query.q < 1.0 {
        return Err(Error::config("prior", "q", format!("must be >= 1, got {}", query.q)));
    }
    if !query.alpha.is_finite() || query.alpha < 0.0 {
        return Err(Error::config("prior", "alpha", "must be finite and >= 0"));
    }
    if query.dim != coeffs.dim() {
        return Err(Error::shape(
            "prior",
            format!("d={}", query.dim),
            format!("d={}", coeffs.dim()),
        ));
    }
    let d = query.dim as f64;
    let inv_p = if query.p.is_infinite() { 0.0 } else { 1.0 / query.p };
    let exponent = query.alpha - d * inv_p + d / 2.0;
    let layout = coeffs.layout();
    // (level, values) with the coarse block merged into level 1
    let groups: Vec<(usize, Vec<f64>)> = (1..=layout.max_level())
        .map(|l| {
            let mut v = coeffs.level(l).to_vec();
            if l == 1 {
                v.extend_from_slice(coeffs.level(0));
            }
            (l, v)
        })
        .collect();

    if query.p.is_finite() && query.q.is_finite() && query.p == query.q {
        let p = query.p;
        let total: f64 = groups
            .iter()
            .map(|(l, v)| {
                let w = (p * *l as f64 * exponent).exp2();
                w * v.iter().map(|b| b.abs().powf(p)).sum::<f64>()
            })
            .sum();
        return Ok(total.powf(1.0 / p));
    }

    let level_terms = groups.iter().map(|(l, v)| {
        let inner = if query.p.is_infinite() {
            v.iter().fold(0.0f64, |m, b| m.max(b.abs()))
        } else {
            v.iter().map(|b| b.abs().powf(query.p)).sum::<f64>().powf(1.0 / query.p)
        };
        (*l as f64 * exponent).exp2() * inner
    });
    Ok(if query.q.is_infinite() {
        level_terms.fold(0.0, f64::max)
    } else {
        level_terms.map(|t| t.powf(query.q)).sum::<f64>().powf(1.0 / query.q)
    })
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SmallBallEstimate {
    pub epsilon: f64,
    pub p_hat: f64,
    pub stderr: f64,
    pub n_mc: usize,
}

/// Monte Carlo estimate of `P(||W||_inf <= eps)` for the non-rescaled prior,
/// with the sup taken over the basis grid.
pub fn small_ball_estimate(
    spec: &PriorSpec,
    basis: &WaveletBasis,
    epsilon: f64,
    n_mc: usize,
    seed: u64,
) -> Result<SmallBallEstimate> {
    Ok(small_ball_curve(spec, basis, &[epsilon], n_mc, seed)?[0])
}

/// [`small_ball_estimate`] for several radii sharing one set of draws.
pub fn small_ball_curve(
    spec: &PriorSpec,
    basis: &WaveletBasis,
    epsilons: &[f64],
    n_mc: usize,
    seed: u64,
) -> Result<Vec<SmallBallEstimate>> {
    if n_mc < 1000 {
        return Err(Error::config(
            "prior",
            "n_mc",
            format!("must be at least 1000, got {n_mc}"),
        ));
    }
    if let Some(e) = epsilons.iter().find(|e| !(**e >= 0.0)) {
        return Err(Error::config(
            "prior",
            "epsilon",
            format!("must be non-negative, got {e}"),
        ));
    }
    let spec = spec.unrescaled();
    let layout = spec.layout()?;
    if basis.layout() != layout {
        return Err(Error::shape(
            "prior",
            format!("basis with L={}", spec.max_level),
            basis.max_level(),
        ));
    }
    let scales = prior_scales(&spec)?;
    let sups: Vec<f64> = (0..n_mc)
        .into_par_iter()
        .map(|i| {
            let mut rng = rng_for(seed, i as u64);
            let values = draw_with(&spec, &scales, &mut rng);
            let c = CoefficientVector::new(layout, values)?;
            let grid = basis.inverse_transform(&c)?;
            Ok(grid.iter().fold(0.0f64, |m, v| m.max(v.abs())))
        })
        .collect::<Result<_>>()?;
    Ok(epsilons
        .iter()
        .map(|&eps| {
            let hits = sups.iter().filter(|&&s| s <= eps && eps > 0.0).count();
            let p = hits as f64 / n_mc as f64;
            SmallBallEstimate {
                epsilon: eps,
                p_hat: p,
                stderr: (p * (1.0 - p) / n_mc as f64).sqrt(),
                n_mc,
            }
        })
        .collect())
}
