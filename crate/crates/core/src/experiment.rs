//! Contraction-rate studies: repeated simulate / fit / score runs over a grid
//! of sample sizes, with a log-log slope fitted to the median errors.

use std::fmt;
use std::str::FromStr;
use std::sync::Arc;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::inference::{map_estimate, run_pcn, ChainOptions, MapOptions};
use crate::link::logistic;
use crate::model::{midpoints, simulate, Dataset, DesignCache, MuSpec, TruthFunction};
use crate::prior::{PriorFamily, PriorSpec};
use crate::rng::derive_seed;
use crate::wavelet::{build_basis, CoefficientVector, Family, WaveletBasis};

/// Largest tolerated share of excluded replicates.
pub const MAX_EXCLUDED_FRACTION: f64 = 0.2;

/// Reference rate `n^{-alpha / (2 alpha + d)}`.
pub fn contraction_rate(n: usize, alpha: f64, dim: usize) -> f64 {
    (n as f64).powf(-alpha / (2.0 * alpha + dim as f64))
}

/// Exponent of [`contraction_rate`].
pub fn reference_slope(alpha: f64, dim: usize) -> f64 {
    -alpha / (2.0 * alpha + dim as f64)
}

/// Midpoint-rule `L^2([0,1]^d)` distance between two functions sampled at the
/// midpoints of a `2^g`-per-axis grid.
pub fn l2_error(f_hat: &[f64], f0: &[f64], g: usize, dim: usize) -> Result<f64> {
    if !(1..=2).contains(&dim) {
        return Err(Error::config("experiment", "d", "must be 1 or 2"));
    }
    let min_g = if dim == 1 { 10 } else { 5 };
    if g < min_g {
        return Err(Error::config(
            "experiment",
            "error_grid",
            format!("must be at least {min_g} for d={dim}, got {g}"),
        ));
    }
    let points = 1usize << (g * dim);
    if f_hat.len() != points || f0.len() != points {
        return Err(Error::shape(
            "experiment",
            format!("{points} grid values"),
            format!("{} and {}", f_hat.len(), f0.len()),
        ));
    }
    let sum: f64 = f_hat.iter().zip(f0).map(|(a, b)| (a - b) * (a - b)).sum();
    Ok((sum / points as f64).sqrt())
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SlopeFit {
    pub slope: f64,
    pub intercept: f64,
    pub r2: f64,
}

/// Ordinary least squares `y = intercept + slope x`.
pub fn fit_slope(x: &[f64], y: &[f64]) -> Result<SlopeFit> {
    if x.len() != y.len() {
        return Err(Error::shape("experiment", x.len(), y.len()));
    }
    if x.len() < 3 {
        return Err(Error::usage(
            "experiment",
            format!("need at least 3 points, got {}", x.len()),
        ));
    }
    if x.iter().chain(y).any(|v| !v.is_finite()) {
        return Err(Error::numeric("experiment", "non-finite value in slope fit"));
    }
    let n = x.len() as f64;
    let mx = x.iter().sum::<f64>() / n;
    let my = y.iter().sum::<f64>() / n;
    let sxx: f64 = x.iter().map(|a| (a - mx) * (a - mx)).sum();
    let sxy: f64 = x.iter().zip(y).map(|(a, b)| (a - mx) * (b - my)).sum();
    let syy: f64 = y.iter().map(|b| (b - my) * (b - my)).sum();
    if sxx <= f64::EPSILON * x.iter().map(|a| a * a).sum::<f64>().max(f64::MIN_POSITIVE) {
        return Err(Error::numeric("experiment", "degenerate slope fit: all x equal"));
    }
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let r2 = if syy == 0.0 { 1.0 } else { (sxy * sxy) / (sxx * syy) };
    Ok(SlopeFit { slope, intercept, r2 })
}

/// Linear-interpolation sample quantile of sorted data.
fn quantile(sorted: &[f64], p: f64) -> f64 {
    let h = (sorted.len() - 1) as f64 * p;
    let lo = h.floor() as usize;
    let hi = h.ceil() as usize;
    sorted[lo] + (h - lo as f64) * (sorted[hi] - sorted[lo])
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Estimator {
    /// `H` of the posterior-mean latent surface.
    PosteriorMean,
    Map,
}

impl fmt::Display for Estimator {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Estimator::PosteriorMean => "posterior-mean",
            Estimator::Map => "map",
        })
    }
}

impl FromStr for Estimator {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "posterior-mean" | "mean" | "pm" => Ok(Estimator::PosteriorMean),
            "map" => Ok(Estimator::Map),
            other => Err(Error::config(
                "experiment",
                "estimator",
                format!("unknown estimator '{other}'"),
            )),
        }
    }
}

#[derive(Clone, Debug)]
pub struct RateStudyConfig {
    pub alpha: f64,
    pub truth: TruthFunction,
    pub mu: MuSpec,
    pub n_grid: Vec<usize>,
    pub replicates: usize,
    pub seed: u64,
    pub family: PriorFamily,
    pub wavelet: Family,
    /// Fixed truncation level; `None` uses [`PriorSpec::default_level`] per `n`.
    pub max_level: Option<usize>,
    pub estimator: Estimator,
    /// Error grid exponent: `2^G` midpoints per axis.
    pub error_grid: usize,
    pub map: MapOptions,
    /// Chain settings; `seed` is replaced per replicate.
    pub chain: ChainOptions,
}

impl RateStudyConfig {
    /// Default study: alpha 1.5, n in {256, 1024, 4096, 16384}, 10 replicates,
    /// db2 basis, posterior-mean estimator, `G = 12`.
    pub fn new(truth: TruthFunction) -> Self {
        RateStudyConfig {
            alpha: 1.5,
            truth,
            mu: MuSpec::Uniform,
            n_grid: vec![256, 1024, 4096, 16384],
            replicates: 10,
            seed: 0,
            family: PriorFamily::Laplace,
            wavelet: Family::Daubechies(2),
            max_level: None,
            estimator: Estimator::PosteriorMean,
            error_grid: 12,
            map: MapOptions::default(),
            chain: ChainOptions {
                keep_draws: false,
                ..ChainOptions::default()
            },
        }
    }

    pub fn dim(&self) -> usize {
        self.truth.dim()
    }

    pub fn validate(&self) -> Result<()> {
        if self.n_grid.len() < 3 {
            return Err(Error::config("experiment", "n_grid", "needs at least 3 sample sizes"));
        }
        if self.n_grid[0] == 0 || self.n_grid.windows(2).any(|w| w[1] <= w[0]) {
            return Err(Error::config(
                "experiment",
                "n_grid",
                "must be positive and strictly increasing",
            ));
        }
        if self.replicates < 3 {
            return Err(Error::config("experiment", "replicates", "must be at least 3"));
        }
        self.mu.validate(self.dim())?;
        PriorSpec::new(self.family, self.alpha, self.dim(), 1, 1)?;
        if let Some(l) = self.max_level {
            crate::wavelet::Layout::new(self.dim(), l)?;
        }
        self.map.validate()?;
        if self.estimator == Estimator::PosteriorMean {
            self.chain.validate()?;
        }
        let min_g = if self.dim() == 1 { 10 } else { 5 };
        if self.error_grid < min_g || self.error_grid * self.dim() > 24 {
            return Err(Error::config(
                "experiment",
                "error_grid",
                format!("must lie in [{min_g}, {}] for d={}", 24 / self.dim(), self.dim()),
            ));
        }
        Ok(())
    }

    fn level_for(&self, n: usize) -> usize {
        self.max_level
            .unwrap_or_else(|| PriorSpec::default_level(n, self.dim()))
    }
}

/// Outcome of one `(n, replicate)` cell.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ReplicateRecord {
    pub n: usize,
    pub replicate: usize,
    /// `None` for an excluded replicate.
    pub error: Option<f64>,
    pub estimator: Estimator,
    pub family: PriorFamily,
    pub seed: u64,
    /// Post-burn-in acceptance rate (posterior-mean estimator only).
    pub acceptance: Option<f64>,
    pub note: String,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SizeSummary {
    pub n: usize,
    pub median: f64,
    pub iqr_lo: f64,
    pub iqr_hi: f64,
    pub rate_ref: f64,
    /// `median / rate_ref`.
    pub ratio: f64,
    pub completed: usize,
    pub excluded: usize,
}

#[derive(Clone, Debug)]
pub struct RateStudyResult {
    pub records: Vec<ReplicateRecord>,
    pub summary: Vec<SizeSummary>,
    /// Fit of `ln median` against `ln n`.
    pub fit: SlopeFit,
    pub reference_slope: f64,
    pub excluded: usize,
    pub family: PriorFamily,
    pub estimator: Estimator,
}

impl RateStudyResult {
    pub fn medians(&self) -> Vec<f64> {
        self.summary.iter().map(|s| s.median).collect()
    }
}

/// Per-cell seed; independent of the prior family so comparisons share data.
pub fn cell_seed(seed: u64, n_index: usize, replicate: usize, replicates: usize) -> u64 {
    derive_seed(seed, (n_index * replicates + replicate) as u64)
}

/// Fitted surface `H(w_hat)` at the error-grid midpoints.
fn fitted_surface(basis: &WaveletBasis, coeffs: &CoefficientVector, points: &[Vec<f64>]) -> Result<Vec<f64>> {
    points
        .iter()
        .map(|x| Ok(logistic(basis.synthesize_at(coeffs, x)?)))
        .collect()
}

struct Cell {
    error: f64,
    acceptance: Option<f64>,
    failure: Option<String>,
}

fn run_cell(
    config: &RateStudyConfig,
    basis: &WaveletBasis,
    n: usize,
    seed: u64,
    points: &[Vec<f64>],
    f0: &[f64],
) -> Result<Cell> {
    let data: Dataset = simulate(&config.truth, &config.mu, n, derive_seed(seed, 0))?;
    let prior = PriorSpec::new(config.family, config.alpha, config.dim(), n, basis.max_level())?;
    let cache = DesignCache::build(basis, &data)?;
    let (coeffs, acceptance, failure) = match config.estimator {
        Estimator::Map => {
            let fit = map_estimate(&data, &cache, &prior, &config.map)?;
            let failure = (!fit.converged).then(|| "map did not converge".to_string());
            (fit.coeffs, None, failure)
        }
        Estimator::PosteriorMean => {
            let opts = ChainOptions {
                seed: derive_seed(seed, 1),
                map: config.map,
                keep_draws: false,
                ..config.chain
            };
            let chain = run_pcn(&data, &cache, &prior, &opts)?;
            let failure = chain.all_rejected.then(|| "all proposals rejected".to_string());
            (chain.mean, Some(chain.acceptance_rate), failure)
        }
    };
    let f_hat = fitted_surface(basis, &coeffs, points)?;
    let error = l2_error(&f_hat, f0, config.error_grid, config.dim())?;
    Ok(Cell {
        error,
        acceptance,
        failure,
    })
}

/// Simulate, fit and score every `(n, replicate)` cell, then summarise.
pub fn run_rate_study(config: &RateStudyConfig) -> Result<RateStudyResult> {
    config.validate()?;
    let dim = config.dim();
    let points = midpoints(dim, config.error_grid);
    let f0 = points
        .iter()
        .map(|x| config.truth.prob(x))
        .collect::<Result<Vec<_>>>()?;
    let bases = config
        .n_grid
        .iter()
        .map(|&n| build_basis(config.wavelet, dim, config.level_for(n)).map(Arc::new))
        .collect::<Result<Vec<_>>>()?;

    let cells: Vec<(usize, usize)> = (0..config.n_grid.len())
        .flat_map(|i| (0..config.replicates).map(move |r| (i, r)))
        .collect();
    let outcomes: Vec<(usize, usize, u64, Result<Cell>)> = cells
        .par_iter()
        .map(|&(i, r)| {
            let seed = cell_seed(config.seed, i, r, config.replicates);
            let out = run_cell(config, &bases[i], config.n_grid[i], seed, &points, &f0);
            (i, r, seed, out)
        })
        .collect();

    let mut records = Vec::with_capacity(outcomes.len());
    for (i, r, seed, out) in outcomes {
        let (error, acceptance, note) = match out {
            Ok(cell) => match cell.failure {
                None => (Some(cell.error), cell.acceptance, String::new()),
                Some(why) => (None, cell.acceptance, why),
            },
            // configuration problems are not replicate failures
            Err(e @ Error::Config { .. }) => return Err(e),
            Err(e) => (None, None, e.to_string()),
        };
        records.push(ReplicateRecord {
            n: config.n_grid[i],
            replicate: r,
            error,
            estimator: config.estimator,
            family: config.family,
            seed,
            acceptance,
            note,
        });
    }
    summarise(config, records)
}

fn summarise(config: &RateStudyConfig, records: Vec<ReplicateRecord>) -> Result<RateStudyResult> {
    let excluded = records.iter().filter(|r| r.error.is_none()).count();
    if excluded as f64 > MAX_EXCLUDED_FRACTION * records.len() as f64 {
        return Err(Error::numeric(
            "experiment",
            format!("{excluded} of {} replicates excluded", records.len()),
        ));
    }
    let mut summary = Vec::with_capacity(config.n_grid.len());
    for &n in &config.n_grid {
        let mut errs: Vec<f64> = records.iter().filter(|r| r.n == n).filter_map(|r| r.error).collect();
        let total = records.iter().filter(|r| r.n == n).count();
        if errs.is_empty() {
            return Err(Error::numeric(
                "experiment",
                format!("every replicate at n={n} was excluded"),
            ));
        }
        errs.sort_by(f64::total_cmp);
        let median = quantile(&errs, 0.5);
        let rate_ref = contraction_rate(n, config.alpha, config.dim());
        summary.push(SizeSummary {
            n,
            median,
            iqr_lo: quantile(&errs, 0.25),
            iqr_hi: quantile(&errs, 0.75),
            rate_ref,
            ratio: median / rate_ref,
            completed: errs.len(),
            excluded: total - errs.len(),
        });
    }
    let log_n: Vec<f64> = summary.iter().map(|s| (s.n as f64).ln()).collect();
    let log_e: Vec<f64> = summary.iter().map(|s| s.median.ln()).collect();
    let fit = fit_slope(&log_n, &log_e)?;
    Ok(RateStudyResult {
        records,
        summary,
        fit,
        reference_slope: reference_slope(config.alpha, config.dim()),
        excluded,
        family: config.family,
        estimator: config.estimator,
    })
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ComparisonRow {
    pub n: usize,
    pub family: PriorFamily,
    pub median: f64,
    pub iqr_lo: f64,
    pub iqr_hi: f64,
}

#[derive(Clone, Debug)]
pub struct PriorComparison {
    /// One row per `(n, family)`, first family first within each `n`.
    pub rows: Vec<ComparisonRow>,
    pub first: RateStudyResult,
    pub second: RateStudyResult,
}

impl PriorComparison {
    /// Fitted slopes of the two studies.
    pub fn slopes(&self) -> (f64, f64) {
        (self.first.fit.slope, self.second.fit.slope)
    }
}

/// Run the same study under the Laplace and then the Gaussian prior with
/// identical seeds. The output is descriptive.
pub fn compare_priors(config: &RateStudyConfig) -> Result<PriorComparison> {
    compare_families(config, PriorFamily::Laplace, PriorFamily::Gaussian)
}

/// [`compare_priors`] with an arbitrary pair of families.
pub fn compare_families(config: &RateStudyConfig, first: PriorFamily, second: PriorFamily) -> Result<PriorComparison> {
    let a = run_rate_study(&RateStudyConfig {
        family: first,
        ..config.clone()
    })?;
    let b = run_rate_study(&RateStudyConfig {
        family: second,
        ..config.clone()
    })?;
    let mut rows = Vec::with_capacity(2 * config.n_grid.len());
    for (sa, sb) in a.summary.iter().zip(&b.summary) {
        for (s, family) in [(sa, first), (sb, second)] {
            rows.push(ComparisonRow {
                n: s.n,
                family,
                median: s.median,
                iqr_lo: s.iqr_lo,
                iqr_hi: s.iqr_hi,
            });
        }
    }
    Ok(PriorComparison {
        rows,
        first: a,
        second: b,
    })
}
