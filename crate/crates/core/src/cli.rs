//! JSON-configured batch runner.
//!
//! A run is described by a flat [`RunConfig`]. Values come from an optional
//! JSON file, then command-line flags override them, then every remaining
//! default is filled in and the result is range-checked before anything
//! runs. Each run writes its artifacts, `resolved-config.json` and
//! `manifest.json` into one output directory: `--out` when given, otherwise
//! `<root>/run-<unix-seconds>-seed<seed>` with `<root>` taken from the
//! `BESOV_OUTPUT_ROOT` environment variable (default `runs`).

use std::ffi::OsString;
use std::fs;
use std::path::{Path, PathBuf};
use std::sync::Arc;
use std::time::{Instant, SystemTime, UNIX_EPOCH};

use clap::{Args, Parser, ValueEnum};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::experiment::{compare_priors, run_rate_study, Estimator, PriorComparison, RateStudyConfig, RateStudyResult};
use crate::inference::{map_estimate, posterior_mean, run_pcn, ChainOptions, ChainStart, MapOptions, StepPolicy};
use crate::io;
use crate::link::logistic;
use crate::model::{make_truth, simulate, Dataset, DesignCache, MuSpec, TruthFunction, TruthName, TruthParams};
use crate::plot::LogLogPlot;
use crate::prior::{besov_norm, prior_scales, sample_prior, small_ball_curve, BesovNormQuery, PriorFamily, PriorSpec};
use crate::rng::derive_seed;
use crate::wavelet::{build_basis, Family, WaveletBasis};

/// Environment variable naming the root for timestamped run directories.
pub const OUTPUT_ROOT_VAR: &str = "BESOV_OUTPUT_ROOT";

/// Child-seed indices derived from the master seed.
const DATA_STREAM: u64 = 1;
const CHAIN_STREAM: u64 = 2;
const PRIOR_STREAM: u64 = 3;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize, ValueEnum)]
#[serde(rename_all = "kebab-case")]
pub enum Subcommand {
    SamplePrior,
    Simulate,
    FitMap,
    FitMcmc,
    RateStudy,
    ComparePriors,
    Diagnostics,
}

impl Subcommand {
    pub fn name(&self) -> &'static str {
        match self {
            Subcommand::SamplePrior => "sample-prior",
            Subcommand::Simulate => "simulate",
            Subcommand::FitMap => "fit-map",
            Subcommand::FitMcmc => "fit-mcmc",
            Subcommand::RateStudy => "rate-study",
            Subcommand::ComparePriors => "compare-priors",
            Subcommand::Diagnostics => "diagnostics",
        }
    }

    fn is_study(&self) -> bool {
        matches!(self, Subcommand::RateStudy | Subcommand::ComparePriors)
    }
}

/// Every option of every subcommand, as flat JSON keys.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub subcommand: Option<Subcommand>,
    pub alpha: f64,
    pub d: usize,
    /// Sample size: prior rescaling for `sample-prior`, data size otherwise.
    pub n: usize,
    /// Truncation level; `null` picks the default for the sample size.
    #[serde(rename = "L")]
    pub max_level: Option<usize>,
    pub seed: u64,
    pub family: PriorFamily,
    /// `null` picks Haar, or db2 for the rate studies.
    pub wavelet: Option<Family>,
    pub truth: TruthName,
    pub delta: f64,
    /// Shape controls; `null` picks the defaults for `d`.
    pub truth_params: Option<TruthParams>,
    /// `l,r,value` file for `truth = custom-coefficients`.
    pub truth_coefficients: Option<PathBuf>,
    pub mu: MuSpec,
    /// Existing `x1[,x2],y` file to fit instead of simulated data.
    pub data: Option<PathBuf>,
    pub n_grid: Vec<usize>,
    pub replicates: usize,
    pub estimator: Estimator,
    pub error_grid: usize,
    pub map_max_iters: usize,
    pub map_tol: f64,
    pub map_step: StepPolicy,
    pub map_accelerate: bool,
    pub map_polish: bool,
    pub n_iters: usize,
    pub burn_in: usize,
    pub thin: usize,
    pub step: f64,
    pub adapt: bool,
    pub target_accept: f64,
    pub chain_start: ChainStart,
    pub keep_draws: bool,
    pub epsilons: Vec<f64>,
    pub n_mc: usize,
    pub besov_draws: usize,
    pub besov_levels: Vec<usize>,
    /// `null` uses the available parallelism.
    pub workers: Option<usize>,
    pub out_dir: Option<PathBuf>,
}

impl Default for RunConfig {
    fn default() -> Self {
        let map = MapOptions::default();
        let chain = ChainOptions::default();
        RunConfig {
            subcommand: None,
            alpha: 1.5,
            d: 1,
            n: 1,
            max_level: None,
            seed: 0,
            family: PriorFamily::Laplace,
            wavelet: None,
            truth: TruthName::SpikyPiecewiseLinear,
            delta: 0.05,
            truth_params: None,
            truth_coefficients: None,
            mu: MuSpec::Uniform,
            data: None,
            n_grid: vec![256, 1024, 4096, 16384],
            replicates: 10,
            estimator: Estimator::PosteriorMean,
            error_grid: 12,
            map_max_iters: map.max_iters,
            map_tol: map.tol,
            map_step: map.step,
            map_accelerate: map.accelerate,
            map_polish: map.polish,
            n_iters: chain.n_iters,
            burn_in: chain.burn_in,
            thin: chain.thin,
            step: chain.step,
            adapt: chain.adapt,
            target_accept: chain.target_accept,
            chain_start: chain.start,
            keep_draws: true,
            epsilons: vec![0.5, 1.0, 2.0, 4.0],
            n_mc: 1000,
            besov_draws: 200,
            besov_levels: vec![6, 8, 10],
            workers: None,
            out_dir: None,
        }
    }
}

/// Flag overrides; each flag mirrors the JSON key of the same name.
#[derive(Clone, Debug, Default, Args)]
pub struct Overrides {
    #[arg(long)]
    pub alpha: Option<f64>,
    #[arg(long)]
    pub d: Option<usize>,
    #[arg(long)]
    pub n: Option<usize>,
    #[arg(long = "L", visible_alias = "max-level")]
    pub max_level: Option<usize>,
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long)]
    pub family: Option<String>,
    #[arg(long)]
    pub wavelet: Option<String>,
    #[arg(long)]
    pub truth: Option<String>,
    #[arg(long)]
    pub delta: Option<f64>,
    #[arg(long)]
    pub truth_coefficients: Option<PathBuf>,
    #[arg(long)]
    pub data: Option<PathBuf>,
    #[arg(long, value_delimiter = ',')]
    pub n_grid: Option<Vec<usize>>,
    #[arg(long)]
    pub replicates: Option<usize>,
    #[arg(long)]
    pub estimator: Option<String>,
    #[arg(long)]
    pub error_grid: Option<usize>,
    #[arg(long)]
    pub map_max_iters: Option<usize>,
    #[arg(long)]
    pub map_tol: Option<f64>,
    #[arg(long)]
    pub map_step: Option<String>,
    #[arg(long)]
    pub map_accelerate: Option<bool>,
    #[arg(long)]
    pub map_polish: Option<bool>,
    #[arg(long)]
    pub n_iters: Option<usize>,
    #[arg(long)]
    pub burn_in: Option<usize>,
    #[arg(long)]
    pub thin: Option<usize>,
    #[arg(long)]
    pub step: Option<f64>,
    #[arg(long)]
    pub adapt: Option<bool>,
    #[arg(long)]
    pub target_accept: Option<f64>,
    #[arg(long)]
    pub chain_start: Option<String>,
    #[arg(long)]
    pub keep_draws: Option<bool>,
    #[arg(long, value_delimiter = ',')]
    pub epsilons: Option<Vec<f64>>,
    #[arg(long)]
    pub n_mc: Option<usize>,
    #[arg(long)]
    pub besov_draws: Option<usize>,
    #[arg(long, value_delimiter = ',')]
    pub besov_levels: Option<Vec<usize>>,
    #[arg(long)]
    pub workers: Option<usize>,
    #[arg(long = "out", visible_alias = "out-dir")]
    pub out_dir: Option<PathBuf>,
}

#[derive(Debug, Parser)]
#[command(
    name = "besov",
    version,
    about = "Bayesian classification with Besov-Laplace wavelet priors"
)]
pub struct Cli {
    /// Subcommand; may instead be given as the `subcommand` key of the config file.
    #[arg(value_enum)]
    pub subcommand: Option<Subcommand>,
    /// JSON configuration file.
    #[arg(long)]
    pub config: Option<PathBuf>,
    #[command(flatten)]
    pub overrides: Overrides,
}

fn parse_enum<T: std::str::FromStr<Err = Error>>(value: &Option<String>, target: &mut T) -> Result<()> {
    if let Some(v) = value {
        *target = v.parse()?;
    }
    Ok(())
}

fn set<T: Clone>(value: &Option<T>, target: &mut T) {
    if let Some(v) = value {
        *target = v.clone();
    }
}

fn set_some<T: Clone>(value: &Option<T>, target: &mut Option<T>) {
    if value.is_some() {
        *target = value.clone();
    }
}

impl RunConfig {
    /// Parse a JSON document; unknown keys are rejected by name.
    pub fn from_json(text: &str) -> Result<Self> {
        let value: serde_json::Value = serde_json::from_str(text)?;
        let obj = value
            .as_object()
            .ok_or_else(|| Error::config("cli", "config", "top level must be a JSON object"))?;
        let known = serde_json::to_value(RunConfig::default())?;
        let known = known.as_object().expect("config serialises to an object");
        if let Some(key) = obj.keys().find(|k| !known.contains_key(k.as_str())) {
            return Err(Error::config("cli", key.clone(), "unknown key"));
        }
        serde_json::from_value(value).map_err(|e| Error::config("cli", "config", e.to_string()))
    }

    pub fn from_file(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path)
            .map_err(|e| Error::config("cli", "config", format!("cannot read {}: {e}", path.display())))?;
        Self::from_json(&text)
    }

    pub fn apply(&mut self, o: &Overrides) -> Result<()> {
        set(&o.alpha, &mut self.alpha);
        set(&o.d, &mut self.d);
        set(&o.n, &mut self.n);
        set_some(&o.max_level, &mut self.max_level);
        set(&o.seed, &mut self.seed);
        parse_enum(&o.family, &mut self.family)?;
        if let Some(w) = &o.wavelet {
            self.wavelet = Some(w.parse()?);
        }
        parse_enum(&o.truth, &mut self.truth)?;
        set(&o.delta, &mut self.delta);
        set_some(&o.truth_coefficients, &mut self.truth_coefficients);
        set_some(&o.data, &mut self.data);
        set(&o.n_grid, &mut self.n_grid);
        set(&o.replicates, &mut self.replicates);
        parse_enum(&o.estimator, &mut self.estimator)?;
        set(&o.error_grid, &mut self.error_grid);
        set(&o.map_max_iters, &mut self.map_max_iters);
        set(&o.map_tol, &mut self.map_tol);
        if let Some(s) = &o.map_step {
            self.map_step = match s.as_str() {
                "fixed" => StepPolicy::Fixed,
                "backtracking" => StepPolicy::Backtracking,
                other => {
                    return Err(Error::config(
                        "cli",
                        "map_step",
                        format!("unknown step policy '{other}'"),
                    ))
                }
            };
        }
        set(&o.map_accelerate, &mut self.map_accelerate);
        set(&o.map_polish, &mut self.map_polish);
        set(&o.n_iters, &mut self.n_iters);
        set(&o.burn_in, &mut self.burn_in);
        set(&o.thin, &mut self.thin);
        set(&o.step, &mut self.step);
        set(&o.adapt, &mut self.adapt);
        set(&o.target_accept, &mut self.target_accept);
        if let Some(s) = &o.chain_start {
            self.chain_start = match s.as_str() {
                "map" => ChainStart::Map,
                "zero" => ChainStart::Zero,
                other => return Err(Error::config("cli", "chain_start", format!("unknown start '{other}'"))),
            };
        }
        set(&o.keep_draws, &mut self.keep_draws);
        set(&o.epsilons, &mut self.epsilons);
        set(&o.n_mc, &mut self.n_mc);
        set(&o.besov_draws, &mut self.besov_draws);
        set(&o.besov_levels, &mut self.besov_levels);
        set_some(&o.workers, &mut self.workers);
        set_some(&o.out_dir, &mut self.out_dir);
        Ok(())
    }

    pub fn subcommand(&self) -> Result<Subcommand> {
        self.subcommand.ok_or_else(|| {
            Error::config(
                "cli",
                "subcommand",
                "missing; pass it positionally or in the config file",
            )
        })
    }

    pub fn map_options(&self) -> MapOptions {
        MapOptions {
            max_iters: self.map_max_iters,
            tol: self.map_tol,
            step: self.map_step,
            accelerate: self.map_accelerate,
            polish: self.map_polish,
        }
    }

    pub fn chain_options(&self, seed: u64) -> ChainOptions {
        ChainOptions {
            n_iters: self.n_iters,
            burn_in: self.burn_in,
            thin: self.thin,
            step: self.step,
            adapt: self.adapt,
            target_accept: self.target_accept,
            seed,
            start: self.chain_start,
            map: self.map_options(),
            keep_draws: self.keep_draws,
        }
    }

    /// Fill defaults that depend on other fields.
    pub fn resolve(&mut self) -> Result<()> {
        let sub = self.subcommand()?;
        if self.wavelet.is_none() {
            self.wavelet = Some(if sub.is_study() {
                Family::Daubechies(2)
            } else {
                Family::Haar
            });
        }
        if self.truth_params.is_none() {
            self.truth_params = Some(TruthParams::default_for(self.d));
        }
        if let Some(p) = &mut self.truth_params {
            p.delta = self.delta;
        }
        if self.max_level.is_none() && !sub.is_study() && self.data.is_none() {
            self.max_level = Some(PriorSpec::default_level(self.n, self.d));
        }
        if self.workers.is_none() {
            self.workers = Some(std::thread::available_parallelism().map_or(1, |n| n.get()));
        }
        Ok(())
    }

    /// Range-check every field used by the subcommand.
    pub fn validate(&self) -> Result<()> {
        let sub = self.subcommand()?;
        if !(1..=2).contains(&self.d) {
            return Err(Error::config("cli", "d", format!("must be 1 or 2, got {}", self.d)));
        }
        if !self.alpha.is_finite() || self.alpha <= self.d as f64 {
            return Err(Error::config(
                "cli",
                "alpha",
                format!("alpha must exceed d (alpha={}, d={})", self.alpha, self.d),
            ));
        }
        if self.n == 0 {
            return Err(Error::config("cli", "n", "must be at least 1"));
        }
        if let Some(l) = self.max_level {
            crate::wavelet::Layout::new(self.d, l).map_err(|e| retag(e, "L"))?;
        }
        if !(self.delta > 0.0 && self.delta < 0.5) {
            return Err(Error::config("cli", "delta", "must lie in (0, 1/2)"));
        }
        if self.workers == Some(0) {
            return Err(Error::config("cli", "workers", "must be at least 1"));
        }
        self.mu.validate(self.d)?;
        self.map_options().validate()?;
        if matches!(sub, Subcommand::FitMcmc) || (sub.is_study() && self.estimator == Estimator::PosteriorMean) {
            self.chain_options(0).validate()?;
        }
        if sub.is_study() {
            if self.n_grid.len() < 3 || self.n_grid[0] == 0 || self.n_grid.windows(2).any(|w| w[1] <= w[0]) {
                return Err(Error::config(
                    "cli",
                    "n_grid",
                    "needs at least 3 positive, strictly increasing sample sizes",
                ));
            }
            if self.replicates < 3 {
                return Err(Error::config("cli", "replicates", "must be at least 3"));
            }
            let min_g = if self.d == 1 { 10 } else { 5 };
            if self.error_grid < min_g || self.error_grid * self.d > 24 {
                return Err(Error::config(
                    "cli",
                    "error_grid",
                    format!("must lie in [{min_g}, {}] for d={}", 24 / self.d, self.d),
                ));
            }
        }
        if sub == Subcommand::Diagnostics {
            if self.n_mc < 1000 {
                return Err(Error::config("cli", "n_mc", "must be at least 1000"));
            }
            if self.epsilons.iter().any(|e| !(*e >= 0.0)) {
                return Err(Error::config("cli", "epsilons", "must be non-negative"));
            }
            if self.besov_draws == 0 {
                return Err(Error::config("cli", "besov_draws", "must be at least 1"));
            }
            for &l in &self.besov_levels {
                crate::wavelet::Layout::new(self.d, l).map_err(|e| retag(e, "besov_levels"))?;
            }
        }
        if self.truth == TruthName::CustomCoefficients && self.truth_coefficients.is_none() {
            return Err(Error::config(
                "cli",
                "truth_coefficients",
                "required when truth = custom-coefficients",
            ));
        }
        Ok(())
    }
}

fn retag(e: Error, field: &str) -> Error {
    match e {
        Error::Config { reason, .. } => Error::config("cli", field, reason),
        other => other,
    }
}

/// Merge file and flags, fill defaults and validate.
pub fn parse_config(file: Option<&Path>, subcommand: Option<Subcommand>, flags: &Overrides) -> Result<RunConfig> {
    let mut cfg = match file {
        Some(p) => RunConfig::from_file(p)?,
        None => RunConfig::default(),
    };
    if subcommand.is_some() {
        cfg.subcommand = subcommand;
    }
    cfg.apply(flags)?;
    cfg.resolve()?;
    cfg.validate()?;
    Ok(cfg)
}

/// Artifacts of a finished run.
#[derive(Clone, Debug)]
pub struct RunReport {
    pub out_dir: PathBuf,
    /// File names written, relative to `out_dir`.
    pub files: Vec<String>,
}

struct Outputs {
    dir: PathBuf,
    files: Vec<String>,
    seeds: Vec<(String, u64)>,
}

impl Outputs {
    fn path(&mut self, name: &str) -> PathBuf {
        self.files.push(name.to_string());
        self.dir.join(name)
    }
}

fn output_dir(cfg: &RunConfig) -> PathBuf {
    if let Some(d) = &cfg.out_dir {
        return d.clone();
    }
    let root = std::env::var_os(OUTPUT_ROOT_VAR).map_or_else(|| PathBuf::from("runs"), PathBuf::from);
    let secs = SystemTime::now().duration_since(UNIX_EPOCH).map_or(0, |d| d.as_secs());
    root.join(format!("run-{secs}-seed{}", cfg.seed))
}

/// Run a validated configuration on a pool of `cfg.workers` threads.
pub fn dispatch(cfg: &RunConfig) -> Result<RunReport> {
    let workers = cfg.workers.unwrap_or(1);
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(workers)
        .build()
        .map_err(|e| Error::config("cli", "workers", e.to_string()))?;
    let dir = output_dir(cfg);
    fs::create_dir_all(&dir)?;
    let mut out = Outputs {
        dir,
        files: Vec::new(),
        seeds: vec![("master".into(), cfg.seed)],
    };
    fs::write(
        out.path("resolved-config.json"),
        serde_json::to_string_pretty(cfg)? + "\n",
    )?;
    let started = Instant::now();
    let started_unix = SystemTime::now().duration_since(UNIX_EPOCH).map_or(0, |d| d.as_secs());
    let sub = cfg.subcommand()?;
    pool.install(|| match sub {
        Subcommand::SamplePrior => cmd_sample_prior(cfg, &mut out),
        Subcommand::Simulate => cmd_simulate(cfg, &mut out),
        Subcommand::FitMap => cmd_fit_map(cfg, &mut out),
        Subcommand::FitMcmc => cmd_fit_mcmc(cfg, &mut out),
        Subcommand::RateStudy => cmd_rate_study(cfg, &mut out),
        Subcommand::ComparePriors => cmd_compare_priors(cfg, &mut out),
        Subcommand::Diagnostics => cmd_diagnostics(cfg, &mut out),
    })?;
    let manifest = serde_json::json!({
        "subcommand": sub.name(),
        "package": env!("CARGO_PKG_NAME"),
        "version": env!("CARGO_PKG_VERSION"),
        "seeds": out.seeds.iter().map(|(k, v)| (k.clone(), serde_json::json!(v))).collect::<serde_json::Map<_, _>>(),
        "workers": workers,
        "started_unix": started_unix,
        "elapsed_seconds": started.elapsed().as_secs_f64(),
        "files": out.files,
        "rerun": "besov --config resolved-config.json",
    });
    let manifest_path = out.path("manifest.json");
    fs::write(manifest_path, serde_json::to_string_pretty(&manifest)? + "\n")?;
    Ok(RunReport {
        out_dir: out.dir,
        files: out.files,
    })
}

fn wavelet(cfg: &RunConfig) -> Family {
    cfg.wavelet.unwrap_or(Family::Haar)
}

fn truth(cfg: &RunConfig) -> Result<TruthFunction> {
    if cfg.truth == TruthName::CustomCoefficients {
        let path = cfg
            .truth_coefficients
            .as_ref()
            .ok_or_else(|| Error::config("cli", "truth_coefficients", "missing"))?;
        let coeffs = io::read_coefficients(path, cfg.d)?;
        let basis = Arc::new(build_basis(wavelet(cfg), cfg.d, coeffs.max_level())?);
        return TruthFunction::from_coefficients(basis, coeffs, cfg.delta);
    }
    let params = cfg
        .truth_params
        .clone()
        .unwrap_or_else(|| TruthParams::default_for(cfg.d));
    if params.dim != cfg.d {
        return Err(Error::config(
            "cli",
            "truth_params",
            format!("dim {} differs from d={}", params.dim, cfg.d),
        ));
    }
    make_truth(cfg.truth, &params)
}

fn dataset(cfg: &RunConfig, out: &mut Outputs) -> Result<Dataset> {
    match &cfg.data {
        Some(p) => {
            let data = io::read_dataset(p, cfg.mu.clone())?;
            if data.dim() != cfg.d {
                return Err(Error::config(
                    "cli",
                    "data",
                    format!("file has d={}, config has d={}", data.dim(), cfg.d),
                ));
            }
            Ok(data)
        }
        None => {
            let seed = derive_seed(cfg.seed, DATA_STREAM);
            out.seeds.push(("data".into(), seed));
            simulate(&truth(cfg)?, &cfg.mu, cfg.n, seed)
        }
    }
}

fn basis_points(basis: &WaveletBasis) -> Vec<Vec<f64>> {
    (0..basis.grid_size()).map(|i| basis.grid_point(i)).collect()
}

fn cmd_sample_prior(cfg: &RunConfig, out: &mut Outputs) -> Result<()> {
    let level = cfg.max_level.unwrap_or_else(|| PriorSpec::default_level(cfg.n, cfg.d));
    let spec = PriorSpec::new(cfg.family, cfg.alpha, cfg.d, cfg.n, level)?;
    let basis = build_basis(wavelet(cfg), cfg.d, level)?;
    let seed = derive_seed(cfg.seed, PRIOR_STREAM);
    out.seeds.push(("prior".into(), seed));
    let draw = sample_prior(&spec, &basis, seed)?;
    io::write_coefficients(out.path("coefficients.csv"), &draw)?;
    let values = basis.inverse_transform(&draw)?;
    io::write_grid(out.path("draw-grid.csv"), &basis_points(&basis), &values)?;
    Ok(())
}

fn cmd_simulate(cfg: &RunConfig, out: &mut Outputs) -> Result<()> {
    let t = truth(cfg)?;
    let data = dataset(cfg, out)?;
    io::write_dataset(out.path("dataset.csv"), &data)?;
    let exponent = if cfg.d == 1 { 12 } else { 7 };
    io::write_truth(out.path("truth.csv"), &t.on_grid(exponent)?)?;
    Ok(())
}

fn fit_setup(cfg: &RunConfig, out: &mut Outputs) -> Result<(Dataset, WaveletBasis, PriorSpec, DesignCache)> {
    let data = dataset(cfg, out)?;
    let n = data.n().max(1);
    let level = cfg.max_level.unwrap_or_else(|| PriorSpec::default_level(n, cfg.d));
    let basis = build_basis(wavelet(cfg), cfg.d, level)?;
    let prior = PriorSpec::new(cfg.family, cfg.alpha, cfg.d, n, level)?;
    let cache = DesignCache::build(&basis, &data)?;
    Ok((data, basis, prior, cache))
}

fn write_fit_grid(path: PathBuf, basis: &WaveletBasis, coeffs: &crate::wavelet::CoefficientVector) -> Result<()> {
    let w = basis.inverse_transform(coeffs)?;
    let f: Vec<f64> = w.into_iter().map(logistic).collect();
    io::write_grid(path, &basis_points(basis), &f)
}

fn cmd_fit_map(cfg: &RunConfig, out: &mut Outputs) -> Result<()> {
    let (data, basis, prior, cache) = fit_setup(cfg, out)?;
    let fit = map_estimate(&data, &cache, &prior, &cfg.map_options())?;
    io::write_coefficients(out.path("map-coefficients.csv"), &fit.coeffs)?;
    write_fit_grid(out.path("map-grid.csv"), &basis, &fit.coeffs)?;
    let mut w = csv::Writer::from_path(out.path("map-summary.csv"))?;
    w.write_record(["objective", "objective_at_zero", "iterations", "converged", "nonzeros"])?;
    let nonzeros = fit.coeffs.values().iter().filter(|v| **v != 0.0).count();
    w.write_record([
        format!("{}", fit.objective),
        format!("{}", fit.objective_at_zero),
        fit.iterations.to_string(),
        fit.converged.to_string(),
        nonzeros.to_string(),
    ])?;
    w.flush()?;
    Ok(())
}

fn cmd_fit_mcmc(cfg: &RunConfig, out: &mut Outputs) -> Result<()> {
    let (data, basis, prior, cache) = fit_setup(cfg, out)?;
    let seed = derive_seed(cfg.seed, CHAIN_STREAM);
    out.seeds.push(("chain".into(), seed));
    let chain = run_pcn(&data, &cache, &prior, &cfg.chain_options(seed))?;
    if cfg.keep_draws {
        io::write_draws(out.path("draws.csv"), &chain.draws)?;
    }
    io::write_chain_summary(out.path("chain-summary.csv"), &chain)?;
    let pm = posterior_mean(&chain, &basis)?;
    io::write_coefficients(out.path("posterior-mean-coefficients.csv"), &pm.coefficients)?;
    io::write_grid(out.path("posterior-mean-grid.csv"), &basis_points(&basis), &pm.grid)?;
    Ok(())
}

fn study_config(cfg: &RunConfig) -> Result<RateStudyConfig> {
    let mut study = RateStudyConfig::new(truth(cfg)?);
    study.alpha = cfg.alpha;
    study.mu = cfg.mu.clone();
    study.n_grid = cfg.n_grid.clone();
    study.replicates = cfg.replicates;
    study.seed = cfg.seed;
    study.family = cfg.family;
    study.wavelet = cfg.wavelet.unwrap_or(Family::Daubechies(2));
    study.max_level = cfg.max_level;
    study.estimator = cfg.estimator;
    study.error_grid = cfg.error_grid;
    study.map = cfg.map_options();
    study.chain = ChainOptions {
        keep_draws: false,
        ..cfg.chain_options(0)
    };
    Ok(study)
}

fn rate_plot(title: &str, studies: &[(&RateStudyResult, &str)], alpha: f64, dim: usize) -> Result<String> {
    let mut plot = LogLogPlot::new(title, "n", "L2 error");
    for (study, colour) in studies {
        plot.points.extend(study.summary.iter().map(|s| (s.n as f64, s.median)));
        plot = plot.line(
            format!("{} fit {:.3}", study.family, study.fit.slope),
            study.fit.slope,
            study.fit.intercept,
            *colour,
        );
    }
    let first = &studies[0].0.summary;
    // reference line through the first median
    let slope = crate::experiment::reference_slope(alpha, dim);
    let (n0, e0) = (first[0].n as f64, first[0].median);
    plot = plot.line(
        format!("reference {slope:.3}"),
        slope,
        e0.ln() - slope * n0.ln(),
        "#888888",
    );
    plot.render()
}

fn cmd_rate_study(cfg: &RunConfig, out: &mut Outputs) -> Result<()> {
    let study = run_rate_study(&study_config(cfg)?)?;
    io::write_results(out.path("results.csv"), &study)?;
    io::write_summary(out.path("summary.csv"), &study)?;
    let svg = rate_plot("Median L2 error", &[(&study, "#1f77b4")], cfg.alpha, cfg.d)?;
    fs::write(out.path("rate-plot.svg"), svg)?;
    Ok(())
}

fn cmd_compare_priors(cfg: &RunConfig, out: &mut Outputs) -> Result<()> {
    let cmp: PriorComparison = compare_priors(&study_config(cfg)?)?;
    io::write_comparison(out.path("comparison.csv"), &cmp)?;
    for study in [&cmp.first, &cmp.second] {
        io::write_results(out.path(&format!("results-{}.csv", study.family)), study)?;
        io::write_summary(out.path(&format!("summary-{}.csv", study.family)), study)?;
    }
    let svg = rate_plot(
        "Median L2 error by prior",
        &[(&cmp.first, "#1f77b4"), (&cmp.second, "#d62728")],
        cfg.alpha,
        cfg.d,
    )?;
    fs::write(out.path("compare-plot.svg"), svg)?;
    Ok(())
}

fn cmd_diagnostics(cfg: &RunConfig, out: &mut Outputs) -> Result<()> {
    let seed = derive_seed(cfg.seed, PRIOR_STREAM);
    out.seeds.push(("prior".into(), seed));
    let level = cfg.max_level.unwrap_or_else(|| PriorSpec::default_level(cfg.n, cfg.d));
    let spec = PriorSpec::new(cfg.family, cfg.alpha, cfg.d, cfg.n, level)?;
    let basis = build_basis(wavelet(cfg), cfg.d, level)?;
    let curve = small_ball_curve(&spec, &basis, &cfg.epsilons, cfg.n_mc, seed)?;
    io::write_small_ball(out.path("small-ball.csv"), &curve)?;

    let top = cfg.besov_levels.iter().copied().max().unwrap_or(level);
    let draw_spec = PriorSpec::new(cfg.family, cfg.alpha, cfg.d, cfg.n, top)?;
    let layout = draw_spec.layout()?;
    let scales = prior_scales(&draw_spec)?;
    let d = cfg.d as f64;
    let alphas = [cfg.alpha - d - 0.25, cfg.alpha + 0.25];
    let mut w = csv::Writer::from_path(out.path("besov-norms.csv"))?;
    w.write_record(["draw", "L", "alpha_prime", "norm"])?;
    for k in 0..cfg.besov_draws {
        let mut rng = crate::rng::rng_for(derive_seed(seed, k as u64 + 1), 0);
        let values = crate::prior::draw_with(&draw_spec, &scales, &mut rng);
        let coeffs = crate::wavelet::CoefficientVector::new(layout, values)?;
        for &l in &cfg.besov_levels {
            let c = coeffs.truncated(l)?;
            for &a in &alphas {
                let norm = besov_norm(&c, &BesovNormQuery::new(a.max(0.0), 1.0, 1.0, cfg.d))?;
                w.write_record([k.to_string(), l.to_string(), format!("{a}"), format!("{norm}")])?;
            }
        }
    }
    w.flush()?;
    let t = truth(cfg)?;
    let exponent = if cfg.d == 1 { 12 } else { 7 };
    io::write_truth(out.path("truth.csv"), &t.on_grid(exponent)?)?;
    Ok(())
}

/// Parse arguments, run, and report. Errors print one line
/// `error code=<module.kind> message="..."` on stderr; returns the exit code.
pub fn main_with_args<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            use clap::error::ErrorKind;
            if matches!(e.kind(), ErrorKind::DisplayHelp | ErrorKind::DisplayVersion) {
                print!("{e}");
                return 0;
            }
            let msg = e.to_string();
            let first = msg.lines().next().unwrap_or("").trim_start_matches("error: ");
            eprintln!(
                "error code=cli.usage message={}",
                serde_json::Value::String(first.to_string())
            );
            return 2;
        }
    };
    let result = parse_config(cli.config.as_deref(), cli.subcommand, &cli.overrides).and_then(|cfg| dispatch(&cfg));
    match result {
        Ok(report) => {
            println!("{}", report.out_dir.display());
            0
        }
        Err(e) => {
            eprintln!("{}", error_line(&e));
            1
        }
    }
}

/// One-line machine-parsable rendering of an error.
pub fn error_line(e: &Error) -> String {
    let field = match e {
        Error::Config { field, .. } => format!(" field={field}"),
        _ => String::new(),
    };
    format!(
        "error code={}{field} message={}",
        e.code(),
        serde_json::Value::String(e.to_string())
    )
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn minimal_file_gets_defaults() {
        let mut cfg =
            RunConfig::from_json(r#"{"subcommand":"sample-prior","alpha":2,"d":1,"n":1,"L":8,"seed":7}"#).unwrap();
        cfg.resolve().unwrap();
        cfg.validate().unwrap();
        assert_eq!(cfg.max_level, Some(8));
        assert_eq!(cfg.wavelet, Some(Family::Haar));
        assert_eq!(cfg.n_iters, 50_000);
    }

    #[test]
    fn unknown_key_is_named() {
        let err = RunConfig::from_json(r#"{"subcommand":"simulate","alhpa":2}"#).unwrap_err();
        match err {
            Error::Config { field, .. } => assert_eq!(field, "alhpa"),
            other => panic!("{other}"),
        }
    }

    #[test]
    fn alpha_at_dimension_is_rejected() {
        let mut cfg = RunConfig::from_json(r#"{"subcommand":"sample-prior","alpha":1,"d":1,"n":1,"L":4}"#).unwrap();
        cfg.resolve().unwrap();
        let err = cfg.validate().unwrap_err();
        assert!(err.to_string().contains("alpha must exceed d"), "{err}");
    }

    #[test]
    fn flags_override_file() {
        let cli = Cli::try_parse_from(["besov", "rate-study", "--n-grid=256,1024,4096", "--alpha", "2"]).unwrap();
        let mut cfg = RunConfig::from_json(r#"{"n_grid":[10,20,30,40],"alpha":1.5}"#).unwrap();
        cfg.subcommand = cli.subcommand;
        cfg.apply(&cli.overrides).unwrap();
        assert_eq!(cfg.n_grid, vec![256, 1024, 4096]);
        assert_eq!(cfg.alpha, 2.0);
    }
}
