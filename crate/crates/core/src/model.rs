//! Ground truths, simulated classification data and the Bernoulli
//! log-likelihood in coefficient space.

use std::fmt;
use std::str::FromStr;
use std::sync::Arc;

use rand::Rng as _;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::link::{log1m_logistic, log_logistic, logistic};
use crate::rng::rng_for;
use crate::wavelet::{CoefficientVector, Layout, WaveletBasis};

/// Per-axis resolution of the grid on which truths are range-checked.
pub const TRUTH_CHECK_EXPONENT_1D: usize = 14;
pub const TRUTH_CHECK_EXPONENT_2D: usize = 8;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum TruthName {
    SpikyPiecewiseLinear,
    SmoothBump,
    CustomCoefficients,
}

impl fmt::Display for TruthName {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            TruthName::SpikyPiecewiseLinear => "spiky-piecewise-linear",
            TruthName::SmoothBump => "smooth-bump",
            TruthName::CustomCoefficients => "custom-coefficients",
        })
    }
}

impl FromStr for TruthName {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "spiky" | "spiky-piecewise-linear" => Ok(TruthName::SpikyPiecewiseLinear),
            "smooth-bump" | "bump" => Ok(TruthName::SmoothBump),
            "custom-coefficients" | "custom" => Ok(TruthName::CustomCoefficients),
            other => Err(Error::config("model", "truth", format!("unknown truth '{other}'"))),
        }
    }
}

/// A tent (d = 1) or cone (d = 2) added to the latent background.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Spike {
    pub center: Vec<f64>,
    pub half_width: f64,
    pub height: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TruthParams {
    pub dim: usize,
    pub delta: f64,
    pub background: f64,
    pub spikes: Vec<Spike>,
    pub bump_center: Vec<f64>,
    pub bump_width: f64,
    pub bump_height: f64,
}

impl TruthParams {
    /// Two tents of opposite sign on a flat background.
    pub fn default_for(dim: usize) -> Self {
        let c = |a: f64, b: f64| if dim == 1 { vec![a] } else { vec![a, b] };
        TruthParams {
            dim,
            delta: 0.05,
            background: -0.5,
            spikes: vec![
                Spike {
                    center: c(0.3, 0.35),
                    half_width: 0.15,
                    height: 2.5,
                },
                Spike {
                    center: c(0.7, 0.6),
                    half_width: 0.2,
                    height: -1.5,
                },
            ],
            bump_center: c(0.5, 0.5),
            bump_width: 0.15,
            bump_height: 1.5,
        }
    }
}

#[derive(Clone, Debug)]
enum Shape {
    Spiky {
        background: f64,
        spikes: Vec<Spike>,
    },
    Bump {
        background: f64,
        center: Vec<f64>,
        width: f64,
        height: f64,
    },
    Coefficients {
        basis: Arc<WaveletBasis>,
        coeffs: CoefficientVector,
    },
}

/// A true probability surface `f0 = H(w0)` bounded inside `[delta, 1 - delta]`.
#[derive(Clone, Debug)]
pub struct TruthFunction {
    name: TruthName,
    dim: usize,
    delta: f64,
    shape: Shape,
}

fn distance(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum::<f64>().sqrt()
}

pub fn make_truth(name: TruthName, params: &TruthParams) -> Result<TruthFunction> {
    if !(1..=2).contains(&params.dim) {
        return Err(Error::config("model", "d", "must be 1 or 2"));
    }
    let dim = params.dim;
    let point_ok = |c: &[f64]| c.len() == dim && c.iter().all(|v| (0.0..=1.0).contains(v));
    let shape = match name {
        TruthName::SpikyPiecewiseLinear => {
            for (i, s) in params.spikes.iter().enumerate() {
                if !point_ok(&s.center) {
                    return Err(Error::config(
                        "model",
                        format!("spikes[{i}].center"),
                        "must be a point in [0,1]^d",
                    ));
                }
                if !(s.half_width > 0.0) || !s.height.is_finite() {
                    return Err(Error::config(
                        "model",
                        format!("spikes[{i}]"),
                        "half_width must be positive and height finite",
                    ));
                }
            }
            Shape::Spiky {
                background: params.background,
                spikes: params.spikes.clone(),
            }
        }
        TruthName::SmoothBump => {
            if !point_ok(&params.bump_center) {
                return Err(Error::config("model", "bump_center", "must be a point in [0,1]^d"));
            }
            if !(params.bump_width > 0.0) || !params.bump_height.is_finite() {
                return Err(Error::config(
                    "model",
                    "bump_width",
                    "width must be positive and height finite",
                ));
            }
            Shape::Bump {
                background: params.background,
                center: params.bump_center.clone(),
                width: params.bump_width,
                height: params.bump_height,
            }
        }
        TruthName::CustomCoefficients => {
            return Err(Error::config(
                "model",
                "truth",
                "custom-coefficients truths are built with TruthFunction::from_coefficients",
            ))
        }
    };
    TruthFunction::checked(name, dim, params.delta, shape)
}

impl TruthFunction {
    /// Truth whose latent surface is a wavelet expansion.
    pub fn from_coefficients(basis: Arc<WaveletBasis>, coeffs: CoefficientVector, delta: f64) -> Result<Self> {
        if coeffs.layout() != basis.layout() {
            return Err(Error::shape(
                "model",
                "coefficients matching the basis",
                "a different layout",
            ));
        }
        let dim = basis.dim();
        TruthFunction::checked(
            TruthName::CustomCoefficients,
            dim,
            delta,
            Shape::Coefficients { basis, coeffs },
        )
    }

    fn checked(name: TruthName, dim: usize, delta: f64, shape: Shape) -> Result<Self> {
        if !(delta > 0.0 && delta < 0.5) {
            return Err(Error::config(
                "model",
                "delta",
                format!("must lie in (0, 1/2), got {delta}"),
            ));
        }
        let truth = TruthFunction {
            name,
            dim,
            delta,
            shape,
        };
        let (lo, hi) = truth.latent_range()?;
        let (flo, fhi) = (logistic(lo), logistic(hi));
        if flo < delta || fhi > 1.0 - delta {
            return Err(Error::config(
                "model",
                "truth",
                format!(
                    "f0 ranges over [{flo:.4}, {fhi:.4}], outside [{delta}, {}]",
                    1.0 - delta
                ),
            ));
        }
        Ok(truth)
    }

    /// Min and max of `w0` over the check grid and any spike apexes.
    fn latent_range(&self) -> Result<(f64, f64)> {
        let mut points: Vec<Vec<f64>> = Vec::new();
        match self.dim {
            1 => {
                let n = 1usize << TRUTH_CHECK_EXPONENT_1D;
                points.extend((0..=n).map(|k| vec![k as f64 / n as f64]));
            }
            _ => {
                let n = 1usize << TRUTH_CHECK_EXPONENT_2D;
                for iy in 0..=n {
                    for ix in 0..=n {
                        points.push(vec![ix as f64 / n as f64, iy as f64 / n as f64]);
                    }
                }
            }
        }
        match &self.shape {
            Shape::Spiky { spikes, .. } => points.extend(spikes.iter().map(|s| s.center.clone())),
            Shape::Bump { center, .. } => points.push(center.clone()),
            Shape::Coefficients { .. } => {}
        }
        let mut lo = f64::INFINITY;
        let mut hi = f64::NEG_INFINITY;
        for p in &points {
            let v = self.latent(p)?;
            if !v.is_finite() {
                return Err(Error::config("model", "truth", "latent surface is not finite"));
            }
            lo = lo.min(v);
            hi = hi.max(v);
        }
        Ok((lo, hi))
    }

    pub fn name(&self) -> TruthName {
        self.name
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn delta(&self) -> f64 {
        self.delta
    }

    /// `w0(x)`.
    pub fn latent(&self, x: &[f64]) -> Result<f64> {
        if x.len() != self.dim {
            return Err(Error::shape(
                "model",
                format!("point of dimension {}", self.dim),
                x.len(),
            ));
        }
        Ok(match &self.shape {
            Shape::Spiky { background, spikes } => {
                background
                    + spikes
                        .iter()
                        .map(|s| s.height * (1.0 - distance(x, &s.center) / s.half_width).max(0.0))
                        .sum::<f64>()
            }
            Shape::Bump {
                background,
                center,
                width,
                height,
            } => {
                let r = distance(x, center) / width;
                background + height * (-0.5 * r * r).exp()
            }
            Shape::Coefficients { basis, coeffs } => basis.synthesize_at(coeffs, x)?,
        })
    }

    /// `f0(x) = H(w0(x))`.
    pub fn prob(&self, x: &[f64]) -> Result<f64> {
        Ok(logistic(self.latent(x)?))
    }

    /// Latent coefficients: projection of `w0` sampled on the basis grid.
    pub fn latent_coefficients(&self, basis: &WaveletBasis) -> Result<CoefficientVector> {
        if basis.dim() != self.dim {
            return Err(Error::shape(
                "model",
                format!("basis of dimension {}", self.dim),
                basis.dim(),
            ));
        }
        let samples = (0..basis.grid_size())
            .map(|i| self.latent(&basis.grid_point(i)))
            .collect::<Result<Vec<_>>>()?;
        basis.forward_transform(&samples)
    }

    /// `(x, f0, w0)` rows on a `2^exponent`-per-axis grid with `x = k / 2^exponent`.
    pub fn on_grid(&self, exponent: usize) -> Result<Vec<(Vec<f64>, f64, f64)>> {
        grid_points(self.dim, exponent)
            .into_iter()
            .map(|x| {
                let w = self.latent(&x)?;
                Ok((x, logistic(w), w))
            })
            .collect()
    }
}

/// Row-major grid points `k / 2^exponent` (first axis fastest).
pub fn grid_points(dim: usize, exponent: usize) -> Vec<Vec<f64>> {
    let n = 1usize << exponent;
    let h = 1.0 / n as f64;
    match dim {
        1 => (0..n).map(|k| vec![k as f64 * h]).collect(),
        _ => (0..n * n)
            .map(|i| vec![(i % n) as f64 * h, (i / n) as f64 * h])
            .collect(),
    }
}

/// Cell midpoints `(k + 1/2) / 2^exponent` (first axis fastest).
pub fn midpoints(dim: usize, exponent: usize) -> Vec<Vec<f64>> {
    let n = 1usize << exponent;
    let h = 1.0 / n as f64;
    match dim {
        1 => (0..n).map(|k| vec![(k as f64 + 0.5) * h]).collect(),
        _ => (0..n * n)
            .map(|i| vec![((i % n) as f64 + 0.5) * h, ((i / n) as f64 + 0.5) * h])
            .collect(),
    }
}

/// Covariate law on `[0,1]^d`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum MuSpec {
    Uniform,
    /// Density proportional to `weights` on equal cells: `m` cells when
    /// `d = 1`, an `m x m` row-major grid when `d = 2`.
    PiecewiseConstant {
        weights: Vec<f64>,
    },
}

impl MuSpec {
    fn cells_per_axis(&self, dim: usize) -> Result<usize> {
        match self {
            MuSpec::Uniform => Ok(1),
            MuSpec::PiecewiseConstant { weights } => {
                if weights.is_empty() {
                    return Err(Error::config(
                        "model",
                        "mu",
                        "piecewise-constant density needs at least one cell",
                    ));
                }
                if let Some(w) = weights.iter().find(|w| !(w.is_finite() && **w > 0.0)) {
                    return Err(Error::config(
                        "model",
                        "mu",
                        format!("density must be bounded and bounded away from zero, got weight {w}"),
                    ));
                }
                if dim == 1 {
                    Ok(weights.len())
                } else {
                    let m = (weights.len() as f64).sqrt().round() as usize;
                    if m * m != weights.len() {
                        return Err(Error::config("model", "mu", "d = 2 needs a square number of cells"));
                    }
                    Ok(m)
                }
            }
        }
    }

    pub fn validate(&self, dim: usize) -> Result<()> {
        self.cells_per_axis(dim).map(|_| ())
    }

    /// `(c_lo, c_hi)`: density bounds.
    pub fn bounds(&self) -> (f64, f64) {
        match self {
            MuSpec::Uniform => (1.0, 1.0),
            MuSpec::PiecewiseConstant { weights } => {
                let mean = weights.iter().sum::<f64>() / weights.len() as f64;
                let lo = weights.iter().cloned().fold(f64::INFINITY, f64::min);
                let hi = weights.iter().cloned().fold(0.0, f64::max);
                (lo / mean, hi / mean)
            }
        }
    }

    /// Probability mass of each cell (row-major).
    pub fn cell_masses(&self) -> Vec<f64> {
        match self {
            MuSpec::Uniform => vec![1.0],
            MuSpec::PiecewiseConstant { weights } => {
                let total: f64 = weights.iter().sum();
                weights.iter().map(|w| w / total).collect()
            }
        }
    }
}

/// Labelled sample `(X_i, Y_i)`, `X_i` in `[0,1]^d`, `Y_i` in {0, 1}.
#[derive(Clone, Debug, PartialEq)]
pub struct Dataset {
    dim: usize,
    x: Vec<f64>,
    y: Vec<u8>,
    mu: MuSpec,
}

impl Dataset {
    pub fn new(dim: usize, x: Vec<f64>, y: Vec<u8>, mu: MuSpec) -> Result<Self> {
        if !(1..=2).contains(&dim) {
            return Err(Error::config("model", "d", "must be 1 or 2"));
        }
        mu.validate(dim)?;
        if x.len() != y.len() * dim {
            return Err(Error::shape("model", y.len() * dim, x.len()));
        }
        if let Some(v) = x.iter().find(|v| !(0.0..=1.0).contains(*v)) {
            return Err(Error::domain("model", format!("covariate {v} outside [0,1]")));
        }
        if let Some(v) = y.iter().find(|v| **v > 1) {
            return Err(Error::domain("model", format!("label {v} is not 0 or 1")));
        }
        Ok(Dataset { dim, x, y, mu })
    }

    pub fn empty(dim: usize) -> Self {
        Dataset {
            dim,
            x: Vec::new(),
            y: Vec::new(),
            mu: MuSpec::Uniform,
        }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn n(&self) -> usize {
        self.y.len()
    }

    pub fn point(&self, i: usize) -> &[f64] {
        &self.x[i * self.dim..(i + 1) * self.dim]
    }

    pub fn covariates(&self) -> &[f64] {
        &self.x
    }

    pub fn labels(&self) -> &[u8] {
        &self.y
    }

    pub fn mu(&self) -> &MuSpec {
        &self.mu
    }
}

/// Draw `n` observations: `X_i ~ mu`, `Y_i | X_i ~ Bernoulli(f0(X_i))`.
pub fn simulate(truth: &TruthFunction, mu: &MuSpec, n: usize, seed: u64) -> Result<Dataset> {
    if n == 0 {
        return Err(Error::config("model", "n", "must be at least 1"));
    }
    let dim = truth.dim();
    let m = mu.cells_per_axis(dim)?;
    let masses = mu.cell_masses();
    let cumulative: Vec<f64> = masses
        .iter()
        .scan(0.0, |acc, p| {
            *acc += p;
            Some(*acc)
        })
        .collect();
    let mut rng = rng_for(seed, 0);
    let mut x = Vec::with_capacity(n * dim);
    let mut y = Vec::with_capacity(n);
    let mut point = vec![0.0; dim];
    for _ in 0..n {
        let cell = if masses.len() == 1 {
            0
        } else {
            let u: f64 = rng.random();
            cumulative.partition_point(|c| *c <= u).min(masses.len() - 1)
        };
        let cell_index = [cell % m, cell / m];
        for (axis, p) in point.iter_mut().enumerate() {
            let u: f64 = rng.random();
            *p = (cell_index[axis] as f64 + u) / m as f64;
        }
        let f = truth.prob(&point)?;
        let u: f64 = rng.random();
        x.extend_from_slice(&point);
        y.push(u8::from(u < f));
    }
    Dataset::new(dim, x, y, mu.clone())
}

/// Sparse design matrix `Psi[i, c] = psi_{col c}(X_i)` over a set of active
/// basis columns, stored row-compressed.
#[derive(Clone, Debug)]
pub struct DesignCache {
    layout: Layout,
    columns: Vec<usize>,
    row_ptr: Vec<usize>,
    col_idx: Vec<u32>,
    vals: Vec<f64>,
}

impl DesignCache {
    /// Cache over every basis element.
    pub fn build(basis: &WaveletBasis, data: &Dataset) -> Result<Self> {
        let all: Vec<usize> = (0..basis.len()).collect();
        Self::build_restricted(basis, data, &all)
    }

    /// Cache over the listed flat indices only; every other coefficient is
    /// held at zero by likelihood-based inference.
    pub fn build_restricted(basis: &WaveletBasis, data: &Dataset, active: &[usize]) -> Result<Self> {
        if basis.dim() != data.dim() {
            return Err(Error::shape(
                "model",
                format!("dataset of dimension {}", basis.dim()),
                data.dim(),
            ));
        }
        let layout = basis.layout();
        let mut col_of = vec![u32::MAX; layout.len()];
        for (c, &flat) in active.iter().enumerate() {
            if flat >= layout.len() {
                return Err(Error::domain("model", format!("active index {flat} outside basis")));
            }
            if col_of[flat] != u32::MAX {
                return Err(Error::domain("model", format!("active index {flat} listed twice")));
            }
            col_of[flat] = c as u32;
        }
        let rows: Vec<Vec<(u32, f64)>> = (0..data.n())
            .into_par_iter()
            .map(|i| {
                let mut row = Vec::new();
                basis.for_each_active(data.point(i), |flat, v| {
                    let c = col_of[flat];
                    if c != u32::MAX {
                        row.push((c, v));
                    }
                });
                row
            })
            .collect();
        let mut row_ptr = Vec::with_capacity(data.n() + 1);
        row_ptr.push(0);
        let nnz: usize = rows.iter().map(Vec::len).sum();
        let mut col_idx = Vec::with_capacity(nnz);
        let mut vals = Vec::with_capacity(nnz);
        for row in rows {
            for (c, v) in row {
                col_idx.push(c);
                vals.push(v);
            }
            row_ptr.push(col_idx.len());
        }
        Ok(DesignCache {
            layout,
            columns: active.to_vec(),
            row_ptr,
            col_idx,
            vals,
        })
    }

    pub fn layout(&self) -> Layout {
        self.layout
    }

    /// Flat basis index of each active column.
    pub fn columns(&self) -> &[usize] {
        &self.columns
    }

    pub fn n_columns(&self) -> usize {
        self.columns.len()
    }

    pub fn n_rows(&self) -> usize {
        self.row_ptr.len() - 1
    }

    pub fn nnz(&self) -> usize {
        self.vals.len()
    }

    /// `(column, psi(X_i))` pairs of row `i`.
    pub fn row(&self, i: usize) -> impl Iterator<Item = (usize, f64)> + '_ {
        let (a, b) = (self.row_ptr[i], self.row_ptr[i + 1]);
        self.col_idx[a..b]
            .iter()
            .zip(&self.vals[a..b])
            .map(|(&c, &v)| (c as usize, v))
    }

    /// `w = Psi beta` for active coefficients `beta`.
    pub fn latent(&self, beta: &[f64], out: &mut [f64]) {
        for (i, o) in out.iter_mut().enumerate() {
            let (a, b) = (self.row_ptr[i], self.row_ptr[i + 1]);
            let mut acc = 0.0;
            for k in a..b {
                acc += self.vals[k] * beta[self.col_idx[k] as usize];
            }
            *o = acc;
        }
    }

    /// `out = Psi^T r`.
    pub fn transpose_mul(&self, r: &[f64], out: &mut [f64]) {
        out.fill(0.0);
        for (i, &ri) in r.iter().enumerate() {
            if ri == 0.0 {
                continue;
            }
            let (a, b) = (self.row_ptr[i], self.row_ptr[i + 1]);
            for k in a..b {
                out[self.col_idx[k] as usize] += self.vals[k] * ri;
            }
        }
    }

    /// Active entries of a full coefficient vector.
    pub fn gather(&self, coeffs: &CoefficientVector) -> Vec<f64> {
        let v = coeffs.values();
        self.columns.iter().map(|&i| v[i]).collect()
    }

    /// Full coefficient vector with active entries from `beta`, zeros elsewhere.
    pub fn scatter(&self, beta: &[f64]) -> Result<CoefficientVector> {
        let mut out = vec![0.0; self.layout.len()];
        for (&i, &b) in self.columns.iter().zip(beta) {
            out[i] = b;
        }
        CoefficientVector::new(self.layout, out)
    }

    fn check(&self, coeffs: &CoefficientVector, data: &Dataset) -> Result<()> {
        if coeffs.layout() != self.layout {
            return Err(Error::shape(
                "model",
                "coefficients matching the design cache",
                "a different layout",
            ));
        }
        if data.n() != self.n_rows() {
            return Err(Error::shape(
                "model",
                format!("dataset of {} observations", self.n_rows()),
                data.n(),
            ));
        }
        Ok(())
    }
}

/// `sum_i y_i ln H(w_i) + (1 - y_i) ln(1 - H(w_i))`.
pub(crate) fn loglik_from_latent(y: &[u8], w: &[f64]) -> f64 {
    y.iter()
        .zip(w)
        .map(|(&yi, &wi)| if yi == 1 { log_logistic(wi) } else { log1m_logistic(wi) })
        .sum()
}

/// Bernoulli log-likelihood of the coefficients under the logistic link.
pub fn log_likelihood(coeffs: &CoefficientVector, cache: &DesignCache, data: &Dataset) -> Result<f64> {
    cache.check(coeffs, data)?;
    let beta = cache.gather(coeffs);
    let mut w = vec![0.0; data.n()];
    cache.latent(&beta, &mut w);
    Ok(loglik_from_latent(data.labels(), &w))
}

/// Score `sum_i (y_i - H(w_i)) psi_lr(X_i)`; zero outside the active columns.
pub fn grad_log_likelihood(
    coeffs: &CoefficientVector,
    cache: &DesignCache,
    data: &Dataset,
) -> Result<CoefficientVector> {
    cache.check(coeffs, data)?;
    let beta = cache.gather(coeffs);
    let mut w = vec![0.0; data.n()];
    cache.latent(&beta, &mut w);
    let resid: Vec<f64> = data
        .labels()
        .iter()
        .zip(&w)
        .map(|(&y, &wi)| y as f64 - logistic(wi))
        .collect();
    let mut g = vec![0.0; cache.n_columns()];
    cache.transpose_mul(&resid, &mut g);
    cache.scatter(&g)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::wavelet::{build_basis, Family};

    #[test]
    fn flat_bump_is_one_half() {
        let mut p = TruthParams::default_for(1);
        p.background = 0.0;
        p.bump_height = 0.0;
        let t = make_truth(TruthName::SmoothBump, &p).unwrap();
        for x in [0.0, 0.3, 1.0] {
            assert_eq!(t.prob(&[x]).unwrap(), 0.5);
        }
    }

    #[test]
    fn spike_apex_value() {
        let p = TruthParams {
            background: 0.0,
            spikes: vec![Spike {
                center: vec![0.4],
                half_width: 0.05,
                height: 2.0,
            }],
            ..TruthParams::default_for(1)
        };
        let t = make_truth(TruthName::SpikyPiecewiseLinear, &p).unwrap();
        assert!((t.prob(&[0.4]).unwrap() - 0.880797077977882).abs() < 1e-12);
    }

    #[test]
    fn truth_outside_clamp_is_rejected() {
        let p = TruthParams {
            spikes: vec![Spike {
                center: vec![0.5],
                half_width: 0.1,
                height: 5.0,
            }],
            ..TruthParams::default_for(1)
        };
        let err = make_truth(TruthName::SpikyPiecewiseLinear, &p).unwrap_err();
        assert!(matches!(err, Error::Config { .. }));
        let p = TruthParams {
            delta: 0.5,
            ..TruthParams::default_for(1)
        };
        assert!(make_truth(TruthName::SmoothBump, &p).is_err());
    }

    #[test]
    fn invalid_mu_is_rejected() {
        let t = make_truth(TruthName::SmoothBump, &TruthParams::default_for(1)).unwrap();
        for w in [vec![], vec![1.0, 0.0], vec![1.0, f64::INFINITY]] {
            let mu = MuSpec::PiecewiseConstant { weights: w };
            assert!(simulate(&t, &mu, 10, 0).is_err());
        }
        let t2 = make_truth(TruthName::SmoothBump, &TruthParams::default_for(2)).unwrap();
        let mu = MuSpec::PiecewiseConstant { weights: vec![1.0; 3] };
        assert!(simulate(&t2, &mu, 10, 0).is_err());
    }

    #[test]
    fn cache_rows_match_basis_evaluation() {
        let basis = build_basis(Family::Daubechies(2), 1, 4).unwrap();
        let t = make_truth(TruthName::SmoothBump, &TruthParams::default_for(1)).unwrap();
        let data = simulate(&t, &MuSpec::Uniform, 30, 3).unwrap();
        let cache = DesignCache::build(&basis, &data).unwrap();
        for i in 0..data.n() {
            for (c, v) in cache.row(i) {
                let (l, r) = basis.layout().locate(cache.columns()[c]);
                let direct = basis.evaluate_basis(l, r, data.point(i)).unwrap();
                assert!((v - direct).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn restricted_cache_rejects_duplicates() {
        let basis = build_basis(Family::Haar, 1, 2).unwrap();
        let data = Dataset::empty(1);
        assert!(DesignCache::build_restricted(&basis, &data, &[1, 1]).is_err());
        assert!(DesignCache::build_restricted(&basis, &data, &[99]).is_err());
    }
}
