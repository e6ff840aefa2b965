use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use super::{soft_threshold, Target};
use crate::error::{Error, Result};
use crate::link::logistic;
use crate::model::{Dataset, DesignCache};
use crate::prior::{PriorFamily, PriorSpec};
use crate::wavelet::CoefficientVector;

/// Supports larger than this skip the Newton finish.
const POLISH_MAX_SUPPORT: usize = 600;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum StepPolicy {
    /// `4 / lambda` with `lambda` a guaranteed upper bound on `||Psi||_2^2`.
    Fixed,
    /// Start from `4 / lambda_max` (power iteration) and halve until the
    /// quadratic upper model holds.
    Backtracking,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct MapOptions {
    pub max_iters: usize,
    /// Relative objective change that stops the iteration.
    pub tol: f64,
    pub step: StepPolicy,
    pub accelerate: bool,
    /// Newton refinement on the support after the first-order phase.
    pub polish: bool,
}

impl Default for MapOptions {
    fn default() -> Self {
        MapOptions {
            max_iters: 5000,
            tol: 1e-8,
            step: StepPolicy::Backtracking,
            accelerate: true,
            polish: true,
        }
    }
}

impl MapOptions {
    pub fn validate(&self) -> Result<()> {
        if self.max_iters == 0 {
            return Err(Error::config("inference", "map_max_iters", "must be at least 1"));
        }
        if !(self.tol > 0.0) {
            return Err(Error::config("inference", "map_tol", "must be positive"));
        }
        Ok(())
    }
}

#[derive(Clone, Debug)]
pub struct MapResult {
    pub coeffs: CoefficientVector,
    pub converged: bool,
    pub iterations: usize,
    /// Final value of `-loglik + penalty`.
    pub objective: f64,
    pub objective_at_zero: f64,
    /// Objective after every first-order iteration.
    pub trace: Vec<f64>,
}

/// Posterior mode: minimiser of `-loglik(beta) + sum tau_lr |beta_lr|` with
/// `tau = 1 / s` (Laplace), or of `-loglik + sum beta^2 / (2 s^2)` (Gaussian).
pub fn map_estimate(data: &Dataset, cache: &DesignCache, prior: &PriorSpec, opts: &MapOptions) -> Result<MapResult> {
    opts.validate()?;
    let target = Target::new(data, cache, prior)?;
    let start = vec![0.0; target.dim()];
    let solved = solve(&target, opts, start);
    Ok(MapResult {
        coeffs: cache.scatter(&solved.beta)?.with_alpha(prior.alpha),
        converged: solved.converged,
        iterations: solved.iterations,
        objective: solved.objective,
        objective_at_zero: solved.objective_at_zero,
        trace: solved.trace,
    })
}

pub(crate) struct Solved {
    pub beta: Vec<f64>,
    pub converged: bool,
    pub iterations: usize,
    pub objective: f64,
    pub objective_at_zero: f64,
    pub trace: Vec<f64>,
}

struct Buffers {
    w: Vec<f64>,
    resid: Vec<f64>,
}

impl Target<'_> {
    fn objective(&self, beta: &[f64], buf: &mut Buffers) -> f64 {
        -self.loglik(beta, &mut buf.w) + self.penalty(beta)
    }

    fn prox(&self, v: f64, step: f64, j: usize) -> f64 {
        let s = self.scales[j];
        match self.family {
            PriorFamily::Laplace => soft_threshold(v, step / s),
            PriorFamily::Gaussian => v / (1.0 + step / (s * s)),
        }
    }

    /// Power iteration estimate of `lambda_max(Psi^T Psi)`.
    fn gram_lambda_estimate(&self) -> f64 {
        let m = self.dim();
        let mut v: Vec<f64> = (0..m).map(|j| 1.0 + 0.01 * ((j * 7919) % 101) as f64).collect();
        let mut u = vec![0.0; self.n_obs()];
        let mut lambda = 0.0;
        for _ in 0..60 {
            let norm = v.iter().map(|x| x * x).sum::<f64>().sqrt();
            if norm == 0.0 {
                return 0.0;
            }
            v.iter_mut().for_each(|x| *x /= norm);
            self.cache.latent(&v, &mut u);
            self.cache.transpose_mul(&u, &mut v);
            lambda = v.iter().map(|x| x * x).sum::<f64>().sqrt();
        }
        lambda
    }

    /// `||Psi||_1 ||Psi||_inf >= lambda_max(Psi^T Psi)`.
    fn gram_lambda_bound(&self) -> f64 {
        let mut col_sums = vec![0.0; self.dim()];
        let mut max_row: f64 = 0.0;
        for i in 0..self.n_obs() {
            let mut row = 0.0;
            for (c, v) in self.cache.row(i) {
                col_sums[c] += v.abs();
                row += v.abs();
            }
            max_row = max_row.max(row);
        }
        max_row * col_sums.iter().cloned().fold(0.0, f64::max)
    }
}

pub(crate) fn solve(target: &Target<'_>, opts: &MapOptions, start: Vec<f64>) -> Solved {
    let m = target.dim();
    let n = target.n_obs();
    let mut buf = Buffers {
        w: vec![0.0; n],
        resid: vec![0.0; n],
    };
    let zero = vec![0.0; m];
    let objective_at_zero = target.objective(&zero, &mut buf);
    if n == 0 || m == 0 {
        // pure penalty: minimised at zero
        return Solved {
            beta: zero,
            converged: true,
            iterations: 0,
            objective: objective_at_zero,
            objective_at_zero,
            trace: Vec::new(),
        };
    }
    let lambda = match opts.step {
        StepPolicy::Fixed => target.gram_lambda_bound(),
        StepPolicy::Backtracking => target.gram_lambda_estimate(),
    };
    let mut step = if lambda > 0.0 { 4.0 / lambda } else { 1.0 };

    let mut x = start;
    let mut fx = target.objective(&x, &mut buf);
    if fx > objective_at_zero {
        x.fill(0.0);
        fx = objective_at_zero;
    }
    let mut y = x.clone();
    let mut z = vec![0.0; m];
    let mut grad = vec![0.0; m];
    let mut momentum: f64 = 1.0;
    let mut trace = Vec::new();
    let mut converged = false;
    let mut iterations = 0;

    for it in 1..=opts.max_iters {
        iterations = it;
        let f_y = target.neg_loglik_grad(&y, &mut buf.w, &mut buf.resid, &mut grad);
        loop {
            for j in 0..m {
                z[j] = target.prox(y[j] - step * grad[j], step, j);
            }
            if opts.step == StepPolicy::Fixed {
                break;
            }
            let f_z = -target.loglik(&z, &mut buf.w);
            let mut lin = 0.0;
            let mut quad = 0.0;
            for j in 0..m {
                let d = z[j] - y[j];
                lin += grad[j] * d;
                quad += d * d;
            }
            if f_z <= f_y + lin + quad / (2.0 * step) + 1e-12 * f_y.abs() || step < 1e-300 {
                break;
            }
            step *= 0.5;
        }
        let fz = target.objective(&z, &mut buf);
        let previous = fx;
        if fz <= fx {
            if opts.accelerate {
                let next = 0.5 * (1.0 + (1.0 + 4.0 * momentum * momentum).sqrt());
                let beta = (momentum - 1.0) / next;
                for j in 0..m {
                    y[j] = z[j] + beta * (z[j] - x[j]);
                }
                momentum = next;
            } else {
                y.copy_from_slice(&z);
            }
            x.copy_from_slice(&z);
            fx = fz;
        } else {
            // momentum overshoot: restart from the last accepted iterate
            momentum = 1.0;
            y.copy_from_slice(&x);
        }
        trace.push(fx);
        if fz <= previous && (previous - fx) <= opts.tol * previous.abs().max(1.0) {
            converged = true;
            break;
        }
    }

    if opts.polish {
        for _ in 0..3 {
            match newton_polish(target, &x, &mut buf) {
                Some((beta, f_new, kkt_ok)) if f_new <= fx + 1e-12 * fx.abs().max(1.0) => {
                    x = beta;
                    fx = f_new;
                    if kkt_ok {
                        converged = true;
                        break;
                    }
                    // support too small: continue first-order iterations from here
                    let more = MapOptions { polish: false, ..*opts };
                    let again = solve(target, &more, x.clone());
                    if again.objective <= fx {
                        x = again.beta;
                        fx = again.objective;
                    }
                }
                _ => break,
            }
        }
    }

    Solved {
        beta: x,
        converged,
        iterations,
        objective: fx,
        objective_at_zero,
        trace,
    }
}

fn support_grad_max(
    target: &Target<'_>,
    x: &[f64],
    support: &[usize],
    signs: &[f64],
    buf: &mut Buffers,
    grad: &mut [f64],
) -> f64 {
    target.neg_loglik_grad(x, &mut buf.w, &mut buf.resid, grad);
    let laplace = target.family == PriorFamily::Laplace;
    support
        .iter()
        .zip(signs)
        .map(|(&j, &sg)| {
            let s = target.scales[j];
            (grad[j] + if laplace { sg / s } else { x[j] / (s * s) }).abs()
        })
        .fold(0.0, f64::max)
}

/// Newton iterations on the support of `beta` with signs held fixed; a
/// coordinate that would change sign is clamped to zero and leaves the
/// support. Returns the refined point, its objective and whether the
/// optimality conditions hold at the zero coordinates.
fn newton_polish(target: &Target<'_>, beta: &[f64], buf: &mut Buffers) -> Option<(Vec<f64>, f64, bool)> {
    let m = target.dim();
    let laplace = target.family == PriorFamily::Laplace;
    let mut support: Vec<usize> = (0..m).filter(|&j| !laplace || beta[j] != 0.0).collect();
    if support.is_empty() || support.len() > POLISH_MAX_SUPPORT {
        return None;
    }
    let mut x = beta.to_vec();
    let mut fx = target.objective(&x, buf);
    let mut grad_full = vec![0.0; m];
    let mut pos_of = vec![usize::MAX; m];

    for _ in 0..50 {
        if support.is_empty() {
            break;
        }
        let k = support.len();
        pos_of.fill(usize::MAX);
        for (p, &j) in support.iter().enumerate() {
            pos_of[j] = p;
        }
        let signs: Vec<f64> = support.iter().map(|&j| x[j].signum()).collect();
        target.neg_loglik_grad(&x, &mut buf.w, &mut buf.resid, &mut grad_full);
        let mut g = DVector::<f64>::zeros(k);
        for (p, &j) in support.iter().enumerate() {
            let s = target.scales[j];
            g[p] = grad_full[j] + if laplace { signs[p] / s } else { x[j] / (s * s) };
        }
        if g.amax() < 1e-13 * fx.abs().max(1.0) {
            break;
        }
        let mut h = DMatrix::<f64>::zeros(k, k);
        for i in 0..target.n_obs() {
            let p = logistic(buf.w[i]);
            let wgt = p * (1.0 - p);
            let row: Vec<(usize, f64)> = target
                .cache
                .row(i)
                .filter_map(|(c, v)| (pos_of[c] != usize::MAX).then(|| (pos_of[c], v)))
                .collect();
            for &(a, va) in &row {
                for &(b, vb) in &row {
                    h[(a, b)] += wgt * va * vb;
                }
            }
        }
        if !laplace {
            for (p, &j) in support.iter().enumerate() {
                let s = target.scales[j];
                h[(p, p)] += 1.0 / (s * s);
            }
        }
        let ridge = 1e-12 * (0..k).map(|p| h[(p, p)]).fold(0.0, f64::max).max(1e-300);
        for p in 0..k {
            h[(p, p)] += ridge;
        }
        let chol = h.cholesky()?;
        let dir = chol.solve(&(-&g));
        let slope = g.dot(&dir);
        let mut t = 1.0;
        let mut accepted = false;
        let mut dropped = false;
        while t > 1e-12 {
            let mut cand = x.clone();
            let mut clamped = false;
            for (p, &j) in support.iter().enumerate() {
                cand[j] = x[j] + t * dir[p];
                if laplace && cand[j].signum() != signs[p] {
                    cand[j] = 0.0;
                    clamped = true;
                }
            }
            let fc = target.objective(&cand, buf);
            let ok = if clamped {
                fc < fx
            } else if fc <= fx + 1e-4 * t * slope {
                true
            } else {
                // decrease below objective roundoff: judge by the gradient instead
                fc <= fx + 1e-13 * fx.abs().max(1.0)
                    && support_grad_max(target, &cand, &support, &signs, buf, &mut grad_full) < g.amax()
            };
            if ok {
                x = cand;
                fx = fc;
                accepted = true;
                dropped = clamped;
                break;
            }
            t *= 0.5;
        }
        if !accepted {
            break;
        }
        if dropped {
            support.retain(|&j| x[j] != 0.0);
        }
    }
    target.neg_loglik_grad(&x, &mut buf.w, &mut buf.resid, &mut grad_full);
    let kkt_ok =
        !laplace || (0..m).all(|j| x[j] != 0.0 || grad_full[j].abs() <= (1.0 / target.scales[j]) * (1.0 + 1e-9));
    Some((x, fx, kkt_ok))
}
