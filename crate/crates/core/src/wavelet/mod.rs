//! Periodised orthonormal wavelet bases on `[0,1]^d`, `d` in {1, 2}.
//!
//! A basis is described by its [`Family`], a truncation level `L` and a
//! dyadic grid of `2^J` points per axis (`J >= L+1`). Grid sample `k` sits
//! at `x = k / 2^J`. Transforms map grid samples (function values) to the
//! `L^2` coefficients of [`Layout`] and back; basis functions are evaluated
//! pointwise from per-level profiles on the same grid, so pointwise
//! synthesis and the inverse transform agree at grid points.
//!
//! Haar functions are piecewise constant on grid cells and are evaluated
//! exactly. Daubechies functions are evaluated by linear interpolation of
//! their grid profile; in one dimension the default grid has at least
//! `2^14` points.

mod coeffs;
mod filters;
mod transform;

pub use coeffs::{CoefficientVector, Layout};

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use transform::{analyze, synthesize, synthesize_approx};

/// Minimum per-axis grid exponent for one-dimensional Daubechies bases.
pub const DAUBECHIES_MIN_GRID_EXPONENT: usize = 14;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(try_from = "String", into = "String")]
pub enum Family {
    Haar,
    /// Daubechies wavelet with the given number of vanishing moments
    /// (`Daubechies(2)` is the 4-tap "D4").
    Daubechies(usize),
}

impl Family {
    pub fn taps(&self) -> usize {
        match self {
            Family::Haar => 2,
            Family::Daubechies(k) => 2 * k,
        }
    }
}

impl fmt::Display for Family {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Family::Haar => write!(f, "haar"),
            Family::Daubechies(k) => write!(f, "db{k}"),
        }
    }
}

impl FromStr for Family {
    type Err = Error;

    /// Accepts `haar`, `dbK` (K vanishing moments) and `daubechies-N` / `dN`
    /// (N taps).
    fn from_str(s: &str) -> Result<Self> {
        let lower = s.trim().to_ascii_lowercase();
        let bad = || Error::config("wavelet", "family", format!("unknown wavelet family '{s}'"));
        if lower == "haar" || lower == "db1" {
            return Ok(Family::Haar);
        }
        let moments = if let Some(k) = lower.strip_prefix("db") {
            k.parse::<usize>().map_err(|_| bad())?
        } else if let Some(n) = lower.strip_prefix("daubechies-").or_else(|| lower.strip_prefix('d')) {
            let taps = n.parse::<usize>().map_err(|_| bad())?;
            if taps % 2 != 0 {
                return Err(bad());
            }
            taps / 2
        } else {
            return Err(bad());
        };
        match moments {
            1 => Ok(Family::Haar),
            k => Ok(Family::Daubechies(k)),
        }
    }
}

impl TryFrom<String> for Family {
    type Error = Error;
    fn try_from(s: String) -> Result<Self> {
        s.parse()
    }
}

impl From<Family> for String {
    fn from(f: Family) -> String {
        f.to_string()
    }
}

/// Grid samples of one scaling function or wavelet at a given level, with
/// its cyclic support `[start, start + len)` in sample units.
#[derive(Clone, Debug)]
struct Profile {
    values: Vec<f64>,
    start: usize,
    len: usize,
}

impl Profile {
    fn new(values: Vec<f64>) -> Self {
        let n = values.len();
        let nonzero: Vec<usize> = (0..n).filter(|&i| values[i] != 0.0).collect();
        if nonzero.is_empty() {
            return Profile {
                values,
                start: 0,
                len: 0,
            };
        }
        // complement of the largest cyclic run of zeros
        let mut best_gap = 0;
        let mut best_after = nonzero[0];
        for w in 0..nonzero.len() {
            let a = nonzero[w];
            let b = if w + 1 < nonzero.len() {
                nonzero[w + 1]
            } else {
                nonzero[0] + n
            };
            let gap = b - a - 1;
            if gap > best_gap {
                best_gap = gap;
                best_after = b % n;
            }
        }
        Profile {
            values,
            start: best_after,
            len: n - best_gap,
        }
    }
}

#[derive(Clone, Debug)]
struct LevelProfiles {
    phi: Profile,
    psi: Profile,
}

#[derive(Clone, Debug)]
pub struct WaveletBasis {
    family: Family,
    layout: Layout,
    grid_exponent: usize,
    lo: Vec<f64>,
    hi: Vec<f64>,
    /// index `j - 1` for scale `j = 1..=L`
    profiles: Vec<LevelProfiles>,
}

/// Build a basis with the default grid for its family.
pub fn build_basis(family: Family, dim: usize, max_level: usize) -> Result<WaveletBasis> {
    let grid = match family {
        Family::Daubechies(_) if dim == 1 => (max_level + 1).max(DAUBECHIES_MIN_GRID_EXPONENT),
        _ => max_level + 1,
    };
    build_basis_with_grid(family, dim, max_level, grid)
}

/// Build a basis on an explicit `2^grid_exponent`-point grid per axis.
pub fn build_basis_with_grid(
    family: Family,
    dim: usize,
    max_level: usize,
    grid_exponent: usize,
) -> Result<WaveletBasis> {
    let layout = Layout::new(dim, max_level)?;
    let lo = match family {
        Family::Haar => filters::daubechies_lowpass(1),
        Family::Daubechies(k) if k >= 2 => filters::daubechies_lowpass(k),
        Family::Daubechies(_) => None,
    }
    .ok_or_else(|| {
        Error::config(
            "wavelet",
            "family",
            format!("{family}: Daubechies order must lie in 2..=6"),
        )
    })?
    .to_vec();
    if grid_exponent < max_level + 1 {
        return Err(Error::config(
            "wavelet",
            "grid_exponent",
            format!("must be at least L+1 = {}", max_level + 1),
        ));
    }
    if grid_exponent * dim > 28 {
        return Err(Error::config(
            "wavelet",
            "grid_exponent",
            format!("grid of 2^{} points is too large", grid_exponent * dim),
        ));
    }
    let hi = filters::highpass(&lo);
    let n = 1usize << grid_exponent;
    let scale = (n as f64).sqrt();
    let mut profiles = Vec::with_capacity(max_level);
    for j in 1..=max_level {
        let mk = |detail: bool| {
            let m = 1usize << j;
            let mut a = vec![0.0; m];
            let mut d = vec![0.0; m];
            if detail {
                d[0] = 1.0;
            } else {
                a[0] = 1.0;
            }
            let mut cur = vec![0.0; 2 * m];
            synthesize(&a, &d, &lo, &hi, &mut cur);
            while cur.len() < n {
                let mut next = vec![0.0; 2 * cur.len()];
                synthesize_approx(&cur, &lo, &mut next);
                cur = next;
            }
            cur.iter_mut().for_each(|v| *v *= scale);
            Profile::new(cur)
        };
        profiles.push(LevelProfiles {
            phi: mk(false),
            psi: mk(true),
        });
    }
    Ok(WaveletBasis {
        family,
        layout,
        grid_exponent,
        lo,
        hi,
        profiles,
    })
}

impl WaveletBasis {
    pub fn family(&self) -> Family {
        self.family
    }

    pub fn layout(&self) -> Layout {
        self.layout
    }

    pub fn dim(&self) -> usize {
        self.layout.dim()
    }

    pub fn max_level(&self) -> usize {
        self.layout.max_level()
    }

    /// Total number of basis elements, coarse block included.
    pub fn len(&self) -> usize {
        self.layout.len()
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn level_len(&self, level: usize) -> usize {
        self.layout.level_len(level)
    }

    pub fn grid_exponent(&self) -> usize {
        self.grid_exponent
    }

    /// Points per axis.
    pub fn grid_points(&self) -> usize {
        1 << self.grid_exponent
    }

    /// Total number of grid samples, `2^(J d)`.
    pub fn grid_size(&self) -> usize {
        1 << (self.grid_exponent * self.dim())
    }

    /// Coordinates of grid sample `i` (row-major, first axis fastest).
    pub fn grid_point(&self, i: usize) -> Vec<f64> {
        let n = self.grid_points();
        let h = 1.0 / n as f64;
        match self.dim() {
            1 => vec![i as f64 * h],
            _ => vec![(i % n) as f64 * h, (i / n) as f64 * h],
        }
    }

    /// `true` when the basis spans every grid function, i.e. `J = L + 1`.
    pub fn is_complete_on_grid(&self) -> bool {
        self.grid_exponent == self.max_level() + 1
    }

    pub fn zeros(&self) -> CoefficientVector {
        CoefficientVector::zeros(self.layout)
    }

    fn check_coeffs(&self, coeffs: &CoefficientVector) -> Result<()> {
        if coeffs.layout() != self.layout {
            return Err(Error::shape(
                "wavelet",
                format!("coefficients with d={} L={}", self.dim(), self.max_level()),
                format!("d={} L={}", coeffs.dim(), coeffs.max_level()),
            ));
        }
        Ok(())
    }

    fn check_point(&self, x: &[f64]) -> Result<()> {
        if x.len() != self.dim() {
            return Err(Error::shape(
                "wavelet",
                format!("point of dimension {}", self.dim()),
                x.len(),
            ));
        }
        if let Some(v) = x.iter().find(|v| !(0.0..=1.0).contains(*v)) {
            return Err(Error::domain("wavelet", format!("point coordinate {v} outside [0,1]")));
        }
        Ok(())
    }

    /// Orthogonal projection of grid samples onto the basis.
    pub fn forward_transform(&self, samples: &[f64]) -> Result<CoefficientVector> {
        if samples.len() != self.grid_size() {
            return Err(Error::shape("wavelet", self.grid_size(), samples.len()));
        }
        let values = match self.dim() {
            1 => self.forward_1d(samples),
            _ => self.forward_2d(samples),
        };
        CoefficientVector::new(self.layout, values)
    }

    /// Grid samples of `sum_lr beta_lr psi_lr`.
    pub fn inverse_transform(&self, coeffs: &CoefficientVector) -> Result<Vec<f64>> {
        self.check_coeffs(coeffs)?;
        Ok(match self.dim() {
            1 => self.inverse_1d(coeffs.values()),
            _ => self.inverse_2d(coeffs.values()),
        })
    }

    fn forward_1d(&self, samples: &[f64]) -> Vec<f64> {
        let n = self.grid_points();
        let inv = 1.0 / (n as f64).sqrt();
        let mut cur: Vec<f64> = samples.iter().map(|v| v * inv).collect();
        let mut out = vec![0.0; self.layout.len()];
        let mut approx = vec![0.0; n / 2];
        let mut detail = vec![0.0; n / 2];
        let mut len = n;
        while len > 2 {
            let half = len / 2;
            let j = half.trailing_zeros() as usize;
            analyze(
                &cur[..len],
                &self.lo,
                &self.hi,
                &mut approx[..half],
                &mut detail[..half],
            );
            if j <= self.max_level() {
                let off = self.layout.offset(j);
                out[off..off + half].copy_from_slice(&detail[..half]);
            }
            cur[..half].copy_from_slice(&approx[..half]);
            len = half;
        }
        out[..2].copy_from_slice(&cur[..2]);
        out
    }

    fn inverse_1d(&self, coeffs: &[f64]) -> Vec<f64> {
        let n = self.grid_points();
        let mut cur = coeffs[..2].to_vec();
        let mut next = Vec::with_capacity(n);
        while cur.len() < n {
            let half = cur.len();
            let j = half.trailing_zeros() as usize;
            next.clear();
            next.resize(2 * half, 0.0);
            if j <= self.max_level() {
                let off = self.layout.offset(j);
                synthesize(&cur, &coeffs[off..off + half], &self.lo, &self.hi, &mut next);
            } else {
                synthesize_approx(&cur, &self.lo, &mut next);
            }
            std::mem::swap(&mut cur, &mut next);
        }
        let s = (n as f64).sqrt();
        cur.iter_mut().for_each(|v| *v *= s);
        cur
    }

    fn forward_2d(&self, samples: &[f64]) -> Vec<f64> {
        let n = self.grid_points();
        let inv = 1.0 / n as f64;
        let mut work: Vec<f64> = samples.iter().map(|v| v * inv).collect();
        let mut out = vec![0.0; self.layout.len()];
        let mut line = vec![0.0; n];
        let mut a = vec![0.0; n / 2];
        let mut d = vec![0.0; n / 2];
        let mut m = n;
        while m > 2 {
            let h = m / 2;
            for row in 0..m {
                let seg = &mut work[row * n..row * n + m];
                analyze(seg, &self.lo, &self.hi, &mut a[..h], &mut d[..h]);
                seg[..h].copy_from_slice(&a[..h]);
                seg[h..].copy_from_slice(&d[..h]);
            }
            for col in 0..m {
                for row in 0..m {
                    line[row] = work[row * n + col];
                }
                analyze(&line[..m], &self.lo, &self.hi, &mut a[..h], &mut d[..h]);
                for row in 0..h {
                    work[row * n + col] = a[row];
                    work[(row + h) * n + col] = d[row];
                }
            }
            let j = h.trailing_zeros() as usize;
            if j <= self.max_level() {
                let off = self.layout.offset(j);
                let block = h * h;
                for ky in 0..h {
                    for kx in 0..h {
                        let k = ky * h + kx;
                        out[off + k] = work[ky * n + h + kx];
                        out[off + block + k] = work[(ky + h) * n + kx];
                        out[off + 2 * block + k] = work[(ky + h) * n + h + kx];
                    }
                }
            }
            m = h;
        }
        for ky in 0..2 {
            for kx in 0..2 {
                out[ky * 2 + kx] = work[ky * n + kx];
            }
        }
        out
    }

    fn inverse_2d(&self, coeffs: &[f64]) -> Vec<f64> {
        let n = self.grid_points();
        let mut work = vec![0.0; n * n];
        for ky in 0..2 {
            for kx in 0..2 {
                work[ky * n + kx] = coeffs[ky * 2 + kx];
            }
        }
        let mut line = vec![0.0; n];
        let mut tmp = vec![0.0; n];
        let mut m = 4;
        while m <= n {
            let h = m / 2;
            let j = h.trailing_zeros() as usize;
            if j <= self.max_level() {
                let off = self.layout.offset(j);
                let block = h * h;
                for ky in 0..h {
                    for kx in 0..h {
                        let k = ky * h + kx;
                        work[ky * n + h + kx] = coeffs[off + k];
                        work[(ky + h) * n + kx] = coeffs[off + block + k];
                        work[(ky + h) * n + h + kx] = coeffs[off + 2 * block + k];
                    }
                }
            }
            for col in 0..m {
                let (ap, dp): (Vec<f64>, Vec<f64>) = (
                    (0..h).map(|r| work[r * n + col]).collect(),
                    (0..h).map(|r| work[(r + h) * n + col]).collect(),
                );
                synthesize(&ap, &dp, &self.lo, &self.hi, &mut line[..m]);
                for row in 0..m {
                    work[row * n + col] = line[row];
                }
            }
            for row in 0..m {
                let seg = &mut work[row * n..row * n + m];
                tmp[..m].copy_from_slice(seg);
                synthesize(&tmp[..h], &tmp[h..m], &self.lo, &self.hi, seg);
            }
            m *= 2;
        }
        let s = n as f64;
        work.iter_mut().for_each(|v| *v *= s);
        work
    }

    fn profile(&self, scale: usize, detail: bool) -> &Profile {
        let p = &self.profiles[scale - 1];
        if detail {
            &p.psi
        } else {
            &p.phi
        }
    }

    /// Value of the profile shifted by `shift` samples at coordinate `x`.
    fn profile_value(&self, prof: &Profile, shift: usize, x: f64) -> f64 {
        let n = self.grid_points();
        let pos = x * n as f64;
        match self.family {
            Family::Haar => {
                let i = (pos.floor() as usize).min(n - 1);
                prof.values[(i + n - shift % n) % n]
            }
            Family::Daubechies(_) => {
                let fl = pos.floor();
                let frac = pos - fl;
                let i0 = (fl as usize) % n;
                let a = prof.values[(i0 + n - shift % n) % n];
                if frac == 0.0 {
                    a
                } else {
                    let b = prof.values[(i0 + 1 + n - shift % n) % n];
                    a + frac * (b - a)
                }
            }
        }
    }

    /// Non-zero values `(k, value)` of the `2^scale` shifted copies of a
    /// scale-`scale` profile at coordinate `x`.
    fn active_1d(&self, scale: usize, detail: bool, x: f64, out: &mut Vec<(usize, f64)>) {
        out.clear();
        let prof = self.profile(scale, detail);
        if prof.len == 0 {
            return;
        }
        let n = self.grid_points() as i64;
        let count = 1i64 << scale;
        let step = n / count;
        let pos = x * n as f64;
        let i0 = match self.family {
            Family::Haar => (pos.floor() as i64).min(n - 1),
            Family::Daubechies(_) => pos.floor() as i64,
        };
        let t0 = i0 - prof.start as i64;
        let t1 = t0 + 1;
        let m = prof.len as i64;
        let k_lo = -((-(t0 - m + 1)).div_euclid(step));
        let k_hi = t1.div_euclid(step);
        let candidates: Box<dyn Iterator<Item = i64>> = if k_hi - k_lo + 1 >= count {
            Box::new(0..count)
        } else {
            Box::new(k_lo..=k_hi)
        };
        for k in candidates {
            let k = k.rem_euclid(count) as usize;
            let v = self.profile_value(prof, k * step as usize, x);
            if v != 0.0 {
                out.push((k, v));
            }
        }
    }

    /// Calls `f(flat_index, psi(x))` for every basis element non-zero at `x`.
    /// `x` must already be validated.
    pub(crate) fn for_each_active(&self, x: &[f64], mut f: impl FnMut(usize, f64)) {
        let mut a = Vec::new();
        match self.dim() {
            1 => {
                self.active_1d(1, false, x[0], &mut a);
                for &(k, v) in &a {
                    f(k, v);
                }
                for j in 1..=self.max_level() {
                    self.active_1d(j, true, x[0], &mut a);
                    let off = self.layout.offset(j);
                    for &(k, v) in &a {
                        f(off + k, v);
                    }
                }
            }
            _ => {
                let (mut ax, mut ay, mut bx, mut by) = (Vec::new(), Vec::new(), Vec::new(), Vec::new());
                self.active_1d(1, false, x[0], &mut ax);
                self.active_1d(1, false, x[1], &mut ay);
                for &(ky, vy) in &ay {
                    for &(kx, vx) in &ax {
                        f(ky * 2 + kx, vx * vy);
                    }
                }
                for j in 1..=self.max_level() {
                    let side = 1usize << j;
                    let block = side * side;
                    let off = self.layout.offset(j);
                    self.active_1d(j, false, x[0], &mut ax);
                    self.active_1d(j, false, x[1], &mut ay);
                    self.active_1d(j, true, x[0], &mut bx);
                    self.active_1d(j, true, x[1], &mut by);
                    let mut emit = |o: usize, xs: &[(usize, f64)], ys: &[(usize, f64)]| {
                        for &(ky, vy) in ys {
                            for &(kx, vx) in xs {
                                f(off + o * block + ky * side + kx, vx * vy);
                            }
                        }
                    };
                    emit(0, &bx, &ay);
                    emit(1, &ax, &by);
                    emit(2, &bx, &by);
                }
            }
        }
    }

    /// `psi_lr(x)` for level `level` (0 = coarse block) and 0-based position `pos`.
    pub fn evaluate_basis(&self, level: usize, pos: usize, x: &[f64]) -> Result<f64> {
        self.layout.flat_index(level, pos)?;
        self.check_point(x)?;
        let scale = level.max(1);
        let side = 1usize << scale;
        let step = self.grid_points() / side;
        let value_1d = |detail: bool, k: usize, t: f64| self.profile_value(self.profile(scale, detail), k * step, t);
        Ok(match self.dim() {
            1 => value_1d(level > 0, pos, x[0]),
            _ => {
                let (orient, k) = if level == 0 {
                    (None, pos)
                } else {
                    (Some(pos / (side * side)), pos % (side * side))
                };
                let (kx, ky) = (k % side, k / side);
                let (dx, dy) = match orient {
                    None => (false, false),
                    Some(0) => (true, false),
                    Some(1) => (false, true),
                    _ => (true, true),
                };
                value_1d(dx, kx, x[0]) * value_1d(dy, ky, x[1])
            }
        })
    }

    /// `sum_lr beta_lr psi_lr(x)`, visiting only elements whose support contains `x`.
    pub fn synthesize_at(&self, coeffs: &CoefficientVector, x: &[f64]) -> Result<f64> {
        self.check_coeffs(coeffs)?;
        self.check_point(x)?;
        let values = coeffs.values();
        let mut acc = 0.0;
        self.for_each_active(x, |i, v| acc += values[i] * v);
        Ok(acc)
    }

    /// Sparse evaluation `(flat_index, psi(x))` of all elements non-zero at `x`.
    pub fn active_at(&self, x: &[f64]) -> Result<Vec<(usize, f64)>> {
        self.check_point(x)?;
        let mut out = Vec::new();
        self.for_each_active(x, |i, v| out.push((i, v)));
        Ok(out)
    }
}
