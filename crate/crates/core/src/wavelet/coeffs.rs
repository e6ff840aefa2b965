use crate::error::{Error, Result};

/// Index layout of a truncated multiscale expansion.
///
/// Level `0` holds the `2^d` coarse scaling functions. Levels `1..=L` hold
/// the detail wavelets at dyadic scale `2^-l`: `2^l` of them when `d = 1`
/// and `3 * 4^l` (three orientations) when `d = 2`. Coefficients are stored
/// flat, level by level, so level `l >= 1` starts at offset `2^(l d)` and the
/// whole vector has length `2^((L+1) d)`.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Layout {
    dim: usize,
    max_level: usize,
}

impl Layout {
    pub fn new(dim: usize, max_level: usize) -> Result<Self> {
        if !(1..=2).contains(&dim) {
            return Err(Error::config("wavelet", "d", format!("must be 1 or 2, got {dim}")));
        }
        if max_level < 1 {
            return Err(Error::config("wavelet", "L", "must be at least 1"));
        }
        if (max_level + 1) * dim > 30 {
            return Err(Error::config(
                "wavelet",
                "L",
                format!("2^((L+1)d) coefficients too large for L={max_level}, d={dim}"),
            ));
        }
        Ok(Layout { dim, max_level })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn max_level(&self) -> usize {
        self.max_level
    }

    /// Number of basis elements at `level` (0 = coarse block).
    pub fn level_len(&self, level: usize) -> usize {
        if level == 0 {
            1 << self.dim
        } else if self.dim == 1 {
            1 << level
        } else {
            3 << (2 * level)
        }
    }

    pub fn offset(&self, level: usize) -> usize {
        if level == 0 {
            0
        } else {
            1 << (level * self.dim)
        }
    }

    pub fn len(&self) -> usize {
        self.offset(self.max_level + 1)
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    /// Number of wavelet (non-coarse) elements over levels `1..=L`.
    pub fn wavelet_count(&self) -> usize {
        self.len() - self.level_len(0)
    }

    pub fn flat_index(&self, level: usize, pos: usize) -> Result<usize> {
        if level > self.max_level || pos >= self.level_len(level) {
            return Err(Error::domain(
                "wavelet",
                format!(
                    "index (l={level}, pos={pos}) outside layout with L={} d={}",
                    self.max_level, self.dim
                ),
            ));
        }
        Ok(self.offset(level) + pos)
    }

    /// Inverse of [`Layout::flat_index`].
    pub fn locate(&self, flat: usize) -> (usize, usize) {
        let mut level = 0;
        while level < self.max_level && flat >= self.offset(level + 1) {
            level += 1;
        }
        (level, flat - self.offset(level))
    }

    /// Level of each flat index.
    pub fn levels(&self) -> Vec<usize> {
        let mut out = Vec::with_capacity(self.len());
        for l in 0..=self.max_level {
            out.extend(std::iter::repeat_n(l, self.level_len(l)));
        }
        out
    }
}

/// Coefficients `beta_lr` of a truncated wavelet expansion.
#[derive(Clone, Debug, PartialEq)]
pub struct CoefficientVector {
    layout: Layout,
    alpha: Option<f64>,
    values: Vec<f64>,
}

impl CoefficientVector {
    pub fn new(layout: Layout, values: Vec<f64>) -> Result<Self> {
        if values.len() != layout.len() {
            return Err(Error::shape("wavelet", layout.len(), values.len()));
        }
        if let Some(i) = values.iter().position(|v| !v.is_finite()) {
            return Err(Error::domain("wavelet", format!("coefficient {i} is not finite")));
        }
        Ok(CoefficientVector {
            layout,
            alpha: None,
            values,
        })
    }

    pub fn zeros(layout: Layout) -> Self {
        CoefficientVector {
            layout,
            alpha: None,
            values: vec![0.0; layout.len()],
        }
    }

    /// Attach the regularity parameter the coefficients were drawn or fitted under.
    pub fn with_alpha(mut self, alpha: f64) -> Self {
        self.alpha = Some(alpha);
        self
    }

    pub fn alpha(&self) -> Option<f64> {
        self.alpha
    }

    pub fn layout(&self) -> Layout {
        self.layout
    }

    pub fn dim(&self) -> usize {
        self.layout.dim
    }

    pub fn max_level(&self) -> usize {
        self.layout.max_level
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn into_values(self) -> Vec<f64> {
        self.values
    }

    pub fn level(&self, level: usize) -> &[f64] {
        let start = self.layout.offset(level);
        &self.values[start..start + self.layout.level_len(level)]
    }

    pub fn get(&self, level: usize, pos: usize) -> Result<f64> {
        Ok(self.values[self.layout.flat_index(level, pos)?])
    }

    pub fn set(&mut self, level: usize, pos: usize, value: f64) -> Result<()> {
        if !value.is_finite() {
            return Err(Error::domain("wavelet", "coefficient must be finite"));
        }
        let i = self.layout.flat_index(level, pos)?;
        self.values[i] = value;
        Ok(())
    }

    /// Iterate `(level, pos, value)` in storage order.
    pub fn iter(&self) -> impl Iterator<Item = (usize, usize, f64)> + '_ {
        let layout = self.layout;
        (0..=layout.max_level).flat_map(move |l| {
            let off = layout.offset(l);
            (0..layout.level_len(l)).map(move |r| (l, r, self.values[off + r]))
        })
    }

    /// The leading levels `0..=level`.
    pub fn truncated(&self, level: usize) -> Result<CoefficientVector> {
        let layout = Layout::new(self.layout.dim, level)?;
        if level > self.layout.max_level {
            return Err(Error::domain(
                "wavelet",
                format!("cannot truncate L={} coefficients to L={level}", self.layout.max_level),
            ));
        }
        Ok(CoefficientVector {
            layout,
            alpha: self.alpha,
            values: self.values[..layout.len()].to_vec(),
        })
    }

    pub fn norm_l2(&self) -> f64 {
        self.values.iter().map(|v| v * v).sum::<f64>().sqrt()
    }
}
