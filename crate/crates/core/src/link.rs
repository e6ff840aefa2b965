//! Logistic link `H(z) = e^z / (1 + e^z)` and its inverse.

use crate::error::{Error, Result};

/// Largest double strictly below one.
const ONE_MINUS_ULP: f64 = 1.0 - f64::EPSILON / 2.0;

/// `H(z)`, overflow-safe. Results are clamped to the open interval
/// `(0, 1)` so that finite inputs never map onto an endpoint; above
/// `z ~ 37` the exact value rounds to one and the clamp takes over.
pub fn logistic(z: f64) -> f64 {
    let v = if z >= 0.0 {
        1.0 / (1.0 + (-z).exp())
    } else {
        let e = z.exp();
        e / (1.0 + e)
    };
    v.clamp(f64::MIN_POSITIVE, ONE_MINUS_ULP)
}

/// `H^{-1}(f) = ln(f / (1 - f))`.
pub fn logit(f: f64) -> Result<f64> {
    if !(f > 0.0 && f < 1.0) {
        return Err(Error::domain(
            "link",
            format!("logit argument {f} outside (0,1); the truth must stay away from 0 and 1"),
        ));
    }
    Ok(f.ln() - (-f).ln_1p())
}

/// `ln(1 + e^z)` without overflow.
pub fn softplus(z: f64) -> f64 {
    z.max(0.0) + (-z.abs()).exp().ln_1p()
}

/// `ln H(z)`.
pub fn log_logistic(z: f64) -> f64 {
    -softplus(-z)
}

/// `ln(1 - H(z))`.
pub fn log1m_logistic(z: f64) -> f64 {
    -softplus(z)
}

/// `H'(z) = H(z)(1 - H(z))`.
pub fn logistic_derivative(z: f64) -> f64 {
    let h = logistic(z);
    h * (1.0 - h)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn closed_forms() {
        assert_eq!(logistic(0.0), 0.5);
        assert!((logistic(3f64.ln()) - 0.75).abs() < 1e-15);
        assert_eq!(logit(0.5).unwrap(), 0.0);
        assert!((logit(0.75).unwrap() - 3f64.ln()).abs() < 1e-15);
        for z in [1.0, 10.0, 100.0] {
            assert!((logistic(-z) - (1.0 - logistic(z))).abs() < 1e-15);
        }
    }

    #[test]
    fn logit_rejects_endpoints() {
        for f in [0.0, 1.0, -0.1, 1.5, f64::NAN] {
            assert!(logit(f).is_err());
        }
    }

    #[test]
    fn extreme_arguments_stay_open() {
        for z in [-700.0, -745.0, -1e10, 40.0, 700.0, 1e10] {
            let h = logistic(z);
            assert!(h > 0.0 && h < 1.0, "z={z} h={h}");
        }
    }

    #[test]
    fn log_forms_are_consistent() {
        for z in [-30.0, -2.0, 0.0, 0.7, 5.0] {
            assert!((log_logistic(z) - logistic(z).ln()).abs() < 1e-12);
            assert!((log1m_logistic(z) - (1.0 - logistic(z)).ln()).abs() < 1e-12);
        }
        assert!((log_logistic(-800.0) + 800.0).abs() < 1e-9);
    }
}
