//! Periodised single-level filter bank kernels.
//!
//! Analysis maps `n` samples to `n/2` approximation and `n/2` detail values;
//! synthesis is its exact transpose. Both are orthogonal for every even `n`,
//! including lengths shorter than the filter (taps wrap around the period).

pub(crate) fn analyze(src: &[f64], lo: &[f64], hi: &[f64], approx: &mut [f64], detail: &mut [f64]) {
    let n = src.len();
    let half = n / 2;
    debug_assert!(approx.len() >= half && detail.len() >= half);
    for k in 0..half {
        let mut a = 0.0;
        let mut d = 0.0;
        let base = 2 * k;
        for (m, (&h, &g)) in lo.iter().zip(hi).enumerate() {
            let v = src[(base + m) % n];
            a += h * v;
            d += g * v;
        }
        approx[k] = a;
        detail[k] = d;
    }
}

pub(crate) fn synthesize(approx: &[f64], detail: &[f64], lo: &[f64], hi: &[f64], out: &mut [f64]) {
    let n = out.len();
    let half = n / 2;
    out.fill(0.0);
    for k in 0..half {
        let a = approx[k];
        let d = detail[k];
        if a == 0.0 && d == 0.0 {
            continue;
        }
        let base = 2 * k;
        for (m, (&h, &g)) in lo.iter().zip(hi).enumerate() {
            out[(base + m) % n] += h * a + g * d;
        }
    }
}

/// Synthesis with an all-zero detail band.
pub(crate) fn synthesize_approx(approx: &[f64], lo: &[f64], out: &mut [f64]) {
    let n = out.len();
    let half = n / 2;
    out.fill(0.0);
    for (k, &a) in approx.iter().enumerate().take(half) {
        if a == 0.0 {
            continue;
        }
        let base = 2 * k;
        for (m, &h) in lo.iter().enumerate() {
            out[(base + m) % n] += h * a;
        }
    }
}
