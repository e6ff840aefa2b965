//! Orthonormal lowpass filters, normalised so that the taps sum to sqrt(2).

const HAAR: [f64; 2] = [std::f64::consts::FRAC_1_SQRT_2, std::f64::consts::FRAC_1_SQRT_2];

const DB2: [f64; 4] = [
    0.48296291314453414337,
    0.83651630373780790558,
    0.22414386804201338103,
    -0.12940952255126038117,
];

const DB3: [f64; 6] = [
    0.332670552950082616,
    0.80689150931109257649,
    0.4598775021184915701,
    -0.1350110200102545887,
    -0.085441273882026661693,
    0.035226291885709536603,
];

const DB4: [f64; 8] = [
    0.23037781330889650086,
    0.71484657055291564709,
    0.63088076792985890788,
    -0.027983769416859854211,
    -0.18703481171909308408,
    0.030841381835560763627,
    0.032883011666885199735,
    -0.010597401785069032105,
];

const DB5: [f64; 10] = [
    0.16010239797419291448,
    0.60382926979718967054,
    0.72430852843777292773,
    0.13842814590132073151,
    -0.24229488706638203186,
    -0.032244869584638374648,
    0.077571493840045713523,
    -0.0062414902127982742742,
    -0.012580751999081999469,
    0.003335725285473771278,
];

const DB6: [f64; 12] = [
    0.11154074335010946362,
    0.49462389039845308568,
    0.75113390802109535068,
    0.31525035170919762909,
    -0.22626469396543982008,
    -0.12976686756726193556,
    0.097501605587323049102,
    0.027522865530305728626,
    -0.031582039317486029565,
    0.00055384220116149613925,
    0.0047772575109455106396,
    -0.0010773010853084795649,
];

/// Lowpass taps for a Daubechies filter with `moments` vanishing moments
/// (`moments == 1` is Haar).
pub(crate) fn daubechies_lowpass(moments: usize) -> Option<&'static [f64]> {
    match moments {
        1 => Some(&HAAR),
        2 => Some(&DB2),
        3 => Some(&DB3),
        4 => Some(&DB4),
        5 => Some(&DB5),
        6 => Some(&DB6),
        _ => None,
    }
}

/// Quadrature mirror highpass: `g[k] = (-1)^k h[len-1-k]`.
pub(crate) fn highpass(lo: &[f64]) -> Vec<f64> {
    let n = lo.len();
    (0..n)
        .map(|k| {
            let v = lo[n - 1 - k];
            if k % 2 == 0 {
                v
            } else {
                -v
            }
        })
        .collect()
}
