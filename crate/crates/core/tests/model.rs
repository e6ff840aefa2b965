use std::sync::Arc;

use besov_classify::link::logistic;
use besov_classify::model::{
    grad_log_likelihood, log_likelihood, make_truth, simulate, Dataset, DesignCache, MuSpec, Spike, TruthFunction,
    TruthName, TruthParams,
};
use besov_classify::prior::{besov_norm, BesovNormQuery};
use besov_classify::rng::rng_for;
use besov_classify::wavelet::{build_basis, CoefficientVector, Family, WaveletBasis};
use rand::Rng;
use rand_distr::StandardNormal;

fn flat_truth() -> TruthFunction {
    let mut p = TruthParams::default_for(1);
    p.background = 0.0;
    p.bump_height = 0.0;
    make_truth(TruthName::SmoothBump, &p).unwrap()
}

fn spiky() -> TruthFunction {
    make_truth(TruthName::SpikyPiecewiseLinear, &TruthParams::default_for(1)).unwrap()
}

fn random_coeffs(basis: &WaveletBasis, sd: f64, seed: u64) -> CoefficientVector {
    let mut rng = rng_for(seed, 0);
    let v = (0..basis.len())
        .map(|_| sd * rng.sample::<f64, _>(StandardNormal))
        .collect();
    CoefficientVector::new(basis.layout(), v).unwrap()
}

#[test]
fn truth_examples() {
    let t = flat_truth();
    for k in 0..=20 {
        assert_eq!(t.prob(&[k as f64 / 20.0]).unwrap(), 0.5);
    }
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
    assert!((t.prob(&[0.4]).unwrap() - 0.880797).abs() < 1e-6);
    assert_eq!(t.latent(&[0.9]).unwrap(), 0.0);
}

#[test]
fn truth_outside_clamp_is_rejected() {
    let p = TruthParams {
        spikes: vec![Spike {
            center: vec![0.5],
            half_width: 0.05,
            height: 4.0,
        }],
        ..TruthParams::default_for(1)
    };
    let err = make_truth(TruthName::SpikyPiecewiseLinear, &p).unwrap_err();
    assert_eq!(err.code(), "model.config");
    let mut p = TruthParams::default_for(1);
    p.delta = 0.6;
    assert!(make_truth(TruthName::SmoothBump, &p).is_err());
}

#[test]
fn default_truths_respect_clamp() {
    for d in [1, 2] {
        for name in [TruthName::SpikyPiecewiseLinear, TruthName::SmoothBump] {
            let t = make_truth(name, &TruthParams::default_for(d)).unwrap();
            let rows = t.on_grid(if d == 1 { 12 } else { 6 }).unwrap();
            assert!(rows.iter().all(|(_, f, _)| *f >= 0.05 && *f <= 0.95));
        }
    }
}

#[test]
fn spiky_truth_besov_norm_is_stable_in_level() {
    let t = spiky();
    let q = BesovNormQuery::new(1.5, 1.0, 1.0, 1);
    let norm = |l: usize| {
        let b = build_basis(Family::Daubechies(2), 1, l).unwrap();
        besov_norm(&t.latent_coefficients(&b).unwrap(), &q).unwrap()
    };
    let (n8, n10) = (norm(8), norm(10));
    assert!(n8.is_finite() && n10.is_finite());
    assert!(((n10 - n8) / n8).abs() < 0.05, "{n8} -> {n10}");
}

#[test]
fn custom_coefficient_truth() {
    let basis = Arc::new(build_basis(Family::Haar, 1, 3).unwrap());
    let mut c = basis.zeros();
    c.set(2, 1, 0.4).unwrap();
    let t = TruthFunction::from_coefficients(basis.clone(), c.clone(), 0.05).unwrap();
    assert_eq!(t.name(), TruthName::CustomCoefficients);
    let x = [0.3];
    assert_eq!(t.latent(&x).unwrap(), basis.synthesize_at(&c, &x).unwrap());
    let mut big = basis.zeros();
    big.set(0, 0, 10.0).unwrap();
    assert!(TruthFunction::from_coefficients(basis, big, 0.05).is_err());
}

#[test]
fn balanced_labels_have_mean_one_half() {
    let d = simulate(&flat_truth(), &MuSpec::Uniform, 10_000, 3).unwrap();
    let mean = d.labels().iter().map(|&y| y as f64).sum::<f64>() / 1e4;
    assert!((mean - 0.5).abs() < 0.015, "{mean}");
}

#[test]
fn uniform_covariates_pass_ks() {
    let d = simulate(&spiky(), &MuSpec::Uniform, 10_000, 4).unwrap();
    let mut x = d.covariates().to_vec();
    x.sort_by(|a, b| a.partial_cmp(b).unwrap());
    let n = x.len() as f64;
    let ks = x
        .iter()
        .enumerate()
        .map(|(i, &v)| ((i + 1) as f64 / n - v).abs().max((v - i as f64 / n).abs()))
        .fold(0.0, f64::max);
    assert!(ks < 1.63 / n.sqrt(), "{ks}");
}

#[test]
fn piecewise_density_cell_masses() {
    let weights = vec![1.0, 3.0, 2.0, 0.5];
    let mu = MuSpec::PiecewiseConstant {
        weights: weights.clone(),
    };
    let n = 20_000;
    let d = simulate(&spiky(), &mu, n, 8).unwrap();
    let (c_lo, c_hi) = mu.bounds();
    let mut counts = [0usize; 4];
    for &x in d.covariates() {
        counts[((x * 4.0) as usize).min(3)] += 1;
    }
    let total: f64 = weights.iter().sum();
    for (k, &c) in counts.iter().enumerate() {
        let mass = c as f64 / n as f64;
        let p = weights[k] / total;
        let sigma = (p * (1.0 - p) / n as f64).sqrt();
        assert!((mass - p).abs() < 5.0 * sigma, "cell {k}: {mass} vs {p}");
        let vol = 0.25;
        assert!(mass >= c_lo * vol - 5.0 * sigma && mass <= c_hi * vol + 5.0 * sigma);
    }
    let bad = MuSpec::PiecewiseConstant {
        weights: vec![1.0, 0.0],
    };
    assert!(simulate(&spiky(), &bad, 10, 1).is_err());
}

#[test]
fn two_dimensional_simulation() {
    let t = make_truth(TruthName::SpikyPiecewiseLinear, &TruthParams::default_for(2)).unwrap();
    let mu = MuSpec::PiecewiseConstant {
        weights: vec![1.0, 2.0, 2.0, 1.0],
    };
    let d = simulate(&t, &mu, 500, 1).unwrap();
    assert_eq!(d.covariates().len(), 1000);
    assert!(d.covariates().iter().all(|v| (0.0..=1.0).contains(v)));
}

#[test]
fn simulation_is_deterministic() {
    let a = simulate(&spiky(), &MuSpec::Uniform, 300, 12).unwrap();
    let b = simulate(&spiky(), &MuSpec::Uniform, 300, 12).unwrap();
    assert_eq!(a, b);
    assert_ne!(a, simulate(&spiky(), &MuSpec::Uniform, 300, 13).unwrap());
}

#[test]
fn design_cache_matches_pointwise_evaluation() {
    let basis = build_basis(Family::Daubechies(2), 1, 6).unwrap();
    let data = simulate(&spiky(), &MuSpec::Uniform, 50, 2).unwrap();
    let cache = DesignCache::build(&basis, &data).unwrap();
    let layout = basis.layout();
    for i in 0..data.n() {
        let row: Vec<(usize, f64)> = cache.row(i).collect();
        for flat in 0..basis.len() {
            let (l, r) = layout.locate(flat);
            let want = basis.evaluate_basis(l, r, data.point(i)).unwrap();
            let got = row.iter().find(|(c, _)| *c == flat).map_or(0.0, |p| p.1);
            assert!((got - want).abs() < 1e-12);
        }
    }
}

#[test]
fn likelihood_examples() {
    let basis = build_basis(Family::Haar, 1, 3).unwrap();
    let one = Dataset::new(1, vec![0.2], vec![1], MuSpec::Uniform).unwrap();
    let cache = DesignCache::build(&basis, &one).unwrap();
    let ll = log_likelihood(&basis.zeros(), &cache, &one).unwrap();
    assert!((ll - 0.5f64.ln()).abs() < 1e-15);

    let data = simulate(&spiky(), &MuSpec::Uniform, 137, 5).unwrap();
    let cache = DesignCache::build(&basis, &data).unwrap();
    let ll = log_likelihood(&basis.zeros(), &cache, &data).unwrap();
    assert!((ll - 137.0 * 0.5f64.ln()).abs() < 1e-12);
}

#[test]
fn likelihood_matches_direct_product() {
    let basis = build_basis(Family::Daubechies(2), 1, 4).unwrap();
    let data = simulate(&spiky(), &MuSpec::Uniform, 5, 9).unwrap();
    let cache = DesignCache::build(&basis, &data).unwrap();
    for seed in 0..10 {
        let c = random_coeffs(&basis, 0.3, seed);
        let mut prod = 1.0f64;
        for i in 0..data.n() {
            let w: f64 = (0..basis.len())
                .map(|flat| {
                    let (l, r) = basis.layout().locate(flat);
                    c.values()[flat] * basis.evaluate_basis(l, r, data.point(i)).unwrap()
                })
                .sum();
            let f = logistic(w);
            prod *= if data.labels()[i] == 1 { f } else { 1.0 - f };
        }
        let ll = log_likelihood(&c, &cache, &data).unwrap();
        assert!(ll <= 0.0);
        assert!((ll - prod.ln()).abs() < 1e-12, "{ll} vs {}", prod.ln());
    }
}

#[test]
fn gradient_matches_central_differences() {
    let basis = build_basis(Family::Daubechies(2), 1, 5).unwrap();
    let data = simulate(&spiky(), &MuSpec::Uniform, 400, 6).unwrap();
    let cache = DesignCache::build(&basis, &data).unwrap();
    let h = 1e-5;
    for seed in 0..20 {
        let c = random_coeffs(&basis, 0.5, 100 + seed);
        let g = grad_log_likelihood(&c, &cache, &data).unwrap();
        for j in 0..basis.len() {
            let mut plus = c.values().to_vec();
            let mut minus = plus.clone();
            plus[j] += h;
            minus[j] -= h;
            let lp = log_likelihood(&CoefficientVector::new(basis.layout(), plus).unwrap(), &cache, &data).unwrap();
            let lm = log_likelihood(&CoefficientVector::new(basis.layout(), minus).unwrap(), &cache, &data).unwrap();
            let fd = (lp - lm) / (2.0 * h);
            let gj = g.values()[j];
            assert!(
                (fd - gj).abs() <= 1e-6 * gj.abs().max(1.0),
                "seed {seed} j {j}: {fd} vs {gj}"
            );
        }
    }
}

#[test]
fn gradient_at_zero_is_the_centred_score() {
    let basis = build_basis(Family::Haar, 1, 4).unwrap();
    let data = simulate(&spiky(), &MuSpec::Uniform, 60, 1).unwrap();
    let cache = DesignCache::build(&basis, &data).unwrap();
    let g = grad_log_likelihood(&basis.zeros(), &cache, &data).unwrap();
    for flat in 0..basis.len() {
        let (l, r) = basis.layout().locate(flat);
        let want: f64 = (0..data.n())
            .map(|i| (data.labels()[i] as f64 - 0.5) * basis.evaluate_basis(l, r, data.point(i)).unwrap())
            .sum();
        assert!((g.values()[flat] - want).abs() < 1e-12);
    }
}

#[test]
fn score_vanishes_when_labels_match_probabilities() {
    // each point carries one 0 and one 1, so the empirical label mean is H(0)
    let basis = build_basis(Family::Daubechies(2), 1, 4).unwrap();
    let mut rng = rng_for(3, 0);
    let pts: Vec<f64> = (0..40).map(|_| rng.random::<f64>()).collect();
    let x: Vec<f64> = pts.iter().flat_map(|&p| [p, p]).collect();
    let y: Vec<u8> = (0..80).map(|i| (i % 2) as u8).collect();
    let data = Dataset::new(1, x, y, MuSpec::Uniform).unwrap();
    let cache = DesignCache::build(&basis, &data).unwrap();
    let g = grad_log_likelihood(&basis.zeros(), &cache, &data).unwrap();
    assert!(g.values().iter().all(|v| v.abs() < 1e-12));
}

#[test]
fn likelihood_is_concave() {
    let basis = build_basis(Family::Haar, 1, 5).unwrap();
    let data = simulate(&spiky(), &MuSpec::Uniform, 300, 2).unwrap();
    let cache = DesignCache::build(&basis, &data).unwrap();
    let mut rng = rng_for(77, 0);
    for seed in 0..50 {
        let u = random_coeffs(&basis, 1.0, 2 * seed);
        let v = random_coeffs(&basis, 1.0, 2 * seed + 1);
        let t: f64 = rng.random_range(0.01..0.99);
        let mix: Vec<f64> = u
            .values()
            .iter()
            .zip(v.values())
            .map(|(a, b)| t * a + (1.0 - t) * b)
            .collect();
        let lm = log_likelihood(&CoefficientVector::new(basis.layout(), mix).unwrap(), &cache, &data).unwrap();
        let lu = log_likelihood(&u, &cache, &data).unwrap();
        let lv = log_likelihood(&v, &cache, &data).unwrap();
        assert!(lm >= t * lu + (1.0 - t) * lv - 1e-12);
    }
}

#[test]
fn mismatched_inputs_are_rejected() {
    let basis = build_basis(Family::Haar, 1, 3).unwrap();
    let data = simulate(&spiky(), &MuSpec::Uniform, 10, 1).unwrap();
    let other = simulate(&spiky(), &MuSpec::Uniform, 11, 1).unwrap();
    let cache = DesignCache::build(&basis, &data).unwrap();
    assert!(log_likelihood(&basis.zeros(), &cache, &other).is_err());
    let bigger = build_basis(Family::Haar, 1, 4).unwrap();
    assert!(log_likelihood(&bigger.zeros(), &cache, &data).is_err());
    assert!(Dataset::new(1, vec![0.5, 1.2], vec![0, 1], MuSpec::Uniform).is_err());
    assert!(Dataset::new(1, vec![0.5], vec![2], MuSpec::Uniform).is_err());
}
