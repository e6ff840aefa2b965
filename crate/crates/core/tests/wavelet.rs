use besov_classify::rng::rng_for;
use besov_classify::wavelet::{build_basis, build_basis_with_grid, CoefficientVector, Family, WaveletBasis};
use rand::Rng;
use rand_distr::StandardNormal;

fn unit(basis: &WaveletBasis, flat: usize) -> CoefficientVector {
    let mut v = vec![0.0; basis.len()];
    v[flat] = 1.0;
    CoefficientVector::new(basis.layout(), v).unwrap()
}

fn random_coeffs(basis: &WaveletBasis, seed: u64) -> CoefficientVector {
    let mut rng = rng_for(seed, 0);
    let v = (0..basis.len()).map(|_| rng.sample::<f64, _>(StandardNormal)).collect();
    CoefficientVector::new(basis.layout(), v).unwrap()
}

fn random_samples(n: usize, seed: u64) -> Vec<f64> {
    let mut rng = rng_for(seed, 1);
    (0..n).map(|_| rng.sample::<f64, _>(StandardNormal)).collect()
}

fn max_gram_defect(basis: &WaveletBasis) -> f64 {
    let cols: Vec<Vec<f64>> = (0..basis.len())
        .map(|i| basis.inverse_transform(&unit(basis, i)).unwrap())
        .collect();
    let h = 1.0 / basis.grid_size() as f64;
    let mut worst = 0.0f64;
    for i in 0..cols.len() {
        for j in i..cols.len() {
            let ip: f64 = cols[i].iter().zip(&cols[j]).map(|(a, b)| a * b).sum::<f64>() * h;
            let want = if i == j { 1.0 } else { 0.0 };
            worst = worst.max((ip - want).abs());
        }
    }
    worst
}

#[test]
fn haar_cardinality_follows_dyadic_count() {
    let b = build_basis(Family::Haar, 1, 3).unwrap();
    assert_eq!(b.layout().wavelet_count(), 2 + 4 + 8);
    for l in 1..=3 {
        assert_eq!(b.level_len(l), 1 << l);
    }
    let b2 = build_basis(Family::Haar, 2, 3).unwrap();
    for l in 1..=3 {
        assert_eq!(b2.level_len(l), 3 << (2 * l));
    }
}

#[test]
fn haar_level_one_supports_are_halves() {
    let b = build_basis(Family::Haar, 1, 1).unwrap();
    assert_eq!(b.layout().wavelet_count(), 2);
    for k in 0..1000 {
        let x = k as f64 / 1000.0;
        let left = b.evaluate_basis(1, 0, &[x]).unwrap();
        let right = b.evaluate_basis(1, 1, &[x]).unwrap();
        if x < 0.5 {
            assert_ne!(left, 0.0);
            assert_eq!(right, 0.0);
        } else {
            assert_eq!(left, 0.0);
            assert_ne!(right, 0.0);
        }
    }
}

#[test]
fn haar_normalisation_and_sign_flip() {
    let b = build_basis(Family::Haar, 1, 3).unwrap();
    let s2 = 2f64.sqrt();
    assert!((b.evaluate_basis(1, 0, &[0.1]).unwrap() - s2).abs() < 1e-15);
    assert!((b.evaluate_basis(1, 0, &[0.3]).unwrap() + s2).abs() < 1e-15);
    assert_eq!(b.evaluate_basis(1, 0, &[0.7]).unwrap(), 0.0);
    // level 3 has height 2^{3/2}
    assert!((b.evaluate_basis(3, 5, &[5.0 / 8.0 + 0.01]).unwrap() - 8f64.sqrt()).abs() < 1e-14);
}

#[test]
fn evaluation_is_zero_off_support() {
    let b = build_basis(Family::Daubechies(2), 1, 6).unwrap();
    // db2 at scale 6 spans 3 cells of width 1/64
    let mut zeros = 0;
    for k in 0..512 {
        let x = k as f64 / 512.0;
        if b.evaluate_basis(6, 10, &[x]).unwrap() == 0.0 {
            zeros += 1;
        }
    }
    assert!(zeros > 480, "{zeros}");
}

#[test]
fn evaluation_rejects_bad_index_and_point() {
    let b = build_basis(Family::Haar, 1, 2).unwrap();
    assert!(b.evaluate_basis(3, 0, &[0.5]).is_err());
    assert!(b.evaluate_basis(2, 4, &[0.5]).is_err());
    assert!(b.evaluate_basis(1, 0, &[1.2]).is_err());
    assert!(b.evaluate_basis(1, 0, &[0.2, 0.2]).is_err());
}

#[test]
fn haar_gram_is_identity() {
    for (d, l) in [(1, 6), (2, 3)] {
        let b = build_basis(Family::Haar, d, l).unwrap();
        let g = max_gram_defect(&b);
        assert!(g < 1e-12, "d={d}: {g}");
    }
}

#[test]
fn daubechies_gram_is_identity_on_fine_grid() {
    let b = build_basis_with_grid(Family::Daubechies(2), 1, 5, 12).unwrap();
    let g = max_gram_defect(&b);
    assert!(g < 1e-8, "{g}");
    let b = build_basis_with_grid(Family::Daubechies(3), 2, 2, 5).unwrap();
    assert!(max_gram_defect(&b) < 1e-8);
}

#[test]
fn sample_round_trip_on_complete_grid() {
    for (fam, d, l) in [
        (Family::Haar, 1, 10),
        (Family::Daubechies(2), 1, 9),
        (Family::Daubechies(4), 1, 7),
        (Family::Haar, 2, 5),
        (Family::Daubechies(2), 2, 4),
    ] {
        let b = build_basis_with_grid(fam, d, l, l + 1).unwrap();
        assert!(b.is_complete_on_grid());
        let s = random_samples(b.grid_size(), 11);
        let back = b.inverse_transform(&b.forward_transform(&s).unwrap()).unwrap();
        let err = s.iter().zip(&back).map(|(a, c)| (a - c).abs()).fold(0.0, f64::max);
        assert!(err < 1e-10, "{fam} d={d}: {err}");
    }
}

#[test]
fn coefficient_round_trip_and_parseval() {
    for (fam, d, l) in [
        (Family::Haar, 1, 8),
        (Family::Daubechies(2), 1, 8),
        (Family::Daubechies(3), 2, 3),
    ] {
        let b = build_basis(fam, d, l).unwrap();
        let c = random_coeffs(&b, 3);
        let grid = b.inverse_transform(&c).unwrap();
        let back = b.forward_transform(&grid).unwrap();
        let err = c
            .values()
            .iter()
            .zip(back.values())
            .map(|(a, x)| (a - x).abs())
            .fold(0.0, f64::max);
        assert!(err < 1e-10, "{fam} d={d}: {err}");
        let grid_norm = grid.iter().map(|v| v * v).sum::<f64>() / b.grid_size() as f64;
        let coef_norm = c.values().iter().map(|v| v * v).sum::<f64>();
        assert!((grid_norm - coef_norm).abs() < 1e-8 * coef_norm.max(1.0), "{fam}");
    }
}

#[test]
fn constant_samples_have_no_detail() {
    let b = build_basis(Family::Haar, 1, 6).unwrap();
    let c = b.forward_transform(&vec![0.7; b.grid_size()]).unwrap();
    for l in 1..=6 {
        assert!(c.level(l).iter().all(|v| v.abs() < 1e-14), "level {l}");
    }
    // the coarse block integrates the constant: 0.7 * integral of phi_{1,k} = 0.7 / sqrt 2
    for v in c.level(0) {
        assert!((v - 0.7 / 2f64.sqrt()).abs() < 1e-14);
    }
}

#[test]
fn sampled_basis_function_transforms_to_unit_vector() {
    let b = build_basis(Family::Daubechies(2), 1, 5).unwrap();
    for (l, r) in [(0, 1), (1, 0), (3, 5), (5, 31)] {
        let flat = b.layout().flat_index(l, r).unwrap();
        let samples: Vec<f64> = (0..b.grid_size())
            .map(|i| b.evaluate_basis(l, r, &b.grid_point(i)).unwrap())
            .collect();
        let c = b.forward_transform(&samples).unwrap();
        for (i, v) in c.values().iter().enumerate() {
            let want = if i == flat { 1.0 } else { 0.0 };
            assert!((v - want).abs() < 1e-10, "({l},{r}) index {i}: {v}");
        }
    }
}

#[test]
fn unit_coefficient_synthesises_the_basis_function() {
    let b = build_basis(Family::Haar, 2, 3).unwrap();
    let flat = b.layout().flat_index(2, 37).unwrap();
    let grid = b.inverse_transform(&unit(&b, flat)).unwrap();
    for (i, g) in grid.iter().enumerate() {
        let want = b.evaluate_basis(2, 37, &b.grid_point(i)).unwrap();
        assert!((g - want).abs() < 1e-10);
    }
    assert!(b.inverse_transform(&b.zeros()).unwrap().iter().all(|v| *v == 0.0));
}

#[test]
fn daubechies_wavelets_integrate_to_zero() {
    let b = build_basis(Family::Daubechies(2), 1, 6).unwrap();
    let m = 1 << 16;
    for (l, r) in [(1, 0), (2, 3), (4, 7), (6, 40)] {
        // midpoint rule on 2^16 cells
        let integral: f64 = (0..m)
            .map(|k| b.evaluate_basis(l, r, &[(k as f64 + 0.5) / m as f64]).unwrap())
            .sum::<f64>()
            / m as f64;
        assert!(integral.abs() < 1e-6, "({l},{r}): {integral}");
    }
}

#[test]
fn pointwise_synthesis_matches_inverse_transform() {
    for (fam, d, l) in [
        (Family::Haar, 1, 7),
        (Family::Daubechies(2), 1, 6),
        (Family::Haar, 2, 3),
        (Family::Daubechies(2), 2, 3),
    ] {
        let b = build_basis(fam, d, l).unwrap();
        let c = random_coeffs(&b, 21);
        let grid = b.inverse_transform(&c).unwrap();
        let stride = (b.grid_size() / 257).max(1);
        for i in (0..b.grid_size()).step_by(stride) {
            let v = b.synthesize_at(&c, &b.grid_point(i)).unwrap();
            assert!((v - grid[i]).abs() < 1e-10, "{fam} d={d} i={i}");
        }
        assert_eq!(b.synthesize_at(&b.zeros(), &vec![0.3; d]).unwrap(), 0.0);
    }
}

#[test]
fn single_coefficient_synthesis_equals_evaluation() {
    let b = build_basis(Family::Daubechies(3), 1, 5).unwrap();
    let flat = b.layout().flat_index(4, 9).unwrap();
    let c = unit(&b, flat);
    for k in 0..200 {
        let x = [k as f64 / 199.0];
        assert_eq!(b.synthesize_at(&c, &x).unwrap(), b.evaluate_basis(4, 9, &x).unwrap());
    }
}

#[test]
fn transform_is_linear() {
    let b = build_basis(Family::Daubechies(2), 1, 7).unwrap();
    let u = random_samples(b.grid_size(), 1);
    let v = random_samples(b.grid_size(), 2);
    let (a, c) = (1.7, -0.4);
    let mix: Vec<f64> = u.iter().zip(&v).map(|(x, y)| a * x + c * y).collect();
    let tu = b.forward_transform(&u).unwrap();
    let tv = b.forward_transform(&v).unwrap();
    let tm = b.forward_transform(&mix).unwrap();
    for i in 0..b.len() {
        let want = a * tu.values()[i] + c * tv.values()[i];
        assert!((tm.values()[i] - want).abs() < 1e-12);
    }
}

#[test]
fn shape_errors() {
    let b = build_basis(Family::Haar, 1, 3).unwrap();
    assert!(b.forward_transform(&[0.0; 5]).is_err());
    let other = build_basis(Family::Haar, 1, 4).unwrap();
    assert!(b.inverse_transform(&other.zeros()).is_err());
    assert!(build_basis(Family::Haar, 3, 2).is_err());
}
