use std::collections::HashSet;
use std::f64::consts::{PI, TAU};

use multishift::bench::Pipeline;
use multishift::cosine::{approximate_nonperiodic, poisson_solve};
use multishift::korobov::{MMode, SpaceParams};
use multishift::shifts::{adaptive_shifts, exp_sum_ratio};
use num_complex::Complex64;
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn pipeline(d: usize, alpha: f64, n: u64) -> Pipeline {
    let params = SpaceParams::with_power_weights(d, alpha, 10.0).unwrap();
    Pipeline::build(params, n, MMode::Bisection).unwrap()
}

fn character(k: &[i32], x: &[f64]) -> Complex64 {
    let dot: f64 = k.iter().zip(x).map(|(&a, &b)| a as f64 * b).sum();
    Complex64::from_polar(1.0, TAU * dot)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(12))]

    #[test]
    fn random_polynomials_are_recovered(
        d in 2usize..=4,
        n in prop::sample::select(vec![127u64, 257, 509]),
        seed in any::<u64>(),
        delta in prop::collection::vec(0.0f64..1.0, 4),
    ) {
        let p = pipeline(d, 1.0, n);
        let y = p.adaptive(0.95).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let coeffs: Vec<Complex64> = (0..p.a.len())
            .map(|_| Complex64::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0)))
            .collect();
        let f = |x: &[f64]| p.a.iter().zip(&coeffs).map(|(k, c)| c * character(k, x)).sum::<Complex64>();
        let approx = multishift::reconstruct::approximate(&f, &p.lat, &p.a, &p.part, &y, &delta[..d]).unwrap();
        for (a, b) in approx.coeffs().iter().zip(&coeffs) {
            prop_assert!((a - b).norm() < 1e-10);
        }
    }

    #[test]
    fn fibers_partition_the_index_set(d in 1usize..=5, n in prop::sample::select(vec![13u64, 101, 1031])) {
        let p = pipeline(d, 1.5, n);
        let mut seen = vec![false; p.a.len()];
        for (j, fiber) in p.part.fibers().iter().enumerate() {
            for &i in fiber {
                prop_assert!(!seen[i]);
                seen[i] = true;
                prop_assert_eq!(p.lat.residue(p.a.get(i)), p.part.residues()[j]);
            }
        }
        prop_assert!(seen.iter().all(|&s| s));
        let distinct: HashSet<u64> = p.part.residues().iter().copied().collect();
        prop_assert_eq!(distinct.len(), p.part.len());
        prop_assert!(p.a.len() as u64 <= n);
    }
}

#[test]
fn adaptive_sets_meet_the_threshold() {
    for (d, n) in [(2usize, 1031u64), (3, 2053), (5, 4099), (8, 4099)] {
        let p = pipeline(d, 1.0, n);
        if p.r < 2 {
            continue;
        }
        let y = adaptive_shifts(&p.h, p.r, 0.9, n, p.m, &p.params).unwrap();
        assert!(
            exp_sum_ratio(&y, &p.h) <= 0.9 / (p.r - 1) as f64 + 1e-10,
            "d={d} N={n}"
        );
    }
}

#[test]
fn single_cosine_mode_is_recovered() {
    let p = pipeline(2, 1.5, 509);
    let y = p.adaptive(0.95).unwrap();
    let f = |x: &[f64]| 2.0 * (PI * 2.0 * x[0]).cos() * (PI * x[1]).cos();
    let approx = approximate_nonperiodic(&f, &p.lat, &p.a, &p.part, &y, &[0.0, 0.0]).unwrap();
    for (k, &c) in approx.cosine.freqs().zip(approx.cosine.coeffs()) {
        let expect = if k == [2, 1] { 1.0 } else { 0.0 };
        assert!((c - expect).abs() < 1e-10, "{k:?}: {c}");
    }
}

#[test]
fn neumann_eigenmode() {
    let p = pipeline(3, 1.5, 1031);
    let y = p.adaptive(0.95).unwrap();
    let f = |x: &[f64]| 2f64.sqrt() * (PI * x[0]).cos();
    let sol = poisson_solve(&f, 0.5, &p.lat, &p.a, &p.part, &y, &[0.0; 3]).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    for _ in 0..50 {
        let x: Vec<f64> = (0..3).map(|_| rng.random::<f64>()).collect();
        let exact = 0.5 - f(&x) / (PI * PI);
        assert!((sol.evaluate(&x) - exact).abs() < 1e-10);
    }
    assert!(sol.compatibility_residual.abs() < 1e-12);
}
