use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::{ShiftSet, Strategy};

/// `K` with failure probability `N^{1-K} = 0.01` for the shared-shift scheme.
pub fn k_simplified(n: u64) -> f64 {
    1.0 + 100f64.ln() / (n as f64).ln()
}

/// `K` with failure probability `N^{1-K} R^2 = 0.01` for per-frequency shifts.
pub fn k_standard(n: u64, r: usize) -> f64 {
    1.0 + (100.0 * (r * r) as f64).ln() / (n as f64).ln()
}

/// `ceil(2 K R ln N / t^2)` shared shifts.
pub fn probabilistic_count(r: usize, n: u64, k: f64, t: f64) -> usize {
    (2.0 * k * r as f64 * (n as f64).ln() / (t * t)).ceil() as usize
}

/// `ceil(2 K R ln N)` shifts per frequency for the per-frequency scheme.
pub fn standard_count(r: usize, n: u64, k: f64) -> usize {
    (2.0 * k * r as f64 * (n as f64).ln()).ceil() as usize
}

fn uniform_points(d: usize, count: usize, rng: &mut ChaCha8Rng) -> Vec<f64> {
    (0..count * d).map(|_| rng.random::<f64>()).collect()
}

/// I.i.d. uniform shared shifts from a seeded ChaCha stream.
pub fn probabilistic_shifts(r: usize, n: u64, k: f64, t: f64, d: usize, seed: u64) -> ShiftSet {
    let count = probabilistic_count(r, n, k, t);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    ShiftSet::from_real(
        d,
        uniform_points(d, count, &mut rng),
        Strategy::Probabilistic { seed },
    )
}

/// `R` independent groups of `ceil(2 K R ln N)` shifts; group `m` serves the
/// `m`-th frequency of every fiber.
pub fn standard_probabilistic_shifts(
    r: usize,
    n: u64,
    k: f64,
    d: usize,
    seed: u64,
) -> Vec<ShiftSet> {
    let count = standard_count(r, n, k);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..r)
        .map(|_| {
            ShiftSet::from_real(
                d,
                uniform_points(d, count, &mut rng),
                Strategy::Probabilistic { seed },
            )
        })
        .collect()
}
