//! Length-N DFT for arbitrary (prime) N.

use std::f64::consts::{PI, TAU};
use std::sync::Arc;

use num_complex::Complex64;
use rustfft::{Fft, FftPlanner};

/// Bluestein chirp-z transform `X[r] = sum_n x[n] e^{-2 pi i n r / N}`.
pub struct ChirpDft {
    n: usize,
    chirp: Vec<Complex64>,
    kernel: Vec<Complex64>,
    forward: Arc<dyn Fft<f64>>,
    inverse: Arc<dyn Fft<f64>>,
}

impl ChirpDft {
    pub fn new(n: usize) -> Self {
        assert!(n >= 1);
        let len = (2 * n - 1).next_power_of_two();
        let mut planner = FftPlanner::new();
        let forward = planner.plan_fft_forward(len);
        let inverse = planner.plan_fft_inverse(len);

        // n^2 reduced mod 2N keeps the chirp angle exact for large n
        let two_n = 2 * n as u128;
        let angle = |k: usize| PI * ((k as u128 * k as u128) % two_n) as f64 / n as f64;
        let chirp: Vec<Complex64> = (0..n)
            .map(|k| Complex64::from_polar(1.0, -angle(k)))
            .collect();

        let mut kernel = vec![Complex64::new(0.0, 0.0); len];
        for k in 0..n {
            let w = chirp[k].conj();
            kernel[k] = w;
            if k > 0 {
                kernel[len - k] = w;
            }
        }
        forward.process(&mut kernel);
        Self {
            n,
            chirp,
            kernel,
            forward,
            inverse,
        }
    }

    pub fn len(&self) -> usize {
        self.n
    }

    pub fn is_empty(&self) -> bool {
        self.n == 0
    }

    pub fn transform(&self, x: &[Complex64]) -> Vec<Complex64> {
        assert_eq!(x.len(), self.n);
        let len = self.kernel.len();
        let mut buf = vec![Complex64::new(0.0, 0.0); len];
        for (b, (v, c)) in buf.iter_mut().zip(x.iter().zip(&self.chirp)) {
            *b = v * c;
        }
        self.forward.process(&mut buf);
        for (b, k) in buf.iter_mut().zip(&self.kernel) {
            *b *= k;
        }
        self.inverse.process(&mut buf);
        let scale = 1.0 / len as f64;
        (0..self.n)
            .map(|r| buf[r] * self.chirp[r] * scale)
            .collect()
    }
}

/// `e^{-2 pi i k / N}` for `k = 0..N`.
pub fn root_table(n: usize) -> Vec<Complex64> {
    (0..n)
        .map(|k| Complex64::from_polar(1.0, -TAU * k as f64 / n as f64))
        .collect()
}

/// DFT evaluated only at the requested bins, by direct summation.
pub fn dft_direct(x: &[Complex64], bins: &[u64], roots: &[Complex64]) -> Vec<Complex64> {
    let n = x.len() as u64;
    bins.iter()
        .map(|&r| {
            let mut idx = 0u64;
            let mut acc = Complex64::new(0.0, 0.0);
            for v in x {
                acc += v * roots[idx as usize];
                idx += r;
                if idx >= n {
                    idx -= n;
                }
            }
            acc
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn random_signal(n: usize, seed: u64) -> Vec<Complex64> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        (0..n)
            .map(|_| Complex64::new(rng.random::<f64>() - 0.5, rng.random::<f64>() - 0.5))
            .collect()
    }

    #[test]
    fn chirp_matches_direct() {
        for n in [1usize, 2, 3, 13, 101, 257, 1031] {
            let x = random_signal(n, n as u64);
            let fast = ChirpDft::new(n).transform(&x);
            let bins: Vec<u64> = (0..n as u64).collect();
            let slow = dft_direct(&x, &bins, &root_table(n));
            for (a, b) in fast.iter().zip(&slow) {
                assert!((a - b).norm() < 1e-11 * n as f64, "n={n}");
            }
        }
    }

    #[test]
    fn chirp_matches_rustfft_on_composite_lengths() {
        for n in [12usize, 100, 1000] {
            let x = random_signal(n, 3);
            let fast = ChirpDft::new(n).transform(&x);
            let mut reference = x.clone();
            FftPlanner::new()
                .plan_fft_forward(n)
                .process(&mut reference);
            for (a, b) in fast.iter().zip(&reference) {
                assert!((a - b).norm() < 1e-10);
            }
        }
    }

    #[test]
    fn impulse_and_constant() {
        let n = 13;
        let mut x = vec![Complex64::new(0.0, 0.0); n];
        x[0] = Complex64::new(1.0, 0.0);
        for v in ChirpDft::new(n).transform(&x) {
            assert!((v - 1.0).norm() < 1e-13);
        }
        let ones = vec![Complex64::new(1.0, 0.0); n];
        let y = ChirpDft::new(n).transform(&ones);
        assert!((y[0] - n as f64).norm() < 1e-12);
        assert!(y[1..].iter().all(|v| v.norm() < 1e-12));
    }
}
