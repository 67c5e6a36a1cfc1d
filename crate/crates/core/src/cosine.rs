//! Non-periodic approximation through the tent transform, and the spectral
//! Poisson solver with homogeneous Neumann data.

use std::f64::consts::{PI, SQRT_2};

use num_complex::Complex64;

use crate::cbc::Lattice;
use crate::error::{Error, Result};
use crate::fibers::FiberPartition;
use crate::korobov::IndexSet;
use crate::reconstruct::{approximate, SpectralApprox};
use crate::shifts::ShiftSet;

/// Tolerance on the imaginary part discarded by the coefficient mapping,
/// relative to the largest Fourier coefficient.
const IMAG_RTOL: f64 = 1e-10;

/// `psi(z) = 1 - |2z - 1|`, componentwise.
pub fn tent(z: &[f64]) -> Result<Vec<f64>> {
    z.iter()
        .map(|&v| {
            if (0.0..=1.0).contains(&v) {
                Ok(1.0 - (2.0 * v - 1.0).abs())
            } else {
                Err(Error::OutOfRange(v))
            }
        })
        .collect()
}

fn tent_unchecked(z: &[f64], out: &mut [f64]) {
    for (o, &v) in out.iter_mut().zip(z) {
        *o = 1.0 - (2.0 * v - 1.0).abs();
    }
}

/// Real expansion in `phi_k(x) = sqrt(2)^{|k|_0} prod_j cos(pi k_j x_j)`, `k >= 0`.
#[derive(Clone, Debug)]
pub struct CosineApprox {
    dim: usize,
    freqs: Vec<i32>,
    coeffs: Vec<f64>,
}

impl CosineApprox {
    pub fn new(dim: usize, freqs: Vec<i32>, coeffs: Vec<f64>) -> Self {
        assert_eq!(freqs.len(), coeffs.len() * dim);
        assert!(freqs.iter().all(|&k| k >= 0));
        Self { dim, freqs, coeffs }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn len(&self) -> usize {
        self.coeffs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.coeffs.is_empty()
    }

    pub fn freqs(&self) -> impl ExactSizeIterator<Item = &[i32]> + '_ {
        self.freqs.chunks_exact(self.dim)
    }

    pub fn coeffs(&self) -> &[f64] {
        &self.coeffs
    }

    pub fn coefficient(&self, k: &[i32]) -> Option<f64> {
        self.freqs().position(|f| f == k).map(|i| self.coeffs[i])
    }

    /// `sum_k c_k sqrt(2)^{|k|_0} prod_j cos(pi k_j x_j)`.
    pub fn evaluate(&self, x: &[f64]) -> f64 {
        let mut ext = vec![0usize; self.dim];
        for k in self.freqs() {
            for (e, &v) in ext.iter_mut().zip(k) {
                *e = (*e).max(v as usize);
            }
        }
        let tables: Vec<Vec<f64>> = ext
            .iter()
            .zip(x)
            .map(|(&e, &xj)| {
                (0..=e)
                    .map(|k| {
                        if k == 0 {
                            1.0
                        } else {
                            SQRT_2 * (PI * k as f64 * xj).cos()
                        }
                    })
                    .collect()
            })
            .collect();
        self.freqs()
            .zip(&self.coeffs)
            .map(|(k, c)| {
                k.iter()
                    .zip(&tables)
                    .fold(*c, |acc, (&kj, t)| acc * t[kj as usize])
            })
            .sum()
    }
}

/// `c_k = 2^{-|k|_0 / 2} sum_{|h| = k} c_h` over the nonnegative part of the index set.
pub fn fourier_to_cosine(f: &SpectralApprox) -> Result<CosineApprox> {
    let a = f.index_set();
    let d = a.dim();
    let scale = f.coeffs().iter().map(|c| c.norm()).fold(0.0, f64::max);
    let mut freqs = Vec::new();
    let mut coeffs = Vec::new();
    let mut h = vec![0i32; d];
    for k in a.iter().filter(|k| k.iter().all(|&v| v >= 0)) {
        let nz: Vec<usize> = (0..d).filter(|&j| k[j] != 0).collect();
        let mut acc = Complex64::new(0.0, 0.0);
        for mask in 0u64..(1u64 << nz.len()) {
            h.copy_from_slice(k);
            for (b, &j) in nz.iter().enumerate() {
                if mask >> b & 1 == 1 {
                    h[j] = -h[j];
                }
            }
            acc += f
                .coefficient(&h)
                .ok_or_else(|| Error::AsymmetricSupport(h.clone()))?;
        }
        if acc.im.abs() > IMAG_RTOL * scale.max(f64::MIN_POSITIVE) {
            return Err(Error::ImaginaryResidue(acc.im));
        }
        freqs.extend_from_slice(k);
        coeffs.push(acc.re * 2f64.powf(-(nz.len() as f64) / 2.0));
    }
    Ok(CosineApprox::new(d, freqs, coeffs))
}

/// Periodic intermediate and the cosine expansion obtained from it.
#[derive(Clone, Debug)]
pub struct NonperiodicApprox {
    pub periodic: SpectralApprox,
    pub cosine: CosineApprox,
}

/// Approximates `f` on `[0,1]^d` by reconstructing `g = f . psi` on the lattice.
pub fn approximate_nonperiodic<F>(
    f: &F,
    lat: &Lattice,
    a: &IndexSet,
    part: &FiberPartition,
    y: &ShiftSet,
    delta: &[f64],
) -> Result<NonperiodicApprox>
where
    F: Fn(&[f64]) -> f64 + Sync,
{
    let d = a.dim();
    let g = |z: &[f64]| {
        let mut x = vec![0.0; d];
        tent_unchecked(z, &mut x);
        Complex64::new(f(&x), 0.0)
    };
    let periodic = approximate(&g, lat, a, part, y, delta)?;
    let cosine = fourier_to_cosine(&periodic)?;
    Ok(NonperiodicApprox { periodic, cosine })
}

/// `2^{-d} sum_{sigma in {-1,1}^d} g(sigma z)`, real part.
pub fn sign_average(g: &SpectralApprox, z: &[f64]) -> f64 {
    let d = z.len();
    let mut p = vec![0.0; d];
    let mut acc = 0.0;
    for mask in 0u64..(1u64 << d) {
        for j in 0..d {
            p[j] = if mask >> j & 1 == 1 { 1.0 - z[j] } else { z[j] };
        }
        acc += g.evaluate(&p).re;
    }
    acc / (1u64 << d) as f64
}

/// `u = mean - sum_{k != 0} c_k / lambda_k phi_k` solving `Laplace(u) = f` with
/// zero normal derivative.
#[derive(Clone, Debug)]
pub struct PoissonSolution {
    pub mean: f64,
    /// Zero-mode coefficient of the source; vanishes for compatible data.
    pub compatibility_residual: f64,
    pub solution: CosineApprox,
}

impl PoissonSolution {
    pub fn evaluate(&self, x: &[f64]) -> f64 {
        self.solution.evaluate(x)
    }
}

/// `lambda_k = pi^2 |k|^2`.
pub fn eigenvalue(k: &[i32]) -> f64 {
    PI * PI * k.iter().map(|&v| (v as f64).powi(2)).sum::<f64>()
}

pub fn poisson_from_cosine(source: &CosineApprox, mean: f64) -> PoissonSolution {
    let mut residual = 0.0;
    let coeffs = source
        .freqs()
        .zip(source.coeffs())
        .map(|(k, &c)| {
            if k.iter().all(|&v| v == 0) {
                residual = c;
                mean
            } else {
                let lambda = eigenvalue(k);
                debug_assert!(lambda >= PI * PI - 1e-12);
                -c / lambda
            }
        })
        .collect();
    let solution = CosineApprox::new(source.dim(), source.freqs.clone(), coeffs);
    PoissonSolution {
        mean,
        compatibility_residual: residual,
        solution,
    }
}

pub fn poisson_solve<F>(
    f: &F,
    mean: f64,
    lat: &Lattice,
    a: &IndexSet,
    part: &FiberPartition,
    y: &ShiftSet,
    delta: &[f64],
) -> Result<PoissonSolution>
where
    F: Fn(&[f64]) -> f64 + Sync,
{
    let approx = approximate_nonperiodic(f, lat, a, part, y, delta)?;
    Ok(poisson_from_cosine(&approx.cosine, mean))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::cbc::cbc_construct;
    use crate::fibers::{difference_set, partition_fibers};
    use crate::korobov::{build_index_set, select_m, MMode, SpaceParams};
    use crate::shifts::adaptive_shifts;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    struct Setup {
        lat: Lattice,
        a: IndexSet,
        part: FiberPartition,
        y: ShiftSet,
    }

    fn setup(d: usize, n: u64, alpha: f64) -> Setup {
        let params = SpaceParams::with_power_weights(d, alpha, 10.0).unwrap();
        let m = select_m(&params, n, MMode::Bisection).unwrap();
        let a = build_index_set(&params, m);
        let lat = cbc_construct(&params, n).unwrap();
        let part = partition_fibers(&a, &lat);
        let h = difference_set(&a, &part);
        let y = adaptive_shifts(&h, part.max_len(), 0.95, n, m, &params).unwrap();
        Setup { lat, a, part, y }
    }

    fn phi(k: &[i32], x: &[f64]) -> f64 {
        k.iter()
            .zip(x)
            .map(|(&kj, &xj)| {
                if kj == 0 {
                    1.0
                } else {
                    SQRT_2 * (PI * kj as f64 * xj).cos()
                }
            })
            .product()
    }

    #[test]
    fn tent_values() {
        assert_eq!(
            tent(&[0.0, 1.0, 0.5, 0.25]).unwrap(),
            vec![0.0, 0.0, 1.0, 0.5]
        );
        assert!(matches!(tent(&[1.5]), Err(Error::OutOfRange(_))));
    }

    #[test]
    fn mapping_examples() {
        let params = SpaceParams::new(1.0, vec![1.0]).unwrap();
        let a = build_index_set(&params, 2.5);
        let mut c = vec![Complex64::new(0.0, 0.0); a.len()];
        c[a.position(&[0]).unwrap()] = Complex64::new(0.7, 0.0);
        c[a.position(&[2]).unwrap()] = Complex64::new(0.3, 0.0);
        c[a.position(&[-2]).unwrap()] = Complex64::new(0.3, 0.0);
        let cos = fourier_to_cosine(&SpectralApprox::new(a, c)).unwrap();
        assert_eq!(cos.coefficient(&[0]), Some(0.7));
        assert!((cos.coefficient(&[2]).unwrap() - SQRT_2 * 0.3).abs() < 1e-15);
        assert_eq!(cos.coefficient(&[1]), Some(0.0));
        assert_eq!(cos.len(), 3);
    }

    #[test]
    fn mapping_matches_brute_force_on_hermitian_input() {
        let params = SpaceParams::with_power_weights(3, 1.0, 10.0).unwrap();
        let a = build_index_set(&params, 6.0);
        let mut rng = ChaCha8Rng::seed_from_u64(8);
        let mut c = vec![Complex64::new(0.0, 0.0); a.len()];
        for (i, k) in a.iter().enumerate() {
            let neg: Vec<i32> = k.iter().map(|v| -v).collect();
            let j = a.position(&neg).unwrap();
            if j < i {
                c[i] = c[j].conj();
            } else if j == i {
                c[i] = Complex64::new(rng.random(), 0.0);
            } else {
                c[i] = Complex64::new(rng.random(), rng.random());
            }
        }
        let f = SpectralApprox::new(a.clone(), c.clone());
        let cos = fourier_to_cosine(&f).unwrap();
        for (k, &ck) in cos.freqs().zip(cos.coeffs()) {
            let mut acc = 0.0;
            let mut nnz = 0;
            for (h, ch) in a.iter().zip(&c) {
                if h.iter().zip(k).all(|(a, b)| a.abs() == *b) {
                    acc += ch.re;
                }
            }
            for &v in k {
                nnz += (v != 0) as i32;
            }
            assert!((ck - acc / 2f64.powf(nnz as f64 / 2.0)).abs() < 1e-13);
        }
    }

    #[test]
    fn imaginary_residue_is_rejected() {
        let params = SpaceParams::new(1.0, vec![1.0, 1.0]).unwrap();
        let full = build_index_set(&params, 1.5);
        let mut c = vec![Complex64::new(0.0, 0.0); full.len()];
        c[0] = Complex64::new(1.0, 0.0);
        // a lone imaginary mode cannot be mapped to a real coefficient
        let i = full.position(&[1, 0]).unwrap();
        c[i] = Complex64::new(0.0, 1.0);
        assert!(matches!(
            fourier_to_cosine(&SpectralApprox::new(full, c)),
            Err(Error::ImaginaryResidue(_))
        ));
    }

    #[test]
    fn cosine_evaluation_examples() {
        let one = CosineApprox::new(1, vec![0], vec![1.0]);
        assert_eq!(one.evaluate(&[0.3]), 1.0);
        let c1 = CosineApprox::new(1, vec![1], vec![1.0]);
        assert!((c1.evaluate(&[0.3]) - SQRT_2 * (PI * 0.3).cos()).abs() < 1e-15);
        let modes = CosineApprox::new(2, vec![0, 0, 1, 2, 3, 0], vec![0.5, -0.25, 2.0]);
        for x in [[0.1, 0.7], [0.45, 0.0]] {
            let direct = 0.5 - 0.25 * phi(&[1, 2], &x) + 2.0 * phi(&[3, 0], &x);
            assert!((modes.evaluate(&x) - direct).abs() < 1e-13);
        }
    }

    #[test]
    fn single_cosine_mode_is_recovered() {
        let st = setup(2, 257, 1.0);
        for k in [[1, 0], [0, 2], [1, 1], [3, 0]] {
            let f = |x: &[f64]| phi(&k, x);
            let res =
                approximate_nonperiodic(&f, &st.lat, &st.a, &st.part, &st.y, &[0.0, 0.0]).unwrap();
            for (q, &c) in res.cosine.freqs().zip(res.cosine.coeffs()) {
                let expect = if q == k { 1.0 } else { 0.0 };
                assert!((c - expect).abs() < 1e-10, "k={k:?} q={q:?} c={c}");
            }
        }
        let f = |_: &[f64]| 1.0;
        let res =
            approximate_nonperiodic(&f, &st.lat, &st.a, &st.part, &st.y, &[0.0, 0.0]).unwrap();
        for (q, &c) in res.cosine.freqs().zip(res.cosine.coeffs()) {
            let expect = if q == [0, 0] { 1.0 } else { 0.0 };
            assert!((c - expect).abs() < 1e-12);
        }
    }

    #[test]
    fn projection_equivalence() {
        let st = setup(2, 257, 1.0);
        let f = |x: &[f64]| (x[0] * x[1]).exp() + x[0].powi(3);
        let res =
            approximate_nonperiodic(&f, &st.lat, &st.a, &st.part, &st.y, &[0.0, 0.0]).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for _ in 0..200 {
            let z = [rng.random::<f64>(), rng.random::<f64>()];
            let lhs = res.cosine.evaluate(&tent(&z).unwrap());
            let rhs = sign_average(&res.periodic, &z);
            assert!((lhs - rhs).abs() < 1e-11);
        }
    }

    #[test]
    fn isometry_on_even_spectra() {
        let params = SpaceParams::with_power_weights(3, 1.0, 10.0).unwrap();
        let a = build_index_set(&params, 8.0);
        let c: Vec<Complex64> = a
            .iter()
            .map(|k| {
                let w: f64 = k.iter().map(|&v| 1.0 / (1.0 + (v as f64).abs())).product();
                Complex64::new(w, 0.0)
            })
            .collect();
        let f = SpectralApprox::new(a, c.clone());
        let cos = fourier_to_cosine(&f).unwrap();
        let cos_norm: f64 = cos.coeffs().iter().map(|v| v * v).sum();
        let per_norm: f64 = c.iter().map(|v| v.norm_sqr()).sum();
        assert!((cos_norm - per_norm).abs() < 1e-10 * per_norm);
        for x in [[0.1, 0.2, 0.3], [0.9, 0.05, 0.5]] {
            let z = x.map(|v| v / 2.0);
            assert!((cos.evaluate(&x) - f.evaluate(&z).re).abs() < 1e-11);
        }
    }

    #[test]
    fn poisson_examples() {
        let st = setup(2, 257, 1.5);
        let k = [1, 0];
        let f = |x: &[f64]| phi(&k, x);
        let u = poisson_solve(&f, 0.0, &st.lat, &st.a, &st.part, &st.y, &[0.0, 0.0]).unwrap();
        for x in [[0.2, 0.9], [0.77, 0.3]] {
            assert!((u.evaluate(&x) + phi(&k, &x) / (PI * PI)).abs() < 1e-10);
        }
        assert!(u.compatibility_residual.abs() < 1e-12);

        let zero = |_: &[f64]| 0.0;
        let u = poisson_solve(&zero, 2.5, &st.lat, &st.a, &st.part, &st.y, &[0.0, 0.0]).unwrap();
        assert!((u.evaluate(&[0.4, 0.6]) - 2.5).abs() < 1e-15);
        assert_eq!(u.mean, 2.5);
        for (q, _) in u.solution.freqs().zip(u.solution.coeffs()) {
            if q != [0, 0] {
                assert!(eigenvalue(q) >= PI * PI - 1e-12);
            }
        }
    }
}
