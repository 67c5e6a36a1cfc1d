//! Sampling on shifted lattices, per-fiber least squares, and the resulting
//! trigonometric approximation.

pub mod dft;

use std::f64::consts::TAU;

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use rayon::prelude::*;

use crate::cbc::Lattice;
use crate::error::{Error, Result};
use crate::fibers::FiberPartition;
use crate::korobov::IndexSet;
use crate::shifts::ShiftSet;
use dft::{dft_direct, root_table, ChirpDft};

/// How the length-N transform of each shifted sample vector is computed.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub enum DftPath {
    #[default]
    Chirp,
    Direct,
}

fn unit(angle: f64) -> Complex64 {
    Complex64::from_polar(1.0, angle)
}

/// Samples `f` on `{n g / N + y_s + delta}` and returns, per shift, the
/// normalized DFT at each residue: `out[s][j] = (1/N) sum_n f(.) e^{-2 pi i n r_j / N}`.
pub fn observables<F>(
    f: &F,
    lat: &Lattice,
    residues: &[u64],
    y: &ShiftSet,
    delta: &[f64],
    path: DftPath,
) -> Vec<Vec<Complex64>>
where
    F: Fn(&[f64]) -> Complex64 + Sync,
{
    let n = lat.size() as usize;
    let d = lat.dim();
    assert_eq!(y.dim(), d);
    assert_eq!(delta.len(), d);
    let chirp = (path == DftPath::Chirp).then(|| ChirpDft::new(n));
    let roots = (path == DftPath::Direct).then(|| root_table(n));

    (0..y.len())
        .into_par_iter()
        .map(|s| {
            let offset: Vec<f64> = y.point(s).iter().zip(delta).map(|(a, b)| a + b).collect();
            let samples: Vec<Complex64> = (0..n as u64)
                .into_par_iter()
                .map_init(
                    || vec![0.0; d],
                    |x, i| {
                        lat.node(i, x);
                        for (xj, o) in x.iter_mut().zip(&offset) {
                            let v = *xj + o;
                            *xj = v - v.floor();
                        }
                        f(x)
                    },
                )
                .collect();
            let scale = 1.0 / n as f64;
            match (&chirp, &roots) {
                (Some(c), _) => {
                    let full = c.transform(&samples);
                    residues.iter().map(|&r| full[r as usize] * scale).collect()
                }
                (None, Some(t)) => dft_direct(&samples, residues, t)
                    .into_iter()
                    .map(|v| v * scale)
                    .collect(),
                _ => unreachable!(),
            }
        })
        .collect()
}

/// System matrix `B_{s,m} = e^{2 pi i l_m . y_s}`.
pub fn system_matrix(freqs: &[&[i32]], y: &ShiftSet) -> DMatrix<Complex64> {
    DMatrix::from_fn(y.len(), freqs.len(), |s, m| y.phase(s, freqs[m]))
}

/// Least-squares coefficients of one fiber, unscaled by `e^{-2 pi i l_m . delta}`.
pub fn solve_fiber(
    freqs: &[&[i32]],
    y: &ShiftSet,
    delta: &[f64],
    b: &[Complex64],
) -> Result<Vec<Complex64>> {
    solve_fiber_indexed(freqs, y, delta, b, 0)
}

fn solve_fiber_indexed(
    freqs: &[&[i32]],
    y: &ShiftSet,
    delta: &[f64],
    b: &[Complex64],
    fiber: usize,
) -> Result<Vec<Complex64>> {
    let v = freqs.len();
    if v > y.len() {
        return Err(Error::SingularGram { fiber, size: v });
    }
    let bm = system_matrix(freqs, y);
    let gram = bm.adjoint() * &bm;
    let rhs = bm.adjoint() * DVector::from_column_slice(b);
    let chol = gram
        .cholesky()
        .ok_or(Error::SingularGram { fiber, size: v })?;
    let x = chol.solve(&rhs);
    Ok(freqs
        .iter()
        .zip(x.iter())
        .map(|(l, c)| {
            let dot: f64 = l.iter().zip(delta).map(|(&k, &t)| k as f64 * t).sum();
            c * unit(-TAU * dot)
        })
        .collect())
}

/// Frequencies of fiber `j`.
pub fn fiber_freqs<'a>(a: &'a IndexSet, part: &FiberPartition, j: usize) -> Vec<&'a [i32]> {
    part.fibers()[j].iter().map(|&i| a.get(i)).collect()
}

/// Trigonometric polynomial with coefficients aligned to an index set.
#[derive(Clone, Debug)]
pub struct SpectralApprox {
    index_set: IndexSet,
    coeffs: Vec<Complex64>,
}

impl SpectralApprox {
    pub fn new(index_set: IndexSet, coeffs: Vec<Complex64>) -> Self {
        assert_eq!(index_set.len(), coeffs.len());
        Self { index_set, coeffs }
    }

    pub fn index_set(&self) -> &IndexSet {
        &self.index_set
    }

    pub fn coeffs(&self) -> &[Complex64] {
        &self.coeffs
    }

    pub fn coefficient(&self, k: &[i32]) -> Option<Complex64> {
        self.index_set.position(k).map(|i| self.coeffs[i])
    }

    /// `sum_k c_k e^{2 pi i k . x}`.
    pub fn evaluate(&self, x: &[f64]) -> Complex64 {
        let ext = self.index_set.max_abs_per_coord();
        let tables: Vec<Vec<Complex64>> = ext
            .iter()
            .zip(x)
            .map(|(&e, &xj)| {
                let e = e as i64;
                (-e..=e).map(|k| unit(TAU * k as f64 * xj)).collect()
            })
            .collect();
        self.index_set
            .iter()
            .zip(&self.coeffs)
            .map(|(k, c)| {
                k.iter()
                    .zip(&tables)
                    .zip(&ext)
                    .fold(*c, |acc, ((&kj, t), &e)| acc * t[(kj + e as i32) as usize])
            })
            .sum()
    }
}

/// Full pipeline: observables once, then every fiber solved independently.
pub fn approximate<F>(
    f: &F,
    lat: &Lattice,
    a: &IndexSet,
    part: &FiberPartition,
    y: &ShiftSet,
    delta: &[f64],
) -> Result<SpectralApprox>
where
    F: Fn(&[f64]) -> Complex64 + Sync,
{
    approximate_with(f, lat, a, part, y, delta, DftPath::Chirp)
}

pub fn approximate_with<F>(
    f: &F,
    lat: &Lattice,
    a: &IndexSet,
    part: &FiberPartition,
    y: &ShiftSet,
    delta: &[f64],
    path: DftPath,
) -> Result<SpectralApprox>
where
    F: Fn(&[f64]) -> Complex64 + Sync,
{
    let obs = observables(f, lat, part.residues(), y, delta, path);
    let solved: Vec<Vec<Complex64>> = (0..part.len())
        .into_par_iter()
        .map(|j| {
            let col: Vec<Complex64> = obs.iter().map(|row| row[j]).collect();
            solve_fiber_indexed(&fiber_freqs(a, part, j), y, delta, &col, j)
        })
        .collect::<Result<_>>()?;
    let mut coeffs = vec![Complex64::new(0.0, 0.0); a.len()];
    for (fiber, values) in part.fibers().iter().zip(solved) {
        for (&i, v) in fiber.iter().zip(values) {
            coeffs[i] = v;
        }
    }
    Ok(SpectralApprox::new(a.clone(), coeffs))
}

/// Extremal eigenvalues of one fiber's Gram matrix.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct FiberGram {
    pub size: usize,
    pub lambda_min: f64,
    pub lambda_max: f64,
    pub kappa: f64,
}

#[derive(Clone, Debug)]
pub struct GramDiagnostics {
    pub fibers: Vec<FiberGram>,
    pub max_kappa: f64,
}

fn fiber_gram(gram: DMatrix<Complex64>) -> FiberGram {
    let size = gram.nrows();
    let eig = gram.symmetric_eigen().eigenvalues;
    let lambda_min = eig.iter().copied().fold(f64::INFINITY, f64::min);
    let lambda_max = eig.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    FiberGram {
        size,
        lambda_min,
        lambda_max,
        kappa: lambda_max / lambda_min,
    }
}

/// A one-member fiber has `G = S` exactly.
fn singleton(s: usize) -> FiberGram {
    FiberGram {
        size: 1,
        lambda_min: s as f64,
        lambda_max: s as f64,
        kappa: 1.0,
    }
}

fn collect(fibers: Vec<FiberGram>) -> GramDiagnostics {
    let max_kappa = fibers.iter().map(|g| g.kappa).fold(1.0, f64::max);
    GramDiagnostics { fibers, max_kappa }
}

/// `G_j = B^H B` per fiber, for a shift set shared by every frequency.
pub fn gram_diagnostics(a: &IndexSet, part: &FiberPartition, y: &ShiftSet) -> GramDiagnostics {
    collect(
        (0..part.len())
            .into_par_iter()
            .map(|j| {
                let freqs = fiber_freqs(a, part, j);
                if freqs.len() == 1 {
                    return singleton(y.len());
                }
                let bm = system_matrix(&freqs, y);
                fiber_gram(bm.adjoint() * bm)
            })
            .collect(),
    )
}

/// Gram matrices of the per-frequency scheme: the `m`-th frequency of each
/// fiber is observed through shift group `m`, so `G_j = sum_m B_m^H B_m`.
pub fn gram_diagnostics_per_frequency(
    a: &IndexSet,
    part: &FiberPartition,
    groups: &[ShiftSet],
) -> GramDiagnostics {
    collect(
        (0..part.len())
            .into_par_iter()
            .map(|j| {
                let freqs = fiber_freqs(a, part, j);
                assert!(
                    freqs.len() <= groups.len(),
                    "fewer shift groups than fiber members"
                );
                let v = freqs.len();
                if v == 1 {
                    return singleton(groups[0].len());
                }
                let mut gram = DMatrix::<Complex64>::zeros(v, v);
                for group in &groups[..v] {
                    let bm = system_matrix(&freqs, group);
                    gram += bm.adjoint() * bm;
                }
                fiber_gram(gram)
            })
            .collect(),
    )
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::cbc::cbc_construct;
    use crate::fibers::{difference_set, partition_fibers};
    use crate::korobov::{build_index_set, select_m, MMode, SpaceParams};
    use crate::shifts::{adaptive_shifts, polynomial_shifts, single_lattice_shifts};
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    struct Setup {
        lat: Lattice,
        a: IndexSet,
        part: FiberPartition,
        y: ShiftSet,
        r: usize,
    }

    fn setup(d: usize, n: u64) -> Setup {
        let params = SpaceParams::with_power_weights(d, 1.0, 10.0).unwrap();
        let m = select_m(&params, n, MMode::Bisection).unwrap();
        let a = build_index_set(&params, m);
        let lat = cbc_construct(&params, n).unwrap();
        let part = partition_fibers(&a, &lat);
        let h = difference_set(&a, &part);
        let r = part.max_len();
        let y = adaptive_shifts(&h, r, 0.95, n, m, &params).unwrap();
        Setup { lat, a, part, y, r }
    }

    fn random_coeffs(len: usize, seed: u64) -> Vec<Complex64> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        (0..len)
            .map(|_| Complex64::new(rng.random::<f64>() - 0.5, rng.random::<f64>() - 0.5))
            .collect()
    }

    fn synth(a: &IndexSet, c: &[Complex64], x: &[f64]) -> Complex64 {
        a.iter()
            .zip(c)
            .map(|(k, ck)| {
                let dot: f64 = k.iter().zip(x).map(|(&kj, &xj)| kj as f64 * xj).sum();
                ck * unit(TAU * dot)
            })
            .sum()
    }

    #[test]
    fn single_character_observables() {
        let st = setup(2, 13);
        let k = st.a.get(st.a.len() / 3).to_vec();
        let f = |x: &[f64]| unit(TAU * (k[0] as f64 * x[0] + k[1] as f64 * x[1]));
        let delta = [0.3, 0.7];
        let obs = observables(
            &f,
            &st.lat,
            st.part.residues(),
            &st.y,
            &delta,
            DftPath::Chirp,
        );
        let rk = st.lat.residue(&k);
        for (s, row) in obs.iter().enumerate() {
            for (j, &r) in st.part.residues().iter().enumerate() {
                if r == rk {
                    let expect =
                        st.y.phase(s, &k) * unit(TAU * (k[0] as f64 * 0.3 + k[1] as f64 * 0.7));
                    assert!((row[j] - expect).norm() < 1e-12);
                } else {
                    assert!(row[j].norm() < 1e-12);
                }
            }
        }
    }

    #[test]
    fn constant_observables() {
        let st = setup(2, 13);
        let f = |_: &[f64]| Complex64::new(2.5, 0.0);
        let obs = observables(
            &f,
            &st.lat,
            st.part.residues(),
            &st.y,
            &[0.0, 0.0],
            DftPath::Direct,
        );
        for row in obs {
            for (j, &r) in st.part.residues().iter().enumerate() {
                let expect = if r == 0 { 2.5 } else { 0.0 };
                assert!((row[j] - expect).norm() < 1e-12);
            }
        }
    }

    #[test]
    fn scalar_fiber_solution() {
        let y = polynomial_shifts(7, 2);
        let l = [2, -1];
        let delta = [0.1, 0.25];
        let b: Vec<Complex64> = (0..7).map(|s| Complex64::new(s as f64, 1.0)).collect();
        let got = solve_fiber(&[&l], &y, &delta, &b).unwrap()[0];
        let mut expect = Complex64::new(0.0, 0.0);
        for (s, bs) in b.iter().enumerate() {
            expect += y.phase(s, &l).conj() * bs;
        }
        expect = expect / 7.0 * unit(-TAU * (2.0 * 0.1 - 0.25));
        assert!((got - expect).norm() < 1e-13);
    }

    #[test]
    fn forward_model_recovery() {
        let y = polynomial_shifts(11, 3);
        let freqs: Vec<Vec<i32>> = vec![vec![0, 0, 0], vec![1, -2, 0], vec![3, 0, 1]];
        let refs: Vec<&[i32]> = freqs.iter().map(|v| v.as_slice()).collect();
        let x = random_coeffs(3, 4);
        let delta = [0.2, 0.9, 0.4];
        let scaled: Vec<Complex64> = refs
            .iter()
            .zip(&x)
            .map(|(l, c)| {
                let dot: f64 = l.iter().zip(&delta).map(|(&k, &t)| k as f64 * t).sum();
                c * unit(TAU * dot)
            })
            .collect();
        let bm = system_matrix(&refs, &y);
        let b = &bm * DVector::from_vec(scaled);
        let got = solve_fiber(&refs, &y, &delta, b.as_slice()).unwrap();
        for (g, e) in got.iter().zip(&x) {
            assert!((g - e).norm() < 1e-11);
        }
    }

    #[test]
    fn in_set_polynomials_are_recovered_for_any_delta() {
        for (d, n) in [(2usize, 127u64), (3, 257)] {
            let st = setup(d, n);
            let c = random_coeffs(st.a.len(), 1);
            let f = |x: &[f64]| synth(&st.a, &c, x);
            let zero = vec![0.0; d];
            let shifted: Vec<f64> = (0..d).map(|j| 0.137 + 0.21 * j as f64).collect();
            let at_zero = approximate(&f, &st.lat, &st.a, &st.part, &st.y, &zero).unwrap();
            let at_delta = approximate(&f, &st.lat, &st.a, &st.part, &st.y, &shifted).unwrap();
            for ((a, b), e) in at_zero.coeffs().iter().zip(at_delta.coeffs()).zip(&c) {
                assert!((a - e).norm() < 1e-10);
                assert!((a - b).norm() < 1e-10);
            }
            let pt: Vec<f64> = (0..d).map(|j| 0.31 * (j + 1) as f64).collect();
            assert!((at_zero.evaluate(&pt) - f(&pt)).norm() < 1e-11);
        }
    }

    #[test]
    fn zero_function_and_constant_evaluation() {
        let st = setup(2, 31);
        let f = |_: &[f64]| Complex64::new(0.0, 0.0);
        let approx = approximate(&f, &st.lat, &st.a, &st.part, &st.y, &[0.0, 0.0]).unwrap();
        assert!(approx.coeffs().iter().all(|c| c.norm() == 0.0));
        assert_eq!(approx.evaluate(&[0.3, 0.4]).norm(), 0.0);

        let mut coeffs = vec![Complex64::new(0.0, 0.0); st.a.len()];
        coeffs[st.a.position(&[0, 0]).unwrap()] = Complex64::new(1.0, 0.0);
        let one = SpectralApprox::new(st.a.clone(), coeffs);
        assert!((one.evaluate(&[0.77, 0.05]) - 1.0).norm() < 1e-15);
    }

    #[test]
    fn real_input_gives_hermitian_coefficients() {
        let st = setup(2, 257);
        let f =
            |x: &[f64]| Complex64::new((TAU * x[0]).sin().exp() * (1.0 + x[1] * (1.0 - x[1])), 0.0);
        let approx = approximate(&f, &st.lat, &st.a, &st.part, &st.y, &[0.0, 0.0]).unwrap();
        for (i, k) in st.a.iter().enumerate() {
            let neg: Vec<i32> = k.iter().map(|v| -v).collect();
            let c_neg = approx.coefficient(&neg).unwrap();
            assert!((approx.coeffs()[i] - c_neg.conj()).norm() < 1e-10);
        }
    }

    #[test]
    fn dft_paths_agree() {
        let st = setup(2, 257);
        let f = |x: &[f64]| Complex64::new((x[0] - 0.5).powi(2) * x[1], (TAU * x[1]).cos());
        let delta = [0.11, 0.43];
        let a = observables(
            &f,
            &st.lat,
            st.part.residues(),
            &st.y,
            &delta,
            DftPath::Chirp,
        );
        let b = observables(
            &f,
            &st.lat,
            st.part.residues(),
            &st.y,
            &delta,
            DftPath::Direct,
        );
        for (ra, rb) in a.iter().zip(&b) {
            for (x, y) in ra.iter().zip(rb) {
                assert!((x - y).norm() < 1e-12);
            }
        }
    }

    #[test]
    fn gram_bounds_and_single_lattice_orthogonality() {
        let st = setup(4, 1031);
        let t = 0.95;
        let s = st.y.len() as f64;
        let diag = gram_diagnostics(&st.a, &st.part, &st.y);
        for g in &diag.fibers {
            assert!(g.lambda_min >= (1.0 - t) * s * (1.0 - 1e-8));
            assert!(g.lambda_max <= (1.0 + t) * s * (1.0 + 1e-8));
            if g.size == 1 {
                assert!((g.lambda_min - s).abs() < 1e-12 * s);
            }
        }
        assert!(diag.max_kappa <= (1.0 + t) / (1.0 - t));

        // a single lattice avoiding every collision is exactly orthogonal
        let h = difference_set(&st.a, &st.part);
        let z = crate::shifts::construct_z(&h).unwrap();
        let x = crate::shifts::projections(&h, &z).unwrap();
        let p = (st.r as u64..)
            .filter(|&p| crate::shifts::primes::is_prime(p))
            .find(|&p| x.iter().all(|&v| v % p as u128 != 0))
            .unwrap();
        let single = single_lattice_shifts(p, &z);
        for j in 0..st.part.len() {
            let bm = system_matrix(&fiber_freqs(&st.a, &st.part, j), &single);
            let g = bm.adjoint() * &bm;
            for r in 0..g.nrows() {
                for c in 0..g.ncols() {
                    let expect = if r == c { p as f64 } else { 0.0 };
                    assert!((g[(r, c)] - expect).norm() < 1e-10 * p as f64);
                }
            }
        }
        let single_diag = gram_diagnostics(&st.a, &st.part, &single);
        assert!((single_diag.max_kappa - 1.0).abs() < 1e-10);
    }

    #[test]
    fn aliasing_weight_bound() {
        let t = 0.95;
        let st = setup(3, 257);
        let lat_g = st.lat.generator().to_vec();
        let n = st.lat.size() as i64;
        let mut rng = ChaCha8Rng::seed_from_u64(21);
        for j in 0..st.part.len() {
            let freqs = fiber_freqs(&st.a, &st.part, j);
            let v = freqs.len();
            let bm = system_matrix(&freqs, &st.y);
            let gram = bm.adjoint() * &bm;
            let chol = gram.cholesky().unwrap();
            let target = st.part.residues()[j] as i64;
            for _ in 0..50 {
                // random k outside A with k . g = r_j (mod N): adjust the first coordinate
                let mut k: Vec<i32> = (0..3).map(|_| rng.random_range(-60..=60)).collect();
                let rest: i64 = k[1..]
                    .iter()
                    .zip(&lat_g[1..])
                    .map(|(&a, &b)| a as i64 * b as i64)
                    .sum();
                // g_1 = 1
                let k0 = (target - rest).rem_euclid(n) + n * rng.random_range(-2..=2);
                k[0] = k0 as i32;
                if st.a.contains(&k) {
                    continue;
                }
                let col = DVector::from_fn(st.y.len(), |s, _| st.y.phase(s, &k));
                let w = chol.solve(&(bm.adjoint() * col));
                assert!(w.norm_squared() <= v as f64 / ((1.0 - t) * (1.0 - t)) + 1e-9);
            }
        }
    }
}
