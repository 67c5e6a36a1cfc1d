//! Component-by-component construction of rank-1 lattice generating vectors.
//!
//! Each step picks the next component minimising the squared worst-case
//! integration error `P` in the Korobov space, using the Bernoulli-polynomial
//! closed form for integer smoothness. Non-integer `alpha` is handled by
//! running the integer construction with `floor(alpha)` and weights
//! `gamma^{floor(alpha)/alpha}`.

use std::f64::consts::PI;

use num_complex::Complex64;
use rayon::prelude::*;
use rustfft::FftPlanner;

use crate::error::{Error, Result};
use crate::korobov::{IndexSet, SpaceParams};
use crate::shifts::primes::{is_prime, mul_mod, primitive_root};

/// Candidates within this relative distance of the minimum count as tied.
const TIE_RTOL: f64 = 1e-10;

/// Rank-1 lattice `{n g / N mod 1 : n = 0..N-1}` with prime `N`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Lattice {
    n: u64,
    g: Vec<u64>,
}

impl Lattice {
    pub fn new(n: u64, g: Vec<u64>) -> Result<Self> {
        if !is_prime(n) {
            return Err(Error::NotPrime(n));
        }
        if g.is_empty() {
            return Err(Error::InvalidParameter("empty generating vector".into()));
        }
        if let Some(&bad) = g.iter().find(|&&gj| gj == 0 || gj >= n) {
            return Err(Error::InvalidParameter(format!(
                "generator entry {bad} outside 1..{n}"
            )));
        }
        Ok(Self { n, g })
    }

    pub fn size(&self) -> u64 {
        self.n
    }

    pub fn generator(&self) -> &[u64] {
        &self.g
    }

    pub fn dim(&self) -> usize {
        self.g.len()
    }

    /// `k . g mod N`, computed in 128-bit.
    pub fn residue(&self, k: &[i32]) -> u64 {
        let dot: i128 = k
            .iter()
            .zip(&self.g)
            .map(|(&kj, &gj)| kj as i128 * gj as i128)
            .sum();
        dot.rem_euclid(self.n as i128) as u64
    }

    /// Writes the `i`-th node into `out`.
    pub fn node(&self, i: u64, out: &mut [f64]) {
        let n = self.n;
        for (o, &gj) in out.iter_mut().zip(&self.g) {
            *o = mul_mod(i % n, gj, n) as f64 / n as f64;
        }
    }
}

/// Even-degree Bernoulli polynomials `B_2`, `B_4`, `B_6`.
pub fn bernoulli_even(order: u32, x: f64) -> Result<f64> {
    if !(0.0..=1.0).contains(&x) {
        return Err(Error::OutOfRange(x));
    }
    let x2 = x * x;
    match order {
        2 => Ok(x2 - x + 1.0 / 6.0),
        4 => Ok(x2 * x2 - 2.0 * x2 * x + x2 - 1.0 / 30.0),
        6 => Ok(x2 * x2 * x2 - 3.0 * x2 * x2 * x + 2.5 * x2 * x2 - 0.5 * x2 + 1.0 / 42.0),
        _ => Err(Error::InvalidParameter(format!(
            "unsupported Bernoulli order {order}"
        ))),
    }
}

/// `(-1)^{a+1} (2 pi)^{2a} / (2a)!`
fn kernel_constant(alpha_int: u32) -> f64 {
    let two_a = 2 * alpha_int as i32;
    let fact: f64 = (1..=two_a).map(|i| i as f64).product();
    let sign = if alpha_int % 2 == 1 { 1.0 } else { -1.0 };
    sign * (2.0 * PI).powi(two_a) / fact
}

/// `gamma^2 * c_alpha * B_{2 alpha}(m / N)` for `m = 0..N-1`.
fn kernel_table(alpha_int: u32, gamma: f64, n: u64) -> Vec<f64> {
    let c = kernel_constant(alpha_int) * gamma * gamma;
    (0..n)
        .map(|m| c * bernoulli_even(2 * alpha_int, m as f64 / n as f64).expect("order checked"))
        .collect()
}

fn check_alpha_int(alpha_int: u32) -> Result<()> {
    if (1..=3).contains(&alpha_int) {
        Ok(())
    } else {
        Err(Error::UnsupportedSmoothness(alpha_int))
    }
}

/// Squared worst-case integration error for integer smoothness, any prefix of `g`.
pub fn worst_case_p(alpha_int: u32, gamma: &[f64], n: u64, g: &[u64]) -> Result<f64> {
    check_alpha_int(alpha_int)?;
    if g.len() > gamma.len() {
        return Err(Error::DimensionMismatch {
            expected: gamma.len(),
            got: g.len(),
        });
    }
    let tables: Vec<Vec<f64>> = gamma[..g.len()]
        .iter()
        .map(|&gm| kernel_table(alpha_int, gm, n))
        .collect();
    let sum: f64 = (0..n)
        .map(|i| {
            g.iter()
                .zip(&tables)
                .map(|(&gj, tab)| 1.0 + tab[mul_mod(i, gj % n, n) as usize])
                .product::<f64>()
        })
        .sum();
    Ok(sum / n as f64 - 1.0)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Default)]
pub enum CbcMethod {
    /// O(N) per candidate, O(d N^2) overall.
    Naive,
    /// Circulant structure over the multiplicative group, O(d N log N).
    #[default]
    Fast,
}

/// Integer smoothness and adjusted weights used internally by CBC.
pub fn cbc_reduction(params: &SpaceParams) -> Result<(u32, Vec<f64>)> {
    let alpha = params.alpha();
    let alpha_int = alpha.floor() as u32;
    check_alpha_int(alpha_int)?;
    let lambda = alpha_int as f64 / alpha;
    Ok((
        alpha_int,
        params.gamma().iter().map(|g| g.powf(lambda)).collect(),
    ))
}

pub fn cbc_construct(params: &SpaceParams, n: u64) -> Result<Lattice> {
    cbc_construct_with(params, n, CbcMethod::default())
}

pub fn cbc_construct_with(params: &SpaceParams, n: u64, method: CbcMethod) -> Result<Lattice> {
    if !is_prime(n) {
        return Err(Error::NotPrime(n));
    }
    let (alpha_int, gamma) = cbc_reduction(params)?;
    let nu = n as usize;

    let first = kernel_table(alpha_int, gamma[0], n);
    let mut prod: Vec<f64> = first.iter().map(|w| 1.0 + w).collect();
    let mut g = vec![1u64];

    for &gamma_s in &gamma[1..] {
        let omega = kernel_table(alpha_int, gamma_s, n);
        // sums[z - 1] = sum_n prod[n] * omega[n z mod N]
        let sums = if method == CbcMethod::Naive || n < 5 {
            naive_sums(&prod, &omega)
        } else {
            fast_sums(&prod, &omega, n)
        };
        let base: f64 = prod.iter().sum();
        let values: Vec<f64> = sums.iter().map(|s| (base + s) / n as f64 - 1.0).collect();
        let z = pick_min(&values) as u64 + 1;
        let mut idx = 0usize;
        for p in prod.iter_mut() {
            *p *= 1.0 + omega[idx];
            idx += z as usize;
            if idx >= nu {
                idx -= nu;
            }
        }
        g.push(z);
    }
    Lattice::new(n, g)
}

/// Index of the smallest value, preferring the lowest index among near-ties.
pub(crate) fn pick_min(values: &[f64]) -> usize {
    let min = values.iter().copied().fold(f64::INFINITY, f64::min);
    let tol = TIE_RTOL * min.abs().max(f64::MIN_POSITIVE);
    values
        .iter()
        .position(|&v| v <= min + tol)
        .expect("non-empty candidate list")
}

fn naive_sums(prod: &[f64], omega: &[f64]) -> Vec<f64> {
    let n = prod.len();
    (1..n)
        .into_par_iter()
        .map(|z| {
            let mut idx = 0usize;
            let mut acc = 0.0;
            for &p in prod {
                acc += p * omega[idx];
                idx += z;
                if idx >= n {
                    idx -= n;
                }
            }
            acc
        })
        .collect()
}

fn fast_sums(prod: &[f64], omega: &[f64], n: u64) -> Vec<f64> {
    let len = (n - 1) as usize;
    let root = primitive_root(n);
    // powers[k] = root^k mod N
    let mut powers = Vec::with_capacity(len);
    let mut x = 1u64;
    for _ in 0..len {
        powers.push(x as usize);
        x = mul_mod(x, root, n);
    }
    let mut a: Vec<Complex64> = powers
        .iter()
        .map(|&m| Complex64::new(prod[m], 0.0))
        .collect();
    let mut b: Vec<Complex64> = powers
        .iter()
        .map(|&m| Complex64::new(omega[m], 0.0))
        .collect();
    let mut planner = FftPlanner::<f64>::new();
    let fwd = planner.plan_fft_forward(len);
    let inv = planner.plan_fft_inverse(len);
    fwd.process(&mut a);
    fwd.process(&mut b);
    for (bi, ai) in b.iter_mut().zip(&a) {
        *bi *= ai.conj();
    }
    inv.process(&mut b);
    // correlation[i] = sum_k prod[root^k] omega[root^{k+i}], i.e. candidate z = root^i
    let scale = 1.0 / len as f64;
    let mut out = vec![0.0; len];
    for (i, c) in b.iter().enumerate() {
        out[powers[i] - 1] = c.re * scale + prod[0] * omega[0];
    }
    out
}

/// `true` iff no nonzero `k` in `a` lies on the dual lattice.
pub fn validate_zero_fiber(lattice: &Lattice, a: &IndexSet) -> bool {
    a.iter()
        .all(|k| k.iter().all(|&kj| kj == 0) || lattice.residue(k) != 0)
}
