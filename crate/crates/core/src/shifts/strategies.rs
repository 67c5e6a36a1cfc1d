use super::primes::next_prime;
use super::{ShiftSet, Strategy};
use crate::error::{Error, Result};
use crate::korobov::SpaceParams;

/// Density constant in `pi(2n) - pi(n) > c n / ln n`.
pub const CRT_DENSITY: f64 = 0.32;

/// `{(s, s^2, ..., s^d) / p mod 1 : s = 0..p-1}`.
pub fn polynomial_shifts(p: u64, d: usize) -> ShiftSet {
    let mut num = Vec::with_capacity(p as usize * d);
    for s in 0..p {
        let mut x = 1u64;
        for _ in 0..d {
            x = (x as u128 * s as u128 % p as u128) as u64;
            num.push(x);
        }
    }
    ShiftSet::from_rational(d, vec![p; p as usize], num, Strategy::Polynomial { p })
}

fn lattice_block(p: u64, z: &[i64], strategy: Strategy) -> ShiftSet {
    let zr: Vec<u64> = z.iter().map(|&v| v.rem_euclid(p as i64) as u64).collect();
    let mut num = Vec::with_capacity(p as usize * z.len());
    for s in 0..p {
        num.extend(
            zr.iter()
                .map(|&v| (s as u128 * v as u128 % p as u128) as u64),
        );
    }
    ShiftSet::from_rational(z.len(), vec![p; p as usize], num, strategy)
}

/// `{s z / p mod 1 : s = 0..p-1}`.
pub fn single_lattice_shifts(p: u64, z: &[i64]) -> ShiftSet {
    lattice_block(p, z, Strategy::SingleLattice { p, z: z.to_vec() })
}

/// Union of the single lattices for each prime, origin repeated once per prime.
/// `crt` selects the tag of the theoretical sequence.
pub fn multi_lattice_shifts(primes: &[u64], z: &[i64], crt: bool) -> ShiftSet {
    let strategy = if crt {
        Strategy::CrtBound {
            primes: primes.to_vec(),
            z: z.to_vec(),
        }
    } else {
        Strategy::MultiLattice {
            primes: primes.to_vec(),
            z: z.to_vec(),
        }
    };
    let parts = primes
        .iter()
        .map(|&p| lattice_block(p, z, Strategy::Trivial))
        .collect();
    ShiftSet::concat(z.len(), parts, strategy)
}

/// Smallest prime size for which a single lattice can avoid every collision:
/// `floor((gamma_1 M)^{1/alpha}) floor((gamma_2 M)^{1/alpha}) / N`.
pub fn capacity_lower_bound(params: &SpaceParams, m: f64, n: u64) -> Result<f64> {
    if params.dim() < 2 {
        return Err(Error::InvalidParameter(
            "capacity bound needs d >= 2".into(),
        ));
    }
    let g = params.gamma();
    let a = params.alpha();
    let side = |j: usize| (g[j] * m).powf(1.0 / a).floor();
    Ok(side(0) * side(1) / n as f64)
}

/// Consecutive primes `p_1 < ... < p_k` whose union lattice meets the
/// exponential-sum threshold for every collision integer up to `V`.
pub fn crt_sequence(r: usize, v: u128, t: f64) -> Vec<u64> {
    assert!(r >= 2, "CRT sequence needs R >= 2");
    assert!(t > 0.0 && t < 1.0);
    let ln_v = (v.max(2) as f64).ln();
    let scale = 2.0 * (r - 1) as f64 * ln_v;
    let p1 = next_prime((scale / (CRT_DENSITY * t)).ceil() as u64);
    let k = (scale / (t * (p1 as f64).ln())).ceil() as usize;
    let mut primes = Vec::with_capacity(k);
    let mut p = p1;
    for _ in 0..k {
        primes.push(p);
        p = next_prime(p + 1);
    }
    let last = *primes.last().expect("k >= 1");
    assert!(
        last < 2 * p1,
        "prime density premise violated: p_k = {last}, p_1 = {p1}"
    );
    primes
}
