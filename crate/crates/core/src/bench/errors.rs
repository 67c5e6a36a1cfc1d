//! Sampled error norms.

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::cbc::Lattice;
use crate::error::{Error, Result};

const NORM_FLOOR: f64 = 1e-300;

/// Absolute errors and reference norms on one point sample.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ErrorEstimate {
    pub l2: f64,
    pub linf: f64,
    pub norm_l2: f64,
    pub norm_linf: f64,
}

impl ErrorEstimate {
    pub fn rel_l2(&self) -> Result<f64> {
        relative(self.l2, self.norm_l2)
    }

    pub fn rel_linf(&self) -> Result<f64> {
        relative(self.linf, self.norm_linf)
    }
}

fn relative(err: f64, norm: f64) -> Result<f64> {
    if norm < NORM_FLOOR {
        Err(Error::DegenerateNorm(norm))
    } else {
        Ok(err / norm)
    }
}

/// Uniform sample of `budget` points in `[0,1)^d`, row-major.
pub fn sample_points(dim: usize, budget: usize, seed: u64) -> Vec<f64> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..budget * dim).map(|_| rng.random::<f64>()).collect()
}

/// Base lattice nodes, optionally pushed through the tent map.
pub fn lattice_nodes(lat: &Lattice, tent: bool) -> Vec<f64> {
    let d = lat.dim();
    let mut out = vec![0.0; lat.size() as usize * d];
    for (i, x) in out.chunks_mut(d).enumerate() {
        lat.node(i as u64, x);
        if tent {
            for v in x.iter_mut() {
                *v = 1.0 - (2.0 * *v - 1.0).abs();
            }
        }
    }
    out
}

/// L2 from a seeded uniform sample; L-infinity over that sample plus `extra`
/// (row-major points of the same dimension).
pub fn estimate_errors<F, G>(
    f: &F,
    approx: &G,
    dim: usize,
    budget: usize,
    seed: u64,
    extra: &[f64],
) -> Result<ErrorEstimate>
where
    F: Fn(&[f64]) -> Complex64 + Sync,
    G: Fn(&[f64]) -> Complex64 + Sync,
{
    if budget == 0 {
        return Err(Error::InvalidParameter(
            "error budget must be at least 1".into(),
        ));
    }
    if dim == 0 || extra.len() % dim != 0 {
        return Err(Error::DimensionMismatch {
            expected: dim,
            got: extra.len(),
        });
    }
    let sample = sample_points(dim, budget, seed);
    let eval = |x: &[f64]| {
        let v = f(x);
        ((v - approx(x)).norm(), v.norm())
    };
    let on_sample: Vec<(f64, f64)> = sample.par_chunks(dim).map(eval).collect();
    let (sq_err, sq_ref) = on_sample
        .iter()
        .fold((0.0, 0.0), |(a, b), (e, r)| (a + e * e, b + r * r));
    let (mut linf, mut norm_linf) = on_sample
        .iter()
        .fold((0.0f64, 0.0f64), |(a, b), &(e, r)| (a.max(e), b.max(r)));
    let (xl, xn) = extra
        .par_chunks(dim)
        .map(eval)
        .reduce(|| (0.0, 0.0), |(a, b), (e, r)| (a.max(e), b.max(r)));
    linf = linf.max(xl);
    norm_linf = norm_linf.max(xn);
    Ok(ErrorEstimate {
        l2: (sq_err / budget as f64).sqrt(),
        linf,
        norm_l2: (sq_ref / budget as f64).sqrt(),
        norm_linf,
    })
}
