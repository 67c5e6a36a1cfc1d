//! Weighted Korobov space parameters and hyperbolic-cross index sets.
//!
//! The weight of a frequency `k` is `r(k) = prod_j max(1, |k_j|^alpha / gamma_j)`,
//! and the index set for a threshold `M` is `{k : r(k) < M}`. Frequencies are
//! stored row-major in a flat `i32` buffer in lexicographic order.

use crate::error::{Error, Result};

/// Dimension, smoothness and product weights.
#[derive(Clone, Debug, PartialEq)]
pub struct SpaceParams {
    alpha: f64,
    gamma: Vec<f64>,
}

impl SpaceParams {
    pub fn new(alpha: f64, gamma: Vec<f64>) -> Result<Self> {
        if gamma.is_empty() {
            return Err(Error::InvalidParameter(
                "dimension must be at least 1".into(),
            ));
        }
        if !(alpha > 0.5) || !alpha.is_finite() {
            return Err(Error::InvalidParameter(format!(
                "alpha = {alpha} must exceed 1/2"
            )));
        }
        if let Some(g) = gamma.iter().find(|&&g| !(g > 0.0 && g <= 1.0)) {
            return Err(Error::InvalidParameter(format!(
                "weight {g} outside (0, 1]"
            )));
        }
        Ok(Self { alpha, gamma })
    }

    /// Product weights `gamma_j = 2^{(1-j)/decay}` for `j = 1..=d`.
    pub fn with_power_weights(dim: usize, alpha: f64, decay: f64) -> Result<Self> {
        let gamma = (1..=dim)
            .map(|j| 2f64.powf((1.0 - j as f64) / decay))
            .collect();
        Self::new(alpha, gamma)
    }

    pub fn dim(&self) -> usize {
        self.gamma.len()
    }

    pub fn alpha(&self) -> f64 {
        self.alpha
    }

    pub fn gamma(&self) -> &[f64] {
        &self.gamma
    }

    #[inline]
    fn factor(&self, j: usize, kj: i64) -> f64 {
        if kj == 0 {
            1.0
        } else {
            ((kj.unsigned_abs() as f64).powf(self.alpha) / self.gamma[j]).max(1.0)
        }
    }
}

/// The weight `r_{alpha,gamma}(k)`.
pub fn weight_r(params: &SpaceParams, k: &[i32]) -> Result<f64> {
    if k.len() != params.dim() {
        return Err(Error::DimensionMismatch {
            expected: params.dim(),
            got: k.len(),
        });
    }
    Ok(k.iter()
        .enumerate()
        .fold(1.0, |acc, (j, &kj)| acc * params.factor(j, kj as i64)))
}

/// Hyperbolic cross `{k : r(k) < M}`.
#[derive(Clone, Debug)]
pub struct IndexSet {
    params: SpaceParams,
    threshold: f64,
    freqs: Vec<i32>,
}

impl IndexSet {
    pub fn params(&self) -> &SpaceParams {
        &self.params
    }

    pub fn threshold(&self) -> f64 {
        self.threshold
    }

    pub fn dim(&self) -> usize {
        self.params.dim()
    }

    pub fn len(&self) -> usize {
        self.freqs.len() / self.dim()
    }

    pub fn is_empty(&self) -> bool {
        self.freqs.is_empty()
    }

    pub fn get(&self, i: usize) -> &[i32] {
        let d = self.dim();
        &self.freqs[i * d..(i + 1) * d]
    }

    pub fn iter(&self) -> impl ExactSizeIterator<Item = &[i32]> + '_ {
        self.freqs.chunks_exact(self.dim())
    }

    /// Position of `k`, using the lexicographic ordering.
    pub fn position(&self, k: &[i32]) -> Option<usize> {
        let d = self.dim();
        if k.len() != d {
            return None;
        }
        let (mut lo, mut hi) = (0usize, self.len());
        while lo < hi {
            let mid = (lo + hi) / 2;
            match self.get(mid).cmp(k) {
                std::cmp::Ordering::Less => lo = mid + 1,
                std::cmp::Ordering::Greater => hi = mid,
                std::cmp::Ordering::Equal => return Some(mid),
            }
        }
        None
    }

    pub fn contains(&self, k: &[i32]) -> bool {
        self.position(k).is_some()
    }

    /// Largest `|k_j|` over the set, per coordinate.
    pub fn max_abs_per_coord(&self) -> Vec<u32> {
        let mut out = vec![0u32; self.dim()];
        for k in self.iter() {
            for (o, &kj) in out.iter_mut().zip(k) {
                *o = (*o).max(kj.unsigned_abs());
            }
        }
        out
    }
}

/// Largest integer magnitude allowed in coordinate `j` when the remaining
/// multiplicative budget is `budget`.
fn coord_extent(params: &SpaceParams, j: usize, budget: f64) -> i64 {
    // |k|^alpha / gamma < budget  <=>  |k| < (gamma * budget)^{1/alpha}
    let bound = (params.gamma[j] * budget).powf(1.0 / params.alpha);
    let mut e = bound.floor() as i64 + 1;
    while e > 0 && params.factor(j, e) >= budget {
        e -= 1;
    }
    e
}

fn enumerate_rec(
    params: &SpaceParams,
    m: f64,
    j: usize,
    partial: f64,
    prefix: &mut Vec<i32>,
    sink: &mut dyn FnMut(&[i32], f64) -> bool,
) -> bool {
    let d = params.dim();
    if j == d {
        return sink(prefix, partial);
    }
    let extent = coord_extent(params, j, m / partial);
    for kj in -extent..=extent {
        let p = partial * params.factor(j, kj);
        if p >= m {
            continue;
        }
        prefix.push(kj as i32);
        let keep_going = enumerate_rec(params, m, j + 1, p, prefix, sink);
        prefix.pop();
        if !keep_going {
            return false;
        }
    }
    true
}

/// Enumerates `{k : r(k) < M}` in lexicographic order.
pub fn build_index_set(params: &SpaceParams, m: f64) -> IndexSet {
    let mut freqs = Vec::new();
    if m > 1.0 {
        let mut prefix = Vec::with_capacity(params.dim());
        enumerate_rec(params, m, 0, 1.0, &mut prefix, &mut |k, _| {
            freqs.extend_from_slice(k);
            true
        });
    }
    IndexSet {
        params: params.clone(),
        threshold: m,
        freqs,
    }
}

/// Cardinality of the index set, stopping early once it exceeds `limit`.
pub fn count_index_set(params: &SpaceParams, m: f64, limit: usize) -> usize {
    let mut count = 0usize;
    if m > 1.0 {
        let mut prefix = Vec::with_capacity(params.dim());
        enumerate_rec(params, m, 0, 1.0, &mut prefix, &mut |_, _| {
            count += 1;
            count <= limit
        });
    }
    count
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, serde::Deserialize, serde::Serialize)]
#[serde(rename_all = "lowercase")]
pub enum MMode {
    /// Largest `M` with `|A| <= N`.
    Bisection,
    /// Figure-of-merit lower bound with `N/2`.
    Theoretical,
}

/// Bracket size, in multiples of `N`, at which the weights are enumerated.
const ENUM_FACTOR: usize = 4;
const LAMBDA_GRID: usize = 2048;

/// Chooses the truncation threshold `M` for a lattice of size `n`.
pub fn select_m(params: &SpaceParams, n: u64, mode: MMode) -> Result<f64> {
    if n < 2 {
        return Err(Error::InvalidParameter(format!(
            "N = {n} must be at least 2"
        )));
    }
    match mode {
        MMode::Theoretical => Ok(theoretical_m(params, n)),
        MMode::Bisection => bisect_m(params, n as usize),
    }
}

fn theoretical_m(params: &SpaceParams, n: u64) -> f64 {
    let alpha = params.alpha;
    let lo = 1.0 / alpha + 1e-6;
    let hi = 2.0f64;
    let half_n_ln = (n as f64 / 2.0).ln();
    let mut best = f64::NEG_INFINITY;
    for i in 0..LAMBDA_GRID {
        let lambda = lo + (hi - lo) * i as f64 / (LAMBDA_GRID - 1) as f64;
        let z = zeta(alpha * lambda);
        let log_prod: f64 = params
            .gamma
            .iter()
            .map(|&g| (1.0 + 2.0 * g.powf(lambda) * z).ln())
            .sum();
        best = best.max((half_n_ln - log_prod) / lambda);
    }
    best.exp()
}

/// Weights `r(k) < m`, unsorted, computed exactly as the enumeration compares them.
fn weights_below(params: &SpaceParams, m: f64) -> Vec<f64> {
    let mut out = Vec::new();
    if m > 1.0 {
        let mut prefix = Vec::with_capacity(params.dim());
        enumerate_rec(params, m, 0, 1.0, &mut prefix, &mut |_, r| {
            out.push(r);
            true
        });
    }
    out
}

/// The supremum of `{M : |A_M| <= n}`, which is the `(n+1)`-th smallest weight.
/// Geometric bisection narrows the bracket until the set below the upper end
/// is small enough to enumerate, then the order statistic is read off.
fn bisect_m(params: &SpaceParams, n: usize) -> Result<f64> {
    let cap = n.saturating_mul(ENUM_FACTOR);
    let mut lo = 1.0f64;
    let mut hi = (n as f64).powf(params.alpha) + 1.0;
    let mut guard = 0;
    while count_index_set(params, hi, n) <= n {
        hi *= 2.0;
        guard += 1;
        if guard > 200 {
            return Err(Error::InvalidParameter(
                "bisection bracket did not close".into(),
            ));
        }
    }
    while count_index_set(params, hi, cap) > cap {
        let mid = (lo * hi).sqrt();
        if mid <= lo || mid >= hi {
            break;
        }
        if count_index_set(params, mid, n) <= n {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    let mut w = weights_below(params, hi);
    debug_assert!(w.len() > n);
    let (_, &mut m, _) = w.select_nth_unstable_by(n, f64::total_cmp);
    debug_assert!(count_index_set(params, m, n) <= n);
    Ok(m)
}

/// Riemann zeta for real `s > 1` via Euler-Maclaurin summation.
pub fn zeta(s: f64) -> f64 {
    assert!(s > 1.0, "zeta requires s > 1, got {s}");
    const TERMS: usize = 10;
    // B_{2k} / (2k)!
    const COEFFS: [f64; 6] = [
        1.0 / 12.0,
        -1.0 / 720.0,
        1.0 / 30240.0,
        -1.0 / 1209600.0,
        1.0 / 47900160.0,
        -691.0 / 1307674368000.0,
    ];
    let n = TERMS as f64;
    let mut sum: f64 = (1..TERMS).map(|k| (k as f64).powf(-s)).sum();
    sum += n.powf(1.0 - s) / (s - 1.0) + 0.5 * n.powf(-s);
    // rising product s (s+1) ... (s+2k-2) times n^{-s-2k+1}
    let mut rising = s;
    let mut power = n.powf(-s - 1.0);
    for (k, c) in COEFFS.iter().enumerate() {
        sum += c * rising * power;
        let a = s + (2 * k + 1) as f64;
        rising *= a * (a + 1.0);
        power /= n * n;
    }
    sum
}
