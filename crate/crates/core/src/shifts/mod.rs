//! Shift sets that de-alias lattice fibers, and the constructions that produce them.

mod adaptive;
pub mod primes;
mod probabilistic;
mod projection;
mod strategies;

use std::collections::HashMap;
use std::f64::consts::TAU;

use num_complex::Complex64;
use rayon::prelude::*;

use crate::fibers::DifferenceSet;

pub use adaptive::{
    adaptive_shifts, adaptive_shifts_report, strategy_sizes, AdaptiveReport, StrategySizes,
};
pub use probabilistic::{
    k_simplified, k_standard, probabilistic_count, probabilistic_shifts, standard_count,
    standard_probabilistic_shifts,
};
pub use projection::{construct_z, projections};
pub use strategies::{
    capacity_lower_bound, crt_sequence, multi_lattice_shifts, polynomial_shifts,
    single_lattice_shifts, CRT_DENSITY,
};

/// How a shift set was produced.
#[derive(Clone, Debug, PartialEq)]
pub enum Strategy {
    Trivial,
    Polynomial { p: u64 },
    SingleLattice { p: u64, z: Vec<i64> },
    MultiLattice { primes: Vec<u64>, z: Vec<i64> },
    CrtBound { primes: Vec<u64>, z: Vec<i64> },
    Probabilistic { seed: u64 },
}

impl Strategy {
    pub fn name(&self) -> &'static str {
        match self {
            Strategy::Trivial => "trivial",
            Strategy::Polynomial { .. } => "polynomial",
            Strategy::SingleLattice { .. } => "single_lattice",
            Strategy::MultiLattice { .. } => "multi_lattice",
            Strategy::CrtBound { .. } => "crt_bound",
            Strategy::Probabilistic { .. } => "probabilistic",
        }
    }

    pub fn is_deterministic(&self) -> bool {
        !matches!(self, Strategy::Probabilistic { .. })
    }
}

#[derive(Clone, Debug)]
struct Rational {
    den: Vec<u64>,
    num: Vec<u64>,
}

/// `S` points in `[0,1)^d`. Points with rational coordinates keep their exact
/// numerators so that phases `h . y_s` are evaluated in integer arithmetic.
#[derive(Clone, Debug)]
pub struct ShiftSet {
    dim: usize,
    points: Vec<f64>,
    rational: Option<Rational>,
    strategy: Strategy,
    achieved_ratio: Option<f64>,
}

impl ShiftSet {
    /// The single unshifted point.
    pub fn trivial(dim: usize) -> Self {
        Self::from_rational(dim, vec![1], vec![0; dim], Strategy::Trivial)
    }

    /// Build from per-point denominators and flat numerators in `[0, den)`.
    pub fn from_rational(dim: usize, den: Vec<u64>, num: Vec<u64>, strategy: Strategy) -> Self {
        assert_eq!(num.len(), den.len() * dim);
        let points = num
            .chunks_exact(dim.max(1))
            .zip(&den)
            .flat_map(|(row, &q)| row.iter().map(move |&a| a as f64 / q as f64))
            .collect();
        Self {
            dim,
            points,
            rational: Some(Rational { den, num }),
            strategy,
            achieved_ratio: None,
        }
    }

    pub fn from_real(dim: usize, points: Vec<f64>, strategy: Strategy) -> Self {
        assert_eq!(points.len() % dim.max(1), 0);
        Self {
            dim,
            points,
            rational: None,
            strategy,
            achieved_ratio: None,
        }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    /// Number of shifts `S`.
    pub fn len(&self) -> usize {
        self.points.len() / self.dim.max(1)
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn point(&self, s: usize) -> &[f64] {
        &self.points[s * self.dim..(s + 1) * self.dim]
    }

    pub fn points(&self) -> impl ExactSizeIterator<Item = &[f64]> + '_ {
        self.points.chunks_exact(self.dim.max(1))
    }

    pub fn strategy(&self) -> &Strategy {
        &self.strategy
    }

    /// Verified `max_h |sum_s e(h . y_s)| / S`, if it has been computed.
    pub fn achieved_ratio(&self) -> Option<f64> {
        self.achieved_ratio
    }

    pub fn is_rational(&self) -> bool {
        self.rational.is_some()
    }

    /// `e^{2 pi i k . y_s}`, exact phase reduction for rational points.
    pub fn phase(&self, s: usize, k: &[i32]) -> Complex64 {
        let frac = match &self.rational {
            Some(r) => {
                let q = r.den[s];
                let row = &r.num[s * self.dim..(s + 1) * self.dim];
                let dot: i128 = k
                    .iter()
                    .zip(row)
                    .map(|(&a, &b)| a as i128 * b as i128)
                    .sum();
                dot.rem_euclid(q as i128) as f64 / q as f64
            }
            None => {
                let dot: f64 = k
                    .iter()
                    .zip(self.point(s))
                    .map(|(&a, &b)| a as f64 * b)
                    .sum();
                dot - dot.floor()
            }
        };
        Complex64::from_polar(1.0, TAU * frac)
    }

    pub(crate) fn with_ratio(mut self, ratio: f64) -> Self {
        self.achieved_ratio = Some(ratio);
        self
    }

    /// Concatenate sets of equal dimension, keeping duplicate points.
    pub(crate) fn concat(dim: usize, parts: Vec<ShiftSet>, strategy: Strategy) -> Self {
        let mut den = Vec::new();
        let mut num = Vec::new();
        for p in parts {
            let r = p.rational.expect("lattice blocks are rational");
            den.extend(r.den);
            num.extend(r.num);
        }
        Self::from_rational(dim, den, num, strategy)
    }
}

/// Rows of a difference set with zero entries dropped.
#[derive(Clone, Debug)]
pub(crate) struct SparseRows {
    offsets: Vec<usize>,
    idx: Vec<u32>,
    val: Vec<i32>,
}

impl SparseRows {
    pub(crate) fn new(h: &DifferenceSet) -> Self {
        let mut offsets = Vec::with_capacity(h.len() + 1);
        let mut idx = Vec::new();
        let mut val = Vec::new();
        offsets.push(0);
        for row in h.iter() {
            for (j, &v) in row.iter().enumerate() {
                if v != 0 {
                    idx.push(j as u32);
                    val.push(v);
                }
            }
            offsets.push(idx.len());
        }
        Self { offsets, idx, val }
    }

    pub(crate) fn len(&self) -> usize {
        self.offsets.len() - 1
    }

    pub(crate) fn row(&self, i: usize) -> (&[u32], &[i32]) {
        let (a, b) = (self.offsets[i], self.offsets[i + 1]);
        (&self.idx[a..b], &self.val[a..b])
    }
}

/// Evaluates `sum_s e(h . y_s)` with per-denominator root-of-unity tables.
pub(crate) struct ExpSum<'a> {
    set: &'a ShiftSet,
    tables: Vec<Vec<Complex64>>,
    slot: Vec<u32>,
}

impl<'a> ExpSum<'a> {
    pub(crate) fn new(set: &'a ShiftSet) -> Self {
        let mut tables = Vec::new();
        let mut slot = Vec::new();
        if let Some(r) = &set.rational {
            let mut seen: HashMap<u64, u32> = HashMap::new();
            for &q in &r.den {
                let id = *seen.entry(q).or_insert_with(|| {
                    tables.push(
                        (0..q)
                            .map(|a| Complex64::from_polar(1.0, TAU * a as f64 / q as f64))
                            .collect(),
                    );
                    (tables.len() - 1) as u32
                });
                slot.push(id);
            }
        }
        Self { set, tables, slot }
    }

    pub(crate) fn sum_sparse(&self, idx: &[u32], val: &[i32]) -> Complex64 {
        let d = self.set.dim;
        let mut acc = Complex64::new(0.0, 0.0);
        match &self.set.rational {
            Some(r) => {
                for (s, &q) in r.den.iter().enumerate() {
                    let row = &r.num[s * d..(s + 1) * d];
                    let dot: i128 = idx
                        .iter()
                        .zip(val)
                        .map(|(&j, &v)| v as i128 * row[j as usize] as i128)
                        .sum();
                    acc += self.tables[self.slot[s] as usize][dot.rem_euclid(q as i128) as usize];
                }
            }
            None => {
                for y in self.set.points() {
                    let dot: f64 = idx
                        .iter()
                        .zip(val)
                        .map(|(&j, &v)| v as f64 * y[j as usize])
                        .sum();
                    acc += Complex64::from_polar(1.0, TAU * (dot - dot.floor()));
                }
            }
        }
        acc
    }

    #[cfg(test)]
    pub(crate) fn sum(&self, h: &[i32]) -> Complex64 {
        let (idx, val): (Vec<u32>, Vec<i32>) = h
            .iter()
            .enumerate()
            .filter(|(_, &v)| v != 0)
            .map(|(j, &v)| (j as u32, v))
            .unzip();
        self.sum_sparse(&idx, &val)
    }
}

/// `max_{h in H} |sum_s e(h . y_s)| / S`; zero for empty `H`.
pub fn exp_sum_ratio(y: &ShiftSet, h: &DifferenceSet) -> f64 {
    sparse_ratio(y, &SparseRows::new(h))
}

pub(crate) fn sparse_ratio(y: &ShiftSet, rows: &SparseRows) -> f64 {
    let eval = ExpSum::new(y);
    let s = y.len() as f64;
    (0..rows.len())
        .into_par_iter()
        .map(|i| {
            let (idx, val) = rows.row(i);
            eval.sum_sparse(idx, val).norm() / s
        })
        .reduce(|| 0.0, f64::max)
}

/// True when every row satisfies `|sum| / S <= bound`; stops at the first violation.
pub(crate) fn sparse_ratio_within(y: &ShiftSet, rows: &SparseRows, bound: f64) -> bool {
    let eval = ExpSum::new(y);
    let s = y.len() as f64;
    !(0..rows.len()).into_par_iter().any(|i| {
        let (idx, val) = rows.row(i);
        eval.sum_sparse(idx, val).norm() / s > bound
    })
}
