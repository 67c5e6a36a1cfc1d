//! Aliasing fibers of an index set on a rank-1 lattice and their difference set.

use rayon::prelude::*;

use crate::cbc::Lattice;
use crate::korobov::{IndexSet, SpaceParams};

/// Partition of an index set by residue `k . g mod N`.
#[derive(Clone, Debug)]
pub struct FiberPartition {
    residues: Vec<u64>,
    fibers: Vec<Vec<usize>>,
    max_len: usize,
}

impl FiberPartition {
    /// Residue class of each fiber, ascending.
    pub fn residues(&self) -> &[u64] {
        &self.residues
    }

    /// Member indices (into the index set) of each fiber, in lexicographic order.
    pub fn fibers(&self) -> &[Vec<usize>] {
        &self.fibers
    }

    /// Index of the lexicographically smallest member of fiber `j`.
    pub fn representative(&self, j: usize) -> usize {
        self.fibers[j][0]
    }

    /// Maximum fiber length `R`.
    pub fn max_len(&self) -> usize {
        self.max_len
    }

    /// Number of fibers `J`.
    pub fn len(&self) -> usize {
        self.fibers.len()
    }

    pub fn is_empty(&self) -> bool {
        self.fibers.is_empty()
    }
}

pub fn partition_fibers(a: &IndexSet, lattice: &Lattice) -> FiberPartition {
    if !crate::cbc::validate_zero_fiber(lattice, a) {
        log::warn!(
            "index set of size {} meets the dual lattice of N = {} outside the origin",
            a.len(),
            lattice.size()
        );
    }
    let residues: Vec<u64> = a.iter().map(|k| lattice.residue(k)).collect();
    let mut order: Vec<usize> = (0..a.len()).collect();
    order.sort_by_key(|&i| residues[i]);

    let mut fib_res = Vec::new();
    let mut fibers: Vec<Vec<usize>> = Vec::new();
    for i in order {
        if fib_res.last() != Some(&residues[i]) {
            fib_res.push(residues[i]);
            fibers.push(Vec::new());
        }
        fibers.last_mut().expect("pushed above").push(i);
    }
    let max_len = fibers.iter().map(Vec::len).max().unwrap_or(0);
    FiberPartition {
        residues: fib_res,
        fibers,
        max_len,
    }
}

/// Nonzero in-fiber differences, one representative per `{h, -h}` pair.
#[derive(Clone, Debug)]
pub struct DifferenceSet {
    dim: usize,
    diffs: Vec<i32>,
}

impl DifferenceSet {
    pub fn from_rows(dim: usize, rows: &[Vec<i32>]) -> Self {
        let mut diffs = Vec::with_capacity(rows.len() * dim);
        for r in rows {
            assert_eq!(r.len(), dim);
            diffs.extend_from_slice(r);
        }
        Self { dim, diffs }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn len(&self) -> usize {
        if self.dim == 0 {
            0
        } else {
            self.diffs.len() / self.dim
        }
    }

    pub fn is_empty(&self) -> bool {
        self.diffs.is_empty()
    }

    pub fn get(&self, i: usize) -> &[i32] {
        &self.diffs[i * self.dim..(i + 1) * self.dim]
    }

    pub fn iter(&self) -> impl ExactSizeIterator<Item = &[i32]> + '_ {
        self.diffs.chunks_exact(self.dim.max(1))
    }

    pub fn rows(&self) -> &[i32] {
        &self.diffs
    }
}

/// `C_alpha` with `|a - b|^alpha <= C_alpha (|a|^alpha + |b|^alpha)`.
pub fn c_alpha(alpha: f64) -> f64 {
    if alpha <= 1.0 {
        1.0
    } else {
        2f64.powf(alpha - 1.0)
    }
}

/// Strict upper bound on `max_j |h_j|` for any in-fiber difference.
pub fn difference_bound(params: &SpaceParams, m: f64) -> f64 {
    (2.0 * c_alpha(params.alpha()) * m).powf(1.0 / params.alpha())
}

fn canonical_sign(h: &mut [i32]) {
    if let Some(&first) = h.iter().find(|&&x| x != 0) {
        if first < 0 {
            h.iter_mut().for_each(|x| *x = -*x);
        }
    }
}

pub fn difference_set(a: &IndexSet, part: &FiberPartition) -> DifferenceSet {
    let d = a.dim();
    let mut flat: Vec<i32> = part
        .fibers()
        .par_iter()
        .filter(|f| f.len() > 1)
        .flat_map_iter(|f| {
            let mut local = Vec::with_capacity(f.len() * (f.len() - 1) / 2 * d);
            for (x, &i) in f.iter().enumerate() {
                for &j in &f[x + 1..] {
                    let start = local.len();
                    local.extend(a.get(j).iter().zip(a.get(i)).map(|(p, q)| p - q));
                    canonical_sign(&mut local[start..]);
                }
            }
            local
        })
        .collect();

    let rows = flat.len() / d.max(1);
    let mut order: Vec<usize> = (0..rows).collect();
    order.par_sort_unstable_by(|&x, &y| flat[x * d..(x + 1) * d].cmp(&flat[y * d..(y + 1) * d]));
    order.dedup_by(|x, y| flat[*x * d..(*x + 1) * d] == flat[*y * d..(*y + 1) * d]);
    let diffs: Vec<i32> = order
        .iter()
        .flat_map(|&r| flat[r * d..(r + 1) * d].iter().copied())
        .collect();
    flat.clear();

    let bound = difference_bound(a.params(), a.threshold());
    for h in diffs.chunks_exact(d.max(1)) {
        let max = h.iter().map(|x| x.unsigned_abs()).max().unwrap_or(0) as f64;
        assert!(
            max < bound,
            "difference {h:?} violates the component bound {bound}"
        );
    }
    DifferenceSet { dim: d, diffs }
}

/// Upper bound on the maximum fiber length, valid for CBC lattices with the
/// theoretical `M`. `None` when `M^{1/alpha} <= 1`.
pub fn fiber_length_bound(params: &SpaceParams, m: f64) -> Option<f64> {
    let root = m.powf(1.0 / params.alpha());
    if root <= 1.0 {
        return None;
    }
    // 2^{mm-1} < root <= 2^mm
    let mm = root.log2().ceil().max(1.0);
    let d = params.dim() as i32;
    let first = 2.0 * (1.0 + mm / 2.0).powi(d) / mm;
    let second = 2.0 * root / mm
        * params
            .gamma()
            .iter()
            .map(|g| 1.0 + g.powf(1.0 / params.alpha()) * mm)
            .product::<f64>();
    Some(first.min(second))
}
