//! Benchmark harness: configuration, test functions, sampled errors and the
//! experiment drivers that write CSV tables.

mod config;
mod errors;
mod experiments;
mod functions;

pub use config::{ConfigFile, DeltaMode, ExperimentConfig, StrategyChoice, Which};
pub use errors::{estimate_errors, lattice_nodes, sample_points, ErrorEstimate};
pub use experiments::{
    korobov_f1_cell, pde_cell, run_experiment, shift_growth_cell, stability_cell, ConvergenceRow,
    PdeRow, ShiftGrowthRow, StabilityRow,
};
pub use functions::{f1, pde_exact, pde_mean, pde_source};

use crate::cbc::{cbc_construct, Lattice};
use crate::error::{Error, Result};
use crate::fibers::{difference_set, partition_fibers, DifferenceSet, FiberPartition};
use crate::korobov::{build_index_set, select_m, IndexSet, MMode, SpaceParams};
use crate::shifts::{adaptive_shifts, k_simplified, probabilistic_shifts, ShiftSet};

/// Everything that depends on `(params, N)` but not on the shifts.
#[derive(Clone, Debug)]
pub struct Pipeline {
    pub params: SpaceParams,
    pub n: u64,
    pub m: f64,
    pub a: IndexSet,
    pub lat: Lattice,
    pub part: FiberPartition,
    pub h: DifferenceSet,
    pub r: usize,
}

impl Pipeline {
    pub fn build(params: SpaceParams, n: u64, mode: MMode) -> Result<Self> {
        let m = select_m(&params, n, mode)?;
        let a = build_index_set(&params, m);
        let lat = cbc_construct(&params, n)?;
        let part = partition_fibers(&a, &lat);
        let h = difference_set(&a, &part);
        let r = part.max_len();
        Ok(Self {
            params,
            n,
            m,
            a,
            lat,
            part,
            h,
            r,
        })
    }

    pub fn dim(&self) -> usize {
        self.params.dim()
    }

    pub fn adaptive(&self, t: f64) -> Result<ShiftSet> {
        adaptive_shifts(&self.h, self.r, t, self.n, self.m, &self.params)
    }

    /// Shift set for `choice`; without aliasing every choice is `{0}`.
    pub fn shifts(&self, choice: StrategyChoice, t: f64, seed: u64) -> Result<ShiftSet> {
        if self.r <= 1 {
            return Ok(ShiftSet::trivial(self.dim()));
        }
        match choice {
            StrategyChoice::Adaptive => self.adaptive(t),
            StrategyChoice::Probabilistic => Ok(probabilistic_shifts(
                self.r,
                self.n,
                k_simplified(self.n),
                t,
                self.dim(),
                seed,
            )),
        }
    }
}

/// Least-squares slope of `ln y` against `ln x`.
pub fn fit_slope(x: &[f64], y: &[f64]) -> Result<f64> {
    if x.len() != y.len() || x.len() < 2 {
        return Err(Error::InvalidParameter(
            "slope fit needs two or more matched points".into(),
        ));
    }
    if x.iter().chain(y).any(|&v| !(v > 0.0)) {
        return Err(Error::InvalidParameter(
            "slope fit needs positive data".into(),
        ));
    }
    let lx: Vec<f64> = x.iter().map(|v| v.ln()).collect();
    let ly: Vec<f64> = y.iter().map(|v| v.ln()).collect();
    let n = lx.len() as f64;
    let mx = lx.iter().sum::<f64>() / n;
    let my = ly.iter().sum::<f64>() / n;
    let sxy: f64 = lx.iter().zip(&ly).map(|(a, b)| (a - mx) * (b - my)).sum();
    let sxx: f64 = lx.iter().map(|a| (a - mx).powi(2)).sum();
    Ok(sxy / sxx)
}
